//! How a fixed vertex set meets the edges of a random partite hypermatching.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::dihp::{count_hypermatchings, enumerate_hypermatchings, sample_hypermatching, Hypermatching};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::rng::{substream, Purpose};

use super::{wilson, Z95};

pub const MIN_TRIALS: usize = 100;
/// Largest hypermatching count enumerated exactly.
pub const ENUMERATION_CAP: u64 = 2_000_000;

/// A vertex set `U ⊆ [n]×[k]` queried against random `m×k` hypermatchings.
#[derive(Debug, Clone, Serialize)]
pub struct CombinatorialQuery {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    /// Vertices `(i, l)`: vertex `i` of part `l`.
    pub marks: Vec<(usize, usize)>,
}

/// `κ`, `d` and `η` of a query against one matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Incidence {
    /// Edges meeting `U` in exactly one vertex.
    pub kappa: usize,
    /// Edges meeting `U` in at least two vertices.
    pub d: usize,
    /// Vertices of `U` on those `d` edges.
    pub eta: usize,
}

impl CombinatorialQuery {
    pub fn new(n: usize, m: usize, k: usize, marks: Vec<(usize, usize)>) -> Result<Self> {
        if m > n || k == 0 {
            return Err(Error::invalid("need 0 < k and m ≤ n"));
        }
        let mut sorted = marks.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != marks.len() || marks.iter().any(|&(i, l)| i >= n || l >= k) {
            return Err(Error::invalid("marks must be distinct vertices of [n]×[k]"));
        }
        Ok(CombinatorialQuery { n, m, k, marks })
    }

    pub fn h(&self) -> usize {
        self.marks.len()
    }

    pub fn alpha(&self) -> f64 {
        self.m as f64 / self.n as f64
    }

    /// Marks per edge of `M`, plus the number of marks on no edge.
    fn edge_counts(&self, mt: &Hypermatching) -> (Vec<usize>, usize) {
        let mut per_edge = vec![0usize; mt.m()];
        let mut loose = 0;
        for &(i, l) in &self.marks {
            match mt.rows.iter().position(|r| r[l] == i) {
                Some(j) => per_edge[j] += 1,
                None => loose += 1,
            }
        }
        (per_edge, loose)
    }

    pub fn incidence(&self, mt: &Hypermatching) -> Incidence {
        let (per_edge, _) = self.edge_counts(mt);
        let kappa = per_edge.iter().filter(|&&c| c == 1).count();
        let d = per_edge.iter().filter(|&&c| c >= 2).count();
        let eta = per_edge.iter().filter(|&&c| c >= 2).sum();
        Incidence { kappa, d, eta }
    }

    /// `U ∈ ι_M(SF)`: every mark lies on an edge carrying at least two marks.
    pub fn in_sf_image(&self, mt: &Hypermatching) -> bool {
        self.incidence(mt).eta == self.h()
    }

    /// Cases where the probability is zero for every matching.
    pub fn structurally_zero(&self) -> bool {
        let h = self.h();
        if h == 1 || h > self.k * self.m {
            return true;
        }
        let mut per_col = vec![0usize; self.k];
        for &(_, l) in &self.marks {
            per_col[l] += 1;
        }
        (h == 2 && per_col.contains(&2)) || per_col.iter().any(|&c| c > self.m)
    }

    /// `(C·h/n)^{h/2}` with `C = 32k³α`.
    pub fn sf_image_bound(&self) -> f64 {
        let h = self.h() as f64;
        let c = 32.0 * (self.k as f64).powi(3) * self.alpha();
        (c * h / self.n as f64).powf(h / 2.0)
    }

    fn enumerate<F: FnMut(&Hypermatching)>(&self, cap: u64, mut f: F) -> Result<BigInt> {
        let count = count_hypermatchings(self.n, self.m, self.k);
        let c = count.to_u64().unwrap_or(u64::MAX);
        if c > cap {
            return Err(Error::limit("hypermatching enumeration", c as u128, cap as u128));
        }
        for mt in enumerate_hypermatchings(self.n, self.m, self.k) {
            f(&mt);
        }
        Ok(count)
    }

    /// Exact `Pr[U ∈ ι_M(SF)]` by enumerating every hypermatching.
    pub fn exact_probability(&self, cap: u64) -> Result<Rational> {
        let mut hits = 0i64;
        let total = self.enumerate(cap, |mt| hits += i64::from(self.in_sf_image(mt)))?;
        Ok(Rational::new(BigInt::from(hits), total))
    }

    /// Exact joint law of `(κ, η)`.
    pub fn exact_incidence(&self, cap: u64) -> Result<BTreeMap<(usize, usize), Rational>> {
        let mut counts: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        let total = self.enumerate(cap, |mt| {
            let inc = self.incidence(mt);
            *counts.entry((inc.kappa, inc.eta)).or_default() += 1;
        })?;
        Ok(counts.into_iter().map(|(key, c)| (key, Rational::new(BigInt::from(c), total.clone()))).collect())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CombinatorialReport {
    pub h: usize,
    pub trials: usize,
    pub hits: usize,
    pub estimate: f64,
    /// One-sided 95% Wilson limits.
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub bound: f64,
    pub structurally_zero: bool,
    #[serde(with = "rational::serde_opt")]
    pub exact: Option<Rational>,
    pub pass: bool,
}

/// Monte-Carlo estimate of `Pr_M[U ∈ ι_M(SF)]` against `(32k³α·h/n)^{h/2}`.
pub fn combinatorial_mc(query: &CombinatorialQuery, trials: usize, seed: u64, exact_cap: u64) -> Result<CombinatorialReport> {
    if trials < MIN_TRIALS {
        return Err(Error::invalid(format!("{trials} trials; at least {MIN_TRIALS} are required")));
    }
    let mut rng = substream(seed, 0, Purpose::Trial);
    let mut hits = 0usize;
    for _ in 0..trials {
        let mt = sample_hypermatching(query.n, query.m, query.k, &mut rng)?;
        hits += usize::from(query.in_sf_image(&mt));
    }
    let (ci_lower, ci_upper) = wilson(hits, trials, Z95);
    let h = query.h();
    let zero = query.structurally_zero();
    let exact = if exact_cap > 0 && count_hypermatchings(query.n, query.m, query.k).to_u64().is_some_and(|c| c <= exact_cap) {
        Some(query.exact_probability(exact_cap)?)
    } else {
        None
    };
    let bound = if h == 0 { 1.0 } else { query.sf_image_bound() };
    let pass = if zero {
        hits == 0 && exact.as_ref().is_none_or(|e| *e == rational::int(0))
    } else if h == 0 {
        hits == trials
    } else {
        ci_lower <= bound
    };
    Ok(CombinatorialReport {
        h,
        trials,
        hits,
        estimate: hits as f64 / trials as f64,
        ci_lower,
        ci_upper,
        bound,
        structurally_zero: zero,
        exact,
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct IncidenceCell {
    pub kappa: usize,
    pub eta: usize,
    pub count: usize,
    pub frequency: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    /// `p_{C,α}(n, u, κ, η)` at the fitted `C`.
    pub bound: f64,
    #[serde(with = "rational::serde_opt")]
    pub exact: Option<Rational>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IncidenceReport {
    pub u: usize,
    pub trials: usize,
    pub alpha: f64,
    /// Smallest `C` with `ci_lower ≤ p_{C,α}` in every cell.
    pub fitted_c: f64,
    pub cells: Vec<IncidenceCell>,
    /// Every observed cell satisfies `κ + η ≤ u`.
    pub zero_region_respected: bool,
    /// Every cell is within the bound at the fitted constant.
    pub pass: bool,
}

/// `α^κ·C^u·(u/n)^{η/2}` when `κ + η ≤ u`, else 0.
pub fn p_bound(c: f64, alpha: f64, n: usize, u: usize, kappa: usize, eta: usize) -> f64 {
    if kappa + eta > u {
        return 0.0;
    }
    alpha.powi(kappa as i32) * c.powi(u as i32) * (u as f64 / n as f64).powf(eta as f64 / 2.0)
}

/// Joint frequencies of `(κ(M,U), η(M,U))` with the fitted `p_{C,α}` bound.
pub fn eta_kappa_mc(query: &CombinatorialQuery, trials: usize, seed: u64, exact_cap: u64) -> Result<IncidenceReport> {
    if trials < MIN_TRIALS {
        return Err(Error::invalid(format!("{trials} trials; at least {MIN_TRIALS} are required")));
    }
    let mut rng = substream(seed, 1, Purpose::Trial);
    let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for _ in 0..trials {
        let mt = sample_hypermatching(query.n, query.m, query.k, &mut rng)?;
        let inc = query.incidence(&mt);
        *counts.entry((inc.kappa, inc.eta)).or_default() += 1;
    }
    let exact = if exact_cap > 0 && count_hypermatchings(query.n, query.m, query.k).to_u64().is_some_and(|c| c <= exact_cap) {
        Some(query.exact_incidence(exact_cap)?)
    } else {
        None
    };
    let u = query.h();
    let alpha = query.alpha();
    let mut keys: Vec<(usize, usize)> = counts.keys().copied().collect();
    if let Some(e) = &exact {
        keys.extend(e.keys().copied());
    }
    keys.sort_unstable();
    keys.dedup();
    let mut fitted: f64 = 0.0;
    let mut cells = Vec::with_capacity(keys.len());
    for (kappa, eta) in keys {
        let count = counts.get(&(kappa, eta)).copied().unwrap_or(0);
        let (lo, hi) = wilson(count, trials, Z95);
        if u > 0 && lo > 0.0 {
            let base = alpha.powi(kappa as i32) * (u as f64 / query.n as f64).powf(eta as f64 / 2.0);
            fitted = fitted.max((lo / base).powf(1.0 / u as f64));
        }
        cells.push(IncidenceCell {
            kappa,
            eta,
            count,
            frequency: count as f64 / trials as f64,
            ci_lower: lo,
            ci_upper: hi,
            bound: 0.0,
            exact: exact.as_ref().and_then(|e| e.get(&(kappa, eta)).cloned()),
        });
    }
    let zero_region_respected = cells.iter().all(|c| c.count == 0 || c.kappa + c.eta <= u);
    let mut pass = zero_region_respected;
    for c in cells.iter_mut() {
        c.bound = if u == 0 { 1.0 } else { p_bound(fitted, alpha, query.n, u, c.kappa, c.eta) };
        pass &= c.ci_lower <= c.bound * (1.0 + 1e-12);
    }
    Ok(IncidenceReport { u, trials, alpha, fitted_c: fitted, cells, zero_region_respected, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_singleton_queries() {
        let q = CombinatorialQuery::new(10, 2, 2, vec![]).unwrap();
        let r = combinatorial_mc(&q, 200, 1, 0).unwrap();
        assert_eq!(r.hits, 200);
        assert!(r.pass);
        let q = CombinatorialQuery::new(10, 2, 2, vec![(3, 1)]).unwrap();
        let r = combinatorial_mc(&q, 500, 1, 0).unwrap();
        assert_eq!(r.hits, 0);
        assert!(r.structurally_zero && r.pass);
        let q = CombinatorialQuery::new(10, 2, 2, vec![(3, 1), (4, 1)]).unwrap();
        assert!(q.structurally_zero());
        assert_eq!(combinatorial_mc(&q, 500, 1, 0).unwrap().hits, 0);
        assert!(combinatorial_mc(&q, 50, 1, 0).is_err());
    }

    #[test]
    fn two_columns_closed_form() {
        let q = CombinatorialQuery::new(20, 2, 2, vec![(4, 0), (11, 1)]).unwrap();
        let exact = q.exact_probability(ENUMERATION_CAP).unwrap();
        assert_eq!(exact, rational::ratio(2, 400));
        let r = combinatorial_mc(&q, 20_000, 7, 0).unwrap();
        let (lo, hi) = wilson(r.hits, r.trials, 3.3);
        assert!(lo <= 0.005 && 0.005 <= hi);
        assert!(0.005 <= r.bound && r.pass);
    }

    #[test]
    fn incidence_invariants() {
        let q = CombinatorialQuery::new(8, 3, 3, vec![(0, 0), (1, 0), (2, 1), (3, 1), (0, 2), (5, 2)]).unwrap();
        let mut rng = substream(5, 0, Purpose::Trial);
        for _ in 0..20_000 {
            let mt = sample_hypermatching(8, 3, 3, &mut rng).unwrap();
            let inc = q.incidence(&mt);
            if inc.d > 0 {
                assert!(inc.eta <= inc.d * q.k && 2 * inc.d <= inc.eta);
            }
            assert!(inc.kappa + inc.eta <= q.h());
        }
    }

    #[test]
    fn empty_incidence_is_origin() {
        let q = CombinatorialQuery::new(6, 2, 2, vec![]).unwrap();
        let r = eta_kappa_mc(&q, 100, 3, ENUMERATION_CAP).unwrap();
        assert_eq!(r.cells.len(), 1);
        assert_eq!((r.cells[0].kappa, r.cells[0].eta, r.cells[0].count), (0, 0, 100));
        assert!(r.pass);
    }

    #[test]
    fn incidence_matches_enumeration() {
        let q = CombinatorialQuery::new(24, 2, 2, vec![(0, 0), (1, 0), (0, 1), (2, 1)]).unwrap();
        let r = eta_kappa_mc(&q, 20_000, 11, ENUMERATION_CAP).unwrap();
        assert!(r.zero_region_respected && r.pass);
        let total: Rational = r.cells.iter().filter_map(|c| c.exact.clone()).sum();
        assert_eq!(total, rational::int(1));
        for c in &r.cells {
            let p = c.exact.as_ref().map_or(0.0, rational::to_f64);
            let (lo, hi) = wilson(c.count, r.trials, 3.9);
            assert!(lo <= p && p <= hi, "cell ({}, {}): {} vs {p}", c.kappa, c.eta, c.frequency);
        }
    }
}
