//! The distributional basic LP relaxation and integrality-gap certificates.

pub mod simplex;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::csp::{self, decode, Instance, Predicate};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use simplex::{LpOutcome, StandardLp};

/// Exact distribution over `[q]^k`, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalDistribution {
    pub q: usize,
    pub k: usize,
    #[serde(with = "rational::serde_vec")]
    pub probs: Vec<Rational>,
}

impl LocalDistribution {
    pub fn new(q: usize, k: usize, probs: Vec<Rational>) -> Result<Self> {
        let d = LocalDistribution { q, k, probs };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let len = self.q.checked_pow(self.k as u32).unwrap_or(usize::MAX);
        if self.probs.len() != len {
            return Err(Error::invalid(format!(
                "distribution has {} entries, expected {}^{} = {len}",
                self.probs.len(),
                self.q,
                self.k
            )));
        }
        if let Some(i) = self.probs.iter().position(|p| p.is_negative()) {
            return Err(Error::invalid(format!("negative probability at index {i}")));
        }
        let total: Rational = self.probs.iter().sum();
        if !total.is_one() {
            return Err(Error::invalid(format!(
                "probabilities sum to {}, not 1",
                rational::format(&total)
            )));
        }
        Ok(())
    }

    pub fn uniform(q: usize, k: usize) -> Self {
        let len = q.pow(k as u32);
        let p = rational::ratio(1, len as i64);
        LocalDistribution { q, k, probs: vec![p; len] }
    }

    pub fn point_mass(q: usize, k: usize, point: &[usize]) -> Self {
        let len = q.pow(k as u32);
        let mut probs = vec![Rational::zero(); len];
        probs[csp::encode(point, q)] = Rational::one();
        LocalDistribution { q, k, probs }
    }

    /// Uniform over the listed tuples (repeats add weight).
    pub fn uniform_on(q: usize, k: usize, points: &[Vec<usize>]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("support must be nonempty"));
        }
        let len = q.pow(k as u32);
        let mut probs = vec![Rational::zero(); len];
        let w = rational::ratio(1, points.len() as i64);
        for p in points {
            if p.len() != k || p.iter().any(|&v| v >= q) {
                return Err(Error::invalid(format!("point {p:?} outside [{q}]^{k}")));
            }
            probs[csp::encode(p, q)] += &w;
        }
        Ok(LocalDistribution { q, k, probs })
    }

    pub fn marginal(&self, slot: usize) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.q];
        for (i, p) in self.probs.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let a = decode(i, self.q, self.k);
            out[a[slot]] += p;
        }
        out
    }

    pub fn is_one_wise_uniform(&self) -> bool {
        let u = rational::ratio(1, self.q as i64);
        (0..self.k).all(|l| self.marginal(l).iter().all(|p| *p == u))
    }

    pub fn expectation(&self, f: &Predicate) -> Rational {
        self.probs
            .iter()
            .enumerate()
            .filter(|(i, _)| f.eval_index(*i))
            .map(|(_, p)| p)
            .sum()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.probs.iter().map(rational::to_f64).collect()
    }
}

/// Locals keyed by the index of the first constraint carrying each distinct
/// `(predicate, vars)` pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpSolution {
    pub locals: BTreeMap<usize, LocalDistribution>,
    #[serde(with = "rational::serde_str")]
    pub objective: Rational,
}

impl LpSolution {
    pub fn local_for(&self, inst: &Instance, constraint: usize) -> Option<&LocalDistribution> {
        let key = canonical_index(inst, constraint);
        self.locals.get(&key)
    }
}

fn canonical_index(inst: &Instance, i: usize) -> usize {
    let c = &inst.constraints[i];
    inst.constraints
        .iter()
        .position(|d| d.vars == c.vars && d.predicate == c.predicate)
        .expect("constraint is present")
}

/// Distinct constraints with their multiplicities, in first-occurrence order.
pub fn distinct_constraints(inst: &Instance) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for i in 0..inst.len() {
        let key = canonical_index(inst, i);
        match out.iter_mut().find(|(k, _)| *k == key) {
            Some((_, m)) => *m += 1,
            None => out.push((key, 1)),
        }
    }
    out
}

/// Per variable, the (distinct-constraint key, slot) pairs in which it occurs.
fn variable_slots(inst: &Instance, keys: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
    let mut slots = vec![Vec::new(); inst.num_vars];
    for &(key, _) in keys {
        for (l, &v) in inst.constraints[key].vars.iter().enumerate() {
            slots[v].push((key, l));
        }
    }
    slots
}

pub fn solve_basic_lp(inst: &Instance) -> Result<LpSolution> {
    if inst.is_empty() {
        return Err(Error::invalid("basic LP of an empty instance"));
    }
    let q = inst.q0;
    let keys = distinct_constraints(inst);
    let mut offset = BTreeMap::new();
    let mut nvars = 0usize;
    for &(key, _) in &keys {
        offset.insert(key, nvars);
        nvars += inst.constraints[key].predicate.size();
    }
    let total = BigInt::from(inst.len());
    let mut c = vec![Rational::zero(); nvars];
    for &(key, mult) in &keys {
        let f = &inst.constraints[key].predicate;
        let w = BigRational::new(BigInt::from(mult), total.clone());
        for a in 0..f.size() {
            if f.eval_index(a) {
                c[offset[&key] + a] = w.clone();
            }
        }
    }

    let mut a_rows = Vec::new();
    let mut b = Vec::new();
    for &(key, _) in &keys {
        let mut row = vec![Rational::zero(); nvars];
        for v in row.iter_mut().skip(offset[&key]).take(inst.constraints[key].predicate.size()) {
            *v = Rational::one();
        }
        a_rows.push(row);
        b.push(Rational::one());
    }
    for slots in variable_slots(inst, &keys) {
        let Some(&(rkey, rl)) = slots.first() else { continue };
        for &(key, l) in &slots[1..] {
            for sym in 0..q {
                let mut row = vec![Rational::zero(); nvars];
                add_marginal_row(&mut row, inst, key, offset[&key], l, sym, 1);
                add_marginal_row(&mut row, inst, rkey, offset[&rkey], rl, sym, -1);
                a_rows.push(row);
                b.push(Rational::zero());
            }
        }
    }

    let lp = StandardLp { a: a_rows, b, c };
    let (x, objective) = match simplex::solve(&lp) {
        LpOutcome::Optimal { x, objective } => (x, objective),
        other => unreachable!("basic LP is feasible and bounded, got {other:?}"),
    };
    let mut locals = BTreeMap::new();
    for &(key, _) in &keys {
        let f = &inst.constraints[key].predicate;
        let start = offset[&key];
        locals.insert(
            key,
            LocalDistribution { q, k: f.k, probs: x[start..start + f.size()].to_vec() },
        );
    }
    Ok(LpSolution { locals, objective })
}

fn add_marginal_row(
    row: &mut [Rational],
    inst: &Instance,
    key: usize,
    offset: usize,
    slot: usize,
    sym: usize,
    sign: i64,
) {
    let f = &inst.constraints[key].predicate;
    for a in 0..f.size() {
        if decode(a, f.q0, f.k)[slot] == sym {
            row[offset + a] += rational::int(sign);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violation: Option<String>,
}

pub fn check_feasible(inst: &Instance, sol: &LpSolution) -> Result<FeasibilityReport> {
    let keys = distinct_constraints(inst);
    for &(key, _) in &keys {
        let f = &inst.constraints[key].predicate;
        let local = sol
            .locals
            .get(&key)
            .ok_or_else(|| Error::invalid(format!("no local distribution for constraint {key}")))?;
        if local.q != inst.q0 || local.k != f.k || local.probs.len() != f.size() {
            return Err(Error::invalid(format!("local for constraint {key} has the wrong shape")));
        }
    }
    if let Some(extra) = sol.locals.keys().find(|k| !keys.iter().any(|(key, _)| key == *k)) {
        return Err(Error::invalid(format!("local {extra} matches no distinct constraint")));
    }
    let fail = |msg: String| Ok(FeasibilityReport { feasible: false, violation: Some(msg) });
    for &(key, _) in &keys {
        let local = &sol.locals[&key];
        if let Some(i) = local.probs.iter().position(|p| p.is_negative()) {
            return fail(format!("simplex: constraint {key} has negative mass at index {i}"));
        }
        let total: Rational = local.probs.iter().sum();
        if !total.is_one() {
            return fail(format!(
                "simplex: constraint {key} sums to {}",
                rational::format(&total)
            ));
        }
    }
    let slots = variable_slots(inst, &keys);
    for (v, occ) in slots.iter().enumerate() {
        let margs: Vec<Vec<Rational>> =
            occ.iter().map(|&(key, l)| sol.locals[&key].marginal(l)).collect();
        for i in 0..occ.len() {
            for j in i + 1..occ.len() {
                if let Some(b) = (0..inst.q0).find(|&b| margs[i][b] != margs[j][b]) {
                    return fail(format!(
                        "marginal: variable {v} symbol {b}: constraint {} slot {} has {}, constraint {} slot {} has {}",
                        occ[i].0,
                        occ[i].1,
                        rational::format(&margs[i][b]),
                        occ[j].0,
                        occ[j].1,
                        rational::format(&margs[j][b])
                    ));
                }
            }
        }
    }
    Ok(FeasibilityReport { feasible: true, violation: None })
}

/// Objective `E_{C~Φ} E_{a~Y_C} f(a)` of a feasible solution.
pub fn lp_value(inst: &Instance, sol: &LpSolution) -> Result<Rational> {
    let rep = check_feasible(inst, sol)?;
    if !rep.feasible {
        return Err(Error::invalid(format!(
            "infeasible solution: {}",
            rep.violation.unwrap_or_default()
        )));
    }
    let total: Rational = (0..inst.len())
        .map(|i| {
            let key = canonical_index(inst, i);
            sol.locals[&key].expectation(&inst.constraints[i].predicate)
        })
        .sum();
    Ok(total / BigRational::from_integer(BigInt::from(inst.len())))
}

/// Locals that are uniform on `[q0]^k`; always feasible.
pub fn product_uniform_solution(inst: &Instance) -> LpSolution {
    let locals: BTreeMap<_, _> = distinct_constraints(inst)
        .into_iter()
        .map(|(key, _)| {
            let k = inst.constraints[key].predicate.k;
            (key, LocalDistribution::uniform(inst.q0, k))
        })
        .collect();
    let mut sol = LpSolution { locals, objective: Rational::zero() };
    sol.objective = objective_of(inst, &sol);
    sol
}

/// For each constraint, the uniform distribution over the best translate
/// `{y + b·1}` of the diagonal. Every marginal is uniform, so the point is
/// feasible and its value is the average width.
pub fn translated_line_solution(inst: &Instance) -> LpSolution {
    let q = inst.q0;
    let locals: BTreeMap<_, _> = distinct_constraints(inst)
        .into_iter()
        .map(|(key, _)| {
            let f = &inst.constraints[key].predicate;
            let line = |y: &[usize]| -> Vec<Vec<usize>> {
                (0..q).map(|b| y.iter().map(|&v| (v + b) % q).collect()).collect()
            };
            let best = (0..f.size())
                .map(|i| decode(i, q, f.k))
                .max_by_key(|y| {
                    let hits = line(y).iter().filter(|p| f.eval(p)).count();
                    (hits, std::cmp::Reverse(csp::encode(y, q)))
                })
                .expect("nonempty table");
            let local = LocalDistribution::uniform_on(q, f.k, &line(&best)).expect("valid line");
            (key, local)
        })
        .collect();
    let mut sol = LpSolution { locals, objective: Rational::zero() };
    sol.objective = objective_of(inst, &sol);
    sol
}

fn objective_of(inst: &Instance, sol: &LpSolution) -> Rational {
    let total: Rational = (0..inst.len())
        .map(|i| sol.locals[&canonical_index(inst, i)].expectation(&inst.constraints[i].predicate))
        .sum();
    total / BigRational::from_integer(BigInt::from(inst.len()))
}

#[derive(Debug, Clone)]
pub struct GapCertificate {
    pub gamma: Rational,
    pub beta: Rational,
    pub instance: Instance,
    pub lp_solution: LpSolution,
    pub argmax: Vec<usize>,
}

impl GapCertificate {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "gamma": rational::format(&self.gamma),
            "beta": rational::format(&self.beta),
            "instance": self.instance.to_json(),
            "lp_solution": self.lp_solution,
            "argmax": self.argmax,
        })
    }
}

pub fn find_gap_certificate(inst: &Instance, cap: u128) -> Result<GapCertificate> {
    let brute = csp::opt_brute(inst, cap)?;
    let sol = solve_basic_lp(inst)?;
    debug_assert!(sol.objective >= brute.opt);
    Ok(GapCertificate {
        gamma: sol.objective.clone(),
        beta: brute.opt,
        instance: inst.clone(),
        lp_solution: sol,
        argmax: brute.argmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::{cut, dicut, Constraint, DEFAULT_ENUM_CAP};
    use crate::rational::ratio;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn triangle() -> Instance {
        Instance::uniform(&cut(), 3, &[vec![0, 1], vec![1, 2], vec![2, 0]]).unwrap()
    }

    fn zero_pred() -> Predicate {
        Predicate::new("zero", 2, 2, vec![false; 4]).unwrap()
    }

    /// Uniform on the satisfying assignments of each cut edge.
    fn triangle_certificate() -> LpSolution {
        let inst = triangle();
        let local = LocalDistribution::uniform_on(2, 2, &[vec![0, 1], vec![1, 0]]).unwrap();
        let locals = (0..3).map(|i| (i, local.clone())).collect();
        let mut sol = LpSolution { locals, objective: Rational::zero() };
        sol.objective = objective_of(&inst, &sol);
        sol
    }

    #[test]
    fn solve_small_instances() {
        let edge = Instance::uniform(&cut(), 2, &[vec![0, 1]]).unwrap();
        assert_eq!(solve_basic_lp(&edge).unwrap().objective, ratio(1, 1));
        let sol = solve_basic_lp(&triangle()).unwrap();
        assert_eq!(sol.objective, ratio(1, 1));
        assert!(check_feasible(&triangle(), &sol).unwrap().feasible);
        let zero = Instance::uniform(&zero_pred(), 2, &[vec![0, 1]]).unwrap();
        assert_eq!(solve_basic_lp(&zero).unwrap().objective, ratio(0, 1));
    }

    #[test]
    fn hand_certificate_is_feasible_and_optimal() {
        let inst = triangle();
        let cert = triangle_certificate();
        assert!(check_feasible(&inst, &cert).unwrap().feasible);
        assert_eq!(lp_value(&inst, &cert).unwrap(), ratio(1, 1));
        assert_eq!(lp_value(&inst, &solve_basic_lp(&inst).unwrap()).unwrap(), cert.objective);
    }

    #[test]
    fn feasibility_violations() {
        let inst = triangle();
        assert!(check_feasible(&inst, &product_uniform_solution(&inst)).unwrap().feasible);
        let mut bad = triangle_certificate();
        bad.locals.get_mut(&0).unwrap().probs[0] = ratio(1, 1);
        let rep = check_feasible(&inst, &bad).unwrap();
        assert!(!rep.feasible);
        assert!(rep.violation.unwrap().starts_with("simplex"));
        assert!(lp_value(&inst, &bad).is_err());

        let mut skew = triangle_certificate();
        skew.locals.insert(0, LocalDistribution::point_mass(2, 2, &[1, 0]));
        let rep = check_feasible(&inst, &skew).unwrap();
        assert!(rep.violation.unwrap().starts_with("marginal"));

        let mut missing = triangle_certificate();
        missing.locals.remove(&2);
        assert!(check_feasible(&inst, &missing).is_err());
    }

    #[test]
    fn duplicates_share_a_local() {
        let inst = Instance::uniform(&dicut(), 2, &[vec![0, 1], vec![0, 1], vec![1, 0]]).unwrap();
        let sol = solve_basic_lp(&inst).unwrap();
        assert_eq!(sol.locals.len(), 2);
        assert!(sol.local_for(&inst, 1).is_some());
        assert!(check_feasible(&inst, &sol).unwrap().feasible);
        // Oracle: the two directed edges (0,1) twice and (1,0) once. With
        // marginals P[x0=1]=a, P[x1=1]=b the LP can set the first to
        // min(a,1-b) and the second to min(b,1-a); uniform marginals give
        // 2/3·1/2 + 1/3·1/2 = 1/2, and a=1, b=0 gives 2/3.
        assert_eq!(sol.objective, ratio(2, 3));
        assert_eq!(csp::opt_brute(&inst, DEFAULT_ENUM_CAP).unwrap().opt, ratio(2, 3));
    }

    #[test]
    fn gap_certificates() {
        let g = find_gap_certificate(&triangle(), DEFAULT_ENUM_CAP).unwrap();
        assert_eq!((g.gamma, g.beta), (ratio(1, 1), ratio(2, 3)));
        let edge = Instance::uniform(&cut(), 2, &[vec![0, 1]]).unwrap();
        let g = find_gap_certificate(&edge, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!((g.gamma, g.beta), (ratio(1, 1), ratio(1, 1)));
        let zero = Instance::uniform(&zero_pred(), 2, &[vec![0, 1]]).unwrap();
        let g = find_gap_certificate(&zero, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!((g.gamma, g.beta), (ratio(0, 1), ratio(0, 1)));
    }

    #[test]
    fn solution_json_round_trip() {
        let sol = solve_basic_lp(&triangle()).unwrap();
        let s = serde_json::to_string(&sol).unwrap();
        assert!(s.contains("\"1/1\""));
        let back: LpSolution = serde_json::from_str(&s).unwrap();
        assert_eq!(back, sol);
    }

    pub(crate) fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
        let n = rng.gen_range(2..=6);
        let m = rng.gen_range(1..=8);
        let mut cs = Vec::new();
        for _ in 0..m {
            let bits: usize = rng.gen_range(0..16);
            let f = Predicate::new(
                format!("r{bits}"),
                2,
                2,
                (0..4).map(|i| bits >> i & 1 == 1).collect(),
            )
            .unwrap();
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            cs.push(Constraint::new(f, vec![a, b]).unwrap());
        }
        Instance::new(2, n, cs).unwrap()
    }

    #[test]
    fn random_vertices_never_beat_the_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let inst = random_instance(&mut rng);
            let opt = solve_basic_lp(&inst).unwrap();
            for _ in 0..20 {
                // Re-solve with a random objective to land on another vertex.
                let mut rnd = inst.clone();
                for c in rnd.constraints.iter_mut() {
                    let bits: usize = rng.gen_range(0..16);
                    c.predicate.table = (0..4).map(|i| bits >> i & 1 == 1).collect();
                    c.predicate.name = format!("x{bits}{}", rng.gen::<u32>());
                }
                let other = solve_basic_lp(&rnd).unwrap();
                // Transport the vertex back onto the original keys.
                let mut locals = BTreeMap::new();
                for (key, _) in distinct_constraints(&inst) {
                    let rkey = canonical_index(&rnd, key);
                    locals.insert(key, other.locals[&rkey].clone());
                }
                let moved = LpSolution { locals, objective: Rational::zero() };
                if check_feasible(&inst, &moved).unwrap().feasible {
                    assert!(lp_value(&inst, &moved).unwrap() <= opt.objective);
                }
            }
        }
    }

    #[test]
    fn relaxation_sandwich_and_width_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let inst = random_instance(&mut rng);
            let g = find_gap_certificate(&inst, DEFAULT_ENUM_CAP).unwrap();
            assert!(g.beta <= g.gamma && g.gamma <= ratio(1, 1));
            let line = translated_line_solution(&inst);
            assert!(check_feasible(&inst, &line).unwrap().feasible);
            assert!(line.objective <= g.gamma);
            let min_width = inst.constraints.iter().map(|c| csp::width(&c.predicate)).min().unwrap();
            assert!(line.objective >= min_width);
        }
    }
}
