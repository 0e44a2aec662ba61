//! Numerical verifiers for the quantitative lemmas: level bounds, posterior
//! densities, combinatorial matching bounds and the casework inequality.
//!
//! Existential constants are never fixed in advance. Each verifier reports
//! the smallest constant consistent with what it observed and asserts only
//! inequalities in which the constants are held fixed for the whole run.

pub mod combinatorics;
pub mod levels;
pub mod posterior;

use serde::Serialize;

use crate::error::{Error, Result};

pub use combinatorics::{combinatorial_mc, eta_kappa_mc, CombinatorialQuery};
pub use levels::{
    boundedness_profile, covered_center_mass, sf_count_bound, sf_counts_dp, sf_mass, sf_mass_by_rows,
    trivial_mass_check, BoundProfile,
};
pub use posterior::{input_uniformity, posterior_density, PosteriorInputs};

pub const DEFAULT_TRIALS: usize = 100_000;
/// One-sided 95% normal quantile.
pub const Z95: f64 = 1.6448536269514722;

/// `ln U_{C,s}(h, N)`.
pub fn log_u_bound(c: f64, s: usize, h: usize, n: f64, q: usize) -> f64 {
    if h == 0 {
        return 0.0;
    }
    let hf = h as f64;
    if h <= s {
        hf / 2.0 * (c * (s as f64 * n).sqrt() / hf).ln()
    } else {
        let a = c * n.sqrt() / hf.sqrt();
        let b = std::f64::consts::E * (q * q) as f64 * n / hf;
        hf / 2.0 * a.min(b).ln()
    }
}

/// `U_{C,s}(h, N)`: 1 at `h = 0`, `(C√(sN)/h)^{h/2}` up to `s`, and
/// `min{C√N/√h, e·q²·N/h}^{h/2}` beyond.
pub fn u_bound(c: f64, s: usize, h: usize, n: f64, q: usize) -> f64 {
    log_u_bound(c, s, h, n, q).exp()
}

/// `Σ_{h=2}^{km} U_{C1,s}(h,n)·(C2·h/n)^{h/2}`.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSum {
    pub total: f64,
    pub delta_sq: f64,
    pub within: bool,
    pub terms: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn level_bound_sum(c1: f64, c2: f64, s: usize, n: usize, k: usize, m: usize, delta: f64, q: usize) -> Result<LevelSum> {
    if !(c1 > 0.0 && c2 > 0.0 && n > 0 && delta > 0.0) {
        return Err(Error::invalid("level-bound parameters must be positive"));
    }
    let nf = n as f64;
    let terms: Vec<f64> = (2..=k * m)
        .map(|h| {
            let hf = h as f64;
            (log_u_bound(c1, s, h, nf, q) + hf / 2.0 * (c2 * hf / nf).ln()).exp()
        })
        .collect();
    let total: f64 = terms.iter().sum();
    let delta_sq = delta * delta;
    Ok(LevelSum { total, delta_sq, within: total <= delta_sq, terms })
}

/// Two-sided Wilson score interval.
pub fn wilson(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, PartialOrd, Ord)]
pub enum CaseworkRegion {
    /// `u ≤ h`
    C1a,
    /// `h < u ≤ s`
    C1b,
    /// `s < u ≤ 16s`
    C2a,
    /// `16s < u ≤ √ε·n`
    C2b,
    /// `u > √ε·n`
    C3,
}

pub fn casework_region(u: usize, h: usize, s: usize, n: usize) -> CaseworkRegion {
    let eps = s as f64 / n as f64;
    if u <= h {
        CaseworkRegion::C1a
    } else if u <= s {
        CaseworkRegion::C1b
    } else if u <= 16 * s {
        CaseworkRegion::C2a
    } else if (u as f64) <= eps.sqrt() * n as f64 {
        CaseworkRegion::C2b
    } else {
        CaseworkRegion::C3
    }
}

/// `ln Q` for
/// `Q = U_{C1,s}(u,n)·C_LHS^u·α^{η/2}·u^{η/2}·h^{u/2-η/2} / (n^{u/4+η/4}·s^{u/4-η/4})`.
#[allow(clippy::too_many_arguments)]
pub fn casework_log_q(c1: f64, c_lhs: f64, alpha: f64, n: usize, s: usize, h: usize, u: usize, eta: usize, q: usize) -> f64 {
    let (nf, sf, hf, uf, ef) = (n as f64, s as f64, h as f64, u as f64, eta as f64);
    log_u_bound(c1, s, u, nf, q) + uf * c_lhs.ln() + ef / 2.0 * alpha.ln() + ef / 2.0 * uf.ln()
        + (uf / 2.0 - ef / 2.0) * hf.ln()
        - (uf / 4.0 + ef / 4.0) * nf.ln()
        - (uf / 4.0 - ef / 4.0) * sf.ln()
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseworkGrid {
    pub q: usize,
    pub n_values: Vec<usize>,
    /// `s = ⌈frac·n⌉`.
    pub s_fracs: Vec<f64>,
    /// `h = ⌈frac·s⌉`.
    pub h_fracs: Vec<f64>,
    pub alpha: f64,
    pub c1: f64,
    pub c_lhs: f64,
    /// Log-spaced samples of `u` (region boundaries are always included).
    pub u_samples: usize,
    pub eta_samples: usize,
}

impl Default for CaseworkGrid {
    fn default() -> Self {
        CaseworkGrid {
            q: 2,
            n_values: vec![1_000, 10_000, 100_000],
            s_fracs: vec![1e-4, 1e-3, 1e-2],
            h_fracs: vec![0.1, 0.5, 1.0],
            alpha: 0.01,
            c1: 1.0,
            c_lhs: 1.0,
            u_samples: 24,
            eta_samples: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseworkCase {
    pub region: CaseworkRegion,
    pub points: usize,
    /// `max Q^{1/h}` over the region's points.
    pub fitted_c_rhs: f64,
    /// `max (ln Q - h)` over the region; nonpositive means `Q ≤ e^h` throughout.
    pub max_log_q_minus_h: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseworkReport {
    pub cases: Vec<CaseworkCase>,
    pub fitted_c_rhs: f64,
    pub points: usize,
}

fn log_spaced(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if hi < lo {
        return Vec::new();
    }
    let mut out = vec![lo, hi];
    if count > 2 && hi > lo {
        let (a, b) = ((lo.max(1) as f64).ln(), (hi as f64).ln());
        for i in 1..count - 1 {
            let v = (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as usize;
            out.push(v.clamp(lo, hi));
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Evaluates `Q` on the grid, restricted to `h ≤ s ≤ n`, `h ≥ 1` and
/// `κ + η ≤ u ≤ min{n, h + η}` with `κ = 0` (Q does not depend on κ).
pub fn casework_sweep(grid: &CaseworkGrid) -> CaseworkReport {
    use std::collections::BTreeMap;
    let mut best: BTreeMap<CaseworkRegion, (usize, f64, f64)> = BTreeMap::new();
    for &n in &grid.n_values {
        for &sf in &grid.s_fracs {
            let s = ((sf * n as f64).ceil() as usize).clamp(1, n);
            let eps = s as f64 / n as f64;
            for &hf in &grid.h_fracs {
                let h = ((hf * s as f64).ceil() as usize).clamp(1, s);
                let mut us = log_spaced(1, n, grid.u_samples);
                let root = (eps.sqrt() * n as f64) as usize;
                for b in [h, h + 1, s, s + 1, 16 * s, 16 * s + 1, root, root + 1] {
                    if (1..=n).contains(&b) {
                        us.push(b);
                    }
                }
                us.sort_unstable();
                us.dedup();
                for &u in &us {
                    let eta_lo = u.saturating_sub(h);
                    for eta in log_spaced(eta_lo, u, grid.eta_samples) {
                        let lq = casework_log_q(grid.c1, grid.c_lhs, grid.alpha, n, s, h, u, eta, grid.q);
                        let region = casework_region(u, h, s, n);
                        let e = best.entry(region).or_insert((0, f64::NEG_INFINITY, f64::NEG_INFINITY));
                        e.0 += 1;
                        e.1 = e.1.max(lq / h as f64);
                        e.2 = e.2.max(lq - h as f64);
                    }
                }
            }
        }
    }
    let cases: Vec<CaseworkCase> = best
        .into_iter()
        .map(|(region, (points, per_h, minus_h))| CaseworkCase {
            region,
            points,
            fitted_c_rhs: per_h.exp(),
            max_log_q_minus_h: minus_h,
        })
        .collect();
    let fitted = cases.iter().map(|c| c.fitted_c_rhs).fold(0.0, f64::max);
    let points = cases.iter().map(|c| c.points).sum();
    CaseworkReport { cases, fitted_c_rhs: fitted, points }
}
