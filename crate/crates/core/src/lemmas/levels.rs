//! Level-wise Fourier mass: boundedness profiles, singleton-free mass and
//! the trivial mass bound.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::csp::decode;
use crate::error::{Error, Result};
use crate::fourier::{dft, dft_capped, norm_p, table_len, DensityTable, FrequencyIndex, FrequencyMatrix, Spectrum, FREQUENCY_CAP};

use super::log_u_bound;

const TOL: f64 = 1e-9;

fn weight(idx: usize, q: usize, n: usize) -> usize {
    decode(idx, q, n).iter().filter(|&&d| d != 0).count()
}

/// `Σ_{wt(u)=h} |ĝ(u)|` for every `h = 0..=N`.
pub fn level_masses(s: &Spectrum) -> Vec<f64> {
    let mut out = vec![0.0; s.n + 1];
    for (i, c) in s.coeffs.iter().enumerate() {
        out[weight(i, s.q, s.n)] += c.norm();
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundProfile {
    pub c: f64,
    pub s: usize,
    pub q: usize,
    pub n: usize,
    pub observed: Vec<f64>,
    pub bound: Vec<f64>,
    pub pass: Vec<bool>,
    pub all_pass: bool,
    /// Smallest `C` for which every level passes; infinite when some level
    /// beyond `s` exceeds the `C`-free branch of the bound.
    pub fitted_c: f64,
}

/// Compares the level masses of `density` against `U_{C,s}(h, N)`.
pub fn boundedness_profile(density: &DensityTable, c: f64, s: usize) -> Result<BoundProfile> {
    let spec = dft(density)?;
    let (q, n) = (density.q, density.n);
    let nf = n as f64;
    let observed = level_masses(&spec);
    let bound: Vec<f64> = (0..=n).map(|h| log_u_bound(c, s, h, nf, q).exp()).collect();
    let pass: Vec<bool> = observed.iter().zip(&bound).map(|(o, b)| *o <= b * (1.0 + TOL) + TOL).collect();
    let mut fitted: f64 = 0.0;
    for (h, &obs) in observed.iter().enumerate().skip(1) {
        if obs <= TOL {
            continue;
        }
        let hf = h as f64;
        let root = obs.powf(2.0 / hf);
        let need = if h <= s {
            hf * root / (s as f64 * nf).sqrt()
        } else {
            let cap = std::f64::consts::E * (q * q) as f64 * nf / hf;
            if root > cap * (1.0 + TOL) {
                f64::INFINITY
            } else {
                hf.sqrt() * root / nf.sqrt()
            }
        };
        fitted = fitted.max(need);
    }
    let all_pass = pass.iter().all(|&p| p);
    Ok(BoundProfile { c, s, q, n, observed, bound, pass, all_pass, fitted_c: fitted })
}

/// Row patterns of `Z_q^k` with support size other than one, as
/// `(index, support)`.
fn sf_rows(q: usize, k: usize) -> Vec<(usize, usize)> {
    let len = q.pow(k as u32);
    (0..len)
        .map(|i| (i, weight(i, q, k)))
        .filter(|&(_, w)| w != 1)
        .collect()
}

/// Singleton-free frequencies of weight `h` (and row weight `ell` when
/// given), generated row by row. Sorted by index.
pub fn sf_frequencies(q: usize, m: usize, k: usize, h: usize, ell: Option<usize>) -> Result<Vec<usize>> {
    table_len(q, m * k, FREQUENCY_CAP)?;
    let rows = sf_rows(q, k);
    let rowlen = q.pow(k as u32);
    let mut out = Vec::new();
    fn rec(
        j: usize,
        m: usize,
        acc: usize,
        wt: usize,
        rwt: usize,
        h: usize,
        ell: Option<usize>,
        rows: &[(usize, usize)],
        rowlen: usize,
        out: &mut Vec<usize>,
    ) {
        if j == m {
            if wt == h && ell.is_none_or(|l| l == rwt) {
                out.push(acc);
            }
            return;
        }
        for &(r, w) in rows {
            if wt + w > h {
                continue;
            }
            let nr = rwt + usize::from(w > 0);
            if ell.is_some_and(|l| nr > l) {
                continue;
            }
            rec(j + 1, m, acc * rowlen + r, wt + w, nr, h, ell, rows, rowlen, out);
        }
    }
    rec(0, m, 0, 0, 0, h, ell, &rows, rowlen, &mut out);
    out.sort_unstable();
    Ok(out)
}

/// The same set as [`sf_frequencies`], found by filtering every frequency.
pub fn sf_frequencies_filter(q: usize, m: usize, k: usize, h: usize, ell: Option<usize>) -> Result<Vec<usize>> {
    let idx = FrequencyIndex::get(q, m, k)?;
    Ok((0..idx.len())
        .filter(|&i| {
            idx.singleton_free(i) && idx.wt[i] as usize == h && ell.is_none_or(|l| idx.rwt[i] as usize == l)
        })
        .collect())
}

fn check_matrix_table(g: &DensityTable, m: usize, k: usize) -> Result<()> {
    if g.n != m * k {
        return Err(Error::invalid(format!("table has {} coordinates, expected {m}×{k}", g.n)));
    }
    table_len(g.q, g.n, FREQUENCY_CAP)?;
    Ok(())
}

/// `Σ_{U ∈ 𝒰(h)} |ĝ(U)|` over singleton-free `U ∈ Z_q^{m×k}` of weight `h`.
pub fn sf_mass(g: &DensityTable, m: usize, k: usize, h: usize) -> Result<f64> {
    check_matrix_table(g, m, k)?;
    let s = dft(g)?;
    Ok(sf_frequencies(g.q, m, k, h, None)?.iter().map(|&i| s.coeffs[i].norm()).sum())
}

/// `Σ_{U ∈ 𝒰(h,ℓ)} |ĝ(U)|²`, additionally restricted to row weight `ℓ`.
pub fn sf_mass_by_rows(g: &DensityTable, m: usize, k: usize, h: usize, ell: usize) -> Result<f64> {
    check_matrix_table(g, m, k)?;
    let s = dft(g)?;
    Ok(sf_frequencies(g.q, m, k, h, Some(ell))?.iter().map(|&i| s.coeffs[i].norm_sqr()).sum())
}

/// `log_q ‖g‖_∞`.
pub fn log_sup(g: &DensityTable) -> f64 {
    norm_p(g, f64::INFINITY).ln() / (g.q as f64).ln()
}

/// Smallest `ζ` with `sf_mass(g, h) ≤ (ζ√(bm)/h)^{h/2}` for every table and
/// every `h ≥ 1`, where `b = log_q ‖g‖_∞`.
pub fn fit_zeta(tables: &[DensityTable], m: usize, k: usize) -> Result<f64> {
    let mut zeta: f64 = 0.0;
    for g in tables {
        let b = log_sup(g);
        for h in 1..=m * k {
            let mass = sf_mass(g, m, k, h)?;
            if mass <= TOL {
                continue;
            }
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            zeta = zeta.max(h as f64 * mass.powf(2.0 / h as f64) / (b * m as f64).sqrt());
        }
    }
    Ok(zeta)
}

/// `(ζ√(bm)/h)^{h/2}`, with the empty power equal to 1.
pub fn sf_bound(zeta: f64, b: f64, m: usize, h: usize) -> f64 {
    if h == 0 {
        return 1.0;
    }
    let hf = h as f64;
    (zeta * (b * m as f64).sqrt() / hf).powf(hf / 2.0)
}

/// `|𝒰(h, ℓ)|` for all `h ≤ mk`, `ℓ ≤ m`, by dynamic programming over rows.
pub fn sf_counts_dp(q: usize, m: usize, k: usize) -> Vec<Vec<BigInt>> {
    let mut per_support = vec![BigInt::zero(); k + 1];
    for (r, slot) in per_support.iter_mut().enumerate() {
        if r != 1 {
            *slot = crate::rational::binomial(k as u64, r as u64) * BigInt::from(q - 1).pow(r as u32);
        }
    }
    let mut table = vec![vec![BigInt::zero(); m + 1]; m * k + 1];
    table[0][0] = BigInt::one();
    for _ in 0..m {
        let mut next = vec![vec![BigInt::zero(); m + 1]; m * k + 1];
        for h in 0..=m * k {
            for l in 0..=m {
                if table[h][l].is_zero() {
                    continue;
                }
                for (r, c) in per_support.iter().enumerate() {
                    if c.is_zero() || h + r > m * k {
                        continue;
                    }
                    let nl = l + usize::from(r > 0);
                    next[h + r][nl] += &table[h][l] * c;
                }
            }
        }
        table = next;
    }
    table
}

/// `|𝒰(h, ℓ)|` by enumerating every frequency.
pub fn sf_counts_enumerated(q: usize, m: usize, k: usize) -> Result<Vec<Vec<u64>>> {
    let idx = FrequencyIndex::get(q, m, k)?;
    let mut out = vec![vec![0u64; m + 1]; m * k + 1];
    for i in 0..idx.len() {
        if idx.singleton_free(i) {
            out[idx.wt[i] as usize][idx.rwt[i] as usize] += 1;
        }
    }
    Ok(out)
}

/// `(e(q^k - 1)·m/ℓ)^ℓ`, 1 at `ℓ = 0`.
pub fn sf_count_bound(q: usize, k: usize, m: usize, ell: usize) -> f64 {
    if ell == 0 {
        return 1.0;
    }
    let zeta = std::f64::consts::E * (q.pow(k as u32) - 1) as f64;
    (zeta * m as f64 / ell as f64).powi(ell as i32)
}

#[derive(Debug, Clone, Serialize)]
pub struct CoveredMass {
    pub lhs: f64,
    pub bound: f64,
    /// Singleton rows of `V`.
    pub kappa: usize,
    pub rwt: usize,
    pub pass: bool,
}

/// `Σ_{U ∈ SF, wt(U - V) = h} |ĝ(U)|` against
/// `q^{k·rwt(V)}·(ζ√(bm)/(h-κ))^{(h-κ)/2}`.
pub fn covered_center_mass(
    g: &DensityTable,
    m: usize,
    k: usize,
    v: &FrequencyMatrix,
    h: usize,
    zeta: f64,
    b: f64,
) -> Result<CoveredMass> {
    check_matrix_table(g, m, k)?;
    if v.m != m || v.k != k || v.q != g.q {
        return Err(Error::invalid("centre matrix shape does not match the table"));
    }
    let s = dft(g)?;
    let idx = FrequencyIndex::get(g.q, m, k)?;
    let q = g.q;
    let mut lhs = 0.0;
    for i in 0..idx.len() {
        if !idx.singleton_free(i) {
            continue;
        }
        let u = decode(i, q, m * k);
        let dist = u.iter().zip(&v.entries).filter(|(a, b)| a != b).count();
        if dist == h {
            lhs += s.coeffs[i].norm();
        }
    }
    let kappa = v.singleton_rows();
    let rwt = v.rwt();
    let bound = if h < kappa {
        0.0
    } else {
        (q as f64).powi((k * rwt) as i32) * sf_bound(zeta, b, m, h - kappa)
    };
    let pass = lhs <= bound * (1.0 + TOL) + TOL;
    Ok(CoveredMass { lhs, bound, kappa, rwt, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrivialMass {
    pub h: usize,
    pub lhs: f64,
    pub bound: f64,
    pub pass: bool,
}

/// `Σ_{wt(U)=h} |ĝ(U)| ≤ (q²eN/h)^{h/2}` for `‖g‖₁ = 1` and
/// `log_q ‖g‖_∞ ≤ h`.
pub fn trivial_mass_check(g: &DensityTable, h: usize) -> Result<TrivialMass> {
    if h == 0 {
        return Err(Error::invalid("level must be at least 1"));
    }
    let l1 = norm_p(g, 1.0);
    if (l1 - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("‖g‖₁ = {l1}, expected 1")));
    }
    if log_sup(g) > h as f64 + 1e-12 {
        return Err(Error::invalid(format!("log_q ‖g‖_∞ = {} exceeds h = {h}", log_sup(g))));
    }
    let s = dft_capped(g, crate::fourier::DEFAULT_CAP)?;
    let lhs = level_masses(&s).get(h).copied().unwrap_or(0.0);
    let hf = h as f64;
    let bound = ((g.q * g.q) as f64 * std::f64::consts::E * g.n as f64 / hf).powf(hf / 2.0);
    Ok(TrivialMass { h, lhs, bound, pass: lhs <= bound * (1.0 + TOL) })
}

/// Exact integer check that a `u64` count fits under an `f64` bound.
pub fn count_within(count: &BigInt, bound: f64) -> bool {
    count.to_f64().is_some_and(|c| c <= bound * (1.0 + 1e-12))
}
