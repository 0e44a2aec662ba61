//! Posterior densities after conditioning on a message fiber, and the
//! uniformity of a single player's input.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::csp::{decode, encode};
use crate::dihp::{sample_hypermatching, Hypermatching};
use crate::error::{Error, Result};
use crate::fourier::{
    convolve_spectral, dft, extend_from_coordinates, product_density, pushforward_linear, table_len,
    transpose_frequency, DensityTable, FrequencyIndex, FREQUENCY_CAP,
};
use crate::rng::{substream, Purpose};

use super::levels::level_masses;

pub const POSTERIOR_CAP: u128 = 1 << 22;
/// Bound on `q^{nk'}·q^{mk}` for the enumeration oracle.
pub const BAYES_CAP: u128 = 1 << 26;

#[derive(Debug, Clone)]
pub struct PosteriorInputs {
    pub q: usize,
    pub n: usize,
    pub k_prime: usize,
    /// `μ_𝒟` on `Z_q^{n×k'}`, flattened row-major.
    pub prior: DensityTable,
    pub matching: Hypermatching,
    pub phi: Vec<usize>,
    /// Row density of `𝒴` on `Z_q^k`.
    pub noise: DensityTable,
    /// Indices of `ℬ ⊆ Z_q^{m×k}`.
    pub b_set: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PosteriorReport {
    pub density: DensityTable,
    pub oracle: DensityTable,
    pub residual: f64,
    pub nu: f64,
    pub event_probability: f64,
}

impl PosteriorInputs {
    fn k(&self) -> usize {
        self.phi.len()
    }

    fn validate(&self) -> Result<()> {
        let (q, k) = (self.q, self.k());
        if self.prior.q != q || self.prior.n != self.n * self.k_prime {
            return Err(Error::invalid("prior table shape"));
        }
        if self.noise.q != q || self.noise.n != k {
            return Err(Error::invalid("noise table shape"));
        }
        if self.matching.n != self.n || self.matching.k() != k {
            return Err(Error::invalid("matching shape"));
        }
        if self.phi.iter().any(|&v| v >= self.k_prime) {
            return Err(Error::invalid("phi out of range"));
        }
        let space = table_len(q, self.matching.m() * k, FREQUENCY_CAP)?;
        if self.b_set.is_empty() || self.b_set.iter().any(|&b| b >= space) {
            return Err(Error::invalid("conditioning set is empty or out of range"));
        }
        table_len(q, self.prior.n, POSTERIOR_CAP)?;
        self.prior.check_density()?;
        self.noise.check_density()
    }

    /// Output coordinate `j·k + l` reads input coordinate `M_{jl}·k' + φ(l)`.
    fn sources(&self) -> Vec<usize> {
        let k = self.k();
        (0..self.matching.m() * k)
            .map(|o| self.matching.rows[o / k][o % k] * self.k_prime + self.phi[o % k])
            .collect()
    }
}

/// `μ_Post(X₀) = μ_𝒟(X₀)·(μ_{𝒴^{⊗m}} * μ_ℬ)(Π X₀)·ν_{M,ℬ}`, compared pointwise
/// with the Bayes conditional computed by enumerating `X` and `Y`.
pub fn posterior_density(inp: &PosteriorInputs) -> Result<PosteriorReport> {
    inp.validate()?;
    let q = inp.q;
    let m = inp.matching.m();
    let mk = m * inp.k();
    let space = q.pow(mk as u32);
    let mut in_b = vec![false; space];
    for &b in &inp.b_set {
        in_b[b] = true;
    }
    let b_size = in_b.iter().filter(|&&x| x).count();
    let mu_b = DensityTable::from_real(
        q,
        mk,
        &in_b.iter().map(|&x| if x { space as f64 / b_size as f64 } else { 0.0 }).collect::<Vec<_>>(),
    )?;
    let noise = product_density(inp.noise.clone(), m)?.dense(FREQUENCY_CAP)?;
    let conv = convolve_spectral(&noise, &mu_b)?;
    let sources = inp.sources();
    let nx = inp.prior.len();
    let nvars = inp.prior.n;
    let projected: Vec<usize> = (0..nx)
        .map(|xi| {
            let x = decode(xi, q, nvars);
            let z: Vec<usize> = sources.iter().map(|&c| x[c]).collect();
            encode(&z, q)
        })
        .collect();
    // Pr[ΠX - Y ∈ ℬ] = (|ℬ|/q^{mk})·E_X[μ_𝒟(X)·(μ_Y * μ_ℬ)(ΠX)].
    let scale = b_size as f64 / space as f64;
    let event: f64 = (0..nx)
        .map(|xi| inp.prior.values[xi].re * conv.values[projected[xi]].re)
        .sum::<f64>()
        / nx as f64
        * scale;
    if event <= 0.0 {
        return Err(Error::NullEvent("Pr[ΠX - Y ∈ ℬ] = 0".into()));
    }
    let nu = scale / event;
    let values: Vec<Complex64> = (0..nx)
        .map(|xi| inp.prior.values[xi] * conv.values[projected[xi]].re * nu)
        .collect();
    let mut density = DensityTable::new(q, nvars, values)?;
    density.mean1 = true;
    let oracle = bayes_oracle(inp, &in_b)?;
    let residual = density.max_abs_diff(&oracle);
    Ok(PosteriorReport { density, oracle, residual, nu, event_probability: event })
}

/// Enumerates `(X, Y)` and conditions on `ΠX - Y ∈ ℬ` directly.
fn bayes_oracle(inp: &PosteriorInputs, in_b: &[bool]) -> Result<DensityTable> {
    let q = inp.q;
    let k = inp.k();
    let m = inp.matching.m();
    let nx = inp.prior.len();
    let ny = in_b.len();
    let work = nx as u128 * ny as u128;
    if work > BAYES_CAP {
        return Err(Error::limit("Bayes enumeration", work, BAYES_CAP));
    }
    let row_probs: Vec<f64> = inp.noise.values.iter().map(|v| v.re / inp.noise.len() as f64).collect();
    let y_probs: Vec<f64> = (0..ny)
        .map(|yi| {
            let y = decode(yi, q, m * k);
            y.chunks(k).map(|r| row_probs[encode(r, q)]).product()
        })
        .collect();
    let ys: Vec<Vec<usize>> = (0..ny).map(|yi| decode(yi, q, m * k)).collect();
    let sources = inp.sources();
    let mut joint = vec![0.0; nx];
    for (xi, slot) in joint.iter_mut().enumerate() {
        let px = inp.prior.values[xi].re / nx as f64;
        if px == 0.0 {
            continue;
        }
        let x = decode(xi, q, inp.prior.n);
        let mut acc = 0.0;
        let mut z = vec![0usize; m * k];
        for (y, py) in ys.iter().zip(&y_probs) {
            for (o, zo) in z.iter_mut().enumerate() {
                *zo = (x[sources[o]] + q - y[o]) % q;
            }
            if in_b[encode(&z, q)] {
                acc += py;
            }
        }
        *slot = px * acc;
    }
    let total: f64 = joint.iter().sum();
    if total <= 0.0 {
        return Err(Error::NullEvent("Pr[ΠX - Y ∈ ℬ] = 0".into()));
    }
    DensityTable::from_real(q, inp.prior.n, &joint.iter().map(|p| p / total * nx as f64).collect::<Vec<_>>())
}

/// A prior that is a density `g` on the flat coordinates `coords` of
/// `Z_q^{n×k'}` and uniform on the rest.
#[derive(Debug, Clone)]
pub struct JuntaPrior {
    pub n: usize,
    pub k_prime: usize,
    pub coords: Vec<usize>,
    pub g: DensityTable,
}

impl JuntaPrior {
    pub fn new(n: usize, k_prime: usize, coords: Vec<usize>, g: DensityTable) -> Result<Self> {
        if coords.len() != g.n || coords.iter().any(|&c| c >= n * k_prime) {
            return Err(Error::invalid("junta coordinates do not match the table"));
        }
        let mut sorted = coords.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != coords.len() {
            return Err(Error::invalid("junta coordinates repeat"));
        }
        g.check_density()?;
        Ok(JuntaPrior { n, k_prime, coords, g })
    }

    pub fn dense(table: DensityTable, n: usize, k_prime: usize) -> Result<Self> {
        let all = (0..n * k_prime).collect();
        JuntaPrior::new(n, k_prime, all, table)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputUniformity {
    /// `‖μ_Input - 1‖_∞`.
    pub lhs: f64,
    /// `Σ_{V ≠ 0 singleton-free} |μ̂_𝒟(ΠᵀV)|`.
    pub rhs: f64,
    /// The same sum over every `U` supported on the image of `Πᵀ`.
    pub rhs_oracle: f64,
    pub holds: bool,
}

fn check_one_wise(noise: &DensityTable) -> Result<()> {
    noise.check_density()?;
    let s = dft(noise)?;
    for (i, c) in s.coeffs.iter().enumerate() {
        if decode(i, noise.q, noise.n).iter().filter(|&&d| d != 0).count() == 1 && c.norm() > 1e-12 {
            return Err(Error::invalid("noise row is not one-wise uniform"));
        }
    }
    Ok(())
}

/// `‖μ_Input(𝒟;M) - 1‖_∞` and its singleton-free Fourier bound, where
/// `Input = Π^φ_M X - Y` with one-wise uniform row noise `Y`.
pub fn input_uniformity(
    prior: &JuntaPrior,
    phi: &[usize],
    noise: &DensityTable,
    matching: &Hypermatching,
) -> Result<InputUniformity> {
    let q = prior.g.q;
    let k = phi.len();
    if noise.q != q || noise.n != k || matching.k() != k || matching.n != prior.n {
        return Err(Error::invalid("input-uniformity shapes are inconsistent"));
    }
    if phi.iter().any(|&v| v >= prior.k_prime) {
        return Err(Error::invalid("phi out of range"));
    }
    check_one_wise(noise)?;
    let m = matching.m();
    let mk = m * k;
    table_len(q, mk, FREQUENCY_CAP)?;
    let source = |o: usize| matching.rows[o / k][o % k] * prior.k_prime + phi[o % k];
    // σ_J(p) = output fed by junta coordinate p.
    let sigma: Vec<Option<usize>> = prior.coords.iter().map(|&c| (0..mk).find(|&o| source(o) == c)).collect();
    let hit: Vec<usize> = (0..mk).filter(|&o| prior.coords.contains(&source(o))).collect();
    let sigma_hit: Vec<Option<usize>> =
        sigma.iter().map(|s| s.map(|o| hit.iter().position(|&h| h == o).expect("hit"))).collect();
    let projected = pushforward_linear(&prior.g, &sigma_hit, hit.len())?;
    let p_m = extend_from_coordinates(&projected, &hit, mk)?;
    let y = product_density(noise.clone(), m)?.dense(FREQUENCY_CAP)?;
    let neg_y = DensityTable::from_fn(q, mk, |z| {
        let neg: Vec<usize> = z.iter().map(|&d| (q - d) % q).collect();
        y.at(&neg)
    })?;
    let input = convolve_spectral(&p_m, &neg_y)?;
    let lhs = input.values.iter().map(|v| (v - 1.0).norm()).fold(0.0, f64::max);

    let gs = dft(&prior.g)?;
    let idx = FrequencyIndex::get(q, m, k)?;
    let mut in_hit = vec![false; mk];
    for &o in &hit {
        in_hit[o] = true;
    }
    let mut rhs = 0.0;
    for vi in 1..idx.len() {
        if !idx.singleton_free(vi) {
            continue;
        }
        let v = decode(vi, q, mk);
        if v.iter().enumerate().any(|(o, &d)| d != 0 && !in_hit[o]) {
            continue;
        }
        rhs += gs.at(&transpose_frequency(&v, &sigma)).norm();
    }

    let mut rhs_oracle = 0.0;
    for ui in 1..gs.coeffs.len() {
        let u = decode(ui, q, prior.g.n);
        let mut v = vec![0usize; mk];
        let mut covered = true;
        for (p, &d) in u.iter().enumerate() {
            if d == 0 {
                continue;
            }
            match sigma[p] {
                Some(o) => v[o] = d,
                None => covered = false,
            }
        }
        if !covered {
            continue;
        }
        let sf = v.chunks(k).all(|r| r.iter().filter(|&&d| d != 0).count() != 1);
        if sf {
            rhs_oracle += gs.coeffs[ui].norm();
        }
    }
    Ok(InputUniformity { lhs, rhs, rhs_oracle, holds: lhs <= rhs + 1e-9 })
}

/// `Σ_{h=2}^{km} W_h·(32k³α·h/n)^{h/2}` with `W_h` the level-`h` mass of the
/// prior and `α = m/n`.
pub fn input_expectation_bound(prior: &JuntaPrior, m: usize, k: usize) -> Result<f64> {
    let w = level_masses(&dft(&prior.g)?);
    let n = prior.n as f64;
    let c = 32.0 * (k as f64).powi(3) * m as f64 / n;
    Ok((2..=(k * m).min(prior.g.n))
        .map(|h| w[h] * (c * h as f64 / n).powf(h as f64 / 2.0))
        .sum())
}

#[derive(Debug, Clone, Serialize)]
pub struct InputUniformityMc {
    pub trials: usize,
    pub mean_lhs: f64,
    pub mean_rhs: f64,
    pub expectation_bound: f64,
    pub pointwise_holds: bool,
}

/// Averages both sides of [`input_uniformity`] over random matchings.
pub fn input_uniformity_mc(
    prior: &JuntaPrior,
    phi: &[usize],
    noise: &DensityTable,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<InputUniformityMc> {
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    let k = phi.len();
    let mut rng = substream(seed, 0, Purpose::Trial);
    let (mut sl, mut sr, mut ok) = (0.0, 0.0, true);
    for _ in 0..trials {
        let mt = sample_hypermatching(prior.n, m, k, &mut rng)?;
        let r = input_uniformity(prior, phi, noise, &mt)?;
        sl += r.lhs;
        sr += r.rhs;
        ok &= r.holds;
    }
    let t = trials as f64;
    Ok(InputUniformityMc {
        trials,
        mean_lhs: sl / t,
        mean_rhs: sr / t,
        expectation_bound: input_expectation_bound(prior, m, k)?,
        pointwise_holds: ok,
    })
}

/// A random nonnegative density with `‖g‖_∞ ≤ q^b`-style spikes, for tests
/// and the lemma suites.
pub fn random_density(q: usize, n: usize, rng: &mut impl Rng) -> Result<DensityTable> {
    let len = table_len(q, n, crate::fourier::DEFAULT_CAP)?;
    let raw: Vec<f64> = (0..len).map(|_| rng.gen::<f64>().powi(2)).collect();
    let mean = raw.iter().sum::<f64>() / len as f64;
    let mut t = DensityTable::from_real(q, n, &raw.iter().map(|v| v / mean).collect::<Vec<_>>())?;
    t.mean1 = true;
    Ok(t)
}

/// A random configuration over `Z_2` with `|ℬ| = b`. `φ` is injective when
/// `k ≤ k'` and wraps around otherwise.
pub fn random_posterior_inputs(
    rng: &mut impl Rng,
    n: usize,
    k_prime: usize,
    m: usize,
    k: usize,
    b: usize,
) -> Result<PosteriorInputs> {
    use rand::seq::SliceRandom;
    let q: usize = 2;
    let matching = sample_hypermatching(n, m, k, rng)?;
    let mut vars: Vec<usize> = (0..k_prime).collect();
    vars.shuffle(rng);
    let phi = if k <= k_prime { vars[..k].to_vec() } else { (0..k).map(|l| l % k_prime).collect() };
    let space = table_len(q, m * k, FREQUENCY_CAP)?;
    if b == 0 || b > space {
        return Err(Error::invalid("conditioning set size out of range"));
    }
    let mut all: Vec<usize> = (0..space).collect();
    all.shuffle(rng);
    Ok(PosteriorInputs {
        q,
        n,
        k_prime,
        prior: random_density(q, n * k_prime, rng)?,
        matching,
        phi,
        noise: random_density(q, k, rng)?,
        b_set: all[..b].to_vec(),
    })
}
