//! Seeded verification suites behind `lemma-verify` and `fourier-check`.

use std::str::FromStr;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::csp::decode;
use crate::dihp::sample_hypermatching;
use crate::error::{Error, Result};
use crate::fourier::{
    apply_multiplier, convolve, convolve_spectral, density_from_dist, dft, extend_from_coordinates, hypercontractive_rho,
    idft, modified_exponent, norm_p, parseval, pushforward_linear, row_noise_direct, transpose_frequency, DensityTable,
    FrequencyIndex, FrequencyMatrix, Multiplier,
};
use crate::lemmas::{self, combinatorics, levels, posterior, CombinatorialQuery};
use crate::rng::{substream, Purpose};
use crate::uniformize::GadgetSpec;

pub const FOURIER_TOL: f64 = 1e-10;
pub const ZERO_TOL: f64 = 1e-12;
pub const INEQ_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Posterior,
    Levels,
    Combinatorics,
    Noise,
    Sums,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "posterior" => Suite::Posterior,
            "levels" => Suite::Levels,
            "combinatorics" => Suite::Combinatorics,
            "noise" => Suite::Noise,
            "sums" => Suite::Sums,
            _ => return Err(Error::invalid(format!("unknown suite `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: Value) -> Self {
        Check { name: name.into(), pass, detail }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl SuiteReport {
    fn new(suite: &str, seed: u64, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        SuiteReport { suite: suite.into(), seed, checks, pass }
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

pub fn lemma_verify(suite: Suite, seed: u64, trials: usize) -> Result<SuiteReport> {
    match suite {
        Suite::Posterior => posterior_suite(seed, 50),
        Suite::Levels => levels_suite(seed),
        Suite::Combinatorics => combinatorics_suite(seed, trials),
        Suite::Noise => noise_suite(seed, 50),
        Suite::Sums => sums_suite(seed),
    }
}

fn random_complex(q: usize, n: usize, rng: &mut impl Rng) -> Result<DensityTable> {
    let len = q.pow(n as u32);
    let values = (0..len).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    DensityTable::new(q, n, values)
}

fn random_real(q: usize, n: usize, rng: &mut impl Rng) -> Result<DensityTable> {
    let len = q.pow(n as u32);
    DensityTable::from_real(q, n, &(0..len).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>())
}

/// Residuals of inversion, Parseval and the convolution theorem on one
/// random table.
pub fn fourier_check(q: usize, n: usize, seed: u64) -> Result<Value> {
    if q < 2 {
        return Err(Error::invalid("q must be at least 2"));
    }
    let mut rng = substream(seed, 0, Purpose::Auxiliary);
    let g = random_complex(q, n, &mut rng)?;
    let inversion = idft(&dft(&g)?).max_abs_diff(&g);
    let parseval_residual = parseval(&g)?;
    let f = random_complex(q, n, &mut rng)?;
    let spectral = convolve_spectral(&f, &g)?;
    let (fs, gs, cs) = (dft(&f)?, dft(&g)?, dft(&spectral)?);
    let theorem = cs
        .coeffs
        .iter()
        .zip(fs.coeffs.iter().zip(&gs.coeffs))
        .map(|(c, (a, b))| (c - a * b).norm())
        .fold(0.0, f64::max);
    let direct = if g.len() <= 4096 { Some(convolve(&f, &g)?.max_abs_diff(&spectral)) } else { None };
    let worst = [inversion, parseval_residual, theorem, direct.unwrap_or(0.0)].into_iter().fold(0.0, f64::max);
    Ok(json!({
        "q": q,
        "N": n,
        "inversion": inversion,
        "parseval": parseval_residual,
        "convolution_theorem": theorem,
        "convolution_direct": direct,
        "pass": worst <= FOURIER_TOL,
    }))
}

fn max_dev<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

/// Inversion, Parseval, convolution, projection and marginal rules on
/// `tables` random tables, plus vanishing singleton coefficients of every
/// lifted edge distribution in `gadgets`.
pub fn fourier_suite(seed: u64, tables: usize, gadgets: &[GadgetSpec]) -> Result<SuiteReport> {
    let mut rng = substream(seed, 0, Purpose::Auxiliary);
    let (mut inv, mut par, mut conv, mut proj, mut marg) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..tables {
        let q = 2 + i % 2;
        let n = if q == 2 { rng.gen_range(2..=8) } else { rng.gen_range(2..=5) };
        let g = random_complex(q, n, &mut rng)?;
        let gs = dft(&g)?;
        inv = inv.max(idft(&gs).max_abs_diff(&g));
        par = par.max(parseval(&g)?);
        let f = random_complex(q, n, &mut rng)?;
        let fs = dft(&f)?;
        let direct = convolve(&f, &g)?;
        let cs = dft(&direct)?;
        conv = conv.max(direct.max_abs_diff(&convolve_spectral(&f, &g)?));
        conv = conv.max(max_dev(cs.coeffs.iter().zip(fs.coeffs.iter().zip(&gs.coeffs)).map(|(c, (a, b))| (c - a * b).norm())));

        // Projection: h on coordinates S, extended to all of Z_q^n.
        let mut coords: Vec<usize> = (0..n).collect();
        coords.shuffle(&mut rng);
        let s = &coords[..rng.gen_range(1..=n)];
        let h = random_complex(q, s.len(), &mut rng)?;
        let hs = dft(&h)?;
        let ext = dft(&extend_from_coordinates(&h, s, n)?)?;
        for (ui, c) in ext.coeffs.iter().enumerate() {
            let u = decode(ui, q, n);
            let inside = u.iter().enumerate().all(|(j, &d)| d == 0 || s.contains(&j));
            let want = if inside { hs.at(&s.iter().map(|&j| u[j]).collect::<Vec<_>>()) } else { Complex64::new(0.0, 0.0) };
            proj = proj.max((c - want).norm());
        }

        // Marginal: pushforward along a random surjection [n] -> [n_out].
        let n_out = rng.gen_range(1..=n);
        let mut sigma: Vec<Option<usize>> = (0..n).map(|j| Some(if j < n_out { j } else { rng.gen_range(0..n_out) })).collect();
        sigma.shuffle(&mut rng);
        let pushed = dft(&pushforward_linear(&g, &sigma, n_out)?)?;
        for (ui, c) in pushed.coeffs.iter().enumerate() {
            let u = decode(ui, q, n_out);
            marg = marg.max((c - gs.at(&transpose_frequency(&u, &sigma))).norm());
        }
    }
    let mut singleton: f64 = 0.0;
    let mut edges = 0;
    for spec in gadgets {
        for e in &spec.edges {
            let d = density_from_dist(spec.q, spec.k, &e.dist.to_f64())?;
            let s = dft(&d)?;
            for (ui, c) in s.coeffs.iter().enumerate() {
                if decode(ui, spec.q, spec.k).iter().filter(|&&x| x != 0).count() == 1 {
                    singleton = singleton.max(c.norm());
                }
            }
            edges += 1;
        }
    }
    let checks = vec![
        Check::new("inversion", inv <= FOURIER_TOL, json!({ "max_residual": inv, "tables": tables })),
        Check::new("parseval", par <= FOURIER_TOL, json!({ "max_residual": par })),
        Check::new("convolution", conv <= FOURIER_TOL, json!({ "max_residual": conv })),
        Check::new("projection-rule", proj <= FOURIER_TOL, json!({ "max_residual": proj })),
        Check::new("marginal-rule", marg <= FOURIER_TOL, json!({ "max_residual": marg })),
        Check::new("lifted-singletons", singleton <= ZERO_TOL, json!({ "max_abs": singleton, "edges": edges })),
    ];
    Ok(SuiteReport::new("fourier", seed, checks))
}

/// The modified-operator eigenvalue claim, domination by row noise, the two
/// row-noise implementations and row hypercontractivity at `(q, m, k) = (2, 3, 3)`.
pub fn noise_suite(seed: u64, samples: usize) -> Result<SuiteReport> {
    let (q, m, k) = (2usize, 3usize, 3usize);
    let rhos: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let idx = FrequencyIndex::get(q, m, k)?;
    let mut claim_ok = true;
    let mut sf_count = 0;
    for i in 0..idx.len() {
        if !idx.singleton_free(i) {
            continue;
        }
        sf_count += 1;
        let u = FrequencyMatrix::from_index(q, m, k, i);
        let e = (idx.wt[i] - idx.rwt[i]) as usize;
        claim_ok &= modified_exponent(&u) == Some(e);
        for &rho in &rhos {
            claim_ok &= Multiplier::modified(rho, m, k)?.eigenvalue(&u) == rho.powi(e as i32);
        }
    }
    let mut rng = substream(seed, 0, Purpose::Auxiliary);
    let (mut dom_gap, mut direct_gap) = (f64::NEG_INFINITY, 0.0f64);
    let mut hyper_gap = f64::NEG_INFINITY;
    let ps = [1.1, 1.25, 1.5, 1.75, 1.9];
    for s in 0..samples {
        let g = if s % 2 == 0 {
            random_real(q, m * k, &mut rng)?
        } else {
            posterior::random_density(q, m * k, &mut rng)?
        };
        for &rho in &rhos {
            let star = apply_multiplier(&g, &Multiplier::row_noise(rho, m, k)?)?;
            let modified = apply_multiplier(&g, &Multiplier::modified(rho, m, k)?)?;
            dom_gap = dom_gap.max(norm_p(&modified, 2.0) - norm_p(&star, 2.0));
            if s < 5 {
                direct_gap = direct_gap.max(row_noise_direct(&g, rho, m, k)?.max_abs_diff(&star));
            }
        }
        for &p in &ps {
            let rho = hypercontractive_rho(p, q, k);
            let star = apply_multiplier(&g, &Multiplier::row_noise(rho, m, k)?)?;
            hyper_gap = hyper_gap.max(norm_p(&star, 2.0) - norm_p(&g, p));
        }
    }
    let checks = vec![
        Check::new("modified-eigenvalue", claim_ok, json!({ "singleton_free": sf_count })),
        Check::new("domination", dom_gap <= INEQ_TOL, json!({ "max_excess": dom_gap, "samples": samples })),
        Check::new("row-noise-direct", direct_gap <= FOURIER_TOL, json!({ "max_residual": direct_gap })),
        Check::new("row-hypercontractivity", hyper_gap <= INEQ_TOL, json!({ "max_excess": hyper_gap, "p": ps })),
    ];
    Ok(SuiteReport::new("noise", seed, checks))
}

/// Shapes `(n, k', m, k)` with `nk' ≤ 12` and `mk ≤ 6`.
const POSTERIOR_SHAPES: [(usize, usize, usize, usize); 8] =
    [(6, 1, 2, 2), (6, 2, 3, 2), (4, 3, 2, 3), (12, 1, 3, 2), (5, 2, 2, 3), (8, 1, 3, 2), (3, 4, 2, 2), (6, 2, 1, 2)];

pub fn posterior_suite(seed: u64, configs: usize) -> Result<SuiteReport> {
    let mut rng = substream(seed, 0, Purpose::Auxiliary);
    let mut worst: f64 = 0.0;
    for i in 0..configs {
        let (n, kp, m, k) = POSTERIOR_SHAPES[i % POSTERIOR_SHAPES.len()];
        let b = rng.gen_range(1..=1usize << (m * k));
        let inp = posterior::random_posterior_inputs(&mut rng, n, kp, m, k, b)?;
        worst = worst.max(posterior::posterior_density(&inp)?.residual);
    }
    let mut checks = vec![Check::new("bayes-oracle", worst < 1e-9, json!({ "max_residual": worst, "configs": configs }))];

    // One conditioning step from the uniform prior at (n, k', m, k) = (8, 1, 3, 2).
    let mut inp = posterior::random_posterior_inputs(&mut rng, 8, 1, 3, 2, 20)?;
    inp.prior = DensityTable::constant(2, 8, 1.0)?;
    let post = posterior::posterior_density(&inp)?;
    let s = 2;
    let profile = levels::boundedness_profile(&post.density, 1.0, s)?;
    let refit = levels::boundedness_profile(&post.density, profile.fitted_c.max(f64::MIN_POSITIVE), s)?;
    checks.push(Check::new(
        "posterior-boundedness",
        profile.fitted_c.is_finite() && refit.all_pass,
        json!({ "fitted_c": profile.fitted_c, "s": s, "observed": profile.observed }),
    ));

    // Point-mass prior, exact sides.
    let mut p = vec![0.0; 256];
    p[rng.gen_range(0..256)] = 256.0;
    let point = posterior::JuntaPrior::dense(DensityTable::from_real(2, 8, &p)?, 4, 2)?;
    let parity = DensityTable::from_real(2, 2, &[2.0, 0.0, 0.0, 2.0])?;
    let mut ok = true;
    let mut margin = f64::INFINITY;
    for _ in 0..20 {
        let mt = sample_hypermatching(4, 2, 2, &mut rng)?;
        let r = posterior::input_uniformity(&point, &[0, 1], &parity, &mt)?;
        ok &= r.holds && (r.rhs - r.rhs_oracle).abs() < 1e-12;
        margin = margin.min(r.rhs - r.lhs);
    }
    checks.push(Check::new("input-uniformity-point-mass", ok, json!({ "min_margin": margin })));

    // Junta prior at n = 40, m = 3 over 200 matchings.
    let coords: Vec<usize> = {
        let mut all: Vec<usize> = (0..80).collect();
        all.shuffle(&mut rng);
        all[..10].to_vec()
    };
    let junta = posterior::JuntaPrior::new(40, 2, coords, posterior::random_density(2, 10, &mut rng)?)?;
    let mc = posterior::input_uniformity_mc(&junta, &[0, 1], &parity, 3, 200, seed)?;
    checks.push(Check::new(
        "input-uniformity-expectation",
        mc.pointwise_holds && mc.mean_lhs <= mc.mean_rhs + INEQ_TOL,
        serde_json::to_value(&mc)?,
    ));
    Ok(SuiteReport::new("posterior", seed, checks))
}

pub fn levels_suite(seed: u64) -> Result<SuiteReport> {
    let mut rng = substream(seed, 0, Purpose::Auxiliary);
    let mut checks = Vec::new();

    let mut agree = true;
    for (q, m, k) in [(2, 3, 2), (3, 2, 3), (2, 4, 3), (3, 3, 2)] {
        for h in 0..=m * k {
            for ell in std::iter::once(None).chain((0..=m).map(Some)) {
                agree &= levels::sf_frequencies(q, m, k, h, ell)? == levels::sf_frequencies_filter(q, m, k, h, ell)?;
            }
        }
    }
    checks.push(Check::new("sf-enumeration-strategies", agree, json!({})));

    let tables: Vec<DensityTable> =
        (0..20).map(|_| posterior::random_density(2, 6, &mut rng)).collect::<Result<_>>()?;
    let zeta = levels::fit_zeta(&tables, 3, 2)?;
    let mut within = true;
    for g in &tables {
        let b = levels::log_sup(g);
        for h in 1..=6 {
            within &= levels::sf_mass(g, 3, 2, h)? <= levels::sf_bound(zeta, b, 3, h) * (1.0 + INEQ_TOL);
        }
    }
    checks.push(Check::new("sf-mass-fitted-zeta", zeta.is_finite() && within, json!({ "zeta": zeta, "tables": 20 })));

    let mut covered_ok = true;
    let g = &tables[0];
    let b = levels::log_sup(g);
    for _ in 0..10 {
        let v = FrequencyMatrix::new(2, 3, 2, (0..6).map(|_| rng.gen_range(0..2)).collect())?;
        for h in 0..=6 {
            let r = levels::covered_center_mass(g, 3, 2, &v, h, zeta, b)?;
            covered_ok &= h >= r.kappa || r.lhs == 0.0;
        }
    }
    let zero = FrequencyMatrix::new(2, 3, 2, vec![0; 6])?;
    for h in 0..=6 {
        let r = levels::covered_center_mass(g, 3, 2, &zero, h, zeta, b)?;
        covered_ok &= (r.lhs - levels::sf_mass(g, 3, 2, h)?).abs() < ZERO_TOL && r.pass;
    }
    checks.push(Check::new("covered-centre-mass", covered_ok, json!({ "zeta": zeta })));

    let mut counts_ok = true;
    for q in 2..=3usize {
        for m in 1..=4usize {
            for k in 1..=3usize {
                if (q as u128).pow((m * k) as u32) > 1 << 20 {
                    continue;
                }
                let dp = levels::sf_counts_dp(q, m, k);
                let en = levels::sf_counts_enumerated(q, m, k)?;
                for h in 0..=m * k {
                    for l in 0..=m {
                        counts_ok &= dp[h][l] == num_bigint::BigInt::from(en[h][l]);
                        counts_ok &= levels::count_within(&dp[h][l], levels::sf_count_bound(q, k, m, l));
                    }
                }
            }
        }
    }
    checks.push(Check::new("sf-count-bound", counts_ok, json!({ "q": [2, 3], "m_max": 4, "k_max": 3 })));

    let mut trivial_ok = true;
    for h in 1..=4 {
        let cube = DensityTable::from_fn(3, 5, |x| {
            Complex64::new(if x[..h].iter().all(|&d| d == 0) { 3f64.powi(h as i32) } else { 0.0 }, 0.0)
        })?;
        trivial_ok &= levels::trivial_mass_check(&cube, h)?.pass;
    }
    let mut spike = vec![0.0; 64];
    spike[0] = 64.0;
    trivial_ok &= levels::trivial_mass_check(&DensityTable::from_real(2, 6, &spike)?, 3).is_err();
    checks.push(Check::new("trivial-mass", trivial_ok, json!({})));

    let point = DensityTable::from_real(2, 6, &spike)?;
    let prof = levels::boundedness_profile(&point, 0.1, 3)?;
    let uni = levels::boundedness_profile(&DensityTable::constant(2, 6, 1.0)?, 0.1, 3)?;
    checks.push(Check::new(
        "boundedness-profiles",
        !prof.all_pass && uni.all_pass,
        json!({ "point_mass_fitted_c": prof.fitted_c }),
    ));
    Ok(SuiteReport::new("levels", seed, checks))
}

/// Marks split evenly across the two columns of `[n]×[2]`.
pub fn split_marks(n: usize, h: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut marks = Vec::with_capacity(h);
    for col in 0..2 {
        let count = if col == 0 { h.div_ceil(2) } else { h / 2 };
        let mut verts: Vec<usize> = (0..n).collect();
        verts.shuffle(rng);
        marks.extend(verts[..count].iter().map(|&v| (v, col)));
    }
    marks
}

pub fn combinatorics_suite(seed: u64, trials: usize) -> Result<SuiteReport> {
    let mut rng = substream(seed, 0, Purpose::Auxiliary);
    let mut checks = Vec::new();
    for n in [20usize, 40] {
        let m = n / 10;
        for h in [2usize, 4, 6] {
            let q = CombinatorialQuery::new(n, m, 2, split_marks(n, h, &mut rng))?;
            let c = lemmas::combinatorial_mc(&q, trials, seed ^ (n * 31 + h) as u64, 0)?;
            checks.push(Check::new(format!("sf-image n={n} h={h}"), c.pass, serde_json::to_value(&c)?));
            let e = lemmas::eta_kappa_mc(&q, trials, seed ^ (n * 37 + h) as u64, 0)?;
            checks.push(Check::new(
                format!("eta-kappa n={n} h={h}"),
                e.pass,
                json!({ "fitted_c": e.fitted_c, "cells": e.cells.len(), "zero_region": e.zero_region_respected }),
            ));
        }
    }
    // Exact enumeration at n = 8 against the same estimators.
    for h in [2usize, 4] {
        let q = CombinatorialQuery::new(8, 2, 2, split_marks(8, h, &mut rng))?;
        let c = lemmas::combinatorial_mc(&q, trials, seed + h as u64, combinatorics::ENUMERATION_CAP)?;
        let exact = c.exact.as_ref().map(crate::rational::to_f64).unwrap_or(f64::NAN);
        let (lo, hi) = lemmas::wilson(c.hits, c.trials, 3.9);
        checks.push(Check::new(
            format!("sf-image exact n=8 h={h}"),
            c.pass && lo <= exact && exact <= hi && exact <= c.bound,
            json!({ "estimate": c.estimate, "exact": exact, "bound": c.bound }),
        ));
        let e = lemmas::eta_kappa_mc(&q, trials, seed + 100 + h as u64, combinatorics::ENUMERATION_CAP)?;
        let agree = e.cells.iter().all(|cell| {
            let p = cell.exact.as_ref().map_or(0.0, crate::rational::to_f64);
            let (lo, hi) = lemmas::wilson(cell.count, e.trials, 3.9);
            lo <= p && p <= hi
        });
        checks.push(Check::new(
            format!("eta-kappa exact n=8 h={h}"),
            e.pass && agree,
            json!({ "fitted_c": e.fitted_c, "cells": e.cells.len() }),
        ));
    }
    let single = CombinatorialQuery::new(20, 2, 2, vec![(3, 0)])?;
    let same_col = CombinatorialQuery::new(20, 2, 2, vec![(3, 0), (9, 0)])?;
    let z1 = lemmas::combinatorial_mc(&single, trials.min(10_000), seed, 0)?;
    let z2 = lemmas::combinatorial_mc(&same_col, trials.min(10_000), seed, 0)?;
    checks.push(Check::new("structural-zeros", z1.pass && z1.hits == 0 && z2.pass && z2.hits == 0, json!({})));
    Ok(SuiteReport::new("combinatorics", seed, checks))
}

pub fn sums_suite(seed: u64) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    let fixture = lemmas::level_bound_sum(1.0, 1.0, 20, 1_000_000, 2, 20, 0.1, 2)?;
    checks.push(Check::new("level-sum-fixture", fixture.within, json!({ "total": fixture.total, "delta_sq": fixture.delta_sq })));
    let mut monotone = true;
    for m in [1usize, 5, 20] {
        let mut prev = f64::INFINITY;
        for n in (1..=60).map(|i| i * 500) {
            let v = lemmas::level_bound_sum(2.0, 8.0, 20, n, 2, m, 0.1, 2)?.total;
            monotone &= v <= prev * (1.0 + 1e-12);
            prev = v;
        }
    }
    checks.push(Check::new("level-sum-monotone", monotone, json!({})));
    let mut u_ok = lemmas::u_bound(3.0, 4, 0, 100.0, 2) == 1.0;
    for h in 1..30 {
        let mut prev = 0.0;
        for s in 0..40 {
            let v = lemmas::u_bound(2.0, s, h, 1000.0, 2);
            u_ok &= v >= prev * (1.0 - 1e-12);
            prev = v;
        }
    }
    checks.push(Check::new("u-bound-monotone-in-s", u_ok, json!({})));
    let grid = lemmas::CaseworkGrid::default();
    let report = lemmas::casework_sweep(&grid);
    let anchor = report
        .cases
        .iter()
        .find(|c| c.region == lemmas::CaseworkRegion::C1a)
        .is_some_and(|c| c.max_log_q_minus_h <= 1e-9);
    checks.push(Check::new(
        "casework-sweep",
        report.fitted_c_rhs.is_finite() && anchor,
        serde_json::to_value(&report)?,
    ));
    Ok(SuiteReport::new("sums", seed, checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_at_small_scale() {
        for r in [
            posterior_suite(1, 8).unwrap(),
            levels_suite(1).unwrap(),
            combinatorics_suite(1, 2000).unwrap(),
            noise_suite(1, 4).unwrap(),
            sums_suite(1).unwrap(),
        ] {
            assert!(r.pass, "{}: {:?}", r.suite, r.failures());
        }
    }

    #[test]
    fn fourier_suite_flags_non_uniform_edges() {
        let inst = super::super::preset_instance("triangle-cut").unwrap();
        let mut spec = super::super::uniformize(&inst, super::super::SolutionKind::Lp, 1).unwrap();
        let r = fourier_suite(3, 6, std::slice::from_ref(&spec)).unwrap();
        assert!(r.pass, "{:?}", r.failures());
        assert_eq!(r.checks.last().unwrap().detail["edges"], json!(3));
        spec.edges[0].dist = crate::lp::LocalDistribution::point_mass(spec.q, spec.k, &[0, 1]);
        let r = fourier_suite(3, 2, &[spec]).unwrap();
        assert_eq!(r.failures().iter().map(|c| c.name.as_str()).collect::<Vec<_>>(), ["lifted-singletons"]);
    }

    #[test]
    fn fourier_check_passes() {
        let v = fourier_check(3, 4, 2).unwrap();
        assert_eq!(v["pass"], json!(true));
        assert!(fourier_check(1, 4, 2).is_err());
    }

    #[test]
    fn suite_names_parse() {
        assert_eq!("noise".parse::<Suite>().unwrap(), Suite::Noise);
        assert!("nope".parse::<Suite>().is_err());
    }
}
