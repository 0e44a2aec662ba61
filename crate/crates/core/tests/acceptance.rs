//! The ten acceptance criteria, each at its stated tolerance and time budget.
//! Prints one PASS/FAIL line per criterion and exits nonzero if any fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cspgap_core::csp::{self, Constraint, Instance, Predicate, DEFAULT_ENUM_CAP};
use cspgap_core::dihp::{self, Coupling};
use cspgap_core::harness::{self, suites, SuiteReport};
use cspgap_core::lp::{self, LocalDistribution, LpSolution};
use cspgap_core::protocol::{self, FiniteTriple, LookupStream, StreamFn};
use cspgap_core::rational::{self, ratio, Rational};
use cspgap_core::rng::child_seed;
use cspgap_core::uniformize::{self, build_gadget_spec, GadgetSpec};
use cspgap_core::Result;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn from_suite(r: &SuiteReport) -> Result<Outcome> {
    let failed: Vec<&str> = r.failures().iter().map(|c| c.name.as_str()).collect();
    let detail = if failed.is_empty() {
        format!("{} checks", r.checks.len())
    } else {
        format!("failed: {}", failed.join(", "))
    };
    outcome(r.pass, detail)
}

fn triangle() -> Instance {
    harness::preset_instance("triangle-cut").unwrap()
}

fn triangle_spec(copies: usize) -> Result<GadgetSpec> {
    let inst = triangle();
    build_gadget_spec(&inst, &lp::solve_basic_lp(&inst)?, copies)
}

fn random_instance(rng: &mut ChaCha8Rng) -> Result<Instance> {
    let n = rng.gen_range(2..=6);
    let count = rng.gen_range(1..=8);
    let mut cs = Vec::with_capacity(count);
    for _ in 0..count {
        let table: Vec<bool> = (0..4).map(|_| rng.gen_bool(0.5)).collect();
        let a = rng.gen_range(0..n);
        let b = (a + rng.gen_range(1..n)) % n;
        cs.push(Constraint::new(Predicate::new("rand", 2, 2, table)?, vec![a, b])?);
    }
    Instance::new(2, n, cs)
}

fn lp_sandwich() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let one = rational::int(1);
    let mut bad = Vec::new();
    for i in 0..50 {
        let inst = random_instance(&mut rng)?;
        let brute = csp::opt_brute(&inst, DEFAULT_ENUM_CAP)?;
        let sol = lp::solve_basic_lp(&inst)?;
        let ok = lp::check_feasible(&inst, &sol)?.feasible
            && lp::lp_value(&inst, &sol)? == sol.objective
            && brute.opt <= sol.objective
            && sol.objective <= one;
        if !ok {
            bad.push(i);
        }
    }
    outcome(bad.is_empty(), format!("50 instances, violations at {bad:?}"))
}

fn gap_anchor() -> Result<Outcome> {
    let cert = lp::find_gap_certificate(&triangle(), DEFAULT_ENUM_CAP)?;
    let feasible = lp::check_feasible(&cert.instance, &cert.lp_solution)?.feasible;
    let beta_hit = csp::value(&cert.instance, &cert.argmax)? == cert.beta;
    let pass = feasible && beta_hit && cert.gamma == rational::int(1) && cert.beta == ratio(2, 3);
    outcome(pass, format!("(gamma, beta) = ({}, {})", rational::format(&cert.gamma), rational::format(&cert.beta)))
}

fn numeric_anchors() -> Result<Outcome> {
    let half = ratio(1, 2);
    let dicut = csp::width(&csp::dicut());
    let xor3 = csp::width(&csp::kxor(3, false));
    let rho = csp::rho_exactly(2, 3)?;
    let gamma = ratio(3, 4);
    let curve = (ratio(3, 1) * &gamma - rational::int(1)) / rational::int(2);
    let pass = dicut == half && xor3 == half && rho == ratio(4, 9) && curve == ratio(5, 8);
    outcome(
        pass,
        format!(
            "width(dicut) = {}, width(3xor) = {}, rho = {}, beta(3/4) = {}",
            rational::format(&dicut),
            rational::format(&xor3),
            rational::format(&rho),
            rational::format(&curve)
        ),
    )
}

/// Every DiCut-edge LP point whose probabilities are multiples of `1/d`.
fn dicut_grid(d: i64) -> Result<Vec<(Instance, LpSolution)>> {
    let inst = harness::preset_instance("dicut-edge")?;
    let mut out = Vec::new();
    for a in 0..=d {
        for b in 0..=d - a {
            for c in 0..=d - a - b {
                let probs = vec![ratio(a, d), ratio(b, d), ratio(c, d), ratio(d - a - b - c, d)];
                let local = LocalDistribution::new(2, 2, probs)?;
                let objective = local.expectation(&csp::dicut());
                out.push((inst.clone(), LpSolution { locals: BTreeMap::from([(0, local)]), objective }));
            }
        }
    }
    Ok(out)
}

fn one_wise_lift() -> Result<Outcome> {
    let tri = triangle();
    let mut cases = vec![
        (tri.clone(), lp::solve_basic_lp(&tri)?),
        (tri.clone(), lp::translated_line_solution(&tri)),
        harness::dicut_sixths()?,
    ];
    for d in 1..=6 {
        cases.extend(dicut_grid(d)?);
    }
    let mut failures = 0;
    for (inst, sol) in &cases {
        let marginals = uniformize::compute_marginals(inst, sol)?;
        let lift = uniformize::build_lift(&marginals.per_var)?;
        let u = ratio(1, lift.q as i64);
        let mut ok = true;
        for (i, c) in inst.constraints.iter().enumerate() {
            let y0 = sol.local_for(inst, i).expect("feasible");
            let y = uniformize::lift_distribution(y0, &lift, &c.vars)?;
            ok &= (0..y.k).all(|l| y.marginal(l).iter().all(|p| *p == u));
            ok &= &uniformize::pushforward(&y, &lift, &c.vars) == y0;
        }
        ok &= build_gadget_spec(inst, sol, 2)?.validate().is_ok();
        failures += usize::from(!ok);
    }
    outcome(failures == 0, format!("{} gadgets, {failures} failures", cases.len()))
}

fn fourier() -> Result<Outcome> {
    let (inst, sol) = harness::dicut_sixths()?;
    let dicut_tri = harness::preset_instance("dicut-triangle")?;
    let gadgets = vec![
        triangle_spec(2)?,
        build_gadget_spec(&inst, &sol, 1)?,
        build_gadget_spec(&dicut_tri, &lp::solve_basic_lp(&dicut_tri)?, 1)?,
    ];
    from_suite(&suites::fourier_suite(SEED, 20, &gadgets)?)
}

fn noise() -> Result<Outcome> {
    from_suite(&suites::noise_suite(SEED, 50)?)
}

fn posterior() -> Result<Outcome> {
    from_suite(&suites::posterior_suite(SEED, 50)?)
}

fn combinatorics() -> Result<Outcome> {
    from_suite(&suites::combinatorics_suite(SEED, 100_000)?)
}

fn yes_statistics() -> Result<Outcome> {
    let spec = triangle_spec(2)?;
    let (n, m, samples) = (200, 10, 10_000usize);
    let (mut zeros, mut rows) = (Rational::from_integer(0.into()), 0usize);
    let (mut planted_sum, mut planted_count) = (0.0, 0usize);
    let mut consistent = true;
    for i in 0..samples {
        let s = dihp::sample_yes(&spec, n, m, child_seed(SEED, i as u64))?;
        consistent &= dihp::verify_yes(&s, &spec)?;
        let r = s.signals.len() * m;
        zeros += dihp::zero_row_fraction(&s) * rational::int(r as i64);
        rows += r;
        if let Some(v) = dihp::planted_value(&s, &spec)? {
            planted_sum += rational::to_f64(&v);
            planted_count += 1;
        }
    }
    let p = 1.0 / (spec.q.pow(spec.k as u32) as f64);
    let frac = rational::to_f64(&zeros) / rows as f64;
    let sigma = (p * (1.0 - p) / rows as f64).sqrt();
    let mean = planted_sum / planted_count as f64;
    let gamma = rational::to_f64(&spec.gamma);
    let shape = spec.q == 2 && spec.k == 2 && spec.k_prime == 3 && spec.t() == 6;
    let pass = shape && consistent && (frac - p).abs() <= 3.0 * sigma && (mean - gamma).abs() <= 0.05;
    outcome(
        pass,
        format!("zero rows {frac:.5} vs {p} (3 sigma = {:.5}), planted mean {mean:.4} vs gamma {gamma}", 3.0 * sigma),
    )
}

fn protocols() -> Result<Outcome> {
    let spec = triangle_spec(2)?;
    let adv = protocol::estimate_advantage(&protocol::zero_players(spec.t()), &spec, 40, 4, 2000, SEED)?;
    let zero_ok = adv.ci.0 <= 0.0 && 0.0 <= adv.ci.1;

    let cut_edge = harness::preset_instance("cut-edge")?;
    let t1 = build_gadget_spec(&cut_edge, &lp::translated_line_solution(&cut_edge), 1)?;
    let (dinst, dsol) = harness::dicut_sixths()?;
    let t1_dicut = build_gadget_spec(&dinst, &dsol, 1)?;
    let mut base_ok = true;
    for (g, n) in [(&t1, 3), (&t1_dicut, 2)] {
        let families = [
            protocol::parity_players(1),
            protocol::fullinfo_players(g, 1),
            protocol::counter_players(g, 1),
            protocol::streaming_adapter(std::sync::Arc::new(LookupStream { bits: 8, seed: SEED }), g),
        ];
        for players in &families {
            base_ok &= protocol::exact_transcript_tvd(players, g, n, 1)?.tvd == rational::int(0);
        }
    }

    let mut chain_ok = true;
    for i in 0..20u64 {
        let stream: std::sync::Arc<dyn StreamFn> = std::sync::Arc::new(LookupStream { bits: 16, seed: SEED + i });
        let c = Coupling::sample(&spec, 30, 3, child_seed(SEED, i))?;
        let sample = if i % 2 == 0 { c.yes(30, 3) } else { c.no(30, 3) };
        chain_ok &= protocol::chained_equals_monolithic(stream, &spec, &sample)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut ineq_ok = true;
    for _ in 0..100 {
        let t = FiniteTriple::random(&mut rng);
        let (l, r) = t.data_processing()?;
        ineq_ok &= l <= r;
        let (l, r) = t.substitution()?;
        ineq_ok &= l <= r;
    }
    outcome(
        zero_ok && base_ok && chain_ok && ineq_ok,
        format!(
            "zero-advantage ci [{:.4}, {:.4}], base case {base_ok}, chaining {chain_ok}, triples {ineq_ok}",
            adv.ci.0, adv.ci.1
        ),
    )
}

type Criterion = (&'static str, Duration, fn() -> Result<Outcome>);

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let criteria: [Criterion; 10] = [
        ("lp-sandwich", secs(60), lp_sandwich),
        ("gap-anchor", secs(60), gap_anchor),
        ("numeric-anchors", secs(1), numeric_anchors),
        ("one-wise-lift", secs(5), one_wise_lift),
        ("fourier-suite", secs(60), fourier),
        ("noise-suite", secs(120), noise),
        ("posterior-formula", secs(120), posterior),
        ("combinatorial-bounds", secs(300), combinatorics),
        ("yes-statistics", secs(300), yes_statistics),
        ("protocol-suite", secs(300), protocols),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed <= *budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let status = if pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {name:<22} {status}  {:.2}s (budget {}s)  {detail}",
            i + 1,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        failed += usize::from(!pass);
    }
    println!("acceptance: {} of 10 passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
