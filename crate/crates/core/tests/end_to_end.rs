use std::sync::Arc;

use proptest::prelude::*;

use cspgap_core::csp::{self, DEFAULT_ENUM_CAP};
use cspgap_core::dihp::{self, Case, Coupling};
use cspgap_core::fourier::{density_from_dist, dft};
use cspgap_core::harness::{self, RunConfig, SolutionKind};
use cspgap_core::lp;
use cspgap_core::protocol::{self, LookupStream};
use cspgap_core::rational;
use cspgap_core::uniformize::build_gadget_spec;

#[test]
fn dicut_triangle_gadget_round_trip() {
    let inst = harness::preset_instance("dicut-triangle").unwrap();
    let cert = lp::find_gap_certificate(&inst, DEFAULT_ENUM_CAP).unwrap();
    assert!(cert.beta <= cert.gamma);
    let spec = harness::uniformize(&inst, SolutionKind::Lp, 3).unwrap();
    assert_eq!(spec.gamma, cert.gamma);
    let text = serde_json::to_string(&spec).unwrap();
    let back: cspgap_core::uniformize::GadgetSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(back, spec);
    for e in &spec.edges {
        let s = dft(&density_from_dist(spec.q, spec.k, &e.dist.to_f64()).unwrap()).unwrap();
        assert!((s.coeffs[0].re - 1.0).abs() < 1e-12);
    }
}

#[test]
fn emitted_yes_instance_is_satisfied_by_the_plant() {
    let spec = harness::uniformize(&harness::preset_instance("triangle-cut").unwrap(), SolutionKind::Lp, 4).unwrap();
    for seed in 0..20 {
        let s = dihp::sample(&spec, 60, 6, Case::Yes, seed).unwrap();
        assert!(dihp::verify_yes(&s, &spec).unwrap());
        if let Some(v) = dihp::planted_value(&s, &spec).unwrap() {
            assert_eq!(v, rational::int(1));
        }
        let inst = dihp::emit_instance(&s, &spec).unwrap();
        assert_eq!(harness::stream_lines(&s, &spec).unwrap().len(), inst.len());
    }
}

#[test]
fn streaming_players_match_monolithic_runs() {
    let spec = harness::uniformize(&harness::preset_instance("triangle-cut").unwrap(), SolutionKind::Line, 2).unwrap();
    for i in 0..5 {
        let c = Coupling::sample(&spec, 24, 2, i).unwrap();
        let stream = Arc::new(LookupStream { bits: 12, seed: i });
        assert!(protocol::chained_equals_monolithic(stream.clone(), &spec, &c.no(24, 2)).unwrap());
        assert!(protocol::chained_equals_monolithic(stream, &spec, &c.yes(24, 2)).unwrap());
    }
}

#[test]
fn pipeline_reports_every_stage() {
    let dir = std::env::temp_dir().join(format!("cspgap-e2e-{}", std::process::id()));
    let cfg = RunConfig::from_json(
        &serde_json::json!({
            "seed": 3,
            "stages": ["lp-solve", "gap-find", "uniformize", "dihp-gen", "stream-emit", "sim-run"],
            "instance": { "preset": "dicut-triangle" },
            "copies": 1,
            "n": 20,
            "m": 2,
            "trials": 100,
            "output_dir": dir,
        })
        .to_string(),
    )
    .unwrap();
    let report = harness::run_pipeline(&cfg).unwrap();
    assert_eq!(report.stages.len(), 6);
    for name in ["lp-solve.json", "gap-find.json", "uniformize.json", "dihp-gen.json", "stream-emit.jsonl", "sim-run.json"] {
        let text = std::fs::read_to_string(dir.join(name)).unwrap();
        assert!(text.contains(&report.config_hash), "{name}");
    }
    std::fs::remove_dir_all(dir).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lifted_single_edges_are_one_wise_uniform(a in 0i64..=6, b in 0i64..=6, c in 0i64..=6) {
        prop_assume!(a + b + c <= 6);
        let d = 6 - a - b - c;
        let local = lp::LocalDistribution::new(
            2,
            2,
            vec![rational::ratio(a, 6), rational::ratio(b, 6), rational::ratio(c, 6), rational::ratio(d, 6)],
        ).unwrap();
        let inst = harness::preset_instance("dicut-edge").unwrap();
        let objective = local.expectation(&csp::dicut());
        let sol = lp::LpSolution { locals: [(0, local)].into(), objective: objective.clone() };
        let spec = build_gadget_spec(&inst, &sol, 1).unwrap();
        prop_assert!(spec.validate().is_ok());
        prop_assert_eq!(&spec.gamma, &objective);
        let s = dihp::sample_no(&spec, 8, 2, a as u64).unwrap();
        prop_assert_eq!(s.signals.len(), 1);
    }
}
