//! Configuration, seeded runs and report emission for every stage of the
//! pipeline. The CLI is a thin shell over the functions here.

pub mod suites;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::csp::{self, Instance};
use crate::dihp::{self, Case, DihpSample};
use crate::error::{Error, Result};
use crate::lp::{self, LocalDistribution, LpSolution};
use crate::protocol::{self, Players, StreamConfig};
use crate::rational;
use crate::uniformize::{build_gadget_spec, GadgetSpec, DEFAULT_COPIES};

pub use suites::{fourier_check, lemma_verify, Check, Suite, SuiteReport};

/// Hex SHA-256 of the compact JSON form of `cfg`.
pub fn config_hash<T: Serialize>(cfg: &T) -> Result<String> {
    let bytes = serde_json::to_vec(cfg)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Adds `seed` and `config_hash` to a JSON object.
pub fn stamp(mut v: Value, seed: u64, hash: &str) -> Value {
    if let Value::Object(map) = &mut v {
        map.insert("seed".into(), json!(seed));
        map.insert("config_hash".into(), json!(hash));
        v
    } else {
        json!({ "seed": seed, "config_hash": hash, "result": v })
    }
}

/// Named instances usable without a file.
pub fn preset_instance(name: &str) -> Result<Instance> {
    match name {
        "triangle-cut" => Instance::uniform(&csp::cut(), 3, &[vec![0, 1], vec![1, 2], vec![2, 0]]),
        "cut-edge" => Instance::uniform(&csp::cut(), 2, &[vec![0, 1]]),
        "dicut-triangle" => Instance::uniform(&csp::dicut(), 3, &[vec![0, 1], vec![1, 2], vec![2, 0]]),
        "dicut-edge" => Instance::uniform(&csp::dicut(), 2, &[vec![0, 1]]),
        _ => Err(Error::invalid(format!("unknown preset `{name}`"))),
    }
}

/// A single DiCut edge with the LP point `P(10) = 1/2`, `P(00) = P(01) = P(11) = 1/6`.
pub fn dicut_sixths() -> Result<(Instance, LpSolution)> {
    let inst = preset_instance("dicut-edge")?;
    let local = LocalDistribution::new(
        2,
        2,
        vec![rational::ratio(1, 6), rational::ratio(1, 6), rational::ratio(1, 2), rational::ratio(1, 6)],
    )?;
    let objective = local.expectation(&csp::dicut());
    Ok((inst, LpSolution { locals: BTreeMap::from([(0, local)]), objective }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionKind {
    /// Optimal vertex from the simplex.
    #[default]
    Lp,
    /// Uniform over the best translate of the diagonal, per constraint.
    Line,
}

pub fn solution_for(inst: &Instance, kind: SolutionKind) -> Result<LpSolution> {
    match kind {
        SolutionKind::Lp => lp::solve_basic_lp(inst),
        SolutionKind::Line => Ok(lp::translated_line_solution(inst)),
    }
}

pub fn lp_solve(inst: &Instance, kind: SolutionKind) -> Result<Value> {
    let sol = solution_for(inst, kind)?;
    let report = lp::check_feasible(inst, &sol)?;
    Ok(json!({
        "objective": rational::format(&sol.objective),
        "feasible": report.feasible,
        "violations": report.violation,
        "solution": serde_json::to_value(&sol)?,
    }))
}

pub fn gap_find(inst: &Instance, cap: u128) -> Result<Value> {
    Ok(lp::find_gap_certificate(inst, cap)?.to_json())
}

pub fn uniformize(inst: &Instance, kind: SolutionKind, copies: usize) -> Result<GadgetSpec> {
    let sol = solution_for(inst, kind)?;
    let report = lp::check_feasible(inst, &sol)?;
    if !report.feasible {
        return Err(Error::invalid(format!("LP solution infeasible: {:?}", report.violation)));
    }
    let spec = build_gadget_spec(inst, &sol, copies)?;
    spec.validate()?;
    Ok(spec)
}

/// Emitted constraints as JSON lines `{"pred": …, "vars": […]}`.
pub fn stream_lines(sample: &DihpSample, spec: &GadgetSpec) -> Result<Vec<String>> {
    let inst = dihp::emit_instance(sample, spec)?;
    inst.constraints
        .iter()
        .map(|c| Ok(serde_json::to_string(&json!({ "pred": c.predicate.name, "vars": c.vars }))?))
        .collect()
}

/// `zero`, `fullinfo`, `counter`, `parity` or `stream:<file>`.
pub fn players_for(protocol: &str, spec: &GadgetSpec, m: usize) -> Result<Players> {
    Ok(match protocol {
        "zero" => protocol::zero_players(spec.t()),
        "fullinfo" => protocol::fullinfo_players(spec, m),
        "counter" => protocol::counter_players(spec, m),
        "parity" => protocol::parity_players(spec.t()),
        other => match other.strip_prefix("stream:") {
            Some(path) => {
                let cfg: StreamConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
                protocol::streaming_adapter(cfg.build()?, spec)
            }
            None => return Err(Error::invalid(format!("unknown protocol `{other}`"))),
        },
    })
}

pub fn sim_run(spec: &GadgetSpec, n: usize, m: usize, protocol_name: &str, trials: usize, seed: u64) -> Result<Value> {
    let players = players_for(protocol_name, spec, m)?;
    let adv = protocol::estimate_advantage(&players, spec, n, m, trials, seed)?;
    Ok(json!({
        "protocol": protocol_name,
        "advantage": adv.advantage,
        "ci": [adv.ci.0, adv.ci.1],
        "p_yes": adv.p_yes,
        "p_no": adv.p_no,
        "trials": adv.trials,
        "comm_bits": adv.comm_bits,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    LpSolve,
    GapFind,
    Uniformize,
    DihpGen,
    StreamEmit,
    SimRun,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::LpSolve => "lp-solve",
            Stage::GapFind => "gap-find",
            Stage::Uniformize => "uniformize",
            Stage::DihpGen => "dihp-gen",
            Stage::StreamEmit => "stream-emit",
            Stage::SimRun => "sim-run",
        }
    }

    fn requires(self) -> Option<Stage> {
        match self {
            Stage::LpSolve | Stage::GapFind => None,
            Stage::Uniformize => Some(Stage::LpSolve),
            Stage::DihpGen | Stage::SimRun => Some(Stage::Uniformize),
            Stage::StreamEmit => Some(Stage::DihpGen),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum InstanceSource {
    Preset { preset: String },
    Path { path: PathBuf },
    Inline { inline: Value },
}

impl InstanceSource {
    pub fn load(&self) -> Result<Instance> {
        match self {
            InstanceSource::Preset { preset } => preset_instance(preset),
            InstanceSource::Path { path } => Instance::from_json(&serde_json::from_str(&std::fs::read_to_string(path)?)?),
            InstanceSource::Inline { inline } => Instance::from_json(inline),
        }
    }
}

/// Optional shape assertions checked against the built gadget.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    pub q0: Option<usize>,
    pub k: Option<usize>,
    pub k_prime: Option<usize>,
    pub t: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    /// Assignments enumerated by `gap-find`.
    pub enumeration: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { enumeration: csp::DEFAULT_ENUM_CAP as u64 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// `sim-run` fails when the lower end of the advantage interval exceeds this.
    pub max_advantage: Option<f64>,
}

fn default_copies() -> usize {
    DEFAULT_COPIES
}

fn default_trials() -> usize {
    1000
}

fn default_protocol() -> String {
    "zero".into()
}

fn default_case() -> Case {
    Case::Yes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub stages: Vec<Stage>,
    pub instance: InstanceSource,
    #[serde(default)]
    pub solution: SolutionKind,
    #[serde(default = "default_copies")]
    pub copies: usize,
    pub n: usize,
    pub m: usize,
    #[serde(default = "default_case")]
    pub case: Case,
    #[serde(default = "default_protocol")]
    pub protocol: String,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub expect: Expect,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m > self.n {
            return Err(Error::invalid(format!("m = {} exceeds n = {}", self.m, self.n)));
        }
        if self.n == 0 || self.copies == 0 || self.caps.enumeration == 0 || self.trials == 0 {
            return Err(Error::invalid("n, copies, caps and trials must be positive"));
        }
        if self.stages.is_empty() {
            return Err(Error::invalid("no stages"));
        }
        for (i, s) in self.stages.iter().enumerate() {
            if self.stages[..i].contains(s) {
                return Err(Error::invalid(format!("stage `{}` listed twice", s.name())));
            }
            if let Some(req) = s.requires() {
                if !self.stages[..i].contains(&req) {
                    return Err(Error::invalid(format!("stage `{}` needs `{}` earlier", s.name(), req.name())));
                }
            }
        }
        if self.stages.contains(&Stage::SimRun) && self.trials < protocol::MIN_TRIALS {
            return Err(Error::invalid(format!("sim-run needs at least {} trials", protocol::MIN_TRIALS)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub stage: Stage,
    pub artifact: Option<PathBuf>,
    pub summary: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub seed: u64,
    pub config_hash: String,
    pub stages: Vec<StageReport>,
}

fn write_artifact(dir: Option<&Path>, name: &str, content: &str) -> Result<Option<PathBuf>> {
    let Some(dir) = dir else { return Ok(None) };
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    Ok(Some(path))
}

fn stage_err(stage: Stage, e: Error) -> Error {
    Error::Stage { stage: stage.name().into(), source: Box::new(e) }
}

fn check_expect(expect: &Expect, spec: &GadgetSpec) -> Result<()> {
    let pairs = [("q0", expect.q0, spec.q0), ("k", expect.k, spec.k), ("k_prime", expect.k_prime, spec.k_prime), ("t", expect.t, spec.t())];
    for (name, want, got) in pairs {
        if let Some(w) = want {
            if w != got {
                return Err(Error::invalid(format!("expected {name} = {w}, gadget has {got}")));
            }
        }
    }
    Ok(())
}

/// Runs the configured stages in order. Any failed invariant aborts with an
/// error naming the stage.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineReport> {
    cfg.validate()?;
    let hash = config_hash(&RunConfig { output_dir: None, ..cfg.clone() })?;
    let dir = cfg.output_dir.as_deref();
    let inst = cfg.instance.load()?;
    let mut spec: Option<GadgetSpec> = None;
    let mut sample: Option<DihpSample> = None;
    let mut reports = Vec::new();
    for &stage in &cfg.stages {
        let outcome = match stage {
            Stage::LpSolve => (|| {
                let v = lp_solve(&inst, cfg.solution)?;
                if v["feasible"] != json!(true) {
                    return Err(Error::invalid(format!("LP solution infeasible: {}", v["violations"])));
                }
                let text = serde_json::to_string_pretty(&stamp(v.clone(), cfg.seed, &hash))?;
                Ok((json!({ "objective": v["objective"] }), text, "json"))
            })(),
            Stage::GapFind => (|| {
                let v = gap_find(&inst, cfg.caps.enumeration as u128)?;
                let text = serde_json::to_string_pretty(&stamp(v.clone(), cfg.seed, &hash))?;
                Ok((json!({ "gamma": v["gamma"], "beta": v["beta"] }), text, "json"))
            })(),
            Stage::Uniformize => (|| {
                let g = uniformize(&inst, cfg.solution, cfg.copies)?;
                check_expect(&cfg.expect, &g)?;
                let v = serde_json::to_value(&g)?;
                let text = serde_json::to_string_pretty(&stamp(v, cfg.seed, &hash))?;
                let summary = json!({ "q": g.q, "k_prime": g.k_prime, "t": g.t(), "gamma": rational::format(&g.gamma) });
                spec = Some(g);
                Ok((summary, text, "json"))
            })(),
            Stage::DihpGen => (|| {
                let g = spec.as_ref().expect("validated order");
                let s = dihp::sample(g, cfg.n, cfg.m, cfg.case, cfg.seed)?;
                if s.case == Case::Yes && !dihp::verify_yes(&s, g)? {
                    return Err(Error::invalid("YES sample does not satisfy Z + Y = ΠX*"));
                }
                let v = serde_json::to_value(&s)?;
                let text = serde_json::to_string_pretty(&stamp(v, cfg.seed, &hash))?;
                let summary = json!({
                    "case": s.case,
                    "zero_row_fraction": rational::format(&dihp::zero_row_fraction(&s)),
                });
                sample = Some(s);
                Ok((summary, text, "json"))
            })(),
            Stage::StreamEmit => (|| {
                let g = spec.as_ref().expect("validated order");
                let s = sample.as_ref().expect("validated order");
                let lines = stream_lines(s, g)?;
                let probe = Arc::new(protocol::LookupStream { bits: 16, seed: cfg.seed });
                if !protocol::chained_equals_monolithic(probe, g, s)? {
                    return Err(Error::invalid("chained streaming players disagree with the monolithic stream"));
                }
                let mut text = serde_json::to_string(&json!({ "seed": cfg.seed, "config_hash": hash, "constraints": lines.len() }))?;
                for l in &lines {
                    text.push('\n');
                    text.push_str(l);
                }
                text.push('\n');
                Ok((json!({ "constraints": lines.len() }), text, "jsonl"))
            })(),
            Stage::SimRun => (|| {
                let g = spec.as_ref().expect("validated order");
                let v = sim_run(g, cfg.n, cfg.m, &cfg.protocol, cfg.trials, cfg.seed)?;
                if let Some(max) = cfg.tolerances.max_advantage {
                    let lo = v["ci"][0].as_f64().unwrap_or(0.0);
                    if lo > max {
                        return Err(Error::invalid(format!("advantage interval starts at {lo}, above {max}")));
                    }
                }
                let text = serde_json::to_string_pretty(&stamp(v.clone(), cfg.seed, &hash))?;
                Ok((v, text, "json"))
            })(),
        };
        let (summary, text, ext) = outcome.map_err(|e| stage_err(stage, e))?;
        let artifact =
            write_artifact(dir, &format!("{}.{ext}", stage.name()), &text).map_err(|e| stage_err(stage, e))?;
        reports.push(StageReport { stage, artifact, summary });
    }
    let report = PipelineReport { seed: cfg.seed, config_hash: hash, stages: reports };
    write_artifact(dir, "report.json", &serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle_config(dir: Option<PathBuf>) -> RunConfig {
        RunConfig::from_json(
            &json!({
                "seed": 7,
                "stages": ["lp-solve", "gap-find", "uniformize", "dihp-gen", "stream-emit", "sim-run"],
                "instance": { "preset": "triangle-cut" },
                "copies": 2,
                "n": 30,
                "m": 3,
                "trials": 200,
                "expect": { "q0": 2, "k": 2, "k_prime": 3, "t": 6 },
                "tolerances": { "max_advantage": 0.0 },
                "output_dir": dir,
            })
            .to_string(),
        )
        .unwrap()
    }

    #[test]
    fn triangle_pipeline_runs() {
        let r = run_pipeline(&triangle_config(None)).unwrap();
        assert_eq!(r.stages.len(), 6);
        assert_eq!(r.stages[1].summary["beta"], json!("2/3"));
        assert_eq!(r.stages[2].summary["t"], json!(6));
    }

    #[test]
    fn reruns_are_byte_identical() {
        let a = tempdir("a");
        let b = tempdir("b");
        run_pipeline(&triangle_config(Some(a.clone()))).unwrap();
        run_pipeline(&triangle_config(Some(b.clone()))).unwrap();
        for name in ["lp-solve.json", "uniformize.json", "dihp-gen.json", "stream-emit.jsonl", "sim-run.json"] {
            let x = std::fs::read(a.join(name)).unwrap();
            let y = std::fs::read(b.join(name)).unwrap();
            assert_eq!(x, y, "{name}");
            assert!(String::from_utf8(x).unwrap().contains("config_hash"));
        }
        std::fs::remove_dir_all(a).ok();
        std::fs::remove_dir_all(b).ok();
    }

    fn tempdir(tag: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("cspgap-harness-{tag}-{}", std::process::id()));
        std::fs::remove_dir_all(&d).ok();
        d
    }

    #[test]
    fn validation() {
        let bad = json!({
            "seed": 1, "stages": ["lp-solve"], "instance": { "preset": "triangle-cut" }, "n": 3, "m": 5
        });
        assert!(RunConfig::from_json(&bad.to_string()).is_err());
        let unknown = json!({
            "seed": 1, "stages": ["lp-solve"], "instance": { "preset": "triangle-cut" }, "n": 5, "m": 3, "colour": 1
        });
        assert!(RunConfig::from_json(&unknown.to_string()).is_err());
        let order = json!({
            "seed": 1, "stages": ["dihp-gen"], "instance": { "preset": "triangle-cut" }, "n": 5, "m": 3
        });
        assert!(RunConfig::from_json(&order.to_string()).is_err());
    }

    #[test]
    fn failing_stage_is_named() {
        let mut cfg = triangle_config(None);
        cfg.expect.t = Some(5);
        match run_pipeline(&cfg) {
            Err(Error::Stage { stage, .. }) => assert_eq!(stage, "uniformize"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hash_changes_with_config() {
        let a = triangle_config(None);
        let mut b = a.clone();
        b.seed = 8;
        assert_ne!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
        assert_eq!(config_hash(&a).unwrap(), config_hash(&a.clone()).unwrap());
    }

    #[test]
    fn dicut_sixths_is_feasible() {
        let (inst, sol) = dicut_sixths().unwrap();
        assert!(lp::check_feasible(&inst, &sol).unwrap().feasible);
        let g = build_gadget_spec(&inst, &sol, 1).unwrap();
        assert_eq!(g.q, 3);
        g.validate().unwrap();
    }
}
