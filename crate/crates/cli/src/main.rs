use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cspgap_core::csp::Instance;
use cspgap_core::dihp::{self, Case, DihpSample};
use cspgap_core::harness::{self, RunConfig, SolutionKind, Suite};
use cspgap_core::lemmas::DEFAULT_TRIALS;
use cspgap_core::uniformize::{GadgetSpec, DEFAULT_COPIES};
use cspgap_core::{Error, Result};

#[derive(Parser)]
#[command(name = "cspgap", version, about = "Integrality gaps to streaming instances, with desk-scale verifiers")]
struct Cli {
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solution {
    Lp,
    Line,
}

impl From<Solution> for SolutionKind {
    fn from(s: Solution) -> Self {
        match s {
            Solution::Lp => SolutionKind::Lp,
            Solution::Line => SolutionKind::Line,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Yes,
    No,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Posterior,
    Levels,
    Combinatorics,
    Noise,
    Sums,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Posterior => Suite::Posterior,
            SuiteArg::Levels => Suite::Levels,
            SuiteArg::Combinatorics => Suite::Combinatorics,
            SuiteArg::Noise => Suite::Noise,
            SuiteArg::Sums => Suite::Sums,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the basic LP of an instance (a JSON file or a preset name).
    LpSolve {
        instance: String,
        #[arg(long, value_enum, default_value = "lp")]
        solution: Solution,
    },
    /// Certify (γ, β) = (LP value, brute-force optimum).
    GapFind {
        instance: String,
        #[arg(long, default_value_t = 1 << 24)]
        cap: u128,
    },
    /// Lift an LP solution to a one-wise uniform gadget.
    Uniformize {
        instance: String,
        #[arg(long, default_value_t = DEFAULT_COPIES)]
        copies: usize,
        #[arg(long, value_enum, default_value = "lp")]
        solution: Solution,
    },
    /// Sample a YES or NO input.
    DihpGen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum)]
        case: CaseArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Emit the constraint stream of a sample as JSON lines.
    StreamEmit {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        sample: PathBuf,
    },
    /// Residuals of the transform identities on one random table.
    FourierCheck {
        #[arg(long)]
        q: usize,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run one verification suite.
    LemmaVerify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
    },
    /// Estimate the distinguishing advantage of a protocol.
    SimRun {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        m: usize,
        /// zero, fullinfo, counter, parity or stream:<file>.
        #[arg(long, default_value = "zero")]
        protocol: String,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a staged pipeline from a JSON config.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load_instance(arg: &str) -> Result<Instance> {
    if Path::new(arg).is_file() {
        Instance::from_json(&serde_json::from_str(&fs::read_to_string(arg)?)?)
    } else {
        harness::preset_instance(arg)
    }
}

fn load_spec(path: &Path) -> Result<GadgetSpec> {
    let spec: GadgetSpec = serde_json::from_str(&fs::read_to_string(path)?)?;
    spec.validate()?;
    Ok(spec)
}

fn stamped(v: Value, seed: u64, args: &Value) -> Result<String> {
    let hash = harness::config_hash(args)?;
    Ok(serde_json::to_string_pretty(&harness::stamp(v, seed, &hash))? + "\n")
}

/// Returns the text to emit and whether every hard check passed.
fn run(cmd: Command) -> Result<(String, bool)> {
    Ok(match cmd {
        Command::LpSolve { instance, solution } => {
            let inst = load_instance(&instance)?;
            let v = harness::lp_solve(&inst, solution.into())?;
            let ok = v["feasible"] == json!(true);
            (stamped(v, 0, &json!({ "lp-solve": inst.to_json() }))?, ok)
        }
        Command::GapFind { instance, cap } => {
            let inst = load_instance(&instance)?;
            let v = harness::gap_find(&inst, cap)?;
            (stamped(v, 0, &json!({ "gap-find": inst.to_json(), "cap": cap.to_string() }))?, true)
        }
        Command::Uniformize { instance, copies, solution } => {
            let inst = load_instance(&instance)?;
            let spec = harness::uniformize(&inst, solution.into(), copies)?;
            (serde_json::to_string_pretty(&spec)? + "\n", true)
        }
        Command::DihpGen { spec, n, m, case, seed } => {
            let spec = load_spec(&spec)?;
            let case = match case {
                CaseArg::Yes => Case::Yes,
                CaseArg::No => Case::No,
            };
            let sample = dihp::sample(&spec, n, m, case, seed)?;
            let args = json!({ "dihp-gen": spec, "n": n, "m": m, "case": case });
            (stamped(serde_json::to_value(&sample)?, seed, &args)?, true)
        }
        Command::StreamEmit { spec, sample } => {
            let spec = load_spec(&spec)?;
            let sample: DihpSample = serde_json::from_str(&fs::read_to_string(sample)?)?;
            let lines = harness::stream_lines(&sample, &spec)?;
            let hash = harness::config_hash(&json!({ "stream-emit": spec, "sample": sample }))?;
            let mut text = serde_json::to_string(&json!({ "seed": sample.seed, "config_hash": hash, "constraints": lines.len() }))?;
            text.push('\n');
            for l in lines {
                text.push_str(&l);
                text.push('\n');
            }
            (text, true)
        }
        Command::FourierCheck { q, n, seed } => {
            let v = harness::fourier_check(q, n, seed)?;
            let ok = v["pass"] == json!(true);
            (stamped(v, seed, &json!({ "fourier-check": { "q": q, "N": n } }))?, ok)
        }
        Command::LemmaVerify { suite, seed, trials } => {
            let suite: Suite = suite.into();
            let report = harness::lemma_verify(suite, seed, trials)?;
            let ok = report.pass;
            let args = json!({ "lemma-verify": suite, "trials": trials });
            (stamped(serde_json::to_value(&report)?, seed, &args)?, ok)
        }
        Command::SimRun { spec, n, m, protocol, trials, seed } => {
            let spec = load_spec(&spec)?;
            let v = harness::sim_run(&spec, n, m, &protocol, trials, seed)?;
            let args = json!({ "sim-run": spec, "n": n, "m": m, "protocol": protocol, "trials": trials });
            (stamped(v, seed, &args)?, true)
        }
        Command::Pipeline { config } => {
            let cfg = RunConfig::from_json(&fs::read_to_string(config)?)?;
            let report = harness::run_pipeline(&cfg)?;
            (serde_json::to_string_pretty(&report)? + "\n", true)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli.command).and_then(|(text, ok)| {
        match &cli.out {
            Some(path) => fs::write(path, &text).map_err(Error::from)?,
            None => print!("{text}"),
        }
        Ok(ok)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
