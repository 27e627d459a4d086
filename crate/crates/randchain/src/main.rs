//! Batch front door: model catalog, experiment runner, inequality sweeps,
//! and a self-checking reproduction suite. All stochastic commands require
//! an explicit seed; identical configurations produce byte-identical
//! artifacts regardless of worker count.

use clap::{Args, Parser, Subcommand};
use randchain::error::{Error, Result};
use randchain::linalg::StochasticVector;
use randchain::models::{self, ChainModel};
use randchain::rng::StreamKey;
use randchain::{flow, properties, sim, verify};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "randchain", version, about = "Simulation and verification harness for chains of random stochastic matrices")]
struct Cli {
    /// Size of the worker pool (defaults to the number of cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List or describe the canned models.
    Models {
        #[command(subcommand)]
        action: ModelsAction,
    },
    /// Run the built-in reproduction suite and print a pass/fail table.
    Reproduce {
        /// Scenario name, or all scenarios when omitted.
        suite: Option<String>,
        /// Use full-scale trial counts (slower).
        #[arg(long)]
        full: bool,
    },
    /// Consensus and ergodicity verdicts for a model.
    Simulate(SimulateArgs),
    /// Cut-flow accumulation and divergence classification.
    Flow(FlowArgs),
    /// Steady state and feedback-grade checks.
    Check(CheckArgs),
    /// Randomized inequality sweeps.
    Verify(VerifyArgs),
    /// Accumulation times and geometric decay audit of the weighted variance.
    Decay(DecayArgs),
    /// Execute a command described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum ModelsAction {
    List,
    Describe { name: String },
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct ModelRef {
    /// Canned model name (see `models list`).
    #[arg(long, conflicts_with = "model")]
    canned: Option<String>,
    /// Path to a model JSON file.
    #[arg(long)]
    model: Option<PathBuf>,
}

impl ModelRef {
    fn load(&self) -> Result<ChainModel> {
        match (&self.canned, &self.model) {
            (Some(name), None) => models::canned(name),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
                ChainModel::from_json(&text)
            }
            _ => Err(Error::Invalid("provide exactly one of --canned or --model".into())),
        }
    }
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelRef,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 1000)]
    horizon: u64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Comma-separated restart times for the ergodicity probes.
    #[arg(long, default_value = "0,1")]
    probes: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct FlowArgs {
    #[command(flatten)]
    model: ModelRef,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    horizon: u64,
    /// Trailing window for the divergence classifier (default horizon/4).
    #[arg(long)]
    window: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelRef,
    #[arg(long)]
    seed: u64,
    /// Target feedback constant; when omitted only the tight constants are
    /// reported.
    #[arg(long)]
    gamma: Option<f64>,
    /// Horizon of per-step laws to inspect.
    #[arg(long, default_value_t = 64)]
    k_horizon: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct VerifyArgs {
    /// Inequality id: flow_bound, uniform_contraction, cubic_spread_bound,
    /// scalar_cubic, or disagreement_accumulation.
    #[arg(long)]
    lemma: String,
    #[arg(long, default_value_t = 10_000)]
    cases: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct DecayArgs {
    #[command(flatten)]
    model: ModelRef,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Weak feedback constant; measured from the model when omitted.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 10)]
    q_max: usize,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// Search horizon for the accumulation times.
    #[arg(long, default_value_t = 200)]
    horizon: u64,
    /// Horizon of per-step laws for the property checks.
    #[arg(long, default_value_t = 64)]
    k_horizon: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Config file form of the dispatchable commands.
#[derive(Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
enum RunConfig {
    Simulate(SimulateArgs),
    Flow(FlowArgs),
    Check(CheckArgs),
    Verify(VerifyArgs),
    Decay(DecayArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: worker pool already initialized");
            return ExitCode::from(2);
        }
    }
    let outcome = match cli.command {
        Command::Models { action } => cmd_models(action),
        Command::Reproduce { suite, full } => cmd_reproduce(suite.as_deref(), full),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Flow(args) => cmd_flow(&args),
        Command::Check(args) => cmd_check(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Decay(args) => cmd_decay(&args),
        Command::Run { config } => cmd_run(&config),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

// ---------------------------------------------------------------------------
// Artifact plumbing

/// Hash of the scientific configuration: the output location does not
/// affect results, so it is excluded and runs differing only in `--out`
/// produce identical artifacts.
fn config_hash<T: Serialize>(config: &T) -> String {
    let mut value = serde_json::to_value(config).expect("config serializes");
    if let Some(map) = value.as_object_mut() {
        map.remove("out");
    }
    let mut hasher = Sha256::new();
    hasher.update(value.to_string().as_bytes());
    format!("{:x}", hasher.finalize())
}

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    command: &'a str,
    config: &'a T,
    config_sha256: String,
    package_version: &'static str,
    wall_ms: u128,
}

struct Emitter {
    out: Option<PathBuf>,
    hash: String,
    started: std::time::Instant,
}

impl Emitter {
    fn new<T: Serialize>(out: &Option<PathBuf>, config: &T) -> Result<Self> {
        if let Some(dir) = out {
            std::fs::create_dir_all(dir)
                .map_err(|e| Error::Invalid(format!("{}: {e}", dir.display())))?;
        }
        Ok(Emitter {
            out: out.clone(),
            hash: config_hash(config),
            started: std::time::Instant::now(),
        })
    }

    /// Writes a JSON verdict wrapped with the config hash; prints to stdout
    /// when no output directory was given.
    fn verdict<T: Serialize>(&self, name: &str, payload: &T) -> Result<()> {
        #[derive(Serialize)]
        struct Wrapped<'a, T: Serialize> {
            config_sha256: &'a str,
            #[serde(flatten)]
            payload: &'a T,
        }
        let text = serde_json::to_string_pretty(&Wrapped {
            config_sha256: &self.hash,
            payload,
        })
        .expect("payload serializes");
        match &self.out {
            Some(dir) => write_file(&dir.join(name), &text),
            None => {
                println!("{text}");
                Ok(())
            }
        }
    }

    /// Writes a CSV artifact (full precision) when an output directory is set.
    fn csv(&self, name: &str, header: &str, rows: &[Vec<f64>]) -> Result<()> {
        let Some(dir) = &self.out else { return Ok(()) };
        let mut text = String::new();
        text.push_str(&format!("# config_sha256={}\n{header}\n", self.hash));
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        write_file(&dir.join(name), &text)
    }

    fn manifest<T: Serialize>(&self, command: &str, config: &T) -> Result<()> {
        let Some(dir) = &self.out else { return Ok(()) };
        let manifest = Manifest {
            command,
            config,
            config_sha256: self.hash.clone(),
            package_version: env!("CARGO_PKG_VERSION"),
            wall_ms: self.started.elapsed().as_millis(),
        };
        write_file(
            &dir.join("manifest.json"),
            &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
        )
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

fn parse_probes(text: &str) -> Result<Vec<u64>> {
    let probes: std::result::Result<Vec<u64>, _> =
        text.split(',').map(|p| p.trim().parse::<u64>()).collect();
    probes.map_err(|e| Error::Invalid(format!("bad probe list '{text}': {e}")))
}

// ---------------------------------------------------------------------------
// Commands

fn cmd_models(action: ModelsAction) -> Result<bool> {
    match action {
        ModelsAction::List => {
            for name in models::CANNED_NAMES {
                let model = models::canned(name)?;
                println!("{name:<24} m={:<3} {}", model.dim(), model.description());
            }
            Ok(true)
        }
        ModelsAction::Describe { name } => {
            let model = models::canned(&name)?;
            println!("{name}: {}", model.description());
            println!("dimension: {}", model.dim());
            println!(
                "deterministic: {}, independent: {}",
                model.is_deterministic(),
                model.is_independent()
            );
            if let Some(dist) = model.atoms_at(0) {
                println!("law at k=0 ({} atom(s)):", dist.atoms().len());
                for (w, p) in dist.atoms() {
                    println!("  with probability {p}:");
                    for i in 0..w.dim() {
                        let row: Vec<String> =
                            (0..w.dim()).map(|j| format!("{:7.4}", w.get(i, j))).collect();
                        println!("    [{}]", row.join(" "));
                    }
                }
            }
            if name == "example_feed_static" {
                println!("note: no diagonal feedback; weak feedback constant 1/4");
            }
            println!("model json:\n{}", model.to_json());
            Ok(true)
        }
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<bool> {
    let model = args.model.load()?;
    let probes = parse_probes(&args.probes)?;
    let emitter = Emitter::new(&args.out, args)?;
    let consensus = sim::consensus_test(&model, args.horizon, args.tol, args.trials, args.seed);
    let ergodicity =
        sim::ergodicity_test(&model, &probes, args.horizon, args.tol, args.trials, args.seed)?;
    #[derive(Serialize)]
    struct Report<'a> {
        consensus: &'a sim::ConsensusVerdict,
        ergodicity: &'a sim::ErgodicityVerdict,
    }
    emitter.verdict(
        "simulate.json",
        &Report {
            consensus: &consensus,
            ergodicity: &ergodicity,
        },
    )?;
    let x0: Vec<f64> = {
        let mut v = vec![0.0; model.dim()];
        v[0] = 1.0;
        v
    };
    let traj = sim::propagate(&model, &x0, args.horizon, StreamKey::new(args.seed, 0), None)?;
    let rows: Vec<Vec<f64>> = traj
        .states
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let mut row = vec![k as f64];
            row.extend_from_slice(x);
            row.push(traj.spread[k]);
            row
        })
        .collect();
    let header = {
        let mut cols = vec!["k".to_string()];
        cols.extend((0..model.dim()).map(|i| format!("x{i}")));
        cols.push("spread".to_string());
        cols.join(",")
    };
    emitter.csv("trajectory.csv", &header, &rows)?;
    emitter.manifest("simulate", args)?;
    Ok(true)
}

fn cmd_flow(args: &FlowArgs) -> Result<bool> {
    let model = args.model.load()?;
    let emitter = Emitter::new(&args.out, args)?;
    let window = args.window.unwrap_or(args.horizon / 4).max(1);
    let cuts = flow::enumerate_cuts(model.dim(), flow::CUT_ENUM_CAP)?;
    let realized = flow::realized_flow_series(
        &model,
        cuts.clone(),
        args.horizon,
        StreamKey::new(args.seed, 0),
    );
    let realized_verdict = flow::classify_infinite_flow(&realized, window, None)?;
    let expected = flow::expected_flow_series(&model, cuts, args.horizon);
    let expected_verdict = flow::classify_infinite_flow(&expected, window, None)?;
    #[derive(Serialize)]
    struct Report<'a> {
        realized: &'a flow::FlowVerdict,
        expected: &'a flow::FlowVerdict,
    }
    emitter.verdict(
        "flow.json",
        &Report {
            realized: &realized_verdict,
            expected: &expected_verdict,
        },
    )?;
    if let Some(history) = &realized.history {
        let n = realized.cuts.len();
        let mut cumulative = vec![0.0; n];
        let rows: Vec<Vec<f64>> = history
            .iter()
            .enumerate()
            .map(|(k, step)| {
                let mut row = vec![k as f64];
                for (acc, inc) in cumulative.iter_mut().zip(step) {
                    *acc += inc;
                    row.push(*acc);
                }
                row
            })
            .collect();
        let header = {
            let mut cols = vec!["k".to_string()];
            cols.extend(realized.cuts.iter().map(|c| format!("cut_{}", c.label())));
            cols.join(",")
        };
        emitter.csv("cumulative_flow.csv", &header, &rows)?;
    }
    emitter.manifest("flow", args)?;
    Ok(true)
}

fn cmd_check(args: &CheckArgs) -> Result<bool> {
    let model = args.model.load()?;
    let emitter = Emitter::new(&args.out, args)?;
    let horizon = args.k_horizon as usize;
    // A vanishing target surfaces the tight constant without imposing a bar.
    let gamma = args.gamma.unwrap_or(1e-9);
    let strong = properties::check_strong_feedback(&model, horizon, gamma);
    let feedback = properties::check_feedback(&model, horizon, gamma);
    let weak = properties::check_weak_feedback(&model, horizon, gamma);
    let invertible = properties::check_invertibility(&model, horizon);
    let steady_state = properties::find_common_steady_state(&model, horizon, args.tol);
    #[derive(Serialize)]
    struct Report<'a> {
        steady_state: Option<&'a properties::SteadyState>,
        #[serde(skip_serializing_if = "Option::is_none")]
        steady_state_error: Option<String>,
        strong_feedback: &'a properties::PropertyReport,
        feedback: &'a properties::PropertyReport,
        weak_feedback: &'a properties::PropertyReport,
        invertibility: &'a properties::PropertyReport,
    }
    emitter.verdict(
        "check.json",
        &Report {
            steady_state: steady_state.as_ref().ok(),
            steady_state_error: steady_state.as_ref().err().map(|e| e.to_string()),
            strong_feedback: &strong,
            feedback: &feedback,
            weak_feedback: &weak,
            invertibility: &invertible,
        },
    )?;
    emitter.manifest("check", args)?;
    Ok(true)
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    let emitter = Emitter::new(&args.out, args)?;
    let summary = verify::sweep_by_name(&args.lemma, args.cases, args.seed)?;
    emitter.verdict("verify.json", &summary)?;
    emitter.manifest("verify", args)?;
    if args.out.is_some() {
        println!(
            "{}: {} evaluated, {} skipped, {} failures, worst margin {:.3e}",
            summary.check, summary.evaluated, summary.skipped, summary.failures, summary.worst_margin
        );
    }
    Ok(summary.failures == 0)
}

fn cmd_decay(args: &DecayArgs) -> Result<bool> {
    let model = args.model.load()?;
    let emitter = Emitter::new(&args.out, args)?;
    let horizon = args.k_horizon as usize;
    let steady = properties::find_common_steady_state(&model, horizon, 1e-9)?;
    let gamma = match args.gamma {
        Some(g) => g,
        None => properties::check_weak_feedback(&model, horizon, 1e-9)
            .gamma_star
            .ok_or_else(|| Error::MissingHypothesis("no finite weak feedback constant".into()))?,
    };
    let times = flow::epsilon_delta_times(
        &model,
        args.epsilon,
        args.delta,
        args.horizon,
        args.q_max,
        256,
        args.seed,
    )?;
    let x0: Vec<f64> = {
        let mut v = vec![0.0; model.dim()];
        v[0] = 1.0;
        v
    };
    let report = sim::geometric_decay_audit(
        &model,
        &steady.pi,
        gamma,
        args.epsilon,
        args.delta,
        &times.times,
        &x0,
        args.trials,
        args.seed,
    )?;
    emitter.verdict("decay.json", &report)?;
    emitter.manifest("decay", args)?;
    Ok(report.pass)
}

fn cmd_run(config_path: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| Error::Invalid(format!("{}: {e}", config_path.display())))?;
    let config: RunConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Invalid(format!("{}: {e}", config_path.display())))?;
    match config {
        RunConfig::Simulate(args) => cmd_simulate(&args),
        RunConfig::Flow(args) => cmd_flow(&args),
        RunConfig::Check(args) => cmd_check(&args),
        RunConfig::Verify(args) => cmd_verify(&args),
        RunConfig::Decay(args) => cmd_decay(&args),
    }
}

// ---------------------------------------------------------------------------
// Reproduction suite

struct Scenario {
    name: &'static str,
    detail: String,
    pass: bool,
}

fn cmd_reproduce(suite: Option<&str>, full: bool) -> Result<bool> {
    let names = [
        "noerg",
        "restart_counterexample",
        "one_shot_probability",
        "permutation",
        "weak_feedback_only",
        "gossip_connected",
        "gossip_two_blocks",
    ];
    let selected: Vec<&'static str> = match suite {
        None | Some("all") => names.to_vec(),
        Some(one) => match names.iter().find(|n| **n == one) {
            Some(&found) => vec![found],
            None => {
                return Err(Error::Invalid(format!(
                    "unknown scenario '{one}' (expected one of {})",
                    names.join(", ")
                )))
            }
        },
    };
    let mut all_pass = true;
    println!("{:<26} {:<6} detail", "scenario", "result");
    for name in selected {
        let s = run_scenario(name, full)?;
        all_pass &= s.pass;
        println!(
            "{:<26} {:<6} {}",
            s.name,
            if s.pass { "pass" } else { "FAIL" },
            s.detail
        );
    }
    Ok(all_pass)
}

fn run_scenario(name: &'static str, full: bool) -> Result<Scenario> {
    let seed = 20_260_823;
    Ok(match name {
        "noerg" => {
            let model = models::example_noerg(StochasticVector::uniform(2));
            let cons = sim::consensus_test(&model, 16, 1e-8, 1, seed);
            let erg = sim::ergodicity_test(&model, &[0, 1], 16, 1e-8, 1, seed)?;
            let pass = cons.probability == 1.0
                && cons.hitting_times[0] == Some(1)
                && !erg.ergodic_at_horizon
                && erg.probes[1].max_spread == 1.0;
            Scenario {
                name,
                detail: format!(
                    "consensus p={} hit at k={:?}; restarted spread {}",
                    cons.probability, cons.hitting_times[0], erg.probes[1].max_spread
                ),
                pass,
            }
        }
        "restart_counterexample" => {
            let model = models::example_2x2_cf();
            let cons = sim::consensus_test(&model, 16, 1e-8, 1, seed);
            let erg = sim::ergodicity_test(&model, &[0, 1], 16, 1e-8, 1, seed)?;
            let cuts = flow::enumerate_cuts(2, 20)?;
            let ledger = flow::realized_flow_series(&model, cuts, 64, StreamKey::new(seed, 0));
            let verdict = flow::classify_infinite_flow(&ledger, 16, None)?;
            let pass = cons.probability == 1.0
                && !erg.ergodic_at_horizon
                && verdict.classification == flow::FlowClass::Diverging;
            Scenario {
                name,
                detail: format!(
                    "consensus p={}, ergodic={}, flow={:?}",
                    cons.probability, erg.ergodic_at_horizon, verdict.classification
                ),
                pass,
            }
        }
        "one_shot_probability" => {
            let trials = if full { 10_000 } else { 2_000 };
            let model = models::example_cons_nontriv(0.3, 3)?;
            let cons = sim::consensus_test(&model, 32, 1e-8, trials, seed);
            let cuts = flow::enumerate_cuts(3, 20)?;
            let ledger = flow::realized_flow_series(&model, cuts, 256, StreamKey::new(seed, 0));
            let verdict = flow::classify_infinite_flow(&ledger, 64, None)?;
            let tol = if full { 0.02 } else { 0.03 };
            let pass = (cons.probability - 0.3).abs() <= tol
                && verdict.classification == flow::FlowClass::Stalled;
            Scenario {
                name,
                detail: format!(
                    "consensus p={:.4} (target 0.3), flow={:?}",
                    cons.probability, verdict.classification
                ),
                pass,
            }
        }
        "permutation" => {
            let (trials, horizon) = if full { (1_000, 10_000) } else { (100, 2_000) };
            let model = models::example_permutation(3);
            let cons = sim::consensus_test(&model, horizon, 1e-8, trials, seed);
            let cuts = flow::enumerate_cuts(3, 20)?;
            let ledger =
                flow::realized_flow_series(&model, cuts, horizon, StreamKey::new(seed, 0));
            let verdict = flow::classify_infinite_flow(&ledger, horizon / 4, None)?;
            let pass =
                cons.reached == 0 && verdict.classification == flow::FlowClass::Diverging;
            Scenario {
                name,
                detail: format!(
                    "consensus reached {}/{}, flow={:?}",
                    cons.reached, trials, verdict.classification
                ),
                pass,
            }
        }
        "weak_feedback_only" => {
            let model = models::example_feed_static();
            let feedback = properties::check_feedback(&model, 8, 0.25);
            let weak = properties::check_weak_feedback(&model, 8, 0.25);
            let erg = sim::ergodicity_test(&model, &[0, 1], 200, 1e-8, 1, seed)?;
            let gamma_star = weak.gamma_star.unwrap_or(f64::NAN);
            let pass = !feedback.holds()
                && feedback.witness.is_some()
                && weak.holds()
                && (gamma_star - 0.25).abs() <= 1e-12
                && erg.ergodic_at_horizon;
            Scenario {
                name,
                detail: format!(
                    "feedback fails with witness, weak holds (gamma*={gamma_star}), ergodic={}",
                    erg.ergodic_at_horizon
                ),
                pass,
            }
        }
        "gossip_connected" => {
            let trials = if full { 1_000 } else { 100 };
            let model = models::gossip_complete(8);
            let cons = sim::consensus_test(&model, 5_000, 1e-8, trials, seed);
            let pass = cons.probability >= 0.99;
            Scenario {
                name,
                detail: format!("consensus p={:.4} at T=5000", cons.probability),
                pass,
            }
        }
        "gossip_two_blocks" => {
            let trials = if full { 1_000 } else { 100 };
            let model = models::gossip_two_blocks(8)?;
            let cuts = flow::enumerate_cuts(8, 20)?;
            let ledger =
                flow::realized_flow_series(&model, cuts, 2_000, StreamKey::new(seed, 0));
            let bottleneck = ledger.cumulative[ledger.bottleneck()];
            let cons = sim::consensus_test(&model, 2_000, 1e-8, trials, seed);
            let pass = bottleneck == 0.0 && cons.reached == 0;
            Scenario {
                name,
                detail: format!(
                    "bottleneck cumulative flow {bottleneck}, consensus reached {}/{}",
                    cons.reached, trials
                ),
                pass,
            }
        }
        other => return Err(Error::Invalid(format!("unknown scenario '{other}'"))),
    })
}
