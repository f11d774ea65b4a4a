//! Batch workflows behind the `lift-ddmin` binary.
//!
//! Every command reads a [`RunManifest`] (or the equivalent flags), writes
//! its artifacts into an output directory together with the effective
//! manifest, and maps its result onto an exit [`Status`].

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lift_ddmin::metrics::{self, MetricsError, Scenario, TirrReport};
use lift_ddmin::oracle::{FailureMonitor, OracleConfig, OracleError};
use lift_ddmin::reduce::{Algorithm, ReduceError, ReductionContext, ReductionResult};
use lift_ddmin::sim::{self, BuildingConfig, FaultConfig, RunOptions, SimError};
use lift_ddmin::trace::{self, TestInput, TraceError, TrafficSpec};
use lift_ddmin::{judge, Verdict};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Thresholds swept by `compare` when none are given, in percent.
pub const DEFAULT_THRESHOLDS: [f64; 10] = [5.0, 7.0, 9.0, 10.0, 11.0, 13.0, 15.0, 17.0, 19.0, 20.0];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Trace {
        path: PathBuf,
        #[source]
        source: TraceError,
    },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl CliError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Process exit status: verdicts are not errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    Fail = 1,
    Error = 2,
}

impl Status {
    pub fn code(self) -> u8 {
        self as u8
    }
}

/// Everything needed to reproduce one run. Relative paths are resolved
/// against the manifest's own directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    /// Label used in comparison tables; defaults to the manifest's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub building: PathBuf,
    pub fault: PathBuf,
    pub trace: PathBuf,
    pub oracle: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<Algorithm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Seed the trace was generated with.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Traffic description the trace was generated from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traffic: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut m: RunManifest = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut m.building);
        resolve(&mut m.fault);
        resolve(&mut m.trace);
        resolve(&mut m.oracle);
        if let Some(t) = m.traffic.as_mut() {
            resolve(t);
        }
        if let Some(o) = m.out.as_mut() {
            resolve(o);
        }
        if m.name.is_none() {
            m.name = base.file_name().map(|n| n.to_string_lossy().into_owned());
        }
        Ok(m)
    }

    /// Fails unless every referenced input file exists.
    pub fn check_files(&self) -> Result<(), CliError> {
        let mut files = vec![&self.building, &self.fault, &self.trace, &self.oracle];
        files.extend(self.traffic.as_ref());
        for f in files {
            if !f.is_file() {
                return Err(CliError::Manifest(format!("{} does not exist", f.display())));
            }
        }
        Ok(())
    }

    pub fn out_dir(&self) -> Result<&Path, CliError> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Manifest("no output directory (use --out)".into()))
    }

    /// Reads and validates the building, fault, trace and oracle files.
    pub fn load_inputs(&self) -> Result<Inputs, CliError> {
        self.check_files()?;
        let building: BuildingConfig = read_json(&self.building)?;
        building.validate()?;
        let fault: FaultConfig = read_json(&self.fault)?;
        fault.validate(&building)?;
        let mut oracle: OracleConfig = read_json(&self.oracle)?;
        if let Some(t) = self.threshold {
            oracle.threshold = t;
        }
        oracle.validate()?;
        let loaded = trace::load_test_input(&self.trace).map_err(|source| CliError::Trace {
            path: self.trace.clone(),
            source,
        })?;
        if loaded.resorted {
            tracing::warn!(path = %self.trace.display(), "trace rows were not in arrival order; sorted");
        }
        Ok(Inputs {
            building,
            fault,
            trace: loaded.input,
            oracle,
        })
    }
}

/// The decoded contents of a manifest.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub building: BuildingConfig,
    pub fault: FaultConfig,
    pub trace: TestInput,
    pub oracle: OracleConfig,
}

impl Inputs {
    /// A reduction context for the original trace at `threshold`.
    pub fn context(&self, threshold: f64, stop_at_failure: bool) -> Result<ReductionContext, CliError> {
        let mut ctx = ReductionContext::prepare(
            self.trace.clone(),
            self.building.clone(),
            self.fault.clone(),
            self.oracle.requirements.clone(),
            threshold,
        )?;
        ctx.stop_at_failure = stop_at_failure;
        Ok(ctx)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

// ---- command line ----------------------------------------------------------

#[derive(Debug, Parser)]
#[command(name = "lift-ddmin", version, about = "Simulate elevator traffic and minimize failing passenger traces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a trace once and judge it.
    Simulate(RunArgs),
    /// Reduce a failing trace with one algorithm.
    Minimize(RunArgs),
    /// Run every algorithm over several manifests and thresholds.
    Compare(CompareArgs),
    /// Generate a synthetic trace from a traffic description.
    Gen(GenArgs),
}

/// A manifest and/or explicit flags; flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub building: Option<PathBuf>,
    #[arg(long)]
    pub fault: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    #[arg(long)]
    pub algorithm: Option<Algorithm>,
    /// Percent.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Halt each run once the oracle fires. On by default for `minimize`,
    /// off for `simulate`.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub stop_at_failure: Option<bool>,
}

impl RunArgs {
    /// Merges the flags over the manifest, if any.
    pub fn manifest(&self) -> Result<RunManifest, CliError> {
        let base = match &self.manifest {
            Some(p) => Some(RunManifest::load(p)?),
            None => None,
        };
        let pick = |flag: &Option<PathBuf>, from: Option<&PathBuf>, what: &str| {
            flag.clone()
                .or_else(|| from.cloned())
                .ok_or_else(|| CliError::Manifest(format!("missing --{what}")))
        };
        Ok(RunManifest {
            name: base.as_ref().and_then(|m| m.name.clone()),
            building: pick(&self.building, base.as_ref().map(|m| &m.building), "building")?,
            fault: pick(&self.fault, base.as_ref().map(|m| &m.fault), "fault")?,
            trace: pick(&self.trace, base.as_ref().map(|m| &m.trace), "trace")?,
            oracle: pick(&self.oracle, base.as_ref().map(|m| &m.oracle), "oracle")?,
            algorithm: self.algorithm.or(base.as_ref().and_then(|m| m.algorithm)),
            threshold: self.threshold.or(base.as_ref().and_then(|m| m.threshold)),
            seed: self.seed.or(base.as_ref().and_then(|m| m.seed)),
            traffic: base.as_ref().and_then(|m| m.traffic.clone()),
            out: self.out.clone().or(base.and_then(|m| m.out)),
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// One per scenario; repeat the flag.
    #[arg(long = "manifest", required = true)]
    pub manifests: Vec<PathBuf>,
    /// Comma-separated; defaults to all five.
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Vec<Algorithm>,
    /// Comma-separated percents; defaults to 5,7,9,10,11,13,15,17,19,20.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    /// Algorithm the effect sizes are computed against.
    #[arg(long, default_value = "dd-time")]
    pub baseline: Algorithm,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// Traffic description (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Trace CSV to write.
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs one parsed command line and reports errors on stderr.
pub fn run(cli: Cli) -> Status {
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Minimize(a) => cmd_minimize(&a).map(|_| Status::Pass),
        Command::Compare(a) => cmd_compare(&a).map(|_| Status::Pass),
        Command::Gen(a) => cmd_gen(&a).map(|_| Status::Pass),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        Status::Error
    })
}

// ---- commands --------------------------------------------------------------

/// Simulates the trace and writes `outcomes.csv`, `env.jsonl`,
/// `verdict.json` and `manifest.json`.
pub fn cmd_simulate(args: &RunArgs) -> Result<Status, CliError> {
    let manifest = args.manifest()?;
    let inputs = manifest.load_inputs()?;
    let out = manifest.out_dir()?;
    prepare_out(out)?;

    let opts = RunOptions {
        checkpoint: None,
        stop_time: None,
        record_env: true,
    };
    let outcome = if args.stop_at_failure.unwrap_or(false) {
        let mut monitor = FailureMonitor::new(&inputs.oracle);
        sim::run(&inputs.trace, &inputs.building, &inputs.fault, &opts, &mut monitor)?
    } else {
        sim::run(&inputs.trace, &inputs.building, &inputs.fault, &opts, &mut ())?
    };
    let verdict = judge(&outcome, &inputs.oracle);

    let path = out.join("outcomes.csv");
    sim::write_outcomes(&outcome.outcomes, create(&path)?)?;
    let path = out.join("env.jsonl");
    sim::write_env_log(&outcome.env_log, create(&path)?)?;
    write_json(&out.join("verdict.json"), &verdict)?;
    write_json(&out.join("manifest.json"), &manifest)?;

    println!("{}", verdict_line(&verdict));
    Ok(if verdict.is_fail() { Status::Fail } else { Status::Pass })
}

fn verdict_line(v: &Verdict) -> String {
    match (v.conflicting_passenger, v.failing_time) {
        (Some(p), Some(ft)) => format!("fail: passenger {p} at t={ft:.1}s"),
        _ => "pass".to_string(),
    }
}

/// What `minimize` produced.
#[derive(Debug, Clone)]
pub struct MinimizeReport {
    pub result: ReductionResult,
    pub tirr: TirrReport,
    pub summary: String,
}

/// Reduces the trace and writes `reduced.csv`, `result.json`, `tirr.json`
/// and `manifest.json`.
pub fn cmd_minimize(args: &RunArgs) -> Result<MinimizeReport, CliError> {
    let manifest = args.manifest()?;
    let algorithm = manifest
        .algorithm
        .ok_or_else(|| CliError::Manifest("missing --algorithm".into()))?;
    let inputs = manifest.load_inputs()?;
    let out = manifest.out_dir()?;
    prepare_out(out)?;

    let ctx = inputs.context(inputs.oracle.threshold, args.stop_at_failure.unwrap_or(true))?;
    let result = ctx.reduce(algorithm)?;
    let tirr = metrics::tirr_ft(&ctx, &result.final_input, result.checkpoint.as_ref())?;

    let path = out.join("reduced.csv");
    trace::write_test_input(&result.final_input, create(&path)?).map_err(|source| CliError::Trace { path, source })?;
    write_json(&out.join("result.json"), &result)?;
    write_json(&out.join("tirr.json"), &tirr)?;
    write_json(&out.join("manifest.json"), &manifest)?;

    let summary = format!(
        "{}, {} \u{2192} {}, sims={}, tirr_ft={:.4}",
        algorithm, result.initial_np, result.final_np, result.simulations_executed, tirr.tirr_ft
    );
    println!("{summary}");
    Ok(MinimizeReport { result, tirr, summary })
}

/// Runs the comparison and writes `comparison.csv`, `comparison.json` and
/// one copy of each manifest under `manifests/`.
pub fn cmd_compare(args: &CompareArgs) -> Result<metrics::ComparisonTable, CliError> {
    let algorithms = if args.algorithms.is_empty() {
        Algorithm::ALL.to_vec()
    } else {
        args.algorithms.clone()
    };
    let thresholds = if args.thresholds.is_empty() {
        DEFAULT_THRESHOLDS.to_vec()
    } else {
        args.thresholds.clone()
    };
    let copies = args.out.join("manifests");
    prepare_out(&copies)?;

    let mut scenarios = Vec::with_capacity(args.manifests.len());
    for (i, path) in args.manifests.iter().enumerate() {
        let manifest = RunManifest::load(path)?;
        let inputs = manifest.load_inputs()?;
        let name = manifest.name.clone().unwrap_or_else(|| format!("test{}", i + 1));
        // The original must fail at every threshold; zero is the strictest.
        let ctx = inputs.context(0.0, true)?;
        write_json(&copies.join(format!("{:02}-{name}.json", i + 1)), &manifest)?;
        scenarios.push(Scenario { name, ctx });
    }

    let table = metrics::run_comparison(&scenarios, &algorithms, &thresholds, args.reps, Some(args.baseline))?;
    let path = args.out.join("comparison.csv");
    table.write_csv(create(&path)?)?;
    let path = args.out.join("comparison.json");
    table.write_json(create(&path)?)?;
    println!(
        "{} rows over {} scenarios, {} repetitions",
        table.rows.len(),
        scenarios.len(),
        table.repetitions
    );
    Ok(table)
}

/// Writes the trace drawn from `spec` with `seed`.
pub fn cmd_gen(args: &GenArgs) -> Result<TestInput, CliError> {
    let spec: TrafficSpec = read_json(&args.spec)?;
    let ti = trace::generate_trace(&spec, args.seed).map_err(|source| CliError::Trace {
        path: args.spec.clone(),
        source,
    })?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        prepare_out(dir)?;
    }
    trace::save_test_input(&ti, &args.out).map_err(|source| CliError::Trace {
        path: args.out.clone(),
        source,
    })?;
    println!("{} passengers written to {}", ti.np(), args.out.display());
    Ok(ti)
}
