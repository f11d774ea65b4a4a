//! Failure-preserving reduction of passenger traces.
//!
//! All algorithms only ever trim passengers from the front of the trace.
//! They differ in how the cut point is searched:
//!
//! - [`Algorithm::DdTime`] bisects the arrival-time span,
//! - [`Algorithm::DdEvent`] bisects the passenger count,
//! - the `Ewdd*` variants first try to restart from the latest idle period
//!   of the original run, then refine with the matching bisection,
//! - [`Algorithm::Backward`] grows a suffix one passenger at a time.

mod algorithms;
mod split;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{judge, make_reference, FailureMonitor, OracleConfig, OracleError, Requirement, TestResult, Verdict};
use crate::sim::{
    self, detect_static_states, BuildingConfig, Checkpoint, FaultConfig, RunOptions, SimError, SimOutcome, StaticState,
    DEFAULT_MIN_DWELL,
};
use crate::trace::TestInput;

pub use split::{split_max_event, split_max_time, split_min_event, split_min_time, split_on_failure};

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("cannot reproduce the failure from the passengers that arrived before it")]
    CannotReproduce,
    #[error("reduced input passes the oracle ({np} passengers)")]
    Unsound { np: usize },
    #[error("unknown algorithm {0:?}")]
    UnknownAlgorithm(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Backward,
    DdTime,
    DdEvent,
    EwddTime,
    EwddEvent,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Backward,
        Algorithm::DdTime,
        Algorithm::DdEvent,
        Algorithm::EwddTime,
        Algorithm::EwddEvent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Backward => "backward",
            Algorithm::DdTime => "dd-time",
            Algorithm::DdEvent => "dd-event",
            Algorithm::EwddTime => "ewdd-time",
            Algorithm::EwddEvent => "ewdd-event",
        }
    }

    /// The bisection an `Ewdd*` variant refines with, or the algorithm itself.
    pub fn plain(self) -> Algorithm {
        match self {
            Algorithm::EwddTime => Algorithm::DdTime,
            Algorithm::EwddEvent => Algorithm::DdEvent,
            a => a,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = ReduceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| ReduceError::UnknownAlgorithm(s.to_string()))
    }
}

/// A failing run together with everything needed to reduce it.
#[derive(Debug, Clone)]
pub struct ReductionContext {
    pub building: BuildingConfig,
    pub fault: FaultConfig,
    /// Thresholded, with references taken from the original run.
    pub oracle: OracleConfig,
    pub original: TestInput,
    /// Full run of `original`, env log included.
    pub original_outcome: SimOutcome,
    pub original_verdict: Verdict,
    /// Maximum number of simulations per reduction.
    pub budget: Option<usize>,
    /// Halt candidate runs as soon as the oracle fires.
    pub stop_at_failure: bool,
    /// Shortest idle period, in seconds, accepted as a static state.
    pub min_dwell: i64,
}

impl ReductionContext {
    /// Simulates `original`, derives references from it, and judges it under
    /// the thresholded oracle.
    pub fn prepare(
        original: TestInput,
        building: BuildingConfig,
        fault: FaultConfig,
        requirements: Vec<Requirement>,
        threshold: f64,
    ) -> Result<Self, ReduceError> {
        OracleConfig::new(requirements.clone()).validate()?;
        let outcome = sim::execute_test(&original, &building, &fault, None, None)?;
        Self::from_outcome(original, building, fault, requirements, threshold, outcome)
    }

    /// Like [`prepare`](Self::prepare) but reuses an existing full run.
    pub fn from_outcome(
        original: TestInput,
        building: BuildingConfig,
        fault: FaultConfig,
        requirements: Vec<Requirement>,
        threshold: f64,
        original_outcome: SimOutcome,
    ) -> Result<Self, ReduceError> {
        let references = make_reference(&original_outcome, &requirements)?;
        let oracle = OracleConfig::new(requirements)
            .with_threshold(threshold)
            .with_references(references);
        oracle.validate()?;
        let original_verdict = judge(&original_outcome, &oracle);
        if !original_verdict.is_fail() {
            return Err(OracleError::NotFailureInducing.into());
        }
        Ok(Self {
            building,
            fault,
            oracle,
            original,
            original_outcome,
            original_verdict,
            budget: None,
            stop_at_failure: true,
            min_dwell: DEFAULT_MIN_DWELL,
        })
    }

    /// Same run, different threshold. No simulation needed.
    pub fn with_threshold(&self, threshold: f64) -> Result<Self, ReduceError> {
        let mut ctx = Self::from_outcome(
            self.original.clone(),
            self.building.clone(),
            self.fault.clone(),
            self.oracle.requirements.clone(),
            threshold,
            self.original_outcome.clone(),
        )?;
        ctx.budget = self.budget;
        ctx.stop_at_failure = self.stop_at_failure;
        ctx.min_dwell = self.min_dwell;
        Ok(ctx)
    }

    pub fn with_budget(mut self, max_simulations: usize) -> Self {
        self.budget = Some(max_simulations);
        self
    }

    pub fn failing_time(&self) -> f64 {
        self.original_verdict
            .failing_time
            .expect("context verdict is a failure")
    }

    pub fn conflicting_passenger(&self) -> u32 {
        self.original_verdict
            .conflicting_passenger
            .expect("context verdict is a failure")
    }

    /// Everyone who arrived up to the failing time.
    pub fn split(&self) -> TestInput {
        split_on_failure(&self.original, self.failing_time())
    }

    /// Idle periods of the original run that end before the failure.
    pub fn static_states(&self) -> Vec<StaticState> {
        detect_static_states(&self.original_outcome, self.failing_time(), self.min_dwell)
    }

    /// One candidate run and its verdict. Empty inputs pass without simulating.
    pub fn evaluate(
        &self,
        ti: &TestInput,
        checkpoint: Option<&Checkpoint>,
        stop_at_failure: bool,
    ) -> Result<(Verdict, Option<SimOutcome>), ReduceError> {
        if ti.is_empty() {
            return Ok((Verdict::pass(Vec::new()), None));
        }
        let opts = RunOptions {
            checkpoint: checkpoint.cloned(),
            stop_time: None,
            record_env: false,
        };
        let outcome = if stop_at_failure {
            let mut monitor = FailureMonitor::new(&self.oracle);
            sim::run(ti, &self.building, &self.fault, &opts, &mut monitor)?
        } else {
            sim::run(ti, &self.building, &self.fault, &opts, &mut ())?
        };
        Ok((judge(&outcome, &self.oracle), Some(outcome)))
    }

    /// Runs `algorithm` and checks the result still fails.
    pub fn reduce(&self, algorithm: Algorithm) -> Result<ReductionResult, ReduceError> {
        let started = Instant::now();
        let mut exec = Executor::new(self);
        let outcome = match algorithm {
            Algorithm::Backward => algorithms::backward(&mut exec)?,
            Algorithm::DdTime => algorithms::dd_time(&mut exec, self.split())?,
            Algorithm::DdEvent => algorithms::dd_event(&mut exec, self.split())?,
            Algorithm::EwddTime | Algorithm::EwddEvent => algorithms::ewdd(&mut exec, algorithm.plain())?,
        };
        let wall_seconds = started.elapsed().as_secs_f64();

        let (final_verdict, _) = self.evaluate(&outcome.input, exec.checkpoint.as_ref(), false)?;
        if !final_verdict.is_fail() {
            return Err(ReduceError::Unsound { np: outcome.input.np() });
        }
        tracing::debug!(
            algorithm = algorithm.name(),
            initial = self.original.np(),
            final_np = outcome.input.np(),
            sims = exec.simulations,
            "reduction finished"
        );
        Ok(ReductionResult {
            algorithm,
            threshold: self.oracle.threshold,
            initial_np: self.original.np(),
            split_np: self.split().np(),
            final_np: outcome.input.np(),
            final_ids: outcome.input.ids(),
            final_input: outcome.input,
            iterations: exec.log.len(),
            simulations_executed: exec.simulations,
            simulated_seconds_total: exec.simulated_seconds,
            wall_seconds,
            checkpoint: exec.checkpoint,
            static_states_found: outcome.static_states_found,
            fell_back: outcome.fell_back,
            aborted: exec.aborted.or(outcome.aborted),
            final_verdict,
            log: exec.log,
        })
    }
}

/// Which part of a reduction a candidate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    /// Restart from the static state with this 1-based index.
    StaticState { index: usize },
    Search,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    #[serde(flatten)]
    pub phase: Phase,
    pub candidate_np: usize,
    pub verdict: TestResult,
    /// Zero when the candidate was empty and not simulated.
    pub simulated_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionResult {
    pub algorithm: Algorithm,
    pub threshold: f64,
    pub initial_np: usize,
    pub split_np: usize,
    pub final_np: usize,
    pub final_ids: Vec<u32>,
    #[serde(skip_serializing, default)]
    pub final_input: TestInput,
    pub iterations: usize,
    pub simulations_executed: usize,
    pub simulated_seconds_total: f64,
    pub wall_seconds: f64,
    /// Start state the final input must be run from, if any.
    pub checkpoint: Option<Checkpoint>,
    pub static_states_found: usize,
    /// An environment-wise run found no reproducing static state.
    pub fell_back: bool,
    /// Set when the search stopped early (budget or iteration cap).
    pub aborted: Option<String>,
    pub final_verdict: Verdict,
    pub log: Vec<IterationRecord>,
}

/// Executes candidates for one reduction and keeps the books.
pub(crate) struct Executor<'a> {
    pub(crate) ctx: &'a ReductionContext,
    pub(crate) checkpoint: Option<Checkpoint>,
    pub(crate) phase: Phase,
    simulations: usize,
    simulated_seconds: f64,
    log: Vec<IterationRecord>,
    aborted: Option<String>,
}

impl<'a> Executor<'a> {
    fn new(ctx: &'a ReductionContext) -> Self {
        Self {
            ctx,
            checkpoint: None,
            phase: Phase::Search,
            simulations: 0,
            simulated_seconds: 0.0,
            log: Vec::new(),
            aborted: None,
        }
    }

    /// `None` once the simulation budget is spent.
    pub(crate) fn execute(&mut self, ti: &TestInput) -> Result<Option<TestResult>, ReduceError> {
        if !ti.is_empty() && self.ctx.budget.is_some_and(|b| self.simulations >= b) {
            self.aborted
                .get_or_insert_with(|| format!("simulation budget of {} exhausted", self.simulations));
            return Ok(None);
        }
        let (verdict, outcome) = self
            .ctx
            .evaluate(ti, self.checkpoint.as_ref(), self.ctx.stop_at_failure)?;
        let seconds = outcome.map_or(0.0, |o| o.simulated_duration);
        if !ti.is_empty() {
            self.simulations += 1;
            self.simulated_seconds += seconds;
        }
        self.log.push(IterationRecord {
            phase: self.phase,
            candidate_np: ti.np(),
            verdict: verdict.result,
            simulated_seconds: seconds,
        });
        tracing::trace!(np = ti.np(), result = ?verdict.result, "candidate");
        Ok(Some(verdict.result))
    }
}

/// What an algorithm hands back before the final soundness check.
pub(crate) struct SearchOutcome {
    pub(crate) input: TestInput,
    pub(crate) static_states_found: usize,
    pub(crate) fell_back: bool,
    pub(crate) aborted: Option<String>,
}

impl SearchOutcome {
    pub(crate) fn plain(input: TestInput) -> Self {
        Self {
            input,
            static_states_found: 0,
            fell_back: false,
            aborted: None,
        }
    }
}
