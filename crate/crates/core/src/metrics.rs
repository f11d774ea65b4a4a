//! Reduction effectiveness and the cross-algorithm comparison harness.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reduce::{Algorithm, ReduceError, ReductionContext, ReductionResult};
use crate::sim::Checkpoint;
use crate::trace::TestInput;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error("reduced input does not fail")]
    ReducedPasses,
    #[error("empty sample")]
    EmptySample,
    #[error("{0}")]
    Nondeterministic(String),
    #[error("invalid comparison: {0}")]
    Invalid(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Time to failure of an original input and its reduction.
///
/// Times are simulated seconds from the start of each run to its failing
/// time; wall-clock figures are informational only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TirrReport {
    pub tet_fail_original: f64,
    pub tet_fail_reduced: f64,
    pub tirr_ft: f64,
    pub wall_original: f64,
    pub wall_reduced: f64,
}

/// `1 - reduced / original`.
pub fn tirr_from_times(original: f64, reduced: f64) -> f64 {
    if original <= 0.0 {
        return 0.0;
    }
    1.0 - reduced / original
}

fn time_to_failure(
    ctx: &ReductionContext,
    ti: &TestInput,
    checkpoint: Option<&Checkpoint>,
) -> Result<(f64, f64), MetricsError> {
    let started = Instant::now();
    let (verdict, outcome) = ctx.evaluate(ti, checkpoint, true)?;
    let wall = started.elapsed().as_secs_f64();
    match (verdict.failing_time, outcome) {
        (Some(ft), Some(o)) => Ok((ft - o.sim_start as f64, wall)),
        _ => Err(MetricsError::ReducedPasses),
    }
}

/// Compares time to failure of `reduced` (run from `checkpoint` if given)
/// against the original input of `ctx`.
pub fn tirr_ft(
    ctx: &ReductionContext,
    reduced: &TestInput,
    checkpoint: Option<&Checkpoint>,
) -> Result<TirrReport, MetricsError> {
    let (orig, wall_original) = time_to_failure(ctx, &ctx.original, None)?;
    let (red, wall_reduced) = time_to_failure(ctx, reduced, checkpoint)?;
    Ok(TirrReport {
        tet_fail_original: orig,
        tet_fail_reduced: red,
        tirr_ft: tirr_from_times(orig, red),
        wall_original,
        wall_reduced,
    })
}

/// Vargha-Delaney effect size, oriented so that smaller values in `a` count
/// in its favour: returns `P(a < b) + 0.5 * P(a == b)`. For run times, 1.0
/// means `a` is always faster.
pub fn a12(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    let (m, n) = (a.len() as f64, b.len() as f64);
    let mut all: Vec<(f64, bool)> = a.iter().map(|&x| (x, true)).chain(b.iter().map(|&x| (x, false))).collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    // Average ranks over ties, 1-based.
    let mut rank_sum_a = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_a += rank * all[i..=j].iter().filter(|e| e.1).count() as f64;
        i = j + 1;
    }
    let a_greater = (rank_sum_a / m - (m + 1.0) / 2.0) / n;
    Ok(1.0 - a_greater)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
}

pub fn summarize(xs: &[f64]) -> Result<Summary, MetricsError> {
    if xs.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std = if n < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Ok(Summary { median, mean, std })
}

/// A named failing run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub ctx: ReductionContext,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub test: String,
    pub threshold: f64,
    pub algorithm: Algorithm,
    pub median_s: f64,
    pub mean_s: f64,
    pub std_s: f64,
    pub tirr_ft: f64,
    pub passengers: usize,
    pub simulations: usize,
    pub simulated_seconds: f64,
    /// Effect size of this row's wall times against the baseline's.
    pub a12_vs_baseline: Option<f64>,
    pub wall_samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub baseline: Option<Algorithm>,
    pub repetitions: usize,
    pub rows: Vec<ComparisonRow>,
}

pub const TABLE_HEADER: [&str; 8] = [
    "test",
    "threshold",
    "algorithm",
    "median_s",
    "mean_s",
    "std_s",
    "tirr_ft",
    "passengers",
];

impl ComparisonTable {
    pub fn write_csv(&self, out: impl Write) -> Result<(), MetricsError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(TABLE_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.test.clone(),
                r.threshold.to_string(),
                r.algorithm.to_string(),
                format!("{:.6}", r.median_s),
                format!("{:.6}", r.mean_s),
                format!("{:.6}", r.std_s),
                format!("{:.6}", r.tirr_ft),
                r.passengers.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json(&self, out: impl Write) -> Result<(), MetricsError> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

struct Cell {
    scenario: usize,
    threshold: f64,
    algorithm: Algorithm,
}

/// Runs every scenario × threshold × algorithm cell `repetitions` times.
///
/// Cells run in parallel; repetitions of one cell run back to back. Any
/// unsound reduction, or a deterministic column that differs between
/// repetitions, aborts the whole comparison.
pub fn run_comparison(
    scenarios: &[Scenario],
    algorithms: &[Algorithm],
    thresholds: &[f64],
    repetitions: usize,
    baseline: Option<Algorithm>,
) -> Result<ComparisonTable, MetricsError> {
    if repetitions == 0 {
        return Err(MetricsError::Invalid("at least one repetition is needed".into()));
    }
    if scenarios.is_empty() || algorithms.is_empty() || thresholds.is_empty() {
        return Err(MetricsError::Invalid("nothing to compare".into()));
    }
    let contexts: Vec<Vec<ReductionContext>> = scenarios
        .iter()
        .map(|s| thresholds.iter().map(|&t| s.ctx.with_threshold(t)).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;

    let mut cells = Vec::new();
    for scenario in 0..scenarios.len() {
        for &threshold in thresholds {
            for &algorithm in algorithms {
                cells.push(Cell {
                    scenario,
                    threshold,
                    algorithm,
                });
            }
        }
    }

    let mut rows: Vec<ComparisonRow> = cells
        .par_iter()
        .map(|cell| {
            let ti = thresholds.iter().position(|&t| t == cell.threshold).unwrap_or(0);
            let ctx = &contexts[cell.scenario][ti];
            run_cell(&scenarios[cell.scenario].name, ctx, cell.algorithm, repetitions)
        })
        .collect::<Result<_, _>>()?;

    if let Some(base) = baseline {
        let lookup: Vec<(String, f64, Vec<f64>)> = rows
            .iter()
            .filter(|r| r.algorithm == base)
            .map(|r| (r.test.clone(), r.threshold, r.wall_samples.clone()))
            .collect();
        for row in &mut rows {
            if let Some((_, _, b)) = lookup.iter().find(|(t, th, _)| *t == row.test && *th == row.threshold) {
                row.a12_vs_baseline = Some(a12(&row.wall_samples, b)?);
            }
        }
    }
    Ok(ComparisonTable {
        baseline,
        repetitions,
        rows,
    })
}

fn run_cell(
    test: &str,
    ctx: &ReductionContext,
    algorithm: Algorithm,
    repetitions: usize,
) -> Result<ComparisonRow, MetricsError> {
    let mut samples = Vec::with_capacity(repetitions);
    let mut first: Option<(ReductionResult, TirrReport)> = None;
    for _ in 0..repetitions {
        let result = ctx.reduce(algorithm)?;
        let tirr = tirr_ft(ctx, &result.final_input, result.checkpoint.as_ref())?;
        samples.push(result.wall_seconds);
        match &first {
            None => first = Some((result, tirr)),
            Some((r0, t0)) => {
                if r0.final_ids != result.final_ids || t0.tirr_ft.to_bits() != tirr.tirr_ft.to_bits() {
                    return Err(MetricsError::Nondeterministic(format!(
                        "{test} / {algorithm} / {}%: repetitions disagree",
                        ctx.oracle.threshold
                    )));
                }
            }
        }
    }
    let (result, tirr) = first.expect("at least one repetition");
    let s = summarize(&samples)?;
    tracing::info!(test, %algorithm, threshold = ctx.oracle.threshold, np = result.final_np, "cell done");
    Ok(ComparisonRow {
        test: test.to_string(),
        threshold: ctx.oracle.threshold,
        algorithm,
        median_s: s.median,
        mean_s: s.mean,
        std_s: s.std,
        tirr_ft: tirr.tirr_ft,
        passengers: result.final_np,
        simulations: result.simulations_executed,
        simulated_seconds: result.simulated_seconds_total,
        a12_vs_baseline: None,
        wall_samples: samples,
    })
}
