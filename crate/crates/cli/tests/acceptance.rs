//! One line per acceptance criterion. Run with `--nocapture` to see them.

mod common;

use std::time::{Duration, Instant};

use common::*;
use lift_ddmin::execute_test;
use lift_ddmin::metrics::{a12, tirr_ft, ComparisonTable, TABLE_HEADER};
use lift_ddmin::oracle::{judge, OracleConfig, Requirement};
use lift_ddmin::reduce::{split_max_event, split_min_event, split_min_time, split_on_failure};
use lift_ddmin::reduce::{Algorithm, Phase, ReductionContext};
use lift_ddmin::sim::{BuildingConfig, CarSpec, FaultConfig};
use lift_ddmin::trace::{generate_trace, load_test_input, TestInput, TrafficProfile, TrafficSpec};
use lift_ddmin::oracle::TestResult;
use lift_ddmin_cli::{cmd_compare, CompareArgs, DEFAULT_THRESHOLDS};

type Outcome = Result<String, String>;

const THRESHOLDS: [f64; 3] = [5.0, 10.0, 20.0];
const COMPARED: [&str; 3] = ["dead_car_uniform", "load_blind_lunch_peak", "stale_assignment_uniform"];

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn golden_splits() -> Outcome {
    let started = Instant::now();
    let ti = load_test_input(fixture_csv()).map_err(|e| e.to_string())?.input;
    let prefix = split_on_failure(&ti, 12320.0);
    check(prefix.ids() == (1..=7).collect::<Vec<_>>(), format!("split_on_failure {:?}", prefix.ids()))?;
    let sim_time = (prefix.last().unwrap().at() - prefix.first().unwrap().at()) as f64;
    let min_time = split_min_time(&prefix, sim_time, 1).ids();
    let min_event = split_min_event(&prefix, 4).ids();
    let max_event = split_max_event(4, &prefix, 2).ids();
    check(min_time == [4, 5, 6, 7], format!("split_min_time {min_time:?}"))?;
    check(min_event == [4, 5, 6, 7], format!("split_min_event {min_event:?}"))?;
    check(max_event == [2, 3, 4, 5, 6, 7], format!("split_max_event {max_event:?}"))?;
    let took = started.elapsed();
    check(took < Duration::from_secs(1), format!("took {took:?}"))?;
    Ok("all four splits match".into())
}

fn oracle_threshold() -> Outcome {
    let started = Instant::now();
    let cfg = OracleConfig::new(vec![Requirement::max_waiting_time(70.0)])
        .with_threshold(5.0)
        .with_references(vec![Some(300.0)]);
    check(cfg.fires(0, 285.0), "285 s should fail")?;
    check(!cfg.fires(0, 284.9), "284.9 s should pass")?;
    check(started.elapsed() < Duration::from_secs(1), "too slow")?;
    Ok("285 fails, 284.9 passes".into())
}

struct Reduced {
    name: &'static str,
    threshold: f64,
    algorithm: Algorithm,
    tirr: f64,
}

fn soundness(reduced: &mut Vec<Reduced>) -> Outcome {
    let started = Instant::now();
    let mut runs = 0;
    for name in CATALOGUE {
        let base = context(name, 0.0);
        let np = base.original.np();
        check((200..=2000).contains(&np), format!("{name} has {np} passengers"))?;
        for th in THRESHOLDS {
            let ctx = base.with_threshold(th).map_err(|e| e.to_string())?;
            for alg in Algorithm::ALL {
                let r = ctx.reduce(alg).map_err(|e| format!("{name} {alg} {th}%: {e}"))?;
                let (v, _) = ctx.evaluate(&r.final_input, r.checkpoint.as_ref(), false).map_err(|e| e.to_string())?;
                check(v.result == TestResult::Fail, format!("{name} {alg} {th}%: reduced input passes"))?;
                check(r.final_np <= r.initial_np, format!("{name} {alg} {th}%: grew"))?;
                let t = tirr_ft(&ctx, &r.final_input, r.checkpoint.as_ref()).map_err(|e| e.to_string())?;
                reduced.push(Reduced {
                    name,
                    threshold: th,
                    algorithm: alg,
                    tirr: t.tirr_ft,
                });
                runs += 1;
            }
        }
    }
    let took = started.elapsed();
    check(took < Duration::from_secs(600), format!("took {took:?}"))?;
    Ok(format!("{runs}/{runs} reductions fail on re-judging, {:.1}s", took.as_secs_f64()))
}

fn small_building() -> BuildingConfig {
    BuildingConfig::new(8, vec![CarSpec::standard(1), CarSpec::standard(8)])
}

/// A failing context for a small random trace, limit at 80% of the worst wait.
fn small_context(seed: u64, fault: &FaultConfig, threshold: f64) -> Option<ReductionContext> {
    let n = 3 + (seed % 10) as usize;
    let ti = generate_trace(&TrafficSpec::new(8, n, [0, 120], TrafficProfile::Uniform), seed).ok()?;
    let out = execute_test(&ti, &small_building(), fault, None, None).ok()?;
    let worst = out.outcomes.iter().map(|o| o.wt).fold(0.0, f64::max);
    if worst < 10.0 {
        return None;
    }
    let req = Requirement::max_waiting_time((0.8 * worst).floor());
    ReductionContext::prepare(ti, small_building(), fault.clone(), vec![req], threshold).ok()
}

fn is_suffix(sub: &TestInput, sup: &TestInput) -> bool {
    sub.np() <= sup.np() && sup.suffix_from(sup.np() - sub.np()) == *sub
}

fn fails(ctx: &ReductionContext, ti: &TestInput) -> bool {
    judge(&execute_test(ti, &ctx.building, &ctx.fault, None, None).unwrap(), &ctx.oracle).is_fail()
}

/// Returns (cases, dd_event dominance holds) for `fault`, or an error on
/// a backward mismatch.
fn small_traces(fault: &FaultConfig, cases: usize) -> Result<(usize, usize), String> {
    let (mut seen, mut dominated) = (0, 0);
    let mut seed = 0;
    while seen < cases {
        seed += 1;
        let th = THRESHOLDS[seed as usize % 3];
        let Some(ctx) = small_context(seed, fault, th) else { continue };
        let split = ctx.split();
        let conflict = split.position_of(ctx.conflicting_passenger()).unwrap();
        let shortest = (0..=conflict)
            .rev()
            .map(|s| split.suffix_from(s))
            .find(|c| fails(&ctx, c))
            .unwrap_or_else(|| split.clone());
        let back = ctx.reduce(Algorithm::Backward).map_err(|e| e.to_string())?;
        check(back.final_ids == shortest.ids(), format!("seed {seed}: backward {:?} vs {:?}", back.final_ids, shortest.ids()))?;
        let dd = ctx.reduce(Algorithm::DdEvent).map_err(|e| e.to_string())?;
        if is_suffix(&dd.final_input, &split) && fails(&ctx, &dd.final_input) && dd.final_np >= back.final_np {
            dominated += 1;
        }
        seen += 1;
    }
    Ok((seen, dominated))
}

fn small_trace_optimality() -> Outcome {
    let started = Instant::now();
    let (n, ok) = small_traces(&FaultConfig::StaleAssignment, 60)?;
    for fault in [
        FaultConfig::DeadCar {
            car: 1,
            detect_after: 60.0,
        },
        FaultConfig::LoadBlind,
        FaultConfig::ParkingStorm,
    ] {
        let (m, held) = small_traces(&fault, 60)?;
        println!("    info: {}: backward exact on {m}/{m}, dd-event dominance {held}/{m}", fault.name());
    }
    check(ok == n, format!("stale_assignment: dd-event dominance {ok}/{n}"))?;
    let took = started.elapsed();
    check(took < Duration::from_secs(300), format!("took {took:?}"))?;
    Ok(format!("stale_assignment: backward exact and dd-event dominance on {ok}/{n}"))
}

fn ewdd_efficiency() -> Outcome {
    let mut cases = 0;
    let mut misses = Vec::new();
    for name in CATALOGUE {
        let base = context(name, 0.0);
        for th in THRESHOLDS {
            let ctx = base.with_threshold(th).map_err(|e| e.to_string())?;
            if ctx.static_states().is_empty() {
                continue;
            }
            for (ew, dd) in [(Algorithm::EwddTime, Algorithm::DdTime), (Algorithm::EwddEvent, Algorithm::DdEvent)] {
                let e = ctx.reduce(ew).map_err(|e| e.to_string())?;
                let d = ctx.reduce(dd).map_err(|e| e.to_string())?;
                cases += 1;
                if e.simulated_seconds_total >= d.simulated_seconds_total || e.final_np > d.final_np {
                    misses.push(format!(
                        "{name} {th}% {ew}: {:.0}s/{} vs {dd} {:.0}s/{}",
                        e.simulated_seconds_total, e.final_np, d.simulated_seconds_total, d.final_np
                    ));
                }
            }
        }
    }
    check(misses.is_empty(), format!("{}/{cases} comparisons miss: {}", misses.len(), misses.join("; ")))?;
    Ok(format!("{cases}/{cases} comparisons faster and no larger"))
}

fn ewdd_fallback() -> Outcome {
    let flat = context("load_blind_saturated", 0.0);
    check(flat.static_states().is_empty(), "load_blind_saturated has static states")?;
    for th in THRESHOLDS {
        let ctx = flat.with_threshold(th).map_err(|e| e.to_string())?;
        for ew in [Algorithm::EwddTime, Algorithm::EwddEvent] {
            let e = ctx.reduce(ew).map_err(|e| e.to_string())?;
            let d = ctx.reduce(ew.plain()).map_err(|e| e.to_string())?;
            check(
                e.final_ids == d.final_ids && e.log == d.log && e.fell_back,
                format!("{ew} at {th}% differs from {}", ew.plain()),
            )?;
        }
    }

    let stale = context("stale_assignment_uniform", 0.0);
    let mut visited = Vec::new();
    for th in THRESHOLDS {
        let ctx = stale.with_threshold(th).map_err(|e| e.to_string())?;
        let k = ctx.static_states().len();
        for ew in [Algorithm::EwddTime, Algorithm::EwddEvent] {
            let r = ctx.reduce(ew).map_err(|e| e.to_string())?;
            let verdict_at = |i: usize| {
                r.log
                    .iter()
                    .find(|l| l.phase == Phase::StaticState { index: i })
                    .map(|l| l.verdict)
            };
            check(verdict_at(k) == Some(TestResult::Pass), format!("{ew} {th}%: state {k} did not pass"))?;
            check(verdict_at(k - 1).is_some(), format!("{ew} {th}%: state {} not visited", k - 1))?;
            visited.push(k - 1);
        }
    }
    Ok(format!("zero-state run equals DD; stale run visits state k-1 in {}/6", visited.len()))
}

fn tirr_and_a12(reduced: &[Reduced], tables: &[ComparisonTable]) -> Outcome {
    for name in CATALOGUE {
        let ctx = context(name, 10.0);
        let t = tirr_ft(&ctx, &ctx.original, None).map_err(|e| e.to_string())?;
        check(t.tirr_ft == 0.0, format!("{name}: tirr(orig, orig) = {}", t.tirr_ft))?;
    }
    let mut outputs = 0;
    for r in reduced {
        check(
            (0.0..1.0).contains(&r.tirr),
            format!("{} {} {}%: tirr {}", r.name, r.algorithm, r.threshold, r.tirr),
        )?;
        outputs += 1;
    }
    for row in tables.iter().flat_map(|t| &t.rows) {
        check((0.0..1.0).contains(&row.tirr_ft), format!("{} {}: tirr {}", row.test, row.algorithm, row.tirr_ft))?;
        outputs += 1;
    }

    let xs = [0.3, 0.1, 0.7, 0.7, 0.2];
    let ys = [1.0, 2.0, 3.0];
    check(a12(&xs, &xs).unwrap() == 0.5, "identity is not 0.5")?;
    check(a12(&xs, &ys).unwrap() == 1.0 && a12(&ys, &xs).unwrap() == 0.0, "disjoint samples")?;
    let zs = [0.2, 0.7, 1.5];
    check((a12(&xs, &zs).unwrap() + a12(&zs, &xs).unwrap() - 1.0).abs() < 1e-12, "antisymmetry")?;
    Ok(format!("tirr(orig, orig) = 0 on 9 scenarios, {outputs} outputs in [0,1), A12 checks hold"))
}

fn compare_args(out: &std::path::Path) -> CompareArgs {
    CompareArgs {
        manifests: COMPARED.iter().map(|n| manifest_path(n)).collect(),
        algorithms: Vec::new(),
        thresholds: Vec::new(),
        reps: 3,
        baseline: Algorithm::DdTime,
        out: out.to_path_buf(),
    }
}

fn deterministic_columns(t: &ComparisonTable) -> Vec<(String, u64, Algorithm, u64, usize)> {
    t.rows
        .iter()
        .map(|r| (r.test.clone(), r.threshold.to_bits(), r.algorithm, r.tirr_ft.to_bits(), r.passengers))
        .collect()
}

fn rerun_identical(tables: &[ComparisonTable]) -> Outcome {
    let [a, b] = tables else { return Err("two runs expected".into()) };
    check(!a.rows.is_empty(), "empty table")?;
    check(deterministic_columns(a) == deterministic_columns(b), "tirr_ft or passengers differ between runs")?;
    Ok(format!("{} rows bit-identical in tirr_ft and passengers", a.rows.len()))
}

fn full_comparison(tables: &mut Vec<ComparisonTable>) -> Outcome {
    let mut took = Duration::ZERO;
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let started = Instant::now();
        let table = cmd_compare(&compare_args(dir.path())).map_err(|e| e.to_string())?;
        took = took.max(started.elapsed());
        let csv = std::fs::read_to_string(dir.path().join("comparison.csv")).map_err(|e| e.to_string())?;
        let header: Vec<&str> = csv.lines().next().unwrap_or("").split(',').collect();
        check(header == TABLE_HEADER, format!("header {header:?}"))?;
        check(csv.lines().count() == 151, format!("{} csv lines", csv.lines().count()))?;
        tables.push(table);
    }
    let rows = tables[0].rows.len();
    check(rows == COMPARED.len() * Algorithm::ALL.len() * DEFAULT_THRESHOLDS.len(), format!("{rows} rows"))?;
    check(rows == 150, format!("{rows} rows"))?;
    check(took < Duration::from_secs(1800), format!("took {took:?}"))?;
    Ok(format!("150 rows with columns {}, {:.1}s", TABLE_HEADER.join(","), took.as_secs_f64()))
}

#[test]
fn acceptance_criteria() {
    let mut reduced = Vec::new();
    let mut tables = Vec::new();
    let c3 = soundness(&mut reduced);
    let c9 = full_comparison(&mut tables);
    let results = [
        ("1 golden splits", golden_splits()),
        ("2 oracle threshold", oracle_threshold()),
        ("3 soundness", c3),
        ("4 small-trace optimality", small_trace_optimality()),
        ("5 ewdd efficiency", ewdd_efficiency()),
        ("6 ewdd fallback", ewdd_fallback()),
        ("7 tirr and a12", tirr_and_a12(&reduced, &tables)),
        ("8 determinism", rerun_identical(&tables)),
        ("9 comparison table", c9),
    ];
    let mut failed = Vec::new();
    for (name, r) in &results {
        match r {
            Ok(msg) => println!("criterion {name}: PASS ({msg})"),
            Err(msg) => {
                println!("criterion {name}: FAIL ({msg})");
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
