//! Quantitative test oracle.
//!
//! Each [`Requirement`] bounds a per-passenger metric. A violated
//! requirement gets a severity in `[-1, 0]`; with a reference from the
//! original failing run and a threshold `θ`, a requirement only fires when
//! the observed value stays within `θ` percent of that reference, so a
//! reduced trace must keep the failure about as severe as the original.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{Observer, OutcomeEvent, PassengerOutcome, SimOutcome};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("input is not failure-inducing: no requirement is violated")]
    NotFailureInducing,
    #[error("invalid oracle config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Waiting time, detected when the car's doors open for the passenger.
    MaxWaitingTime,
    /// Transit time, detected when the passenger reaches the destination.
    MaxTransitTime,
}

impl Metric {
    /// The metric's value for one passenger, if already known.
    pub fn value(self, o: &PassengerOutcome) -> Option<f64> {
        match self {
            Metric::MaxWaitingTime => Some(o.wt),
            Metric::MaxTransitTime => o.tt,
        }
    }

    /// Simulated time at which the value becomes observable.
    pub fn detection_time(self, o: &PassengerOutcome) -> Option<f64> {
        match self {
            Metric::MaxWaitingTime => Some(o.t_elev_arrived),
            Metric::MaxTransitTime => o.t_reached_destination,
        }
    }

    fn event(self) -> OutcomeEvent {
        match self {
            Metric::MaxWaitingTime => OutcomeEvent::Boarded,
            Metric::MaxTransitTime => OutcomeEvent::ReachedDestination,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Requirement {
    pub metric: Metric,
    /// Seconds.
    pub limit: f64,
}

impl Requirement {
    pub fn max_waiting_time(limit: f64) -> Self {
        Self {
            metric: Metric::MaxWaitingTime,
            limit,
        }
    }

    pub fn max_transit_time(limit: f64) -> Self {
        Self {
            metric: Metric::MaxTransitTime,
            limit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Severity {
    /// In `[-1, 0]`; lower is worse.
    pub value: f64,
    /// Worst observed metric value, seconds.
    pub observed: f64,
    pub requirement: Requirement,
}

/// Linear relative overshoot, clamped at `-1` once the overshoot reaches
/// `span` seconds. [`severity`] uses `span == limit`, i.e. it saturates at
/// twice the limit.
pub fn severity_value(observed: f64, limit: f64, span: f64) -> f64 {
    let overshoot = ((observed - limit) / span).max(0.0);
    0.0 - overshoot.min(1.0)
}

/// Severity of the worst passenger for one requirement.
pub fn severity(outcome: &SimOutcome, req: &Requirement) -> Severity {
    let observed = worst(outcome, req.metric).unwrap_or(0.0);
    Severity {
        value: severity_value(observed, req.limit, req.limit),
        observed,
        requirement: *req,
    }
}

fn worst(outcome: &SimOutcome, metric: Metric) -> Option<f64> {
    outcome
        .outcomes
        .iter()
        .filter_map(|o| metric.value(o))
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub requirements: Vec<Requirement>,
    /// Percent in `[0, 100)`.
    #[serde(default)]
    pub threshold: f64,
    /// Worst value per requirement in the original failing run; empty, or
    /// one entry per requirement (`null` keeps plain-limit semantics).
    #[serde(default)]
    pub references: Vec<Option<f64>>,
}

impl OracleConfig {
    /// Plain limits, no reference.
    pub fn new(requirements: Vec<Requirement>) -> Self {
        Self {
            requirements,
            threshold: 0.0,
            references: Vec::new(),
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_references(mut self, references: Vec<Option<f64>>) -> Self {
        self.references = references;
        self
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        let bad = |m: String| Err(OracleError::Config(m));
        if self.requirements.is_empty() {
            return bad("at least one requirement is needed".into());
        }
        if self.requirements.iter().any(|r| !(r.limit.is_finite() && r.limit > 0.0)) {
            return bad("limits must be positive".into());
        }
        if !(self.threshold >= 0.0 && self.threshold < 100.0) {
            return bad(format!("threshold {} outside [0, 100)", self.threshold));
        }
        if !self.references.is_empty() && self.references.len() != self.requirements.len() {
            return bad(format!(
                "{} references for {} requirements",
                self.references.len(),
                self.requirements.len()
            ));
        }
        for (req, r) in self.requirements.iter().zip(&self.references) {
            if let Some(r) = r {
                if *r <= req.limit {
                    return bad(format!("reference {r} does not exceed limit {}", req.limit));
                }
            }
        }
        Ok(())
    }

    fn reference(&self, i: usize) -> Option<f64> {
        self.references.get(i).copied().flatten()
    }

    /// Smallest value that still counts as a failure for requirement `i`
    /// (exclusive of the limit itself).
    pub fn firing_floor(&self, i: usize) -> Option<f64> {
        self.reference(i).map(|r| r * (100.0 - self.threshold) / 100.0)
    }

    /// Whether a single metric value triggers requirement `i`.
    pub fn fires(&self, i: usize, value: f64) -> bool {
        value > self.requirements[i].limit && self.firing_floor(i).is_none_or(|floor| value >= floor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestResult {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub result: TestResult,
    /// Set on Fail: when the oracle first saw the failure.
    pub failing_time: Option<f64>,
    pub conflicting_passenger: Option<u32>,
    /// Index into `requirements` of the requirement that fired first.
    pub failing_requirement: Option<usize>,
    pub severities: Vec<Severity>,
}

impl Verdict {
    pub fn pass(severities: Vec<Severity>) -> Self {
        Self {
            result: TestResult::Pass,
            failing_time: None,
            conflicting_passenger: None,
            failing_requirement: None,
            severities,
        }
    }

    pub fn is_fail(&self) -> bool {
        self.result == TestResult::Fail
    }
}

/// Thresholded verdict. The conflicting passenger is the one whose firing
/// value became observable first (ties by id), across all requirements.
pub fn judge(outcome: &SimOutcome, cfg: &OracleConfig) -> Verdict {
    let severities: Vec<Severity> = cfg.requirements.iter().map(|r| severity(outcome, r)).collect();
    let mut first: Option<(f64, u32, usize)> = None;
    for o in &outcome.outcomes {
        for (i, req) in cfg.requirements.iter().enumerate() {
            let (Some(v), Some(t)) = (req.metric.value(o), req.metric.detection_time(o)) else {
                continue;
            };
            if !cfg.fires(i, v) {
                continue;
            }
            let key = (t, o.passenger_id, i);
            let earlier = first.is_none_or(|(ft, id, j)| (t, o.passenger_id, i) < (ft, id, j));
            if earlier {
                first = Some(key);
            }
        }
    }
    match first {
        None => Verdict::pass(severities),
        Some((ft, id, i)) => Verdict {
            result: TestResult::Fail,
            failing_time: Some(ft),
            conflicting_passenger: Some(id),
            failing_requirement: Some(i),
            severities,
        },
    }
}

/// Per-requirement references from an original failing run: the worst
/// observed value for each violated requirement, `None` for the others.
pub fn make_reference(
    outcome: &SimOutcome,
    requirements: &[Requirement],
) -> Result<Vec<Option<f64>>, OracleError> {
    let refs: Vec<Option<f64>> = requirements
        .iter()
        .map(|req| worst(outcome, req.metric).filter(|&w| w > req.limit))
        .collect();
    if refs.iter().all(Option::is_none) {
        return Err(OracleError::NotFailureInducing);
    }
    Ok(refs)
}

/// Observer that halts a simulation as soon as any requirement fires.
#[derive(Debug)]
pub struct FailureMonitor<'a> {
    cfg: &'a OracleConfig,
    fired: bool,
}

impl<'a> FailureMonitor<'a> {
    pub fn new(cfg: &'a OracleConfig) -> Self {
        Self { cfg, fired: false }
    }

    pub fn fired(&self) -> bool {
        self.fired
    }
}

impl Observer for FailureMonitor<'_> {
    fn observe(&mut self, event: OutcomeEvent, outcome: &PassengerOutcome) {
        for (i, req) in self.cfg.requirements.iter().enumerate() {
            if req.metric.event() != event {
                continue;
            }
            if let Some(v) = req.metric.value(outcome) {
                self.fired |= self.cfg.fires(i, v);
            }
        }
    }

    fn should_stop(&self) -> bool {
        self.fired
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome_of(rows: &[(u32, f64, f64, f64)]) -> SimOutcome {
        // (id, at, t_elev_arrived, t_reached_destination)
        SimOutcome {
            outcomes: rows
                .iter()
                .map(|&(id, at, arr, dest)| PassengerOutcome {
                    passenger_id: id,
                    elevator_used: 0,
                    t_elev_arrived: arr,
                    t_reached_destination: Some(dest),
                    wt: arr - at,
                    tt: Some(dest - arr),
                })
                .collect(),
            env_log: Vec::new(),
            sim_start: 0,
            sim_end: 0.0,
            simulated_duration: 0.0,
            stopped_early: false,
        }
    }

    fn with_wait(wt: f64) -> SimOutcome {
        outcome_of(&[(1, 0.0, wt, wt + 10.0)])
    }

    #[test]
    fn severity_examples() {
        let req = Requirement::max_waiting_time(70.0);
        let s400 = severity(&with_wait(400.0), &req);
        let s100 = severity(&with_wait(100.0), &req);
        assert_eq!(s400.value, -1.0);
        assert!((s100.value - (-30.0 / 70.0)).abs() < 1e-12);
        assert!((s100.value - (-0.4286)).abs() < 1e-4);
        assert!(s400.value < s100.value);
        assert_eq!(severity(&with_wait(70.0), &req).value, 0.0);
        let empty = severity(&outcome_of(&[]), &req);
        assert_eq!((empty.value, empty.observed), (0.0, 0.0));
    }

    #[test]
    fn threshold_boundary() {
        let req = Requirement::max_waiting_time(70.0);
        let cfg = OracleConfig::new(vec![req])
            .with_threshold(5.0)
            .with_references(vec![Some(300.0)]);
        cfg.validate().unwrap();
        assert_eq!(cfg.firing_floor(0), Some(285.0));
        assert!(judge(&with_wait(285.0), &cfg).is_fail());
        assert!(!judge(&with_wait(284.9), &cfg).is_fail());
    }

    #[test]
    fn running_example_conflict() {
        // p5 waits 205.2 s and is served at 3:25:20.
        let rows = [
            (1, 11945.0, 11993.4, 12029.1),
            (3, 12060.0, 12079.6, 12104.9),
            (4, 12080.0, 12180.6, 12205.9),
            (5, 12115.0, 12320.2, 12355.5),
            (6, 12130.0, 12260.4, 12291.9),
            (7, 12210.0, 12229.6, 12254.9),
        ];
        let cfg = OracleConfig::new(vec![Requirement::max_waiting_time(200.0)]);
        let v = judge(&outcome_of(&rows), &cfg);
        assert!(v.is_fail());
        assert_eq!(v.conflicting_passenger, Some(5));
        assert!((v.failing_time.unwrap() - 12320.2).abs() < 1e-9);
    }

    #[test]
    fn all_within_limit_passes() {
        let cfg = OracleConfig::new(vec![Requirement::max_waiting_time(200.0)]);
        let v = judge(&outcome_of(&[(1, 0.0, 50.0, 60.0), (2, 5.0, 80.0, 95.0)]), &cfg);
        assert_eq!(v.result, TestResult::Pass);
        assert_eq!(v.failing_time, None);
        assert_eq!(v.conflicting_passenger, None);
    }

    #[test]
    fn earliest_detection_wins_ties_by_id() {
        let cfg = OracleConfig::new(vec![Requirement::max_waiting_time(10.0)]);
        let v = judge(&outcome_of(&[(4, 0.0, 50.0, 60.0), (2, 10.0, 50.0, 60.0), (1, 0.0, 70.0, 80.0)]), &cfg);
        assert_eq!(v.conflicting_passenger, Some(2));
        assert_eq!(v.failing_time, Some(50.0));
    }

    #[test]
    fn transit_requirement_detected_at_destination() {
        let cfg = OracleConfig::new(vec![
            Requirement::max_waiting_time(100.0),
            Requirement::max_transit_time(30.0),
        ]);
        let v = judge(&outcome_of(&[(1, 0.0, 20.0, 60.0), (2, 0.0, 130.0, 140.0)]), &cfg);
        assert_eq!(v.conflicting_passenger, Some(1));
        assert_eq!(v.failing_time, Some(60.0));
        assert_eq!(v.failing_requirement, Some(1));
    }

    #[test]
    fn reference_from_original() {
        let reqs = [Requirement::max_waiting_time(70.0)];
        assert_eq!(make_reference(&with_wait(300.0), &reqs), Ok(vec![Some(300.0)]));
        assert_eq!(
            make_reference(&with_wait(69.0), &reqs),
            Err(OracleError::NotFailureInducing)
        );
        // only the violated requirement gets a reference
        let two = [
            Requirement::max_waiting_time(70.0),
            Requirement::max_transit_time(100.0),
        ];
        let out = outcome_of(&[(1, 0.0, 90.0, 110.0), (2, 0.0, 40.0, 80.0)]);
        assert_eq!(make_reference(&out, &two), Ok(vec![Some(90.0), None]));
    }

    #[test]
    fn config_validation() {
        let req = Requirement::max_waiting_time(70.0);
        assert!(OracleConfig::new(vec![]).validate().is_err());
        assert!(OracleConfig::new(vec![req]).with_threshold(100.0).validate().is_err());
        assert!(OracleConfig::new(vec![req]).with_references(vec![Some(60.0)]).validate().is_err());
        assert!(OracleConfig::new(vec![req]).with_references(vec![None, None]).validate().is_err());
        let cfg: OracleConfig = serde_json::from_str(
            r#"{"requirements":[{"metric":"max_waiting_time","limit":70}],"threshold":5,"references":[300]}"#,
        )
        .unwrap();
        assert_eq!(cfg.firing_floor(0), Some(285.0));
    }

    #[test]
    fn monitor_stops_on_firing_boarding() {
        let cfg = OracleConfig::new(vec![Requirement::max_waiting_time(70.0)]);
        let mut m = FailureMonitor::new(&cfg);
        let o = &with_wait(50.0).outcomes[0];
        m.observe(OutcomeEvent::Boarded, o);
        assert!(!m.should_stop());
        let o = &with_wait(80.0).outcomes[0];
        m.observe(OutcomeEvent::ReachedDestination, o);
        assert!(!m.should_stop());
        m.observe(OutcomeEvent::Boarded, o);
        assert!(m.should_stop());
    }
}
