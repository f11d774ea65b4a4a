//! Deterministic discrete-event simulator of an elevator group.
//!
//! The simulator stands in for the system under test: it replays a
//! [`TestInput`] against a [`BuildingConfig`] under a collective group
//! control dispatcher, optionally perturbed by a [`FaultConfig`], and
//! reports one [`PassengerOutcome`] per served passenger plus a log of
//! environment states sampled once per simulated second.
//!
//! Time is kept internally as integer milliseconds, so every run is exactly
//! reproducible and a run resumed from a [`Checkpoint`] sees the same
//! arithmetic as the run it was taken from.

mod export;
mod kernel;
mod static_state;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::TestInput;

pub use export::{write_env_log, write_outcomes, OUTCOME_HEADER};
pub use static_state::{checkpoint_from, detect_static_states, is_static, StaticState, DEFAULT_MIN_DWELL};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid building: {0}")]
    Building(String),
    #[error("invalid fault: {0}")]
    Fault(String),
    #[error("passenger {id}: {message}")]
    Passenger { id: u32, message: String },
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
    #[error("an empty test input needs a stop time or a checkpoint")]
    EmptyInput,
    #[error("simulation did not complete by t={at}s: {message}")]
    Diverged { at: f64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn default_floor_height() -> f64 {
    3.5
}

/// Kinematic and door parameters of one car.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarSpec {
    /// Meters per second, constant (no acceleration profile).
    pub speed: f64,
    /// Kilograms.
    pub rated_capacity: f64,
    pub door_open_time: f64,
    pub door_close_time: f64,
    pub door_dwell: f64,
    pub home_floor: u32,
}

impl CarSpec {
    /// A mid-rise passenger car: 1.75 m/s, 1000 kg, 2 s doors.
    pub fn standard(home_floor: u32) -> Self {
        Self {
            speed: 1.75,
            rated_capacity: 1000.0,
            door_open_time: 2.0,
            door_close_time: 2.0,
            door_dwell: 2.0,
            home_floor,
        }
    }
}

/// The simulated installation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingConfig {
    pub floors: u32,
    pub cars: Vec<CarSpec>,
    /// Meters between consecutive floors.
    #[serde(default = "default_floor_height")]
    pub floor_height: f64,
}

impl BuildingConfig {
    pub fn new(floors: u32, cars: Vec<CarSpec>) -> Self {
        Self {
            floors,
            cars,
            floor_height: default_floor_height(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let err = |m: String| Err(SimError::Building(m));
        if self.floors < 2 {
            return err(format!("need at least 2 floors, got {}", self.floors));
        }
        if self.cars.is_empty() {
            return err("need at least one car".into());
        }
        if !(self.floor_height.is_finite() && self.floor_height > 0.0) {
            return err("floor height must be positive".into());
        }
        for (i, c) in self.cars.iter().enumerate() {
            let positive = [
                c.speed,
                c.rated_capacity,
                c.door_open_time,
                c.door_close_time,
                c.door_dwell,
            ];
            if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return err(format!("car {i}: parameters must be positive"));
            }
            if c.home_floor == 0 || c.home_floor > self.floors {
                return err(format!("car {i}: home floor {} outside building", c.home_floor));
            }
        }
        Ok(())
    }

    pub fn home_floors(&self) -> Vec<u32> {
        self.cars.iter().map(|c| c.home_floor).collect()
    }
}

fn default_detect_after() -> f64 {
    120.0
}

/// A seeded dispatcher defect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FaultConfig {
    #[default]
    None,
    /// The car is out of service but the dispatcher keeps assigning calls to
    /// it. A call stuck on the dead car is handed to another car once it has
    /// waited `detect_after` seconds.
    DeadCar {
        car: usize,
        #[serde(default = "default_detect_after")]
        detect_after: f64,
    },
    /// The dispatcher ignores car load, so full cars keep receiving calls.
    LoadBlind,
    /// Every car that runs out of work travels to floor 1 before it will
    /// serve anything else; the dispatcher still treats it as idle where it
    /// stopped.
    ParkingStorm,
    /// Hall calls go to whichever car last opened its doors at that floor and
    /// are never re-evaluated. This routing table survives idle periods.
    StaleAssignment,
}

impl FaultConfig {
    pub fn validate(&self, building: &BuildingConfig) -> Result<(), SimError> {
        match *self {
            FaultConfig::DeadCar { car, detect_after } => {
                if car >= building.cars.len() {
                    return Err(SimError::Fault(format!(
                        "dead car index {car} but building has {} cars",
                        building.cars.len()
                    )));
                }
                if building.cars.len() < 2 {
                    return Err(SimError::Fault("a dead car needs another car to take over".into()));
                }
                if !(detect_after.is_finite() && detect_after > 0.0) {
                    return Err(SimError::Fault("detect_after must be positive".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// True when the dispatcher keeps no state across idle periods, so a run
    /// resumed from a static state replays the original exactly.
    pub fn is_memoryless(&self) -> bool {
        !matches!(self, FaultConfig::StaleAssignment)
    }

    pub fn name(&self) -> &'static str {
        match self {
            FaultConfig::None => "none",
            FaultConfig::DeadCar { .. } => "dead_car",
            FaultConfig::LoadBlind => "load_blind",
            FaultConfig::ParkingStorm => "parking_storm",
            FaultConfig::StaleAssignment => "stale_assignment",
        }
    }
}

/// Starting point for a simulation that does not begin from the home floors.
///
/// If no car has anything to do at `start_time`, the run (and its
/// `sim_start`) begins at the first arrival instead.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub start_time: i64,
    pub car_positions: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Idle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DoorState {
    Open,
    Closed,
    Moving,
}

/// Result for one served passenger. Times are seconds since midnight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassengerOutcome {
    pub passenger_id: u32,
    /// Zero-based car index.
    pub elevator_used: usize,
    /// When the doors of the boarding car were fully open at the arrival floor.
    pub t_elev_arrived: f64,
    /// `None` when the run stopped before the passenger got out.
    pub t_reached_destination: Option<f64>,
    pub wt: f64,
    pub tt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarEnv {
    /// Floor number; fractional while travelling.
    pub position: f64,
    pub direction: Direction,
    pub door: DoorState,
    pub occupants: usize,
    pub load: f64,
}

/// Snapshot of the whole group at one simulated second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub time: i64,
    pub cars: Vec<CarEnv>,
    /// Registered hall calls, car calls, and waiting passengers without a
    /// registered call.
    pub pending_calls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    /// Sorted by passenger id.
    pub outcomes: Vec<PassengerOutcome>,
    pub env_log: Vec<EnvState>,
    pub sim_start: i64,
    pub sim_end: f64,
    pub simulated_duration: f64,
    /// Set when an observer asked the run to stop.
    pub stopped_early: bool,
}

impl SimOutcome {
    pub fn outcome(&self, passenger_id: u32) -> Option<&PassengerOutcome> {
        self.outcomes
            .binary_search_by_key(&passenger_id, |o| o.passenger_id)
            .ok()
            .map(|i| &self.outcomes[i])
    }
}

/// What the kernel reports to an [`Observer`] as it happens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeEvent {
    Boarded,
    ReachedDestination,
}

/// Watches outcomes as they are produced and may halt the run.
///
/// `should_stop` is polled after all events sharing a timestamp have been
/// processed, so every outcome up to the stopping instant is complete.
pub trait Observer {
    fn observe(&mut self, event: OutcomeEvent, outcome: &PassengerOutcome);
    fn should_stop(&self) -> bool;
}

impl Observer for () {
    fn observe(&mut self, _: OutcomeEvent, _: &PassengerOutcome) {}
    fn should_stop(&self) -> bool {
        false
    }
}

/// Knobs for a single run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub checkpoint: Option<Checkpoint>,
    /// Absolute time at which the run halts; unserved passengers get no outcome.
    pub stop_time: Option<i64>,
    pub record_env: bool,
}

/// Runs a test input to completion (or `stop_time`) and records the env log.
pub fn execute_test(
    ti: &TestInput,
    building: &BuildingConfig,
    fault: &FaultConfig,
    checkpoint: Option<&Checkpoint>,
    stop_time: Option<i64>,
) -> Result<SimOutcome, SimError> {
    let opts = RunOptions {
        checkpoint: checkpoint.cloned(),
        stop_time,
        record_env: true,
    };
    run(ti, building, fault, &opts, &mut ())
}

/// General entry point: explicit options and an observer.
pub fn run(
    ti: &TestInput,
    building: &BuildingConfig,
    fault: &FaultConfig,
    opts: &RunOptions,
    observer: &mut dyn Observer,
) -> Result<SimOutcome, SimError> {
    validate(ti, building, fault, opts)?;
    kernel::Kernel::new(ti, building, fault, opts).run(observer)
}

fn validate(
    ti: &TestInput,
    building: &BuildingConfig,
    fault: &FaultConfig,
    opts: &RunOptions,
) -> Result<(), SimError> {
    building.validate()?;
    fault.validate(building)?;
    let max_load = building
        .cars
        .iter()
        .map(|c| c.rated_capacity)
        .fold(0.0_f64, f64::max);
    for p in ti.passengers() {
        if p.af() > building.floors || p.df() > building.floors {
            return Err(SimError::Passenger {
                id: p.id(),
                message: format!("floor outside building of {} floors", building.floors),
            });
        }
        if p.m() > p.cf() / 100.0 * max_load {
            return Err(SimError::Passenger {
                id: p.id(),
                message: "mass exceeds the load any car will accept".into(),
            });
        }
    }
    if let Some(cp) = &opts.checkpoint {
        if cp.car_positions.len() != building.cars.len() {
            return Err(SimError::Checkpoint(format!(
                "{} positions for {} cars",
                cp.car_positions.len(),
                building.cars.len()
            )));
        }
        if cp.car_positions.iter().any(|&f| f == 0 || f > building.floors) {
            return Err(SimError::Checkpoint("car position outside building".into()));
        }
        if let Some(p) = ti.first() {
            if p.at() < cp.start_time {
                return Err(SimError::Checkpoint(format!(
                    "passenger {} arrives at {} before checkpoint start {}",
                    p.id(),
                    p.at(),
                    cp.start_time
                )));
            }
        }
    } else if ti.is_empty() && opts.stop_time.is_none() {
        return Err(SimError::EmptyInput);
    }
    Ok(())
}
