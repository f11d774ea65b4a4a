//! Passenger records, arrival-ordered test inputs, and their CSV form.
//!
//! A [`TestInput`] is the unit every other module consumes: the simulator
//! replays it, the oracle judges its outcome, and the reducers shrink it.
//! Passengers keep their original ids through every reduction so that a
//! minimized trace can be traced back to the rows it came from.

mod csv_io;
mod generate;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csv_io::{load_test_input, read_test_input, save_test_input, write_test_input, LoadedTrace};
pub use generate::{generate_trace, Burst, TrafficProfile, TrafficSpec};

/// Header of the passenger interchange CSV.
pub const CSV_HEADER: [&str; 8] = ["id", "at", "af", "df", "m", "cf", "ent", "ext"];

/// Optional trailing column with the arrival time as `h:mm:ss`. Written on
/// save, ignored on load.
pub const CLOCK_COLUMN: &str = "clock";

/// Default passenger mass in kilograms.
pub const DEFAULT_MASS: f64 = 75.0;
/// Default capacity factor, percent of rated load at which a passenger
/// considers a car full.
pub const DEFAULT_CAPACITY_FACTOR: f64 = 80.0;
/// Default entering and exiting time in seconds.
pub const DEFAULT_TRANSFER_TIME: f64 = 1.2;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("passenger {id}: {message}")]
    Validation { id: u32, message: String },
    #[error("unexpected header {found:?}, expected {expected}")]
    Header { found: Vec<String>, expected: String },
    #[error("duplicate passenger id {0}")]
    DuplicateId(u32),
    #[error("traffic spec: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A single passenger: one hall call plus the car call it turns into.
///
/// Fields are private so that every instance satisfies the attribute
/// invariants; build one with [`Passenger::new`] or [`Passenger::with_defaults`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Passenger {
    id: u32,
    at: i64,
    af: u32,
    df: u32,
    m: f64,
    cf: f64,
    ent: f64,
    ext: f64,
}

impl Passenger {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: u32,
        at: i64,
        af: u32,
        df: u32,
        m: f64,
        cf: f64,
        ent: f64,
        ext: f64,
    ) -> Result<Self, TraceError> {
        let bad = |message: &str| {
            Err(TraceError::Validation {
                id,
                message: message.to_string(),
            })
        };
        if id == 0 {
            return bad("id must be positive");
        }
        if at < 0 {
            return bad("arrival time must be non-negative");
        }
        if af == 0 || df == 0 {
            return bad("floors are numbered from 1");
        }
        if af == df {
            return bad("arrival floor equals destination floor");
        }
        if !(m.is_finite() && m > 0.0) {
            return bad("mass must be positive");
        }
        if !(cf.is_finite() && cf > 0.0 && cf <= 100.0) {
            return bad("capacity factor must lie in (0, 100]");
        }
        if !(ent.is_finite() && ent > 0.0) {
            return bad("entering time must be positive");
        }
        if !(ext.is_finite() && ext > 0.0) {
            return bad("exiting time must be positive");
        }
        Ok(Self {
            id,
            at,
            af,
            df,
            m,
            cf,
            ent,
            ext,
        })
    }

    /// Passenger with the default mass, capacity factor and transfer times.
    pub fn with_defaults(id: u32, at: i64, af: u32, df: u32) -> Result<Self, TraceError> {
        Self::new(
            id,
            at,
            af,
            df,
            DEFAULT_MASS,
            DEFAULT_CAPACITY_FACTOR,
            DEFAULT_TRANSFER_TIME,
            DEFAULT_TRANSFER_TIME,
        )
    }

    pub fn id(&self) -> u32 {
        self.id
    }
    /// Arrival time, whole seconds since midnight.
    pub fn at(&self) -> i64 {
        self.at
    }
    pub fn af(&self) -> u32 {
        self.af
    }
    pub fn df(&self) -> u32 {
        self.df
    }
    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn cf(&self) -> f64 {
        self.cf
    }
    pub fn ent(&self) -> f64 {
        self.ent
    }
    pub fn ext(&self) -> f64 {
        self.ext
    }

    pub fn going_up(&self) -> bool {
        self.df > self.af
    }
}

/// Formats seconds since midnight as `h:mm:ss`.
pub fn clock(seconds: i64) -> String {
    let s = seconds.rem_euclid(86_400);
    format!("{}:{:02}:{:02}", s / 3600, (s / 60) % 60, s % 60)
}

/// An arrival-ordered passenger trace.
///
/// Passengers are sorted by `at`, ties broken by ascending id, and ids are
/// unique. Reductions produce sub-sequences, so ids need not be contiguous.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TestInput {
    passengers: Vec<Passenger>,
}

impl TestInput {
    /// Builds a trace, sorting into arrival order. Fails on duplicate ids.
    pub fn new(passengers: Vec<Passenger>) -> Result<Self, TraceError> {
        Ok(Self::new_reporting_sort(passengers)?.0)
    }

    /// Like [`TestInput::new`], also reporting whether a re-sort was needed.
    pub fn new_reporting_sort(mut passengers: Vec<Passenger>) -> Result<(Self, bool), TraceError> {
        let sorted = passengers.windows(2).all(|w| order_key(&w[0]) < order_key(&w[1]));
        if !sorted {
            passengers.sort_by_key(order_key);
        }
        let mut ids: Vec<u32> = passengers.iter().map(|p| p.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(TraceError::DuplicateId(w[0]));
        }
        Ok((Self { passengers }, !sorted))
    }

    /// Order-preserving subset; callers guarantee the source was valid.
    fn from_sorted(passengers: Vec<Passenger>) -> Self {
        debug_assert!(passengers.windows(2).all(|w| order_key(&w[0]) < order_key(&w[1])));
        Self { passengers }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Number of passengers.
    pub fn np(&self) -> usize {
        self.passengers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passengers.is_empty()
    }

    pub fn passengers(&self) -> &[Passenger] {
        &self.passengers
    }

    pub fn first(&self) -> Option<&Passenger> {
        self.passengers.first()
    }

    pub fn last(&self) -> Option<&Passenger> {
        self.passengers.last()
    }

    pub fn ids(&self) -> Vec<u32> {
        self.passengers.iter().map(|p| p.id).collect()
    }

    pub fn position_of(&self, id: u32) -> Option<usize> {
        self.passengers.iter().position(|p| p.id == id)
    }

    /// Passengers at index `start` (0-based) and after.
    pub fn suffix_from(&self, start: usize) -> Self {
        let start = start.min(self.passengers.len());
        Self::from_sorted(self.passengers[start..].to_vec())
    }

    /// Keeps passengers satisfying `keep`, preserving order.
    pub fn filtered(&self, mut keep: impl FnMut(&Passenger) -> bool) -> Self {
        Self::from_sorted(self.passengers.iter().filter(|p| keep(p)).cloned().collect())
    }

    /// Whether every passenger of `self` also appears in `other`.
    pub fn is_subset_of(&self, other: &TestInput) -> bool {
        let mut ids: Vec<u32> = other.ids();
        ids.sort_unstable();
        self.passengers.iter().all(|p| ids.binary_search(&p.id).is_ok())
    }
}

impl fmt::Display for TestInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.passengers.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "p{}", p.id)?;
        }
        write!(f, "}}")
    }
}

fn order_key(p: &Passenger) -> (i64, u32) {
    (p.at, p.id)
}

#[derive(Deserialize)]
struct PassengerRepr {
    id: u32,
    at: i64,
    af: u32,
    df: u32,
    m: f64,
    cf: f64,
    ent: f64,
    ext: f64,
}

impl<'de> Deserialize<'de> for Passenger {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let r = PassengerRepr::deserialize(de)?;
        Passenger::new(r.id, r.at, r.af, r.df, r.m, r.cf, r.ent, r.ext).map_err(serde::de::Error::custom)
    }
}

impl<'de> Deserialize<'de> for TestInput {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            passengers: Vec<Passenger>,
        }
        let r = Repr::deserialize(de)?;
        TestInput::new(r.passengers).map_err(serde::de::Error::custom)
    }
}
