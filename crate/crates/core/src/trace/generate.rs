use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    Passenger, TestInput, TraceError, DEFAULT_CAPACITY_FACTOR, DEFAULT_MASS, DEFAULT_TRANSFER_TIME,
};

/// Shape of the arrival process and of the origin/destination matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficProfile {
    /// Uniform arrivals, uniform origin and destination.
    Uniform,
    /// Arrivals peak mid-window; most trips go to or from the lobby.
    LunchPeak,
    /// Almost every passenger enters at the lobby.
    UpPeak,
}

/// Synthetic traffic description, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSpec {
    pub floors: u32,
    pub passengers: usize,
    /// Inclusive arrival window `[start, end]` in seconds since midnight.
    pub window: [i64; 2],
    pub profile: TrafficProfile,
    /// Sub-intervals of the window with no arrivals.
    #[serde(default)]
    pub lulls: Vec<[i64; 2]>,
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default = "default_cf")]
    pub capacity_factor: f64,
    #[serde(default = "default_transfer")]
    pub entering_time: f64,
    #[serde(default = "default_transfer")]
    pub exiting_time: f64,
    /// Extra arrivals on top of the main window, each with its own shape.
    #[serde(default)]
    pub bursts: Vec<Burst>,
}

/// A secondary batch of arrivals, e.g. a lunch rush after a quiet spell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Burst {
    pub passengers: usize,
    pub window: [i64; 2],
    pub profile: TrafficProfile,
}

fn default_mass() -> f64 {
    DEFAULT_MASS
}
fn default_cf() -> f64 {
    DEFAULT_CAPACITY_FACTOR
}
fn default_transfer() -> f64 {
    DEFAULT_TRANSFER_TIME
}

impl TrafficSpec {
    pub fn new(floors: u32, passengers: usize, window: [i64; 2], profile: TrafficProfile) -> Self {
        Self {
            floors,
            passengers,
            window,
            profile,
            lulls: Vec::new(),
            mass: DEFAULT_MASS,
            capacity_factor: DEFAULT_CAPACITY_FACTOR,
            entering_time: DEFAULT_TRANSFER_TIME,
            exiting_time: DEFAULT_TRANSFER_TIME,
            bursts: Vec::new(),
        }
    }

    pub fn with_burst(mut self, passengers: usize, window: [i64; 2], profile: TrafficProfile) -> Self {
        self.bursts.push(Burst {
            passengers,
            window,
            profile,
        });
        self
    }

    fn total(&self) -> usize {
        self.passengers + self.bursts.iter().map(|b| b.passengers).sum::<usize>()
    }

    pub fn with_lull(mut self, start: i64, end: i64) -> Self {
        self.lulls.push([start, end]);
        self
    }

    fn in_lull(&self, t: i64) -> bool {
        self.lulls.iter().any(|&[a, b]| t >= a && t <= b)
    }
}

const MAX_RESAMPLES: usize = 10_000;

/// Draws a reproducible trace: identical `(spec, seed)` give identical output.
pub fn generate_trace(spec: &TrafficSpec, seed: u64) -> Result<TestInput, TraceError> {
    if spec.floors < 2 {
        return Err(TraceError::Config(format!(
            "a building needs at least 2 floors, got {}",
            spec.floors
        )));
    }
    let shapes = std::iter::once((spec.passengers, spec.window, spec.profile))
        .chain(spec.bursts.iter().map(|b| (b.passengers, b.window, b.profile)));
    for (_, [start, end], _) in shapes.clone() {
        if start < 0 || end < start {
            return Err(TraceError::Config(format!("invalid window [{start}, {end}]")));
        }
    }
    if spec.total() == 0 {
        return Ok(TestInput::empty());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trips = Vec::with_capacity(spec.total());
    for (n, window, profile) in shapes {
        for _ in 0..n {
            let at = arrival_time(spec, window, profile, &mut rng)?;
            let (af, df) = floors(spec.floors, window, profile, at, &mut rng);
            trips.push((at, af, df));
        }
    }
    trips.sort_by_key(|t| t.0);

    let passengers = trips
        .into_iter()
        .enumerate()
        .map(|(i, (at, af, df))| {
            Passenger::new(
                i as u32 + 1,
                at,
                af,
                df,
                spec.mass,
                spec.capacity_factor,
                spec.entering_time,
                spec.exiting_time,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    TestInput::new(passengers)
}

fn arrival_time(
    spec: &TrafficSpec,
    [start, end]: [i64; 2],
    profile: TrafficProfile,
    rng: &mut ChaCha8Rng,
) -> Result<i64, TraceError> {
    let span = (end - start) as f64;
    for _ in 0..MAX_RESAMPLES {
        let u: f64 = match profile {
            TrafficProfile::Uniform | TrafficProfile::UpPeak => rng.random(),
            // Triangular density on [0, 1] with its mode at the middle.
            TrafficProfile::LunchPeak => (rng.random::<f64>() + rng.random::<f64>()) / 2.0,
        };
        let t = start + (u * (span + 1.0)).floor().min(span) as i64;
        if !spec.in_lull(t) {
            return Ok(t);
        }
    }
    Err(TraceError::Config("lulls leave no room for arrivals".into()))
}

fn floors(n: u32, window: [i64; 2], profile: TrafficProfile, at: i64, rng: &mut ChaCha8Rng) -> (u32, u32) {
    let upper = |rng: &mut ChaCha8Rng| rng.random_range(2..=n);
    let any_pair = |rng: &mut ChaCha8Rng| {
        let af = rng.random_range(1..=n);
        let mut df = rng.random_range(1..n);
        if df >= af {
            df += 1;
        }
        (af, df)
    };
    match profile {
        TrafficProfile::Uniform => any_pair(rng),
        TrafficProfile::UpPeak => {
            if rng.random_bool(0.95) {
                (1, upper(rng))
            } else {
                any_pair(rng)
            }
        }
        TrafficProfile::LunchPeak => {
            // Outgoing in the first half of the window, returning in the second.
            let mid = (window[0] + window[1]) / 2;
            let r: f64 = rng.random();
            if r < 0.8 {
                let toward_lobby = (at <= mid) == (r < 0.6);
                if toward_lobby {
                    (upper(rng), 1)
                } else {
                    (1, upper(rng))
                }
            } else {
                any_pair(rng)
            }
        }
    }
}
