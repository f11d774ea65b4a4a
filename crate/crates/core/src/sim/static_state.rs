use serde::{Deserialize, Serialize};

use super::{Checkpoint, Direction, DoorState, EnvState, SimOutcome};

/// Shortest idle interval, in seconds, that counts as a static state.
pub const DEFAULT_MIN_DWELL: i64 = 5;

/// An interval during which the whole group stood still: every car idle
/// with doors closed and nobody inside, and no call pending anywhere.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticState {
    /// 1-based ordinal among the states detected in one run.
    pub index: usize,
    pub t_start: i64,
    pub t_end: i64,
    pub car_positions: Vec<u32>,
}

/// Whether one logged sample satisfies the static-state conditions.
pub fn is_static(state: &EnvState) -> bool {
    state.pending_calls == 0
        && state.cars.iter().all(|c| {
            c.direction == Direction::Idle
                && c.door == DoorState::Closed
                && c.occupants == 0
                && c.position.fract() == 0.0
        })
}

/// Maximal static intervals lasting at least `min_dwell` seconds and lying
/// strictly before `until`, in time order.
pub fn detect_static_states(outcome: &SimOutcome, until: f64, min_dwell: i64) -> Vec<StaticState> {
    let mut found = Vec::new();
    let mut run: Option<(i64, i64, Vec<u32>)> = None;

    let close = |run: &mut Option<(i64, i64, Vec<u32>)>, found: &mut Vec<StaticState>| {
        if let Some((t_start, t_end, car_positions)) = run.take() {
            if t_end - t_start >= min_dwell {
                found.push(StaticState {
                    index: found.len() + 1,
                    t_start,
                    t_end,
                    car_positions,
                });
            }
        }
    };

    for state in outcome.env_log.iter().take_while(|s| (s.time as f64) < until) {
        if !is_static(state) {
            close(&mut run, &mut found);
            continue;
        }
        let positions: Vec<u32> = state.cars.iter().map(|c| c.position as u32).collect();
        match run.as_mut() {
            // Positions cannot change without leaving the static state.
            Some((_, t_end, pos)) if *t_end + 1 == state.time && *pos == positions => *t_end = state.time,
            _ => {
                close(&mut run, &mut found);
                run = Some((state.time, state.time, positions));
            }
        }
    }
    close(&mut run, &mut found);
    found
}

/// The simulation start that reproduces a static state.
pub fn checkpoint_from(state: &StaticState) -> Checkpoint {
    Checkpoint {
        start_time: state.t_end,
        car_positions: state.car_positions.clone(),
    }
}
