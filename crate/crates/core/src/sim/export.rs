use std::io::Write;

use super::{EnvState, PassengerOutcome, SimError};

pub const OUTCOME_HEADER: &str = "id,elevator_used,t_elev_arrived,t_reached_destination,wt,tt";

/// Per-passenger results as CSV, times to one decimal place. Passengers cut
/// off by a stop time have empty destination and transit columns.
pub fn write_outcomes(outcomes: &[PassengerOutcome], mut out: impl Write) -> Result<(), SimError> {
    writeln!(out, "{OUTCOME_HEADER}")?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.1}")).unwrap_or_default();
    for o in outcomes {
        writeln!(
            out,
            "{},{},{:.1},{},{:.1},{}",
            o.passenger_id,
            o.elevator_used,
            o.t_elev_arrived,
            opt(o.t_reached_destination),
            o.wt,
            opt(o.tt)
        )?;
    }
    Ok(())
}

/// One JSON object per line.
pub fn write_env_log(log: &[EnvState], mut out: impl Write) -> Result<(), SimError> {
    for state in log {
        serde_json::to_writer(&mut out, state)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
