use super::split::{split_max_event, split_max_time, split_min_event, split_min_time};
use super::{Algorithm, Executor, Phase, ReduceError, SearchOutcome};
use crate::oracle::TestResult;
use crate::sim::checkpoint_from;
use crate::trace::TestInput;

fn sim_time(ti: &TestInput) -> f64 {
    match (ti.first(), ti.last()) {
        (Some(a), Some(b)) => (b.at() - a.at()) as f64,
        _ => 0.0,
    }
}

/// Bisection over arrival time, starting from a failing `ti_prime`.
pub(super) fn dd_time(exec: &mut Executor<'_>, ti_prime: TestInput) -> Result<SearchOutcome, ReduceError> {
    if ti_prime.is_empty() {
        return Err(ReduceError::CannotReproduce);
    }
    let mut ti_prime = ti_prime;
    let sim_time = sim_time(&ti_prime);
    let cap = (sim_time.max(1.0)).log2().ceil() as usize + ti_prime.np();
    let mut it: u32 = 1;
    let mut ti_new = split_min_time(&ti_prime, sim_time, it);
    let mut rounds = 0;
    let mut aborted = None;
    while ti_prime.np() != ti_new.np() {
        if rounds >= cap {
            aborted = Some(format!("no convergence after {cap} iterations"));
            break;
        }
        rounds += 1;
        let Some(result) = exec.execute(&ti_new)? else { break };
        it += 1;
        match result {
            TestResult::Fail => {
                ti_prime = ti_new;
                ti_new = split_min_time(&ti_prime, sim_time, it);
            }
            TestResult::Pass => {
                let grown = split_max_time(&ti_new, &ti_prime, sim_time, it);
                if grown.np() == ti_new.np() {
                    // The window no longer reaches the next passenger; every
                    // later candidate would be this one again.
                    break;
                }
                ti_new = grown;
            }
        }
    }
    Ok(SearchOutcome {
        aborted,
        ..SearchOutcome::plain(ti_prime)
    })
}

/// Bisection over passenger count, starting from a failing `ti_prime`.
pub(super) fn dd_event(exec: &mut Executor<'_>, ti_prime: TestInput) -> Result<SearchOutcome, ReduceError> {
    if ti_prime.is_empty() {
        return Err(ReduceError::CannotReproduce);
    }
    let mut ti_prime = ti_prime;
    let mut split_size = ti_prime.np().div_ceil(2);
    let mut ti_new = split_min_event(&ti_prime, split_size);
    while ti_prime.np() != ti_new.np() {
        let Some(result) = exec.execute(&ti_new)? else { break };
        split_size = split_size.div_ceil(2);
        match result {
            TestResult::Fail => {
                ti_prime = ti_new;
                ti_new = split_min_event(&ti_prime, split_size);
            }
            TestResult::Pass => {
                ti_new = split_max_event(ti_new.np(), &ti_prime, split_size);
            }
        }
    }
    Ok(SearchOutcome::plain(ti_prime))
}

/// Restart from the latest idle period that still reproduces the failure,
/// then bisect with `flavor` from there.
pub(super) fn ewdd(exec: &mut Executor<'_>, flavor: Algorithm) -> Result<SearchOutcome, ReduceError> {
    let ctx = exec.ctx;
    let states = ctx.static_states();
    let ti_prime = ctx.split();
    let refine = |exec: &mut Executor<'_>, ti: TestInput| match flavor {
        Algorithm::DdTime => dd_time(exec, ti),
        _ => dd_event(exec, ti),
    };

    for state in states.iter().rev() {
        let candidate = ti_prime.filtered(|p| p.at() > state.t_end);
        if candidate.is_empty() {
            continue;
        }
        exec.checkpoint = Some(checkpoint_from(state));
        exec.phase = Phase::StaticState { index: state.index };
        let Some(result) = exec.execute(&candidate)? else {
            exec.checkpoint = None;
            break;
        };
        if result == TestResult::Fail {
            exec.phase = Phase::Search;
            let mut out = refine(exec, candidate)?;
            out.static_states_found = states.len();
            return Ok(out);
        }
        exec.checkpoint = None;
    }

    exec.phase = Phase::Search;
    let mut out = refine(exec, ti_prime)?;
    out.static_states_found = states.len();
    out.fell_back = true;
    Ok(out)
}

/// Grows a suffix from the conflicting passenger until it fails.
pub(super) fn backward(exec: &mut Executor<'_>) -> Result<SearchOutcome, ReduceError> {
    let ti_prime = exec.ctx.split();
    let conflict = exec.ctx.conflicting_passenger();
    let Some(mut start) = ti_prime.position_of(conflict) else {
        return Err(ReduceError::CannotReproduce);
    };
    loop {
        let candidate = ti_prime.suffix_from(start);
        match exec.execute(&candidate)? {
            Some(TestResult::Fail) => return Ok(SearchOutcome::plain(candidate)),
            // The whole split fails by construction; the final check
            // reports it otherwise.
            Some(TestResult::Pass) if start == 0 => return Ok(SearchOutcome::plain(candidate)),
            Some(TestResult::Pass) => start -= 1,
            None => return Ok(SearchOutcome::plain(ti_prime)),
        }
    }
}
