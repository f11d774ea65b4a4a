//! Candidate construction. Every split returns a suffix of its input in
//! arrival order; none of them simulate anything.

use crate::trace::TestInput;

/// Passengers that could have influenced the run up to the failing time:
/// everyone who arrived at or before `ft`.
pub fn split_on_failure(ti: &TestInput, ft: f64) -> TestInput {
    ti.filtered(|p| p.at() as f64 <= ft)
}

fn window(sim_time: f64, it: u32) -> f64 {
    sim_time / 2f64.powi(it.min(1023) as i32)
}

/// Drops the passengers arriving within `sim_time / 2^it` of the first one.
/// The first passenger itself is always dropped.
pub fn split_min_time(ti: &TestInput, sim_time: f64, it: u32) -> TestInput {
    let Some(first) = ti.first() else {
        return TestInput::empty();
    };
    let split = first.at() as f64 + window(sim_time, it);
    ti.filtered(|p| p.at() as f64 > split)
}

/// Grows `ti_new` backwards inside `ti_prev` by `sim_time / 2^it` seconds.
/// The result always contains `ti_new`.
///
/// An empty `ti_new` is anchored just after the last passenger of
/// `ti_prev`, so the candidate restarts from the tail.
pub fn split_max_time(ti_new: &TestInput, ti_prev: &TestInput, sim_time: f64, it: u32) -> TestInput {
    let anchor = match (ti_new.first(), ti_prev.last()) {
        (Some(p), _) => p.at(),
        (None, Some(last)) => last.at(),
        (None, None) => return TestInput::empty(),
    };
    let split = anchor as f64 - window(sim_time, it);
    ti_prev.filtered(|p| p.at() as f64 >= split)
}

/// Drops the first `split_size - 1` passengers.
pub fn split_min_event(ti: &TestInput, split_size: usize) -> TestInput {
    ti.suffix_from(split_size.saturating_sub(1))
}

/// Takes `split_size` more passengers from `ti_prev` than the `size_ti`
/// that just passed, by dropping the first `np - (size_ti + split_size)`.
pub fn split_max_event(size_ti: usize, ti_prev: &TestInput, split_size: usize) -> TestInput {
    let drop = ti_prev.np().saturating_sub(size_ti + split_size);
    ti_prev.suffix_from(drop)
}
