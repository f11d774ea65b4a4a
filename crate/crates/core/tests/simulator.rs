use lift_ddmin::sim::{self, checkpoint_from, detect_static_states, BuildingConfig, CarSpec, FaultConfig, RunOptions};
use lift_ddmin::trace::{generate_trace, Passenger, TestInput, TrafficProfile, TrafficSpec};
use lift_ddmin::{execute_test, SimOutcome};
use proptest::prelude::*;

fn one_car(floors: u32) -> BuildingConfig {
    BuildingConfig::new(floors, vec![CarSpec::standard(1)])
}

fn input(rows: &[(u32, i64, u32, u32)]) -> TestInput {
    TestInput::new(
        rows.iter()
            .map(|&(id, at, af, df)| Passenger::with_defaults(id, at, af, df).unwrap())
            .collect(),
    )
    .unwrap()
}

/// Hand-computed timeline for one car with standard parameters: 2 s per
/// floor (3.5 m at 1.75 m/s), 2 s to open, 1.2 s per transfer, 2 s dwell
/// after the last transfer, 2 s to close.
#[test]
fn single_car_timeline() {
    let ti = input(&[(1, 10, 1, 5), (2, 100, 9, 2)]);
    let out = execute_test(&ti, &one_car(10), &FaultConfig::None, None, None).unwrap();

    let floor = 2.0;
    let (open, close, dwell, transfer) = (2.0, 2.0, 2.0, 1.2);

    // Car waits at floor 1 with doors closed.
    let arrived1 = 10.0 + open;
    let reached1 = arrived1 + transfer + dwell + close + 4.0 * floor + open + transfer;
    // Car idles at floor 5 and fetches passenger 2 from floor 9.
    let arrived2 = 100.0 + 4.0 * floor + open;
    let reached2 = arrived2 + transfer + dwell + close + 7.0 * floor + open + transfer;

    let p1 = out.outcome(1).unwrap();
    let p2 = out.outcome(2).unwrap();
    assert!((p1.t_elev_arrived - arrived1).abs() < 1e-9);
    assert!((p1.t_reached_destination.unwrap() - reached1).abs() < 1e-9);
    assert!((p1.wt - 2.0).abs() < 1e-9);
    assert!((p2.t_elev_arrived - arrived2).abs() < 1e-9);
    assert!((p2.tt.unwrap() - (reached2 - arrived2)).abs() < 1e-9);
    assert_eq!(out.sim_start, 10);
}

#[test]
fn nearest_car_answers() {
    let b = BuildingConfig::new(10, vec![CarSpec::standard(1), CarSpec::standard(10)]);
    let ti = input(&[(1, 5, 9, 1), (2, 6, 2, 3)]);
    let out = execute_test(&ti, &b, &FaultConfig::None, None, None).unwrap();
    assert_eq!(out.outcome(1).unwrap().elevator_used, 1);
    assert_eq!(out.outcome(2).unwrap().elevator_used, 0);
}

#[test]
fn dead_car_call_is_handed_over() {
    let b = BuildingConfig::new(10, vec![CarSpec::standard(1), CarSpec::standard(10)]);
    let ti = input(&[(1, 5, 9, 1)]);
    let fault = FaultConfig::DeadCar {
        car: 1,
        detect_after: 60.0,
    };
    let out = execute_test(&ti, &b, &fault, None, None).unwrap();
    let p = out.outcome(1).unwrap();
    assert_eq!(p.elevator_used, 0);
    // 60 s stuck, then 8 floors and the doors.
    assert!((p.wt - (60.0 + 8.0 * 2.0 + 2.0)).abs() < 1e-9);
}

fn buildings() -> Vec<BuildingConfig> {
    vec![
        BuildingConfig::new(6, vec![CarSpec::standard(1), CarSpec::standard(6)]),
        BuildingConfig::new(8, vec![CarSpec::standard(1), CarSpec::standard(4), CarSpec::standard(8)]),
    ]
}

fn faults() -> Vec<FaultConfig> {
    vec![
        FaultConfig::None,
        FaultConfig::DeadCar {
            car: 1,
            detect_after: 45.0,
        },
        FaultConfig::LoadBlind,
        FaultConfig::ParkingStorm,
        FaultConfig::StaleAssignment,
    ]
}

fn arb_case() -> impl Strategy<Value = (TestInput, BuildingConfig, FaultConfig)> {
    (any::<u64>(), 2usize..40, 0usize..2, 0usize..5, 0usize..3).prop_map(|(seed, n, b, f, profile)| {
        let building = buildings().swap_remove(b);
        let profile = [TrafficProfile::Uniform, TrafficProfile::UpPeak, TrafficProfile::LunchPeak][profile];
        let spec = TrafficSpec::new(building.floors, n, [0, 400], profile)
            .with_lull(150, 300)
            .with_burst(n / 2, [500, 560], profile);
        (generate_trace(&spec, seed).unwrap(), building, faults().swap_remove(f))
    })
}

fn served(out: &SimOutcome, ti: &TestInput) -> bool {
    out.outcomes.len() == ti.np() && out.outcomes.iter().all(|o| o.t_reached_destination.is_some())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn every_passenger_is_served((ti, b, f) in arb_case()) {
        let out = execute_test(&ti, &b, &f, None, None).unwrap();
        prop_assert!(served(&out, &ti));
        for o in &out.outcomes {
            let p = &ti.passengers()[ti.position_of(o.passenger_id).unwrap()];
            prop_assert!(o.wt >= 0.0);
            prop_assert!((o.t_elev_arrived - p.at() as f64 - o.wt).abs() < 1e-6);
            prop_assert!(o.tt.unwrap() > 0.0);
        }
    }

    #[test]
    fn runs_are_deterministic((ti, b, f) in arb_case()) {
        let a = execute_test(&ti, &b, &f, None, None).unwrap();
        let c = execute_test(&ti, &b, &f, None, None).unwrap();
        prop_assert_eq!(a, c);
    }

    /// For dispatchers without memory, restarting from a static state with
    /// only the later passengers replays the original exactly.
    #[test]
    fn static_state_restart_replays((ti, b, f) in arb_case()) {
        prop_assume!(f.is_memoryless());
        let full = execute_test(&ti, &b, &f, None, None).unwrap();
        for state in detect_static_states(&full, f64::INFINITY, 5) {
            let rest = ti.filtered(|p| p.at() > state.t_end);
            if rest.is_empty() {
                continue;
            }
            let cp = checkpoint_from(&state);
            let part = execute_test(&rest, &b, &f, Some(&cp), None).unwrap();
            for o in &part.outcomes {
                prop_assert_eq!(Some(o), full.outcome(o.passenger_id));
            }
            prop_assert!(served(&part, &rest));
        }
    }

    /// Halting at a time gives a prefix of the full run.
    #[test]
    fn stopping_early_is_a_prefix((ti, b, f) in arb_case(), cut in 0.0f64..1.0) {
        let full = execute_test(&ti, &b, &f, None, None).unwrap();
        let stop = full.sim_start + ((full.sim_end - full.sim_start as f64) * cut) as i64;
        let opts = RunOptions { checkpoint: None, stop_time: Some(stop), record_env: false };
        let part = sim::run(&ti, &b, &f, &opts, &mut ()).unwrap();
        for o in &part.outcomes {
            let whole = full.outcome(o.passenger_id).unwrap();
            prop_assert!(o.t_elev_arrived <= stop as f64);
            prop_assert_eq!(o.t_elev_arrived, whole.t_elev_arrived);
            if let Some(t) = o.t_reached_destination {
                prop_assert_eq!(Some(t), whole.t_reached_destination);
            }
        }
        for o in &full.outcomes {
            if o.t_elev_arrived <= stop as f64 {
                prop_assert!(part.outcome(o.passenger_id).is_some());
            }
        }
    }
}
