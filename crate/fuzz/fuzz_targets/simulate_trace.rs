#![no_main]

use libfuzzer_sys::fuzz_target;
use lift_ddmin::sim::{BuildingConfig, CarSpec, FaultConfig};
use lift_ddmin::trace::read_test_input;
use lift_ddmin::execute_test;

// Any trace that loads and fits the building must run to completion.
fuzz_target!(|data: &[u8]| {
    let Some((&pick, csv)) = data.split_first() else { return };
    let Ok(loaded) = read_test_input(csv) else { return };
    let ti = loaded.input;
    let building = BuildingConfig::new(10, vec![CarSpec::standard(1), CarSpec::standard(10)]);
    if ti.np() > 64 || ti.passengers().iter().any(|p| p.af() > 10 || p.df() > 10) {
        return;
    }
    let fault = match pick % 5 {
        0 => FaultConfig::None,
        1 => FaultConfig::DeadCar { car: 1, detect_after: 60.0 },
        2 => FaultConfig::LoadBlind,
        3 => FaultConfig::ParkingStorm,
        _ => FaultConfig::StaleAssignment,
    };
    if let Ok(out) = execute_test(&ti, &building, &fault, None, None) {
        assert_eq!(out.outcomes.len(), ti.np());
    }
});
