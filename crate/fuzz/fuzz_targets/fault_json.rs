#![no_main]

use libfuzzer_sys::fuzz_target;
use lift_ddmin::sim::{BuildingConfig, CarSpec, FaultConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(fault) = serde_json::from_slice::<FaultConfig>(data) else { return };
    let building = BuildingConfig::new(10, vec![CarSpec::standard(1), CarSpec::standard(10)]);
    let _ = fault.validate(&building);
    let _ = fault.name();
});
