#![no_main]

use libfuzzer_sys::fuzz_target;
use lift_ddmin::sim::BuildingConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(b) = serde_json::from_slice::<BuildingConfig>(data) {
        if b.validate().is_ok() {
            let text = serde_json::to_string(&b).unwrap();
            assert_eq!(b, serde_json::from_str::<BuildingConfig>(&text).unwrap());
        }
    }
});
