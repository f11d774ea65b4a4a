#![no_main]

use libfuzzer_sys::fuzz_target;
use lift_ddmin::trace::{generate_trace, TrafficSpec};

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = serde_json::from_slice::<TrafficSpec>(data) else { return };
    let total = spec.passengers + spec.bursts.iter().map(|b| b.passengers).sum::<usize>();
    if total > 2_000 || spec.floors > 500 {
        return;
    }
    if let Ok(ti) = generate_trace(&spec, 0) {
        assert_eq!(ti.np(), total);
        assert_eq!(ti, generate_trace(&spec, 0).unwrap());
    }
});
