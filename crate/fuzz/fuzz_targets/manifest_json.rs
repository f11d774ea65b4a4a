#![no_main]

use libfuzzer_sys::fuzz_target;
use lift_ddmin_cli::RunManifest;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = serde_json::from_slice::<RunManifest>(data) {
        let text = serde_json::to_string(&m).unwrap();
        let _: RunManifest = serde_json::from_str(&text).unwrap();
    }
});
