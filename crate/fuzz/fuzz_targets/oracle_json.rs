#![no_main]

use libfuzzer_sys::fuzz_target;
use lift_ddmin::oracle::OracleConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(cfg) = serde_json::from_slice::<OracleConfig>(data) else { return };
    if cfg.validate().is_err() {
        return;
    }
    for i in 0..cfg.requirements.len() {
        let limit = cfg.requirements[i].limit;
        // Nothing at or below the limit ever fires.
        assert!(!cfg.fires(i, limit));
        let _ = cfg.fires(i, limit + 1.0);
    }
});
