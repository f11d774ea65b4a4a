#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lift_ddmin::ReductionContext;
use lift_ddmin_cli::{Inputs, RunManifest};

pub const CATALOGUE: [&str; 9] = [
    "dead_car_uniform",
    "dead_car_up_peak",
    "load_blind_up_peak",
    "load_blind_lunch_peak",
    "parking_storm_uniform",
    "parking_storm_lunch_peak",
    "stale_assignment_uniform",
    "stale_assignment_lunch_peak",
    "load_blind_saturated",
];

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn manifest_path(name: &str) -> PathBuf {
    repo_root().join("scenarios").join(name).join("manifest.json")
}

pub fn manifest(name: &str) -> RunManifest {
    RunManifest::load(&manifest_path(name)).unwrap()
}

pub fn inputs(name: &str) -> Inputs {
    manifest(name).load_inputs().unwrap()
}

pub fn context(name: &str, threshold: f64) -> ReductionContext {
    inputs(name).context(threshold, true).unwrap()
}

pub fn fixture_csv() -> PathBuf {
    repo_root().join("crates/core/tests/data/running_example.csv")
}

pub fn lift_ddmin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lift-ddmin"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}
