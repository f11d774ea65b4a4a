//! Minimization of failure-inducing passenger traces for elevator
//! dispatching.
//!
//! The crate bundles everything needed to reproduce a dispatching failure
//! and shrink the trace that triggers it:
//!
//! - [`trace`]: passenger records, arrival-ordered test inputs, CSV I/O and
//!   a seeded traffic generator.
//! - [`sim`]: a deterministic group-control simulator with fault injection,
//!   environment logging, static-state detection and checkpointed starts.
//! - [`oracle`]: severity scoring and thresholded pass/fail verdicts.
//! - [`reduce`]: time-based and event-based delta debugging, their
//!   environment-wise variants, and the backward baseline.
//! - [`metrics`]: execution-time reduction ratio, Vargha-Delaney effect
//!   size, and the comparison harness.

pub mod metrics;
pub mod oracle;
pub mod reduce;
pub mod sim;
pub mod trace;

pub use oracle::{judge, severity, OracleConfig, Requirement, Verdict};
pub use reduce::{Algorithm, ReductionContext, ReductionResult};
pub use sim::{execute_test, BuildingConfig, CarSpec, Checkpoint, FaultConfig, SimOutcome};
pub use trace::{Passenger, TestInput};
