//! Batch front end for `levy-core`: a thread-pool runner for the Monte-Carlo
//! loops, TOML run specifications, JSON/CSV reports and plot data.
//!
//! A run is driven by one spec file:
//!
//! ```toml
//! tasks = ["all"]
//! seed = 7
//!
//! [model]
//! dimension = 1
//! family = "isotropic-stable"
//! alpha = 1.0
//!
//! [[domains]]
//! name = "unit"
//! shape = "interval"
//! lo = -1.0
//! hi = 1.0
//!
//! [[simulate]]
//! estimator = "exit-time"
//! domain = "unit"
//! x = [0.5]
//! ```

pub mod io;
pub mod plotdata;
pub mod report;
pub mod run;
pub mod runner;
pub mod spec;

pub use report::Report;
pub use run::{compute, execute, RunOptions, RunOutcome};
pub use runner::Parallel;
pub use spec::{RunSpec, SpecError};
