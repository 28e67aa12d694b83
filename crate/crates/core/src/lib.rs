//! Potential-theoretic characteristics of isotropic unimodal Lévy processes.
//!
//! The crate computes the characteristic exponent `ψ` and its running maximum
//! `ψ*`, Pruitt's function `h` and its companions, the ladder-height Laplace
//! exponent `κ`, the renewal function `V`, the mean-value constants `H_r`, and
//! simulates exit times, survival probabilities, exit places, hitting
//! probabilities and Dynkin-operator estimates by Monte Carlo.
//!
//! Everything here is `no_std` with `alloc`. Parallel execution, file formats
//! and the command line live in the `levy-exit-lab` companion crate.
#![no_std]
#![warn(missing_debug_implementations)]
// std's inherent float methods shadow the trait in test builds

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod characteristics;
pub mod domains;
pub mod error;
pub mod laplace;
pub mod math;
pub mod model;
pub mod quad;
pub mod renewal;
pub mod simulate;
pub mod special;
pub mod verify;

pub use error::{Error, Result};

pub use model::{FamilySpec, LevyModel, ModelSpec, RadialDensity};
pub use quad::Tolerance;
pub use renewal::{RenewalTable, VMethod};

pub use characteristics::{CharacteristicProfile, ScalingReport};
pub use domains::{Domain, DomainSpec, Shape};
pub use simulate::{Estimator, McEstimate, SimConfig};
pub use verify::{BoundCheck, Verdict, VerifyConfig};
