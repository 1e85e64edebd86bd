// SPDX-License-Identifier: Apache-2.0

//! Hypoelliptic linear Gaussian diffusions `dx = εAx dt + √ε B dW`: exact
//! bridge laws, minimal-like paths and small-time fluctuation limits.
//!
//! Every numeric routine is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases at the crate root fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bridge;
pub mod error;
pub mod fluct;
pub mod gramian;
pub mod matcore;
pub mod model;
pub mod presets;
pub mod quad;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix = matcore::Matrix<f64>;
pub type ModelSpec = model::ModelSpec<f64>;
pub type Filtration = model::Filtration<f64>;
pub type UBlocks = model::UBlocks<f64>;
pub type GramianSet = gramian::GramianSet<f64>;
pub type ScaledFrame = gramian::ScaledFrame<f64>;
pub type BridgeLaw = bridge::BridgeLaw<f64>;
pub type ProcessLaw = bridge::ProcessLaw<f64>;
pub type PathSet = bridge::PathSet<f64>;
pub type FluctuationLaw = fluct::FluctuationLaw<f64>;
pub type Preset = presets::Preset<f64>;

pub use fluct::{ConvergenceReport, ScalingPair};
pub use presets::PresetName;
