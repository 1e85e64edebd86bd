// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("pair (A, B) is not controllable: rank {rank} < dimension {dim}")]
    NotControllable { rank: usize, dim: usize },

    #[error("controllability Gramian is singular at t = {t}")]
    SingularGramian { t: f64 },

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("matrix is not positive semidefinite: pivot {index} = {pivot:e}")]
    NotPsd { index: usize, pivot: f64 },

    #[error("matrix is not symmetric (max deviation {deviation:e})")]
    Asymmetric { deviation: f64 },

    #[error("time arguments out of order or outside [0, 1]: t1 = {t1}, t2 = {t2}")]
    BadTimeOrder { t1: f64, t2: f64 },

    #[error("invalid time grid: {0}")]
    BadGrid(String),

    #[error("matrix is ill-conditioned (condition estimate {cond:e})")]
    IllConditioned { cond: f64 },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("unsupported dimension {dim} for preset {preset} (allowed {min}..={max})")]
    UnsupportedDimension { preset: &'static str, dim: usize, min: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
