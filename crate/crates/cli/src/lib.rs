// SPDX-License-Identifier: Apache-2.0

//! Library half of the `hypobridge` command: model files, grid descriptions and the
//! analyze / bridge / converge commands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod grid;
pub mod modelfile;

pub use error::CliError;
