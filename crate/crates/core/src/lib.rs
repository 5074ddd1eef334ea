// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

pub mod cli;
pub mod control;
pub mod error;
pub mod estimators;
pub mod expsim;
pub mod ion_model;
pub mod lindblad;
pub mod qcore;
pub mod stark;

pub use error::{Error, ErrorClass, Result};
