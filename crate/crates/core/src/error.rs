// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use crate::control::TonePlan;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the crate.
///
/// Variants are grouped into coarse classes (see [`ErrorClass`]) so that the
/// command-line runner can map them onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unidentifiable model: {0}")]
    Identifiability(String),

    #[error("infeasible tone plan: {0}")]
    Infeasible(String),

    #[error("tone plan violates constraints: {message}")]
    ConstrainedInfeasible {
        message: String,
        best: Box<TonePlan>,
    },

    #[error("circuit planning error: {0}")]
    Planning(String),

    #[error("scheduling error: {0}")]
    Scheduling(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed configuration, scenario, or user input.
    Schema,
    Numerical,
    Infeasible,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Input(_)
            | Error::Parse { .. }
            | Error::Config(_)
            | Error::Json(_)
            | Error::Scheduling(_) => ErrorClass::Schema,
            Error::Numerical(_) | Error::Identifiability(_) => ErrorClass::Numerical,
            Error::Infeasible(_) | Error::ConstrainedInfeasible { .. } | Error::Planning(_) => {
                ErrorClass::Infeasible
            }
            Error::Io(_) | Error::Csv(_) => ErrorClass::Io,
        }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
