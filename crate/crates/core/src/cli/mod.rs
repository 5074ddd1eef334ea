// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Configuration loading, scenario execution and artifact output behind the
//! `ionmux` binary.

pub mod artifacts;
pub mod config;
pub mod scenario;

pub use config::{Config, Resolved};
pub use scenario::{execute, run, run_all, Experiment, RunReport, Scenario, ScenarioFile};
