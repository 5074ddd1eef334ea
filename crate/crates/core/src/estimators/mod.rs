// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Estimators for photon-count histograms and coherence curves.

pub mod decay;
pub mod extrapolate;
pub mod fringe;
pub mod lm;
pub mod poisson_mixture;
pub mod report;

pub use decay::{fit_exp_decay, fit_gaussian_decay, DecayFit, DecayPoint};
pub use extrapolate::{infidelity_extrapolate, BinEstimate, InfidelityExtrapolation};
pub use fringe::{fit_fringe, FringeFit};
pub use poisson_mixture::{fit_bimodal_poisson, BimodalFit, HistogramResult, MixtureInit, MixtureMode, MixtureOptions, Objective};
pub use report::FitReport;
