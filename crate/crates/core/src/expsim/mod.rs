// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Pulse sequences and shot-by-shot Monte Carlo of initialization, readout,
//! Ramsey and decoupled Stark-phase experiments.

pub mod experiments;
pub mod readout;
pub mod sequence;
pub mod shots;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ion_model::Spin;

pub use readout::{
    chi_square_independence, discriminate, mean_bright_counts, optimal_threshold, ChiSquare, Discrimination,
    IonFidelity, Rule,
};
pub use sequence::{
    build_init_sequence, build_readout_sequence, build_xy8_stark_sequence, Manifold, Placement, PulseSequence,
    ReadoutMode, SeqOp, Xy8Options,
};
pub use shots::run_shots;

/// Detection and excitation constants of the optical setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareSpec {
    /// Chance an emitted photon is detected.
    pub detect_prob_per_cycle: f64,
    /// Mean dark counts in one readout window.
    pub dark_mean_per_window: f64,
    /// Chance an optical pi pulse excites a bright ion.
    pub excitation_prob_per_pulse: f64,
    /// Chance a pulse addressed to one ion excites another ion bright on
    /// the same transition label.
    pub crosstalk_exc_prob: f64,
    /// Chance the excited-state microwave pi pulse swaps the excited spin.
    #[serde(default = "one")]
    pub excited_mw_fidelity: f64,
    /// Spacing of optical pulses during readout and initialization, seconds.
    #[serde(default = "default_period")]
    pub pulse_period: f64,
}

fn one() -> f64 {
    1.0
}

fn default_period() -> f64 {
    1e-6
}

impl HardwareSpec {
    pub fn ideal() -> Self {
        Self {
            detect_prob_per_cycle: 1.0,
            dark_mean_per_window: 0.0,
            excitation_prob_per_pulse: 1.0,
            crosstalk_exc_prob: 0.0,
            excited_mw_fidelity: 1.0,
            pulse_period: 1e-6,
        }
    }

    /// Illustrative values giving a few bright counts per 250-pulse window.
    pub fn typical() -> Self {
        Self {
            detect_prob_per_cycle: 0.05,
            dark_mean_per_window: 0.2,
            excitation_prob_per_pulse: 0.5,
            crosstalk_exc_prob: 0.0,
            excited_mw_fidelity: 1.0,
            pulse_period: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("detect_prob_per_cycle", self.detect_prob_per_cycle),
            ("excitation_prob_per_pulse", self.excitation_prob_per_pulse),
            ("crosstalk_exc_prob", self.crosstalk_exc_prob),
            ("excited_mw_fidelity", self.excited_mw_fidelity),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is not a probability")));
            }
        }
        if !(self.dark_mean_per_window >= 0.0 && self.dark_mean_per_window.is_finite()) {
            return Err(Error::Config("dark_mean_per_window must be >= 0".into()));
        }
        if !(self.pulse_period >= 0.0 && self.pulse_period.is_finite()) {
            return Err(Error::Config("pulse_period must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IonRecord {
    /// Photons detected while transition A was driven.
    pub n_a: u32,
    pub n_b: u32,
    /// Counts per analysis bin of the last readout window.
    pub bins: Vec<u32>,
    /// Spin at the start of the ion's first readout window.
    pub initial: Option<Spin>,
    /// Outcome of the last projective measurement.
    pub measured: Option<Spin>,
    /// Spin at the end of the shot.
    pub final_spin: Spin,
}

impl IonRecord {
    pub fn total(&self) -> u32 {
        self.n_a + self.n_b
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub ions: Vec<IonRecord>,
}
