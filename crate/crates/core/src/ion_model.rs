// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Emitter and cavity parameters.
//!
//! Frequencies of optical transitions are stored in Hz as offsets from a
//! common reference line. Rates and linewidths are angular (rad/s).

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Ground-state spin. `Up` is basis index 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn index(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Spin::Up
        } else {
            Spin::Down
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Spin::Up => "up",
            Spin::Down => "down",
        })
    }
}

/// Spin-conserving optical transition. A starts from `Up`, B from `Down`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transition {
    A,
    B,
}

impl Transition {
    /// Spin state that is bright on this transition.
    pub fn bright_spin(self) -> Spin {
        match self {
            Transition::A => Spin::Up,
            Transition::B => Spin::Down,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Transition::A => Transition::B,
            Transition::B => Transition::A,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinCoherence {
    /// Seconds.
    pub t1: f64,
    /// Seconds.
    pub t2_star: f64,
    /// Seconds, under XY8 decoupling.
    pub t2_xy8: f64,
}

impl SpinCoherence {
    pub fn validate(&self) -> Result<()> {
        if !(self.t1 > 0.0 && self.t2_star > 0.0 && self.t2_xy8 > 0.0) {
            return Err(Error::Config("coherence times must be positive".into()));
        }
        if self.t2_star > self.t2_xy8 {
            return Err(Error::Config(format!(
                "t2_star ({}) exceeds t2_xy8 ({})",
                self.t2_star, self.t2_xy8
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonSpec {
    pub label: String,
    /// Hz.
    pub f_a: f64,
    /// Hz.
    pub f_b: f64,
    /// Effective optical linewidth, rad/s (FWHM).
    pub gamma_eff: f64,
    /// Radiative decay rate, rad/s.
    pub gamma_rad: f64,
    pub cyclicity: f64,
    pub purcell: f64,
    pub spin: SpinCoherence,
    /// Microwave Rabi rate, rad/s.
    pub mw_rabi: f64,
    /// Transition used for single-transition readout.
    pub readout_transition: Transition,
    /// Relative optical intensity coupling; scales Omega^2 seen by this ion.
    pub optical_coupling: f64,
}

impl IonSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("ion '{}': {m}", self.label)));
        if !(self.f_a.is_finite() && self.f_b.is_finite()) {
            return bad("transition frequencies must be finite".into());
        }
        if self.f_a == self.f_b {
            return bad("f_a and f_b must differ".into());
        }
        if !(self.gamma_rad >= 0.0) || !(self.gamma_eff >= self.gamma_rad) {
            return bad(format!(
                "need 0 <= gamma_rad ({}) <= gamma_eff ({})",
                self.gamma_rad, self.gamma_eff
            ));
        }
        if !(self.cyclicity >= 1.0) {
            return bad(format!("cyclicity {} < 1", self.cyclicity));
        }
        if !(self.purcell > 0.0) {
            return bad(format!("purcell {} must be > 0", self.purcell));
        }
        if !(self.mw_rabi >= 0.0) || !(self.optical_coupling > 0.0) {
            return bad("mw_rabi must be >= 0 and optical_coupling > 0".into());
        }
        self.spin.validate()
    }

    pub fn freq(&self, t: Transition) -> f64 {
        match t {
            Transition::A => self.f_a,
            Transition::B => self.f_b,
        }
    }

    /// Angular detunings (Delta_A, Delta_B) of a laser at `f_laser` Hz.
    pub fn detunings(&self, f_laser: f64) -> (f64, f64) {
        (TWO_PI * (f_laser - self.f_a), TWO_PI * (f_laser - self.f_b))
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.f_a + self.f_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavitySpec {
    /// Hz.
    pub f_cav: f64,
    pub q_factor: f64,
}

impl CavitySpec {
    /// Energy decay linewidth kappa in Hz.
    pub fn kappa(&self) -> f64 {
        self.f_cav / self.q_factor
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q_factor > 0.0 && self.f_cav > 0.0) {
            return Err(Error::Config("cavity needs f_cav > 0 and q_factor > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagneticFieldConfig {
    pub magnitude_gauss: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
}

impl MagneticFieldConfig {
    pub fn validate(&self) -> Result<()> {
        let in_range = |a: f64| (0.0..360.0).contains(&a);
        if !(self.magnitude_gauss >= 0.0) || !in_range(self.theta_deg) || !in_range(self.phi_deg) {
            return Err(Error::Config("field needs magnitude >= 0 and angles in [0, 360)".into()));
        }
        Ok(())
    }
}

/// Lorentzian Purcell factor at cavity detuning `delta_cav` (Hz).
pub fn purcell_at_detuning(cavity: &CavitySpec, p0: f64, delta_cav: f64) -> Result<f64> {
    if !(p0 > 0.0) {
        return Err(Error::input(format!("p0 = {p0} must be > 0")));
    }
    Ok(purcell_lorentzian(cavity.kappa(), p0, delta_cav))
}

/// Same as [`purcell_at_detuning`] with the linewidth `kappa` (Hz) given directly.
pub fn purcell_lorentzian(kappa: f64, p0: f64, delta_cav: f64) -> f64 {
    let x = 2.0 * delta_cav / kappa;
    p0 / (1.0 + x * x)
}

/// Probability that one optical cycle flips the spin.
pub fn flip_prob_per_cycle(ion: &IonSpec) -> f64 {
    1.0 / ion.cyclicity
}

/// Bulk excited-state lifetime used to turn Purcell factors into radiative rates.
pub const BULK_LIFETIME_S: f64 = 11.4e-3;

/// Radiative rate (rad/s) for a Purcell-enhanced emitter.
pub fn radiative_rate(purcell: f64) -> f64 {
    (1.0 + purcell) / BULK_LIFETIME_S
}

pub mod presets {
    //! Default emitter parameters.
    //!
    //! Ions 1 and 2 sit about 250 MHz apart with 24 and 10 MHz lines. Their
    //! A/B splitting, cyclicity, and microwave Rabi rate are not measured
    //! quantities and are illustrative. Ions 3 to 6 carry the measured Purcell
    //! factors and cyclicities; their line positions and coherence times are
    //! placeholders.

    use super::*;

    pub const SPLIT_AB_HZ: f64 = 200e6;
    pub const CAVITY_HZ: f64 = 195.0e12;
    pub const CAVITY_Q: f64 = 4.6e4;

    #[allow(clippy::too_many_arguments)]
    fn ion(
        label: &str,
        center: f64,
        linewidth_hz: f64,
        cyclicity: f64,
        purcell: f64,
        spin: SpinCoherence,
        readout: Transition,
    ) -> IonSpec {
        IonSpec {
            label: label.into(),
            f_a: center - SPLIT_AB_HZ / 2.0,
            f_b: center + SPLIT_AB_HZ / 2.0,
            gamma_eff: TWO_PI * linewidth_hz,
            gamma_rad: radiative_rate(purcell),
            cyclicity,
            purcell,
            spin,
            mw_rabi: TWO_PI * 5e6,
            readout_transition: readout,
            optical_coupling: 1.0,
        }
    }

    pub fn ion1() -> IonSpec {
        ion(
            "ion1",
            250e6,
            24e6,
            1000.0,
            330.0,
            SpinCoherence { t1: 19.9, t2_star: 88e-9, t2_xy8: 16.5e-6 },
            Transition::B,
        )
    }

    pub fn ion2() -> IonSpec {
        ion(
            "ion2",
            0.0,
            10e6,
            1000.0,
            200.0,
            SpinCoherence { t1: 23.3, t2_star: 94e-9, t2_xy8: 15.3e-6 },
            Transition::B,
        )
    }

    /// Ions 3 to 6 of the four-ion register.
    pub fn register() -> Vec<IonSpec> {
        let placeholder = SpinCoherence { t1: 20.0, t2_star: 90e-9, t2_xy8: 16e-6 };
        [
            ("ion3", -18.0e9, 130.0, 780.0, Transition::A),
            ("ion4", -15.9e9, 260.0, 840.0, Transition::B),
            ("ion5", -14.1e9, 360.0, 750.0, Transition::B),
            ("ion6", -11.6e9, 50.0, 850.0, Transition::A),
        ]
        .into_iter()
        .map(|(l, c, p, cy, t)| ion(l, c, 20e6, cy, p, placeholder, t))
        .collect()
    }

    pub fn pair() -> Vec<IonSpec> {
        vec![ion1(), ion2()]
    }

    pub fn cavity() -> CavitySpec {
        CavitySpec { f_cav: CAVITY_HZ, q_factor: CAVITY_Q }
    }

    pub fn field() -> MagneticFieldConfig {
        MagneticFieldConfig { magnitude_gauss: 112.0, theta_deg: 90.0, phi_deg: 150.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn purcell_examples() {
        let kappa = 4.2e9;
        assert_eq!(purcell_lorentzian(kappa, 330.0, 0.0), 330.0);
        assert!((purcell_lorentzian(kappa, 330.0, kappa / 2.0) - 165.0).abs() < 1e-12);
        assert!((purcell_lorentzian(kappa, 330.0, 4.2e9) - 66.0).abs() < 1e-12);
        let cav = CavitySpec { f_cav: 4.2e9 * 1e4, q_factor: 1e4 };
        assert!((purcell_at_detuning(&cav, 330.0, 0.0).unwrap() - 330.0).abs() < 1e-12);
        assert!(purcell_at_detuning(&cav, 0.0, 0.0).is_err());
    }

    #[test]
    fn preset_cavity_linewidth_near_measured() {
        let k = presets::cavity().kappa();
        assert!((k - 4.2e9).abs() / 4.2e9 < 0.02, "kappa = {k}");
    }

    #[test]
    fn flip_probabilities() {
        let mut ion = presets::ion1();
        ion.cyclicity = 850.0;
        assert!((flip_prob_per_cycle(&ion) - 1.176e-3).abs() < 1e-6);
        ion.cyclicity = 780.0;
        assert!((flip_prob_per_cycle(&ion) - 1.282e-3).abs() < 1e-6);
        ion.cyclicity = 1.0;
        assert_eq!(flip_prob_per_cycle(&ion), 1.0);
    }

    #[test]
    fn presets_validate() {
        for ion in presets::pair().iter().chain(presets::register().iter()) {
            ion.validate().unwrap();
        }
        presets::field().validate().unwrap();
        presets::cavity().validate().unwrap();
        let c: Vec<f64> = presets::register().iter().map(|i| i.cyclicity).collect();
        assert_eq!(c, vec![780.0, 840.0, 750.0, 850.0]);
    }

    #[test]
    fn validation_catches_bad_ions() {
        let mut ion = presets::ion2();
        ion.f_b = ion.f_a;
        assert!(ion.validate().is_err());
        let mut ion = presets::ion2();
        ion.gamma_rad = ion.gamma_eff * 2.0;
        assert!(ion.validate().is_err());
        let mut ion = presets::ion2();
        ion.spin.t2_star = 1.0;
        assert!(ion.validate().is_err());
    }

    proptest! {
        #[test]
        fn purcell_even_and_decreasing(p0 in 1.0..1000.0f64, kappa in 1e8..1e10f64, d in 0.0..5e10f64, e in 0.0..5e10f64) {
            let a = purcell_lorentzian(kappa, p0, d);
            prop_assert_eq!(a, purcell_lorentzian(kappa, p0, -d));
            let b = purcell_lorentzian(kappa, p0, d + e);
            prop_assert!(b <= a);
        }
    }
}
