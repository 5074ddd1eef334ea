// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Closed-form AC Stark light shifts, spin phases, and visibility loss.
//!
//! A detuned drive on a lossy two-level system with detuning `delta` and
//! decay `gamma` has complex detuning `z = delta + i gamma/2`. The dressed
//! ground state is `|g> + c|e>` and its energy moves by `Re(dE)`. The two
//! spin-conserving lines A and B see different detunings, so the spin
//! states pick up different shifts.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ion_model::IonSpec;
use crate::qcore::{StateVector, ONE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarkPulse {
    /// Optical Rabi frequency, rad/s.
    pub omega: f64,
    /// Seconds.
    pub duration: f64,
    /// Hz, same reference as the ion transition frequencies.
    pub laser_freq: f64,
}

impl StarkPulse {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega >= 0.0 && self.duration >= 0.0 && self.laser_freq.is_finite()) {
            return Err(Error::input("Stark pulse needs omega >= 0, duration >= 0, finite frequency"));
        }
        Ok(())
    }

    /// Pulse energy `T * Omega^2` in rad^2/s.
    pub fn energy(&self) -> f64 {
        self.duration * self.omega * self.omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarkResult {
    pub laser_freq: f64,
    pub phase: f64,
    pub visibility_loss: f64,
    pub delta_a: f64,
    pub delta_b: f64,
}

/// Which linewidth enters the phase and loss formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linewidth {
    /// Broadened line `gamma_eff`.
    #[default]
    Effective,
    /// Radiative rate only.
    Radiative,
}

impl Linewidth {
    pub fn of(self, ion: &IonSpec) -> f64 {
        match self {
            Linewidth::Effective => ion.gamma_eff,
            Linewidth::Radiative => ion.gamma_rad,
        }
    }
}

fn check_inputs(omega: f64, delta: f64, gamma: f64) -> Result<()> {
    if !(omega.is_finite() && delta.is_finite() && gamma.is_finite()) || gamma < 0.0 {
        return Err(Error::input("omega, delta must be finite and gamma >= 0"));
    }
    if omega == 0.0 && delta == 0.0 && gamma == 0.0 {
        return Err(Error::input("degenerate drive: omega, delta and gamma are all zero"));
    }
    Ok(())
}

/// Excited amplitude `c` of the dressed ground state, exact.
///
/// Uses the root that tends to `Omega / (2 z)` as `Omega -> 0` for either
/// sign of the detuning. Written as `Omega / (z (1 + sqrt(1 + Omega^2/z^2)))`
/// so that it does not cancel when `Omega << |z|`.
pub fn dressed_amplitude(omega: f64, delta: f64, gamma: f64) -> Result<C64> {
    check_inputs(omega, delta, gamma)?;
    let z = C64::new(delta, gamma / 2.0);
    if z.norm() == 0.0 {
        return Ok(C64::new(omega.signum(), 0.0));
    }
    if omega == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let x = (omega * omega) / (z * z);
    Ok(omega / (z * ((ONE + x).sqrt() + 1.0)))
}

/// First-order amplitude `Omega / (2 z)`.
pub fn dressed_amplitude_approx(omega: f64, delta: f64, gamma: f64) -> Result<C64> {
    check_inputs(omega, delta, gamma)?;
    let z = C64::new(delta, gamma / 2.0);
    if z.norm() == 0.0 {
        return Err(Error::input("first-order amplitude diverges on resonance with gamma = 0"));
    }
    Ok(omega / (2.0 * z))
}

/// Unnormalized dressed ground state `|g> + c|e>`.
pub fn perturbed_ground_state(omega: f64, delta: f64, gamma: f64) -> Result<StateVector> {
    let c = dressed_amplitude(omega, delta, gamma)?;
    StateVector::new(vec![ONE, c])
}

pub fn perturbed_ground_state_approx(omega: f64, delta: f64, gamma: f64) -> Result<StateVector> {
    let c = dressed_amplitude_approx(omega, delta, gamma)?;
    StateVector::new(vec![ONE, c])
}

/// Light shift of the ground state in rad/s.
///
/// `exact = false` gives `(Omega^2/4) delta / (delta^2 + gamma^2/4)`.
pub fn energy_shift(omega: f64, delta: f64, gamma: f64, exact: bool) -> Result<f64> {
    check_inputs(omega, delta, gamma)?;
    if !exact {
        let den = delta * delta + gamma * gamma / 4.0;
        if den == 0.0 {
            return Err(Error::input("first-order shift diverges on resonance with gamma = 0"));
        }
        return Ok(omega * omega / 4.0 * delta / den);
    }
    // dE = (s - z)/2 with s the root continuous with z, i.e. Omega * c / 2.
    let c = dressed_amplitude(omega, delta, gamma)?;
    Ok((omega * c / 2.0).re)
}

/// Lorentzian dispersive and absorptive kernels `(d/(d^2+g^2/4), 1/(d^2+g^2/4))`.
fn kernels(delta: f64, gamma: f64) -> (f64, f64) {
    let den = delta * delta + gamma * gamma / 4.0;
    if den == 0.0 {
        (0.0, f64::INFINITY)
    } else {
        (delta / den, 1.0 / den)
    }
}

/// Phase from detunings and pulse energy `T Omega^2`.
pub fn phase_from_detunings(energy: f64, delta_a: f64, delta_b: f64, gamma: f64) -> f64 {
    if energy == 0.0 {
        return 0.0;
    }
    let (da, _) = kernels(delta_a, gamma);
    let (db, _) = kernels(delta_b, gamma);
    energy / 4.0 * (db - da)
}

/// `-ln(1 - loss)`, linear in the pulse energy.
pub fn loss_exponent(energy: f64, delta_a: f64, delta_b: f64, gamma: f64) -> f64 {
    if energy == 0.0 || gamma == 0.0 {
        return 0.0;
    }
    let (_, la) = kernels(delta_a, gamma);
    let (_, lb) = kernels(delta_b, gamma);
    gamma * energy / 8.0 * (la + lb)
}

/// Visibility loss from detunings and pulse energy `T Omega^2`.
pub fn loss_from_detunings(energy: f64, delta_a: f64, delta_b: f64, gamma: f64) -> f64 {
    -(-loss_exponent(energy, delta_a, delta_b, gamma)).exp_m1()
}

fn effective_energy(pulse: &StarkPulse, ion: &IonSpec) -> f64 {
    pulse.energy() * ion.optical_coupling
}

/// Phase between the spin states, using `gamma_eff`.
pub fn spin_phase(pulse: &StarkPulse, ion: &IonSpec) -> f64 {
    spin_phase_with(pulse, ion, Linewidth::Effective)
}

pub fn spin_phase_with(pulse: &StarkPulse, ion: &IonSpec, lw: Linewidth) -> f64 {
    let (da, db) = ion.detunings(pulse.laser_freq);
    phase_from_detunings(effective_energy(pulse, ion), da, db, lw.of(ion))
}

/// Large-detuning phase `T Omega^2 (1/Delta_B - 1/Delta_A) / 4`.
pub fn spin_phase_far_detuned(pulse: &StarkPulse, ion: &IonSpec) -> f64 {
    let (da, db) = ion.detunings(pulse.laser_freq);
    effective_energy(pulse, ion) / 4.0 * (1.0 / db - 1.0 / da)
}

pub fn visibility_loss(pulse: &StarkPulse, ion: &IonSpec) -> f64 {
    visibility_loss_with(pulse, ion, Linewidth::Effective)
}

pub fn visibility_loss_with(pulse: &StarkPulse, ion: &IonSpec, lw: Linewidth) -> f64 {
    let (da, db) = ion.detunings(pulse.laser_freq);
    loss_from_detunings(effective_energy(pulse, ion), da, db, lw.of(ion))
}

/// Large-detuning loss `1 - exp(-T Gamma Omega^2 (Delta_A^-2 + Delta_B^-2) / 8)`.
pub fn visibility_loss_far_detuned(pulse: &StarkPulse, ion: &IonSpec) -> f64 {
    let (da, db) = ion.detunings(pulse.laser_freq);
    let e = effective_energy(pulse, ion) * ion.gamma_eff;
    -(-(e / 8.0 * (1.0 / (da * da) + 1.0 / (db * db)))).exp_m1()
}

pub fn evaluate(pulse: &StarkPulse, ion: &IonSpec, lw: Linewidth) -> StarkResult {
    let (delta_a, delta_b) = ion.detunings(pulse.laser_freq);
    StarkResult {
        laser_freq: pulse.laser_freq,
        phase: spin_phase_with(pulse, ion, lw),
        visibility_loss: visibility_loss_with(pulse, ion, lw),
        delta_a,
        delta_b,
    }
}

/// Phase and loss at every laser frequency of `grid` (Hz).
pub fn sweep_frequency(ion: &IonSpec, template: &StarkPulse, grid: &[f64]) -> Vec<StarkResult> {
    sweep_frequency_with(ion, template, grid, Linewidth::Effective)
}

pub fn sweep_frequency_with(ion: &IonSpec, template: &StarkPulse, grid: &[f64], lw: Linewidth) -> Vec<StarkResult> {
    grid.iter()
        .map(|&f| evaluate(&StarkPulse { laser_freq: f, ..*template }, ion, lw))
        .collect()
}

/// Uniform grid of `n` points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ion_model::{presets, TWO_PI};
    use proptest::prelude::*;

    fn test_ion(f_a: f64, f_b: f64, gamma: f64) -> IonSpec {
        IonSpec { f_a, f_b, gamma_eff: gamma, gamma_rad: 0.0, ..presets::ion2() }
    }

    #[test]
    fn dressed_state_examples() {
        let s = perturbed_ground_state(0.0, 5.0, 1.0).unwrap();
        assert_eq!(s.amps()[1], C64::new(0.0, 0.0));
        assert_eq!(s.amps()[0], ONE);
        let c = dressed_amplitude(1.0, 10.0, 0.0).unwrap();
        assert!((c.re - (101f64.sqrt() - 10.0)).abs() < 1e-15);
        assert!((c.re - 0.04988).abs() < 1e-5);
        let a = dressed_amplitude_approx(1.0, 10.0, 0.0).unwrap();
        assert!((a.re - 0.05).abs() < 1e-15);
    }

    #[test]
    fn dressed_state_is_eigenvector() {
        // H = W/2 (|g><e| + h.c.) - z|e><e|; check H v = E v with E = W c / 2.
        for &(w, d, g) in &[(1.0, 10.0, 0.0), (1.0, -10.0, 0.0), (0.3, -2.0, 1.5), (5.0, 0.5, 0.2)] {
            let c = dressed_amplitude(w, d, g).unwrap();
            let z = C64::new(d, g / 2.0);
            let e = w * c / 2.0;
            let hv0 = w / 2.0 * c;
            let hv1 = C64::new(w / 2.0, 0.0) - z * c;
            assert!((hv0 - e).norm() < 1e-12);
            assert!((hv1 - e * c).norm() < 1e-12);
        }
    }

    #[test]
    fn negative_detuning_stays_perturbative() {
        let c = dressed_amplitude(1.0, -10.0, 0.0).unwrap();
        assert!((c.re + 0.04988).abs() < 1e-5);
        let de = energy_shift(1.0, -10.0, 0.0, true).unwrap();
        assert!((de + 0.024938).abs() < 1e-6);
    }

    #[test]
    fn energy_shift_examples() {
        let de = energy_shift(1.0, 10.0, 0.0, true).unwrap();
        assert!((de - (101f64.sqrt() - 10.0) / 2.0).abs() < 1e-15);
        assert!((de - 0.024938).abs() < 1e-6);
        assert!((energy_shift(1.0, 10.0, 0.0, false).unwrap() - 0.025).abs() < 1e-15);
        assert_eq!(energy_shift(1.0, 0.0, 4.0, false).unwrap(), 0.0);
    }

    #[test]
    fn exact_shift_with_loss_matches_direct_root() {
        let (w, d, g) = (0.7, 3.0, 2.0);
        let z = C64::new(d, g / 2.0);
        let direct = ((z * z + w * w).sqrt() - z).re / 2.0;
        assert!((energy_shift(w, d, g, true).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(dressed_amplitude(0.0, 0.0, 0.0).is_err());
        assert!(energy_shift(0.0, 0.0, 0.0, true).is_err());
        assert!(energy_shift(1.0, 0.0, 0.0, false).is_err());
        let c = dressed_amplitude(2.0, 0.0, 0.0).unwrap();
        assert_eq!(c, ONE);
        assert!((energy_shift(2.0, 0.0, 0.0, true).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phase_examples() {
        let ion = test_ion(0.0, 200e6, 0.0);
        let p = StarkPulse { omega: 0.0, duration: 2e-6, laser_freq: 300e6 };
        assert_eq!(spin_phase(&p, &ion), 0.0);
        let same = test_ion(0.0, 0.0, 0.0);
        let p = StarkPulse { omega: 1e7, duration: 2e-6, laser_freq: 300e6 };
        assert_eq!(spin_phase(&p, &same), 0.0);

        // Delta_A = 250 MHz, Delta_B = 50 MHz.
        let ion = test_ion(0.0, 200e6, 1e-3);
        let p = StarkPulse { omega: TWO_PI * 1e6, duration: 2e-6, laser_freq: 250e6 };
        let far = spin_phase_far_detuned(&p, &ion);
        let want = 2e-6 * (TWO_PI * 1e6f64).powi(2) / 4.0 * (1.0 / (TWO_PI * 50e6) - 1.0 / (TWO_PI * 250e6));
        assert!((far - want).abs() < 1e-15);
        assert!((far - 0.0503).abs() < 1e-4);
        assert!((spin_phase(&p, &ion) - far).abs() / far < 1e-6);
    }

    #[test]
    fn loss_examples() {
        let ion = test_ion(0.0, 200e6, TWO_PI * 10e6);
        let p = StarkPulse { omega: 0.0, duration: 2e-6, laser_freq: 250e6 };
        assert_eq!(visibility_loss(&p, &ion), 0.0);
        let ion0 = test_ion(0.0, 200e6, 0.0);
        let p = StarkPulse { omega: TWO_PI * 1e6, duration: 2e-6, laser_freq: 250e6 };
        assert_eq!(visibility_loss(&p, &ion0), 0.0);

        let (t, w, g, da, db) = (2e-6, TWO_PI * 1e6, TWO_PI * 10e6, TWO_PI * 250e6, TWO_PI * 50e6);
        let want = 1.0 - (-t * g * w * w / 8.0 * (1.0 / (da * da) + 1.0 / (db * db))).exp();
        let far = visibility_loss_far_detuned(&p, &ion);
        assert!((far - want).abs() < 1e-15);
        let full = visibility_loss(&p, &ion);
        assert!((full - far).abs() / far < 0.02);
    }

    #[test]
    fn sweep_shape() {
        let ion = presets::ion2();
        let tpl = StarkPulse { omega: TWO_PI * 2e6, duration: 2e-6, laser_freq: 0.0 };
        let zero = sweep_frequency(&ion, &StarkPulse { omega: 0.0, ..tpl }, &linspace(-400e6, 400e6, 81));
        assert!(zero.iter().all(|r| r.phase == 0.0 && r.visibility_loss == 0.0));

        let at_a = sweep_frequency(&ion, &tpl, &[ion.f_a])[0];
        assert_eq!(at_a.delta_a, 0.0);
        let (_, db) = ion.detunings(ion.f_a);
        assert!((at_a.phase - phase_from_detunings(tpl.energy(), 1e-300, db, ion.gamma_eff)).abs() < 1e-9);

        // Symmetric lines: the midpoint is a stationary point of the phase,
        // and the largest magnitude sits about half a linewidth from a line.
        let sym = test_ion(-100e6, 100e6, TWO_PI * 5e6);
        let at = |f: f64| evaluate(&StarkPulse { laser_freq: f, ..tpl }, &sym, Linewidth::Effective).phase;
        assert!((at(20e6) - at(-20e6)).abs() < 1e-12 * at(0.0).abs());
        assert!(at(20e6).abs() > at(0.0).abs());
        let grid = linspace(-300e6, 300e6, 601);
        let res = sweep_frequency(&sym, &tpl, &grid);
        let best = res.iter().max_by(|a, b| a.phase.abs().total_cmp(&b.phase.abs())).unwrap();
        assert!((best.laser_freq.abs() - 100e6).abs() <= 3.5e6, "peak at {}", best.laser_freq);
        // Opposite-sign lobes outside the two lines.
        let lo = evaluate(&StarkPulse { laser_freq: -150e6, ..tpl }, &sym, Linewidth::Effective).phase;
        let mid = evaluate(&StarkPulse { laser_freq: 0.0, ..tpl }, &sym, Linewidth::Effective).phase;
        assert!(lo * mid < 0.0);
        let near_a = evaluate(&StarkPulse { laser_freq: -100e6, ..tpl }, &sym, Linewidth::Effective);
        let off = evaluate(&StarkPulse { laser_freq: -50e6, ..tpl }, &sym, Linewidth::Effective);
        assert!(near_a.visibility_loss > off.visibility_loss);
    }

    #[test]
    fn ratio_grows_with_detuning() {
        let ion = test_ion(0.0, 200e6, TWO_PI * 10e6);
        let tpl = StarkPulse { omega: TWO_PI * 1e6, duration: 2e-6, laser_freq: 0.0 };
        let mut prev = 0.0;
        for f in [600e6, 1e9, 2e9, 4e9] {
            let r = evaluate(&StarkPulse { laser_freq: f, ..tpl }, &ion, Linewidth::Effective);
            let ratio = r.phase.abs() / r.visibility_loss;
            assert!(ratio > prev);
            prev = ratio;
        }
    }

    proptest! {
        #[test]
        fn first_order_within_bound(d in 1.0..1e3f64, sign in prop::bool::ANY, frac in 1e-4..0.1f64) {
            let d = if sign { d } else { -d };
            let w = frac * d.abs();
            let ex = energy_shift(w, d, 0.0, true).unwrap();
            let ap = energy_shift(w, d, 0.0, false).unwrap();
            prop_assert!(((ex - ap) / ex).abs() < 0.0035);
        }

        #[test]
        fn swap_symmetry(fa in -1e9..1e9f64, fb in -1e9..1e9f64, f in -1e9..1e9f64, g in 0.0..1e8f64) {
            prop_assume!((fa - fb).abs() > 1.0);
            let p = StarkPulse { omega: 1e6, duration: 1e-6, laser_freq: f };
            let a = test_ion(fa, fb, g);
            let b = test_ion(fb, fa, g);
            prop_assert!((spin_phase(&p, &a) + spin_phase(&p, &b)).abs() <= 1e-12 * spin_phase(&p, &a).abs().max(1e-300));
            prop_assert!((visibility_loss(&p, &a) - visibility_loss(&p, &b)).abs() < 1e-15);
            let v = visibility_loss(&p, &a);
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn far_detuned_agrees(fa in -1e8..1e8f64, sep in 1e8..5e8f64, g_mhz in 0.1..10.0f64, far in 11.0..100.0f64, up in prop::bool::ANY) {
            let g = TWO_PI * g_mhz * 1e6;
            let ion = test_ion(fa, fa + sep, g);
            let off = far * g / TWO_PI;
            let f = if up { fa + sep + off } else { fa - off };
            let p = StarkPulse { omega: 1e6, duration: 1e-6, laser_freq: f };
            let full = spin_phase(&p, &ion);
            let approx = spin_phase_far_detuned(&p, &ion);
            prop_assert!(((full - approx) / full).abs() < 0.01);
        }
    }
}
