// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Shot engine.
//!
//! Each ion carries a 2x2 spin density matrix. Optical pulses collapse it to
//! a definite spin; microwave pulses, Stark pulses and dephasing act on it
//! coherently. Every readout pulse draws the same three uniforms whatever
//! the outcome, so runs that differ only in a probability share their
//! random numbers pulse by pulse.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use super::sequence::{Manifold, PulseSequence, ReadoutMode, SeqOp};
use super::{HardwareSpec, IonRecord, ShotRecord};
use crate::control::GateOp;
use crate::error::{Error, Result};
use crate::ion_model::{flip_prob_per_cycle, IonSpec, Spin, Transition};
use crate::qcore::{Unitary2, C64};
use crate::stark::{spin_phase, visibility_loss};

type Rho = [[C64; 2]; 2];

const MIXED: Rho = [[C64::new(0.5, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(0.5, 0.0)]];

fn pure(s: Spin) -> Rho {
    let mut r = [[C64::new(0.0, 0.0); 2]; 2];
    r[s.index()][s.index()] = C64::new(1.0, 0.0);
    r
}

fn conjugate(u: &Unitary2, r: &Rho) -> Rho {
    let m = u.entries();
    let mut t = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            t[i][j] = m[i][0] * r[0][j] + m[i][1] * r[1][j];
        }
    }
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = t[i][0] * m[j][0].conj() + t[i][1] * m[j][1].conj();
        }
    }
    out
}

struct IonState {
    rho: Rho,
    excited: bool,
    /// Definite spin after the last collapse, if no rotation has happened since.
    spin: Option<Spin>,
}

impl IonState {
    fn set(&mut self, s: Spin) {
        self.rho = pure(s);
        self.spin = Some(s);
    }

    fn damp_coherence(&mut self, f: f64) {
        self.rho[0][1] *= f;
        self.rho[1][0] *= f;
    }

    /// Symmetric spin-flip channel with flip probability `p`.
    fn flip_channel(&mut self, p: f64) {
        if p <= 0.0 {
            return;
        }
        let r = self.rho;
        self.rho = [
            [r[0][0] * (1.0 - p) + r[1][1] * p, r[0][1] * (1.0 - p) + r[1][0] * p],
            [r[1][0] * (1.0 - p) + r[0][1] * p, r[1][1] * (1.0 - p) + r[0][0] * p],
        ];
        self.spin = None;
    }

    fn rotate(&mut self, u: &Unitary2) {
        self.rho = conjugate(u, &self.rho);
        self.spin = None;
    }

    fn collapse<R: Rng>(&mut self, rng: &mut R) -> Spin {
        let u: f64 = rng.random();
        if let Some(s) = self.spin {
            return s;
        }
        let s = if u < self.rho[0][0].re { Spin::Up } else { Spin::Down };
        self.set(s);
        s
    }
}

struct Shot<'a, R> {
    ions: &'a [IonSpec],
    hw: &'a HardwareSpec,
    rng: R,
    state: Vec<IonState>,
    rec: Vec<IonRecord>,
    dd_elapsed: Option<f64>,
}

impl<R: Rng> Shot<'_, R> {
    /// Decay of an excited ion left alone: spin flip with probability 1/C.
    fn relax(&mut self, i: usize) {
        let u: f64 = self.rng.random();
        let st = &mut self.state[i];
        if st.excited {
            st.excited = false;
            if u < flip_prob_per_cycle(&self.ions[i]) {
                let s = st.spin.expect("excited ions have a definite spin").flipped();
                st.set(s);
            }
        }
    }

    fn idle(&mut self, dt: f64) {
        if dt <= 0.0 {
            return;
        }
        for i in 0..self.state.len() {
            self.relax(i);
        }
        for (st, ion) in self.state.iter_mut().zip(self.ions) {
            st.flip_channel(0.5 * (-(-dt / ion.spin.t1).exp_m1()));
            if self.dd_elapsed.is_none() {
                st.damp_coherence((-dt / ion.spin.t2_star).exp());
            }
        }
        if let Some(t) = self.dd_elapsed.as_mut() {
            *t += dt;
        }
    }

    fn targets(&self, ion: Option<usize>) -> std::ops::Range<usize> {
        match ion {
            Some(i) => i..i + 1,
            None => 0..self.state.len(),
        }
    }

    fn optical_pi(&mut self, i: usize, t: Transition) {
        self.relax(i);
        let s = self.state[i].collapse(&mut self.rng);
        let u: f64 = self.rng.random();
        if s == t.bright_spin() && u < self.hw.excitation_prob_per_pulse {
            self.state[i].excited = true;
        }
    }

    fn excited_mw(&mut self, i: usize) {
        let u: f64 = self.rng.random();
        let st = &mut self.state[i];
        if !st.excited {
            return;
        }
        st.excited = false;
        let c = flip_prob_per_cycle(&self.ions[i]);
        let f = self.hw.excited_mw_fidelity;
        if u < f * (1.0 - c) + (1.0 - f) * c {
            let s = st.spin.expect("excited ions have a definite spin").flipped();
            st.set(s);
        }
    }

    fn readout(&mut self, i: usize, mode: ReadoutMode, n_r: usize, bin_width: usize) {
        let transitions: &[Transition] = match mode {
            ReadoutMode::AlternatingAb => &[Transition::A, Transition::B],
            ReadoutMode::SingleTransition => match self.ions[i].readout_transition {
                Transition::A => &[Transition::A],
                Transition::B => &[Transition::B],
            },
        };
        for j in 0..self.state.len() {
            self.relax(j);
        }
        let mut spin = self.state[i].collapse(&mut self.rng);
        if self.rec[i].initial.is_none() {
            self.rec[i].initial = Some(spin);
        }
        let xt = self.hw.crosstalk_exc_prob;
        let mut others: Vec<(usize, Spin)> = Vec::new();
        if xt > 0.0 {
            for j in (0..self.state.len()).filter(|&j| j != i) {
                let s = self.state[j].collapse(&mut self.rng);
                others.push((j, s));
            }
        }
        let n_bins = n_r.div_ceil(bin_width);
        let mut bins = vec![0u32; n_bins];
        let (mut n_a, mut n_b) = (0u32, 0u32);
        let (p_exc, p_det) = (self.hw.excitation_prob_per_pulse, self.hw.detect_prob_per_cycle);
        let flip_i = flip_prob_per_cycle(&self.ions[i]);
        for cycle in 0..n_r {
            for &t in transitions {
                let (u1, u2, u3): (f64, f64, f64) = (self.rng.random(), self.rng.random(), self.rng.random());
                let mut photons = 0;
                if spin == t.bright_spin() && u1 < p_exc {
                    if u2 < p_det {
                        photons += 1;
                    }
                    if u3 < flip_i {
                        spin = spin.flipped();
                    }
                }
                for (j, sj) in others.iter_mut() {
                    let (v1, v2, v3): (f64, f64, f64) = (self.rng.random(), self.rng.random(), self.rng.random());
                    if *sj == t.bright_spin() && v1 < xt {
                        if v2 < p_det {
                            photons += 1;
                        }
                        if v3 < flip_prob_per_cycle(&self.ions[*j]) {
                            *sj = sj.flipped();
                        }
                    }
                }
                bins[cycle / bin_width] += photons;
                match t {
                    Transition::A => n_a += photons,
                    Transition::B => n_b += photons,
                }
            }
        }
        let mu = self.hw.dark_mean_per_window;
        if mu > 0.0 {
            let share = mu / transitions.len() as f64;
            for (b, count) in bins.iter_mut().enumerate() {
                let width = (n_r - b * bin_width).min(bin_width) as f64 / n_r as f64;
                for &t in transitions {
                    let d = Poisson::new(share * width).expect("positive mean").sample(&mut self.rng) as u32;
                    *count += d;
                    match t {
                        Transition::A => n_a += d,
                        Transition::B => n_b += d,
                    }
                }
            }
        }
        self.state[i].set(spin);
        for (j, sj) in others {
            self.state[j].set(sj);
        }
        let r = &mut self.rec[i];
        r.n_a += n_a;
        r.n_b += n_b;
        r.bins = bins;
        let pulses = n_r * transitions.len();
        self.idle(pulses as f64 * self.hw.pulse_period);
    }

    fn apply(&mut self, op: &SeqOp) {
        match op {
            SeqOp::Prepare { ion, spin, flip_prob } => {
                let u: f64 = self.rng.random();
                let s = if u < *flip_prob { spin.flipped() } else { *spin };
                let st = &mut self.state[*ion];
                st.excited = false;
                st.set(s);
            }
            SeqOp::InitBlock { ion, target, n_i } => {
                let drive = match target.flipped() {
                    Spin::Up => Transition::A,
                    Spin::Down => Transition::B,
                };
                for _ in 0..*n_i {
                    self.optical_pi(*ion, drive);
                    self.excited_mw(*ion);
                }
                self.idle(*n_i as f64 * self.hw.pulse_period);
            }
            SeqOp::OpticalPi { ion, transition } => self.optical_pi(*ion, *transition),
            SeqOp::Mw { ion, manifold: Manifold::Ground, axis, angle, phase } => {
                let u = GateOp::Mw { axis: *axis, angle: *angle, phase: *phase }.unitary(0);
                for i in self.targets(*ion) {
                    self.relax(i);
                    self.state[i].rotate(&u);
                }
            }
            SeqOp::Mw { ion, manifold: Manifold::Excited, .. } => {
                for i in self.targets(*ion) {
                    self.excited_mw(i);
                }
            }
            SeqOp::Wait { duration } => self.idle(*duration),
            SeqOp::Stark { pulse } => {
                for i in 0..self.state.len() {
                    self.relax(i);
                }
                for (i, ion) in self.ions.iter().enumerate() {
                    let u = crate::qcore::rz(-spin_phase(pulse, ion));
                    let st = &mut self.state[i];
                    st.rotate(&u);
                    st.damp_coherence(1.0 - visibility_loss(pulse, ion));
                }
                self.idle(pulse.duration);
            }
            SeqOp::ReadoutWindow { ion, mode, n_r, bin_width } => self.readout(*ion, *mode, *n_r, *bin_width),
            SeqOp::DdStart => self.dd_elapsed = Some(0.0),
            SeqOp::DdEnd => {
                let t = self.dd_elapsed.take().unwrap_or(0.0);
                for (st, ion) in self.state.iter_mut().zip(self.ions) {
                    st.damp_coherence((-(t / ion.spin.t2_xy8).powi(2)).exp());
                }
            }
            SeqOp::Measure { ion } => {
                for i in self.targets(*ion) {
                    self.relax(i);
                    let s = self.state[i].collapse(&mut self.rng);
                    self.rec[i].measured = Some(s);
                }
            }
        }
    }
}

fn run_one(seq: &PulseSequence, ions: &[IonSpec], hw: &HardwareSpec, seed: u64, shot: u64) -> ShotRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    let n = ions.len();
    let mut sh = Shot {
        ions,
        hw,
        rng,
        state: (0..n).map(|_| IonState { rho: MIXED, excited: false, spin: None }).collect(),
        rec: (0..n)
            .map(|_| IonRecord { n_a: 0, n_b: 0, bins: vec![], initial: None, measured: None, final_spin: Spin::Up })
            .collect(),
        dd_elapsed: None,
    };
    for op in &seq.ops {
        sh.apply(op);
    }
    for i in 0..n {
        sh.relax(i);
        sh.rec[i].final_spin = sh.state[i].collapse(&mut sh.rng);
    }
    ShotRecord { ions: sh.rec }
}

/// Runs `n_shots` independent shots. Shot `k` draws from ChaCha8 stream `k`
/// of `seed`, so the records do not depend on the thread count.
pub fn run_shots(seq: &PulseSequence, ions: &[IonSpec], hw: &HardwareSpec, n_shots: usize, seed: u64) -> Result<Vec<ShotRecord>> {
    if ions.is_empty() {
        return Err(Error::input("no ions"));
    }
    for ion in ions {
        ion.validate()?;
    }
    hw.validate()?;
    seq.validate(ions.len())?;
    Ok((0..n_shots as u64).into_par_iter().map(|k| run_one(seq, ions, hw, seed, k)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expsim::sequence::{build_ramsey_sequence, build_readout_sequence, build_xy8_stark_sequence, Xy8Options};
    use crate::ion_model::presets;

    fn ideal_ion() -> IonSpec {
        let mut ion = presets::ion2();
        ion.cyclicity = 1e12;
        ion.spin.t1 = 1e12;
        ion.spin.t2_star = 1e12;
        ion.spin.t2_xy8 = 1e12;
        ion
    }

    #[test]
    fn ideal_readout_separates_spins() {
        let mut seq = PulseSequence::new();
        seq.push(SeqOp::Prepare { ion: 0, spin: Spin::Down, flip_prob: 0.0 });
        seq.extend(&build_readout_sequence(1, ReadoutMode::AlternatingAb, 20, 50, 0.0).unwrap());
        let recs = run_shots(&seq, &[ideal_ion()], &HardwareSpec::ideal(), 200, 1).unwrap();
        for r in &recs {
            assert_eq!((r.ions[0].n_a, r.ions[0].n_b), (0, 20));
            assert_eq!(r.ions[0].initial, Some(Spin::Down));
        }
    }

    #[test]
    fn single_pulse_window() {
        let mut seq = PulseSequence::new();
        seq.push(SeqOp::ReadoutWindow { ion: 0, mode: ReadoutMode::SingleTransition, n_r: 1, bin_width: 1 });
        let hw = HardwareSpec { dark_mean_per_window: 0.0, ..HardwareSpec::typical() };
        let recs = run_shots(&seq, &[presets::ion2()], &hw, 2000, 3).unwrap();
        assert!(recs.iter().all(|r| r.ions[0].total() <= 1));
    }

    #[test]
    fn dark_counts_are_poisson() {
        let mut seq = PulseSequence::new();
        let ion = presets::ion2();
        let dark = ion.readout_transition.bright_spin().flipped();
        seq.push(SeqOp::Prepare { ion: 0, spin: dark, flip_prob: 0.0 });
        seq.push(SeqOp::ReadoutWindow { ion: 0, mode: ReadoutMode::SingleTransition, n_r: 250, bin_width: 50 });
        let hw = HardwareSpec { dark_mean_per_window: 0.05, ..HardwareSpec::typical() };
        let n = 40_000;
        let recs = run_shots(&seq, &[ion], &hw, n, 4).unwrap();
        let counts: Vec<f64> = recs.iter().map(|r| r.ions[0].total() as f64).collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n as f64;
        let se = (0.05 / n as f64).sqrt();
        assert!((mean - 0.05).abs() < 4.0 * se, "{mean}");
        assert!((var / mean - 1.0).abs() < 0.1);
        let zero = counts.iter().filter(|c| **c == 0.0).count() as f64 / n as f64;
        assert!((zero - (-0.05f64).exp()).abs() < 0.005);
    }

    #[test]
    fn same_seed_same_records() {
        let seq = build_readout_sequence(2, ReadoutMode::AlternatingAb, 50, 10, 1e-3).unwrap();
        let ions = presets::pair();
        let a = run_shots(&seq, &ions, &HardwareSpec::typical(), 300, 9).unwrap();
        let b = run_shots(&seq, &ions, &HardwareSpec::typical(), 300, 9).unwrap();
        assert_eq!(a, b);
        let c = run_shots(&seq, &ions, &HardwareSpec::typical(), 300, 10).unwrap();
        assert_ne!(a, c);
        // A prefix of a longer run is the shorter run.
        let d = run_shots(&seq, &ions, &HardwareSpec::typical(), 100, 9).unwrap();
        assert_eq!(&a[..100], &d[..]);
    }

    #[test]
    fn perfect_init_pumps_into_target() {
        for target in [Spin::Up, Spin::Down] {
            let mut s = crate::expsim::build_init_sequence(0, target, 3).unwrap();
            s.push(SeqOp::Measure { ion: Some(0) });
            let recs = run_shots(&s, &[ideal_ion()], &HardwareSpec::ideal(), 500, 5).unwrap();
            assert!(recs.iter().all(|r| r.ions[0].measured == Some(target)));
        }
    }

    #[test]
    fn ramsey_fringe_follows_final_phase() {
        // Noise-free coherence: P(Down) = (1 + cos(final_phase)) / 2.
        let ions = [ideal_ion()];
        for phi in [0.0, 1.0, std::f64::consts::PI] {
            let mut s = PulseSequence::new();
            s.push(SeqOp::Prepare { ion: 0, spin: Spin::Up, flip_prob: 0.0 });
            s.extend(&build_ramsey_sequence(1e-7, phi));
            let n = 20_000;
            let recs = run_shots(&s, &ions, &HardwareSpec::ideal(), n, 6).unwrap();
            let p = recs.iter().filter(|r| r.ions[0].measured == Some(Spin::Down)).count() as f64 / n as f64;
            let want = 0.5 * (1.0 + phi.cos());
            assert!((p - want).abs() < 4.0 * (want * (1.0 - want) / n as f64).sqrt() + 1e-9, "{phi}: {p}");
        }
    }

    #[test]
    fn stark_in_xy8_has_placement_sign() {
        // One ion, tiny loss: the odd/even fringe sits at +phi / -phi.
        let mut ion = ideal_ion();
        ion.gamma_eff = ion.gamma_rad;
        let pulse = crate::stark::StarkPulse { omega: 2.0 * std::f64::consts::PI * 10e6, duration: 2e-6, laser_freq: 300e6 };
        let phi = crate::stark::spin_phase(&pulse, &ion);
        for placement in [crate::expsim::Placement::Odd, crate::expsim::Placement::Even] {
            // Probe at final phase = expected phase: population maximal.
            let opts = Xy8Options { optical: Some(pulse), placement, final_phase: placement.sign() * phi, ..Default::default() };
            let mut s = PulseSequence::new();
            s.push(SeqOp::Prepare { ion: 0, spin: Spin::Up, flip_prob: 0.0 });
            s.extend(&build_xy8_stark_sequence(&opts).unwrap());
            let recs = run_shots(&s, std::slice::from_ref(&ion), &HardwareSpec::ideal(), 500, 7).unwrap();
            let loss = crate::stark::visibility_loss(&pulse, &ion);
            assert!(loss < 1e-3);
            let down = recs.iter().filter(|r| r.ions[0].measured == Some(Spin::Down)).count();
            assert!(down >= 495, "{placement:?}: {down}");
        }
    }
}
