// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Experiments assembled from sequences, shots and estimators.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::readout::{bin_histogram, chi_square_independence, discriminate, mean_bright_counts, ChiSquare, Discrimination, Rule};
use super::sequence::{build_ramsey_sequence, build_xy8_stark_sequence, Placement, PulseSequence, ReadoutMode, SeqOp, Xy8Options};
use super::shots::run_shots;
use super::{HardwareSpec, ShotRecord};
use crate::control::{plan_tones, LaserTone, ToneConstraints};
use crate::error::{Error, Result};
use crate::estimators::{
    fit_bimodal_poisson, fit_exp_decay, fit_fringe, fit_gaussian_decay, infidelity_extrapolate, BimodalFit,
    BinEstimate, DecayFit, DecayPoint, FringeFit, InfidelityExtrapolation, MixtureMode, MixtureOptions,
};
use crate::ion_model::{flip_prob_per_cycle, IonSpec, Spin};
use crate::stark::{spin_phase, visibility_loss, StarkPulse};

/// Seed for point `k` of a scan, so that points are statistically independent.
pub fn point_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64 + 1)
}

pub fn fraction_measured(records: &[ShotRecord], ion: usize, spin: Spin) -> f64 {
    let hits = records.iter().filter(|r| r.ions[ion].measured == Some(spin)).count();
    hits as f64 / records.len().max(1) as f64
}

/// Binomial standard error, floored at one count so that it never vanishes.
pub fn binomial_stderr(p: f64, n: usize) -> f64 {
    let n = n.max(1) as f64;
    (p * (1.0 - p) / n).sqrt().max(1.0 / n)
}

// ---------------------------------------------------------------- coherence

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceScan {
    /// Waits for the population-relaxation scan, seconds.
    pub t1_times: Vec<f64>,
    /// Free-evolution times for the Ramsey scan, seconds.
    pub ramsey_times: Vec<f64>,
    /// XY8 repetition counts.
    pub xy8_repetitions: Vec<usize>,
    pub tau: f64,
    pub shots: usize,
}

impl CoherenceScan {
    /// Scans reaching about three times the ion's configured decay times.
    pub fn for_ion(ion: &IonSpec) -> Self {
        let tau = 521e-9;
        let cycle = 16.0 * tau;
        let max_reps = ((2.5 * ion.spin.t2_xy8 / cycle).ceil() as usize).max(4);
        let step = (max_reps / 12).max(1);
        Self {
            t1_times: (0..16).map(|k| k as f64 * 3.0 * ion.spin.t1 / 15.0).collect(),
            ramsey_times: (0..16).map(|k| k as f64 * 3.0 * ion.spin.t2_star / 15.0).collect(),
            xy8_repetitions: (1..=max_reps).step_by(step).collect(),
            tau,
            shots: 4000,
        }
    }
}

fn scan<F>(ion: &IonSpec, hw: &HardwareSpec, xs: &[f64], shots: usize, seed: u64, spin: Spin, offset: f64, build: F) -> Result<Vec<DecayPoint>>
where
    F: Fn(f64) -> Result<PulseSequence>,
{
    xs.iter()
        .enumerate()
        .map(|(k, &x)| {
            let mut seq = PulseSequence::new();
            seq.push(SeqOp::Prepare { ion: 0, spin: Spin::Up, flip_prob: 0.0 });
            seq.extend(&build(x)?);
            let recs = run_shots(&seq, std::slice::from_ref(ion), hw, shots, point_seed(seed, k))?;
            let p = fraction_measured(&recs, 0, spin);
            Ok(DecayPoint { t: x, y: p - offset, stderr: binomial_stderr(p, shots) })
        })
        .collect()
}

/// `P(up)` after waiting `t` from a prepared up spin.
pub fn t1_dataset(ion: &IonSpec, hw: &HardwareSpec, times: &[f64], shots: usize, seed: u64) -> Result<Vec<DecayPoint>> {
    scan(ion, hw, times, shots, seed, Spin::Up, 0.0, |t| {
        let mut s = PulseSequence::new();
        s.push(SeqOp::Wait { duration: t });
        s.push(SeqOp::Measure { ion: Some(0) });
        Ok(s)
    })
}

/// `P(down)` of a Ramsey sequence with free evolution `t`.
pub fn ramsey_dataset(ion: &IonSpec, hw: &HardwareSpec, times: &[f64], shots: usize, seed: u64) -> Result<Vec<DecayPoint>> {
    scan(ion, hw, times, shots, seed, Spin::Down, 0.0, |t| Ok(build_ramsey_sequence(t, 0.0)))
}

/// `P(down) - 1/2` after XY8 blocks of total length `16 tau reps`.
pub fn xy8_dataset(ion: &IonSpec, hw: &HardwareSpec, reps: &[usize], tau: f64, shots: usize, seed: u64) -> Result<Vec<DecayPoint>> {
    let xs: Vec<f64> = reps.iter().map(|&r| 16.0 * tau * r as f64).collect();
    scan(ion, hw, &xs, shots, seed, Spin::Down, 0.5, |t| {
        let repetitions = (t / (16.0 * tau)).round() as usize;
        build_xy8_stark_sequence(&Xy8Options { tau, repetitions, ..Default::default() })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceFits {
    pub t1: DecayFit,
    pub t2_star: DecayFit,
    pub t2: DecayFit,
    pub t1_data: Vec<DecayPoint>,
    pub ramsey_data: Vec<DecayPoint>,
    pub xy8_data: Vec<DecayPoint>,
}

/// Relaxation, Ramsey and XY8 scans fitted with exponential, exponential
/// and Gaussian decays.
pub fn coherence_suite(ion: &IonSpec, hw: &HardwareSpec, scan: &CoherenceScan, seed: u64) -> Result<CoherenceFits> {
    let t1_data = t1_dataset(ion, hw, &scan.t1_times, scan.shots, point_seed(seed, 1_000))?;
    let ramsey_data = ramsey_dataset(ion, hw, &scan.ramsey_times, scan.shots, point_seed(seed, 2_000))?;
    let xy8_data = xy8_dataset(ion, hw, &scan.xy8_repetitions, scan.tau, scan.shots, point_seed(seed, 3_000))?;
    Ok(CoherenceFits {
        t1: fit_exp_decay(&t1_data)?,
        t2_star: fit_exp_decay(&ramsey_data)?,
        t2: fit_gaussian_decay(&xy8_data)?,
        t1_data,
        ramsey_data,
        xy8_data,
    })
}

// ----------------------------------------------------------- initialization

/// Wrong-spin probability after `n_i` pumping rounds from a mixed spin.
pub fn init_error_oracle(ion: &IonSpec, hw: &HardwareSpec, n_i: usize) -> f64 {
    let c = flip_prob_per_cycle(ion);
    let f = hw.excited_mw_fidelity;
    let pump = hw.excitation_prob_per_pulse * (f * (1.0 - c) + (1.0 - f) * c);
    0.5 * (1.0 - pump).powi(n_i as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitFidelityResult {
    pub bins: Vec<BinEstimate>,
    pub fits: Vec<BimodalFit>,
    pub extrapolation: InfidelityExtrapolation,
    /// Markov-chain wrong-spin probability at the start of readout.
    pub oracle: f64,
    /// Fraction of shots that actually started readout in the wrong spin.
    pub observed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitFidelityConfig {
    pub n_i: usize,
    pub n_r: usize,
    pub bin_width: usize,
    pub shots: usize,
}

impl Default for InitFidelityConfig {
    fn default() -> Self {
        Self { n_i: 50, n_r: 250, bin_width: 50, shots: 100_000 }
    }
}

/// Pumps into the spin dark on the readout transition, reads it out, fits a
/// two-component Poisson mixture to every bin and extrapolates the
/// wrong-spin fraction back to the start of readout.
///
/// Bin `k` is placed at index `k + 1/2`, its centre, so the intercept refers
/// to the first readout pulse.
pub fn init_fidelity(ion: &IonSpec, hw: &HardwareSpec, cfg: &InitFidelityConfig, seed: u64) -> Result<InitFidelityResult> {
    let target = ion.readout_transition.bright_spin().flipped();
    let mut seq = super::build_init_sequence(0, target, cfg.n_i)?;
    seq.push(SeqOp::ReadoutWindow { ion: 0, mode: ReadoutMode::SingleTransition, n_r: cfg.n_r, bin_width: cfg.bin_width });
    let recs = run_shots(&seq, std::slice::from_ref(ion), hw, cfg.shots, seed)?;
    let n_bins = cfg.n_r.div_ceil(cfg.bin_width);
    let mut bins = Vec::with_capacity(n_bins);
    let mut fits = Vec::with_capacity(n_bins);
    for b in 0..n_bins {
        let h = bin_histogram(&recs, 0, b, cfg.bin_width);
        let fit = match fit_bimodal_poisson(&h, None, &MixtureOptions::default()) {
            // no resolvable bright population: hold the means at their calibrated values
            Err(Error::Identifiability(_)) => {
                let dark = hw.dark_mean_per_window * cfg.bin_width as f64 / cfg.n_r as f64;
                let mu_d = h.mean().max(dark);
                let mu_b = dark
                    + mean_bright_counts(ion.cyclicity, hw.excitation_prob_per_pulse, hw.detect_prob_per_cycle, cfg.bin_width);
                let mode = MixtureMode::FixedMeans { mu_d, mu_b: mu_b.max(mu_d + 1e-6) };
                fit_bimodal_poisson(&h, None, &MixtureOptions { mode, ..MixtureOptions::default() })?
            }
            r => r?,
        };
        bins.push(BinEstimate { bin_index: b as f64 + 0.5, wrong_state_prob: fit.wrong_state_prob, stderr: fit.wrong_state_stderr });
        fits.push(fit);
    }
    let extrapolation = infidelity_extrapolate(&bins)?;
    let wrong = recs.iter().filter(|r| r.ions[0].initial != Some(target)).count();
    Ok(InitFidelityResult {
        bins,
        fits,
        extrapolation,
        oracle: init_error_oracle(ion, hw, cfg.n_i),
        observed: wrong as f64 / cfg.shots as f64,
    })
}

// ------------------------------------------------------------------ readout

/// Mean counts of a bright ion over one single-transition window.
pub fn bright_mean_counts(ion: &IonSpec, hw: &HardwareSpec, n_r: usize, shots: usize, seed: u64) -> Result<f64> {
    let mut seq = PulseSequence::new();
    seq.push(SeqOp::Prepare { ion: 0, spin: ion.readout_transition.bright_spin(), flip_prob: 0.0 });
    seq.push(SeqOp::ReadoutWindow { ion: 0, mode: ReadoutMode::SingleTransition, n_r, bin_width: n_r });
    let recs = run_shots(&seq, std::slice::from_ref(ion), hw, shots, seed)?;
    Ok(recs.iter().map(|r| r.ions[0].total() as f64).sum::<f64>() / shots as f64)
}

/// Every ion starts in a random spin and is read out in turn.
pub fn readout_experiment(
    ions: &[IonSpec],
    hw: &HardwareSpec,
    mode: ReadoutMode,
    n_r: usize,
    shots: usize,
    seed: u64,
) -> Result<(Vec<ShotRecord>, Discrimination)> {
    let mut seq = PulseSequence::new();
    for ion in 0..ions.len() {
        seq.push(SeqOp::Prepare { ion, spin: Spin::Up, flip_prob: 0.5 });
    }
    seq.extend(&super::build_readout_sequence(ions.len(), mode, n_r, 50, 0.0)?);
    let recs = run_shots(&seq, ions, hw, shots, seed)?;
    let rule = match mode {
        ReadoutMode::AlternatingAb => Rule::Difference,
        ReadoutMode::SingleTransition => Rule::OptimalThreshold,
    };
    let transitions: Vec<_> = ions.iter().map(|i| i.readout_transition).collect();
    let d = discriminate(&recs, &rule, &transitions)?;
    Ok((recs, d))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiIonReadout {
    /// Joint correct-assignment probability for each prepared state; bit `i`
    /// of the index is ion `i` (1 = down).
    pub joint_by_state: Vec<f64>,
    pub mean_joint: f64,
    pub per_ion: Discrimination,
    /// Independence of each ion's counts from the other ions' spins.
    pub independence: Vec<ChiSquare>,
}

/// Prepares every basis state of the register `shots_per_state` times and
/// reads the ions out one after another on their designated transitions.
pub fn multi_ion_readout(ions: &[IonSpec], hw: &HardwareSpec, n_r: usize, shots_per_state: usize, seed: u64) -> Result<MultiIonReadout> {
    let n = ions.len();
    if n == 0 || n > 16 {
        return Err(Error::input("multi-ion readout supports 1 to 16 ions"));
    }
    let transitions: Vec<_> = ions.iter().map(|i| i.readout_transition).collect();
    let mut all: Vec<ShotRecord> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for state in 0..(1usize << n) {
        let mut seq = PulseSequence::new();
        for ion in 0..n {
            let spin = if state >> ion & 1 == 1 { Spin::Down } else { Spin::Up };
            seq.push(SeqOp::Prepare { ion, spin, flip_prob: 0.0 });
        }
        seq.extend(&super::build_readout_sequence(n, ReadoutMode::SingleTransition, n_r, 50, 0.0)?);
        all.extend(run_shots(&seq, ions, hw, shots_per_state, point_seed(seed, state))?);
        labels.extend(std::iter::repeat_n(state, shots_per_state));
    }
    let per_ion = discriminate(&all, &Rule::OptimalThreshold, &transitions)?;
    let mut joint_by_state = vec![0.0; 1 << n];
    for (k, r) in all.iter().enumerate() {
        let ok = (0..n).all(|i| Some(per_ion.assignments[k][i]) == r.ions[i].initial);
        joint_by_state[labels[k]] += f64::from(u8::from(ok));
    }
    joint_by_state.iter_mut().for_each(|v| *v /= shots_per_state as f64);
    let independence = (0..n)
        .map(|i| {
            let counts: Vec<u32> = all.iter().map(|r| r.ions[i].total()).collect();
            let own: Vec<usize> = labels.iter().map(|s| s >> i & 1).collect();
            // other ions' bits, with bit i squeezed out
            let others: Vec<usize> = labels.iter().map(|s| (s & ((1 << i) - 1)) | ((s >> (i + 1)) << i)).collect();
            chi_square_independence(&counts, &others, &own)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiIonReadout {
        mean_joint: joint_by_state.iter().sum::<f64>() / joint_by_state.len() as f64,
        joint_by_state,
        per_ion,
        independence,
    })
}

// ------------------------------------------------------ ion-selective Rabi

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiConfig {
    pub target: usize,
    /// Allowed tone frequencies, Hz.
    pub band: (f64, f64),
    /// Largest relative phase reached by the sweep, rad.
    pub max_phase: f64,
    pub n_durations: usize,
    /// Final pi/2 phases per fringe.
    pub n_fringe_phases: usize,
    pub shots: usize,
    pub tau: f64,
    pub repetitions: usize,
    /// Longest optical pulse as a fraction of the time available to it.
    pub fill: f64,
}

impl Default for RabiConfig {
    fn default() -> Self {
        Self {
            target: 0,
            band: (270e6, 280e6),
            max_phase: 2.5 * PI,
            n_durations: 41,
            n_fringe_phases: 8,
            shots: 2000,
            tau: 521e-9,
            repetitions: 1,
            fill: 0.45,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiPoint {
    /// Total optical duration, seconds.
    pub duration: f64,
    /// Fringe fit per ion.
    pub fringes: Vec<FringeFit>,
    /// `P(down)` at final phase zero, per ion.
    pub population: Vec<f64>,
    /// Predicted net phase per ion after the global correction, rad.
    pub predicted_phase: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiResult {
    pub tone: LaserTone,
    /// Rabi frequency of the optical drive, rad/s.
    pub omega: f64,
    pub placement: Placement,
    pub points: Vec<RabiPoint>,
    /// Unwrapped fitted target phase per point.
    pub target_phase: Vec<f64>,
    /// Slope of the target phase against duration, rad/s.
    pub phase_rate: f64,
    /// Amplitude of the component of each ion's population at the target's
    /// oscillation frequency.
    pub oscillation_amplitude: Vec<f64>,
}

impl RabiResult {
    pub fn phase_span(&self) -> f64 {
        let lo = self.target_phase.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.target_phase.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    /// Spectator oscillation amplitude over the target's.
    pub fn spectator_modulation(&self, target: usize) -> f64 {
        let spec: f64 = self
            .oscillation_amplitude
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != target)
            .map(|(_, a)| *a)
            .fold(0.0, f64::max);
        spec / self.oscillation_amplitude[target]
    }
}

fn unwrap(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut prev: Option<f64> = None;
    for &p in phases {
        let v = match prev {
            None => p,
            Some(q) => q + crate::qcore::wrap_pi(p - q),
        };
        out.push(v);
        prev = Some(v);
    }
    out
}

/// Amplitude of the `rate` component of `y(t)` fitted together with a
/// straight line, so slow visibility decay is not counted as oscillation.
pub fn sinusoid_on_trend(t: &[f64], y: &[f64], rate: f64) -> Result<f64> {
    if t.len() != y.len() || t.len() < 5 {
        return Err(Error::input("need >= 5 matching points"));
    }
    let scale = t.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let a = DMatrix::from_fn(t.len(), 4, |i, j| match j {
        0 => 1.0,
        1 => t[i] / scale,
        2 => (rate * t[i]).cos(),
        _ => (rate * t[i]).sin(),
    });
    let b = DVector::from_column_slice(y);
    let x = a.svd(true, true).solve(&b, 1e-12).map_err(|e| Error::numerical(e.to_string()))?;
    Ok(x[2].hypot(x[3]))
}

/// Plans one tone giving the target a relative phase of pi, then sweeps
/// the optical duration inside an XY8 train. Each point records a fringe per
/// ion; a global z rotation cancels the spectator's predicted phase.
pub fn ion_selective_rabi(ions: &[IonSpec], hw: &HardwareSpec, cfg: &RabiConfig, placement: Placement, seed: u64) -> Result<RabiResult> {
    let n = ions.len();
    if n != 2 || cfg.target >= 2 {
        return Err(Error::input("ion-selective Rabi runs on two ions"));
    }
    if cfg.n_durations < 5 || cfg.n_fringe_phases < 5 || !(cfg.fill > 0.0 && cfg.fill <= 0.5) {
        return Err(Error::input("need >= 5 durations, >= 5 fringe phases and 0 < fill <= 0.5"));
    }
    let spectator = 1 - cfg.target;
    let mut targets = vec![0.0; 2];
    targets[cfg.target] = PI;
    let plan = plan_tones(ions, &targets, &ToneConstraints::band(cfg.band.0, cfg.band.1))?;
    let tone = plan.tones[0];
    let e_max = tone.energy * cfg.max_phase / PI;
    // Each of the 4 reps slots may hold `fill` of its 2 tau gap.
    let t_max = cfg.fill * 8.0 * cfg.tau * cfg.repetitions as f64;
    let omega = (e_max / t_max).sqrt();
    let phases: Vec<f64> = (0..cfg.n_fringe_phases).map(|k| 2.0 * PI * k as f64 / cfg.n_fringe_phases as f64).collect();
    let sign = placement.sign();

    let mut points = Vec::with_capacity(cfg.n_durations);
    for d in 0..cfg.n_durations {
        let duration = t_max * d as f64 / (cfg.n_durations - 1) as f64;
        let pulse = StarkPulse { omega, duration, laser_freq: tone.freq };
        let stark: Vec<f64> = ions.iter().map(|ion| if duration > 0.0 { spin_phase(&pulse, ion) } else { 0.0 }).collect();
        let global_rz = -sign * stark[spectator];
        let mut pops = vec![vec![0.0; cfg.n_fringe_phases]; n];
        for (k, &phi) in phases.iter().enumerate() {
            let opts = Xy8Options {
                tau: cfg.tau,
                repetitions: cfg.repetitions,
                optical: (duration > 0.0).then_some(pulse),
                placement,
                final_phase: phi,
                global_rz,
            };
            let mut seq = PulseSequence::new();
            for ion in 0..n {
                seq.push(SeqOp::Prepare { ion, spin: Spin::Up, flip_prob: 0.0 });
            }
            seq.extend(&build_xy8_stark_sequence(&opts)?);
            let recs = run_shots(&seq, ions, hw, cfg.shots, point_seed(seed, d * cfg.n_fringe_phases + k))?;
            for (ion, p) in pops.iter_mut().enumerate() {
                p[k] = fraction_measured(&recs, ion, Spin::Down);
            }
        }
        let fringes = pops
            .iter()
            .map(|p| {
                let sig: Vec<f64> = p.iter().map(|&v| binomial_stderr(v, cfg.shots)).collect();
                fit_fringe(&phases, p, Some(&sig))
            })
            .collect::<Result<Vec<_>>>()?;
        points.push(RabiPoint {
            duration,
            population: pops.iter().map(|p| p[0]).collect(),
            predicted_phase: stark.iter().map(|s| sign * s + global_rz).collect(),
            fringes,
        });
    }

    let raw: Vec<f64> = points.iter().map(|p| p.fringes[cfg.target].phase.unwrap_or(f64::NAN)).collect();
    if raw.iter().any(|v| v.is_nan()) {
        return Err(Error::numerical("target fringe lost its phase (visibility below noise)"));
    }
    let target_phase = unwrap(&raw);
    let ts: Vec<f64> = points.iter().map(|p| p.duration).collect();
    let tm = ts.iter().sum::<f64>() / ts.len() as f64;
    let pm = target_phase.iter().sum::<f64>() / ts.len() as f64;
    let phase_rate = ts.iter().zip(&target_phase).map(|(t, p)| (t - tm) * (p - pm)).sum::<f64>()
        / ts.iter().map(|t| (t - tm).powi(2)).sum::<f64>();

    let oscillation_amplitude = (0..n)
        .map(|ion| {
            let y: Vec<f64> = points.iter().map(|p| p.population[ion]).collect();
            sinusoid_on_trend(&ts, &y, phase_rate.abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RabiResult { tone, omega, placement, points, target_phase, phase_rate, oscillation_amplitude })
}

/// Predicted visibility loss of every ion for the longest pulse of a sweep.
pub fn rabi_max_loss(ions: &[IonSpec], r: &RabiResult) -> Vec<f64> {
    let d = r.points.last().map_or(0.0, |p| p.duration);
    let pulse = StarkPulse { omega: r.omega, duration: d, laser_freq: r.tone.freq };
    ions.iter().map(|ion| if d > 0.0 { visibility_loss(&pulse, ion) } else { 0.0 }).collect()
}
