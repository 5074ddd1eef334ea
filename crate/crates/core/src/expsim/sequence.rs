// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::control::MwAxis;
use crate::error::{Error, Result};
use crate::ion_model::{Spin, Transition};
use crate::stark::StarkPulse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Manifold {
    Ground,
    Excited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutMode {
    /// A and B pulses alternate; `n_r` pulses on each.
    AlternatingAb,
    /// `n_r` pulses on the ion's designated readout transition.
    SingleTransition,
}

/// Where Stark pulses sit in an XY8 train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// After pi pulses 1, 3, 5, ...: the spin sees `Rz(+phi)`.
    Odd,
    /// After pi pulses 2, 4, 6, ...: the spin sees `Rz(-phi)`.
    Even,
}

impl Placement {
    pub fn sign(self) -> f64 {
        match self {
            Placement::Odd => 1.0,
            Placement::Even => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum SeqOp {
    /// Sets the spin, flipped with probability `flip_prob`.
    Prepare { ion: usize, spin: Spin, flip_prob: f64 },
    /// `n_i` rounds of optical pi on the transition bright for the wrong
    /// spin followed by an excited-state microwave pi.
    InitBlock { ion: usize, target: Spin, n_i: usize },
    OpticalPi { ion: usize, transition: Transition },
    /// Microwave rotation `Rz(phase) R_axis(angle) Rz(-phase)`; `ion: None`
    /// drives every ion.
    Mw { ion: Option<usize>, manifold: Manifold, axis: MwAxis, angle: f64, phase: f64 },
    /// Seconds.
    Wait { duration: f64 },
    /// Off-resonant optical pulse seen by every ion.
    Stark { pulse: StarkPulse },
    ReadoutWindow { ion: usize, mode: ReadoutMode, n_r: usize, bin_width: usize },
    /// Waits inside a decoupled block lose coherence as `exp(-(t/T2)^2)`
    /// over the whole block instead of `exp(-t/T2*)`.
    DdStart,
    DdEnd,
    /// Projective spin measurement.
    Measure { ion: Option<usize> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub ops: Vec<SeqOp>,
}

impl PulseSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, op: SeqOp) -> &mut Self {
        self.ops.push(op);
        self
    }

    pub fn extend(&mut self, other: &PulseSequence) -> &mut Self {
        self.ops.extend(other.ops.iter().cloned());
        self
    }

    /// Checks indices, counts, durations and block nesting for `n_ions` ions.
    pub fn validate(&self, n_ions: usize) -> Result<()> {
        let ion_ok = |i: usize| {
            if i < n_ions {
                Ok(())
            } else {
                Err(Error::input(format!("ion index {i} out of range for {n_ions} ions")))
            }
        };
        let mut in_dd = false;
        for op in &self.ops {
            match op {
                SeqOp::Prepare { ion, flip_prob, .. } => {
                    ion_ok(*ion)?;
                    if !(0.0..=1.0).contains(flip_prob) {
                        return Err(Error::input("flip_prob must be a probability"));
                    }
                }
                SeqOp::InitBlock { ion, n_i, .. } => {
                    ion_ok(*ion)?;
                    if *n_i == 0 {
                        return Err(Error::input("initialization needs n_I >= 1"));
                    }
                }
                SeqOp::OpticalPi { ion, .. } => ion_ok(*ion)?,
                SeqOp::Mw { ion, angle, phase, .. } => {
                    if let Some(i) = ion {
                        ion_ok(*i)?;
                    }
                    if !(angle.is_finite() && phase.is_finite()) {
                        return Err(Error::input("microwave angle and phase must be finite"));
                    }
                }
                SeqOp::Wait { duration } => {
                    if !(*duration >= 0.0 && duration.is_finite()) {
                        return Err(Error::input("wait duration must be >= 0"));
                    }
                }
                SeqOp::Stark { pulse } => pulse.validate()?,
                SeqOp::ReadoutWindow { ion, n_r, bin_width, .. } => {
                    ion_ok(*ion)?;
                    if *n_r == 0 || *bin_width == 0 {
                        return Err(Error::input("readout needs n_R >= 1 and a positive bin width"));
                    }
                }
                SeqOp::DdStart => {
                    if in_dd {
                        return Err(Error::Scheduling("nested decoupling block".into()));
                    }
                    in_dd = true;
                }
                SeqOp::DdEnd => {
                    if !in_dd {
                        return Err(Error::Scheduling("decoupling block end without start".into()));
                    }
                    in_dd = false;
                }
                SeqOp::Measure { ion } => {
                    if let Some(i) = ion {
                        ion_ok(*i)?;
                    }
                }
            }
        }
        if in_dd {
            return Err(Error::Scheduling("unterminated decoupling block".into()));
        }
        Ok(())
    }

    /// Total duration of waits and optical pulses, seconds. Microwave pulses
    /// are instantaneous; readout and init pulses are not counted.
    pub fn timed_duration(&self) -> f64 {
        self.ops
            .iter()
            .map(|op| match op {
                SeqOp::Wait { duration } => *duration,
                SeqOp::Stark { pulse } => pulse.duration,
                _ => 0.0,
            })
            .sum()
    }
}

/// Pumps `ion` into `target`: the transition bright for the other spin is
/// driven, and the excited-state pi returns the excited ion through the
/// spin-conserving decay into `target`.
pub fn build_init_sequence(ion: usize, target: Spin, n_i: usize) -> Result<PulseSequence> {
    if n_i == 0 {
        return Err(Error::input("initialization needs n_I >= 1"));
    }
    let mut s = PulseSequence::new();
    s.push(SeqOp::InitBlock { ion, target, n_i });
    Ok(s)
}

/// Sequential readout windows, ion 0 first, separated by `gap` seconds.
pub fn build_readout_sequence(n_ions: usize, mode: ReadoutMode, n_r: usize, bin_width: usize, gap: f64) -> Result<PulseSequence> {
    if n_r == 0 || bin_width == 0 {
        return Err(Error::input("readout needs n_R >= 1 and a positive bin width"));
    }
    let mut s = PulseSequence::new();
    for ion in 0..n_ions {
        if ion > 0 && gap > 0.0 {
            s.push(SeqOp::Wait { duration: gap });
        }
        s.push(SeqOp::ReadoutWindow { ion, mode, n_r, bin_width });
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Xy8Options {
    /// Half the pi-pulse spacing, seconds.
    pub tau: f64,
    pub repetitions: usize,
    /// Total optical pulse; its duration is split evenly over the slots.
    pub optical: Option<StarkPulse>,
    pub placement: Placement,
    /// Phase of the closing pi/2 pulse.
    pub final_phase: f64,
    /// z rotation on every ion just before the closing pi/2.
    pub global_rz: f64,
}

impl Default for Xy8Options {
    fn default() -> Self {
        Self {
            tau: 521e-9,
            repetitions: 1,
            optical: None,
            placement: Placement::Odd,
            final_phase: 0.0,
            global_rz: 0.0,
        }
    }
}

const XY8_AXES: [MwAxis; 8] =
    [MwAxis::X, MwAxis::Y, MwAxis::X, MwAxis::Y, MwAxis::Y, MwAxis::X, MwAxis::Y, MwAxis::X];

fn mw(axis: MwAxis, angle: f64, phase: f64) -> SeqOp {
    SeqOp::Mw { ion: None, manifold: Manifold::Ground, axis, angle, phase }
}

/// `pi/2_x`, XY8 train with optional Stark pulses centred in the chosen
/// gaps, `Rz(global_rz)`, `pi/2` about `final_phase`, measurement.
pub fn build_xy8_stark_sequence(opts: &Xy8Options) -> Result<PulseSequence> {
    if !(opts.tau > 0.0) || opts.repetitions == 0 {
        return Err(Error::input("XY8 needs tau > 0 and at least one repetition"));
    }
    let n_pi = 8 * opts.repetitions;
    let slot = opts
        .optical
        .filter(|p| p.duration > 0.0)
        .map(|p| StarkPulse { duration: p.duration / (4 * opts.repetitions) as f64, ..p });
    if let Some(p) = &slot {
        p.validate()?;
    }
    let mut s = PulseSequence::new();
    s.push(mw(MwAxis::X, PI / 2.0, 0.0));
    s.push(SeqOp::DdStart);
    s.push(SeqOp::Wait { duration: opts.tau });
    for j in 1..=n_pi {
        s.push(mw(XY8_AXES[(j - 1) % 8], PI, 0.0));
        let gap = if j == n_pi { opts.tau } else { 2.0 * opts.tau };
        let here = match opts.placement {
            Placement::Odd => j % 2 == 1,
            Placement::Even => j % 2 == 0,
        };
        match (&slot, here) {
            (Some(p), true) => {
                if p.duration > gap {
                    return Err(Error::Scheduling(format!(
                        "optical pulse of {:.3e} s does not fit the {:.3e} s gap after pi pulse {j}",
                        p.duration, gap
                    )));
                }
                let pad = 0.5 * (gap - p.duration);
                s.push(SeqOp::Wait { duration: pad });
                s.push(SeqOp::Stark { pulse: *p });
                s.push(SeqOp::Wait { duration: pad });
            }
            _ => {
                s.push(SeqOp::Wait { duration: gap });
            }
        }
    }
    s.push(SeqOp::DdEnd);
    if opts.global_rz != 0.0 {
        s.push(mw(MwAxis::Z, opts.global_rz, 0.0));
    }
    s.push(mw(MwAxis::X, PI / 2.0, opts.final_phase));
    s.push(SeqOp::Measure { ion: None });
    Ok(s)
}

/// `pi/2_x`, free evolution for `t`, `pi/2` about `final_phase`, measurement.
pub fn build_ramsey_sequence(t: f64, final_phase: f64) -> PulseSequence {
    let mut s = PulseSequence::new();
    s.push(mw(MwAxis::X, PI / 2.0, 0.0));
    s.push(SeqOp::Wait { duration: t });
    s.push(mw(MwAxis::X, PI / 2.0, final_phase));
    s.push(SeqOp::Measure { ion: None });
    s
}
