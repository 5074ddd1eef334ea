// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Ion-selective single-qubit gates from global microwave rotations and
//! per-ion optical z rotations.
//!
//! Any single-qubit `U` equals `V Rz(alpha) V^-1` up to global phase, with
//! `V = Rz(beta) Ry(theta) Rz(-beta)`. Sandwiching per-ion optical phases
//! between `V^-1` and `V` therefore applies `U` to the ion whose optical
//! phase (after a global z correction) equals `alpha` and the identity to
//! every ion whose phase is cancelled by that correction.

pub mod circuit_format;
pub mod tones;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{distance_up_to_global_phase, rot_unchecked, ry, rz, spherical_axis, wrap_pi, Unitary2, C64};

pub use circuit_format::{parse_circuit, write_circuit};
pub use tones::{plan_tones, LaserTone, ToneConstraints, TonePlan};

/// Rotation axis of a global microwave pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MwAxis {
    X,
    Y,
    Z,
    /// Axis with azimuth `beta` and polar angle `theta`.
    N { beta: f64, theta: f64 },
}

impl MwAxis {
    pub fn vector(&self) -> [f64; 3] {
        match *self {
            MwAxis::X => [1.0, 0.0, 0.0],
            MwAxis::Y => [0.0, 1.0, 0.0],
            MwAxis::Z => [0.0, 0.0, 1.0],
            MwAxis::N { beta, theta } => spherical_axis(theta, beta),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum GateOp {
    /// `Rz(phase) R_axis(angle) Rz(-phase)` on every ion.
    Mw { axis: MwAxis, angle: f64, phase: f64 },
    /// `Rz(phis[j])` on ion `j`.
    OptZ { phis: Vec<f64> },
}

impl GateOp {
    pub fn global_rz(angle: f64) -> Self {
        GateOp::Mw { axis: MwAxis::Z, angle, phase: 0.0 }
    }

    /// Unitary on ion `ion`.
    pub fn unitary(&self, ion: usize) -> Unitary2 {
        match self {
            GateOp::Mw { axis, angle, phase } => {
                let r = rot_unchecked(axis.vector(), *angle);
                if *phase == 0.0 {
                    r
                } else {
                    &(&rz(*phase) * &r) * &rz(-*phase)
                }
            }
            GateOp::OptZ { phis } => rz(phis[ion]),
        }
    }
}

/// Gates in time order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_ions: usize,
    pub ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(n_ions: usize) -> Self {
        Self { n_ions, ops: Vec::new() }
    }

    pub fn push(&mut self, op: GateOp) -> Result<()> {
        if let GateOp::OptZ { phis } = &op {
            if phis.len() != self.n_ions {
                return Err(Error::input(format!("OPTZ has {} phases for {} ions", phis.len(), self.n_ions)));
            }
        }
        self.ops.push(op);
        Ok(())
    }

    /// Appends all gates of `other` after this circuit's gates.
    pub fn then(mut self, other: &Circuit) -> Result<Circuit> {
        if other.n_ions != self.n_ions {
            return Err(Error::input("circuits act on different ion counts"));
        }
        self.ops.extend(other.ops.iter().cloned());
        Ok(self)
    }
}

/// Net unitary of each ion.
pub fn simulate_circuit(circuit: &Circuit) -> Vec<Unitary2> {
    (0..circuit.n_ions)
        .map(|ion| {
            circuit
                .ops
                .iter()
                .fold(Unitary2::identity(), |acc, op| &op.unitary(ion) * &acc)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub beta: f64,
    pub theta: f64,
    pub alpha: f64,
    /// `distance_up_to_global_phase(V Rz(alpha) V^-1, U)`.
    pub residual: f64,
}

impl SynthesisResult {
    pub fn v(&self) -> Unitary2 {
        v_matrix(self.beta, self.theta)
    }
}

/// `Rz(beta) Ry(theta) Rz(-beta)`.
pub fn v_matrix(beta: f64, theta: f64) -> Unitary2 {
    &(&rz(beta) * &ry(theta)) * &rz(-beta)
}

/// Finds `V` and `alpha` with `V Rz(alpha) V^-1 = U` up to global phase.
///
/// `alpha` lies in `[0, 2pi)` and `theta` in `[0, pi]`. The rotation axis is
/// taken with its first non-zero Cartesian component positive, so x
/// rotations give `beta = 0` and z rotations give `theta = 0`. A multiple of
/// the identity returns all zeros.
pub fn synthesize_v(u: &Unitary2) -> Result<SynthesisResult> {
    if u.unitarity_error() > 1e-9 {
        return Err(Error::input("synthesize_v needs a unitary matrix"));
    }
    let det = u.det();
    let su = u.scale(C64::new(1.0, 0.0) / det.sqrt());
    let (a, b, c, d) = (su.get(0, 0), su.get(0, 1), su.get(1, 0), su.get(1, 1));
    let mut cos_half = 0.5 * (a + d).re;
    let mut w = [-0.5 * (b.im + c.im), 0.5 * (c.re - b.re), 0.5 * (d.im - a.im)];
    let wn = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    if wn <= 1e-15 {
        let res = SynthesisResult { beta: 0.0, theta: 0.0, alpha: 0.0, residual: 0.0 };
        return Ok(SynthesisResult { residual: distance_up_to_global_phase(&Unitary2::identity(), u), ..res });
    }
    // -U is the same physical gate; use it to put the axis in canonical form.
    let lead = w.iter().copied().find(|x| x.abs() > 1e-12 * wn).unwrap_or(w[2]);
    if lead < 0.0 {
        cos_half = -cos_half;
        w = [-w[0], -w[1], -w[2]];
    }
    let alpha = 2.0 * wn.atan2(cos_half);
    let n = [w[0] / wn, w[1] / wn, w[2] / wn];
    let rho = n[0].hypot(n[1]);
    let theta = rho.atan2(n[2]);
    let beta = if rho <= 1e-15 { 0.0 } else { n[1].atan2(n[0]) };
    let v = v_matrix(beta, theta);
    let rebuilt = &(&v * &rz(alpha)) * &v.dagger();
    Ok(SynthesisResult { beta, theta, alpha, residual: distance_up_to_global_phase(&rebuilt, u) })
}

const PHASE_TOL: f64 = 1e-9;

/// Circuit applying `u` to `target` and the identity to the other ions,
/// given the optical z-rotation angle each ion receives.
///
/// Emits `[V^-1, OPTZ(phases), Rz(-phi_ref), V]` where `phi_ref` is the
/// common spectator phase. Fails when the spectators disagree or when the
/// target's relative phase is not `alpha` (mod 2pi).
pub fn single_ion_unitary_circuit(target: usize, u: &Unitary2, phases: &[f64]) -> Result<Circuit> {
    let n = phases.len();
    if target >= n {
        return Err(Error::input(format!("target {target} out of range for {n} ions")));
    }
    let syn = synthesize_v(u)?;
    let spectators: Vec<usize> = (0..n).filter(|&j| j != target).collect();
    let phi_ref = match spectators.first() {
        Some(&j) => phases[j],
        None => phases[target] - syn.alpha,
    };
    for &j in &spectators {
        if wrap_pi(phases[j] - phi_ref).abs() > PHASE_TOL {
            return Err(Error::Planning(format!(
                "spectator ions {} and {} carry optical phases {} and {}; one global z rotation cannot cancel both (plan tones first)",
                spectators[0], j, phi_ref, phases[j]
            )));
        }
    }
    let rel = phases[target] - phi_ref;
    if wrap_pi(rel - syn.alpha).abs() > PHASE_TOL {
        return Err(Error::Planning(format!(
            "target relative phase {rel} does not match the required rotation angle {}",
            syn.alpha
        )));
    }
    let mut c = Circuit::new(n);
    let v_inv = GateOp::Mw { axis: MwAxis::Y, angle: -syn.theta, phase: syn.beta };
    let v = GateOp::Mw { axis: MwAxis::Y, angle: syn.theta, phase: syn.beta };
    c.push(v_inv)?;
    c.push(GateOp::OptZ { phis: phases.to_vec() })?;
    c.push(GateOp::global_rz(-phi_ref))?;
    c.push(v)?;
    Ok(c)
}

/// Optical phases that realize `u` on `target` alone: `alpha` on the target,
/// zero elsewhere.
pub fn ideal_phases(n_ions: usize, target: usize, u: &Unitary2) -> Result<Vec<f64>> {
    let syn = synthesize_v(u)?;
    let mut p = vec![0.0; n_ions];
    p[target] = syn.alpha;
    Ok(p)
}
