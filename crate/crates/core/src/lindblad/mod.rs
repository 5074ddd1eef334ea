// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Master-equation model of a detuned optical pulse acting on one spin branch.
//!
//! Each spin state couples to its own optical line. For one branch the
//! simulation runs on three levels: the driven ground level `g` (0), its
//! excited level `e` (1), and an undriven reference level `r` (2) that stands
//! in for the other spin state. The branch coherence `<r|rho|g>`, normalized
//! to its initial value, carries the phase `+E T` picked up by `g` and the
//! contrast left after scattering.

pub mod quadrature;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::lm::{levenberg_marquardt, LmOptions};
use crate::qcore::ode::{self, OdeOptions};
use crate::qcore::{expm, CMatrix, DensityMatrix, I, ZERO};

pub const G: usize = 0;
pub const E: usize = 1;
pub const R: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LindbladConfig {
    /// Optical Rabi frequency, rad/s.
    pub omega: f64,
    /// Laser minus transition, rad/s.
    pub delta: f64,
    /// Radiative decay e -> g, rad/s.
    pub gamma_rad: f64,
    /// Pure dephasing of e, rad/s.
    pub gamma_d: f64,
    /// Seconds.
    pub duration: f64,
    pub integrator_tol: f64,
}

impl LindbladConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega, self.delta, self.gamma_rad, self.gamma_d, self.duration]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::input("master-equation parameters must be finite"));
        }
        if self.gamma_rad < 0.0 || self.gamma_d < 0.0 || self.duration < 0.0 {
            return Err(Error::input("rates and duration must be non-negative"));
        }
        if !(self.integrator_tol > 0.0 && self.integrator_tol <= 1e-6) {
            return Err(Error::input(format!("integrator_tol {} not in (0, 1e-6]", self.integrator_tol)));
        }
        Ok(())
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }
}

/// How the density matrix is advanced in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Exponential of the Liouvillian superoperator.
    #[default]
    Expm,
    /// Adaptive Dormand-Prince with `integrator_tol` as relative tolerance.
    AdaptiveRk,
}

fn hamiltonian(cfg: &LindbladConfig, dim: usize) -> CMatrix {
    let mut h = CMatrix::zeros(dim);
    h[(G, E)] = C64::new(cfg.omega / 2.0, 0.0);
    h[(E, G)] = C64::new(cfg.omega / 2.0, 0.0);
    h[(E, E)] = C64::new(-cfg.delta, 0.0);
    h
}

fn collapse_ops(cfg: &LindbladConfig, dim: usize) -> Vec<CMatrix> {
    let mut ops = Vec::new();
    if cfg.gamma_rad > 0.0 {
        ops.push(CMatrix::ket_bra(dim, G, E).scale(C64::new(cfg.gamma_rad.sqrt(), 0.0)));
    }
    if cfg.gamma_d > 0.0 {
        ops.push(CMatrix::ket_bra(dim, E, E).scale(C64::new(cfg.gamma_d.sqrt(), 0.0)));
    }
    ops
}

/// Row-major `vec(A rho B) = (A kron B^T) vec(rho)`.
fn kron_left_right(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = a.dim();
    let mut out = CMatrix::zeros(n * n);
    for i in 0..n {
        for k in 0..n {
            let aik = a[(i, k)];
            if aik == ZERO {
                continue;
            }
            for j in 0..n {
                for l in 0..n {
                    // (A rho B)_{ij} = sum_{k,l} A_ik rho_kl B_lj
                    out[(i * n + j, k * n + l)] += aik * b[(l, j)];
                }
            }
        }
    }
    out
}

/// Liouvillian superoperator acting on row-major `vec(rho)`.
pub fn liouvillian(cfg: &LindbladConfig, dim: usize) -> CMatrix {
    let h = hamiltonian(cfg, dim);
    let id = CMatrix::identity(dim);
    let mut l = &kron_left_right(&h, &id).scale(-I) + &kron_left_right(&id, &h).scale(I);
    for c in collapse_ops(cfg, dim) {
        let cd = c.dagger();
        let cdc = &cd * &c;
        l = &l + &kron_left_right(&c, &cd);
        l = &l - &kron_left_right(&cdc, &id).scale(C64::new(0.5, 0.0));
        l = &l - &kron_left_right(&id, &cdc).scale(C64::new(0.5, 0.0));
    }
    l
}

fn rhs(h: &CMatrix, ops: &[(CMatrix, CMatrix, CMatrix)], rho: &CMatrix) -> CMatrix {
    let mut d = h.commutator(rho).scale(-I);
    for (c, cd, cdc) in ops {
        d = &d + &(&(c * rho) * cd);
        d = &d - &cdc.anticommutator(rho).scale(C64::new(0.5, 0.0));
    }
    d
}

/// Evolves `rho0` for `cfg.duration` with the default method.
pub fn evolve(cfg: &LindbladConfig, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    evolve_with(cfg, rho0, Method::default())
}

pub fn evolve_with(cfg: &LindbladConfig, rho0: &DensityMatrix, method: Method) -> Result<DensityMatrix> {
    cfg.validate()?;
    DensityMatrix::new(rho0.matrix().clone())?;
    let n = rho0.dim();
    let out = match method {
        Method::Expm => {
            let l = liouvillian(cfg, n).scale(C64::new(cfg.duration, 0.0));
            let v = expm(&l).matvec(rho0.matrix().as_slice());
            CMatrix::from_vec(n, v)
        }
        Method::AdaptiveRk => {
            let h = hamiltonian(cfg, n);
            let ops: Vec<_> = collapse_ops(cfg, n)
                .into_iter()
                .map(|c| {
                    let cd = c.dagger();
                    let cdc = &cd * &c;
                    (c, cd, cdc)
                })
                .collect();
            let opts = OdeOptions { rtol: cfg.integrator_tol, atol: cfg.integrator_tol * 1e-3, ..OdeOptions::default() };
            let (v, _) = ode::integrate(
                |_, y, dy| {
                    let rho = CMatrix::from_vec(n, y.to_vec());
                    dy.copy_from_slice(rhs(&h, &ops, &rho).as_slice());
                },
                rho0.matrix().as_slice(),
                0.0,
                cfg.duration,
                &opts,
                |_, _| {},
            )?;
            CMatrix::from_vec(n, v)
        }
    };
    Ok(DensityMatrix::from_raw(out))
}

/// Equal superposition of `g` and the reference level.
pub fn branch_initial_state() -> DensityMatrix {
    let mut m = CMatrix::zeros(3);
    for &i in &[G, R] {
        for &j in &[G, R] {
            m[(i, j)] = C64::new(0.5, 0.0);
        }
    }
    DensityMatrix::from_raw(m)
}

/// Normalized branch coherence `<r|rho(T)|g> / <r|rho(0)|g>`.
pub fn branch_coherence(cfg: &LindbladConfig, method: Method) -> Result<C64> {
    let rho0 = branch_initial_state();
    let rho = evolve_with(cfg, &rho0, method)?;
    Ok(rho.get(R, G) / rho0.get(R, G))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyResult {
    /// `None` when either coherence has vanished.
    pub phase: Option<f64>,
    pub visibility: f64,
}

/// Phase and visibility from the normalized coherences of the two branches.
pub fn ramsey_extract(coh_a: C64, coh_b: C64) -> Result<RamseyResult> {
    for c in [coh_a, coh_b] {
        if !(c.re.is_finite() && c.im.is_finite()) || c.norm() > 1.0 + 1e-9 {
            return Err(Error::input(format!("coherence {c} has magnitude above 1")));
        }
    }
    let visibility = coh_a.norm() * coh_b.norm();
    if coh_a.norm() <= 1e-12 || coh_b.norm() <= 1e-12 {
        return Ok(RamseyResult { phase: None, visibility: 0.0 });
    }
    Ok(RamseyResult { phase: Some((coh_b * coh_a.conj()).arg()), visibility })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionKind {
    None,
    Gaussian,
    Lorentzian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionProfile {
    pub kind: DiffusionKind,
    /// rad/s.
    pub fwhm: f64,
    pub quadrature_points: usize,
}

pub const DEFAULT_QUADRATURE_POINTS: usize = 201;

impl DiffusionProfile {
    pub fn none() -> Self {
        Self { kind: DiffusionKind::None, fwhm: 0.0, quadrature_points: DEFAULT_QUADRATURE_POINTS }
    }

    pub fn gaussian(fwhm: f64) -> Self {
        Self { kind: DiffusionKind::Gaussian, fwhm, quadrature_points: DEFAULT_QUADRATURE_POINTS }
    }

    pub fn lorentzian(fwhm: f64) -> Self {
        Self { kind: DiffusionKind::Lorentzian, fwhm, quadrature_points: DEFAULT_QUADRATURE_POINTS }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm >= 0.0) || !self.fwhm.is_finite() {
            return Err(Error::input(format!("diffusion fwhm {} must be >= 0", self.fwhm)));
        }
        if self.quadrature_points < 11 || self.quadrature_points % 2 == 0 {
            return Err(Error::input(format!(
                "quadrature_points {} must be odd and >= 11",
                self.quadrature_points
            )));
        }
        Ok(())
    }

    fn rule(&self, n: usize) -> quadrature::Rule {
        match self.kind {
            DiffusionKind::None => quadrature::Rule { nodes: vec![0.0], weights: vec![1.0] },
            _ if self.fwhm == 0.0 => quadrature::Rule { nodes: vec![0.0], weights: vec![1.0] },
            DiffusionKind::Gaussian => quadrature::gaussian(n, self.fwhm),
            DiffusionKind::Lorentzian => quadrature::lorentzian(n, self.fwhm),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionResult {
    /// Averaged normalized coherence.
    pub coherence: C64,
    /// `arg(coherence)`.
    pub phase: f64,
    /// `1 - |coherence|`.
    pub visibility_loss: f64,
    pub nodes_used: usize,
}

impl DiffusionResult {
    fn from_coherence(coherence: C64, nodes_used: usize) -> Self {
        Self { coherence, phase: coherence.arg(), visibility_loss: 1.0 - coherence.norm(), nodes_used }
    }
}

fn average_with_rule(rule: &quadrature::Rule, inner: &LindbladConfig, method: Method) -> Result<C64> {
    let terms: Vec<C64> = rule
        .nodes
        .par_iter()
        .zip(rule.weights.par_iter())
        .map(|(&d, &w)| branch_coherence(&inner.with_delta(inner.delta + d), method).map(|c| c * w))
        .collect::<Result<_>>()?;
    Ok(quadrature::pairwise_sum(&terms, ZERO))
}

fn changed(a: f64, b: f64) -> bool {
    (a - b).abs() > 0.01 * b.abs().max(1e-7)
}

/// Averages the branch coherence over a frozen detuning offset.
///
/// The rule is refined `n -> 2n+1` until the loss and the phase move by less
/// than 1% between successive rules, up to [`MAX_QUADRATURE_POINTS`]
/// ([`MAX_GAUSSIAN_POINTS`] for a Gaussian profile, whose rule costs a dense
/// eigen-solve).
pub fn diffusion_average(profile: &DiffusionProfile, inner: &LindbladConfig) -> Result<DiffusionResult> {
    diffusion_average_with(profile, inner, Method::default())
}

pub const MAX_QUADRATURE_POINTS: usize = 20_000;
pub const MAX_GAUSSIAN_POINTS: usize = 400;

pub fn diffusion_average_with(profile: &DiffusionProfile, inner: &LindbladConfig, method: Method) -> Result<DiffusionResult> {
    profile.validate()?;
    inner.validate()?;
    if profile.kind == DiffusionKind::None || profile.fwhm == 0.0 {
        return Ok(DiffusionResult::from_coherence(branch_coherence(inner, method)?, 1));
    }
    let cap = match profile.kind {
        DiffusionKind::Gaussian => MAX_GAUSSIAN_POINTS,
        _ => MAX_QUADRATURE_POINTS,
    };
    let mut n = profile.quadrature_points;
    let mut coarse = DiffusionResult::from_coherence(average_with_rule(&profile.rule(n), inner, method)?, n);
    loop {
        let m = 2 * n + 1;
        let fine = DiffusionResult::from_coherence(average_with_rule(&profile.rule(m), inner, method)?, m);
        if !changed(coarse.visibility_loss, fine.visibility_loss) && !changed(coarse.phase, fine.phase) {
            return Ok(fine);
        }
        if m > cap {
            return Err(Error::numerical(format!(
                "quadrature not converged with {m} points: loss {} -> {}, phase {} -> {}",
                coarse.visibility_loss, fine.visibility_loss, coarse.phase, fine.phase
            )));
        }
        (n, coarse) = (m, fine);
    }
}

/// Two spin branches driven by one laser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoBranchConfig {
    pub omega: f64,
    pub delta_a: f64,
    pub delta_b: f64,
    pub gamma_rad: f64,
    pub gamma_d: f64,
    pub duration: f64,
    pub integrator_tol: f64,
}

impl TwoBranchConfig {
    pub fn branch(&self, delta: f64) -> LindbladConfig {
        LindbladConfig {
            omega: self.omega,
            delta,
            gamma_rad: self.gamma_rad,
            gamma_d: self.gamma_d,
            duration: self.duration,
            integrator_tol: self.integrator_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinRamsey {
    pub phase: Option<f64>,
    pub visibility: f64,
    pub visibility_loss: f64,
    pub coh_a: C64,
    pub coh_b: C64,
}

/// Spin Ramsey phase and loss for one laser setting; each branch is averaged
/// over the profile on its own and the contrasts multiply.
pub fn spin_ramsey(cfg: &TwoBranchConfig, profile: &DiffusionProfile) -> Result<SpinRamsey> {
    let a = diffusion_average(profile, &cfg.branch(cfg.delta_a))?;
    let b = diffusion_average(profile, &cfg.branch(cfg.delta_b))?;
    let r = ramsey_extract(a.coherence, b.coherence)?;
    Ok(SpinRamsey {
        phase: r.phase,
        visibility: r.visibility,
        visibility_loss: 1.0 - r.visibility,
        coh_a: a.coherence,
        coh_b: b.coherence,
    })
}

/// Single-branch loss lineshape `1 - exp(-a w / (d^2 + w^2/4))`.
pub fn loss_lineshape(delta: f64, a: f64, w: f64) -> f64 {
    -(-(a * w / (delta * delta + w * w / 4.0))).exp_m1()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineshapeFit {
    pub amplitude: f64,
    pub width: f64,
    /// Root-mean-square residual.
    pub rms: f64,
}

/// Least-squares fit of [`loss_lineshape`] to a loss-versus-detuning sweep.
pub fn fit_loss_lineshape(deltas: &[f64], losses: &[f64], width_guess: f64) -> Result<LineshapeFit> {
    let peak = losses.iter().cloned().fold(0.0, f64::max).min(0.999);
    let a0 = -(1.0 - peak).ln() * width_guess / 4.0;
    let fit = levenberg_marquardt(
        |d, p| loss_lineshape(d, p[0], p[1].abs()),
        deltas,
        losses,
        None,
        &[a0.max(1e-300), width_guess],
        &LmOptions::default(),
    )?;
    Ok(LineshapeFit {
        amplitude: fit.params[0],
        width: fit.params[1].abs(),
        rms: (fit.rss / deltas.len() as f64).sqrt(),
    })
}
