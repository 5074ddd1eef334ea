// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Small dense complex linear algebra: spin rotations, propagators, and
//! density matrices for systems of dimension 2 to 4.
//!
//! Sign convention: `rz(a) = diag(e^{-ia/2}, e^{+ia/2})`. Everything else in
//! the crate inherits it. Frequencies are angular (rad/s) and hbar = 1.

mod expm;
mod matrix;
pub mod ode;

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{DMatrix, SymmetricEigen};
pub use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use expm::expm;
pub use matrix::CMatrix;
use ode::{OdeOptions, OdeStats};

use crate::error::{Error, Result};

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

const DM_TOL: f64 = 1e-12;
const DM_EIG_FLOOR: f64 = -1e-10;

/// Pure state of a small system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if !(2..=4).contains(&amps.len()) {
            return Err(Error::input(format!("state dimension {} not in 2..=4", amps.len())));
        }
        Ok(Self { amps })
    }

    /// Basis state `|k>` in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        assert!((2..=4).contains(&dim) && k < dim);
        let mut amps = vec![ZERO; dim];
        amps[k] = ONE;
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self { amps: self.amps.iter().map(|a| a / n).collect() }
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }
}

/// 2x2 unitary. Construction through [`Unitary2::new`] checks `U^dagger U = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Unitary2 {
    m: [[C64; 2]; 2],
}

impl Unitary2 {
    pub fn new(m: [[C64; 2]; 2]) -> Result<Self> {
        let u = Self { m };
        let err = (&u.dagger() * &u).sub_identity_norm();
        if !err.is_finite() || err > 1e-9 {
            return Err(Error::input(format!("matrix is not unitary (|U^dag U - 1|_F = {err:e})")));
        }
        Ok(u)
    }

    pub fn identity() -> Self {
        Self { m: [[ONE, ZERO], [ZERO, ONE]] }
    }

    pub fn entries(&self) -> [[C64; 2]; 2] {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[i][j]
    }

    pub fn dagger(&self) -> Self {
        let m = self.m;
        Self { m: [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]] }
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = self.m;
        Self { m: [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]] }
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [self.m[0][0] * v[0] + self.m[0][1] * v[1], self.m[1][0] * v[0] + self.m[1][1] * v[1]]
    }

    pub fn frobenius_diff(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += (self.m[i][j] - other.m[i][j]).norm_sqr();
            }
        }
        s.sqrt()
    }

    /// `|U^dagger U - 1|_F`.
    pub fn unitarity_error(&self) -> f64 {
        (&self.dagger() * self).sub_identity_norm()
    }

    fn sub_identity_norm(&self) -> f64 {
        self.frobenius_diff(&Self::identity())
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_rows(&[self.m[0].to_vec(), self.m[1].to_vec()])
    }
}

impl Mul for &Unitary2 {
    type Output = Unitary2;

    fn mul(self, rhs: &Unitary2) -> Unitary2 {
        let (a, b) = (self.m, rhs.m);
        let mut m = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Unitary2 { m }
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;

    fn mul(self, rhs: Unitary2) -> Unitary2 {
        &self * &rhs
    }
}

/// `exp(-i angle (n . sigma) / 2)`.
pub fn rot(axis: [f64; 3], angle: f64) -> Result<Unitary2> {
    let len = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
    if !len.is_finite() || (len - 1.0).abs() > 1e-9 {
        return Err(Error::input(format!("rotation axis has norm {len}, expected 1")));
    }
    Ok(rot_unchecked(axis, angle))
}

pub(crate) fn rot_unchecked([nx, ny, nz]: [f64; 3], angle: f64) -> Unitary2 {
    let (s, c) = (angle / 2.0).sin_cos();
    Unitary2 {
        m: [
            [C64::new(c, -nz * s), C64::new(-ny * s, -nx * s)],
            [C64::new(ny * s, -nx * s), C64::new(c, nz * s)],
        ],
    }
}

pub fn rx(angle: f64) -> Unitary2 {
    rot_unchecked([1.0, 0.0, 0.0], angle)
}

pub fn ry(angle: f64) -> Unitary2 {
    rot_unchecked([0.0, 1.0, 0.0], angle)
}

pub fn rz(angle: f64) -> Unitary2 {
    rot_unchecked([0.0, 0.0, 1.0], angle)
}

/// Rotation about the equatorial axis `(cos phase, sin phase, 0)`.
pub fn r_phi(phase: f64, angle: f64) -> Unitary2 {
    rot_unchecked([phase.cos(), phase.sin(), 0.0], angle)
}

/// Axis from polar angle `theta` and azimuth `beta`.
pub fn spherical_axis(theta: f64, beta: f64) -> [f64; 3] {
    [theta.sin() * beta.cos(), theta.sin() * beta.sin(), theta.cos()]
}

pub fn sigma_x() -> Unitary2 {
    Unitary2 { m: [[ZERO, ONE], [ONE, ZERO]] }
}

pub fn sigma_y() -> Unitary2 {
    Unitary2 { m: [[ZERO, -I], [I, ZERO]] }
}

pub fn sigma_z() -> Unitary2 {
    Unitary2 { m: [[ONE, ZERO], [ZERO, -ONE]] }
}

/// `min_gamma |U - e^{i gamma} W|_F`.
pub fn distance_up_to_global_phase(u: &Unitary2, w: &Unitary2) -> f64 {
    let tr = (&w.dagger() * u).trace();
    let phase = if tr.norm() > 0.0 { tr / tr.norm() } else { ONE };
    u.frobenius_diff(&w.scale(phase))
}

#[derive(Debug, Clone, Copy)]
pub enum Propagator {
    AdaptiveRk(OdeOptions),
    /// Dense matrix exponential; exact for time-independent generators.
    Expm,
}

impl Default for Propagator {
    fn default() -> Self {
        Propagator::AdaptiveRk(OdeOptions::default())
    }
}

/// Solves `i d(psi)/dt = H psi` for a constant, possibly non-Hermitian, `H`.
pub fn propagate(h: &CMatrix, psi0: &StateVector, t: f64) -> Result<StateVector> {
    propagate_with(h, psi0, t, Propagator::default(), |_, _| {}).map(|(s, _)| s)
}

/// Like [`propagate`] but with an explicit method and a per-step observer
/// (only called by the adaptive integrator).
pub fn propagate_with<O: FnMut(f64, &StateVector)>(
    h: &CMatrix,
    psi0: &StateVector,
    t: f64,
    method: Propagator,
    mut observer: O,
) -> Result<(StateVector, OdeStats)> {
    if h.dim() != psi0.dim() {
        return Err(Error::input(format!("H is {0}x{0} but state has dimension {1}", h.dim(), psi0.dim())));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::input(format!("propagation time {t} must be finite and >= 0")));
    }
    match method {
        Propagator::Expm => {
            let gen = h.scale(-I * t);
            let amps = expm(&gen).matvec(psi0.amps());
            Ok((StateVector { amps }, OdeStats::default()))
        }
        Propagator::AdaptiveRk(opts) => {
            let minus_ih = h.scale(-I);
            let (amps, stats) = ode::integrate(
                |_, y, dy| minus_ih.matvec_into(y, dy),
                psi0.amps(),
                0.0,
                t,
                &opts,
                |tt, y| observer(tt, &StateVector { amps: y.to_vec() }),
            )?;
            Ok((StateVector { amps }, stats))
        }
    }
}

/// Density matrix of dimension 2 to 4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace, and positivity.
    pub fn new(m: CMatrix) -> Result<Self> {
        let d = m.dim();
        if !(2..=4).contains(&d) {
            return Err(Error::input(format!("density matrix dimension {d} not in 2..=4")));
        }
        if m.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::input("density matrix has non-finite entries"));
        }
        if !m.is_hermitian(DM_TOL) {
            return Err(Error::input("density matrix is not Hermitian"));
        }
        let tr = m.trace();
        if (tr - ONE).norm() > 1e-9 {
            return Err(Error::input(format!("density matrix trace {tr} != 1")));
        }
        let dm = Self { m };
        let lo = dm.min_eigenvalue();
        if lo < DM_EIG_FLOOR {
            return Err(Error::input(format!("density matrix has negative eigenvalue {lo:e}")));
        }
        Ok(dm)
    }

    pub(crate) fn from_raw(m: CMatrix) -> Self {
        Self { m }
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let d = psi.dim();
        let mut m = CMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = psi.amps[i] * psi.amps[j].conj();
            }
        }
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let d = self.dim();
        // Hermitian part only, so tiny anti-Hermitian noise cannot leak in.
        let herm = DMatrix::from_fn(d, d, |i, j| (self.m[(i, j)] + self.m[(j, i)].conj()) * 0.5);
        let mut ev: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_pi(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}
