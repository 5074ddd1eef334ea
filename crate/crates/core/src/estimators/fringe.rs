// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Sinusoidal fit `offset + (V/2) cos(theta - phi)` to a Ramsey fringe.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    /// `None` when the amplitude is not resolved above the noise.
    pub phase: Option<f64>,
    pub phase_stderr: f64,
    pub visibility: f64,
    pub visibility_stderr: f64,
    pub offset: f64,
}

/// Linear least squares in `(offset, c, s)` with `y = o + c cos + s sin`.
///
/// `sigma` gives per-point standard errors; without it the noise is
/// estimated from the residuals. Needs at least 5 points whose spacing
/// covers a full period.
pub fn fit_fringe(thetas: &[f64], ys: &[f64], sigma: Option<&[f64]>) -> Result<FringeFit> {
    let n = thetas.len();
    if n < 5 || ys.len() != n || sigma.is_some_and(|s| s.len() != n) {
        return Err(Error::input("fringe fit needs >= 5 matching phase/population points"));
    }
    let lo = thetas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = thetas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // Evenly spaced points without the repeated endpoint still cover a period.
    let period_cover = (hi - lo) * n as f64 / (n - 1) as f64;
    if period_cover < 2.0 * PI - 1e-9 {
        return Err(Error::input(format!("fringe phases span {} rad, less than a period", hi - lo)));
    }
    let w: Vec<f64> = match sigma {
        Some(s) if s.iter().all(|v| *v > 0.0 && v.is_finite()) => s.iter().map(|v| 1.0 / (v * v)).collect(),
        Some(_) => return Err(Error::input("sigma must be positive")),
        None => vec![1.0; n],
    };
    let mut a = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for i in 0..n {
        let row = Vector3::new(1.0, thetas[i].cos(), thetas[i].sin());
        a += w[i] * row * row.transpose();
        b += w[i] * ys[i] * row;
    }
    let cov0 = a.try_inverse().ok_or_else(|| Error::input("fringe design matrix is singular"))?;
    let p = cov0 * b;
    let rss: f64 = (0..n)
        .map(|i| w[i] * (ys[i] - p[0] - p[1] * thetas[i].cos() - p[2] * thetas[i].sin()).powi(2))
        .sum();
    let cov = if sigma.is_some() { cov0 } else { cov0 * (rss / (n - 3).max(1) as f64) };
    let (c, s) = (p[1], p[2]);
    let amp = c.hypot(s);
    let visibility = 2.0 * amp;
    // Propagate to amplitude and phase.
    let (var_amp, var_phi) = if amp > 0.0 {
        let ga = [c / amp, s / amp];
        let gp = [-s / (amp * amp), c / (amp * amp)];
        let q = |g: [f64; 2]| g[0] * g[0] * cov[(1, 1)] + 2.0 * g[0] * g[1] * cov[(1, 2)] + g[1] * g[1] * cov[(2, 2)];
        (q(ga), q(gp))
    } else {
        (0.5 * (cov[(1, 1)] + cov[(2, 2)]), f64::INFINITY)
    };
    let noise_amp = (0.5 * (cov[(1, 1)] + cov[(2, 2)])).sqrt();
    // Under pure noise amp/noise_amp is Rayleigh; 3 gives about 1% false positives.
    let resolved = amp > 1e-12 && amp > 3.0 * noise_amp;
    Ok(FringeFit {
        phase: resolved.then(|| s.atan2(c)),
        phase_stderr: var_phi.sqrt(),
        visibility,
        visibility_stderr: 2.0 * var_amp.sqrt(),
        offset: p[0],
    })
}
