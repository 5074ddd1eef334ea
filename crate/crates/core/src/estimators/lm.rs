// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Levenberg-Marquardt for small curve fits.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Relative change in the objective below which the fit stops.
    pub ftol: f64,
    /// Relative step size below which the fit stops.
    pub xtol: f64,
    pub lambda0: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iter: 500, ftol: 1e-14, xtol: 1e-13, lambda0: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmFit {
    pub params: Vec<f64>,
    /// Row-major covariance.
    pub covariance: Vec<Vec<f64>>,
    pub stderr: Vec<f64>,
    /// Weighted sum of squared residuals.
    pub rss: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

fn residuals<F: Fn(f64, &[f64]) -> f64>(model: &F, x: &[f64], y: &[f64], w: &[f64], p: &[f64]) -> Vec<f64> {
    x.iter().zip(y).zip(w).map(|((&xi, &yi), &wi)| (yi - model(xi, p)) * wi).collect()
}

fn jacobian<F: Fn(f64, &[f64]) -> f64>(model: &F, x: &[f64], w: &[f64], p: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let k = p.len();
    let mut jac = DMatrix::zeros(n, k);
    let mut pp = p.to_vec();
    for j in 0..k {
        let h = 1e-6 * p[j].abs().max(1e-10);
        pp[j] = p[j] + h;
        let up: Vec<f64> = x.iter().map(|&xi| model(xi, &pp)).collect();
        pp[j] = p[j] - h;
        let dn: Vec<f64> = x.iter().map(|&xi| model(xi, &pp)).collect();
        pp[j] = p[j];
        for i in 0..n {
            // derivative of the model, so residual derivative is minus this
            jac[(i, j)] = w[i] * (up[i] - dn[i]) / (2.0 * h);
        }
    }
    jac
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Fits `y ~ model(x, p)`.
///
/// With `sigma` the residuals are weighted by `1/sigma` and the covariance is
/// `(J^T W J)^-1`. Without it the covariance is rescaled by the residual
/// variance `rss / (n - k)`.
pub fn levenberg_marquardt<F>(
    model: F,
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    p0: &[f64],
    opts: &LmOptions,
) -> Result<LmFit>
where
    F: Fn(f64, &[f64]) -> f64,
{
    let n = x.len();
    let k = p0.len();
    if y.len() != n || sigma.is_some_and(|s| s.len() != n) {
        return Err(Error::input("x, y and sigma lengths differ"));
    }
    if n < k {
        return Err(Error::input(format!("{n} points cannot determine {k} parameters")));
    }
    let w: Vec<f64> = match sigma {
        Some(s) => {
            if s.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::input("sigma values must be positive and finite"));
            }
            s.iter().map(|v| 1.0 / v).collect()
        }
        None => vec![1.0; n],
    };

    let mut p = p0.to_vec();
    let mut r = residuals(&model, x, y, &w, &p);
    let mut cost = sum_sq(&r);
    if !cost.is_finite() {
        return Err(Error::numerical("model is not finite at the starting point"));
    }
    let mut lambda = opts.lambda0;
    let mut iterations = 0;
    let mut grad_norm = f64::INFINITY;
    let mut converged = false;

    while iterations < opts.max_iter {
        iterations += 1;
        let jac = jacobian(&model, x, &w, &p);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_column_slice(&r);
        grad_norm = g.norm();
        if grad_norm <= 1e-15 * (1.0 + cost) {
            converged = true;
            break;
        }
        let mut improved = false;
        for _ in 0..60 {
            let mut a = jtj.clone();
            for j in 0..k {
                a[(j, j)] += lambda * jtj[(j, j)].max(1e-300);
            }
            let Some(step) = a.clone().cholesky().map(|c| c.solve(&g)).or_else(|| a.lu().solve(&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rt = residuals(&model, x, y, &w, &trial);
            let ct = sum_sq(&rt);
            if ct.is_finite() && ct <= cost {
                let rel_f = (cost - ct) / cost.max(1e-300);
                let pnorm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                let rel_x = step.norm() / (pnorm + opts.xtol);
                p = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 3.0).max(1e-15);
                improved = true;
                if rel_f < opts.ftol || rel_x < opts.xtol {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            // No downhill step at any damping: a (local) minimum to machine precision.
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::numerical(format!(
            "Levenberg-Marquardt did not converge in {iterations} iterations (gradient norm {grad_norm:e})"
        )));
    }

    let jac = jacobian(&model, x, &w, &p);
    let jtj = jac.transpose() * &jac;
    let mut cov = jtj
        .clone()
        .try_inverse()
        .or_else(|| jtj.pseudo_inverse(1e-14).ok())
        .ok_or_else(|| Error::numerical("singular normal matrix"))?;
    if sigma.is_none() {
        let dof = n.saturating_sub(k).max(1) as f64;
        cov *= cost / dof;
    }
    let stderr = (0..k).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    Ok(LmFit {
        params: p,
        covariance: (0..k).map(|i| (0..k).map(|j| cov[(i, j)]).collect()).collect(),
        stderr,
        rss: cost,
        iterations,
        gradient_norm: grad_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exponential() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.2).collect();
        let y: Vec<f64> = x.iter().map(|t| 2.0 * (-t / 1.3).exp() + 0.4).collect();
        let f = levenberg_marquardt(|t, p| p[0] * (-t / p[1]).exp() + p[2], &x, &y, None, &[1.0, 0.5, 0.0], &LmOptions::default())
            .unwrap();
        assert!((f.params[0] - 2.0).abs() < 1e-8);
        assert!((f.params[1] - 1.3).abs() < 1e-8);
        assert!((f.params[2] - 0.4).abs() < 1e-8);
    }

    #[test]
    fn linear_model_covariance_matches_closed_form() {
        // y = a + b x with unit sigma: cov = (X^T X)^-1.
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 2.9, 5.2, 7.0];
        let s = [1.0; 4];
        let f = levenberg_marquardt(|t, p| p[0] + p[1] * t, &x, &y, Some(&s), &[0.0, 0.0], &LmOptions::default()).unwrap();
        let (sx, sxx, n) = (6.0, 14.0, 4.0);
        let det = n * sxx - sx * sx;
        assert!((f.covariance[0][0] - sxx / det).abs() < 1e-6);
        assert!((f.covariance[1][1] - n / det).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_sigma() {
        let x = [0.0, 1.0];
        assert!(levenberg_marquardt(|t, p| p[0] * t, &x, &x, Some(&[1.0, 0.0]), &[1.0], &LmOptions::default()).is_err());
    }
}
