// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Exponential and Gaussian decay fits.

use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, LmFit, LmOptions};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub t: f64,
    pub y: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Decay time; infinite when `unbounded`.
    pub time: f64,
    pub time_stderr: f64,
    pub amplitude: f64,
    pub amplitude_stderr: f64,
    pub offset: f64,
    pub offset_stderr: f64,
    /// Weighted residual sum of squares.
    pub rss: f64,
    /// The data show no resolvable decay.
    pub unbounded: bool,
}

fn split(points: &[DecayPoint]) -> Result<(Vec<f64>, Vec<f64>, Option<Vec<f64>>)> {
    let t: Vec<f64> = points.iter().map(|p| p.t).collect();
    let y: Vec<f64> = points.iter().map(|p| p.y).collect();
    if points.iter().any(|p| !(p.t.is_finite() && p.y.is_finite() && p.stderr >= 0.0)) {
        return Err(Error::input("decay points must be finite with stderr >= 0"));
    }
    let s = if points.iter().all(|p| p.stderr > 0.0) {
        Some(points.iter().map(|p| p.stderr).collect())
    } else if points.iter().all(|p| p.stderr == 0.0) {
        None
    } else {
        return Err(Error::input("mix of zero and non-zero standard errors"));
    };
    Ok((t, y, s))
}

fn flat(points: &[DecayPoint]) -> Option<DecayFit> {
    let n = points.len() as f64;
    let mean = points.iter().map(|p| p.y).sum::<f64>() / n;
    let spread = points.iter().map(|p| (p.y - mean).abs()).fold(0.0, f64::max);
    let noise = points.iter().map(|p| p.stderr).fold(0.0, f64::max);
    if spread <= 1e-12 * mean.abs().max(1.0) + 1e-300 && spread <= noise.max(1e-300) || spread == 0.0 {
        Some(DecayFit {
            time: f64::INFINITY,
            time_stderr: f64::INFINITY,
            amplitude: 0.0,
            amplitude_stderr: f64::INFINITY,
            offset: mean,
            offset_stderr: 0.0,
            rss: 0.0,
            unbounded: true,
        })
    } else {
        None
    }
}

fn pack(fit: &LmFit, time_idx: usize, offset_idx: Option<usize>, span: f64) -> DecayFit {
    let time = fit.params[time_idx].abs();
    DecayFit {
        time,
        time_stderr: fit.stderr[time_idx],
        amplitude: fit.params[0],
        amplitude_stderr: fit.stderr[0],
        offset: offset_idx.map_or(0.0, |i| fit.params[i]),
        offset_stderr: offset_idx.map_or(0.0, |i| fit.stderr[i]),
        rss: fit.rss,
        unbounded: time > 1e3 * span || fit.stderr[time_idx] > 1e3 * time,
    }
}

fn span(t: &[f64]) -> f64 {
    t.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - t.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Fits `A exp(-t/T) + B`. Needs at least four points.
pub fn fit_exp_decay(points: &[DecayPoint]) -> Result<DecayFit> {
    if points.len() < 4 {
        return Err(Error::input("exponential fit needs at least 4 points"));
    }
    let (t, y, s) = split(points)?;
    if let Some(f) = flat(points) {
        return Ok(f);
    }
    let mut order: Vec<usize> = (0..t.len()).collect();
    order.sort_by(|&a, &b| t[a].total_cmp(&t[b]));
    let (first, last) = (order[0], order[order.len() - 1]);
    let b0 = y[last];
    let a0 = y[first] - b0;
    // time at which the excess has dropped by 1/e, from linear interpolation
    let target = b0 + a0 / std::f64::consts::E;
    let mut tau0 = span(&t) / 2.0;
    for w in order.windows(2) {
        let (i, j) = (w[0], w[1]);
        if (y[i] - target) * (y[j] - target) <= 0.0 && y[i] != y[j] {
            tau0 = t[i] + (target - y[i]) * (t[j] - t[i]) / (y[j] - y[i]) - t[first];
            break;
        }
    }
    let tau0 = tau0.max(1e-3 * span(&t));
    let fit = levenberg_marquardt(|x, p| p[0] * (-x / p[1].abs()).exp() + p[2], &t, &y, s.as_deref(), &[a0, tau0, b0], &LmOptions::default())?;
    Ok(pack(&fit, 1, Some(2), span(&t)))
}

/// Fits `A exp(-(t/T)^2)`.
pub fn fit_gaussian_decay(points: &[DecayPoint]) -> Result<DecayFit> {
    if points.len() < 3 {
        return Err(Error::input("Gaussian fit needs at least 3 points"));
    }
    let (t, y, s) = split(points)?;
    if let Some(f) = flat(points) {
        return Ok(f);
    }
    let a0 = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let target = a0 / std::f64::consts::E;
    let mut tau0 = span(&t) / 2.0;
    let mut order: Vec<usize> = (0..t.len()).collect();
    order.sort_by(|&a, &b| t[a].total_cmp(&t[b]));
    for w in order.windows(2) {
        let (i, j) = (w[0], w[1]);
        if (y[i] - target) * (y[j] - target) <= 0.0 && y[i] != y[j] {
            tau0 = t[i] + (target - y[i]) * (t[j] - t[i]) / (y[j] - y[i]);
            break;
        }
    }
    let fit = levenberg_marquardt(
        |x, p| p[0] * (-(x / p[1]).powi(2)).exp(),
        &t,
        &y,
        s.as_deref(),
        &[a0, tau0.max(1e-3 * span(&t))],
        &LmOptions::default(),
    )?;
    Ok(pack(&fit, 1, None, span(&t)))
}

/// Fits `A exp(-t/T)` without offset; used to compare decay shapes.
pub fn fit_exp_decay_no_offset(points: &[DecayPoint]) -> Result<DecayFit> {
    if points.len() < 3 {
        return Err(Error::input("exponential fit needs at least 3 points"));
    }
    let (t, y, s) = split(points)?;
    if let Some(f) = flat(points) {
        return Ok(f);
    }
    let a0 = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let fit = levenberg_marquardt(|x, p| p[0] * (-x / p[1].abs()).exp(), &t, &y, s.as_deref(), &[a0, span(&t) / 2.0], &LmOptions::default())?;
    Ok(pack(&fit, 1, None, span(&t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(f: impl Fn(f64) -> f64, ts: &[f64]) -> Vec<DecayPoint> {
        ts.iter().map(|&t| DecayPoint { t, y: f(t), stderr: 0.0 }).collect()
    }

    #[test]
    fn exp_noiseless() {
        let ts: Vec<f64> = (0..12).map(|i| i as f64 * 5.0).collect();
        let f = fit_exp_decay(&pts(|t| 0.9 * (-t / 20.0).exp() + 0.05, &ts)).unwrap();
        assert!((f.time - 20.0).abs() / 20.0 < 1e-3, "{f:?}");
        assert!(!f.unbounded);
    }

    #[test]
    fn exp_constant_is_unbounded() {
        let ts: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let f = fit_exp_decay(&pts(|_| 0.5, &ts)).unwrap();
        assert!(f.unbounded && f.time.is_infinite());
    }

    #[test]
    fn exp_needs_four_points() {
        assert!(fit_exp_decay(&pts(|t| t, &[0.0, 1.0, 2.0])).is_err());
    }

    #[test]
    fn gaussian_noiseless() {
        let ts: Vec<f64> = (0..15).map(|i| i as f64 * 2e-6).collect();
        let f = fit_gaussian_decay(&pts(|t| 0.8 * (-(t / 16.5e-6).powi(2)).exp(), &ts)).unwrap();
        assert!((f.time - 16.5e-6).abs() / 16.5e-6 < 1e-6);
        assert!((f.amplitude - 0.8).abs() < 1e-6);
    }

    #[test]
    fn shape_discrimination() {
        let ts: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let data = pts(|t| (-t / 1.5).exp(), &ts);
        let g = fit_gaussian_decay(&data).unwrap();
        let e = fit_exp_decay_no_offset(&data).unwrap();
        assert!(g.rss > 100.0 * e.rss.max(1e-20));
    }
}
