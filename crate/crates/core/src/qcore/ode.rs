// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Adaptive Dormand-Prince 5(4) integrator for complex linear systems.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step; `None` picks one from the derivative scale.
    pub h0: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, max_steps: 2_000_000, h0: None }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub last_step: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..y.len() {
        let mut acc = C64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        out[i] = y[i] + acc * h;
    }
}

/// Integrates `dy/dt = f(t, y)` from `t0` to `t1`.
///
/// `observer` is called after every accepted step with the new time and state.
pub fn integrate<F, O>(
    mut f: F,
    y0: &[C64],
    t0: f64,
    t1: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> Result<(Vec<C64>, OdeStats)>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    O: FnMut(f64, &[C64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut stats = OdeStats::default();
    if t1 == t0 {
        return Ok((y, stats));
    }
    if !(t1 > t0) {
        return Err(Error::input(format!("integration interval [{t0}, {t1}] is reversed")));
    }
    let span = t1 - t0;

    let mut k1 = vec![C64::new(0.0, 0.0); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut k5 = k1.clone();
    let mut k6 = k1.clone();
    let mut k7 = k1.clone();
    let mut tmp = k1.clone();
    let mut ynew = k1.clone();

    f(t0, &y, &mut k1);

    let scale_of = |a: &[C64], b: &[C64], i: usize| opts.atol + opts.rtol * a[i].norm().max(b[i].norm());

    let mut h = match opts.h0 {
        Some(h) => h,
        None => {
            let d0 = (0..n).map(|i| (y[i].norm() / scale_of(&y, &y, i)).powi(2)).sum::<f64>();
            let d1 = (0..n).map(|i| (k1[i].norm() / scale_of(&y, &y, i)).powi(2)).sum::<f64>();
            let (d0, d1) = ((d0 / n as f64).sqrt(), (d1 / n as f64).sqrt());
            if d0 < 1e-5 || d1 < 1e-5 {
                1e-6 * span
            } else {
                0.01 * d0 / d1
            }
        }
    }
    .min(span);

    let mut t = t0;
    let mut steps = 0usize;
    while t < t1 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::numerical(format!(
                "integrator exceeded {} steps at t={t} (h={h}, accepted={}, rejected={})",
                opts.max_steps, stats.accepted, stats.rejected
            )));
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }

        axpy(&mut tmp, &y, h, &[(A21, &k1)]);
        f(t + C2 * h, &tmp, &mut k2);
        axpy(&mut tmp, &y, h, &[(A31, &k1), (A32, &k2)]);
        f(t + C3 * h, &tmp, &mut k3);
        axpy(&mut tmp, &y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        f(t + C4 * h, &tmp, &mut k4);
        axpy(&mut tmp, &y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        f(t + C5 * h, &tmp, &mut k5);
        axpy(&mut tmp, &y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        f(t + h, &tmp, &mut k6);
        axpy(&mut ynew, &y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        f(t + h, &ynew, &mut k7);

        let mut err = 0.0;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            err += (e.norm() / scale_of(&y, &ynew, i)).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::numerical(format!("non-finite error estimate at t={t}, h={h}")));
        }

        let factor = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            stats.accepted += 1;
            stats.last_step = h;
            observer(t, &y);
            h *= factor;
        } else {
            stats.rejected += 1;
            h *= factor.min(1.0);
        }
        if h <= f64::EPSILON * t.abs().max(span) {
            return Err(Error::numerical(format!(
                "step size underflow at t={t} (h={h}, accepted={}, rejected={})",
                stats.accepted, stats.rejected
            )));
        }
    }
    Ok((y, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let (y, stats) = integrate(
            |_, y, dy| dy[0] = y[0],
            &[C64::new(1.0, 0.0)],
            0.0,
            1.0,
            &OdeOptions::default(),
            |_, _| {},
        )
        .unwrap();
        assert!((y[0].re - 1f64.exp()).abs() < 1e-9);
        assert!(stats.accepted > 0);
    }

    #[test]
    fn oscillator_phase() {
        // dy/dt = i w y
        let w = 7.0;
        let (y, _) = integrate(
            |_, y, dy| dy[0] = C64::new(0.0, w) * y[0],
            &[C64::new(1.0, 0.0)],
            0.0,
            3.0,
            &OdeOptions::default(),
            |_, _| {},
        )
        .unwrap();
        let want = C64::new(0.0, w * 3.0).exp();
        assert!((y[0] - want).norm() < 1e-8);
    }

    #[test]
    fn zero_interval_is_identity() {
        let y0 = [C64::new(0.3, 0.1)];
        let (y, stats) =
            integrate(|_, _, dy| dy[0] = C64::new(1.0, 0.0), &y0, 2.0, 2.0, &OdeOptions::default(), |_, _| {})
                .unwrap();
        assert_eq!(y[0], y0[0]);
        assert_eq!(stats.accepted, 0);
    }

    #[test]
    fn step_budget_reports_numerical_error() {
        let opts = OdeOptions { max_steps: 3, ..OdeOptions::default() };
        let err = integrate(
            |_, y, dy| dy[0] = C64::new(0.0, 1000.0) * y[0],
            &[C64::new(1.0, 0.0)],
            0.0,
            100.0,
            &opts,
            |_, _| {},
        )
        .unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }
}
