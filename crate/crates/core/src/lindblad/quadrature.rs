// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Quadrature rules for averaging over a static detuning offset.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes (offsets, rad/s) and probability weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// FWHM to standard deviation for a Gaussian.
pub fn gaussian_sigma(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * 2f64.ln()).sqrt())
}

/// Gauss-Hermite rule for a normal distribution with the given FWHM
/// (Golub-Welsch).
pub fn gaussian(n: usize, fwhm: f64) -> Rule {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let sigma = gaussian_sigma(fwhm);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    Rule {
        nodes: pairs.iter().map(|p| 2f64.sqrt() * sigma * p.0).collect(),
        weights: pairs.iter().map(|p| p.1 / total).collect(),
    }
}

/// Half-width of the truncated support, in units of FWHM.
pub const LORENTZ_SPAN_FWHM: f64 = 20.0;

/// Tangent-substitution rule for a Cauchy distribution with the given FWHM.
///
/// With `delta = (fwhm/2) tan(u)` the density becomes uniform in `u`. The
/// midpoint rule covers `|delta| <= 20 fwhm`; each remaining tail carries its
/// probability on a single node at the middle of its `u` interval.
pub fn lorentzian(n: usize, fwhm: f64) -> Rule {
    let hw = fwhm / 2.0;
    let u_max = (2.0 * LORENTZ_SPAN_FWHM).atan();
    let du = 2.0 * u_max / n as f64;
    let mut nodes = Vec::with_capacity(n + 2);
    let mut weights = Vec::with_capacity(n + 2);
    let u_tail = 0.5 * (PI / 2.0 + u_max);
    let w_tail = (PI / 2.0 - u_max) / PI;
    nodes.push(-hw * u_tail.tan());
    weights.push(w_tail);
    for k in 0..n {
        let u = -u_max + (k as f64 + 0.5) * du;
        nodes.push(hw * u.tan());
        weights.push(du / PI);
    }
    nodes.push(hw * u_tail.tan());
    weights.push(w_tail);
    Rule { nodes, weights }
}

/// Pairwise sum in a fixed order, independent of how the terms were produced.
pub fn pairwise_sum<T: Copy + std::ops::Add<Output = T>>(xs: &[T], zero: T) -> T {
    match xs.len() {
        0 => zero,
        1 => xs[0],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a, zero) + pairwise_sum(b, zero)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_hermite_moments() {
        let fwhm = 3.0;
        let s = gaussian_sigma(fwhm);
        let r = gaussian(21, fwhm);
        let m0: f64 = r.weights.iter().sum();
        let m2: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x * x).sum();
        let m4: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m0 - 1.0).abs() < 1e-13);
        assert!((m2 - s * s).abs() < 1e-12);
        assert!((m4 - 3.0 * s.powi(4)).abs() < 1e-10);
        // symmetric nodes
        assert!((r.nodes[0] + r.nodes[20]).abs() < 1e-12);
        assert!(r.nodes[10].abs() < 1e-12);
    }

    #[test]
    fn gauss_hermite_matches_characteristic_function() {
        // E[cos(k x)] = exp(-k^2 s^2 / 2)
        let r = gaussian(201, 1.0);
        let s = gaussian_sigma(1.0);
        for k in [0.5, 2.0, 6.0] {
            let got: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * (k * x).cos()).sum();
            assert!((got - (-k * k * s * s / 2.0).exp()).abs() < 1e-10, "k = {k}");
        }
    }

    #[test]
    fn lorentzian_weights_and_median() {
        let r = lorentzian(201, 2.0);
        assert_eq!(r.nodes.len(), 203);
        let m0: f64 = r.weights.iter().sum();
        assert!((m0 - 1.0).abs() < 1e-13);
        // Half the mass within one half-width.
        let inner: f64 = r.nodes.iter().zip(&r.weights).filter(|(x, _)| x.abs() < 1.0).map(|(_, w)| w).sum();
        assert!((inner - 0.5).abs() < 0.01);
    }

    #[test]
    fn lorentzian_averages_resolvent() {
        // E[1/(a - x + i b)] for Cauchy(0, h) equals 1/(a + i(b + h)).
        use num_complex::Complex64 as C64;
        let (a, b, h) = (3.0, 1.0, 1.0);
        let r = lorentzian(401, 2.0 * h);
        let got: C64 = r
            .nodes
            .iter()
            .zip(&r.weights)
            .map(|(x, w)| *w / C64::new(a - x, b))
            .sum();
        let want = 1.0 / C64::new(a, b + h);
        assert!((got - want).norm() / want.norm() < 5e-3, "{got} vs {want}");
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs, 0.0) - naive).abs() < 1e-10);
        assert_eq!(pairwise_sum::<f64>(&[], 0.0), 0.0);
    }
}
