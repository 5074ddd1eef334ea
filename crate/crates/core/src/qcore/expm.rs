// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Matrix exponential by scaling and squaring with a truncated Taylor series.

use num_complex::Complex64 as C64;

use super::CMatrix;

const SCALED_NORM: f64 = 0.5;
const MAX_TERMS: usize = 40;

/// `exp(a)` for a small dense complex matrix.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.dim();
    let norm = a.norm_one();
    let mut squarings = 0u32;
    if norm > SCALED_NORM {
        squarings = (norm / SCALED_NORM).log2().ceil() as u32;
    }
    let scaled = a.scale(C64::new(0.5f64.powi(squarings as i32), 0.0));

    // Taylor sum; with ||scaled|| <= 0.5 the remainder after k terms is
    // below 0.5^k / k!, so the loop stops well before MAX_TERMS.
    let mut sum = CMatrix::identity(n);
    let mut term = CMatrix::identity(n);
    for k in 1..MAX_TERMS {
        term = (&term * &scaled).scale(C64::new(1.0 / k as f64, 0.0));
        sum = &sum + &term;
        if term.norm_one() <= f64::EPSILON * sum.norm_one() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matches_scalar_exp() {
        let mut a = CMatrix::zeros(3);
        a[(0, 0)] = C64::new(-2.0, 1.0);
        a[(1, 1)] = C64::new(0.5, -30.0);
        a[(2, 2)] = C64::new(0.0, 0.0);
        let e = expm(&a);
        for i in 0..3 {
            let want = a[(i, i)].exp();
            assert!((e[(i, i)] - want).norm() < 1e-12 * want.norm().max(1.0));
        }
        assert!(e[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn nilpotent_is_exact() {
        let mut a = CMatrix::zeros(2);
        a[(0, 1)] = C64::new(3.0, 0.0);
        let e = expm(&a);
        assert!((e[(0, 1)] - C64::new(3.0, 0.0)).norm() < 1e-13);
        assert!((e[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn rotation_generator_large_angle() {
        // exp(-i t sigma_x / 2) with t = 50
        let t = 50.0;
        let mut a = CMatrix::zeros(2);
        a[(0, 1)] = C64::new(0.0, -t / 2.0);
        a[(1, 0)] = C64::new(0.0, -t / 2.0);
        let e = expm(&a);
        assert!((e[(0, 0)] - C64::new((t / 2.0).cos(), 0.0)).norm() < 1e-11);
        assert!((e[(0, 1)] - C64::new(0.0, -(t / 2.0).sin())).norm() < 1e-11);
    }
}
