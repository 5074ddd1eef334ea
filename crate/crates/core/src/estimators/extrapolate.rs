// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Weighted straight-line fit of wrong-state probability against bin index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinEstimate {
    pub bin_index: f64,
    pub wrong_state_prob: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfidelityExtrapolation {
    pub slope: f64,
    pub slope_stderr: f64,
    /// Extrapolated wrong-state probability at bin index zero.
    pub intercept: f64,
    pub intercept_stderr: f64,
    pub chi2: f64,
    /// Set when the fitted slope is negative.
    pub negative_slope: bool,
}

/// Weighted least-squares line through the per-bin estimates.
///
/// Weights are `1/stderr^2`; the intercept bounds the initialization error.
pub fn infidelity_extrapolate(bins: &[BinEstimate]) -> Result<InfidelityExtrapolation> {
    if bins.len() < 2 {
        return Err(Error::input("need at least two bins"));
    }
    let mut sw = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for b in bins {
        if !(b.stderr >= 0.0) || !b.stderr.is_finite() || !b.bin_index.is_finite() || !b.wrong_state_prob.is_finite() {
            return Err(Error::input(format!("bad bin estimate {b:?}")));
        }
        if b.stderr == 0.0 {
            return Err(Error::input(format!("bin {} has zero standard error (infinite weight)", b.bin_index)));
        }
        let w = 1.0 / (b.stderr * b.stderr);
        sw += w;
        sx += w * b.bin_index;
        sy += w * b.wrong_state_prob;
    }
    if !(sw > 0.0) || !sw.is_finite() {
        return Err(Error::input("all bin weights vanish"));
    }
    let (xm, ym) = (sx / sw, sy / sw);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for b in bins {
        let w = 1.0 / (b.stderr * b.stderr);
        sxx += w * (b.bin_index - xm).powi(2);
        sxy += w * (b.bin_index - xm) * (b.wrong_state_prob - ym);
    }
    if sxx <= 0.0 {
        return Err(Error::input("bins share a single index; slope undefined"));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let chi2 = bins
        .iter()
        .map(|b| ((b.wrong_state_prob - intercept - slope * b.bin_index) / b.stderr).powi(2))
        .sum();
    Ok(InfidelityExtrapolation {
        slope,
        slope_stderr: (1.0 / sxx).sqrt(),
        intercept,
        intercept_stderr: (1.0 / sw + xm * xm / sxx).sqrt(),
        chi2,
        negative_slope: slope < 0.0,
    })
}
