// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Spectral diffusion adds to the radiative linewidth.
//!
//! A two-level branch is driven weakly across its line while the transition
//! frequency is averaged over a Lorentzian distribution. The fitted loss
//! lineshape has the summed width.

use ionmux::ion_model::TWO_PI;
use ionmux::lindblad::{diffusion_average, fit_loss_lineshape, DiffusionProfile, LindbladConfig};
use ionmux::stark::linspace;

fn main() -> ionmux::Result<()> {
    let g_rad = TWO_PI * 2e6;
    let omega = 0.05 * g_rad;
    for w_hz in [0.0, 2e6, 8e6] {
        let w = TWO_PI * w_hz;
        let profile = if w_hz == 0.0 { DiffusionProfile::none() } else { DiffusionProfile::lorentzian(w) };
        let g = g_rad + w;
        let duration = g / (omega * omega);
        let deltas = linspace(-4.0 * g, 4.0 * g, 41);
        let mut losses = Vec::new();
        for &delta in &deltas {
            let cfg = LindbladConfig { omega, delta, gamma_rad: g_rad, gamma_d: 0.0, duration, integrator_tol: 1e-10 };
            losses.push(diffusion_average(&profile, &cfg)?.visibility_loss);
        }
        let fit = fit_loss_lineshape(&deltas, &losses, g)?;
        println!(
            "diffusion {:>4.1} MHz: fitted FWHM {:.3} MHz, radiative + diffusion {:.3} MHz",
            w_hz / 1e6,
            fit.width / TWO_PI / 1e6,
            (g_rad + w) / TWO_PI / 1e6
        );
    }
    Ok(())
}
