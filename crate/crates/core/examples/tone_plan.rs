// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Choose laser tones that give each ion its own phase.

use ionmux::control::{plan_tones, ToneConstraints};
use ionmux::ion_model::presets;

fn main() -> ionmux::Result<()> {
    let ions = presets::pair();
    let targets = [1.0, -0.4];
    let plan = plan_tones(&ions, &targets, &ToneConstraints::band(-450e6, 450e6))?;
    for t in &plan.tones {
        println!("tone {:>8.2} MHz, energy {:.3e} rad^2/s", t.freq / 1e6, t.energy);
    }
    for (i, ion) in ions.iter().enumerate() {
        println!(
            "{}: target {:+.3} rad, achieved {:+.3} rad, loss {:.2e}",
            ion.label,
            targets[i],
            plan.phases[i] + plan.global_rz,
            plan.loss[i]
        );
    }
    println!("global Rz {:+.4} rad, residual {:.1e}", plan.global_rz, plan.residual);
    Ok(())
}
