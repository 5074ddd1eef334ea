// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Optical pumping followed by binned readout. Each bin is fitted with a
//! two-component Poisson mixture and the wrong-spin fraction is extrapolated
//! back to the first readout pulse.

use ionmux::expsim::experiments::{init_fidelity, InitFidelityConfig};
use ionmux::expsim::HardwareSpec;
use ionmux::ion_model::presets;

fn main() -> ionmux::Result<()> {
    let ion = presets::ion1();
    // weak pumping so the preparation error is visible
    let hw = HardwareSpec {
        excitation_prob_per_pulse: 0.06,
        detect_prob_per_cycle: 0.5,
        dark_mean_per_window: 0.25,
        ..HardwareSpec::typical()
    };
    let cfg = InitFidelityConfig { shots: 20_000, ..InitFidelityConfig::default() };
    let r = init_fidelity(&ion, &hw, &cfg, 7)?;
    for b in &r.bins {
        println!("bin {:>4.1}: wrong spin {:.4} +- {:.4}", b.bin_index, b.wrong_state_prob, b.stderr);
    }
    let x = &r.extrapolation;
    println!("extrapolated {:.4} +- {:.4}", x.intercept, x.intercept_stderr);
    println!("Markov chain {:.4}, sampled {:.4}", r.oracle, r.observed);
    Ok(())
}
