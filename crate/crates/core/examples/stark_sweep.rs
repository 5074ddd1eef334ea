// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Phase and visibility loss of a detuned laser pulse against its frequency.
//!
//! Run with `cargo run --release --example stark_sweep`.

use ionmux::ion_model::{presets, TWO_PI};
use ionmux::stark::{linspace, spin_phase_far_detuned, sweep_frequency, StarkPulse};

fn main() {
    let ion = presets::ion2();
    let pulse = StarkPulse { omega: TWO_PI * 10e6, duration: 2e-6, laser_freq: 0.0 };
    let grid = linspace(-400e6, 400e6, 33);
    println!("{:>12} {:>10} {:>10} {:>10}", "f (MHz)", "phase", "far-det.", "loss");
    for r in sweep_frequency(&ion, &pulse, &grid) {
        let far = spin_phase_far_detuned(&StarkPulse { laser_freq: r.laser_freq, ..pulse }, &ion);
        println!("{:>12.1} {:>10.4} {:>10.4} {:>10.2e}", r.laser_freq / 1e6, r.phase, far, r.visibility_loss);
    }
}
