// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Single-shot readout of one ion: threshold on one transition versus the
//! difference of counts from alternating A and B pulses.

use ionmux::expsim::experiments::readout_experiment;
use ionmux::expsim::{mean_bright_counts, HardwareSpec, ReadoutMode};
use ionmux::ion_model::presets;

fn main() -> ionmux::Result<()> {
    let ion = presets::ion1();
    let hw = HardwareSpec::typical();
    let n_r = 250;
    let mean = mean_bright_counts(ion.cyclicity, hw.excitation_prob_per_pulse, hw.detect_prob_per_cycle, n_r);
    println!("expected bright counts {mean:.2}");
    for mode in [ReadoutMode::SingleTransition, ReadoutMode::AlternatingAb] {
        let (_, d) = readout_experiment(std::slice::from_ref(&ion), &hw, mode, n_r, 20_000, 1)?;
        let f = &d.per_ion[0];
        println!(
            "{mode:?}: fidelity {:.4} (up {:.4}, down {:.4}, threshold {:?})",
            f.fidelity, f.p_correct_up, f.p_correct_down, f.threshold
        );
    }
    Ok(())
}
