// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Spin lifetime, free-induction decay and XY8 echo decay, fitted from
//! simulated shots.

use ionmux::expsim::experiments::{coherence_suite, CoherenceScan};
use ionmux::expsim::HardwareSpec;
use ionmux::ion_model::presets;

fn main() -> ionmux::Result<()> {
    for ion in presets::pair() {
        let f = coherence_suite(&ion, &HardwareSpec::typical(), &CoherenceScan::for_ion(&ion), 9)?;
        println!("{}", ion.label);
        println!("  T1  {:.3} +- {:.3} s   (model {} s)", f.t1.time, f.t1.time_stderr, ion.spin.t1);
        println!("  T2* {:.1} +- {:.1} ns  (model {} ns)", f.t2_star.time * 1e9, f.t2_star.time_stderr * 1e9, ion.spin.t2_star * 1e9);
        println!("  T2  {:.2} +- {:.2} us  (model {} us)", f.t2.time * 1e6, f.t2.time_stderr * 1e6, ion.spin.t2_xy8 * 1e6);
    }
    Ok(())
}
