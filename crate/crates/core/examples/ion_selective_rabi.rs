// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! An optical tone inside an XY8 echo rotates one ion while its neighbour
//! stays put. Placing the pulse in the other half of the echo reverses the
//! rotation.

use ionmux::expsim::experiments::{ion_selective_rabi, RabiConfig};
use ionmux::expsim::{HardwareSpec, Placement};
use ionmux::ion_model::presets;

fn main() -> ionmux::Result<()> {
    let ions = presets::pair();
    // the spectator figure is shot-noise limited; raise shots to push it down
    let cfg = RabiConfig { shots: 1_000, n_durations: 21, ..RabiConfig::default() };
    for placement in [Placement::Odd, Placement::Even] {
        let r = ion_selective_rabi(&ions, &HardwareSpec::typical(), &cfg, placement, 5)?;
        println!(
            "{placement:?}: tone {:.1} MHz, phase rate {:+.3e} rad/s, span {:.2} rad, spectator modulation {:.2}%",
            r.tone.freq / 1e6,
            r.phase_rate,
            r.phase_span(),
            100.0 * r.spectator_modulation(cfg.target)
        );
    }
    Ok(())
}
