// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Coverage of the decay-time error bars over many seeds.

use ionmux::expsim::experiments::{coherence_suite, CoherenceScan};
use ionmux::expsim::HardwareSpec;
use ionmux::ion_model::presets;

#[test]
fn decay_time_pulls_are_standard_normal() {
    let ion = presets::ion2();
    let hw = HardwareSpec::typical();
    let scan = CoherenceScan { shots: 2000, ..CoherenceScan::for_ion(&ion) };
    let mut pulls = [Vec::new(), Vec::new(), Vec::new()];
    for seed in 0..120u64 {
        let f = coherence_suite(&ion, &hw, &scan, seed).unwrap();
        pulls[0].push((f.t1.time - ion.spin.t1) / f.t1.time_stderr);
        pulls[1].push((f.t2_star.time - ion.spin.t2_star) / f.t2_star.time_stderr);
        pulls[2].push((f.t2.time - ion.spin.t2_xy8) / f.t2.time_stderr);
    }
    for z in &pulls {
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let sd = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let outside = z.iter().filter(|v| v.abs() > 2.0).count();
        assert!(mean.abs() < 0.35, "mean pull {mean}");
        assert!((0.8..1.25).contains(&sd), "pull sd {sd}");
        // 2 sigma coverage is 95.4%; allow binomial slack
        assert!(outside <= 14, "{outside} of 120 outside 2 sd");
    }
}
