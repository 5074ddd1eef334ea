// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Arbitrary single-ion gates from global microwave pulses and optical
//! phase shifts.

use ionmux::control::{ideal_phases, simulate_circuit, single_ion_unitary_circuit, synthesize_v, write_circuit};
use ionmux::qcore::{distance_up_to_global_phase, rot, Unitary2};

fn main() -> ionmux::Result<()> {
    let n = (1.0f64 + 4.0 + 0.25).sqrt();
    let u = rot([1.0 / n, 2.0 / n, -0.5 / n], 1.1)?;
    let s = synthesize_v(&u)?;
    println!("beta {:.4}  theta {:.4}  alpha {:.4}  residual {:.1e}", s.beta, s.theta, s.alpha, s.residual);

    // apply u on ion 1 of three, leave the others alone
    let phases = ideal_phases(3, 1, &u)?;
    let circuit = single_ion_unitary_circuit(1, &u, &phases)?;
    print!("{}", write_circuit(&circuit));
    let identity = Unitary2::identity();
    for (i, got) in simulate_circuit(&circuit).iter().enumerate() {
        let want = if i == 1 { &u } else { &identity };
        println!("ion {i}: distance to target {:.1e}", distance_up_to_global_phase(got, want));
    }
    Ok(())
}
