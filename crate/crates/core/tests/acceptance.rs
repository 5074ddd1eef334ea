// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Runs every criterion at its stated tolerance and time
//! limit, prints one line per criterion, exits non-zero if any fails.
//!
//! `cargo test --release --test acceptance` (the test profile is optimized).

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ionmux::control::{simulate_circuit, single_ion_unitary_circuit, ideal_phases, synthesize_v};
use ionmux::estimators::poisson_mixture::sample_mixture;
use ionmux::estimators::{fit_bimodal_poisson, MixtureOptions};
use ionmux::expsim::experiments::{
    bright_mean_counts, coherence_suite, init_fidelity, ion_selective_rabi, multi_ion_readout, readout_experiment,
    CoherenceScan, InitFidelityConfig, RabiConfig,
};
use ionmux::expsim::{discriminate, mean_bright_counts, HardwareSpec, Placement, ReadoutMode, Rule};
use ionmux::ion_model::{flip_prob_per_cycle, presets, IonSpec};
use ionmux::lindblad::{
    diffusion_average, fit_loss_lineshape, spin_ramsey, DiffusionProfile, LindbladConfig, TwoBranchConfig,
};
use ionmux::qcore::{distance_up_to_global_phase, rot, rx, ry, rz, wrap_pi, Unitary2, C64};
use ionmux::stark::{self, StarkPulse};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TWO_PI: f64 = 2.0 * PI;
const SEED: u64 = 20260301;

struct Outcome {
    pass: bool,
    detail: String,
    /// Data rows, compared byte for byte by the determinism check.
    rows: Vec<String>,
}

type Criterion = fn(u64) -> Outcome;

fn report(id: u32, name: &str, limit: Duration, f: Criterion) -> (bool, Vec<String>) {
    let t0 = Instant::now();
    let out = f(SEED);
    let dt = t0.elapsed();
    let ok = out.pass && dt <= limit;
    println!(
        "acceptance {id:>2} {name}: {} ({:.2} s of {} s) {}",
        if ok { "PASS" } else { "FAIL" },
        dt.as_secs_f64(),
        limit.as_secs(),
        out.detail
    );
    (ok, out.rows)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn rows_of(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

// 1 ---------------------------------------------------------------------

fn stark_perturbation(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let mut deltas = [0.0; 2];
        for d in &mut deltas {
            let mag = TWO_PI * 10f64.powf(rng.random_range(7.0..9.5));
            *d = if rng.random::<bool>() { mag } else { -mag };
        }
        let omega = rng.random_range(0.0..=1.0) * 0.1 * deltas[0].abs().min(deltas[1].abs());
        for d in deltas {
            let exact = stark::dressed_amplitude(omega, d, 0.0).unwrap();
            let approx = stark::dressed_amplitude_approx(omega, d, 0.0).unwrap();
            let e_exact = stark::energy_shift(omega, d, 0.0, true).unwrap();
            let e_approx = stark::energy_shift(omega, d, 0.0, false).unwrap();
            if omega > 0.0 {
                worst = worst.max((exact - approx).norm() / exact.norm()).max(rel(e_approx, e_exact));
            }
        }
    }
    Outcome { pass: worst < 3.5e-3, detail: format!("worst relative deviation {worst:.2e} (< 3.5e-3)"), rows: vec![] }
}

// 2 ---------------------------------------------------------------------

fn lindblad_vs_closed_form(_seed: u64) -> Outcome {
    let ion = presets::ion2();
    let freqs = [-450e6, -320e6, -210e6, -160e6, -125e6, 135e6, 170e6, 240e6, 330e6, 500e6];
    let duration = 2e-6;
    let mut worst: (f64, f64) = (0.0, 0.0);
    let mut rows = Vec::new();
    for f in freqs {
        let (da, db) = ion.detunings(f);
        let omega = 0.1 * da.abs().min(db.abs());
        let cfg = TwoBranchConfig {
            omega,
            delta_a: da,
            delta_b: db,
            gamma_rad: ion.gamma_rad,
            gamma_d: ion.gamma_eff - ion.gamma_rad,
            duration,
            integrator_tol: 1e-10,
        };
        let num = spin_ramsey(&cfg, &DiffusionProfile::none()).unwrap();
        let pulse = StarkPulse { omega, duration, laser_freq: f };
        let phase = stark::spin_phase(&pulse, &ion);
        let loss = stark::visibility_loss(&pulse, &ion);
        let ep = wrap_pi(num.phase.unwrap() - phase).abs() / phase.abs();
        let el = rel(num.visibility_loss, loss);
        worst = (worst.0.max(ep), worst.1.max(el));
        rows.push(rows_of(&[f, num.phase.unwrap(), phase, num.visibility_loss, loss]));
    }
    Outcome {
        pass: worst.0 < 0.02 && worst.1 < 0.02,
        detail: format!("worst relative phase error {:.2e}, loss error {:.2e} (< 2e-2)", worst.0, worst.1),
        rows,
    }
}

// 3 ---------------------------------------------------------------------

fn lorentzian_additivity(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
    let mut worst = 0.0f64;
    for _ in 0..6 {
        let g_rad = TWO_PI * rng.random_range(0.5e6..5e6);
        let g_l = TWO_PI * rng.random_range(1e6..20e6);
        let g = g_rad + g_l;
        let (da, db) = (rng.random_range(0.5..3.0) * g, -rng.random_range(0.5..3.0) * g);
        let omega = 0.05 * g;
        let kernel = 1.0 / (da * da + g * g / 4.0) + 1.0 / (db * db + g * g / 4.0);
        // energy for a closed-form loss near 0.3
        let duration = 0.35 * 8.0 / (g * kernel * omega * omega);
        let cfg = TwoBranchConfig { omega, delta_a: da, delta_b: db, gamma_rad: g_rad, gamma_d: 0.0, duration, integrator_tol: 1e-10 };
        let num = spin_ramsey(&cfg, &DiffusionProfile::lorentzian(g_l)).unwrap();
        let closed = stark::loss_from_detunings(duration * omega * omega, da, db, g);
        worst = worst.max(rel(num.visibility_loss, closed));
    }

    let g_rad = TWO_PI * 2e6;
    let w = TWO_PI * 8e6;
    let g = g_rad + w;
    let omega = 0.05 * g_rad;
    let duration = g / (omega * omega);
    let deltas = stark::linspace(-4.0 * g, 4.0 * g, 41);
    let sweep = |profile: DiffusionProfile| -> Vec<f64> {
        deltas
            .iter()
            .map(|&d| {
                let cfg = LindbladConfig { omega, delta: d, gamma_rad: g_rad, gamma_d: 0.0, duration, integrator_tol: 1e-10 };
                diffusion_average(&profile, &cfg).unwrap().visibility_loss
            })
            .collect()
    };
    let lor = fit_loss_lineshape(&deltas, &sweep(DiffusionProfile::lorentzian(w)), g).unwrap();
    let gau = fit_loss_lineshape(&deltas, &sweep(DiffusionProfile::gaussian(w)), g).unwrap();
    let ratio = gau.rms / lor.rms;
    Outcome {
        pass: worst < 0.03 && ratio >= 5.0,
        detail: format!(
            "worst additivity error {worst:.2e} (< 3e-2) over 6 pairs, lineshape misfit ratio {ratio:.1} (>= 5; rms {:.2e} vs {:.2e})",
            gau.rms, lor.rms
        ),
        rows: vec![],
    }
}

// 4 ---------------------------------------------------------------------

fn rotation_synthesis(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
    let mut worst = 0.0f64;
    let mut worst_circuit = 0.0f64;
    for k in 0..1000 {
        let z: f64 = rng.random_range(-1.0..1.0);
        let az: f64 = rng.random_range(0.0..TWO_PI);
        let s = (1.0 - z * z).sqrt();
        let axis = [s * az.cos(), s * az.sin(), z];
        let angle = rng.random_range(-TWO_PI..TWO_PI);
        let u = rot(axis, angle).unwrap().scale(C64::from_polar(1.0, rng.random_range(0.0..TWO_PI)));
        let r = synthesize_v(&u).unwrap();
        let rebuilt = &(&r.v() * &rz(r.alpha)) * &r.v().dagger();
        worst = worst.max(distance_up_to_global_phase(&rebuilt, &u));
        if k < 100 {
            let phases = ideal_phases(2, 0, &u).unwrap();
            let us = simulate_circuit(&single_ion_unitary_circuit(0, &u, &phases).unwrap());
            let d = distance_up_to_global_phase(&us[0], &u).max(distance_up_to_global_phase(&us[1], &Unitary2::identity()));
            worst_circuit = worst_circuit.max(d);
        }
    }
    let mut x_exact = true;
    for a in [0.1, PI / 2.0, PI, -1.0, 3.0] {
        let r = synthesize_v(&rx(a)).unwrap();
        x_exact &= r.beta == 0.0 && r.theta == PI / 2.0 && distance_up_to_global_phase(&r.v(), &ry(PI / 2.0)) < 1e-12;
    }
    Outcome {
        pass: worst < 1e-10 && worst_circuit < 1e-9 && x_exact,
        detail: format!("max V Rz V^-1 distance {worst:.1e}, two-ion circuit {worst_circuit:.1e}, x-rotations give Ry(pi/2): {x_exact}"),
        rows: vec![],
    }
}

// 5 ---------------------------------------------------------------------

fn ion_selective(seed: u64) -> Outcome {
    let ions = presets::pair();
    let hw = HardwareSpec::typical();
    // enough shots that the spectator's noise floor sits well under 1%
    let cfg = RabiConfig { shots: 12_000, ..RabiConfig::default() };
    let odd = ion_selective_rabi(&ions, &hw, &cfg, Placement::Odd, seed).unwrap();
    let even = ion_selective_rabi(&ions, &hw, &cfg, Placement::Even, seed).unwrap();
    let span = odd.phase_span();
    let modulation = odd.spectator_modulation(cfg.target).max(even.spectator_modulation(cfg.target));
    let flips = odd.phase_rate.signum() == -even.phase_rate.signum() && rel(-even.phase_rate, odd.phase_rate) < 0.1;
    let mut rows = Vec::new();
    for r in [&odd, &even] {
        for (p, ph) in r.points.iter().zip(&r.target_phase) {
            let mut v = vec![p.duration, *ph];
            v.extend(&p.population);
            rows.push(rows_of(&v));
        }
    }
    Outcome {
        pass: span > TWO_PI && modulation < 0.01 && flips,
        detail: format!(
            "tone {:.1} MHz, target span {:.2} rad (> 2pi), spectator modulation {:.2}% (< 1%), phase rate odd {:.3e} even {:.3e} rad/s",
            odd.tone.freq / 1e6,
            span,
            100.0 * modulation,
            odd.phase_rate,
            even.phase_rate
        ),
        rows,
    }
}

// 6 ---------------------------------------------------------------------

fn estimator_recovery(seed: u64) -> Outcome {
    let mut rows = Vec::new();
    let mut pass = true;
    let mut detail = String::new();
    for (k, wrong) in [0.01, 0.05, 0.2].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + k as u64);
        let h = sample_mixture(&mut rng, 100_000, wrong, 0.05, 1.5);
        let fit = fit_bimodal_poisson(&h, None, &MixtureOptions::default()).unwrap();
        let z = (fit.wrong_state_prob - wrong) / fit.wrong_state_stderr;
        pass &= z.abs() <= 2.0;
        detail += &format!("w={wrong}: {:.4}+-{:.4} ({z:+.2} sd); ", fit.wrong_state_prob, fit.wrong_state_stderr);
        rows.push(rows_of(&[wrong, fit.wrong_state_prob, fit.wrong_state_stderr]));
    }

    let ion = presets::ion1();
    let hw = HardwareSpec {
        detect_prob_per_cycle: 0.5,
        dark_mean_per_window: 0.25,
        excitation_prob_per_pulse: 0.06,
        ..HardwareSpec::typical()
    };
    let r = init_fidelity(&ion, &hw, &InitFidelityConfig::default(), seed).unwrap();
    let x = r.extrapolation;
    let z = (x.intercept - r.oracle) / x.intercept_stderr;
    pass &= z.abs() <= 2.0;
    detail += &format!("init intercept {:.4}+-{:.4} vs chain {:.4} ({z:+.2} sd)", x.intercept, x.intercept_stderr, r.oracle);
    for b in &r.bins {
        rows.push(rows_of(&[b.bin_index, b.wrong_state_prob, b.stderr]));
    }
    Outcome { pass, detail, rows }
}

// 7 ---------------------------------------------------------------------

fn with_cyclicity(c: f64) -> IonSpec {
    IonSpec { cyclicity: c, ..presets::ion1() }
}

fn readout_statistics(seed: u64) -> Outcome {
    let cs = [750.0, 780.0, 840.0, 850.0];
    let p_dets = [0.05, 0.1];
    let p_excs = [0.5, 1.0];
    let n_rs = [100, 250];
    let mut rows = Vec::new();
    let mut worst_mean = 0.0f64;
    let mut thresholds_match = true;
    // fidelity[p_exc][n_r][p_det][c]
    let mut fid = vec![vec![vec![vec![0.0; cs.len()]; p_dets.len()]; n_rs.len()]; p_excs.len()];
    for (ie, &p_exc) in p_excs.iter().enumerate() {
        for (ir, &n_r) in n_rs.iter().enumerate() {
            for (id, &p_det) in p_dets.iter().enumerate() {
                for (ic, &c) in cs.iter().enumerate() {
                    let ion = with_cyclicity(c);
                    assert_eq!(flip_prob_per_cycle(&ion), 1.0 / c);
                    let hw = HardwareSpec {
                        detect_prob_per_cycle: p_det,
                        excitation_prob_per_pulse: p_exc,
                        dark_mean_per_window: 0.2,
                        ..HardwareSpec::typical()
                    };
                    // bright photons only; the dark-count floor is not part of the sum
                    let no_dark = HardwareSpec { dark_mean_per_window: 0.0, ..hw };
                    let mc = bright_mean_counts(&ion, &no_dark, n_r, 100_000, seed).unwrap();
                    let oracle = mean_bright_counts(c, p_exc, p_det, n_r);
                    worst_mean = worst_mean.max(rel(mc, oracle));

                    let ions = [ion.clone()];
                    let (recs, d) = readout_experiment(&ions, &hw, ReadoutMode::SingleTransition, n_r, 20_000, seed ^ 7).unwrap();
                    let max = recs.iter().map(|r| r.ions[0].total()).max().unwrap();
                    let mut best = (0u32, f64::NEG_INFINITY);
                    for t in 0..=max {
                        let f = discriminate(&recs, &Rule::CountThreshold { thresholds: vec![t] }, &[ion.readout_transition])
                            .unwrap()
                            .per_ion[0]
                            .fidelity;
                        if f > best.1 {
                            best = (t, f);
                        }
                    }
                    let got = &d.per_ion[0];
                    thresholds_match &= got.threshold == Some(best.0) && got.fidelity == best.1;
                    fid[ie][ir][id][ic] = got.fidelity;
                    rows.push(rows_of(&[c, p_exc, p_det, n_r as f64, mc, oracle, got.fidelity, f64::from(best.0)]));
                }
            }
        }
    }
    let mut monotone = true;
    for per_exc in &fid {
        for per_nr in per_exc {
            for (id, per_det) in per_nr.iter().enumerate() {
                // cs is sorted ascending
                monotone &= per_det.windows(2).all(|w| w[1] >= w[0]);
                if id > 0 {
                    monotone &= per_det.iter().zip(&per_nr[id - 1]).all(|(hi, lo)| hi >= lo);
                }
            }
        }
    }
    Outcome {
        pass: worst_mean < 0.01 && thresholds_match && monotone,
        detail: format!(
            "worst mean-count deviation {:.3}% (< 1%) over {} configs, thresholds match exhaustive search: {thresholds_match}, fidelity monotone in C and p_det: {monotone}",
            100.0 * worst_mean,
            rows.len()
        ),
        rows,
    }
}

// 8 ---------------------------------------------------------------------

fn crosstalk_independence(seed: u64) -> Outcome {
    let ions = presets::register();
    let hw = HardwareSpec { crosstalk_exc_prob: 0.0, ..HardwareSpec::typical() };
    let r = multi_ion_readout(&ions, &hw, 250, 10_000, seed).unwrap();
    let pass = r.independence.iter().all(|c| c.passes(0.01));
    let ps: Vec<String> = r.independence.iter().map(|c| format!("{:.3}", c.p_value)).collect();
    let mut rows: Vec<String> = r.independence.iter().map(|c| rows_of(&[c.statistic, c.dof as f64, c.p_value])).collect();
    rows.push(rows_of(&r.joint_by_state));
    Outcome { pass, detail: format!("chi-square p-values per ion [{}] (all > 0.01)", ps.join(", ")), rows }
}

// 9 ---------------------------------------------------------------------

fn coherence_fits(seed: u64) -> Outcome {
    let hw = HardwareSpec::typical();
    let mut pass = true;
    let mut detail = String::new();
    let mut rows = Vec::new();
    for (k, ion) in presets::pair().iter().enumerate() {
        let fits = coherence_suite(ion, &hw, &CoherenceScan::for_ion(ion), seed + k as u64).unwrap();
        for (name, fit, truth) in
            [("T1", &fits.t1, ion.spin.t1), ("T2*", &fits.t2_star, ion.spin.t2_star), ("T2", &fits.t2, ion.spin.t2_xy8)]
        {
            let z = (fit.time - truth) / fit.time_stderr;
            pass &= z.abs() <= 2.0 && !fit.unbounded;
            detail += &format!("{} {name} {z:+.2} sd; ", ion.label);
            rows.push(rows_of(&[fit.time, fit.time_stderr, fit.amplitude, fit.offset]));
        }
        for p in fits.t1_data.iter().chain(&fits.ramsey_data).chain(&fits.xy8_data) {
            rows.push(rows_of(&[p.t, p.y, p.stderr]));
        }
    }
    Outcome { pass, detail, rows }
}

fn main() -> ExitCode {
    let s = Duration::from_secs;
    let mut all = true;
    let mut first_rows = Vec::new();
    let stochastic: [(u32, &str, Duration, Criterion); 5] = [
        (5, "ion-selective Rabi", s(60), ion_selective),
        (6, "estimator recovery", s(60), estimator_recovery),
        (7, "readout statistics", s(180), readout_statistics),
        (8, "crosstalk independence", s(300), crosstalk_independence),
        (9, "coherence fits", s(60), coherence_fits),
    ];
    for (id, name, limit, f) in [
        (1, "Stark perturbation consistency", s(1), stark_perturbation as Criterion),
        (2, "master equation vs closed form", s(30), lindblad_vs_closed_form),
        (3, "Lorentzian linewidth additivity", s(120), lorentzian_additivity),
        (4, "rotation synthesis exactness", s(5), rotation_synthesis),
    ] {
        all &= report(id, name, limit, f).0;
    }
    for (id, name, limit, f) in stochastic {
        let (ok, rows) = report(id, name, limit, f);
        all &= ok;
        first_rows.push(rows);
    }

    let t0 = Instant::now();
    let mut same = true;
    let mut n_rows = 0;
    for ((id, _, _, f), rows) in stochastic.iter().zip(&first_rows) {
        let again = f(SEED).rows;
        n_rows += rows.len();
        if &again != rows || rows.is_empty() {
            same = false;
            println!("  criterion {id} rows differ on rerun");
        }
    }
    println!(
        "acceptance 10 determinism: {} ({:.2} s) {n_rows} data rows from criteria 5-9 identical on rerun",
        if same { "PASS" } else { "FAIL" },
        t0.elapsed().as_secs_f64()
    );
    all &= same;
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
