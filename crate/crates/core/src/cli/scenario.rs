// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Named experiments, their parameters, and the runner that turns them into
//! CSV and JSON artifacts.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::artifacts::{num, write_summary, write_table, Provenance, Table};
use super::config::Resolved;
use crate::control::{ideal_phases, plan_tones, simulate_circuit, single_ion_unitary_circuit, synthesize_v, write_circuit, ToneConstraints};
use crate::error::{Error, Result};
use crate::expsim::experiments::{
    bright_mean_counts, coherence_suite, init_fidelity, ion_selective_rabi, multi_ion_readout, rabi_max_loss,
    readout_experiment, CoherenceScan, InitFidelityConfig, RabiConfig,
};
use crate::expsim::{mean_bright_counts, Placement, ReadoutMode};
use crate::ion_model::{Spin, TWO_PI};
use crate::lindblad::{diffusion_average, fit_loss_lineshape, DiffusionProfile, LindbladConfig};
use crate::qcore::{distance_up_to_global_phase, rot, rz, Unitary2, C64};
use crate::stark::{self, Linewidth, StarkPulse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    StarkSweep,
    LindbladLinewidth,
    RotationSynthesis,
    TonePlan,
    InitFidelity,
    SingleShotReadout,
    FourIonReadout,
    IonSelectiveRabi,
    CoherenceSuite,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::StarkSweep,
        Experiment::LindbladLinewidth,
        Experiment::RotationSynthesis,
        Experiment::TonePlan,
        Experiment::InitFidelity,
        Experiment::SingleShotReadout,
        Experiment::FourIonReadout,
        Experiment::IonSelectiveRabi,
        Experiment::CoherenceSuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::StarkSweep => "stark_sweep",
            Experiment::LindbladLinewidth => "lindblad_linewidth",
            Experiment::RotationSynthesis => "rotation_synthesis",
            Experiment::TonePlan => "tone_plan",
            Experiment::InitFidelity => "init_fidelity",
            Experiment::SingleShotReadout => "single_shot_readout",
            Experiment::FourIonReadout => "four_ion_readout",
            Experiment::IonSelectiveRabi => "ion_selective_rabi",
            Experiment::CoherenceSuite => "coherence_suite",
        }
    }

    pub fn is_stochastic(self) -> bool {
        !matches!(self, Experiment::StarkSweep | Experiment::LindbladLinewidth | Experiment::TonePlan)
    }

    /// Parameter names the experiment accepts.
    pub fn parameters(self) -> &'static [&'static str] {
        match self {
            Experiment::StarkSweep => &["ion", "f_min_hz", "f_max_hz", "points", "rabi_hz", "duration_s", "linewidth"],
            Experiment::LindbladLinewidth => &[
                "radiative_linewidth_hz",
                "diffusion_fwhm_hz",
                "profiles",
                "rabi_hz",
                "duration_s",
                "points",
                "span",
            ],
            Experiment::RotationSynthesis => &["unitaries", "n_ions", "target"],
            Experiment::TonePlan => &["ions", "targets_rad", "band_hz", "step_hz", "max_loss", "linewidth"],
            Experiment::InitFidelity => &["ion", "n_i", "n_r", "bin_width", "shots"],
            Experiment::SingleShotReadout => &["ion", "n_r", "shots", "mode"],
            Experiment::FourIonReadout => &["ions", "n_r", "shots_per_state"],
            Experiment::IonSelectiveRabi => &[
                "ions",
                "target",
                "band_hz",
                "max_phase_rad",
                "durations",
                "fringe_phases",
                "shots",
                "tau_s",
                "repetitions",
                "fill",
                "placement",
            ],
            Experiment::CoherenceSuite => &["ion", "shots"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub experiment: Experiment,
    #[serde(default)]
    pub parameters: Map<String, Value>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Defaults to `<out>/<name>`.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("scenario file: {e}")))?;
        if f.schema_version != super::config::SCHEMA_VERSION {
            return Err(Error::Config(format!("scenario file schema_version {} is not supported", f.schema_version)));
        }
        let mut seen = BTreeSet::new();
        for s in &f.scenarios {
            s.validate()?;
            if !seen.insert(&s.name) {
                return Err(Error::Config(format!("duplicate scenario name '{}'", s.name)));
            }
        }
        Ok(f)
    }
}

impl Scenario {
    pub fn new(name: &str, experiment: Experiment) -> Self {
        Self { name: name.into(), experiment, parameters: Map::new(), seed: None, output_dir: None }
    }

    pub fn validate(&self) -> Result<()> {
        let ok_name = !self.name.is_empty()
            && self.name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
            && self.name != "."
            && self.name != "..";
        if !ok_name {
            return Err(Error::Config(format!("scenario name '{}' must be non-empty [A-Za-z0-9_.-]", self.name)));
        }
        if self.experiment.is_stochastic() && self.seed.is_none() {
            return Err(Error::Config(format!("scenario '{}': {} needs a seed", self.name, self.experiment.name())));
        }
        let allowed = self.experiment.parameters();
        if let Some(k) = self.parameters.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Config(format!(
                "scenario '{}': unknown parameter '{k}' for {} (allowed: {})",
                self.name,
                self.experiment.name(),
                allowed.join(", ")
            )));
        }
        Ok(())
    }
}

struct Params<'a>(&'a Map<String, Value>);

impl Params<'_> {
    fn get<T: DeserializeOwned>(&self, key: &str, default: T) -> Result<T> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("parameter '{key}': {e}"))),
        }
    }

    fn opt<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        self.0
            .get(key)
            .map(|v| serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("parameter '{key}': {e}"))))
            .transpose()
    }
}

/// Tables and summary fields produced by one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub tables: Vec<Table>,
    /// Plain-text side files `(name, contents)`.
    pub texts: Vec<(String, String)>,
    pub results: Value,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Runs one scenario and writes its artifacts.
pub fn run(scenario: &Scenario, cfg: &Resolved, out_root: &Path) -> Result<RunReport> {
    scenario.validate()?;
    let outcome = execute(scenario, cfg)?;
    let dir = scenario.output_dir.clone().unwrap_or_else(|| out_root.join(&scenario.name));
    let prov = Provenance {
        scenario: scenario.name.clone(),
        experiment: scenario.experiment.name().into(),
        seed: scenario.seed,
        config_sha256: cfg.sha256.clone(),
    };
    let mut files = Vec::new();
    for t in &outcome.tables {
        files.push(write_table(&dir, &prov, t)?);
    }
    for (name, text) in &outcome.texts {
        std::fs::create_dir_all(&dir)?;
        let p = dir.join(name);
        std::fs::write(&p, text)?;
        files.push(p);
    }
    let names: Vec<String> = files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect();
    let summary = json!({
        "tool": "ionmux",
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": scenario.name,
        "experiment": scenario.experiment.name(),
        "seed": scenario.seed,
        "config_sha256": cfg.sha256,
        "config": cfg.echo,
        "parameters": scenario.parameters,
        "files": names,
        "results": outcome.results,
    });
    files.push(write_summary(&dir, &summary)?);
    Ok(RunReport { scenario: scenario.name.clone(), dir, files })
}

/// Runs every scenario; `jobs > 1` runs scenarios concurrently. Results are
/// returned in input order.
pub fn run_all(scenarios: &[Scenario], cfg: &Resolved, out_root: &Path, jobs: usize) -> Vec<Result<RunReport>> {
    if jobs <= 1 {
        return scenarios.iter().map(|s| run(s, cfg, out_root)).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| scenarios.par_iter().map(|s| run(s, cfg, out_root)).collect()),
        Err(e) => scenarios.iter().map(|_| Err(Error::Config(format!("thread pool: {e}")))).collect(),
    }
}

/// Computes an experiment without touching the file system.
pub fn execute(s: &Scenario, cfg: &Resolved) -> Result<Outcome> {
    let p = Params(&s.parameters);
    let seed = s.seed.unwrap_or(0);
    match s.experiment {
        Experiment::StarkSweep => stark_sweep(&p, cfg),
        Experiment::LindbladLinewidth => lindblad_linewidth(&p),
        Experiment::RotationSynthesis => rotation_synthesis(&p, seed),
        Experiment::TonePlan => tone_plan(&p, cfg),
        Experiment::InitFidelity => init(&p, cfg, seed),
        Experiment::SingleShotReadout => single_shot(&p, cfg, seed),
        Experiment::FourIonReadout => four_ion(&p, cfg, seed),
        Experiment::IonSelectiveRabi => rabi(&p, cfg, seed),
        Experiment::CoherenceSuite => coherence(&p, cfg, seed),
    }
}

fn one_ion(p: &Params, cfg: &Resolved, default: &str) -> Result<crate::ion_model::IonSpec> {
    let label: String = p.get("ion", default.to_string())?;
    Ok(cfg.select(&[label])?.remove(0))
}

fn to_json<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn stark_sweep(p: &Params, cfg: &Resolved) -> Result<Outcome> {
    let ion = one_ion(p, cfg, "ion2")?;
    let lo: f64 = p.get("f_min_hz", -400e6)?;
    let hi: f64 = p.get("f_max_hz", 400e6)?;
    let n: usize = p.get("points", 801)?;
    let rabi_hz: f64 = p.get("rabi_hz", 10e6)?;
    let duration: f64 = p.get("duration_s", 2e-6)?;
    let lw: Linewidth = p.get("linewidth", Linewidth::Effective)?;
    if !(hi > lo) || n < 2 {
        return Err(Error::Config("stark_sweep needs f_max_hz > f_min_hz and points >= 2".into()));
    }
    let tpl = StarkPulse { omega: TWO_PI * rabi_hz, duration, laser_freq: 0.0 };
    tpl.validate()?;
    let res = stark::sweep_frequency_with(&ion, &tpl, &stark::linspace(lo, hi, n), lw);
    let mut t = Table::new("stark_sweep.csv", &["f_laser_Hz", "phase_rad", "visibility_loss"]);
    for r in &res {
        t.push_f64(&[r.laser_freq, r.phase, r.visibility_loss]);
    }
    let peak = res.iter().map(|r| r.phase.abs()).fold(0.0, f64::max);
    let max_loss = res.iter().map(|r| r.visibility_loss).fold(0.0, f64::max);
    Ok(Outcome {
        tables: vec![t],
        texts: vec![],
        results: json!({ "ion": ion.label, "points": n, "max_abs_phase_rad": peak, "max_visibility_loss": max_loss }),
    })
}

fn lindblad_linewidth(p: &Params) -> Result<Outcome> {
    let g_rad_hz: f64 = p.get("radiative_linewidth_hz", 1e6)?;
    let widths: Vec<f64> = p.get("diffusion_fwhm_hz", vec![2e6, 5e6, 10e6])?;
    let profiles: Vec<String> = p.get("profiles", vec!["lorentzian".to_string(), "gaussian".to_string()])?;
    let rabi_hz: f64 = p.get("rabi_hz", 0.05 * g_rad_hz)?;
    let n: usize = p.get("points", 41)?;
    let span: f64 = p.get("span", 4.0)?;
    let fixed_duration: Option<f64> = p.opt("duration_s")?;
    if !(g_rad_hz > 0.0) || n < 5 || !(span > 0.0) {
        return Err(Error::Config("lindblad_linewidth needs radiative_linewidth_hz > 0, points >= 5, span > 0".into()));
    }
    let g_rad = TWO_PI * g_rad_hz;
    let omega = TWO_PI * rabi_hz;
    let mut t = Table::new("lindblad_linewidth.csv", &["profile", "fwhm_Hz", "delta_Hz", "phase_rad", "visibility_loss"]);
    let mut fits = Vec::new();
    for name in &profiles {
        for &w_hz in &widths {
            let w = TWO_PI * w_hz;
            let profile = match name.as_str() {
                "lorentzian" => DiffusionProfile::lorentzian(w),
                "gaussian" => DiffusionProfile::gaussian(w),
                "none" => DiffusionProfile::none(),
                other => return Err(Error::Config(format!("unknown profile '{other}' (lorentzian, gaussian, none)"))),
            };
            let g_tot = g_rad + w;
            // peak single-branch loss near 1 - exp(-1/2)
            let duration = fixed_duration.unwrap_or(g_tot / (omega * omega));
            let deltas = stark::linspace(-span * g_tot, span * g_tot, n);
            let mut losses = Vec::with_capacity(n);
            for &d in &deltas {
                let inner = LindbladConfig { omega, delta: d, gamma_rad: g_rad, gamma_d: 0.0, duration, integrator_tol: 1e-10 };
                let r = diffusion_average(&profile, &inner)?;
                t.push(vec![name.clone(), num(w_hz), num(d / TWO_PI), num(r.phase), num(r.visibility_loss)]);
                losses.push(r.visibility_loss);
            }
            let fit = fit_loss_lineshape(&deltas, &losses, g_tot)?;
            fits.push(json!({
                "profile": name,
                "fwhm_hz": w_hz,
                "fitted_width_hz": fit.width / TWO_PI,
                "summed_width_hz": g_rad_hz + w_hz,
                "rms_residual": fit.rms,
            }));
        }
    }
    Ok(Outcome { tables: vec![t], texts: vec![], results: json!({ "radiative_linewidth_hz": g_rad_hz, "fits": fits }) })
}

/// Haar-like random SU(2) element times a random global phase.
fn random_unitary(rng: &mut ChaCha8Rng) -> Result<Unitary2> {
    let z: f64 = rng.random_range(-1.0..1.0);
    let az: f64 = rng.random_range(0.0..TWO_PI);
    let s = (1.0 - z * z).sqrt();
    let angle = rng.random_range(0.0..2.0 * TWO_PI);
    Ok(rot([s * az.cos(), s * az.sin(), z], angle)?.scale(C64::from_polar(1.0, rng.random_range(0.0..TWO_PI))))
}

fn rotation_synthesis(p: &Params, seed: u64) -> Result<Outcome> {
    let count: usize = p.get("unitaries", 1000)?;
    let n_ions: usize = p.get("n_ions", 2)?;
    let target: usize = p.get("target", 0)?;
    if count == 0 || n_ions == 0 || target >= n_ions {
        return Err(Error::Config("rotation_synthesis needs unitaries >= 1 and target < n_ions".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Table::new("rotation_synthesis.csv", &["index", "beta_rad", "theta_rad", "alpha_rad", "residual", "circuit_error"]);
    let (mut max_res, mut max_circ) = (0.0f64, 0.0f64);
    let mut first_circuit = String::new();
    let identity = Unitary2::identity();
    for k in 0..count {
        let u = random_unitary(&mut rng)?;
        let r = synthesize_v(&u)?;
        let rebuilt = &(&r.v() * &rz(r.alpha)) * &r.v().dagger();
        let residual = distance_up_to_global_phase(&rebuilt, &u);
        let circuit = single_ion_unitary_circuit(target, &u, &ideal_phases(n_ions, target, &u)?)?;
        let us = simulate_circuit(&circuit);
        let err = us
            .iter()
            .enumerate()
            .map(|(i, ui)| distance_up_to_global_phase(ui, if i == target { &u } else { &identity }))
            .fold(0.0, f64::max);
        if k == 0 {
            first_circuit = write_circuit(&circuit);
        }
        max_res = max_res.max(residual);
        max_circ = max_circ.max(err);
        t.push(vec![k.to_string(), num(r.beta), num(r.theta), num(r.alpha), num(residual), num(err)]);
    }
    Ok(Outcome {
        tables: vec![t],
        texts: vec![("circuit_0.txt".into(), first_circuit)],
        results: json!({ "unitaries": count, "max_residual": max_res, "max_circuit_error": max_circ }),
    })
}

fn tone_plan(p: &Params, cfg: &Resolved) -> Result<Outcome> {
    let labels: Vec<String> = p.get("ions", vec!["ion1".to_string(), "ion2".to_string()])?;
    let ions = cfg.select(&labels)?;
    let mut default_targets = vec![0.0; ions.len()];
    default_targets[0] = PI;
    let targets: Vec<f64> = p.get("targets_rad", default_targets)?;
    let band: (f64, f64) = p.get("band_hz", (250e6, 300e6))?;
    let mut c = ToneConstraints::band(band.0, band.1);
    c.step = p.get("step_hz", c.step)?;
    c.max_loss = p.opt("max_loss")?;
    c.linewidth = p.get("linewidth", c.linewidth)?;
    let plan = plan_tones(&ions, &targets, &c)?;
    let mut ions_t = Table::new("tone_plan_ions.csv", &["ion", "target_rad", "optical_phase_rad", "net_rad", "visibility_loss"]);
    for (i, ion) in ions.iter().enumerate() {
        ions_t.push(vec![
            ion.label.clone(),
            num(targets[i]),
            num(plan.phases[i]),
            num(plan.phases[i] + plan.global_rz),
            num(plan.loss[i]),
        ]);
    }
    let mut tones_t = Table::new("tone_plan_tones.csv", &["f_laser_Hz", "energy_rad2_per_s"]);
    for tone in &plan.tones {
        tones_t.push_f64(&[tone.freq, tone.energy]);
    }
    Ok(Outcome { tables: vec![ions_t, tones_t], texts: vec![], results: to_json(&plan)? })
}

fn init(p: &Params, cfg: &Resolved, seed: u64) -> Result<Outcome> {
    let ion = one_ion(p, cfg, "ion1")?;
    let d = InitFidelityConfig::default();
    let c = InitFidelityConfig {
        n_i: p.get("n_i", d.n_i)?,
        n_r: p.get("n_r", d.n_r)?,
        bin_width: p.get("bin_width", d.bin_width)?,
        shots: p.get("shots", d.shots)?,
    };
    if c.n_r == 0 || c.bin_width == 0 || c.shots == 0 || c.n_r < 2 * c.bin_width {
        return Err(Error::Config("init_fidelity needs shots > 0 and at least two bins (n_r >= 2 bin_width)".into()));
    }
    let r = init_fidelity(&ion, &cfg.hardware, &c, seed)?;
    let mut t = Table::new("init_fidelity.csv", &["bin_index", "wrong_state_prob", "stderr", "mu_dark", "mu_bright"]);
    for (b, f) in r.bins.iter().zip(&r.fits) {
        t.push_f64(&[b.bin_index, b.wrong_state_prob, b.stderr, f.mu_d, f.mu_b]);
    }
    Ok(Outcome {
        tables: vec![t],
        texts: vec![],
        results: json!({
            "ion": ion.label,
            "extrapolation": to_json(&r.extrapolation)?,
            "chain_wrong_state_prob": r.oracle,
            "observed_wrong_state_fraction": r.observed,
            "init_fidelity": 1.0 - r.extrapolation.intercept,
        }),
    })
}

fn single_shot(p: &Params, cfg: &Resolved, seed: u64) -> Result<Outcome> {
    let ion = one_ion(p, cfg, "ion1")?;
    let n_r: usize = p.get("n_r", 250)?;
    let shots: usize = p.get("shots", 100_000)?;
    let mode: ReadoutMode = p.get("mode", ReadoutMode::SingleTransition)?;
    if n_r == 0 || shots == 0 {
        return Err(Error::Config("single_shot_readout needs n_r > 0 and shots > 0".into()));
    }
    let ions = [ion.clone()];
    let (recs, d) = readout_experiment(&ions, &cfg.hardware, mode, n_r, shots, seed)?;
    let max = recs.iter().map(|r| r.ions[0].n_a.max(r.ions[0].n_b).max(r.ions[0].total())).max().unwrap_or(0) as usize;
    // histograms of total counts and of n_b - n_a, split by the spin present at readout
    let mut total = vec![[0u64; 2]; max + 1];
    let mut diff = vec![[0u64; 2]; 2 * max + 1];
    for r in &recs {
        let rec = &r.ions[0];
        let s = rec.initial.unwrap_or(Spin::Up).index();
        total[rec.total() as usize][s] += 1;
        diff[(rec.n_b as i64 - rec.n_a as i64 + max as i64) as usize][s] += 1;
    }
    let mut th = Table::new("readout_histogram.csv", &["counts", "shots_up", "shots_down"]);
    for (k, h) in total.iter().enumerate() {
        th.push(vec![k.to_string(), h[0].to_string(), h[1].to_string()]);
    }
    let mut td = Table::new("readout_difference.csv", &["n_b_minus_n_a", "shots_up", "shots_down"]);
    for (k, h) in diff.iter().enumerate() {
        if h[0] + h[1] > 0 {
            td.push(vec![(k as i64 - max as i64).to_string(), h[0].to_string(), h[1].to_string()]);
        }
    }
    // n_r counts pulses per transition in both modes
    let per_transition = n_r;
    let hw_bright = crate::expsim::HardwareSpec { dark_mean_per_window: 0.0, ..cfg.hardware };
    let mc_bright = bright_mean_counts(&ion, &hw_bright, per_transition, shots, seed ^ 0x5eed)?;
    let oracle = mean_bright_counts(ion.cyclicity, cfg.hardware.excitation_prob_per_pulse, cfg.hardware.detect_prob_per_cycle, per_transition);
    Ok(Outcome {
        tables: vec![th, td],
        texts: vec![],
        results: json!({
            "ion": ion.label,
            "mode": mode,
            "fidelity": to_json(&d.per_ion[0])?,
            "mean_bright_counts": mc_bright,
            "mean_bright_counts_closed_form": oracle,
        }),
    })
}

fn four_ion(p: &Params, cfg: &Resolved, seed: u64) -> Result<Outcome> {
    let default: Vec<String> = ["ion3", "ion4", "ion5", "ion6"].iter().map(|s| s.to_string()).collect();
    let labels: Vec<String> = p.get("ions", default)?;
    let ions = cfg.select(&labels)?;
    let n_r: usize = p.get("n_r", 250)?;
    let shots: usize = p.get("shots_per_state", 10_000)?;
    if n_r == 0 || shots == 0 {
        return Err(Error::Config("four_ion_readout needs n_r > 0 and shots_per_state > 0".into()));
    }
    let r = multi_ion_readout(&ions, &cfg.hardware, n_r, shots, seed)?;
    let mut ts = Table::new("joint_fidelity.csv", &["state", "joint_fidelity"]);
    for (state, f) in r.joint_by_state.iter().enumerate() {
        let bits: String = (0..ions.len()).map(|i| if state >> i & 1 == 1 { 'D' } else { 'U' }).collect();
        ts.push(vec![bits, num(*f)]);
    }
    let mut ti = Table::new(
        "per_ion.csv",
        &["ion", "threshold", "p_correct_up", "p_correct_down", "fidelity", "chi2", "dof", "p_value"],
    );
    for (i, ion) in ions.iter().enumerate() {
        let f = &r.per_ion.per_ion[i];
        let c = &r.independence[i];
        ti.push(vec![
            ion.label.clone(),
            f.threshold.map_or(String::new(), |t| t.to_string()),
            num(f.p_correct_up),
            num(f.p_correct_down),
            num(f.fidelity),
            num(c.statistic),
            c.dof.to_string(),
            num(c.p_value),
        ]);
    }
    Ok(Outcome {
        tables: vec![ts, ti],
        texts: vec![],
        results: json!({
            "ions": labels,
            "mean_joint_fidelity": r.mean_joint,
            "independence_passes_at_1pct": r.independence.iter().all(|c| c.passes(0.01)),
            "per_ion": to_json(&r.per_ion.per_ion)?,
            "independence": to_json(&r.independence)?,
        }),
    })
}

fn rabi(p: &Params, cfg: &Resolved, seed: u64) -> Result<Outcome> {
    let labels: Vec<String> = p.get("ions", vec!["ion1".to_string(), "ion2".to_string()])?;
    let ions = cfg.select(&labels)?;
    let d = RabiConfig::default();
    let c = RabiConfig {
        target: p.get("target", d.target)?,
        band: p.get("band_hz", d.band)?,
        max_phase: p.get("max_phase_rad", d.max_phase)?,
        n_durations: p.get("durations", d.n_durations)?,
        n_fringe_phases: p.get("fringe_phases", d.n_fringe_phases)?,
        shots: p.get("shots", d.shots)?,
        tau: p.get("tau_s", d.tau)?,
        repetitions: p.get("repetitions", d.repetitions)?,
        fill: p.get("fill", d.fill)?,
    };
    let placement: Placement = p.get("placement", Placement::Odd)?;
    let r = ion_selective_rabi(&ions, &cfg.hardware, &c, placement, seed)?;
    let mut cols = vec!["duration_s".to_string(), "target_phase_rad".to_string()];
    for ion in &ions {
        cols.push(format!("p_down_{}", ion.label));
    }
    for ion in &ions {
        cols.push(format!("predicted_phase_{}", ion.label));
    }
    let mut t = Table { file: "ion_selective_rabi.csv".into(), columns: cols, rows: vec![] };
    for (pt, ph) in r.points.iter().zip(&r.target_phase) {
        let mut row = vec![pt.duration, *ph];
        row.extend(&pt.population);
        row.extend(&pt.predicted_phase);
        t.push_f64(&row);
    }
    Ok(Outcome {
        tables: vec![t],
        texts: vec![],
        results: json!({
            "ions": labels,
            "tone": to_json(&r.tone)?,
            "omega_rad_per_s": r.omega,
            "placement": placement,
            "phase_rate_rad_per_s": r.phase_rate,
            "target_phase_span_rad": r.phase_span(),
            "oscillation_amplitude": r.oscillation_amplitude,
            "spectator_modulation": r.spectator_modulation(c.target),
            "predicted_max_visibility_loss": rabi_max_loss(&ions, &r),
        }),
    })
}

fn coherence(p: &Params, cfg: &Resolved, seed: u64) -> Result<Outcome> {
    let ion = one_ion(p, cfg, "ion1")?;
    let mut scan = CoherenceScan::for_ion(&ion);
    scan.shots = p.get("shots", scan.shots)?;
    if scan.shots == 0 {
        return Err(Error::Config("coherence_suite needs shots > 0".into()));
    }
    let f = coherence_suite(&ion, &cfg.hardware, &scan, seed)?;
    let mut tables = Vec::new();
    for (file, data) in [("t1.csv", &f.t1_data), ("ramsey.csv", &f.ramsey_data), ("xy8.csv", &f.xy8_data)] {
        let mut t = Table::new(file, &["t_s", "y", "stderr"]);
        for d in data {
            t.push_f64(&[d.t, d.y, d.stderr]);
        }
        tables.push(t);
    }
    let fit = |x: &crate::estimators::DecayFit, truth: f64| {
        json!({ "time_s": x.time, "stderr_s": x.time_stderr, "configured_s": truth, "pull": (x.time - truth) / x.time_stderr })
    };
    Ok(Outcome {
        tables,
        texts: vec![],
        results: json!({
            "ion": ion.label,
            "t1": fit(&f.t1, ion.spin.t1),
            "t2_star": fit(&f.t2_star, ion.spin.t2_star),
            "t2_xy8": fit(&f.t2, ion.spin.t2_xy8),
        }),
    })
}
