// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Laser tone planning for ion-selective optical phases.
//!
//! Each tone `k` (frequency `f_k`, energy `E_k = T_k Omega_k^2`) gives ion `i`
//! the phase `E_k s_i(f_k)` and the loss exponent `E_k l_i(f_k)`. One global
//! z rotation removes a common phase, so `N` targets need `N - 1` tones and,
//! for fixed frequencies, the energies follow from a linear solve. The
//! frequencies are searched on a grid and then refined.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ion_model::{IonSpec, TWO_PI};
use crate::qcore::wrap_pi;
use crate::stark::{loss_exponent, phase_from_detunings, Linewidth, StarkPulse};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserTone {
    /// Hz.
    pub freq: f64,
    /// `T Omega^2`, rad^2/s.
    pub energy: f64,
}

impl LaserTone {
    /// Square pulse with Rabi frequency `omega` (rad/s) carrying this tone's energy.
    pub fn pulse(&self, omega: f64) -> Result<StarkPulse> {
        if !(omega > 0.0) {
            return Err(Error::input("tone Rabi frequency must be positive"));
        }
        Ok(StarkPulse { omega, duration: self.energy / (omega * omega), laser_freq: self.freq })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToneConstraints {
    /// Allowed laser frequencies (Hz), inclusive.
    pub band: (f64, f64),
    /// Coarse grid spacing, Hz.
    pub step: f64,
    /// Per-ion cap on visibility loss.
    pub max_loss: Option<Vec<f64>>,
    pub linewidth: Linewidth,
}

impl ToneConstraints {
    pub fn band(lo: f64, hi: f64) -> Self {
        Self { band: (lo, hi), step: 1e6, max_loss: None, linewidth: Linewidth::Effective }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TonePlan {
    pub tones: Vec<LaserTone>,
    /// Optical phase each ion receives from all tones, rad.
    pub phases: Vec<f64>,
    /// Global z rotation completing the targets, rad.
    pub global_rz: f64,
    /// Largest `|phases_i + global_rz - target_i|` (mod 2pi).
    pub residual: f64,
    /// Predicted visibility loss per ion.
    pub loss: Vec<f64>,
    pub reference_ion: usize,
}

impl TonePlan {
    pub fn worst_loss(&self) -> f64 {
        self.loss.iter().copied().fold(0.0, f64::max)
    }
}

/// Grid points are evaluated this many combinations at most before switching
/// to coordinate descent.
const EXHAUSTIVE_LIMIT: f64 = 4e6;
const REF: usize = 0;

struct Problem<'a> {
    ions: &'a [IonSpec],
    rhs: Vec<f64>,
    caps: Vec<f64>,
    lw: Linewidth,
    band: (f64, f64),
}

#[derive(Clone)]
struct Candidate {
    score: f64,
    freqs: Vec<f64>,
    energies: Vec<f64>,
}

fn sensitivity(ion: &IonSpec, f: f64, lw: Linewidth) -> (f64, f64) {
    let (da, db) = ion.detunings(f);
    let g = lw.of(ion);
    (
        phase_from_detunings(ion.optical_coupling, da, db, g),
        loss_exponent(ion.optical_coupling, da, db, g),
    )
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.ions.len()
    }

    /// Best energies for fixed frequencies, over 2pi shifts of each target.
    fn solve(&self, freqs: &[f64]) -> Option<Candidate> {
        let k = freqs.len();
        let sens: Vec<Vec<(f64, f64)>> =
            freqs.iter().map(|&f| self.ions.iter().map(|ion| sensitivity(ion, f, self.lw)).collect()).collect();
        let m = DMatrix::from_fn(k, k, |row, col| sens[col][row + 1].0 - sens[col][REF].0);
        let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if scale == 0.0 {
            return None;
        }
        let lu = m.lu();
        let det = lu.determinant().abs();
        if det <= 1e-12 * scale.powi(k as i32) {
            return None;
        }
        let mut best: Option<Candidate> = None;
        for code in 0..3usize.pow(k as u32) {
            let mut c = code;
            let b = DVector::from_fn(k, |row, _| {
                let shift = (c % 3) as f64 - 1.0;
                c /= 3;
                self.rhs[row] + TWO_PI * shift
            });
            let Some(e) = lu.solve(&b) else { continue };
            if e.iter().any(|v| !(*v >= 0.0)) {
                continue;
            }
            let score = (0..self.n())
                .map(|i| {
                    let x: f64 = (0..k).map(|t| e[t] * sens[t][i].1).sum();
                    -(-x).exp_m1() / self.caps[i]
                })
                .fold(0.0, f64::max);
            if best.as_ref().is_none_or(|b| score < b.score) {
                best = Some(Candidate { score, freqs: freqs.to_vec(), energies: e.iter().copied().collect() });
            }
        }
        best
    }

    fn score(&self, freqs: &[f64]) -> f64 {
        self.solve(freqs).map_or(f64::INFINITY, |c| c.score)
    }

    /// Golden-section search on one coordinate within `[lo, hi]`.
    fn refine_coordinate(&self, cand: &Candidate, k: usize, lo: f64, hi: f64) -> Candidate {
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut fs = cand.freqs.clone();
        let mut eval = |x: f64| {
            fs[k] = x;
            self.score(&fs)
        };
        let (mut a, mut b) = (lo, hi);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let (mut fc, mut fd) = (eval(c), eval(d));
        for _ in 0..40 {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = eval(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = eval(d);
            }
        }
        let mut fs = cand.freqs.clone();
        fs[k] = if fc <= fd { c } else { d };
        match self.solve(&fs) {
            Some(n) if n.score < cand.score => n,
            _ => cand.clone(),
        }
    }
}

fn better(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if b.score < a.score { b } else { a }),
        (a, b) => a.or(b),
    }
}

fn combinations(g: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (g - i) as f64 / (i + 1) as f64)
}

fn exhaustive(p: &Problem, grid: &[f64], k: usize) -> Option<Candidate> {
    fn rec(p: &Problem, grid: &[f64], start: usize, fs: &mut Vec<f64>, k: usize, best: &mut Option<Candidate>) {
        if fs.len() == k {
            if let Some(c) = p.solve(fs) {
                if best.as_ref().is_none_or(|b| c.score < b.score) {
                    *best = Some(c);
                }
            }
            return;
        }
        for i in start..grid.len() {
            fs.push(grid[i]);
            rec(p, grid, i + 1, fs, k, best);
            fs.pop();
        }
    }
    // Each first-index block is independent; folding the blocks in order keeps
    // the lowest-frequency winner on ties.
    let blocks: Vec<Option<Candidate>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut best = None;
            let mut fs = vec![grid[i]];
            rec(p, grid, i + 1, &mut fs, k, &mut best);
            best
        })
        .collect();
    blocks.into_iter().fold(None, better)
}

fn coordinate_descent(p: &Problem, grid: &[f64], k: usize) -> Option<Candidate> {
    let g = grid.len();
    let mut idx: Vec<usize> = (0..k).map(|j| (j + 1) * g / (k + 1)).collect();
    let mut cur = p.score(&idx.iter().map(|&i| grid[i]).collect::<Vec<_>>());
    for _ in 0..50 {
        let mut moved = false;
        for j in 0..k {
            let scores: Vec<f64> = (0..g)
                .into_par_iter()
                .map(|i| {
                    if idx.iter().enumerate().any(|(jj, &x)| jj != j && x == i) {
                        return f64::INFINITY;
                    }
                    let fs: Vec<f64> = idx.iter().enumerate().map(|(jj, &x)| grid[if jj == j { i } else { x }]).collect();
                    p.score(&fs)
                })
                .collect();
            let (bi, bs) = scores.iter().enumerate().fold((idx[j], cur), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
            if bs < cur {
                idx[j] = bi;
                cur = bs;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    let mut fs: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
    fs.sort_by(f64::total_cmp);
    p.solve(&fs)
}

/// Tones and energies that give each ion its target optical phase, up to one
/// shared global z rotation.
///
/// Minimizes the largest ratio of predicted visibility loss to its cap (or
/// the largest loss when no caps are given). Equal targets return an empty
/// plan. Fails when two ions respond identically at every allowed frequency,
/// when no non-negative energies reach the targets, and, with the best plan
/// attached, when that plan exceeds a loss cap.
pub fn plan_tones(ions: &[IonSpec], targets: &[f64], constraints: &ToneConstraints) -> Result<TonePlan> {
    let n = ions.len();
    if n < 2 {
        return Err(Error::input("tone planning needs at least two ions"));
    }
    if targets.len() != n || targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::input("need one finite target phase per ion"));
    }
    let (lo, hi) = constraints.band;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) || !(constraints.step > 0.0) {
        return Err(Error::input("frequency band must be finite with lo <= hi and a positive step"));
    }
    for ion in ions {
        ion.validate()?;
    }
    let caps = match &constraints.max_loss {
        Some(c) if c.len() != n => return Err(Error::input("max_loss needs one value per ion")),
        Some(c) if c.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) => {
            return Err(Error::input("max_loss values must lie in (0, 1]"))
        }
        Some(c) => c.clone(),
        None => vec![1.0; n],
    };
    let rhs: Vec<f64> = (1..n).map(|i| wrap_pi(targets[i] - targets[REF])).collect();
    if rhs.iter().all(|r| r.abs() < 1e-12) {
        return Ok(TonePlan {
            tones: vec![],
            phases: vec![0.0; n],
            global_rz: targets[REF],
            residual: rhs.iter().fold(0.0, |a, r| a.max(r.abs())),
            loss: vec![0.0; n],
            reference_ion: REF,
        });
    }

    let steps = ((hi - lo) / constraints.step).floor() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| lo + i as f64 * constraints.step).collect();
    let lw = constraints.linewidth;
    for i in 0..n {
        for j in i + 1..n {
            let same = grid.iter().all(|&f| {
                let (a, b) = (sensitivity(&ions[i], f, lw), sensitivity(&ions[j], f, lw));
                (a.0 - b.0).abs() <= 1e-12 * a.0.abs().max(b.0.abs()).max(f64::MIN_POSITIVE)
            });
            if same {
                return Err(Error::Infeasible(format!(
                    "ions {i} ('{}') and {j} ('{}') have identical phase response across the band",
                    ions[i].label, ions[j].label
                )));
            }
        }
    }
    let k = n - 1;
    if grid.len() < k {
        return Err(Error::Infeasible(format!("band holds {} grid points but {k} tones are needed", grid.len())));
    }

    let p = Problem { ions, rhs, caps, lw, band: (lo, hi) };
    let coarse = if combinations(grid.len(), k) <= EXHAUSTIVE_LIMIT {
        exhaustive(&p, &grid, k)
    } else {
        coordinate_descent(&p, &grid, k)
    };
    let mut best = coarse.ok_or_else(|| {
        Error::Infeasible("no non-negative pulse energies reach the targets anywhere in the band".into())
    })?;
    for _ in 0..3 {
        for j in 0..k {
            let f = best.freqs[j];
            let a = (f - constraints.step).max(p.band.0);
            let b = (f + constraints.step).min(p.band.1);
            if b > a {
                best = p.refine_coordinate(&best, j, a, b);
            }
        }
    }

    let plan = finish(&p, targets, &best);
    if plan.residual > 1e-9 {
        return Err(Error::numerical(format!("tone plan phase residual {:e} rad", plan.residual)));
    }
    if let Some(i) = (0..n).find(|&i| plan.loss[i] > p.caps[i]) {
        return Err(Error::ConstrainedInfeasible {
            message: format!(
                "ion {i} loses {:.4} visibility, above its cap {:.4}",
                plan.loss[i], p.caps[i]
            ),
            best: Box::new(plan),
        });
    }
    Ok(plan)
}

fn finish(p: &Problem, targets: &[f64], c: &Candidate) -> TonePlan {
    let n = p.n();
    let mut phases = vec![0.0; n];
    let mut expo = vec![0.0; n];
    for (f, e) in c.freqs.iter().zip(&c.energies) {
        for i in 0..n {
            let (s, l) = sensitivity(&p.ions[i], *f, p.lw);
            phases[i] += e * s;
            expo[i] += e * l;
        }
    }
    let global_rz = targets[REF] - phases[REF];
    let residual = (0..n).map(|i| wrap_pi(phases[i] + global_rz - targets[i]).abs()).fold(0.0, f64::max);
    TonePlan {
        tones: c.freqs.iter().zip(&c.energies).map(|(&freq, &energy)| LaserTone { freq, energy }).collect(),
        phases,
        global_rz,
        residual,
        loss: expo.iter().map(|x| -(-x).exp_m1()).collect(),
        reference_ion: REF,
    }
}
