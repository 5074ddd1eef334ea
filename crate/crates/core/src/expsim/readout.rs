// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Photon-count statistics, state assignment and independence tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::ShotRecord;
use crate::error::{Error, Result};
use crate::estimators::HistogramResult;
use crate::ion_model::{Spin, Transition};

/// Expected photons from a bright ion over `n_r` pulses on one transition,
/// `sum_k p_det p_exc (1 - p_exc/C)^(k-1)`.
pub fn mean_bright_counts(cyclicity: f64, p_exc: f64, p_det: f64, n_r: usize) -> f64 {
    let q = p_exc / cyclicity;
    if q == 0.0 {
        return p_det * p_exc * n_r as f64;
    }
    p_det * p_exc * -(n_r as f64 * (-q).ln_1p()).exp_m1() / q
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    /// Down iff `N_B > N_A`.
    Difference,
    /// Bright iff total counts exceed the ion's threshold.
    CountThreshold { thresholds: Vec<u32> },
    /// Count threshold chosen per ion to maximize the fidelity.
    OptimalThreshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonFidelity {
    pub p_correct_up: f64,
    pub p_correct_down: f64,
    /// Mean of the two conditional probabilities.
    pub fidelity: f64,
    pub threshold: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrimination {
    pub per_ion: Vec<IonFidelity>,
    /// Fraction of shots with every ion assigned correctly.
    pub joint: f64,
    /// Per shot and ion, the assigned spin.
    #[serde(skip)]
    pub assignments: Vec<Vec<Spin>>,
}

fn truth(r: &ShotRecord, ion: usize) -> Result<Spin> {
    r.ions[ion].initial.ok_or_else(|| Error::input(format!("ion {ion} was never read out")))
}

/// Threshold `t` maximizing `(P(N > t | bright) + P(N <= t | dark)) / 2`,
/// from cumulative count histograms; the smallest maximizer wins.
pub fn optimal_threshold(records: &[ShotRecord], ion: usize, bright: Spin) -> Result<(u32, f64)> {
    let max = records.iter().map(|r| r.ions[ion].total()).max().unwrap_or(0) as usize;
    let mut hist = [vec![0u64; max + 1], vec![0u64; max + 1]];
    for r in records {
        let k = usize::from(truth(r, ion)? == bright);
        hist[k][r.ions[ion].total() as usize] += 1;
    }
    let n_dark: u64 = hist[0].iter().sum();
    let n_bright: u64 = hist[1].iter().sum();
    if n_dark == 0 || n_bright == 0 {
        return Err(Error::input(format!("ion {ion} needs shots of both spins to set a threshold")));
    }
    let (mut cum_d, mut cum_b) = (0u64, 0u64);
    let mut best = (0u32, f64::NEG_INFINITY);
    for t in 0..=max {
        cum_d += hist[0][t];
        cum_b += hist[1][t];
        let f = 0.5 * (cum_d as f64 / n_dark as f64 + 1.0 - cum_b as f64 / n_bright as f64);
        if f > best.1 {
            best = (t as u32, f);
        }
    }
    Ok(best)
}

/// Assigns a spin to every ion of every shot and scores the assignment
/// against the spin present when readout began. `transitions[i]` is the
/// transition read in single-transition mode.
pub fn discriminate(records: &[ShotRecord], rule: &Rule, transitions: &[Transition]) -> Result<Discrimination> {
    let n_ions = transitions.len();
    if records.is_empty() {
        return Err(Error::input("no shots to discriminate"));
    }
    if records.iter().any(|r| r.ions.len() != n_ions) {
        return Err(Error::input("record ion count does not match the transition list"));
    }
    let thresholds: Vec<Option<u32>> = match rule {
        Rule::Difference => vec![None; n_ions],
        Rule::CountThreshold { thresholds } => {
            if thresholds.len() != n_ions {
                return Err(Error::input("need one threshold per ion"));
            }
            thresholds.iter().map(|t| Some(*t)).collect()
        }
        Rule::OptimalThreshold => (0..n_ions)
            .map(|i| optimal_threshold(records, i, transitions[i].bright_spin()).map(|t| Some(t.0)))
            .collect::<Result<_>>()?,
    };
    let mut correct = vec![[0u64; 2]; n_ions];
    let mut totals = vec![[0u64; 2]; n_ions];
    let mut joint = 0u64;
    let mut assignments = Vec::with_capacity(records.len());
    for r in records {
        let mut all = true;
        let mut row = Vec::with_capacity(n_ions);
        for i in 0..n_ions {
            let rec = &r.ions[i];
            let s = match thresholds[i] {
                None => {
                    if rec.n_b > rec.n_a {
                        Spin::Down
                    } else {
                        Spin::Up
                    }
                }
                Some(t) => {
                    let b = transitions[i].bright_spin();
                    if rec.total() > t {
                        b
                    } else {
                        b.flipped()
                    }
                }
            };
            let truth = truth(r, i)?;
            totals[i][truth.index()] += 1;
            if s == truth {
                correct[i][truth.index()] += 1;
            } else {
                all = false;
            }
            row.push(s);
        }
        joint += u64::from(all);
        assignments.push(row);
    }
    let frac = |c: u64, n: u64| if n == 0 { f64::NAN } else { c as f64 / n as f64 };
    let per_ion = (0..n_ions)
        .map(|i| {
            let up = frac(correct[i][0], totals[i][0]);
            let down = frac(correct[i][1], totals[i][1]);
            IonFidelity { p_correct_up: up, p_correct_down: down, fidelity: 0.5 * (up + down), threshold: thresholds[i] }
        })
        .collect();
    Ok(Discrimination { per_ion, joint: joint as f64 / records.len() as f64, assignments })
}

/// Count histogram of analysis bin `bin` of one ion's last readout window.
pub fn bin_histogram(records: &[ShotRecord], ion: usize, bin: usize, bin_width: usize) -> HistogramResult {
    HistogramResult::from_counts(records.iter().map(|r| r.ions[ion].bins.get(bin).copied().unwrap_or(0)), bin_width)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquare {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

/// Pearson statistic of a contingency table after merging adjacent rows
/// until every expected cell is at least 5. Empty columns are dropped.
fn table_statistic(table: &[Vec<u64>]) -> (f64, usize) {
    let n_cols = table.first().map_or(0, Vec::len);
    let col_tot: Vec<u64> = (0..n_cols).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let cols: Vec<usize> = (0..n_cols).filter(|&j| col_tot[j] > 0).collect();
    let total: u64 = col_tot.iter().sum();
    if cols.len() < 2 || total == 0 {
        return (0.0, 0);
    }
    let min_col = cols.iter().map(|&j| col_tot[j]).min().unwrap_or(0) as f64;
    let need = 5.0 * total as f64 / min_col;
    let mut rows: Vec<Vec<u64>> = Vec::new();
    let mut acc = vec![0u64; n_cols];
    for r in table {
        for j in 0..n_cols {
            acc[j] += r[j];
        }
        if acc.iter().sum::<u64>() as f64 >= need {
            rows.push(std::mem::replace(&mut acc, vec![0u64; n_cols]));
        }
    }
    if acc.iter().any(|v| *v > 0) {
        match rows.last_mut() {
            Some(last) => last.iter_mut().zip(&acc).for_each(|(a, b)| *a += b),
            None => rows.push(acc),
        }
    }
    if rows.len() < 2 {
        return (0.0, 0);
    }
    let mut stat = 0.0;
    for r in &rows {
        let rt: u64 = r.iter().sum();
        for &j in &cols {
            let e = rt as f64 * col_tot[j] as f64 / total as f64;
            stat += (r[j] as f64 - e).powi(2) / e;
        }
    }
    (stat, (rows.len() - 1) * (cols.len() - 1))
}

/// Tests whether `counts` is independent of `group`, separately within
/// each `stratum`, and combines the strata by adding statistics and degrees
/// of freedom.
pub fn chi_square_independence(counts: &[u32], group: &[usize], stratum: &[usize]) -> Result<ChiSquare> {
    let n = counts.len();
    if group.len() != n || stratum.len() != n {
        return Err(Error::input("counts, groups and strata must have equal length"));
    }
    let n_groups = group.iter().max().map_or(0, |g| g + 1);
    let n_strata = stratum.iter().max().map_or(0, |s| s + 1);
    let max_count = counts.iter().max().copied().unwrap_or(0) as usize;
    let (mut stat, mut dof) = (0.0, 0usize);
    for s in 0..n_strata {
        let mut table = vec![vec![0u64; n_groups]; max_count + 1];
        for k in (0..n).filter(|&k| stratum[k] == s) {
            table[counts[k] as usize][group[k]] += 1;
        }
        let (x, d) = table_statistic(&table);
        stat += x;
        dof += d;
    }
    if dof == 0 {
        return Err(Error::input("contingency table too small for a chi-square test"));
    }
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::numerical(e.to_string()))?;
    Ok(ChiSquare { statistic: stat, dof, p_value: 1.0 - dist.cdf(stat) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expsim::{IonRecord, ShotRecord};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rec(n_a: u32, n_b: u32, initial: Spin) -> ShotRecord {
        ShotRecord {
            ions: vec![IonRecord { n_a, n_b, bins: vec![], initial: Some(initial), measured: None, final_spin: initial }],
        }
    }

    #[test]
    fn geometric_sum_closed_form() {
        let (c, pe, pd, n) = (800.0, 0.4, 0.1, 250);
        let direct: f64 = (1..=n).map(|k| pd * (1.0 - pe / c as f64).powi(k - 1) * pe).sum();
        assert!((mean_bright_counts(c, pe, pd, n as usize) - direct).abs() < 1e-12 * direct);
        assert_eq!(mean_bright_counts(f64::INFINITY, 0.5, 0.5, 10), 2.5);
    }

    #[test]
    fn separable_counts_are_perfect() {
        let mut r = vec![];
        for _ in 0..10 {
            r.push(rec(0, 5, Spin::Down));
            r.push(rec(6, 0, Spin::Up));
        }
        let d = discriminate(&r, &Rule::Difference, &[Transition::B]).unwrap();
        assert_eq!(d.per_ion[0].fidelity, 1.0);
        assert_eq!(d.joint, 1.0);
        let d = discriminate(&r, &Rule::OptimalThreshold, &[Transition::B]).unwrap();
        // Up shots carry 6 counts, so with B as readout they look bright.
        assert!(d.per_ion[0].fidelity < 1.0);
    }

    #[test]
    fn optimal_threshold_matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let records: Vec<ShotRecord> = (0..5000)
            .map(|_| {
                let bright = rng.random::<bool>();
                let n = if bright { (0..12).filter(|_| rng.random::<f64>() < 0.4).count() } else { (0..12).filter(|_| rng.random::<f64>() < 0.03).count() };
                rec(n as u32, 0, if bright { Spin::Up } else { Spin::Down })
            })
            .collect();
        let (t, f) = optimal_threshold(&records, 0, Spin::Up).unwrap();
        let mut best = (0, -1.0);
        for cand in 0..20u32 {
            let d = discriminate(&records, &Rule::CountThreshold { thresholds: vec![cand] }, &[Transition::A]).unwrap();
            if d.per_ion[0].fidelity > best.1 + 1e-15 {
                best = (cand, d.per_ion[0].fidelity);
            }
        }
        assert_eq!(t, best.0);
        assert!((f - best.1).abs() < 1e-12);
    }

    #[test]
    fn chi_square_detects_dependence() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 20_000;
        let group: Vec<usize> = (0..n).map(|k| k % 4).collect();
        let stratum = vec![0; n];
        let indep: Vec<u32> = (0..n).map(|_| (0..20).filter(|_| rng.random::<f64>() < 0.2).count() as u32).collect();
        let r = chi_square_independence(&indep, &group, &stratum).unwrap();
        assert!(r.passes(0.01), "{r:?}");
        let dep: Vec<u32> = (0..n)
            .map(|k| (0..20).filter(|_| rng.random::<f64>() < 0.2 + 0.02 * group[k] as f64).count() as u32)
            .collect();
        let r = chi_square_independence(&dep, &group, &stratum).unwrap();
        assert!(r.p_value < 1e-6, "{r:?}");
    }

    #[test]
    fn chi_square_rejects_trivial_tables() {
        assert!(chi_square_independence(&[1, 2, 3], &[0, 0, 0], &[0, 0, 0]).is_err());
        assert!(chi_square_independence(&[1, 2], &[0], &[0, 0]).is_err());
    }
}
