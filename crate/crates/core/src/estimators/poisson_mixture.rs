// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Two-component Poisson mixture fitted to a photon-count histogram.
//!
//! Model for the expected occurrences of count `x`:
//! `lambda_x = A_d Pois(x; mu_d) + A_b Pois(x; mu_b)`, with `mu_b > mu_d`.
//! The fit maximizes the extended Poisson likelihood over histogram bins,
//! which has the same maximizer for the fractions as the multinomial one and
//! gives `A_d + A_b = N` at the optimum.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, LmOptions};
use crate::error::{Error, Result};

/// Photon-count histogram: `bin_counts[x]` shots saw `x` photons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramResult {
    pub bin_counts: Vec<u64>,
    pub shots: u64,
    pub bin_width_pulses: usize,
}

impl HistogramResult {
    pub fn from_counts<I: IntoIterator<Item = u32>>(counts: I, bin_width_pulses: usize) -> Self {
        let mut bin_counts: Vec<u64> = Vec::new();
        let mut shots = 0;
        for c in counts {
            let c = c as usize;
            if c >= bin_counts.len() {
                bin_counts.resize(c + 1, 0);
            }
            bin_counts[c] += 1;
            shots += 1;
        }
        Self { bin_counts, shots, bin_width_pulses }
    }

    pub fn mean(&self) -> f64 {
        self.factorial_moment(1)
    }

    /// `E[x (x-1) ... (x-k+1)]`.
    pub fn factorial_moment(&self, k: u32) -> f64 {
        let n = self.shots as f64;
        self.bin_counts
            .iter()
            .enumerate()
            .map(|(x, &c)| {
                let f: f64 = (0..k).map(|j| x as f64 - j as f64).product();
                f * c as f64
            })
            .sum::<f64>()
            / n
    }

    pub fn validate(&self) -> Result<()> {
        let total: u64 = self.bin_counts.iter().sum();
        if total != self.shots {
            return Err(Error::input(format!("histogram holds {total} occurrences but shots = {}", self.shots)));
        }
        if self.shots == 0 {
            return Err(Error::input("empty histogram"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MixtureMode {
    /// All four parameters float.
    #[default]
    Free,
    /// Means held at calibrated values; only the amplitudes float.
    FixedMeans { mu_d: f64, mu_b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    MaximumLikelihood,
    /// Pearson-weighted least squares on the bin counts.
    LeastSquares,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MixtureOptions {
    pub mode: MixtureMode,
    pub objective: Objective,
}

/// Starting point `(A_d, A_b, mu_d, mu_b)`; amplitudes in occurrences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureInit {
    pub a_d: f64,
    pub a_b: f64,
    pub mu_d: f64,
    pub mu_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BimodalFit {
    pub a_d: f64,
    pub a_b: f64,
    pub mu_d: f64,
    pub mu_b: f64,
    /// Covariance of `(A_d, A_b, mu_d, mu_b)`.
    pub covariance: [[f64; 4]; 4],
    pub wrong_state_prob: f64,
    pub wrong_state_stderr: f64,
    /// Extended log-likelihood without the `-sum ln(n_x!)` constant.
    pub log_likelihood: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub shots: u64,
}

struct LnFact(Vec<f64>);

impl LnFact {
    fn new(n: usize) -> Self {
        let mut v = vec![0.0; n + 1];
        for k in 1..=n {
            v[k] = v[k - 1] + (k as f64).ln();
        }
        Self(v)
    }

    fn pois(&self, x: usize, mu: f64) -> f64 {
        if mu <= 0.0 {
            return if x == 0 { 1.0 } else { 0.0 };
        }
        (x as f64 * mu.ln() - mu - self.0[x]).exp()
    }
}

struct Problem<'a> {
    counts: &'a [u64],
    lf: LnFact,
}

impl Problem<'_> {
    fn loglik(&self, p: &[f64; 4]) -> f64 {
        let [ad, ab, md, mb] = *p;
        let mut l = -(ad + ab);
        for (x, &n) in self.counts.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let lam = ad * self.lf.pois(x, md) + ab * self.lf.pois(x, mb);
            if lam <= 0.0 {
                return f64::NEG_INFINITY;
            }
            // constant -ln(n!) dropped
            l += n as f64 * lam.ln();
        }
        l
    }

    /// Gradient and Hessian of the log-likelihood in `(A_d, A_b, mu_d, mu_b)`.
    fn derivatives(&self, p: &[f64; 4]) -> ([f64; 4], [[f64; 4]; 4]) {
        let [ad, ab, md, mb] = *p;
        let mut g = [-1.0, -1.0, 0.0, 0.0];
        let mut h = [[0.0; 4]; 4];
        for (x, &n) in self.counts.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let n = n as f64;
            let xf = x as f64;
            let fd = self.lf.pois(x, md);
            let fb = self.lf.pois(x, mb);
            let lam = ad * fd + ab * fb;
            // f' = f (x/mu - 1), f'' = f ((x/mu - 1)^2 - x/mu^2)
            let d1 = |f: f64, mu: f64| if mu > 0.0 { f * (xf / mu - 1.0) } else { 0.0 };
            let d2 = |f: f64, mu: f64| if mu > 0.0 { f * ((xf / mu - 1.0).powi(2) - xf / (mu * mu)) } else { 0.0 };
            let (fd1, fb1) = (d1(fd, md), d1(fb, mb));
            let (fd2, fb2) = (d2(fd, md), d2(fb, mb));
            // dlam/dtheta
            let dl = [fd, fb, ad * fd1, ab * fb1];
            for i in 0..4 {
                g[i] += n * dl[i] / lam;
            }
            let mut d2l = [[0.0; 4]; 4];
            d2l[0][2] = fd1;
            d2l[2][0] = fd1;
            d2l[1][3] = fb1;
            d2l[3][1] = fb1;
            d2l[2][2] = ad * fd2;
            d2l[3][3] = ab * fb2;
            for i in 0..4 {
                for j in 0..4 {
                    h[i][j] += n * (d2l[i][j] / lam - dl[i] * dl[j] / (lam * lam));
                }
            }
        }
        (g, h)
    }
}

fn moment_init(hist: &HistogramResult) -> MixtureInit {
    let n = hist.shots as f64;
    let m1 = hist.factorial_moment(1);
    let m2 = hist.factorial_moment(2);
    let m3 = hist.factorial_moment(3);
    // Factorial moments of a Poisson mixture are sum_j pi_j mu_j^k, and the two
    // means are roots of z^2 - s z + p with
    // [m1 -1; m2 -m1] [s; p] = [m2; m3].
    let det = -m1 * m1 + m2;
    if det.abs() > 1e-12 {
        let s = (m2 * -m1 + m3) / det;
        let p = (m1 * m3 - m2 * m2) / det;
        let disc = s * s - 4.0 * p;
        if disc > 0.0 && s > 0.0 {
            let (lo, hi) = ((s - disc.sqrt()) / 2.0, (s + disc.sqrt()) / 2.0);
            if lo >= 0.0 && hi > lo {
                let pi_b = ((m1 - lo) / (hi - lo)).clamp(1e-3, 1.0 - 1e-3);
                return MixtureInit { a_d: n * (1.0 - pi_b), a_b: n * pi_b, mu_d: lo.max(1e-3), mu_b: hi };
            }
        }
    }
    // Split at the mean.
    let (mut lo_n, mut lo_s, mut hi_n, mut hi_s) = (0.0, 0.0, 0.0, 0.0);
    for (x, &c) in hist.bin_counts.iter().enumerate() {
        if (x as f64) <= m1 {
            lo_n += c as f64;
            lo_s += (x * c as usize) as f64;
        } else {
            hi_n += c as f64;
            hi_s += (x * c as usize) as f64;
        }
    }
    let mu_d = if lo_n > 0.0 { (lo_s / lo_n).max(1e-3) } else { 1e-3 };
    let mu_b = if hi_n > 0.0 { hi_s / hi_n } else { 2.0 * m1 + 1.0 }.max(mu_d + 0.5);
    let pi_b = (hi_n / n).clamp(1e-3, 1.0 - 1e-3);
    MixtureInit { a_d: n * (1.0 - pi_b), a_b: n * pi_b, mu_d, mu_b }
}

fn em(prob: &Problem, n: f64, init: MixtureInit, fixed: bool) -> ([f64; 4], usize) {
    let mut p = [init.a_d / n, init.a_b / n, init.mu_d, init.mu_b];
    let mut last = f64::NEG_INFINITY;
    let mut it = 0;
    while it < 5000 {
        it += 1;
        let (mut wd, mut wb, mut sd, mut sb) = (0.0, 0.0, 0.0, 0.0);
        for (x, &c) in prob.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let fd = p[0] * prob.lf.pois(x, p[2]);
            let fb = p[1] * prob.lf.pois(x, p[3]);
            let tot = fd + fb;
            let rb = if tot > 0.0 { fb / tot } else { 0.5 };
            let c = c as f64;
            wd += c * (1.0 - rb);
            wb += c * rb;
            sd += c * (1.0 - rb) * x as f64;
            sb += c * rb * x as f64;
        }
        p[0] = wd / n;
        p[1] = wb / n;
        if !fixed {
            if wd > 0.0 {
                p[2] = sd / wd;
            }
            if wb > 0.0 {
                p[3] = sb / wb;
            }
        }
        let ll = prob.loglik(&[p[0] * n, p[1] * n, p[2], p[3]]);
        if (ll - last).abs() <= 1e-12 * ll.abs().max(1.0) {
            break;
        }
        last = ll;
    }
    ([p[0] * n, p[1] * n, p[2], p[3]], it)
}

fn invert_information(h: &DMatrix<f64>) -> DMatrix<f64> {
    let info = -h;
    if let Some(c) = info.clone().cholesky() {
        return c.inverse();
    }
    let eps = 1e-10 * info.norm();
    info.pseudo_inverse(eps).unwrap_or_else(|_| DMatrix::zeros(h.nrows(), h.ncols()))
}

/// Fits the two-component Poisson mixture to `hist`.
/// Smallest `2 ln(L_mixture / L_single)` for which a free fit reports two
/// components.
pub const MIN_LIKELIHOOD_GAIN: f64 = 9.0;

pub fn fit_bimodal_poisson(hist: &HistogramResult, init: Option<MixtureInit>, opts: &MixtureOptions) -> Result<BimodalFit> {
    hist.validate()?;
    let n = hist.shots as f64;
    let prob = Problem { counts: &hist.bin_counts, lf: LnFact::new(hist.bin_counts.len()) };
    let fixed = matches!(opts.mode, MixtureMode::FixedMeans { .. });
    let mut start = init.unwrap_or_else(|| moment_init(hist));
    if let MixtureMode::FixedMeans { mu_d, mu_b } = opts.mode {
        if !(mu_d >= 0.0 && mu_b > mu_d) {
            return Err(Error::input(format!("fixed means need 0 <= mu_d < mu_b (got {mu_d}, {mu_b})")));
        }
        start.mu_d = mu_d;
        start.mu_b = mu_b;
    }
    if start.mu_d > start.mu_b {
        start = MixtureInit { a_d: start.a_b, a_b: start.a_d, mu_d: start.mu_b, mu_b: start.mu_d };
    }
    if hist.bin_counts.iter().filter(|&&c| c > 0).count() < 2 && !fixed {
        return Err(Error::Identifiability("histogram has a single occupied bin".into()));
    }

    let (mut p, mut iterations) = match opts.objective {
        Objective::MaximumLikelihood => em(&prob, n, start, fixed),
        Objective::LeastSquares => {
            let xs: Vec<f64> = (0..hist.bin_counts.len()).map(|x| x as f64).collect();
            let ys: Vec<f64> = hist.bin_counts.iter().map(|&c| c as f64).collect();
            let sig: Vec<f64> = ys.iter().map(|&c| c.max(1.0).sqrt()).collect();
            let lf = LnFact::new(xs.len());
            let fit = if let MixtureMode::FixedMeans { mu_d, mu_b } = opts.mode {
                levenberg_marquardt(
                    |x, q| q[0] * lf.pois(x as usize, mu_d) + q[1] * lf.pois(x as usize, mu_b),
                    &xs,
                    &ys,
                    Some(&sig),
                    &[start.a_d, start.a_b.max(1.0)],
                    &LmOptions::default(),
                )?
            } else {
                levenberg_marquardt(
                    |x, q| q[0] * lf.pois(x as usize, q[2].abs()) + q[1] * lf.pois(x as usize, q[3].abs()),
                    &xs,
                    &ys,
                    Some(&sig),
                    &[start.a_d, start.a_b.max(1.0), start.mu_d, start.mu_b],
                    &LmOptions::default(),
                )?
            };
            let q = &fit.params;
            let p = if fixed {
                [q[0], q[1], start.mu_d, start.mu_b]
            } else {
                [q[0], q[1], q[2].abs(), q[3].abs()]
            };
            (p, fit.iterations)
        }
    };

    if p[2] > p[3] {
        p = [p[1], p[0], p[3], p[2]];
    }
    let identifiable = (p[3] - p[2]).abs() > 1e-3 * (p[2] + p[3]) + 1e-9;
    if !fixed && !identifiable && p[0].min(p[1]) > 1e-3 * n {
        return Err(Error::Identifiability(format!(
            "component means coincide (mu_d = {}, mu_b = {})",
            p[2], p[3]
        )));
    }

    // Newton polish of the likelihood (the least-squares estimate is kept as is).
    let free: Vec<usize> = if fixed { vec![0, 1] } else { vec![0, 1, 2, 3] };
    let mut grad_norm = 0.0;
    if opts.objective == Objective::MaximumLikelihood {
        let at_boundary = p[0] < 1e-9 * n || p[1] < 1e-9 * n;
        for _ in 0..200 {
            let (g, h) = prob.derivatives(&p);
            // a parameter pinned at zero with the gradient pushing outwards is done
            let active: Vec<usize> = free.iter().copied().filter(|&i| p[i] > 0.0 || g[i] > 0.0).collect();
            let gv = DVector::from_iterator(active.len(), active.iter().map(|&i| g[i]));
            grad_norm = gv.norm();
            if at_boundary || grad_norm < 1e-9 * n.sqrt() {
                break;
            }
            iterations += 1;
            let neg_h = DMatrix::from_fn(active.len(), active.len(), |a, b| -h[active[a]][active[b]]);
            let base = prob.loglik(&p);
            let mut moved = false;
            // damped Newton: lambda = 0 first, then increasingly gradient-like steps
            'damping: for lambda in [0.0, 1e-6, 1e-4, 1e-2, 1.0, 1e2, 1e4] {
                let mut m = neg_h.clone();
                for a in 0..active.len() {
                    m[(a, a)] += lambda * neg_h[(a, a)].abs().max(1.0);
                }
                let Some(step) = m.cholesky().map(|c| c.solve(&gv)) else { continue };
                let mut t = 1.0;
                while t > 1e-6 {
                    let mut q = p;
                    for (a, &i) in active.iter().enumerate() {
                        q[i] = (p[i] + t * step[a]).max(0.0);
                    }
                    if prob.loglik(&q) > base {
                        p = q;
                        moved = true;
                        break 'damping;
                    }
                    t *= 0.5;
                }
            }
            if !moved {
                break;
            }
        }
        if !at_boundary && grad_norm > 1e-3 * n.sqrt() {
            return Err(Error::numerical(format!("mixture fit did not converge (gradient norm {grad_norm:e})")));
        }
    }

    if !fixed {
        // a single Poisson at the sample mean must be clearly worse
        let mean = hist.mean();
        let gain = 2.0 * (prob.loglik(&p) - prob.loglik(&[n, 0.0, mean, mean]));
        if gain < MIN_LIKELIHOOD_GAIN {
            return Err(Error::Identifiability(format!(
                "a single Poisson component explains the histogram (2 dlogL = {gain:.2})"
            )));
        }
    }

    let (_, h) = prob.derivatives(&p);
    let hm = DMatrix::from_fn(free.len(), free.len(), |a, b| h[free[a]][free[b]]);
    let cov_free = invert_information(&hm);
    let mut covariance = [[0.0; 4]; 4];
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            covariance[i][j] = cov_free[(a, b)];
        }
    }
    let s = p[0] + p[1];
    let w = p[1] / s;
    // delta method on A_b / (A_d + A_b)
    let gw = [-p[1] / (s * s), p[0] / (s * s)];
    let var_w = gw[0] * gw[0] * covariance[0][0] + 2.0 * gw[0] * gw[1] * covariance[0][1] + gw[1] * gw[1] * covariance[1][1];
    Ok(BimodalFit {
        a_d: p[0],
        a_b: p[1],
        mu_d: p[2],
        mu_b: p[3],
        covariance,
        wrong_state_prob: w.clamp(0.0, 1.0),
        wrong_state_stderr: var_w.max(0.0).sqrt(),
        log_likelihood: prob.loglik(&p),
        iterations,
        gradient_norm: grad_norm,
        shots: hist.shots,
    })
}

/// Draws a histogram from the mixture itself (test and demo helper).
pub fn sample_mixture<R: rand::Rng>(rng: &mut R, shots: u64, wrong: f64, mu_d: f64, mu_b: f64) -> HistogramResult {
    use rand_distr::{Distribution, Poisson};
    let pd = Poisson::new(mu_d.max(1e-300)).expect("positive mean");
    let pb = Poisson::new(mu_b.max(1e-300)).expect("positive mean");
    HistogramResult::from_counts(
        (0..shots).map(|_| {
            let v: f64 = if rng.random::<f64>() < wrong { pb.sample(rng) } else { pd.sample(rng) };
            v as u32
        }),
        50,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn factorial_moments() {
        let h = HistogramResult { bin_counts: vec![1, 2, 1], shots: 4, bin_width_pulses: 50 };
        assert!((h.mean() - 1.0).abs() < 1e-15);
        assert!((h.factorial_moment(2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn recovers_injected_fraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = sample_mixture(&mut rng, 100_000, 0.05, 0.05, 2.0);
        let f = fit_bimodal_poisson(&h, None, &MixtureOptions::default()).unwrap();
        assert!((f.wrong_state_prob - 0.05).abs() < 2.0 * f.wrong_state_stderr, "{f:?}");
        assert!((f.mu_b - 2.0).abs() < 0.1 && (f.mu_d - 0.05).abs() < 0.01);
        assert!((f.a_d + f.a_b - 1e5).abs() < 1e-3);
    }

    #[test]
    fn single_component_is_unidentified_unless_means_are_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = sample_mixture(&mut rng, 100_000, 0.0, 0.05, 2.0);
        let e = fit_bimodal_poisson(&h, None, &MixtureOptions::default()).unwrap_err();
        assert!(matches!(e, Error::Identifiability(_)), "{e}");
        let mode = MixtureMode::FixedMeans { mu_d: 0.05, mu_b: 2.0 };
        let f = fit_bimodal_poisson(&h, None, &MixtureOptions { mode, ..MixtureOptions::default() }).unwrap();
        assert!(f.wrong_state_prob < 0.005, "{f:?}");
    }

    #[test]
    fn label_swap_gives_same_mixture() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = sample_mixture(&mut rng, 20_000, 0.2, 0.1, 3.0);
        let a = fit_bimodal_poisson(&h, Some(MixtureInit { a_d: 16000.0, a_b: 4000.0, mu_d: 0.2, mu_b: 2.5 }), &MixtureOptions::default()).unwrap();
        let b = fit_bimodal_poisson(&h, Some(MixtureInit { a_d: 4000.0, a_b: 16000.0, mu_d: 2.5, mu_b: 0.2 }), &MixtureOptions::default()).unwrap();
        assert!(a.mu_b > a.mu_d && b.mu_b > b.mu_d);
        assert!((a.wrong_state_prob - b.wrong_state_prob).abs() < 1e-6);
        assert!((a.mu_b - b.mu_b).abs() < 1e-6);
    }

    #[test]
    fn fixed_means_and_least_squares_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = sample_mixture(&mut rng, 50_000, 0.1, 0.05, 2.0);
        let fixed = MixtureOptions { mode: MixtureMode::FixedMeans { mu_d: 0.05, mu_b: 2.0 }, ..Default::default() };
        let f = fit_bimodal_poisson(&h, None, &fixed).unwrap();
        assert_eq!((f.mu_d, f.mu_b), (0.05, 2.0));
        assert!((f.wrong_state_prob - 0.1).abs() < 3.0 * f.wrong_state_stderr);
        let ls = MixtureOptions { objective: Objective::LeastSquares, ..Default::default() };
        let g = fit_bimodal_poisson(&h, None, &ls).unwrap();
        assert!((g.wrong_state_prob - 0.1).abs() < 0.02);
    }

    #[test]
    fn coincident_means_are_unidentifiable() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = sample_mixture(&mut rng, 10_000, 0.5, 1.0, 1.0);
        let r = fit_bimodal_poisson(&h, Some(MixtureInit { a_d: 5000.0, a_b: 5000.0, mu_d: 1.0, mu_b: 1.0 }), &MixtureOptions::default());
        assert!(matches!(r, Err(Error::Identifiability(_))), "{r:?}");
        let single = HistogramResult { bin_counts: vec![100], shots: 100, bin_width_pulses: 50 };
        assert!(matches!(fit_bimodal_poisson(&single, None, &MixtureOptions::default()), Err(Error::Identifiability(_))));
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = sample_mixture(&mut rng, 10_000, 0.2, 0.05, 2.0);
        let a = fit_bimodal_poisson(&h, None, &MixtureOptions::default()).unwrap();
        let b = fit_bimodal_poisson(&h, None, &MixtureOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn analytic_hessian_matches_finite_differences() {
        let h = HistogramResult { bin_counts: vec![500, 120, 60, 40, 20, 8, 2], shots: 750, bin_width_pulses: 50 };
        let prob = Problem { counts: &h.bin_counts, lf: LnFact::new(7) };
        let p = [600.0, 150.0, 0.2, 2.2];
        let (g, hh) = prob.derivatives(&p);
        for i in 0..4 {
            let e = 1e-5 * p[i];
            let mut up = p;
            up[i] += e;
            let mut dn = p;
            dn[i] -= e;
            let fd = (prob.loglik(&up) - prob.loglik(&dn)) / (2.0 * e);
            assert!((fd - g[i]).abs() < 1e-4 * (1.0 + g[i].abs()), "grad {i}");
            let (gu, _) = prob.derivatives(&up);
            let (gd, _) = prob.derivatives(&dn);
            for j in 0..4 {
                let fdh = (gu[j] - gd[j]) / (2.0 * e);
                assert!((fdh - hh[j][i]).abs() < 1e-4 * (1.0 + hh[j][i].abs()), "hess {i}{j}");
            }
        }
    }
}
