//! Simulated `σ_x` experiments: seeded multinomial sampling of the `4d` coincidence outcomes and
//! maximum-likelihood estimation of the `M_c` chart parameters `θ₁..θ_{d−1}`.
//!
//! `θ₀` cannot be estimated (the state does not depend on it) and is pinned to zero. The likelihood
//! depends on the pair sums only through `cos((N/2)·x_j)`, so it is invariant under `x_j → −x_j`
//! and periodic in `x_j` with period `4π/N`. Estimation therefore happens inside one identifiable cell:
//! `|x_j| < 2π/N`, and every pair that recorded odd-sign coincidences keeps the sign of `x_j` that the
//! initial guess has (positive where the guess sits at `x_j = 0`).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::crb::{self, WeightVector};
use crate::error::{Error, Result};
use crate::fisher::Chart;
use crate::ghz_state::{check_len, PhaseVector};
use crate::measurement::{self, OutcomeDistribution, OutcomeLabel};
use crate::reparam::{self, Reparametrization};

/// Stop once the gradient norm of the per-shot log-likelihood falls below this value.
pub const GRADIENT_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 500;

/// Multinomial outcome counts of one simulated run.
#[derive(Clone, Debug, PartialEq)]
pub struct CountTable {
    pub photons: usize,
    pub nodes: usize,
    pub phases: PhaseVector,
    pub shots: u64,
    pub seed: u64,
    /// ChaCha stream the counts were drawn from.
    pub stream: u64,
    /// Counts in the canonical order of [`OutcomeLabel::all`].
    pub counts: Vec<u64>,
}

impl CountTable {
    pub fn count(&self, label: OutcomeLabel) -> u64 {
        self.counts[label.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (OutcomeLabel, u64)> + '_ {
        OutcomeLabel::all(self.nodes).into_iter().zip(self.counts.iter().copied())
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.shots as f64).collect()
    }
}

/// `𝒩` multinomial draws from `dist` using ChaCha8 stream 0 of `seed`.
pub fn sample_counts(dist: &OutcomeDistribution, shots: u64, seed: u64) -> Result<CountTable> {
    sample_counts_stream(dist, shots, seed, 0)
}

/// As [`sample_counts`] on an explicit ChaCha stream, so replicates can be drawn independently and in
/// any order.
pub fn sample_counts_stream(dist: &OutcomeDistribution, shots: u64, seed: u64, stream: u64) -> Result<CountTable> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shot count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);

    let probs = dist.probabilities();
    let mut counts = vec![0u64; probs.len()];
    let last = probs
        .iter()
        .rposition(|&p| p > 0.0)
        .ok_or_else(|| Error::InvalidArgument("distribution has no positive outcome".into()))?;
    let mut remaining = shots;
    let mut mass: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate().take(last) {
        if remaining == 0 {
            break;
        }
        if p > 0.0 {
            let q = (p / mass).clamp(0.0, 1.0);
            let k = Binomial::new(remaining, q)
                .map_err(|e| Error::InvalidArgument(format!("binomial draw: {e}")))?
                .sample(&mut rng);
            counts[i] = k;
            remaining -= k;
        }
        mass -= p;
    }
    counts[last] += remaining;

    Ok(CountTable {
        photons: dist.photons(),
        nodes: dist.nodes(),
        phases: dist.phases().clone(),
        shots,
        seed,
        stream,
        counts,
    })
}

/// Maximizer of the log-likelihood over `θ₁..θ_{d−1}` (with `θ₀ = 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct EstimationResult {
    pub theta: Vec<f64>,
    /// `Σ_o n_o·ln P_o(θ̂)`
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl EstimationResult {
    /// Estimate of the average phase `θ₁`.
    pub fn average_phase(&self) -> f64 {
        self.theta[0]
    }
}

/// Log-likelihood of per-pair even/odd weights as a function of the kept `M_c` parameters.
struct PairLikelihood {
    /// `∂x/∂θ` (`d × (d−1)`)
    pair_jacobian: DMatrix<f64>,
    half_n: f64,
    even: Vec<f64>,
    odd: Vec<f64>,
    total: f64,
    log_norm: f64,
    branch: Vec<f64>,
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl PairLikelihood {
    fn angles(&self, t: &DVector<f64>) -> DVector<f64> {
        (&self.pair_jacobian * t) * self.half_n
    }

    fn feasible(&self, y: &DVector<f64>) -> bool {
        y.iter().enumerate().all(|(j, &yj)| {
            yj.abs() < std::f64::consts::PI && (self.odd[j] == 0.0 || self.branch[j] * yj > 0.0)
        })
    }

    /// Mean log-likelihood per shot, or `None` outside the identifiable cell.
    fn value(&self, t: &DVector<f64>) -> Option<f64> {
        let y = self.angles(t);
        if !self.feasible(&y) {
            return None;
        }
        let mut ll = 0.0;
        for (j, &yj) in y.iter().enumerate() {
            // 1 ± cos y = 2cos²(y/2), 2sin²(y/2)
            if self.even[j] > 0.0 {
                ll += self.even[j] * (2.0 * (yj / 2.0).cos().powi(2)).ln();
            }
            if self.odd[j] > 0.0 {
                ll += self.odd[j] * (2.0 * (yj / 2.0).sin().powi(2)).ln();
            }
        }
        Some(ll / self.total + self.log_norm)
    }

    /// Gradient and Hessian of the mean log-likelihood.
    fn derivatives(&self, t: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let y = self.angles(t);
        let d = y.len();
        let mut g = DVector::zeros(d);
        let mut h = DVector::zeros(d);
        for j in 0..d {
            let half = y[j] / 2.0;
            let (s, c) = half.sin_cos();
            let mut gj = 0.0;
            let mut hj = 0.0;
            if self.even[j] > 0.0 {
                gj -= self.even[j] * s / c;
                hj -= 0.5 * self.even[j] / (c * c);
            }
            if self.odd[j] > 0.0 {
                gj += self.odd[j] * c / s;
                hj -= 0.5 * self.odd[j] / (s * s);
            }
            g[j] = gj / self.total;
            h[j] = hj / self.total;
        }
        let b = &self.pair_jacobian;
        let grad = b.transpose() * g * self.half_n;
        let hess = b.transpose() * DMatrix::from_diagonal(&h) * b * (self.half_n * self.half_n);
        (grad, hess)
    }

    fn clamp(&self, t: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(t.len(), |i, _| t[i].clamp(self.lower[i], self.upper[i]))
    }

    /// Least-squares chart point whose pair sums best match `y / (N/2)`.
    fn fit_angles(&self, y: &DVector<f64>) -> Option<DVector<f64>> {
        let target = y / self.half_n;
        let svd = self.pair_jacobian.clone().svd(true, true);
        svd.solve(&target, 1e-12).ok().map(|t| self.clamp(&t))
    }
}

/// Maximum-likelihood estimate from a count table. See [`mle_estimate_weights`].
pub fn mle_estimate(counts: &CountTable, guess: &[f64], half_width: f64) -> Result<EstimationResult> {
    let weights: Vec<f64> = counts.counts.iter().map(|&c| c as f64).collect();
    mle_estimate_weights(counts.photons, counts.nodes, &weights, guess, half_width)
}

/// Maximum-likelihood estimate of `θ₁..θ_{d−1}` from nonnegative per-outcome weights (counts, or
/// expected counts for a noiseless check).
///
/// The search is confined to `|θ_i − guess_i| ≤ half_width` intersected with the identifiable cell
/// around `guess`. Newton steps with backtracking are used; the objective is concave on that cell.
pub fn mle_estimate_weights(
    photons: usize,
    nodes: usize,
    weights: &[f64],
    guess: &[f64],
    half_width: f64,
) -> Result<EstimationResult> {
    let reparam = reparam::build_mc(nodes)?;
    check_len("outcome weights", 4 * nodes, weights.len())?;
    check_len("initial guess", nodes - 1, guess.len())?;
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::InvalidArgument(format!("box half-width must be positive, got {half_width}")));
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::InvalidArgument("outcome weights must be finite and nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument("no counts to estimate from".into()));
    }
    let problem = build_problem(photons, nodes, &reparam, weights, guess, half_width, total)?;
    newton_ascent(&problem, total)
}

fn build_problem(
    photons: usize,
    nodes: usize,
    reparam: &Reparametrization,
    weights: &[f64],
    guess: &[f64],
    half_width: f64,
    total: f64,
) -> Result<PairLikelihood> {
    let jac = reparam.jacobian(true);
    let pair_jacobian = DMatrix::from_fn(nodes, nodes - 1, |j, i| jac[(j, i)] + jac[((j + 1) % nodes, i)]);
    let half_n = photons as f64 / 2.0;
    let guess_vec = DVector::from_column_slice(guess);
    let guess_sums = &pair_jacobian * &guess_vec;
    let limit = 2.0 * std::f64::consts::PI / photons as f64;
    for (j, &x) in guess_sums.iter().enumerate() {
        if x.abs() >= limit {
            return Err(Error::GuessOutsideBox { pair: j + 1, value: x, limit });
        }
    }
    let even = weights.chunks(4).map(|w| w[0] + w[1]).collect();
    let odd = weights.chunks(4).map(|w| w[2] + w[3]).collect();
    let branch = guess_sums.iter().map(|&x| if x < 0.0 { -1.0 } else { 1.0 }).collect();
    Ok(PairLikelihood {
        pair_jacobian,
        half_n,
        even,
        odd,
        total,
        log_norm: -(4.0 * nodes as f64).ln(),
        branch,
        lower: guess_vec.map(|g| g - half_width),
        upper: guess_vec.map(|g| g + half_width),
    })
}

/// Feasible starting point: per-pair moment estimates on the guessed branch, fitted to the chart.
fn starting_point(problem: &PairLikelihood) -> Option<DVector<f64>> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let d = problem.even.len();
    let margin = 1e-6;
    let moment = DVector::from_fn(d, |j, _| {
        let (s, u) = (problem.even[j], problem.odd[j]);
        if s + u == 0.0 {
            return 0.0;
        }
        let angle = ((s - u) / (s + u)).clamp(-1.0, 1.0).acos();
        let lo = if u > 0.0 { margin } else { 0.0 };
        let hi = if s > 0.0 { PI - margin } else { PI };
        problem.branch[j] * angle.clamp(lo, hi)
    });
    let centre = DVector::from_fn(d, |j, _| problem.branch[j] * FRAC_PI_2);
    [moment, centre]
        .iter()
        .filter_map(|y| problem.fit_angles(y))
        .find(|t| problem.value(t).is_some())
}

fn newton_ascent(problem: &PairLikelihood, total: f64) -> Result<EstimationResult> {
    let mut t = starting_point(problem).ok_or(Error::NonConvergence { iterations: 0, grad_norm: f64::NAN })?;
    let mut ll = problem.value(&t).expect("feasible start");
    let p = t.len();
    let on_bound = 1e-14;

    for iteration in 0..=MAX_ITERATIONS {
        let (grad, hess) = problem.derivatives(&t);
        // Coordinates pinned at a face of the box with the gradient pushing outward stay fixed.
        let free: Vec<usize> = (0..p)
            .filter(|&i| {
                let at_lower = t[i] - problem.lower[i] <= on_bound && grad[i] < 0.0;
                let at_upper = problem.upper[i] - t[i] <= on_bound && grad[i] > 0.0;
                !(at_lower || at_upper)
            })
            .collect();
        let grad_norm = free.iter().map(|&i| grad[i] * grad[i]).sum::<f64>().sqrt();
        if grad_norm <= GRADIENT_TOL {
            return Ok(EstimationResult {
                theta: t.iter().copied().collect(),
                log_likelihood: ll * total,
                converged: true,
                iterations: iteration,
            });
        }
        if iteration == MAX_ITERATIONS {
            return Err(Error::NonConvergence { iterations: iteration, grad_norm });
        }

        let g_free = DVector::from_fn(free.len(), |a, _| grad[free[a]]);
        let neg_h = DMatrix::from_fn(free.len(), free.len(), |a, b| -hess[(free[a], free[b])]);
        let step_free = match neg_h.clone().cholesky() {
            Some(chol) => chol.solve(&g_free),
            None => {
                let scale = neg_h.diagonal().max().max(1.0);
                &g_free / scale
            }
        };
        let mut direction = DVector::zeros(p);
        for (a, &i) in free.iter().enumerate() {
            direction[i] = step_free[a];
        }

        // Below this predicted gain the objective cannot resolve the change, so the sufficient-increase
        // test is meaningless and a feasible Newton step is taken as is.
        let noise_floor = 64.0 * f64::EPSILON * (1.0 + ll.abs());
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let candidate = problem.clamp(&(&t + &direction * scale));
            if let Some(value) = problem.value(&candidate) {
                let gain = grad.dot(&(&candidate - &t));
                if value >= ll + 1e-4 * gain || (scale == 1.0 && gain <= noise_floor) {
                    accepted = true;
                    t = candidate;
                    ll = value;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence { iterations: iteration, grad_norm });
        }
    }
    unreachable!("loop returns on the final iteration")
}

/// Parameters of a saturation experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub photons: usize,
    pub nodes: usize,
    pub phases: PhaseVector,
    /// Shots per replicate.
    pub shots: u64,
    pub replicates: usize,
    pub seed: u64,
    /// Initial guess for `θ₁..θ_{d−1}`; zeros when `None`.
    pub guess: Option<Vec<f64>>,
    /// Box half-width around the guess; `2π/N` when `None`.
    pub half_width: Option<f64>,
}

impl ExperimentConfig {
    pub fn new(photons: usize, nodes: usize, phases: PhaseVector, shots: u64, replicates: usize, seed: u64) -> Self {
        Self { photons, nodes, phases, shots, replicates, seed, guess: None, half_width: None }
    }
}

pub const MIN_REPLICATES: usize = 50;

#[derive(Clone, Debug)]
pub struct SaturationReport {
    pub config: ExperimentConfig,
    /// True `θ₁..θ_{d−1}`.
    pub true_theta: Vec<f64>,
    /// Per-replicate estimates, in replicate order.
    pub estimates: Vec<EstimationResult>,
    pub mean_theta1: f64,
    /// Unbiased sample variance of `θ̂₁`.
    pub variance_theta1: f64,
    /// `mean_theta1 − θ₁`
    pub bias: f64,
    /// Standard error of the replicate mean, `√(variance / R)`.
    pub mean_standard_error: f64,
    /// `(F⁻¹)_{θ₁θ₁} / 𝒩` from the classical Fisher matrix.
    pub bound: f64,
    /// `variance_theta1 / bound`
    pub ratio: f64,
}

/// Run `R` independent sample-and-estimate cycles and compare `Var(θ̂₁)` against the Cramér-Rao bound.
/// Replicate `r` draws from ChaCha stream `r` of the configured seed, so the per-replicate estimates do
/// not depend on how the work is scheduled.
pub fn crb_saturation_experiment(config: &ExperimentConfig) -> Result<SaturationReport> {
    let (n, d) = (config.photons, config.nodes);
    if config.replicates < MIN_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_REPLICATES} replicates are required, got {}",
            config.replicates
        )));
    }
    let reparam = Arc::new(reparam::build_mc(d)?);
    check_len("phase vector", d, config.phases.len())?;
    let limit = 2.0 * std::f64::consts::PI / n as f64;
    for (j, x) in config.phases.pair_sums().into_iter().enumerate() {
        if x.abs() >= limit {
            return Err(Error::GuessOutsideBox { pair: j + 1, value: x, limit });
        }
    }
    let true_theta = reparam.to_chart(config.phases.as_slice())?[1..].to_vec();
    let guess = config.guess.clone().unwrap_or_else(|| vec![0.0; d - 1]);
    let half_width = config.half_width.unwrap_or(limit);

    let dist = measurement::outcome_distribution(n, d, &config.phases)?;
    let estimates: Vec<EstimationResult> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let counts = sample_counts_stream(&dist, config.shots, config.seed, r)?;
            mle_estimate(&counts, &guess, half_width)
        })
        .collect::<Result<_>>()?;

    let r = estimates.len() as f64;
    let mean = estimates.iter().map(|e| e.average_phase()).sum::<f64>() / r;
    let variance = estimates.iter().map(|e| (e.average_phase() - mean).powi(2)).sum::<f64>() / (r - 1.0);

    let chart = Chart::Transformed { reparam, drop_irrelevant: true };
    let fisher = measurement::cfim(n, d, &config.phases, &chart)?;
    let bound = crb::exact_crb(&fisher, &WeightVector::unit(d - 1, 0)?, config.shots)?;

    Ok(SaturationReport {
        config: config.clone(),
        true_theta: true_theta.clone(),
        mean_theta1: mean,
        variance_theta1: variance,
        bias: mean - true_theta[0],
        mean_standard_error: (variance / r).sqrt(),
        bound,
        ratio: variance / bound,
        estimates,
    })
}
