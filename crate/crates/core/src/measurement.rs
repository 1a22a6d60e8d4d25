//! Projective measurement of every node in the `σ_x` basis `(|H⟩ ± |V⟩)/√2`.
//!
//! Coincidences are recorded per cyclic pair `(j, j+1)` with one of four sign patterns, giving `4d`
//! outcomes with
//!
//! ```text
//! P(++) = P(−−) = (1 + cos((N/2)·x_j)) / 4d
//! P(+−) = P(−+) = (1 − cos((N/2)·x_j)) / 4d,     x_j = φ_j + φ_{j+1}.
//! ```
//!
//! The classical Fisher matrix `Σ_o (∂_m P_o)(∂_n P_o) / P_o` collapses, after adding the four outcomes of
//! a pair (`1/(1+c) + 1/(1−c) = 2/sin²`), to `(N²/4d) Σ_j (∂_m x_j)(∂_n x_j)`. That kernel has no
//! removable `0/0` at `P = 0` and no dependence on `φ`, and it is what [`cfim`] evaluates.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fisher::{Chart, FisherKind, FisherMatrix, FisherMeta};
use crate::ghz_state::{check_len, check_nodes, check_photons, PhaseVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SignPattern {
    PlusPlus,
    MinusMinus,
    PlusMinus,
    MinusPlus,
}

impl SignPattern {
    pub const ALL: [SignPattern; 4] =
        [SignPattern::PlusPlus, SignPattern::MinusMinus, SignPattern::PlusMinus, SignPattern::MinusPlus];

    /// Whether both nodes of the pair report the same sign.
    pub fn is_even(&self) -> bool {
        matches!(self, SignPattern::PlusPlus | SignPattern::MinusMinus)
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            SignPattern::PlusPlus => "++",
            SignPattern::MinusMinus => "--",
            SignPattern::PlusMinus => "+-",
            SignPattern::MinusPlus => "-+",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.symbol() == s)
    }
}

/// Coincidence outcome on pair `(j, j+1 mod d)`; `pair` is the 1-based `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutcomeLabel {
    pub pair: usize,
    pub pattern: SignPattern,
}

impl OutcomeLabel {
    /// All `4d` outcomes in canonical order: pair-major, patterns `++, --, +-, -+`.
    pub fn all(d: usize) -> Vec<OutcomeLabel> {
        (1..=d)
            .flat_map(|pair| SignPattern::ALL.into_iter().map(move |pattern| OutcomeLabel { pair, pattern }))
            .collect()
    }

    pub fn nodes(&self, d: usize) -> (usize, usize) {
        (self.pair, self.pair % d + 1)
    }

    pub(crate) fn index(&self) -> usize {
        4 * (self.pair - 1) + SignPattern::ALL.iter().position(|p| *p == self.pattern).unwrap()
    }
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}{}", self.pair, self.pattern.symbol())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    photons: usize,
    nodes: usize,
    phases: PhaseVector,
    probabilities: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn photons(&self) -> usize {
        self.photons
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn phases(&self) -> &PhaseVector {
        &self.phases
    }

    /// Probabilities in the canonical order of [`OutcomeLabel::all`].
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, label: OutcomeLabel) -> f64 {
        self.probabilities[label.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (OutcomeLabel, f64)> + '_ {
        OutcomeLabel::all(self.nodes).into_iter().zip(self.probabilities.iter().copied())
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

pub fn outcome_distribution(photons: usize, nodes: usize, phases: &PhaseVector) -> Result<OutcomeDistribution> {
    check_photons(photons)?;
    check_nodes(nodes)?;
    check_len("phase vector", nodes, phases.len())?;
    let half_n = photons as f64 / 2.0;
    let norm = 4.0 * nodes as f64;
    let mut probabilities = Vec::with_capacity(4 * nodes);
    for x in phases.pair_sums() {
        let c = (half_n * x).cos();
        let even = (1.0 + c) / norm;
        let odd = (1.0 - c) / norm;
        probabilities.extend([even, even, odd, odd]);
    }
    Ok(OutcomeDistribution { photons, nodes, phases: phases.clone(), probabilities })
}

/// Classical Fisher matrix of the `σ_x` measurement in the parameters of `chart`.
pub fn cfim(photons: usize, nodes: usize, phases: &PhaseVector, chart: &Chart) -> Result<FisherMatrix> {
    check_photons(photons)?;
    check_nodes(nodes)?;
    check_len("phase vector", nodes, phases.len())?;
    let jac = chart.jacobian(nodes)?;
    let p = jac.ncols();
    let scale = (photons * photons) as f64 / (4.0 * nodes as f64);
    let mut entries = DMatrix::zeros(p, p);
    for j in 0..nodes {
        // ∂x_j/∂θ along every chart parameter
        let grad = jac.row(j) + jac.row((j + 1) % nodes);
        entries += grad.transpose() * &grad * scale;
    }
    FisherMatrix::new(
        entries,
        FisherKind::Classical,
        chart.clone(),
        FisherMeta { photons, nodes, phases: Some(phases.clone()) },
    )
}

pub mod oracle {
    use super::*;

    /// Smallest outcome probability for which the literal quotient is evaluated.
    pub const MIN_PROBABILITY: f64 = 1e-8;
    const STEP: f64 = 1e-6;

    /// Literal `Σ_o (∂_m P_o)(∂_n P_o) / P_o` over all `4d` outcomes, with central-difference
    /// derivatives of [`outcome_distribution`] along each chart direction.
    pub fn cfim_brute_force_oracle(
        photons: usize,
        nodes: usize,
        phases: &PhaseVector,
        chart: &Chart,
    ) -> Result<DMatrix<f64>> {
        let base = outcome_distribution(photons, nodes, phases)?;
        let smallest = base.probabilities().iter().copied().fold(f64::INFINITY, f64::min);
        if smallest <= MIN_PROBABILITY {
            return Err(Error::OracleDomain(smallest));
        }
        let jac = chart.jacobian(nodes)?;
        let mut grads = Vec::with_capacity(jac.ncols());
        for dir in jac.column_iter() {
            let at = |sign: f64| {
                let values =
                    phases.as_slice().iter().zip(dir.iter()).map(|(p, v)| p + sign * STEP * v).collect();
                outcome_distribution(photons, nodes, &PhaseVector::new(values))
            };
            let (plus, minus) = (at(1.0)?, at(-1.0)?);
            let grad: Vec<f64> = plus
                .probabilities()
                .iter()
                .zip(minus.probabilities())
                .map(|(a, b)| (a - b) / (2.0 * STEP))
                .collect();
            grads.push(grad);
        }
        let p = grads.len();
        Ok(DMatrix::from_fn(p, p, |m, n| {
            base.probabilities()
                .iter()
                .enumerate()
                .map(|(o, prob)| grads[m][o] * grads[n][o] / prob)
                .sum()
        }))
    }
}
