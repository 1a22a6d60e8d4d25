//! The Fisher-matrix value type shared by the quantum and classical engines.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ghz_state::PhaseVector;
use crate::linalg;
use crate::reparam::{self, Reparametrization};

/// Tolerance on `|F_mn − F_nm|`.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted as "positive semidefinite".
pub const PSD_TOL: f64 = -1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FisherKind {
    Quantum,
    Classical,
}

impl FisherKind {
    pub fn name(&self) -> &'static str {
        match self {
            FisherKind::Quantum => "quantum",
            FisherKind::Classical => "classical",
        }
    }
}

impl fmt::Display for FisherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameter chart of a Fisher matrix.
#[derive(Clone, Debug)]
pub enum Chart {
    /// The node phases `φ_1..φ_d`.
    Original,
    /// Parameters `θ = M·φ`, optionally without the irrelevant direction `θ₀`.
    Transformed { reparam: Arc<Reparametrization>, drop_irrelevant: bool },
}

impl PartialEq for Chart {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Chart::Original, Chart::Original) => true,
            (
                Chart::Transformed { reparam: a, drop_irrelevant: da },
                Chart::Transformed { reparam: b, drop_irrelevant: db },
            ) => da == db && (Arc::ptr_eq(a, b) || a == b),
            _ => false,
        }
    }
}

impl Chart {
    /// `M_c` chart with `θ₀` dropped.
    pub fn mc(d: usize) -> Result<Self> {
        Ok(Chart::Transformed { reparam: Arc::new(reparam::build_mc(d)?), drop_irrelevant: true })
    }

    /// Orthogonal `d = 4` chart restricted to `(φ_a, φ_b, φ_c)`.
    pub fn orthogonal_d4() -> Self {
        Chart::Transformed { reparam: Arc::new(reparam::build_orthogonal_d4()), drop_irrelevant: true }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Chart::Original => "original",
            Chart::Transformed { reparam, .. } => reparam.kind().name(),
        }
    }

    pub fn drops_irrelevant(&self) -> bool {
        matches!(self, Chart::Transformed { drop_irrelevant: true, .. })
    }

    pub fn param_count(&self, d: usize) -> usize {
        match self {
            Chart::Original => d,
            Chart::Transformed { reparam, drop_irrelevant } => {
                reparam.dim() - usize::from(*drop_irrelevant)
            }
        }
    }

    /// Jacobian `∂φ/∂θ` (`d × p`); its columns are the phase-space directions of the chart parameters.
    pub fn jacobian(&self, d: usize) -> Result<DMatrix<f64>> {
        match self {
            Chart::Original => Ok(DMatrix::identity(d, d)),
            Chart::Transformed { reparam, drop_irrelevant } => {
                if reparam.dim() != d {
                    return Err(Error::DimensionMismatch {
                        what: "chart dimension",
                        expected: d,
                        got: reparam.dim(),
                    });
                }
                Ok(reparam.jacobian(*drop_irrelevant))
            }
        }
    }

    pub fn labels(&self, d: usize) -> Vec<String> {
        match self {
            Chart::Original => (1..=d).map(|j| format!("phi{j}")).collect(),
            Chart::Transformed { reparam, drop_irrelevant } => {
                let skip = usize::from(*drop_irrelevant);
                reparam.labels()[skip..].to_vec()
            }
        }
    }

    /// Coefficients of the average phase `φ̄` in this chart's parameters.
    pub fn average_phase_weights(&self, d: usize) -> Result<Vec<f64>> {
        let jac = self.jacobian(d)?;
        let avg = nalgebra::DVector::from_element(d, 1.0 / d as f64);
        Ok((jac.transpose() * avg).iter().copied().collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FisherMeta {
    pub photons: usize,
    pub nodes: usize,
    /// Evaluation point, when the matrix was computed at one.
    pub phases: Option<PhaseVector>,
}

/// Real symmetric positive-semidefinite Fisher information matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FisherMatrix {
    entries: DMatrix<f64>,
    kind: FisherKind,
    chart: Chart,
    meta: FisherMeta,
}

impl FisherMatrix {
    /// Validates symmetry, positive semidefiniteness and the chart dimension; the stored entries are
    /// exactly symmetrized.
    pub fn new(entries: DMatrix<f64>, kind: FisherKind, chart: Chart, meta: FisherMeta) -> Result<Self> {
        let p = chart.param_count(meta.nodes);
        if entries.nrows() != p || entries.ncols() != p {
            return Err(Error::DimensionMismatch { what: "Fisher matrix", expected: p, got: entries.nrows() });
        }
        let asym = linalg::max_asymmetry(&entries);
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        let entries = (&entries + entries.transpose()) * 0.5;
        let (smallest, _) = linalg::min_max_eigenvalues(&entries);
        if smallest < PSD_TOL {
            return Err(Error::NotPositiveDefinite(smallest));
        }
        Ok(Self { entries, kind, chart, meta })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.entries[(m, n)]
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn kind(&self) -> FisherKind {
        self.kind
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn meta(&self) -> &FisherMeta {
        &self.meta
    }

    pub fn labels(&self) -> Vec<String> {
        self.chart.labels(self.meta.nodes)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::sorted_eigen(&self.entries).0.iter().copied().collect()
    }
}
