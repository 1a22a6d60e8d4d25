//! Linear charts `θ = M·φ` that separate the irrelevant alternating direction from the phases that
//! the output state actually depends on.
//!
//! Two constructions are provided. [`build_mc`] works for every even `d ≥ 4`: its first row is the
//! alternating combination `θ₀`, its second row the average phase `θ₁`, and the remaining rows
//! `θ_i = (φ_{i-1} − φ_{i+1})/d`. It is not orthogonal, only invertible. [`build_orthogonal_d4`] is the
//! `d = 4` orthogonal special case with rows `(φ₀, φ_a, φ_b, φ_c)`.
//!
//! The inverse `M⁻¹ = ∂φ/∂θ` is always computed numerically and is the Jacobian used to push Fisher
//! matrices between charts: `F_θ = (M⁻¹)ᵀ F_φ M⁻¹`. Columns of `M⁻¹` are addressed by label, never
//! by position.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::{Chart, FisherMatrix};

/// Tolerance on `M·M⁻¹ = I`.
pub const INVERSE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReparamKind {
    /// The `M_c` construction for even `d ≥ 4`.
    Mc,
    /// Orthogonal `d = 4` transform to `(φ₀, φ_a, φ_b, φ_c)`.
    D4Orthogonal,
}

impl ReparamKind {
    pub fn name(&self) -> &'static str {
        match self {
            ReparamKind::Mc => "mc",
            ReparamKind::D4Orthogonal => "d4-orthogonal",
        }
    }
}

/// An invertible linear chart. Row `k` of `forward` is the coefficient vector of parameter `labels[k]`;
/// index 0 is always the irrelevant direction.
#[derive(Clone, Debug, PartialEq)]
pub struct Reparametrization {
    kind: ReparamKind,
    forward: DMatrix<f64>,
    inverse: DMatrix<f64>,
    labels: Vec<String>,
}

impl Reparametrization {
    fn from_forward(kind: ReparamKind, forward: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        let d = forward.nrows();
        let inverse = forward
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("transformation matrix is not invertible".into()))?;
        let residual = (&forward * &inverse - DMatrix::identity(d, d)).abs().max();
        if residual > INVERSE_TOL {
            return Err(Error::InvalidArgument(format!(
                "numerical inverse is inaccurate (residual {residual:e})"
            )));
        }
        Ok(Self { kind, forward, inverse, labels })
    }

    pub fn kind(&self) -> ReparamKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.forward.nrows()
    }

    /// `M`, mapping phases to chart parameters.
    pub fn forward(&self) -> &DMatrix<f64> {
        &self.forward
    }

    /// `M⁻¹ = ∂φ/∂θ`.
    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Position of the irrelevant direction.
    pub fn irrelevant_index(&self) -> usize {
        0
    }

    /// Position of the average-phase parameter.
    pub fn average_index(&self) -> usize {
        1
    }

    /// Parameter indices kept after the irrelevant direction is dropped.
    pub fn kept_indices(&self) -> Vec<usize> {
        (1..self.dim()).collect()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Column of `M⁻¹` belonging to `label`.
    pub fn inverse_column(&self, label: &str) -> Option<DVector<f64>> {
        self.index_of(label).map(|k| self.inverse.column(k).into_owned())
    }

    /// `∂φ/∂θ` restricted to the kept parameters when `drop_irrelevant` is set.
    pub fn jacobian(&self, drop_irrelevant: bool) -> DMatrix<f64> {
        if drop_irrelevant {
            self.inverse.columns(1, self.dim() - 1).into_owned()
        } else {
            self.inverse.clone()
        }
    }

    /// `θ = M·φ`.
    pub fn to_chart(&self, phases: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), phases.len())?;
        Ok((&self.forward * DVector::from_column_slice(phases)).as_slice().to_vec())
    }

    /// `φ = M⁻¹·θ` for a full parameter vector (irrelevant direction included).
    pub fn to_phases(&self, params: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), params.len())?;
        Ok((&self.inverse * DVector::from_column_slice(params)).as_slice().to_vec())
    }

    /// Column sums of `M⁻¹`, i.e. `uᵀM⁻¹` with `u` the all-ones vector.
    pub fn inverse_column_sums(&self) -> Vec<f64> {
        self.inverse.row_sum().iter().copied().collect()
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { what: "chart dimension", expected, got });
    }
    Ok(())
}

fn check_mc_nodes(d: usize) -> Result<()> {
    if d < 4 {
        return Err(Error::TooFewNodes { d, min: 4 });
    }
    if !d.is_multiple_of(2) {
        return Err(Error::OddNodeCount(d));
    }
    Ok(())
}

/// The `M_c` chart for even `d ≥ 4`: `θ₀ = Σ(−1)^j φ_j / d`, `θ₁ = φ̄`, `θ_i = (φ_{i-1} − φ_{i+1})/d`.
pub fn build_mc(d: usize) -> Result<Reparametrization> {
    check_mc_nodes(d)?;
    let scale = 1.0 / d as f64;
    let mut m = DMatrix::zeros(d, d);
    for col in 0..d {
        // 1-based column index j = col + 1, coefficient (−1)^j
        m[(0, col)] = if col % 2 == 0 { -scale } else { scale };
        m[(1, col)] = scale;
    }
    for row in 2..d {
        m[(row, row - 2)] = scale;
        m[(row, row)] = -scale;
    }
    let labels = (0..d).map(|k| format!("theta{k}")).collect();
    Reparametrization::from_forward(ReparamKind::Mc, m, labels)
}

/// Orthogonal `d = 4` chart `(φ₀, φ_a, φ_b, φ_c)`; `φ_a` is twice the average phase.
pub fn build_orthogonal_d4() -> Reparametrization {
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        1.0, -1.0,  1.0, -1.0,
        1.0,  1.0,  1.0,  1.0,
        1.0,  1.0, -1.0, -1.0,
        1.0, -1.0, -1.0,  1.0,
    ]) * 0.5;
    let labels = ["phi0", "phi_a", "phi_b", "phi_c"].map(String::from).to_vec();
    Reparametrization::from_forward(ReparamKind::D4Orthogonal, m, labels)
        .expect("orthogonal matrix is invertible")
}

/// Result of comparing the closed-form `M_c⁻¹` element formula against the numerical inverse.
#[derive(Clone, Debug)]
pub struct InverseCheck {
    pub d: usize,
    pub closed_form: DMatrix<f64>,
    pub numerical: DMatrix<f64>,
    /// `(label, max |closed − numerical|)` for every column.
    pub column_discrepancy: Vec<(String, f64)>,
    pub max_discrepancy: f64,
    /// `max |M·M⁻¹ − I|` for the numerical inverse.
    pub identity_residual: f64,
}

/// Modified Heaviside step: 1 for `x ≥ 0`.
fn heaviside(x: i64) -> f64 {
    if x >= 0 {
        1.0
    } else {
        0.0
    }
}

fn parity_sign(i: usize) -> i64 {
    if i.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Closed-form element `(M_c⁻¹)_{ij}` with 1-based `i, j`, evaluated literally.
pub fn mc_inverse_closed_form_element(d: usize, i: usize, j: usize) -> f64 {
    match j {
        1 => parity_sign(i) as f64,
        2 => 1.0,
        _ => {
            let same_parity = if parity_sign(i) == parity_sign(j) { 1.0 } else { 0.0 };
            let i_even = if parity_sign(i) == 1 { 1.0 } else { 0.0 };
            let shift = (j as f64 - 2.0 + i_even) / d as f64;
            let (i, j) = (i as i64, j as i64);
            d as f64 * same_parity * (heaviside(j - i) * (1.0 - shift) - heaviside(i - j) * shift)
        }
    }
}

/// Evaluate the closed-form inverse of `M_c` and report how far it is from the numerical inverse.
/// The numerical inverse is the one used everywhere else.
pub fn closed_form_inverse_check(d: usize) -> Result<InverseCheck> {
    let r = build_mc(d)?;
    let closed_form = DMatrix::from_fn(d, d, |i, j| mc_inverse_closed_form_element(d, i + 1, j + 1));
    let numerical = r.inverse().clone();
    let column_discrepancy: Vec<(String, f64)> = (0..d)
        .map(|k| {
            let diff = (closed_form.column(k) - numerical.column(k)).abs().max();
            (r.labels()[k].clone(), diff)
        })
        .collect();
    let max_discrepancy = column_discrepancy.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    let identity_residual = (r.forward() * &numerical - DMatrix::identity(d, d)).abs().max();
    Ok(InverseCheck { d, closed_form, numerical, column_discrepancy, max_discrepancy, identity_residual })
}

/// Push a Fisher matrix from the original phase chart into `reparam`'s chart:
/// `F_θ = Jᵀ F_φ J` with `J = M⁻¹`. With `drop_irrelevant` the `θ₀` row and column are removed.
pub fn pushforward_fisher(
    fisher: &FisherMatrix,
    reparam: &Arc<Reparametrization>,
    drop_irrelevant: bool,
) -> Result<FisherMatrix> {
    if !matches!(fisher.chart(), Chart::Original) {
        return Err(Error::InvalidArgument(
            "pushforward expects a Fisher matrix in the original phase chart".into(),
        ));
    }
    check_dim(reparam.dim(), fisher.dim())?;
    let jac = reparam.jacobian(drop_irrelevant);
    let entries = jac.transpose() * fisher.entries() * &jac;
    FisherMatrix::new(
        entries,
        fisher.kind(),
        Chart::Transformed { reparam: Arc::clone(reparam), drop_irrelevant },
        fisher.meta().clone(),
    )
}

/// Inverse of [`pushforward_fisher`] for a full (not dropped) transformed matrix: `F_φ = Mᵀ F_θ M`.
pub fn pullback_fisher(fisher: &FisherMatrix) -> Result<FisherMatrix> {
    let reparam = match fisher.chart() {
        Chart::Transformed { reparam, drop_irrelevant: false } => reparam,
        _ => {
            return Err(Error::InvalidArgument(
                "pullback needs a transformed chart that keeps the irrelevant direction".into(),
            ))
        }
    };
    let m = reparam.forward();
    let entries = m.transpose() * fisher.entries() * m;
    FisherMatrix::new(entries, fisher.kind(), Chart::Original, fisher.meta().clone())
}
