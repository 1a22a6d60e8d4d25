//! Cramér-Rao bounds for linear combinations `αᵀθ` of the chart parameters.
//!
//! The exact bound `αᵀF⁻¹α / 𝒩` needs an invertible Fisher matrix. The weak bound
//! `(αᵀα)² / (𝒩·αᵀFα)` needs no inverse and never exceeds the exact one; the two coincide exactly when
//! `α` is an eigenvector of `F`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fisher::{Chart, FisherKind, FisherMatrix};
use crate::ghz_state::{check_photons, PhaseVector};
use crate::linalg;
use crate::measurement;
use crate::qfim;

/// `F` counts as invertible when its smallest eigenvalue exceeds this fraction of the largest.
pub const INVERTIBILITY_RTOL: f64 = 1e-9;
/// Residual `‖Sα − λα‖/‖α‖` under which `α` is reported as an eigenvector.
pub const EIGENVECTOR_TOL: f64 = 1e-9;

/// Weights `α` of a linear combination. The usual convention `Σ|α_i| = 1` is not enforced.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidArgument("weight vector must be nonzero".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("weight vector must be finite".into()));
        }
        Ok(Self(values))
    }

    /// Unit vector selecting parameter `index` out of `dim`.
    pub fn unit(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidArgument(format!("index {index} outside dimension {dim}")));
        }
        let mut v = vec![0.0; dim];
        v[index] = 1.0;
        Self::new(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.0)
    }
}

fn check_shots(shots: u64) -> Result<f64> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shot count must be at least 1".into()));
    }
    Ok(shots as f64)
}

fn check_weight(fisher: &FisherMatrix, alpha: &WeightVector) -> Result<()> {
    if alpha.len() != fisher.dim() {
        return Err(Error::DimensionMismatch { what: "weight vector", expected: fisher.dim(), got: alpha.len() });
    }
    Ok(())
}

/// `F⁻¹`, refusing matrices whose smallest eigenvalue is at most [`INVERTIBILITY_RTOL`] of the largest.
pub fn invert_fisher(fisher: &FisherMatrix) -> Result<DMatrix<f64>> {
    let (smallest, largest) = linalg::min_max_eigenvalues(fisher.entries());
    if largest <= 0.0 || smallest <= INVERTIBILITY_RTOL * largest {
        return Err(Error::SingularMatrix { smallest, largest });
    }
    linalg::spd_inverse(fisher.entries())
}

/// Exact bound `αᵀF⁻¹α / 𝒩` on `Var(αᵀθ)`.
pub fn exact_crb(fisher: &FisherMatrix, alpha: &WeightVector, shots: u64) -> Result<f64> {
    let shots = check_shots(shots)?;
    check_weight(fisher, alpha)?;
    let inv = invert_fisher(fisher)?;
    let a = alpha.vector();
    Ok(a.dot(&(inv * &a)) / shots)
}

/// Weak bound `(αᵀα)² / (𝒩·αᵀFα)` on `Var(αᵀθ)`; valid for singular `F` as long as `α` is not in
/// its null space.
pub fn weak_crb(fisher: &FisherMatrix, alpha: &WeightVector, shots: u64) -> Result<f64> {
    let shots = check_shots(shots)?;
    check_weight(fisher, alpha)?;
    let a = alpha.vector();
    let norm2 = a.norm_squared();
    let quad = a.dot(&(fisher.entries() * &a));
    let (_, largest) = linalg::min_max_eigenvalues(fisher.entries());
    if quad <= 1e-12 * norm2 * largest.max(f64::MIN_POSITIVE) {
        return Err(Error::NullDirection { alpha: alpha.as_slice().to_vec(), quad });
    }
    Ok(norm2 * norm2 / (shots * quad))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub kind: FisherKind,
    pub chart: &'static str,
    pub photons: usize,
    pub nodes: usize,
}

/// Both bounds for one weight vector. A bound that cannot be formed is `None` with the reason kept.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub weight: WeightVector,
    pub shots: u64,
    pub exact_bound: Option<f64>,
    pub exact_unavailable: Option<String>,
    pub weak_bound: Option<f64>,
    pub weak_unavailable: Option<String>,
    pub provenance: Provenance,
}

impl BoundReport {
    /// `exact − weak`, when both exist.
    pub fn equality_gap(&self) -> Option<f64> {
        Some(self.exact_bound? - self.weak_bound?)
    }
}

/// Evaluate both bounds. Fails only on argument errors; a singular matrix or null-space weight leaves
/// the corresponding bound unavailable.
pub fn bound_report(fisher: &FisherMatrix, alpha: &WeightVector, shots: u64) -> Result<BoundReport> {
    check_shots(shots)?;
    check_weight(fisher, alpha)?;
    let split = |r: Result<f64>| match r {
        Ok(v) => Ok((Some(v), None)),
        Err(e @ (Error::SingularMatrix { .. } | Error::NullDirection { .. } | Error::NotPositiveDefinite(_))) => {
            Ok((None, Some(e.to_string())))
        }
        Err(e) => Err(e),
    };
    let (exact_bound, exact_unavailable) = split(exact_crb(fisher, alpha, shots))?;
    let (weak_bound, weak_unavailable) = split(weak_crb(fisher, alpha, shots))?;
    Ok(BoundReport {
        weight: alpha.clone(),
        shots,
        exact_bound,
        exact_unavailable,
        weak_bound,
        weak_unavailable,
        provenance: Provenance {
            kind: fisher.kind(),
            chart: fisher.chart().name(),
            photons: fisher.meta().photons,
            nodes: fisher.meta().nodes,
        },
    })
}

/// Outcome of comparing the weak and exact bounds on a positive-definite matrix `S`.
#[derive(Clone, Debug)]
pub struct InequalityReport {
    /// `(αᵀα)² / αᵀSα`
    pub weak: f64,
    /// `αᵀS⁻¹α`
    pub exact: f64,
    /// `exact − weak`, never negative beyond rounding.
    pub gap: f64,
    /// Rayleigh quotient `λ = αᵀSα / αᵀα`.
    pub rayleigh: f64,
    /// `‖Sα − λα‖ / ‖α‖`
    pub eigen_residual: f64,
    pub is_eigenvector: bool,
    /// `(βᵀγ)²` and `(βᵀβ)(γᵀγ)` with `β = S^{1/2}α`, `γ = S^{−1/2}α`.
    pub cauchy_schwarz: (f64, f64),
    /// `1 / S₁₁`
    pub diagonal_weak: f64,
    /// `(S⁻¹)₁₁`
    pub diagonal_exact: f64,
}

impl InequalityReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.gap >= -tol
    }

    pub fn diagonal_holds(&self, tol: f64) -> bool {
        self.diagonal_exact - self.diagonal_weak >= -tol
    }
}

pub fn weak_vs_exact_check(s: &DMatrix<f64>, alpha: &[f64]) -> Result<InequalityReport> {
    if !s.is_square() || s.nrows() != alpha.len() {
        return Err(Error::DimensionMismatch { what: "weight vector", expected: s.nrows(), got: alpha.len() });
    }
    let asym = linalg::max_asymmetry(s);
    if asym > 1e-10 {
        return Err(Error::NotSymmetric(asym));
    }
    let a = WeightVector::new(alpha.to_vec())?.vector();
    let inv = linalg::spd_inverse(s)?;
    let norm2 = a.norm_squared();
    let quad = a.dot(&(s * &a));
    let weak = norm2 * norm2 / quad;
    let exact = a.dot(&(&inv * &a));
    let rayleigh = quad / norm2;
    let eigen_residual = (s * &a - &a * rayleigh).norm() / norm2.sqrt();

    let beta = linalg::spd_power(s, 0.5)? * &a;
    let gamma = linalg::spd_power(s, -0.5)? * &a;
    let cauchy_schwarz = (beta.dot(&gamma).powi(2), beta.norm_squared() * gamma.norm_squared());

    Ok(InequalityReport {
        weak,
        exact,
        gap: exact - weak,
        rayleigh,
        eigen_residual,
        is_eigenvector: eigen_residual <= EIGENVECTOR_TOL,
        cauchy_schwarz,
        diagonal_weak: 1.0 / s[(0, 0)],
        diagonal_exact: inv[(0, 0)],
    })
}

/// One row of the Heisenberg-scaling table: standard-deviation bounds on the average phase `θ₁` for a
/// single shot.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub photons: usize,
    pub nodes: usize,
    /// `√((F_Q⁻¹)_{θ₁θ₁})`
    pub qcrb: f64,
    /// `√((F_C⁻¹)_{θ₁θ₁})` for the `σ_x` measurement
    pub ccrb: f64,
    /// `ccrb / qcrb`
    pub ratio: f64,
}

/// Bounds on `θ₁` in the `M_c` chart for every `(N, d)` pair of the grid.
pub fn heisenberg_sweep(photon_list: &[usize], node_list: &[usize]) -> Result<Vec<SweepRow>> {
    for &n in photon_list {
        check_photons(n)?;
    }
    for &d in node_list {
        if d % 2 != 0 {
            return Err(Error::OddNodeCount(d));
        }
        if d < 4 {
            return Err(Error::TooFewNodes { d, min: 4 });
        }
    }
    let mut rows = Vec::with_capacity(photon_list.len() * node_list.len());
    for &n in photon_list {
        for &d in node_list {
            let chart = Chart::mc(d)?;
            let phases = PhaseVector::zeros(d);
            let alpha = WeightVector::unit(d - 1, 0)?;
            let quantum = qfim::qfim_pure(n, d, &phases, &chart)?;
            let classical = measurement::cfim(n, d, &phases, &chart)?;
            let qcrb = exact_crb(&quantum, &alpha, 1)?.sqrt();
            let ccrb = exact_crb(&classical, &alpha, 1)?.sqrt();
            rows.push(SweepRow { photons: n, nodes: d, qcrb, ccrb, ratio: ccrb / qcrb });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::FisherMeta;
    use approx::assert_abs_diff_eq;

    fn fisher(entries: DMatrix<f64>, nodes: usize) -> FisherMatrix {
        FisherMatrix::new(entries, FisherKind::Quantum, Chart::Original, FisherMeta { photons: 2, nodes, phases: None })
            .unwrap()
    }

    #[test]
    fn identity_bounds() {
        let f = qfim::qfim_pure(2, 4, &PhaseVector::zeros(4), &Chart::orthogonal_d4()).unwrap();
        // φ̄ = φ_a / 2
        let alpha = WeightVector::new(vec![0.5, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(exact_crb(&f, &alpha, 1).unwrap().sqrt(), 0.5, epsilon = 1e-12);
        let unit = WeightVector::new(vec![0.6, 0.8, 0.0]).unwrap();
        for shots in [1, 10, 100] {
            assert_abs_diff_eq!(weak_crb(&f, &unit, shots).unwrap(), 1.0 / shots as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn singular_matrix_is_refused() {
        let f = qfim::qfim_closed_form_original(2, 4).unwrap();
        let alpha = WeightVector::new(vec![0.25; 4]).unwrap();
        let err = exact_crb(&f, &alpha, 1).unwrap_err();
        assert!(matches!(err, Error::SingularMatrix { .. }));
        assert!(err.to_string().contains("reparametrize"));
    }

    #[test]
    fn weak_bound_on_classical_matrix() {
        let f = measurement::cfim(2, 4, &PhaseVector::zeros(4), &Chart::Original).unwrap();
        let avg = WeightVector::new(vec![0.25; 4]).unwrap();
        assert_abs_diff_eq!(weak_crb(&f, &avg, 1).unwrap(), 0.25, epsilon = 1e-14);
        let null = WeightVector::new(vec![0.25, -0.25, 0.25, -0.25]).unwrap();
        assert!(matches!(weak_crb(&f, &null, 1), Err(Error::NullDirection { .. })));

        let report = bound_report(&f, &avg, 1).unwrap();
        assert!(report.exact_bound.is_none());
        assert!(report.exact_unavailable.as_deref().unwrap().contains("reparametrize"));
        assert_abs_diff_eq!(report.weak_bound.unwrap(), 0.25, epsilon = 1e-14);
        assert!(report.equality_gap().is_none());
    }

    #[test]
    fn argument_errors() {
        let f = fisher(DMatrix::identity(3, 3), 3);
        assert!(WeightVector::new(vec![0.0; 3]).is_err());
        let alpha = WeightVector::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(exact_crb(&f, &alpha, 1), Err(Error::DimensionMismatch { .. })));
        let alpha = WeightVector::unit(3, 0).unwrap();
        assert!(exact_crb(&f, &alpha, 0).is_err());
    }

    #[test]
    fn eigenvector_equality() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5, 0.5]));
        let r = weak_vs_exact_check(&s, &[1.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(r.weak, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.exact, 1.0, epsilon = 1e-14);
        assert!(r.is_eigenvector);

        let r = weak_vs_exact_check(&s, &[1.0, 1.0, 0.0]).unwrap();
        assert!(!r.is_eigenvector);
        assert!(r.gap > 0.1);
        assert!(r.cauchy_schwarz.0 <= r.cauchy_schwarz.1 + 1e-12);
        assert!(r.diagonal_holds(1e-12));
    }

    #[test]
    fn non_pd_rejected() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -0.5]));
        assert!(weak_vs_exact_check(&s, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn sweep_rows() {
        let rows = heisenberg_sweep(&[2, 4, 6], &[4, 6, 8]).unwrap();
        assert_eq!(rows.len(), 9);
        for row in &rows {
            assert_abs_diff_eq!(row.qcrb, 1.0 / row.photons as f64, epsilon = 1e-10);
            assert_abs_diff_eq!(row.ccrb, 1.0 / row.photons as f64, epsilon = 1e-10);
            assert_abs_diff_eq!(row.ratio, 1.0, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(rows[0].qcrb, 0.5, epsilon = 1e-12);
        assert!(heisenberg_sweep(&[3], &[4]).is_err());
        assert!(heisenberg_sweep(&[2], &[5]).is_err());
    }
}
