//! Quantum Fisher information of the pure output state.
//!
//! For a pure state `|ψ(θ)⟩` the matrix is
//! `F_mn = 4·Re(⟨∂_m ψ|∂_n ψ⟩ − ⟨∂_m ψ|ψ⟩⟨ψ|∂_n ψ⟩)`, evaluated here with the analytic directional
//! derivatives of [`ghz_state::directional_state_derivative`]. Every amplitude of the output state has
//! constant modulus, so the result does not depend on the evaluation point in any linear chart.
//!
//! In the original chart and for even `d` the matrix annihilates the alternating vector
//! `(1, −1, …, 1, −1)` and has rank `d − 1`; [`rank_and_nullspace`] reports this.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fisher::{Chart, FisherKind, FisherMatrix, FisherMeta};
use crate::ghz_state::{self, check_nodes, check_photons, inner_product, PhaseVector, SparseKetState};
use crate::linalg;

/// Default relative singular-value threshold for [`rank_and_nullspace`].
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Assemble the pure-state QFIM from a state and its derivatives along each chart parameter.
pub fn qfim_from_derivatives(psi: &SparseKetState, derivs: &[SparseKetState]) -> Result<DMatrix<f64>> {
    if !psi.is_normalized() {
        return Err(Error::NotNormalized(psi.norm_sqr()));
    }
    let p = derivs.len();
    let berry: Vec<_> = derivs.iter().map(|dm| inner_product(psi, dm)).collect::<Result<_>>()?;
    let mut f = DMatrix::zeros(p, p);
    for m in 0..p {
        for n in m..p {
            let overlap = inner_product(&derivs[m], &derivs[n])?;
            let value = 4.0 * (overlap - berry[m].conj() * berry[n]).re;
            f[(m, n)] = value;
            f[(n, m)] = value;
        }
    }
    Ok(f)
}

/// QFIM of the output state at `phases`, in the parameters of `chart`.
pub fn qfim_pure(photons: usize, nodes: usize, phases: &PhaseVector, chart: &Chart) -> Result<FisherMatrix> {
    let psi = ghz_state::output_state(photons, nodes, phases)?;
    let jac = chart.jacobian(nodes)?;
    let derivs: Vec<_> = jac
        .column_iter()
        .map(|dir| ghz_state::directional_state_derivative(photons, nodes, phases, dir.as_slice()))
        .collect::<Result<_>>()?;
    let entries = qfim_from_derivatives(&psi, &derivs)?;
    FisherMatrix::new(
        entries,
        FisherKind::Quantum,
        chart.clone(),
        FisherMeta { photons, nodes, phases: Some(phases.clone()) },
    )
}

/// Closed-form QFIM in the original chart:
/// diagonal `(N²/d²)(d−1)`, cyclic neighbours `(N²/d²)(d/2−1)`, all other entries `−N²/d²`.
pub fn qfim_closed_form_original(photons: usize, nodes: usize) -> Result<FisherMatrix> {
    check_photons(photons)?;
    check_nodes(nodes)?;
    let (n, d) = (photons as f64, nodes as f64);
    let unit = n * n / (d * d);
    let entries = DMatrix::from_fn(nodes, nodes, |i, j| {
        let gap = i.abs_diff(j);
        if gap == 0 {
            unit * (d - 1.0)
        } else if gap == 1 || gap == nodes - 1 {
            unit * (d / 2.0 - 1.0)
        } else {
            -unit
        }
    });
    FisherMatrix::new(entries, FisherKind::Quantum, Chart::Original, FisherMeta { photons, nodes, phases: None })
}

#[derive(Clone, Debug)]
pub struct RankReport {
    pub rank: usize,
    /// Orthonormal basis of the null space, each vector with its first significant entry positive.
    pub null_basis: Vec<DVector<f64>>,
    /// Relative threshold on singular values.
    pub tolerance: f64,
    /// Singular values in descending order.
    pub singular_values: Vec<f64>,
}

impl RankReport {
    pub fn dim(&self) -> usize {
        self.rank + self.null_basis.len()
    }

    pub fn is_singular(&self) -> bool {
        !self.null_basis.is_empty()
    }
}

/// Numerical rank: the number of singular values above `tol · σ_max`. An all-zero matrix has rank 0.
pub fn matrix_rank_and_nullspace(m: &DMatrix<f64>, tol: f64) -> RankReport {
    let p = m.nrows();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let sigma = &svd.singular_values;
    let largest = sigma.max();
    let cutoff = tol * largest;
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let mut rank = 0;
    let mut null_basis = Vec::new();
    for &k in &order {
        if largest > 0.0 && sigma[k] > cutoff {
            rank += 1;
        } else {
            null_basis.push(linalg::canonical_sign(v_t.row(k).transpose()));
        }
    }
    debug_assert_eq!(rank + null_basis.len(), p);
    RankReport {
        rank,
        null_basis,
        tolerance: tol,
        singular_values: order.iter().map(|&k| sigma[k]).collect(),
    }
}

pub fn rank_and_nullspace(fisher: &FisherMatrix, tol: f64) -> RankReport {
    matrix_rank_and_nullspace(fisher.entries(), tol)
}

/// Independent finite-difference oracles for tests and cross-checks.
pub mod oracle {
    use super::*;

    /// QFIM with central-difference state derivatives `(ψ(φ+h·v) − ψ(φ−h·v)) / 2h` along every chart
    /// direction `v`, assembled without going through the analytic path.
    pub fn qfim_finite_difference_oracle(
        photons: usize,
        nodes: usize,
        phases: &PhaseVector,
        chart: &Chart,
        step: f64,
    ) -> Result<DMatrix<f64>> {
        if !(1e-8..=1e-3).contains(&step) {
            return Err(Error::InvalidArgument(format!("finite-difference step {step} outside [1e-8, 1e-3]")));
        }
        let psi = ghz_state::output_state(photons, nodes, phases)?;
        let jac = chart.jacobian(nodes)?;
        let shifted = |dir: &[f64], sign: f64| {
            let values = phases.as_slice().iter().zip(dir).map(|(p, v)| p + sign * step * v).collect();
            ghz_state::output_state(photons, nodes, &PhaseVector::new(values))
        };
        let mut derivs = Vec::with_capacity(jac.ncols());
        for dir in jac.column_iter() {
            let plus = shifted(dir.as_slice(), 1.0)?;
            let minus = shifted(dir.as_slice(), -1.0)?;
            derivs.push(plus.add_scaled(&minus, -1.0)?.scale(0.5 / step));
        }
        let p = derivs.len();
        let dot = |a: &SparseKetState, b: &SparseKetState| -> num_complex::Complex64 {
            a.terms().map(|(label, x)| x.conj() * b.amplitude(label)).sum()
        };
        Ok(DMatrix::from_fn(p, p, |m, n| {
            let a = dot(&derivs[m], &derivs[n]);
            let b = dot(&derivs[m], &psi) * dot(&psi, &derivs[n]);
            4.0 * (a - b).re
        }))
    }
}
