//! Distributed `N`-photon GHZ states on a ring of `d` nodes.
//!
//! The input state is an equal superposition of `2d` kets: for every cyclic node pair `(j, j+1)` one
//! ket with all `N` photons horizontally polarized (`N/2` at each node) and one with all of them
//! vertical. Only the vertical kets pick up phase, `exp(i·(N/2)·(φ_j + φ_{j+1}))`, so a state is fully
//! described by `2d` complex amplitudes over orthonormal [`KetLabel`]s.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `⟨ψ|ψ⟩ = 1`.
pub const NORM_TOL: f64 = 1e-12;

pub(crate) fn check_photons(n: usize) -> Result<()> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidPhotonCount(n));
    }
    Ok(())
}

pub(crate) fn check_nodes(d: usize) -> Result<()> {
    if d < 3 {
        return Err(Error::TooFewNodes { d, min: 3 });
    }
    Ok(())
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { what, expected, got });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => f.write_str("H"),
            Polarization::V => f.write_str("V"),
        }
    }
}

/// One basis ket: `N/2` photons at node `j` and `N/2` at node `j+1 (mod d)`, all with the same
/// polarization. Node indices are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KetLabel {
    first: usize,
    second: usize,
    pol: Polarization,
}

impl KetLabel {
    /// Label for the pair starting at node `j` (1-based) on a ring of `d` nodes.
    pub fn new(j: usize, d: usize, pol: Polarization) -> Result<Self> {
        if j == 0 || j > d {
            return Err(Error::InvalidArgument(format!("node index {j} outside 1..={d}")));
        }
        Ok(Self { first: j, second: j % d + 1, pol })
    }

    /// Parse a label from an explicit node pair, which must be cyclically adjacent.
    pub fn from_pair(pair: (usize, usize), d: usize, pol: Polarization) -> Result<Self> {
        let label = Self::new(pair.0, d, pol)?;
        if label.second != pair.1 {
            return Err(Error::InvalidArgument(format!(
                "nodes ({}, {}) are not a cyclic pair on {d} nodes",
                pair.0, pair.1
            )));
        }
        Ok(label)
    }

    pub fn pair(&self) -> (usize, usize) {
        (self.first, self.second)
    }

    /// 1-based index `j` of the pair `(j, j+1)`.
    pub fn pair_index(&self) -> usize {
        self.first
    }

    pub fn polarization(&self) -> Polarization {
        self.pol
    }

    fn shifted(&self, shift: usize, d: usize) -> Self {
        let j = (self.first - 1 + shift) % d + 1;
        Self { first: j, second: j % d + 1, pol: self.pol }
    }
}

impl fmt::Display for KetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}{}", self.pol, self.first, self.pol, self.second)
    }
}

/// Real phases `φ_1..φ_d` in radians. No wrapping is applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    pub fn uniform(d: usize, value: f64) -> Self {
        Self(vec![value; d])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Average phase `φ̄ = Σφ_j / d`.
    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    /// Cyclic pair sums `x_j = φ_j + φ_{j+1}`, with `φ_{d+1} = φ_1`.
    pub fn pair_sums(&self) -> Vec<f64> {
        let d = self.0.len();
        (0..d).map(|j| self.0[j] + self.0[(j + 1) % d]).collect()
    }
}

impl From<Vec<f64>> for PhaseVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// Complex amplitudes over at most `2d` orthonormal basis kets.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseKetState {
    photons: usize,
    nodes: usize,
    terms: BTreeMap<KetLabel, Complex64>,
}

impl SparseKetState {
    /// Assemble a state from explicit terms. Labels must belong to a ring of `nodes` nodes.
    /// No normalization is enforced, so derivative states can be represented too.
    pub fn from_terms(
        photons: usize,
        nodes: usize,
        terms: impl IntoIterator<Item = (KetLabel, Complex64)>,
    ) -> Result<Self> {
        check_photons(photons)?;
        check_nodes(nodes)?;
        let mut map = BTreeMap::new();
        for (label, amp) in terms {
            if label.first > nodes || label.second != label.first % nodes + 1 {
                return Err(Error::InvalidArgument(format!("label {label} does not fit {nodes} nodes")));
            }
            if map.insert(label, amp).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate label {label}")));
            }
        }
        Ok(Self { photons, nodes, terms: map })
    }

    pub fn photons(&self) -> usize {
        self.photons
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, label: &KetLabel) -> Complex64 {
        self.terms.get(label).copied().unwrap_or_default()
    }

    /// Terms in label order (pair index, then `H` before `V`).
    pub fn terms(&self) -> impl Iterator<Item = (&KetLabel, &Complex64)> {
        self.terms.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    /// Largest amplitude modulus, used to detect the zero state.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Relabel nodes `j → j + shift (mod d)`.
    pub fn relabel_cyclic(&self, shift: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(label, amp)| (label.shifted(shift, self.nodes), *amp))
            .collect();
        Self { photons: self.photons, nodes: self.nodes, terms }
    }

    fn check_same_system(&self, other: &Self) -> Result<()> {
        check_len("photon count", self.photons, other.photons)?;
        check_len("node count", self.nodes, other.nodes)
    }

    /// `self + scale·other`, label by label.
    pub fn add_scaled(&self, other: &Self, scale: f64) -> Result<Self> {
        self.check_same_system(other)?;
        let mut terms = self.terms.clone();
        for (label, amp) in &other.terms {
            *terms.entry(*label).or_default() += amp * scale;
        }
        Ok(Self { photons: self.photons, nodes: self.nodes, terms })
    }

    pub fn scale(&self, factor: f64) -> Self {
        let terms = self.terms.iter().map(|(l, a)| (*l, a * factor)).collect();
        Self { photons: self.photons, nodes: self.nodes, terms }
    }
}

/// Equal-weight input state: `2d` terms, each amplitude `1/√(2d)`, zero phase.
pub fn build_input_state(photons: usize, nodes: usize) -> Result<SparseKetState> {
    check_photons(photons)?;
    check_nodes(nodes)?;
    let amp = Complex64::new(1.0 / ((2 * nodes) as f64).sqrt(), 0.0);
    let mut terms = BTreeMap::new();
    for j in 1..=nodes {
        for pol in [Polarization::H, Polarization::V] {
            terms.insert(KetLabel::new(j, nodes, pol)?, amp);
        }
    }
    Ok(SparseKetState { photons, nodes, terms })
}

/// Imprint the node phases: every `V` ket of pair `(j, j+1)` is multiplied by
/// `exp(i·(N/2)·(φ_j + φ_{j+1}))`; `H` kets are untouched.
pub fn apply_phases(state: &SparseKetState, phases: &PhaseVector) -> Result<SparseKetState> {
    check_len("phase vector", state.nodes, phases.len())?;
    let half_n = state.photons as f64 / 2.0;
    let sums = phases.pair_sums();
    let terms = state
        .terms
        .iter()
        .map(|(label, amp)| {
            let amp = match label.pol {
                Polarization::H => *amp,
                Polarization::V => amp * Complex64::cis(half_n * sums[label.first - 1]),
            };
            (*label, amp)
        })
        .collect();
    Ok(SparseKetState { photons: state.photons, nodes: state.nodes, terms })
}

/// Output state `|Ψ⟩ₒ` for the given phases.
pub fn output_state(photons: usize, nodes: usize, phases: &PhaseVector) -> Result<SparseKetState> {
    apply_phases(&build_input_state(photons, nodes)?, phases)
}

/// Analytic directional derivative `Σ_i v_i ∂|Ψ⟩/∂φ_i` of the output state.
///
/// The `V` ket of pair `(j, j+1)` is scaled by `i·(N/2)·(v_j + v_{j+1})`; `H` kets do not depend on
/// the phases and are absent from the result.
pub fn directional_state_derivative(
    photons: usize,
    nodes: usize,
    phases: &PhaseVector,
    direction: &[f64],
) -> Result<SparseKetState> {
    check_len("direction", nodes, direction.len())?;
    if direction.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidArgument("direction vector must be nonzero".into()));
    }
    let out = output_state(photons, nodes, phases)?;
    let half_n = photons as f64 / 2.0;
    let terms = out
        .terms
        .into_iter()
        .filter(|(label, _)| label.pol == Polarization::V)
        .map(|(label, amp)| {
            let j = label.first - 1;
            let rate = half_n * (direction[j] + direction[(j + 1) % nodes]);
            (label, amp * Complex64::new(0.0, rate))
        })
        .collect();
    Ok(SparseKetState { photons, nodes, terms })
}

/// `⟨a|b⟩`; labels missing from either state contribute nothing.
pub fn inner_product(a: &SparseKetState, b: &SparseKetState) -> Result<Complex64> {
    a.check_same_system(b)?;
    Ok(a
        .terms
        .iter()
        .filter_map(|(label, amp)| b.terms.get(label).map(|other| amp.conj() * other))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn label(j: usize, d: usize, pol: Polarization) -> KetLabel {
        KetLabel::new(j, d, pol).unwrap()
    }

    #[test]
    fn input_state_has_2d_equal_terms() {
        let s = build_input_state(2, 4).unwrap();
        assert_eq!(s.len(), 8);
        for (_, amp) in s.terms() {
            assert_abs_diff_eq!(amp.re, 1.0 / (2.0 * 2f64.sqrt()), epsilon = 1e-15);
            assert_eq!(amp.im, 0.0);
        }
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-12);

        let s = build_input_state(4, 6).unwrap();
        assert_eq!(s.len(), 12);
        for (_, amp) in s.terms() {
            assert_abs_diff_eq!(amp.re, 1.0 / 12f64.sqrt(), epsilon = 1e-15);
        }
    }

    #[test]
    fn labels_are_distinct_and_cyclic() {
        let d = 5;
        let s = build_input_state(2, d).unwrap();
        let labels: std::collections::BTreeSet<_> = s.terms().map(|(l, _)| *l).collect();
        assert_eq!(labels.len(), 2 * d);
        assert_eq!(label(5, 5, Polarization::H).pair(), (5, 1));
        assert!(KetLabel::from_pair((5, 1), 5, Polarization::V).is_ok());
        assert!(KetLabel::from_pair((1, 3), 5, Polarization::V).is_err());
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(build_input_state(3, 4), Err(Error::InvalidPhotonCount(3))));
        assert!(matches!(build_input_state(0, 4), Err(Error::InvalidPhotonCount(0))));
        assert!(matches!(build_input_state(2, 2), Err(Error::TooFewNodes { d: 2, min: 3 })));
        let msg = build_input_state(2, 2).unwrap_err().to_string();
        assert!(msg.contains("at least 3"), "{msg}");
    }

    #[test]
    fn zero_phases_leave_state_unchanged() {
        let s = build_input_state(2, 4).unwrap();
        assert_eq!(apply_phases(&s, &PhaseVector::zeros(4)).unwrap(), s);
    }

    #[test]
    fn v_terms_pick_up_pair_sum_phase() {
        let phi = PhaseVector::new(vec![0.1, 0.25, -0.4, 0.7]);
        let out = output_state(2, 4, &phi).unwrap();
        let v12 = out.amplitude(&label(1, 4, Polarization::V));
        assert_abs_diff_eq!(v12.arg(), 0.35, epsilon = 1e-14);
        let h12 = out.amplitude(&label(1, 4, Polarization::H));
        assert_eq!(h12.arg(), 0.0);

        let out = output_state(4, 4, &PhaseVector::new(vec![PI / 2.0, 0.0, 0.0, 0.0])).unwrap();
        let expected = Complex64::cis(PI) / 8f64.sqrt();
        for j in [4, 1] {
            let amp = out.amplitude(&label(j, 4, Polarization::V));
            assert_abs_diff_eq!(amp.re, expected.re, epsilon = 1e-15);
            assert_abs_diff_eq!(amp.im, expected.im, epsilon = 1e-15);
        }
        let v23 = out.amplitude(&label(2, 4, Polarization::V));
        assert_abs_diff_eq!(v23.im, 0.0, epsilon = 1e-15);
        assert!(v23.re > 0.0);
    }

    #[test]
    fn phases_must_match_node_count() {
        let s = build_input_state(2, 4).unwrap();
        assert!(matches!(
            apply_phases(&s, &PhaseVector::zeros(3)),
            Err(Error::DimensionMismatch { expected: 4, got: 3, .. })
        ));
        assert!(directional_state_derivative(2, 4, &PhaseVector::zeros(4), &[1.0; 5]).is_err());
        assert!(directional_state_derivative(2, 4, &PhaseVector::zeros(4), &[0.0; 4]).is_err());
    }

    #[test]
    fn alternating_direction_is_null() {
        for (n, d) in [(2, 4), (4, 6), (6, 8), (2, 10)] {
            let v: Vec<f64> = (0..d).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
            let phi = PhaseVector::new((0..d).map(|i| 0.3 * i as f64 - 0.2).collect());
            let deriv = directional_state_derivative(n, d, &phi, &v).unwrap();
            assert!(deriv.max_abs() < 1e-15, "(N={n}, d={d})");
        }
    }

    #[test]
    fn derivative_along_first_node() {
        let mut e1 = vec![0.0; 4];
        e1[0] = 1.0;
        let deriv = directional_state_derivative(2, 4, &PhaseVector::zeros(4), &e1).unwrap();
        let amp = 1.0 / 8f64.sqrt();
        for j in 1..=4 {
            let c = deriv.amplitude(&label(j, 4, Polarization::V));
            let expected = if j == 1 || j == 4 { amp } else { 0.0 };
            assert_abs_diff_eq!(c.re, 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(c.im, expected, epsilon = 1e-15);
            assert_eq!(deriv.amplitude(&label(j, 4, Polarization::H)), Complex64::default());
        }
    }

    #[test]
    fn overlaps() {
        let input = build_input_state(2, 4).unwrap();
        let out = output_state(2, 4, &PhaseVector::new(vec![0.3, -1.2, 0.5, 2.0])).unwrap();
        assert_abs_diff_eq!(inner_product(&out, &out).unwrap().re, 1.0, epsilon = 1e-12);
        let same = output_state(2, 4, &PhaseVector::zeros(4)).unwrap();
        assert_abs_diff_eq!(inner_product(&input, &same).unwrap().re, 1.0, epsilon = 1e-12);

        let flipped = output_state(2, 4, &PhaseVector::new(vec![PI, 0.0, 0.0, 0.0])).unwrap();
        let ov = inner_product(&input, &flipped).unwrap();
        assert_abs_diff_eq!(ov.re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ov.im, 0.0, epsilon = 1e-15);

        let other = build_input_state(4, 4).unwrap();
        assert!(inner_product(&input, &other).is_err());
    }

    #[test]
    fn cyclic_relabel_preserves_input() {
        for d in [3, 4, 7] {
            let s = build_input_state(4, d).unwrap();
            for shift in 0..d {
                assert_eq!(s.relabel_cyclic(shift), s);
            }
        }
    }
}
