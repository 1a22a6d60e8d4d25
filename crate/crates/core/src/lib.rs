//! Fisher-information toolkit for distributed phase sensing with polarization GHZ states.
//!
//! An `N`-photon polarization Bell state is spread over a ring of `d` nodes, each node imprinting an
//! unknown phase `φ_j`. The crate covers the full chain from state to bound:
//!
//! - [`ghz_state`]: sparse output states and their analytic phase derivatives.
//! - [`qfim`]: pure-state quantum Fisher information, closed forms and rank diagnostics.
//! - [`reparam`]: linear charts that isolate the irrelevant alternating direction `θ₀`.
//! - [`measurement`]: the `σ_x` projective measurement, its `4d` outcomes and classical Fisher matrix.
//! - [`crb`]: exact and inversion-free ("weak") Cramér-Rao bounds and the Heisenberg sweep.
//! - [`montecarlo`]: seeded multinomial sampling and maximum-likelihood estimation of the average phase.
//! - [`io`]: JSON/CSV documents for every artifact above.
//!
//! In the original phase chart both Fisher matrices are singular for even `d`; in the `M_c` chart the
//! average phase `θ₁` decouples and its bound is `1/N` for any number of nodes.

#![forbid(unsafe_code)]

pub mod crb;
pub mod error;
pub mod fisher;
pub mod ghz_state;
pub mod io;
pub mod linalg;
pub mod measurement;
pub mod montecarlo;
pub mod qfim;
pub mod reparam;

pub use error::{Error, Result};
pub use fisher::{Chart, FisherKind, FisherMatrix, FisherMeta};
pub use ghz_state::{KetLabel, PhaseVector, Polarization, SparseKetState};
pub use reparam::Reparametrization;
