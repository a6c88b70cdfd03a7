//! Numerical engine for operator-valued noncommutative probability over
//! `B = M_d(C)`.
//!
//! Distributions are represented as [`Law`] trees whose leaves are point
//! masses, atomic scalar measures, finite-dimensional realizations,
//! Bernoulli and semicircular laws, and whose nodes are the Boolean,
//! monotone, orthogonal, free and s-free additive convolutions together with
//! Boolean and free convolution powers by completely positive maps, the
//! `B_s` transform and the `Phi` transform. Every law can be evaluated
//! through its fully matricial reciprocal Cauchy transform at any level `n`.
//!
//! Two independent sources of ground truth back the analytic formulas: the
//! truncated amalgamated free-product Fock space in [`fock`] and the
//! interval-partition (Boolean cumulant) algebra in [`combinatorics`].

pub mod algebra;
pub mod combinatorics;
pub mod convolve;
mod error;
pub mod fock;
pub mod json;
pub mod law;
pub mod realization;
pub mod sampling;
pub mod solver;
pub mod transforms;
pub mod zoo;

pub use algebra::{uhp_member, AlgElem, CpFlag, CpMap, Mat, C64};
pub use error::{Error, Result};
pub use law::Law;
pub use realization::{JointRealization, Realization};
pub use solver::SolverSettings;
