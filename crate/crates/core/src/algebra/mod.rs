//! Base arithmetic: elements of `B ⊗ M_n(C)` with `B = M_d(C)`, the matricial
//! upper half-plane, and completely positive maps with their amplifications.
//!
//! Level-`n` elements are stored as `(n·d) × (n·d)` complex matrices with the
//! outer index `n` and inner index `d`, so the amplification of a fixed
//! `d × d` operator `X` is the Kronecker product `I_n ⊗ X`.

mod cpmap;
mod elem;
pub mod linalg;

pub use cpmap::{CombineOp, CpFlag, CpMap, CpSpec, Either};
pub use elem::{uhp_member, AlgElem};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix.
pub type Mat = nalgebra::DMatrix<C64>;
