//! Quantum Fisher information of two-qubit unitary families when only one
//! output qubit can be measured.
//!
//! A probe |Ψ⟩ on A⊗E goes through U_α = e^{−iαG}; the output BF is reduced to
//! B by tracing F. The crate evaluates J_B(α), its optimum over probes, the
//! closed forms for tensor-product and case-study generators, and continuity
//! bounds of the QFI with respect to states, generators and Liouvillians.

pub mod bottleneck;
pub mod continuity;
pub mod error;
pub mod generators;
pub mod probes;
pub mod qfi;
pub mod qmat;

pub use error::{Error, Result};
