//! Coherent and two-mode squeezed states in truncated Fock spaces.
//!
//! Four settings are covered: the untruncated oscillator (used only as an
//! analytic reference), the Pegg-Barnett space `|0>...|S>`, and its
//! q-deformed counterpart at `q = exp(2πi/(S+1))`, where the deformed ladder
//! terminates on its own at `|S>`.
//!
//! - [`qcore`]: deformation parameters, q-numbers, q-factorials, signed-log reals
//! - [`states`]: coherent and squeezed state constructors, the `K(n)` series
//! - [`phase`]: phase-basis amplitudes and statistics
//! - [`operators`]: dense operator matrices and algebra residuals
//! - [`entanglement`]: entropies, `S`-required search, saturation ratios
//! - [`cli`]: the `qpb-sim` experiment harness

pub mod cli;
pub mod entanglement;
pub mod error;
pub mod operators;
pub mod phase;
pub mod qcore;
pub mod states;

pub use error::{QpbError, Result};
pub use qcore::{DeformationParams, SignedLogValue, SqrtBranch};
