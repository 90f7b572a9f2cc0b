//! State-vector and density-operator core: registers, gates, tensor
//! composition, partial trace, and fidelity.

mod density;
mod gate;
mod register;
mod state;

pub use density::DensityOperator;
pub use gate::{GateName, SingleQubitGate};
pub use register::{QubitId, Register};
pub use state::PureState;

/// Tolerance for exact-arithmetic identities (norms, traces, Hermiticity).
pub const TOL_EXACT: f64 = 1e-12;

/// Tolerance for eigenvalue-based positive-semidefiniteness checks.
pub const TOL_PSD: f64 = 1e-10;
