//! Exact simulator and analysis toolkit for controlled multiqubit
//! teleportation over a combined EPR-GHZ channel.
//!
//! A sender teleports `m` message qubits to a receiver while `n` agents
//! each hold one qubit of a shared GHZ state; the receiver can restore the
//! messages exactly only when every agent measures and reports. The crate
//! builds the channel state, runs the full multi-party protocol — Bell
//! measurements, agent readouts, classical transcript, Pauli corrections —
//! by exact branch enumeration or as seeded trajectories, and analyzes the
//! receiver's reduced state when agents withhold their results.
//!
//! ```
//! use ghz_teleport::protocol::{run_protocol, ProtocolOutcome};
//! use ghz_teleport::scenario::{MessagesSpec, ScenarioConfig};
//!
//! let config = ScenarioConfig::exact(1, 2, MessagesSpec::random(1), 42);
//! let messages = config.message_tuples().unwrap().remove(0);
//! let ProtocolOutcome::Exact(branches) = run_protocol(&config).unwrap() else {
//!     unreachable!("exact mode returns branches");
//! };
//! for branch in &branches {
//!     let fidelity = branch.receiver_fidelity(1, &messages[0]).unwrap();
//!     assert!((fidelity - 1.0).abs() < 1e-12);
//! }
//! ```
//!
//! The `book/` directory of the repository walks through the concepts
//! chapter by chapter; its code snippets compile and run as doc-tests of
//! this crate.

pub mod analysis;
pub mod error;
pub mod measurement;
pub mod protocol;
pub mod qstate;
pub mod scenario;

pub use error::{Error, Result};

// The book's code blocks double as doc-tests so the guide can never drift
// from the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/measurement.md")]
    mod measurement {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    mod protocol {}
    #[doc = include_str!("../../../book/src/noncooperation.md")]
    mod noncooperation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
