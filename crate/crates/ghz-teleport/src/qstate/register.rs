//! Qubit labels and register layout.
//!
//! Every state in this crate lives on an explicit [`Register`]: an ordered
//! list of distinct [`QubitId`]s. The qubit at register position 0 is the
//! most significant bit of the amplitude index (big-endian), so basis kets
//! read left to right exactly like the register.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A labeled qubit in the protocol.
///
/// Message, EPR, and agent labels are 1-based to match the transcripts
/// (`Message(1)` is the first message qubit, paired with `EprSender(1)` and
/// `EprReceiver(1)`; `AgentGhz(l)` is agent `l`'s GHZ qubit; `AliceGhz` is
/// the GHZ qubit the sender keeps).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QubitId {
    Message(usize),
    EprSender(usize),
    EprReceiver(usize),
    AgentGhz(usize),
    AliceGhz,
}

impl std::fmt::Display for QubitId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QubitId::Message(i) => write!(f, "{i}"),
            QubitId::EprSender(i) => write!(f, "{i}'"),
            QubitId::EprReceiver(i) => write!(f, "{i}''"),
            QubitId::AgentGhz(l) => write!(f, "A{l}"),
            QubitId::AliceGhz => write!(f, "a"),
        }
    }
}

/// An ordered list of distinct qubits; fixes both the dimension and the
/// bit layout of every state defined on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    qubits: Vec<QubitId>,
}

impl Register {
    /// Builds a register from an explicit qubit list. Duplicate ids are a
    /// configuration error.
    pub fn new(qubits: Vec<QubitId>) -> Result<Self> {
        if qubits.is_empty() {
            return Err(Error::config("register must contain at least one qubit"));
        }
        for (i, q) in qubits.iter().enumerate() {
            if qubits[..i].contains(q) {
                return Err(Error::config(format!("duplicate qubit {q} in register")));
            }
        }
        Ok(Register { qubits })
    }

    /// The full protocol register for `m` message qubits and `n` agents:
    /// `[1..m | 1'..m' | 1''..m'' | A1..An | a]`, size `3m + n + 1`.
    pub fn scenario(m: usize, n: usize) -> Self {
        let mut qubits = Vec::with_capacity(3 * m + n + 1);
        qubits.extend((1..=m).map(QubitId::Message));
        qubits.extend((1..=m).map(QubitId::EprSender));
        qubits.extend((1..=m).map(QubitId::EprReceiver));
        qubits.extend((1..=n).map(QubitId::AgentGhz));
        qubits.push(QubitId::AliceGhz);
        Register { qubits }
    }

    /// The channel register (scenario register without the message qubits),
    /// size `2m + n + 1`.
    pub fn channel(m: usize, n: usize) -> Self {
        let mut qubits = Vec::with_capacity(2 * m + n + 1);
        qubits.extend((1..=m).map(QubitId::EprSender));
        qubits.extend((1..=m).map(QubitId::EprReceiver));
        qubits.extend((1..=n).map(QubitId::AgentGhz));
        qubits.push(QubitId::AliceGhz);
        Register { qubits }
    }

    /// A register holding only message qubits `1..=m`; handy for small
    /// ad-hoc states in tests and for receiver-side target states.
    pub fn messages(m: usize) -> Self {
        Register {
            qubits: (1..=m).map(QubitId::Message).collect(),
        }
    }

    pub fn single(q: QubitId) -> Self {
        Register { qubits: vec![q] }
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    /// Hilbert-space dimension `2^len`.
    pub fn dim(&self) -> usize {
        1 << self.qubits.len()
    }

    pub fn qubits(&self) -> &[QubitId] {
        &self.qubits
    }

    pub fn contains(&self, q: QubitId) -> bool {
        self.qubits.contains(&q)
    }

    /// Position of `q` in the register, or a configuration error naming it.
    pub fn position_of(&self, q: QubitId) -> Result<usize> {
        self.qubits
            .iter()
            .position(|&x| x == q)
            .ok_or_else(|| Error::config(format!("qubit {q} is not in the register")))
    }

    /// Bit value of register position `pos` inside amplitude index `index`
    /// (big-endian: position 0 is the most significant bit).
    pub fn bit(&self, index: usize, pos: usize) -> u8 {
        ((index >> (self.qubits.len() - 1 - pos)) & 1) as u8
    }

    /// Bit mask selecting register position `pos` in an amplitude index.
    pub fn mask(&self, pos: usize) -> usize {
        1 << (self.qubits.len() - 1 - pos)
    }

    /// Restriction of this register to `keep`, in register order.
    /// Errors if `keep` is empty or contains a qubit not present here.
    pub fn subregister(&self, keep: &[QubitId]) -> Result<Register> {
        for q in keep {
            self.position_of(*q)?;
        }
        let qubits: Vec<QubitId> = self
            .qubits
            .iter()
            .copied()
            .filter(|q| keep.contains(q))
            .collect();
        Register::new(qubits)
    }

    /// Concatenation `self ++ other`; the combined register orders `self`'s
    /// qubits before `other`'s.
    pub fn concat(&self, other: &Register) -> Result<Register> {
        let mut qubits = self.qubits.clone();
        qubits.extend_from_slice(&other.qubits);
        Register::new(qubits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_layout_and_size() {
        let r = Register::scenario(2, 3);
        assert_eq!(r.len(), 3 * 2 + 3 + 1);
        assert_eq!(r.qubits()[0], QubitId::Message(1));
        assert_eq!(r.qubits()[2], QubitId::EprSender(1));
        assert_eq!(r.qubits()[4], QubitId::EprReceiver(1));
        assert_eq!(r.qubits()[6], QubitId::AgentGhz(1));
        assert_eq!(r.qubits()[9], QubitId::AliceGhz);
        assert_eq!(r.position_of(QubitId::EprReceiver(2)).unwrap(), 5);
    }

    #[test]
    fn duplicate_qubits_rejected() {
        let err = Register::new(vec![QubitId::Message(1), QubitId::Message(1)]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn big_endian_bits() {
        let r = Register::messages(3);
        // index 0b011: qubit 0 -> 0, qubit 1 -> 1, qubit 2 -> 1
        assert_eq!(r.bit(0b011, 0), 0);
        assert_eq!(r.bit(0b011, 1), 1);
        assert_eq!(r.bit(0b011, 2), 1);
        assert_eq!(r.mask(0), 0b100);
    }

    #[test]
    fn missing_qubit_is_config_error() {
        let r = Register::messages(2);
        assert!(r.position_of(QubitId::AliceGhz).is_err());
    }
}
