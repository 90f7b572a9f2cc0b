//! Dense state vectors over labeled registers.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qstate::gate::SingleQubitGate;
use crate::qstate::register::{QubitId, Register};
use crate::qstate::TOL_EXACT;

/// A normalized pure state: `2^N` complex amplitudes over an `N`-qubit
/// [`Register`]. Values are immutable after construction; every operation
/// returns a new state.
#[derive(Debug, Clone)]
pub struct PureState {
    register: Register,
    amps: Vec<Complex64>,
}

impl PureState {
    /// Builds a state from raw amplitudes and normalizes it. A zero vector
    /// cannot be normalized and is an invariant error; a length other than
    /// `2^N` is a configuration error.
    pub fn from_amplitudes(register: Register, mut amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != register.dim() {
            return Err(Error::config(format!(
                "amplitude vector has length {}, register of {} qubits needs {}",
                amps.len(),
                register.len(),
                register.dim()
            )));
        }
        let norm = l2_norm(&amps);
        if norm < 1e-300 {
            return Err(Error::invariant("cannot normalize a zero-norm state"));
        }
        if (norm - 1.0).abs() > TOL_EXACT {
            let inv = 1.0 / norm;
            for a in &mut amps {
                *a *= inv;
            }
        }
        Ok(PureState { register, amps })
    }

    /// The computational basis state `|bits⟩`; `bits[p]` is the value of the
    /// qubit at register position `p`.
    pub fn basis_state(register: Register, bits: &[u8]) -> Result<Self> {
        if bits.len() != register.len() {
            return Err(Error::config(format!(
                "got {} bits for a register of {} qubits",
                bits.len(),
                register.len()
            )));
        }
        let mut index = 0usize;
        for (pos, &b) in bits.iter().enumerate() {
            if b > 1 {
                return Err(Error::config(format!("bit value {b} at position {pos}")));
            }
            if b == 1 {
                index |= register.mask(pos);
            }
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); register.dim()];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(PureState { register, amps })
    }

    /// A single-qubit state `alpha|0⟩ + beta|1⟩` on qubit `q` (normalized).
    pub fn single_qubit(q: QubitId, alpha: Complex64, beta: Complex64) -> Result<Self> {
        PureState::from_amplitudes(Register::single(q), vec![alpha, beta])
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn num_qubits(&self) -> usize {
        self.register.len()
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amps)
    }

    /// Norm is 1 within `1e-12` and the dimension matches the register.
    pub fn validate(&self) -> Result<()> {
        if self.amps.len() != self.register.dim() {
            return Err(Error::invariant("state dimension does not match register"));
        }
        let norm = self.norm();
        if (norm - 1.0).abs() > TOL_EXACT {
            return Err(Error::invariant(format!(
                "state norm {norm} deviates from 1 beyond 1e-12"
            )));
        }
        Ok(())
    }

    /// Applies a single-qubit gate to `target`, returning the new state.
    pub fn apply_gate(&self, gate: &SingleQubitGate, target: QubitId) -> Result<PureState> {
        let pos = self.register.position_of(target)?;
        let mask = self.register.mask(pos);
        let m = gate.matrix();
        let mut amps = self.amps.clone();
        for i in 0..amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let a0 = amps[i];
                let a1 = amps[j];
                amps[i] = m[0][0] * a0 + m[0][1] * a1;
                amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(PureState {
            register: self.register.clone(),
            amps,
        })
    }

    /// Inner product `⟨self|other⟩`; both states must share a register.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.register != other.register {
            return Err(Error::config("inner product over mismatched registers"));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Tensor product `self ⊗ other`; `self`'s qubits come first.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let register = self.register.concat(&other.register)?;
        let db = other.amps.len();
        let mut amps = Vec::with_capacity(self.amps.len() * db);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(PureState { register, amps })
    }

    /// Tensor product of several states, left to right.
    pub fn product(parts: &[PureState]) -> Result<PureState> {
        let (first, rest) = parts
            .split_first()
            .ok_or_else(|| Error::config("product of zero states"))?;
        let mut acc = first.clone();
        for p in rest {
            acc = acc.tensor(p)?;
        }
        Ok(acc)
    }

    /// Bit masks of the `keep` qubits (in register order) and of the
    /// remaining environment qubits.
    pub(crate) fn split_masks(&self, keep: &[QubitId]) -> Result<(Vec<usize>, Vec<usize>)> {
        if keep.is_empty() {
            return Err(Error::config("keep set must be nonempty"));
        }
        for q in keep {
            self.register.position_of(*q)?;
        }
        let mut keep_masks = Vec::with_capacity(keep.len());
        let mut env_masks = Vec::new();
        for (pos, q) in self.register.qubits().iter().enumerate() {
            if keep.contains(q) {
                keep_masks.push(self.register.mask(pos));
            } else {
                env_masks.push(self.register.mask(pos));
            }
        }
        Ok((keep_masks, env_masks))
    }

    /// Fidelity `⟨target|ρ_keep|target⟩` of the reduced state on `keep`
    /// against a pure target, computed in one pass over the amplitudes.
    /// `target` must be defined on the `keep` qubits in register order.
    pub fn subsystem_fidelity(&self, keep: &[QubitId], target: &PureState) -> Result<f64> {
        let (keep_masks, env_masks) = self.split_masks(keep)?;
        let sub = self.register.subregister(keep)?;
        if target.register != sub {
            return Err(Error::config(
                "target register does not match the kept subsystem",
            ));
        }
        let keep_lut = index_lut(&keep_masks);
        let env_lut = index_lut(&env_masks);
        let mut fidelity = 0.0;
        for &base in &env_lut {
            let mut overlap = Complex64::new(0.0, 0.0);
            for (r, &off) in keep_lut.iter().enumerate() {
                overlap += target.amps[r].conj() * self.amps[base | off];
            }
            fidelity += overlap.norm_sqr();
        }
        Ok(fidelity)
    }
}

/// Expands every index of a `2^k` subsystem into its scattered bit pattern.
pub(crate) fn index_lut(masks: &[usize]) -> Vec<usize> {
    let k = masks.len();
    let mut lut = vec![0usize; 1 << k];
    for (sub, slot) in lut.iter_mut().enumerate() {
        let mut g = 0usize;
        for (j, &m) in masks.iter().enumerate() {
            if (sub >> (k - 1 - j)) & 1 == 1 {
                g |= m;
            }
        }
        *slot = g;
    }
    lut
}

fn l2_norm(amps: &[Complex64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}
