//! Single-qubit gates: Hadamard, the Paulis, and identity.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qstate::TOL_EXACT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateName {
    H,
    X,
    Y,
    Z,
    Identity,
}

impl std::fmt::Display for GateName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GateName::H => "H",
            GateName::X => "X",
            GateName::Y => "Y",
            GateName::Z => "Z",
            GateName::Identity => "I",
        };
        f.write_str(s)
    }
}

/// A named 2x2 unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleQubitGate {
    name: GateName,
    matrix: [[Complex64; 2]; 2],
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl SingleQubitGate {
    pub fn named(name: GateName) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let matrix = match name {
            GateName::H => [
                [Complex64::new(s, 0.0), Complex64::new(s, 0.0)],
                [Complex64::new(s, 0.0), Complex64::new(-s, 0.0)],
            ],
            GateName::X => [[ZERO, ONE], [ONE, ZERO]],
            GateName::Y => [
                [ZERO, Complex64::new(0.0, -1.0)],
                [Complex64::new(0.0, 1.0), ZERO],
            ],
            GateName::Z => [[ONE, ZERO], [ZERO, -ONE]],
            GateName::Identity => [[ONE, ZERO], [ZERO, ONE]],
        };
        SingleQubitGate { name, matrix }
    }

    pub fn hadamard() -> Self {
        Self::named(GateName::H)
    }

    pub fn x() -> Self {
        Self::named(GateName::X)
    }

    pub fn y() -> Self {
        Self::named(GateName::Y)
    }

    pub fn z() -> Self {
        Self::named(GateName::Z)
    }

    pub fn identity() -> Self {
        Self::named(GateName::Identity)
    }

    pub fn name(&self) -> GateName {
        self.name
    }

    pub fn matrix(&self) -> &[[Complex64; 2]; 2] {
        &self.matrix
    }

    /// Checks U†U = I entrywise.
    pub fn check_unitary(&self) -> Result<()> {
        let m = &self.matrix;
        for i in 0..2 {
            for j in 0..2 {
                // (U†U)_ij = sum_k conj(U_ki) U_kj
                let mut v = ZERO;
                for k in 0..2 {
                    v += m[k][i].conj() * m[k][j];
                }
                let expect = if i == j { ONE } else { ZERO };
                if (v - expect).norm() > TOL_EXACT {
                    return Err(Error::invariant(format!(
                        "gate {} is not unitary: (U†U)[{i}][{j}] = {v}",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_named_gates_are_unitary() {
        for name in [
            GateName::H,
            GateName::X,
            GateName::Y,
            GateName::Z,
            GateName::Identity,
        ] {
            SingleQubitGate::named(name).check_unitary().unwrap();
        }
    }
}
