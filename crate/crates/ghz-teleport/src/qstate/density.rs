//! Density operators, partial trace, fidelity, and branch mixtures.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qstate::register::{QubitId, Register};
use crate::qstate::state::{index_lut, PureState};
use crate::qstate::SingleQubitGate;
use crate::qstate::{TOL_EXACT, TOL_PSD};

/// A density operator over an ordered qubit subsystem. Valid operators are
/// Hermitian, unit-trace, and positive semidefinite; [`validate`] checks all
/// three.
///
/// [`validate`]: DensityOperator::validate
#[derive(Debug, Clone)]
pub struct DensityOperator {
    subsystem: Register,
    matrix: DMatrix<Complex64>,
}

impl DensityOperator {
    /// Wraps a raw matrix. Only the shape is checked here; call
    /// [`validate`](Self::validate) for the physical invariants.
    pub fn from_matrix(subsystem: Register, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != subsystem.dim() || matrix.ncols() != subsystem.dim() {
            return Err(Error::config(format!(
                "matrix is {}x{}, subsystem of {} qubits needs {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols(),
                subsystem.len(),
                dim = subsystem.dim()
            )));
        }
        Ok(DensityOperator { subsystem, matrix })
    }

    /// The projector `|ψ⟩⟨ψ|` of a pure state.
    pub fn from_pure(state: &PureState) -> Self {
        let dim = state.amplitudes().len();
        let amps = state.amplitudes();
        let matrix =
            DMatrix::from_fn(dim, dim, |r, c| amps[r] * amps[c].conj());
        DensityOperator {
            subsystem: state.register().clone(),
            matrix,
        }
    }

    /// The mixture `Σ p_b |b⟩⟨b|` over measurement branches. Probabilities
    /// must be nonnegative and sum to 1 within `1e-12`; all states must share
    /// one register.
    pub fn from_branches(branches: &[(f64, PureState)]) -> Result<Self> {
        let (first, _) = branches
            .split_first()
            .ok_or_else(|| Error::config("mixture of zero branches"))?;
        let register = first.1.register().clone();
        let mut total = 0.0;
        let dim = register.dim();
        let mut matrix = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for (p, state) in branches {
            if *p < 0.0 {
                return Err(Error::invariant(format!("negative branch probability {p}")));
            }
            if state.register() != &register {
                return Err(Error::config("mixture over mismatched registers"));
            }
            total += p;
            let amps = state.amplitudes();
            for r in 0..dim {
                for c in 0..dim {
                    matrix[(r, c)] += *p * amps[r] * amps[c].conj();
                }
            }
        }
        if (total - 1.0).abs() > TOL_EXACT {
            return Err(Error::invariant(format!(
                "branch probabilities sum to {total}, not 1"
            )));
        }
        Ok(DensityOperator {
            subsystem: register,
            matrix,
        })
    }

    /// Probability-weighted mixture of density operators on one subsystem.
    pub fn mixture(parts: &[(f64, DensityOperator)]) -> Result<Self> {
        let (first, _) = parts
            .split_first()
            .ok_or_else(|| Error::config("mixture of zero operators"))?;
        let subsystem = first.1.subsystem.clone();
        let dim = subsystem.dim();
        let mut total = 0.0;
        let mut matrix = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for (p, rho) in parts {
            if *p < 0.0 {
                return Err(Error::invariant(format!("negative mixture weight {p}")));
            }
            if rho.subsystem != subsystem {
                return Err(Error::config("mixture over mismatched subsystems"));
            }
            total += p;
            matrix += rho.matrix.map(|v| v * *p);
        }
        if (total - 1.0).abs() > TOL_EXACT {
            return Err(Error::invariant(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        Ok(DensityOperator { subsystem, matrix })
    }

    pub fn subsystem(&self) -> &Register {
        &self.subsystem
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    /// Reduces to the `keep` qubits by tracing out the rest. Trace is
    /// preserved. `keep` must be a nonempty subset of the subsystem.
    pub fn partial_trace(&self, keep: &[QubitId]) -> Result<DensityOperator> {
        if keep.is_empty() {
            return Err(Error::config("keep set must be nonempty"));
        }
        let sub = self.subsystem.subregister(keep)?;
        if sub.len() == self.subsystem.len() {
            return Ok(self.clone());
        }
        let mut keep_masks = Vec::new();
        let mut env_masks = Vec::new();
        for (pos, q) in self.subsystem.qubits().iter().enumerate() {
            if keep.contains(q) {
                keep_masks.push(self.subsystem.mask(pos));
            } else {
                env_masks.push(self.subsystem.mask(pos));
            }
        }
        let keep_lut = index_lut(&keep_masks);
        let env_lut = index_lut(&env_masks);
        let dim = sub.dim();
        let mut matrix = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for (r, &roff) in keep_lut.iter().enumerate() {
            for (c, &coff) in keep_lut.iter().enumerate() {
                let mut v = Complex64::new(0.0, 0.0);
                for &e in &env_lut {
                    v += self.matrix[(roff | e, coff | e)];
                }
                matrix[(r, c)] = v;
            }
        }
        Ok(DensityOperator {
            subsystem: sub,
            matrix,
        })
    }

    /// Fidelity `⟨φ|ρ|φ⟩` against a pure target of matching dimension.
    /// The value must be real within `1e-12`; its real part is returned.
    pub fn fidelity(&self, target: &PureState) -> Result<f64> {
        let amps = target.amplitudes();
        if amps.len() != self.dim() {
            return Err(Error::config(format!(
                "fidelity target has dimension {}, operator has {}",
                amps.len(),
                self.dim()
            )));
        }
        let mut v = Complex64::new(0.0, 0.0);
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                v += amps[r].conj() * self.matrix[(r, c)] * amps[c];
            }
        }
        if v.im.abs() > TOL_EXACT {
            return Err(Error::invariant(format!(
                "fidelity has imaginary residue {}",
                v.im
            )));
        }
        Ok(v.re)
    }

    /// Conjugates by a single-qubit gate on `target`: `U ρ U†`.
    pub fn conjugated(&self, gate: &SingleQubitGate, target: QubitId) -> Result<DensityOperator> {
        let pos = self.subsystem.position_of(target)?;
        let mask = self.subsystem.mask(pos);
        let m = gate.matrix();
        let dim = self.dim();
        let mut matrix = self.matrix.clone();
        // Left-multiply by U: mix row pairs.
        for c in 0..dim {
            for r in 0..dim {
                if r & mask == 0 {
                    let r1 = r | mask;
                    let a0 = matrix[(r, c)];
                    let a1 = matrix[(r1, c)];
                    matrix[(r, c)] = m[0][0] * a0 + m[0][1] * a1;
                    matrix[(r1, c)] = m[1][0] * a0 + m[1][1] * a1;
                }
            }
        }
        // Right-multiply by U†: mix column pairs.
        for r in 0..dim {
            for c in 0..dim {
                if c & mask == 0 {
                    let c1 = c | mask;
                    let a0 = matrix[(r, c)];
                    let a1 = matrix[(r, c1)];
                    matrix[(r, c)] = a0 * m[0][0].conj() + a1 * m[0][1].conj();
                    matrix[(r, c1)] = a0 * m[1][0].conj() + a1 * m[1][1].conj();
                }
            }
        }
        Ok(DensityOperator {
            subsystem: self.subsystem.clone(),
            matrix,
        })
    }

    /// Entrywise Hermiticity check within `1e-12`; the matrix is never
    /// silently symmetrized.
    pub fn check_hermitian(&self) -> Result<()> {
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                let delta = (self.matrix[(r, c)] - self.matrix[(c, r)].conj()).norm();
                if delta > TOL_EXACT {
                    return Err(Error::invariant(format!(
                        "matrix is not Hermitian: |M - M†| = {delta} at ({r},{c})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Real eigenvalues in ascending order. Requires Hermiticity first;
    /// asymmetry beyond `1e-12` is an invariant error.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.check_hermitian()?;
        let eig = self.matrix.clone().symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(vals)
    }

    /// Full invariant suite: Hermitian within `1e-12`, trace 1 within
    /// `1e-12`, smallest eigenvalue at least `-1e-10`.
    pub fn validate(&self) -> Result<()> {
        self.check_hermitian()?;
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TOL_EXACT || tr.im.abs() > TOL_EXACT {
            return Err(Error::invariant(format!("trace is {tr}, not 1")));
        }
        let vals = self.eigenvalues()?;
        if let Some(&min) = vals.first() {
            if min < -TOL_PSD {
                return Err(Error::invariant(format!(
                    "matrix is not positive semidefinite: smallest eigenvalue {min}"
                )));
            }
        }
        Ok(())
    }

    /// Largest entrywise absolute difference between two operators.
    pub fn max_entry_delta(&self, other: &DensityOperator) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::config("operator dimensions differ"));
        }
        let mut max = 0.0f64;
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                max = max.max((self.matrix[(r, c)] - other.matrix[(r, c)]).norm());
            }
        }
        Ok(max)
    }
}

impl PureState {
    /// The pure density operator `|ψ⟩⟨ψ|` on the full register.
    pub fn density(&self) -> DensityOperator {
        DensityOperator::from_pure(self)
    }

    /// Reduced density operator on `keep`, computed directly from the
    /// amplitudes without forming the full projector.
    pub fn reduced_density(&self, keep: &[QubitId]) -> Result<DensityOperator> {
        let (keep_masks, env_masks) = self.split_masks(keep)?;
        let sub = self.register().subregister(keep)?;
        let keep_lut = index_lut(&keep_masks);
        let env_lut = index_lut(&env_masks);
        let dim = sub.dim();
        let amps = self.amplitudes();
        let mut matrix = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        let mut block = vec![Complex64::new(0.0, 0.0); dim];
        for &base in &env_lut {
            for (r, &off) in keep_lut.iter().enumerate() {
                block[r] = amps[base | off];
            }
            for r in 0..dim {
                for c in 0..dim {
                    matrix[(r, c)] += block[r] * block[c].conj();
                }
            }
        }
        Ok(DensityOperator::from_matrix(sub, matrix).expect("dimensions match by construction"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bell_phi_plus() -> PureState {
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        PureState::from_amplitudes(
            Register::messages(2),
            vec![c(inv, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(inv, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn trace_out_second_qubit_of_product() {
        let s = PureState::basis_state(Register::messages(2), &[0, 0]).unwrap();
        let rho = s.density().partial_trace(&[QubitId::Message(1)]).unwrap();
        assert!((rho.matrix()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((rho.matrix()[(1, 1)]).norm() < 1e-15);
        rho.validate().unwrap();
    }

    #[test]
    fn bell_pair_reduces_to_maximally_mixed() {
        let rho_full = bell_phi_plus().density();
        for q in [QubitId::Message(1), QubitId::Message(2)] {
            let rho = rho_full.partial_trace(&[q]).unwrap();
            assert!((rho.matrix()[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
            assert!((rho.matrix()[(1, 1)] - c(0.5, 0.0)).norm() < 1e-15);
            assert!(rho.matrix()[(0, 1)].norm() < 1e-15);
            rho.validate().unwrap();
        }
    }

    #[test]
    fn partial_trace_of_everything_is_identity_map() {
        let rho = bell_phi_plus().density();
        let same = rho
            .partial_trace(&[QubitId::Message(1), QubitId::Message(2)])
            .unwrap();
        assert!(rho.max_entry_delta(&same).unwrap() < 1e-15);
    }

    #[test]
    fn iterated_trace_matches_joint_trace() {
        // Random-ish 3-qubit state.
        let r = Register::messages(3);
        let amps: Vec<Complex64> = (0..8)
            .map(|i| c((i as f64 * 0.37).sin() + 0.2, (i as f64 * 0.61).cos()))
            .collect();
        let s = PureState::from_amplitudes(r, amps).unwrap();
        let rho = s.density();
        let step = rho
            .partial_trace(&[QubitId::Message(1), QubitId::Message(2)])
            .unwrap()
            .partial_trace(&[QubitId::Message(1)])
            .unwrap();
        let joint = rho.partial_trace(&[QubitId::Message(1)]).unwrap();
        assert!(step.max_entry_delta(&joint).unwrap() < 1e-12);
    }

    #[test]
    fn reduced_density_agrees_with_projector_route() {
        let s = bell_phi_plus();
        let direct = s.reduced_density(&[QubitId::Message(2)]).unwrap();
        let via_projector = s.density().partial_trace(&[QubitId::Message(2)]).unwrap();
        assert!(direct.max_entry_delta(&via_projector).unwrap() < 1e-13);
    }

    #[test]
    fn keep_outside_subsystem_is_config_error() {
        let rho = bell_phi_plus().density();
        assert!(matches!(
            rho.partial_trace(&[QubitId::AliceGhz]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn fidelity_of_pure_state_with_itself() {
        let s = PureState::single_qubit(QubitId::Message(1), c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        assert!((s.density().fidelity(&s).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fidelity_against_maximally_mixed_is_half() {
        let id2 = DMatrix::from_diagonal_element(2, 2, c(0.5, 0.0));
        let rho = DensityOperator::from_matrix(Register::messages(1), id2).unwrap();
        for (a, b) in [
            (c(1.0, 0.0), c(0.0, 0.0)),
            (c(0.6, 0.0), c(0.8, 0.0)),
            (c(0.5, 0.5), c(0.5, -0.5)),
        ] {
            let target = PureState::single_qubit(QubitId::Message(1), a, b).unwrap();
            assert!((rho.fidelity(&target).unwrap() - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn fidelity_dimension_mismatch_is_config_error() {
        let rho = bell_phi_plus().density();
        let target = PureState::basis_state(Register::messages(1), &[0]).unwrap();
        assert!(matches!(rho.fidelity(&target), Err(Error::Config(_))));
    }

    #[test]
    fn fidelity_is_linear_in_rho() {
        let q = QubitId::Message(1);
        let s0 = PureState::basis_state(Register::single(q), &[0]).unwrap();
        let s1 = PureState::single_qubit(q, c(0.48, 0.36), c(0.0, 0.8)).unwrap();
        let target = PureState::single_qubit(q, c(0.28, 0.0), c(0.96, 0.0)).unwrap();
        let p = 0.3;
        let mixed =
            DensityOperator::from_branches(&[(p, s0.clone()), (1.0 - p, s1.clone())]).unwrap();
        let lhs = mixed.fidelity(&target).unwrap();
        let rhs = p * s0.density().fidelity(&target).unwrap()
            + (1.0 - p) * s1.density().fidelity(&target).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn single_branch_mixture_is_pure_projector() {
        let s = PureState::basis_state(Register::messages(1), &[0]).unwrap();
        let rho = DensityOperator::from_branches(&[(1.0, s)]).unwrap();
        assert!((rho.matrix()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        rho.validate().unwrap();
    }

    #[test]
    fn equal_mixture_of_basis_states_is_maximally_mixed() {
        let q = Register::messages(1);
        let s0 = PureState::basis_state(q.clone(), &[0]).unwrap();
        let s1 = PureState::basis_state(q, &[1]).unwrap();
        let rho = DensityOperator::from_branches(&[(0.5, s0), (0.5, s1)]).unwrap();
        assert!((rho.matrix()[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((rho.matrix()[(1, 1)] - c(0.5, 0.0)).norm() < 1e-15);
        assert!(rho.matrix()[(0, 1)].norm() < 1e-15);
        rho.validate().unwrap();
    }

    #[test]
    fn branch_probability_sum_violation_is_invariant_error() {
        let s = PureState::basis_state(Register::messages(1), &[0]).unwrap();
        assert!(matches!(
            DensityOperator::from_branches(&[(0.7, s)]),
            Err(Error::Invariant(_))
        ));
    }

    #[test]
    fn non_hermitian_matrix_fails_validation() {
        let mut m = DMatrix::from_element(2, 2, c(0.5, 0.0));
        m[(0, 1)] = c(0.1, 0.0);
        m[(1, 0)] = c(0.3, 0.0);
        let rho = DensityOperator::from_matrix(Register::messages(1), m).unwrap();
        assert!(matches!(rho.eigenvalues(), Err(Error::Invariant(_))));
    }

    #[test]
    fn conjugation_by_x_flips_populations() {
        let s = PureState::single_qubit(QubitId::Message(1), c(0.6, 0.0), c(0.8, 0.0)).unwrap();
        let rho = s.density();
        let flipped = rho
            .conjugated(&SingleQubitGate::x(), QubitId::Message(1))
            .unwrap();
        assert!((flipped.matrix()[(0, 0)] - c(0.64, 0.0)).norm() < 1e-14);
        assert!((flipped.matrix()[(1, 1)] - c(0.36, 0.0)).norm() < 1e-14);
        flipped.validate().unwrap();
    }
}
