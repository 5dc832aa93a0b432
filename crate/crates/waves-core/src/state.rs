//! Statevectors and eigensubspace overlaps.
//!
//! Basis-state indices read qubit 0 as the most significant bit, matching
//! the operator convention in [`crate::pauli`]: `basis_state(4, "1100")`
//! puts all amplitude on index 12.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("state must have at least one qubit")]
    NoQubits,
    #[error("bit string '{bits}' does not match {num_qubits} qubits")]
    BitStringLength { bits: String, num_qubits: usize },
    #[error("bit string contains '{found}', expected only '0' and '1'")]
    BadBit { found: char },
    #[error("amplitude vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("states act on different qubit counts: {a} vs {b}")]
    QubitCountMismatch { a: usize, b: usize },
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("subspace needs at least one basis vector")]
    EmptySubspace,
}

/// A pure state on `num_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    pub fn new(num_qubits: usize, amplitudes: DVector<Complex64>) -> Result<Self, StateError> {
        if num_qubits == 0 {
            return Err(StateError::NoQubits);
        }
        let expected = 1usize << num_qubits;
        if amplitudes.len() != expected {
            return Err(StateError::DimensionMismatch {
                expected,
                got: amplitudes.len(),
            });
        }
        Ok(StateVector {
            num_qubits,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(mut self) -> Result<Self, StateError> {
        let n = self.norm();
        if n <= 0.0 {
            return Err(StateError::ZeroNorm);
        }
        self.amplitudes /= Complex64::new(n, 0.0);
        Ok(self)
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64, StateError> {
        if self.num_qubits != other.num_qubits {
            return Err(StateError::QubitCountMismatch {
                a: self.num_qubits,
                b: other.num_qubits,
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64, StateError> {
        Ok(self.inner(other)?.norm_sqr())
    }
}

/// The computational basis state labeled by `bits`, first character on
/// qubit 0 (most significant).
pub fn basis_state(num_qubits: usize, bits: &str) -> Result<StateVector, StateError> {
    if num_qubits == 0 {
        return Err(StateError::NoQubits);
    }
    if bits.chars().count() != num_qubits {
        return Err(StateError::BitStringLength {
            bits: bits.to_string(),
            num_qubits,
        });
    }
    let mut index = 0usize;
    for ch in bits.chars() {
        index <<= 1;
        match ch {
            '0' => {}
            '1' => index |= 1,
            other => return Err(StateError::BadBit { found: other }),
        }
    }
    let mut amplitudes = DVector::<Complex64>::zeros(1 << num_qubits);
    amplitudes[index] = Complex64::new(1.0, 0.0);
    StateVector::new(num_qubits, amplitudes)
}

/// An eigenvalue together with an orthonormal basis of its eigenspace.
#[derive(Clone, Debug)]
pub struct EigenSubspace {
    pub eigenvalue: f64,
    vectors: DMatrix<Complex64>,
}

impl EigenSubspace {
    pub fn new(eigenvalue: f64, basis: Vec<DVector<Complex64>>) -> Result<Self, StateError> {
        if basis.is_empty() {
            return Err(StateError::EmptySubspace);
        }
        let len = basis[0].len();
        for v in &basis[1..] {
            if v.len() != len {
                return Err(StateError::DimensionMismatch {
                    expected: len,
                    got: v.len(),
                });
            }
        }
        let vectors = DMatrix::from_columns(&basis);
        Ok(EigenSubspace {
            eigenvalue,
            vectors,
        })
    }

    /// Number of basis vectors (the degeneracy).
    pub fn multiplicity(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn basis_vector(&self, k: usize) -> DVector<Complex64> {
        self.vectors.column(k).into_owned()
    }
}

/// Total overlap `sum_k |<v_k|psi>|^2` of a state with a subspace.
pub fn subspace_fidelity(state: &StateVector, subspace: &EigenSubspace) -> Result<f64, StateError> {
    if subspace.vectors.nrows() != state.amplitudes.len() {
        return Err(StateError::DimensionMismatch {
            expected: subspace.vectors.nrows(),
            got: state.amplitudes.len(),
        });
    }
    let projected = subspace.vectors.adjoint() * state.amplitudes();
    Ok(projected.norm_squared())
}
