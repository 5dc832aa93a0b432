//! Built-in model Hamiltonians, file loading, random instance generation,
//! and the brute-force spectrum oracle.
//!
//! The oracle diagonalizes the operator and groups near-equal eigenvalues
//! into [`EigenSubspace`] values, so searches can be scored against whole
//! degenerate subspaces instead of individual eigenvectors.

use std::path::Path;

use rand::Rng;
use thiserror::Error;

use crate::pauli::{HermitianEigensystem, PauliAxis, PauliError, PauliSum, PauliTerm};
use crate::rng::stream;
use crate::state::{EigenSubspace, StateError};

/// Largest qubit count accepted by [`random_hamiltonian`]; matches the
/// dense diagonalization backend.
pub const MAX_RANDOM_QUBITS: usize = crate::pauli::MAX_DENSE_QUBITS;

/// Default degeneracy tolerance of [`spectrum_oracle`].
pub const DEFAULT_DEGENERACY_TOLERANCE: f64 = 1e-9;

/// Default two-level exciton model parameters, in eV: bare splitting
/// `alpha`, coupling `beta`, and the energy shift subtracted from the
/// identity part.
pub const EXCITON_ALPHA: f64 = 1.46;
pub const EXCITON_BETA: f64 = 0.037;
pub const EXCITON_SHIFT: f64 = 1.24;

#[derive(Debug, Error)]
pub enum HamiltonianError {
    #[error("cannot read '{path}': {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("'{path}': {source}")]
    File {
        path: String,
        #[source]
        source: PauliError,
    },
    #[error("random instances support 1..={MAX_RANDOM_QUBITS} qubits, got {num_qubits}")]
    InvalidQubitCount { num_qubits: usize },
    #[error(
        "{requested} terms requested, but only {available} distinct non-identity \
         strings exist on {num_qubits} qubits"
    )]
    TooManyTerms {
        requested: usize,
        available: usize,
        num_qubits: usize,
    },
    #[error("coefficient scale {scale} must be finite and non-negative")]
    InvalidScale { scale: f64 },
    #[error("degeneracy tolerance {tolerance} must be finite and non-negative")]
    InvalidTolerance { tolerance: f64 },
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// The shifted two-level exciton model `(alpha - shift) I + beta X0` on a
/// single qubit.
pub fn exciton_hamiltonian(
    alpha: f64,
    beta: f64,
    shift: f64,
) -> Result<PauliSum, HamiltonianError> {
    let terms = vec![
        PauliTerm::identity(alpha - shift),
        PauliTerm::new(beta, vec![(0, PauliAxis::X)]),
    ];
    Ok(PauliSum::new(1, terms)?)
}

/// [`exciton_hamiltonian`] at the default parameters.
pub fn exciton_default() -> PauliSum {
    exciton_hamiltonian(EXCITON_ALPHA, EXCITON_BETA, EXCITON_SHIFT)
        .expect("default parameters are finite")
}

/// Reads a Pauli-sum file. Parse errors carry the offending line number;
/// I/O errors carry the path.
pub fn load_hamiltonian(path: impl AsRef<Path>) -> Result<PauliSum, HamiltonianError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| HamiltonianError::Io {
        path: path.display().to_string(),
        source,
    })?;
    PauliSum::parse(&text).map_err(|source| HamiltonianError::File {
        path: path.display().to_string(),
        source,
    })
}

/// A random Hermitian instance: `num_terms` distinct non-identity Pauli
/// strings with coefficients drawn uniformly from
/// `[-coefficient_scale, coefficient_scale]`. Deterministic per seed.
pub fn random_hamiltonian(
    num_qubits: usize,
    num_terms: usize,
    coefficient_scale: f64,
    seed: u64,
) -> Result<PauliSum, HamiltonianError> {
    if num_qubits == 0 || num_qubits > MAX_RANDOM_QUBITS {
        return Err(HamiltonianError::InvalidQubitCount { num_qubits });
    }
    if !(coefficient_scale.is_finite() && coefficient_scale >= 0.0) {
        return Err(HamiltonianError::InvalidScale {
            scale: coefficient_scale,
        });
    }
    let available = 4usize.pow(num_qubits as u32) - 1;
    if num_terms > available {
        return Err(HamiltonianError::TooManyTerms {
            requested: num_terms,
            available,
            num_qubits,
        });
    }
    let mut rng = stream(seed, 0, 0);
    // Sampling indices without replacement guarantees distinct strings;
    // index i encodes the string i + 1 in base 4, one digit per qubit.
    let picks = rand::seq::index::sample(&mut rng, available, num_terms);
    let mut terms = Vec::with_capacity(num_terms);
    for index in picks {
        let code = index + 1;
        let mut factors = Vec::new();
        for qubit in 0..num_qubits {
            let digit = (code >> (2 * (num_qubits - 1 - qubit))) & 3;
            let axis = match digit {
                0 => continue,
                1 => PauliAxis::X,
                2 => PauliAxis::Y,
                _ => PauliAxis::Z,
            };
            factors.push((qubit, axis));
        }
        let coefficient = coefficient_scale * (2.0 * rng.gen::<f64>() - 1.0);
        terms.push(PauliTerm::new(coefficient, factors));
    }
    Ok(PauliSum::new(num_qubits, terms)?)
}

/// The full eigensystem of an operator with its spectrum grouped into
/// near-degenerate subspaces, ascending in eigenvalue.
#[derive(Clone, Debug)]
pub struct SpectrumOracle {
    pub eigensystem: HermitianEigensystem,
    pub subspaces: Vec<EigenSubspace>,
    pub degeneracy_tolerance: f64,
}

impl SpectrumOracle {
    pub fn num_subspaces(&self) -> usize {
        self.subspaces.len()
    }

    /// Representative eigenvalue per subspace, ascending.
    pub fn representative_eigenvalues(&self) -> Vec<f64> {
        self.subspaces.iter().map(|s| s.eigenvalue).collect()
    }
}

/// Diagonalizes and groups the spectrum: ascending eigenvalues join the
/// current subspace while they stay within `tolerance` of its lowest
/// member, which also serves as the subspace representative. This keeps
/// the within-subspace spread at or below `tolerance` and adjacent
/// representatives strictly more than `tolerance` apart.
pub fn spectrum_oracle(
    hamiltonian: &PauliSum,
    tolerance: f64,
) -> Result<SpectrumOracle, HamiltonianError> {
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(HamiltonianError::InvalidTolerance { tolerance });
    }
    let eigensystem = hamiltonian.eigendecompose()?;
    let eigenvalues = eigensystem.eigenvalues();
    let mut subspaces = Vec::new();
    let mut group_start = 0usize;
    for j in 1..=eigenvalues.len() {
        let open = j < eigenvalues.len()
            && eigenvalues[j] - eigenvalues[group_start] <= tolerance;
        if open {
            continue;
        }
        let basis: Vec<_> = (group_start..j).map(|k| eigensystem.eigenvector(k)).collect();
        subspaces.push(EigenSubspace::new(eigenvalues[group_start], basis)?);
        group_start = j;
    }
    Ok(SpectrumOracle {
        eigensystem,
        subspaces,
        degeneracy_tolerance: tolerance,
    })
}

/// [`spectrum_oracle`] at the default tolerance.
pub fn spectrum_oracle_default(
    hamiltonian: &PauliSum,
) -> Result<SpectrumOracle, HamiltonianError> {
    spectrum_oracle(hamiltonian, DEFAULT_DEGENERACY_TOLERANCE)
}
