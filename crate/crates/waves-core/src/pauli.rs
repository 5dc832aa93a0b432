//! Sparse Pauli-sum operators with a dense backend.
//!
//! A [`PauliSum`] is a real-weighted sum of Pauli strings on `n` qubits,
//! kept in a canonical form: factors inside a term are sorted by qubit
//! index, identical strings are merged, exact-zero terms are dropped, and
//! terms are ordered lexicographically. Qubit 0 is the most significant bit
//! of a basis-state index.
//!
//! The text format is line based:
//!
//! ```text
//! # comment
//! qubits 2
//! 0.5 Z0 Z1
//! -1.25e-1 X0
//! 0.22
//! ```
//!
//! The first significant line declares the qubit count; every following
//! line is a coefficient and an optional list of `X<i>`/`Y<i>`/`Z<i>`
//! factors, an empty list meaning the identity.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::fmt;
use thiserror::Error;

/// Maximum qubit count for which dense matrices are materialized.
pub const MAX_DENSE_QUBITS: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum PauliError {
    #[error("operator must act on at least one qubit")]
    NoQubits,
    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, num_qubits: usize },
    #[error("qubit {index} appears more than once in a term")]
    DuplicateQubit { index: usize },
    #[error("coefficient {value} is not finite")]
    NonFiniteCoefficient { value: f64 },
    #[error("dense backend supports at most {MAX_DENSE_QUBITS} qubits, got {got}")]
    TooManyQubits { got: usize },
    #[error("operators act on different qubit counts: {a} vs {b}")]
    QubitCountMismatch { a: usize, b: usize },
    #[error("expected {expected} angles, got {got}")]
    AngleCountMismatch { expected: usize, got: usize },
    #[error("vector has length {got}, operator dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no generators given")]
    NoGenerators,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    fn from_char(c: char) -> Option<Self> {
        match c {
            'X' => Some(PauliAxis::X),
            'Y' => Some(PauliAxis::Y),
            'Z' => Some(PauliAxis::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            PauliAxis::X => 'X',
            PauliAxis::Y => 'Y',
            PauliAxis::Z => 'Z',
        }
    }
}

/// One weighted Pauli string. `factors` maps qubit index to axis; qubits not
/// listed carry the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub factors: Vec<(usize, PauliAxis)>,
}

impl PauliTerm {
    pub fn new(coefficient: f64, factors: Vec<(usize, PauliAxis)>) -> Self {
        PauliTerm {
            coefficient,
            factors,
        }
    }

    pub fn identity(coefficient: f64) -> Self {
        PauliTerm {
            coefficient,
            factors: Vec::new(),
        }
    }

    fn canonicalized(mut self) -> Result<Self, PauliError> {
        if !self.coefficient.is_finite() {
            return Err(PauliError::NonFiniteCoefficient {
                value: self.coefficient,
            });
        }
        self.factors.sort_by_key(|&(q, _)| q);
        for pair in self.factors.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(PauliError::DuplicateQubit { index: pair[0].0 });
            }
        }
        Ok(self)
    }

    fn masks(&self, num_qubits: usize) -> (usize, usize, u32) {
        let mut flip = 0usize;
        let mut parity = 0usize;
        let mut y_count = 0u32;
        for &(q, axis) in &self.factors {
            let bit = 1usize << (num_qubits - 1 - q);
            match axis {
                PauliAxis::X => flip |= bit,
                PauliAxis::Y => {
                    flip |= bit;
                    parity |= bit;
                    y_count += 1;
                }
                PauliAxis::Z => parity |= bit,
            }
        }
        (flip, parity, y_count)
    }
}

/// A real-weighted sum of Pauli strings in canonical form.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    num_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn new(num_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self, PauliError> {
        if num_qubits == 0 {
            return Err(PauliError::NoQubits);
        }
        let mut merged: std::collections::BTreeMap<Vec<(usize, PauliAxis)>, f64> =
            std::collections::BTreeMap::new();
        for term in terms {
            let term = term.canonicalized()?;
            for &(q, _) in &term.factors {
                if q >= num_qubits {
                    return Err(PauliError::QubitOutOfRange {
                        index: q,
                        num_qubits,
                    });
                }
            }
            *merged.entry(term.factors).or_insert(0.0) += term.coefficient;
        }
        let terms = merged
            .into_iter()
            .filter(|&(_, c)| c != 0.0)
            .map(|(factors, coefficient)| PauliTerm {
                coefficient,
                factors,
            })
            .collect();
        Ok(PauliSum { num_qubits, terms })
    }

    pub fn identity(num_qubits: usize, coefficient: f64) -> Result<Self, PauliError> {
        PauliSum::new(num_qubits, vec![PauliTerm::identity(coefficient)])
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    /// Parses the line-based text format. Line numbers in errors refer to
    /// the input as given, counting comment and blank lines.
    pub fn parse(text: &str) -> Result<Self, PauliError> {
        let mut num_qubits: Option<usize> = None;
        let mut terms: Vec<PauliTerm> = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            match num_qubits {
                None => {
                    if tokens.next() != Some("qubits") {
                        return Err(PauliError::Parse {
                            line: line_no,
                            message: "expected 'qubits <n>' before any term".into(),
                        });
                    }
                    let n: usize = tokens
                        .next()
                        .and_then(|tok| tok.parse().ok())
                        .ok_or_else(|| PauliError::Parse {
                            line: line_no,
                            message: "expected a qubit count after 'qubits'".into(),
                        })?;
                    if tokens.next().is_some() {
                        return Err(PauliError::Parse {
                            line: line_no,
                            message: "unexpected tokens after qubit count".into(),
                        });
                    }
                    if n == 0 {
                        return Err(PauliError::Parse {
                            line: line_no,
                            message: "qubit count must be at least 1".into(),
                        });
                    }
                    num_qubits = Some(n);
                }
                Some(n) => {
                    let coeff_tok = tokens.next().expect("split of non-empty line");
                    let coefficient: f64 =
                        coeff_tok.parse().map_err(|_| PauliError::Parse {
                            line: line_no,
                            message: format!("cannot parse coefficient '{coeff_tok}'"),
                        })?;
                    if !coefficient.is_finite() {
                        return Err(PauliError::Parse {
                            line: line_no,
                            message: format!("coefficient '{coeff_tok}' is not finite"),
                        });
                    }
                    let mut factors = Vec::new();
                    for tok in tokens {
                        let mut chars = tok.chars();
                        let axis = chars
                            .next()
                            .and_then(PauliAxis::from_char)
                            .ok_or_else(|| PauliError::Parse {
                                line: line_no,
                                message: format!(
                                    "factor '{tok}' must start with X, Y or Z"
                                ),
                            })?;
                        let qubit: usize =
                            chars.as_str().parse().map_err(|_| PauliError::Parse {
                                line: line_no,
                                message: format!("factor '{tok}' has no qubit index"),
                            })?;
                        if qubit >= n {
                            return Err(PauliError::Parse {
                                line: line_no,
                                message: format!(
                                    "qubit index {qubit} out of range for {n} qubits"
                                ),
                            });
                        }
                        if factors.iter().any(|&(q, _)| q == qubit) {
                            return Err(PauliError::Parse {
                                line: line_no,
                                message: format!("qubit {qubit} appears twice in term"),
                            });
                        }
                        factors.push((qubit, axis));
                    }
                    terms.push(PauliTerm::new(coefficient, factors));
                }
            }
        }
        let num_qubits = num_qubits.ok_or(PauliError::Parse {
            line: text.lines().count().max(1),
            message: "missing 'qubits <n>' declaration".into(),
        })?;
        PauliSum::new(num_qubits, terms)
    }

    /// Dense matrix in the computational basis, qubit 0 as the most
    /// significant bit.
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>, PauliError> {
        if self.num_qubits > MAX_DENSE_QUBITS {
            return Err(PauliError::TooManyQubits {
                got: self.num_qubits,
            });
        }
        let dim = self.dim();
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for term in &self.terms {
            let (flip, parity, y_count) = term.masks(self.num_qubits);
            let base = i_power(y_count) * term.coefficient;
            for col in 0..dim {
                let row = col ^ flip;
                let sign = if (col & parity).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                m[(row, col)] += base * sign;
            }
        }
        Ok(m)
    }

    /// Applies the operator to a statevector without materializing the
    /// dense matrix.
    pub fn apply(&self, v: &DVector<Complex64>) -> Result<DVector<Complex64>, PauliError> {
        let dim = self.dim();
        if v.len() != dim {
            return Err(PauliError::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        let mut out = DVector::<Complex64>::zeros(dim);
        for term in &self.terms {
            let (flip, parity, y_count) = term.masks(self.num_qubits);
            let base = i_power(y_count) * term.coefficient;
            for col in 0..dim {
                let sign = if (col & parity).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                out[col ^ flip] += base * sign * v[col];
            }
        }
        Ok(out)
    }

    /// Full eigendecomposition through the dense backend, eigenvalues in
    /// ascending order.
    pub fn eigendecompose(&self) -> Result<HermitianEigensystem, PauliError> {
        HermitianEigensystem::from_dense(self.to_dense()?)
    }
}

fn i_power(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.num_qubits)?;
        for term in &self.terms {
            write!(f, "{}", term.coefficient)?;
            for &(q, axis) in &term.factors {
                write!(f, " {}{}", axis.as_char(), q)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian operator.
/// Computed once and reused for every time evolution and basis change.
#[derive(Clone, Debug)]
pub struct HermitianEigensystem {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl HermitianEigensystem {
    pub fn from_dense(m: DMatrix<Complex64>) -> Result<Self, PauliError> {
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .expect("eigenvalues of a Hermitian matrix are finite")
        });
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let columns: Vec<_> = order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect();
        let eigenvectors = DMatrix::from_columns(&columns);
        Ok(HermitianEigensystem {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, j: usize) -> DVector<Complex64> {
        self.eigenvectors.column(j).into_owned()
    }

    pub fn eigenvector_matrix(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    pub fn spectral_range(&self) -> (f64, f64) {
        (
            self.eigenvalues[0],
            self.eigenvalues[self.eigenvalues.len() - 1],
        )
    }

    /// Coefficients of `v` in the eigenbasis.
    pub fn to_eigenbasis(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        self.eigenvectors.adjoint() * v
    }

    /// Reassembles a vector from eigenbasis coefficients.
    pub fn from_eigenbasis(&self, alphas: &DVector<Complex64>) -> DVector<Complex64> {
        &self.eigenvectors * alphas
    }

    /// The time-evolution unitary `exp(-i H t)`.
    pub fn unitary_exponential(&self, t: f64) -> DMatrix<Complex64> {
        let mut phased = self.eigenvectors.clone();
        for (j, lambda) in self.eigenvalues.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -lambda * t);
            for x in phased.column_mut(j).iter_mut() {
                *x *= phase;
            }
        }
        phased * self.eigenvectors.adjoint()
    }

    /// Applies `exp(-i H t)` to a vector through the eigenbasis.
    pub fn evolve(&self, v: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        let mut alphas = self.to_eigenbasis(v);
        for (j, lambda) in self.eigenvalues.iter().enumerate() {
            alphas[j] *= Complex64::from_polar(1.0, -lambda * t);
        }
        self.from_eigenbasis(&alphas)
    }
}

/// The unitary `exp(i * sum_k angles[k] * generators[k])` for Hermitian
/// generators, via eigendecomposition of the combined generator.
pub fn antihermitian_exponential(
    generators: &[PauliSum],
    angles: &[f64],
) -> Result<DMatrix<Complex64>, PauliError> {
    let first = generators.first().ok_or(PauliError::NoGenerators)?;
    if generators.len() != angles.len() {
        return Err(PauliError::AngleCountMismatch {
            expected: generators.len(),
            got: angles.len(),
        });
    }
    let n = first.num_qubits();
    let mut combined = DMatrix::<Complex64>::zeros(first.dim(), first.dim());
    for (g, &theta) in generators.iter().zip(angles) {
        if g.num_qubits() != n {
            return Err(PauliError::QubitCountMismatch {
                a: n,
                b: g.num_qubits(),
            });
        }
        combined += g.to_dense()?.scale(theta);
    }
    let eig = HermitianEigensystem::from_dense(combined)?;
    let mut phased = eig.eigenvectors.clone();
    for (j, mu) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, *mu);
        for x in phased.column_mut(j).iter_mut() {
            *x *= phase;
        }
    }
    Ok(&phased * eig.eigenvectors.adjoint())
}
