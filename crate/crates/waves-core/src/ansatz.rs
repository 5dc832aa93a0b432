//! Parametrized trial-state preparation, excitation unitaries, parameter
//! noise, and synthetic ansatz truncation.
//!
//! An [`AnsatzSpec`] owns an ordered list of Hermitian generators `G_j` and
//! a computational reference state. In the canonical sum form the prepared
//! state is `exp(i sum_j theta_j G_j) |ref>`; the ordered-product form
//! applies `exp(i theta_j G_j)` one generator at a time, generator 0 first.
//!
//! The text format shares the Pauli-sum grammar, with `generator` lines
//! starting a new generator block and one `reference <bitstring>` line:
//!
//! ```text
//! qubits 2
//! generator
//! -0.5 Y1
//! -0.5 Z0 Y1
//! generator
//! -0.5 Y0
//! reference 01
//! ```

use crate::pauli::{antihermitian_exponential, PauliError, PauliSum, PauliTerm};
use crate::state::{basis_state, subspace_fidelity, EigenSubspace, StateError, StateVector};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnsatzError {
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("ansatz needs at least one generator")]
    NoGenerators,
    #[error("generator {index} acts on {got} qubits, ansatz declares {expected}")]
    GeneratorQubitMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("ansatz has {expected} parameters, got {got}")]
    ParameterCountMismatch { expected: usize, got: usize },
    #[error("noise sigma must be finite and non-negative, got {sigma}")]
    InvalidNoise { sigma: f64 },
    #[error("excitation angle must be finite, got {angle}")]
    InvalidAngle { angle: f64 },
    #[error("truncation threshold must be in [0, 1], got {threshold}")]
    InvalidThreshold { threshold: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// How the generator list turns into a preparation unitary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnsatzForm {
    /// `exp(i sum_j theta_j G_j)`.
    SumExponential,
    /// `exp(i theta_{k-1} G_{k-1}) ... exp(i theta_0 G_0)`, generator 0
    /// applied first.
    OrderedProduct,
}

#[derive(Clone, Debug)]
pub struct AnsatzSpec {
    name: String,
    num_qubits: usize,
    generators: Vec<PauliSum>,
    reference_bits: String,
    form: AnsatzForm,
}

impl AnsatzSpec {
    pub fn new(
        name: impl Into<String>,
        num_qubits: usize,
        generators: Vec<PauliSum>,
        reference_bits: impl Into<String>,
    ) -> Result<Self, AnsatzError> {
        Self::with_form(
            name,
            num_qubits,
            generators,
            reference_bits,
            AnsatzForm::SumExponential,
        )
    }

    pub fn with_form(
        name: impl Into<String>,
        num_qubits: usize,
        generators: Vec<PauliSum>,
        reference_bits: impl Into<String>,
        form: AnsatzForm,
    ) -> Result<Self, AnsatzError> {
        if generators.is_empty() {
            return Err(AnsatzError::NoGenerators);
        }
        for (index, g) in generators.iter().enumerate() {
            if g.num_qubits() != num_qubits {
                return Err(AnsatzError::GeneratorQubitMismatch {
                    index,
                    expected: num_qubits,
                    got: g.num_qubits(),
                });
            }
        }
        let reference_bits = reference_bits.into();
        basis_state(num_qubits, &reference_bits)?;
        Ok(AnsatzSpec {
            name: name.into(),
            num_qubits,
            generators,
            reference_bits,
            form,
        })
    }

    /// The 1-qubit spec with generators `{sigma_y/2, sigma_z/2}` from
    /// reference `|0>`; theta = (pi/2, 0) reaches `|->` exactly.
    pub fn single_qubit_sum() -> Self {
        let sy = PauliSum::new(1, vec![PauliTerm::new(0.5, vec![(0, crate::pauli::PauliAxis::Y)])])
            .expect("static spec");
        let sz = PauliSum::new(1, vec![PauliTerm::new(0.5, vec![(0, crate::pauli::PauliAxis::Z)])])
            .expect("static spec");
        AnsatzSpec::new("sum-rotation-1q", 1, vec![sy, sz], "0").expect("static spec")
    }

    /// The 1-qubit product of three rotations
    /// `exp(i phi_a) exp(i phi_b sigma_z/2) exp(i phi_c sigma_y/2)`,
    /// parameters ordered (phi_c, phi_b, phi_a).
    pub fn single_qubit_product() -> Self {
        let sy = PauliSum::new(1, vec![PauliTerm::new(0.5, vec![(0, crate::pauli::PauliAxis::Y)])])
            .expect("static spec");
        let sz = PauliSum::new(1, vec![PauliTerm::new(0.5, vec![(0, crate::pauli::PauliAxis::Z)])])
            .expect("static spec");
        let id = PauliSum::identity(1, 1.0).expect("static spec");
        AnsatzSpec::with_form(
            "product-rotation-1q",
            1,
            vec![sy, sz, id],
            "0",
            AnsatzForm::OrderedProduct,
        )
        .expect("static spec")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_parameters(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[PauliSum] {
        &self.generators
    }

    pub fn reference_bits(&self) -> &str {
        &self.reference_bits
    }

    pub fn form(&self) -> AnsatzForm {
        self.form
    }

    pub fn reference_state(&self) -> StateVector {
        basis_state(self.num_qubits, &self.reference_bits)
            .expect("reference bits validated at construction")
    }

    /// Parses the block text format (sum form).
    pub fn parse(text: &str, name: impl Into<String>) -> Result<Self, AnsatzError> {
        let mut num_qubits: Option<usize> = None;
        let mut blocks: Vec<(usize, Vec<PauliTerm>)> = Vec::new();
        let mut reference: Option<String> = None;
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
            let n = match num_qubits {
                None => {
                    let mut tokens = line.split_whitespace();
                    if tokens.next() != Some("qubits") {
                        return Err(AnsatzError::Parse {
                            line: line_no,
                            message: "expected 'qubits <n>' before any block".into(),
                        });
                    }
                    let n: usize = tokens
                        .next()
                        .and_then(|tok| tok.parse().ok())
                        .filter(|&n| n >= 1)
                        .ok_or_else(|| AnsatzError::Parse {
                            line: line_no,
                            message: "expected a positive qubit count after 'qubits'".into(),
                        })?;
                    if tokens.next().is_some() {
                        return Err(AnsatzError::Parse {
                            line: line_no,
                            message: "unexpected tokens after qubit count".into(),
                        });
                    }
                    num_qubits = Some(n);
                    continue;
                }
                Some(n) => n,
            };
            if line == "generator" {
                blocks.push((line_no, Vec::new()));
                continue;
            }
            if let Some(rest) = line.strip_prefix("reference") {
                if reference.is_some() {
                    return Err(AnsatzError::Parse {
                        line: line_no,
                        message: "duplicate 'reference' line".into(),
                    });
                }
                let bits = rest.trim();
                if bits.is_empty() || bits.split_whitespace().count() != 1 {
                    return Err(AnsatzError::Parse {
                        line: line_no,
                        message: "expected 'reference <bitstring>'".into(),
                    });
                }
                if bits.chars().count() != n || bits.chars().any(|c| c != '0' && c != '1') {
                    return Err(AnsatzError::Parse {
                        line: line_no,
                        message: format!("reference '{bits}' is not a {n}-bit string"),
                    });
                }
                reference = Some(bits.to_string());
                continue;
            }
            // a term line; parse it through the Pauli grammar
            let block = blocks.last_mut().ok_or_else(|| AnsatzError::Parse {
                line: line_no,
                message: "term line before the first 'generator'".into(),
            })?;
            let term_text = format!("qubits {n}\n{line}\n");
            let parsed = PauliSum::parse(&term_text).map_err(|e| match e {
                PauliError::Parse { message, .. } => AnsatzError::Parse {
                    line: line_no,
                    message,
                },
                other => AnsatzError::Parse {
                    line: line_no,
                    message: other.to_string(),
                },
            })?;
            block.1.extend(parsed.terms().iter().cloned());
        }
        let num_qubits = num_qubits.ok_or(AnsatzError::Parse {
            line: text.lines().count().max(1),
            message: "missing 'qubits <n>' declaration".into(),
        })?;
        let reference = reference.ok_or(AnsatzError::Parse {
            line: text.lines().count().max(1),
            message: "missing 'reference <bitstring>' line".into(),
        })?;
        let mut generators = Vec::new();
        for (line, terms) in blocks {
            if terms.is_empty() {
                return Err(AnsatzError::Parse {
                    line,
                    message: "empty generator block".into(),
                });
            }
            generators.push(PauliSum::new(num_qubits, terms)?);
        }
        AnsatzSpec::new(name, num_qubits, generators, reference)
    }
}

impl fmt::Display for AnsatzSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.num_qubits)?;
        for g in &self.generators {
            writeln!(f, "generator")?;
            for term in g.terms() {
                write!(f, "{}", term.coefficient)?;
                for &(q, axis) in &term.factors {
                    let c = match axis {
                        crate::pauli::PauliAxis::X => 'X',
                        crate::pauli::PauliAxis::Y => 'Y',
                        crate::pauli::PauliAxis::Z => 'Z',
                    };
                    write!(f, " {c}{q}")?;
                }
                writeln!(f)?;
            }
        }
        writeln!(f, "reference {}", self.reference_bits)
    }
}

/// Gaussian parameter noise of a given standard deviation, applied i.i.d.
/// to every coordinate of theta at preparation time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParameterNoise {
    sigma: f64,
}

impl ParameterNoise {
    pub fn new(sigma: f64) -> Result<Self, AnsatzError> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(AnsatzError::InvalidNoise { sigma });
        }
        Ok(ParameterNoise { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Prepares the trial state for `theta`, with optional Gaussian parameter
/// noise drawn from `rng`. Without noise the rng is not consulted.
pub fn prepare<R: Rng + ?Sized>(
    spec: &AnsatzSpec,
    theta: &[f64],
    noise: Option<&ParameterNoise>,
    rng: &mut R,
) -> Result<StateVector, AnsatzError> {
    if theta.len() != spec.num_parameters() {
        return Err(AnsatzError::ParameterCountMismatch {
            expected: spec.num_parameters(),
            got: theta.len(),
        });
    }
    let effective: Vec<f64> = match noise {
        None => theta.to_vec(),
        Some(noise) => {
            let normal = Normal::new(0.0, noise.sigma)
                .expect("sigma validated at construction");
            theta.iter().map(|&t| t + normal.sample(rng)).collect()
        }
    };
    let reference = spec.reference_state();
    let amplitudes = match spec.form {
        AnsatzForm::SumExponential => {
            let u = antihermitian_exponential(spec.generators(), &effective)?;
            u * reference.amplitudes()
        }
        AnsatzForm::OrderedProduct => {
            let mut v = reference.amplitudes().clone();
            for (g, &angle) in spec.generators().iter().zip(&effective) {
                v = apply_generator_exponential(g, angle, &v)?;
            }
            v
        }
    };
    Ok(StateVector::new(spec.num_qubits, amplitudes)?)
}

/// Applies `exp(i angle G)` to a vector. Single-string generators use the
/// closed form `cos(angle c) I + i sin(angle c) P`; anything else goes
/// through the dense eigendecomposition.
fn apply_generator_exponential(
    generator: &PauliSum,
    angle: f64,
    v: &DVector<Complex64>,
) -> Result<DVector<Complex64>, AnsatzError> {
    if generator.terms().len() == 1 {
        let coefficient = generator.terms()[0].coefficient;
        let phase = angle * coefficient;
        let string = PauliSum::new(
            generator.num_qubits(),
            vec![PauliTerm::new(1.0, generator.terms()[0].factors.clone())],
        )?;
        let pv = string.apply(v)?;
        let cos = Complex64::new(phase.cos(), 0.0);
        let isin = Complex64::new(0.0, phase.sin());
        Ok(v * cos + pv * isin)
    } else {
        let u = antihermitian_exponential(std::slice::from_ref(generator), &[angle])?;
        Ok(u * v)
    }
}

/// Noise-free preparation; no randomness is consumed.
pub fn prepare_exact(spec: &AnsatzSpec, theta: &[f64]) -> Result<StateVector, AnsatzError> {
    let mut no_rng = NoRng;
    prepare(spec, theta, None, &mut no_rng)
}

/// A perturbing unitary `exp(i angle G)` used to push a converged ground
/// guess toward a different eigenspace.
#[derive(Clone, Debug)]
pub struct ExcitationOp {
    pub generator: PauliSum,
    pub angle: f64,
}

impl ExcitationOp {
    pub fn new(generator: PauliSum, angle: f64) -> Result<Self, AnsatzError> {
        if !angle.is_finite() {
            return Err(AnsatzError::InvalidAngle { angle });
        }
        Ok(ExcitationOp { generator, angle })
    }

    /// The conventional quarter-turn excitation `exp(i (pi/2) G)`.
    pub fn half_pi(generator: PauliSum) -> Self {
        ExcitationOp {
            generator,
            angle: std::f64::consts::FRAC_PI_2,
        }
    }
}

/// Applies the excitation unitary to a state.
pub fn apply_excitation(state: &StateVector, op: &ExcitationOp) -> Result<StateVector, AnsatzError> {
    if op.generator.num_qubits() != state.num_qubits() {
        return Err(AnsatzError::State(StateError::QubitCountMismatch {
            a: op.generator.num_qubits(),
            b: state.num_qubits(),
        }));
    }
    let v = apply_generator_exponential(&op.generator, op.angle, state.amplitudes())?;
    Ok(StateVector::new(state.num_qubits(), v)?)
}

/// Result of the synthetic truncation protocol.
#[derive(Clone, Debug)]
pub struct TruncationOutcome {
    pub spec: AnsatzSpec,
    /// Ground parameters for the retained generators, in retained order.
    pub retained_theta: Vec<f64>,
    /// Original indices of removed generators, in removal order.
    pub removed_indices: Vec<usize>,
    /// Guess-state subspace fidelity of the returned spec.
    pub guess_fidelity: f64,
    /// Set when the full ansatz already misses the threshold; the spec is
    /// returned unchanged in that case.
    pub below_threshold_at_start: bool,
}

/// Greedily removes the generator with the smallest `|theta_g|` (ties to the
/// lower index) while the excited guess `E_p A'(theta_g) |ref>` keeps at
/// least `threshold` fidelity with the target subspace. At least one
/// generator is always retained.
pub fn truncate_ansatz(
    spec: &AnsatzSpec,
    theta_g: &[f64],
    excitation: &ExcitationOp,
    target: &EigenSubspace,
    threshold: f64,
) -> Result<TruncationOutcome, AnsatzError> {
    if theta_g.len() != spec.num_parameters() {
        return Err(AnsatzError::ParameterCountMismatch {
            expected: spec.num_parameters(),
            got: theta_g.len(),
        });
    }
    if !(threshold.is_finite() && (0.0..=1.0).contains(&threshold)) {
        return Err(AnsatzError::InvalidThreshold { threshold });
    }
    let guess_fidelity = |indices: &[usize]| -> Result<f64, AnsatzError> {
        let generators: Vec<PauliSum> = indices
            .iter()
            .map(|&i| spec.generators()[i].clone())
            .collect();
        let theta: Vec<f64> = indices.iter().map(|&i| theta_g[i]).collect();
        let sub = AnsatzSpec::with_form(
            spec.name(),
            spec.num_qubits(),
            generators,
            spec.reference_bits(),
            spec.form(),
        )?;
        let prepared = prepare_exact(&sub, &theta)?;
        let guess = apply_excitation(&prepared, excitation)?;
        Ok(subspace_fidelity(&guess, target)?)
    };

    let mut retained: Vec<usize> = (0..spec.num_parameters()).collect();
    let start_fidelity = guess_fidelity(&retained)?;
    if start_fidelity < threshold {
        return Ok(TruncationOutcome {
            spec: spec.clone(),
            retained_theta: theta_g.to_vec(),
            removed_indices: Vec::new(),
            guess_fidelity: start_fidelity,
            below_threshold_at_start: true,
        });
    }
    let mut removed = Vec::new();
    let mut current_fidelity = start_fidelity;
    while retained.len() >= 2 {
        let (pos, _) = retained
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| {
                theta_g[a]
                    .abs()
                    .partial_cmp(&theta_g[b].abs())
                    .expect("finite parameters")
                    .then(a.cmp(&b))
            })
            .expect("non-empty");
        let mut candidate = retained.clone();
        let removed_index = candidate.remove(pos);
        let fidelity = guess_fidelity(&candidate)?;
        if fidelity >= threshold {
            retained = candidate;
            removed.push(removed_index);
            current_fidelity = fidelity;
        } else {
            break;
        }
    }
    let generators: Vec<PauliSum> = retained
        .iter()
        .map(|&i| spec.generators()[i].clone())
        .collect();
    let retained_theta: Vec<f64> = retained.iter().map(|&i| theta_g[i]).collect();
    let truncated = AnsatzSpec::with_form(
        spec.name(),
        spec.num_qubits(),
        generators,
        spec.reference_bits(),
        spec.form(),
    )?;
    Ok(TruncationOutcome {
        spec: truncated,
        retained_theta,
        removed_indices: removed,
        guess_fidelity: current_fidelity,
        below_threshold_at_start: false,
    })
}

/// Rng stand-in for noise-free preparation paths.
struct NoRng;

impl rand::RngCore for NoRng {
    fn next_u32(&mut self) -> u32 {
        unreachable!("noise-free preparation draws no randomness")
    }

    fn next_u64(&mut self) -> u64 {
        unreachable!("noise-free preparation draws no randomness")
    }

    fn fill_bytes(&mut self, _dest: &mut [u8]) {
        unreachable!("noise-free preparation draws no randomness")
    }

    fn try_fill_bytes(&mut self, _dest: &mut [u8]) -> Result<(), rand::Error> {
        unreachable!("noise-free preparation draws no randomness")
    }
}
