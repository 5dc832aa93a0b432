//! The single-control-qubit eigenstate witness.
//!
//! After the controlled evolution `|0><0| x I + |1><1| x exp(-i H t)` acts
//! on `|+>` tensor a trial state with eigenbasis weights `alpha_j`, the
//! reduced control-qubit state has diagonal entries exactly 1/2 and
//! upper-right entry
//!
//! ```text
//! c(t) = (1/2) * sum_j |alpha_j|^2 * exp(+i lambda_j t)
//! ```
//!
//! Its magnitude measures how concentrated the trial state is on a single
//! eigenspace (purity of the control qubit), and its argument divided by `t`
//! estimates the occupied eigenvalue on the branch `(-pi/t, pi/t]`. Both are
//! read from Bloch-vector tomography of the control qubit, either exactly or
//! from a finite number of shots per axis.

use crate::pauli::HermitianEigensystem;
use nalgebra::{DVector, Matrix2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

/// Off-diagonal magnitudes at or below this threshold make the phase (and
/// therefore the energy estimate) undefined.
pub const PHASE_MAGNITUDE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum WitnessError {
    #[error(
        "energy is undefined: off-diagonal magnitude {magnitude:.3e} is at or below {PHASE_MAGNITUDE_FLOOR:.0e}"
    )]
    PhaseUndefined { magnitude: f64 },
    #[error("evolution time must be positive and finite, got {t}")]
    InvalidTime { t: f64 },
    #[error("spectral range is zero; no evolution time separates the eigenvalues")]
    FlatSpectrum,
    #[error("objective weights must be non-negative and not both zero (a={a}, b={b})")]
    InvalidWeights { a: f64, b: f64 },
    #[error("tomography needs at least one shot")]
    NoShots,
    #[error("{got} eigenbasis weights for {expected} eigenvalues")]
    WeightCountMismatch { expected: usize, got: usize },
}

/// Bloch-vector description of the control qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlQubitState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl ControlQubitState {
    pub fn from_bloch(x: f64, y: f64, z: f64) -> Self {
        ControlQubitState { x, y, z }
    }

    /// State with upper-right density-matrix entry `c` and diagonal 1/2.
    pub fn from_off_diagonal(c: Complex64) -> Self {
        ControlQubitState {
            x: 2.0 * c.re,
            y: -2.0 * c.im,
            z: 0.0,
        }
    }

    /// The upper-right density-matrix entry `(x - i y) / 2`.
    pub fn off_diagonal(&self) -> Complex64 {
        Complex64::new(self.x / 2.0, -self.y / 2.0)
    }

    pub fn density_matrix(&self) -> Matrix2<Complex64> {
        let c = self.off_diagonal();
        Matrix2::new(
            Complex64::new((1.0 + self.z) / 2.0, 0.0),
            c,
            c.conj(),
            Complex64::new((1.0 - self.z) / 2.0, 0.0),
        )
    }

    pub fn bloch_norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// `Tr rho^2 = (1 + |r|^2) / 2`.
    pub fn purity(&self) -> f64 {
        (1.0 + self.x * self.x + self.y * self.y + self.z * self.z) / 2.0
    }

    /// Von Neumann entropy in nats. Bloch norms above 1 are clamped so the
    /// eigenvalue probabilities stay in [0, 1]; eigenvalues below 1e-15
    /// contribute zero.
    pub fn von_neumann_entropy(&self) -> f64 {
        let r = self.bloch_norm().min(1.0);
        let p = [(1.0 + r) / 2.0, (1.0 - r) / 2.0];
        -p.iter()
            .filter(|&&pk| pk >= 1e-15)
            .map(|&pk| pk * pk.ln())
            .sum::<f64>()
    }

    /// `1 - Tr rho^2`, a lower bound on the von Neumann entropy in nats.
    pub fn linear_entropy(&self) -> f64 {
        1.0 - self.purity()
    }
}

fn check_time(t: f64) -> Result<(), WitnessError> {
    if !(t.is_finite() && t > 0.0) {
        return Err(WitnessError::InvalidTime { t });
    }
    Ok(())
}

/// Exact control-qubit state for eigenbasis weights `alphas` evolved for
/// time `t`.
pub fn control_state(
    alphas: &DVector<Complex64>,
    eigenvalues: &[f64],
    t: f64,
) -> Result<ControlQubitState, WitnessError> {
    check_time(t)?;
    if alphas.len() != eigenvalues.len() {
        return Err(WitnessError::WeightCountMismatch {
            expected: eigenvalues.len(),
            got: alphas.len(),
        });
    }
    let mut c = Complex64::new(0.0, 0.0);
    for (alpha, &lambda) in alphas.iter().zip(eigenvalues) {
        c += Complex64::from_polar(alpha.norm_sqr() / 2.0, lambda * t);
    }
    Ok(ControlQubitState::from_off_diagonal(c))
}

/// Finite-shot Bloch tomography: `shots` projective measurements per axis
/// for x and y (z is fixed at the circuit value and not estimated), with the
/// estimated vector rescaled onto the Bloch ball when it lands outside.
pub fn tomography_sample<R: Rng + ?Sized>(
    ideal: &ControlQubitState,
    shots: u64,
    rng: &mut R,
) -> Result<ControlQubitState, WitnessError> {
    if shots == 0 {
        return Err(WitnessError::NoShots);
    }
    let mut estimate = |component: f64| -> f64 {
        let p = ((1.0 + component) / 2.0).clamp(0.0, 1.0);
        let up = Binomial::new(shots, p)
            .expect("probability is in [0, 1]")
            .sample(rng);
        2.0 * (up as f64) / (shots as f64) - 1.0
    };
    let x = estimate(ideal.x);
    let y = estimate(ideal.y);
    let z = ideal.z;
    let r = (x * x + y * y + z * z).sqrt();
    let scale = if r > 1.0 { 1.0 / r } else { 1.0 };
    Ok(ControlQubitState::from_bloch(
        x * scale,
        y * scale,
        z * scale,
    ))
}

/// Energy estimate `Arg(c) / t` on the branch `(-pi/t, pi/t]`.
pub fn energy_estimate(state: &ControlQubitState, t: f64) -> Result<f64, WitnessError> {
    check_time(t)?;
    let c = state.off_diagonal();
    let magnitude = c.norm();
    if magnitude <= PHASE_MAGNITUDE_FLOOR {
        return Err(WitnessError::PhaseUndefined { magnitude });
    }
    let mut angle = c.arg();
    if angle == -std::f64::consts::PI {
        angle = std::f64::consts::PI;
    }
    Ok(angle / t)
}

/// Everything one witness evaluation yields.
#[derive(Clone, Copy, Debug)]
pub struct WitnessReadout {
    /// `None` when the off-diagonal magnitude is below the phase floor.
    pub energy: Option<f64>,
    pub purity: f64,
    pub von_neumann_entropy: f64,
    pub linear_entropy: f64,
    pub control: ControlQubitState,
    pub shots_per_axis: Option<u64>,
}

fn readout_from_control(
    control: ControlQubitState,
    t: f64,
    shots_per_axis: Option<u64>,
) -> WitnessReadout {
    let energy = match energy_estimate(&control, t) {
        Ok(e) => Some(e),
        Err(_) => None,
    };
    WitnessReadout {
        energy,
        purity: control.purity(),
        von_neumann_entropy: control.von_neumann_entropy(),
        linear_entropy: control.linear_entropy(),
        control,
        shots_per_axis,
    }
}

/// Witness readout from the exact control state.
pub fn read_exact(
    alphas: &DVector<Complex64>,
    eigenvalues: &[f64],
    t: f64,
) -> Result<WitnessReadout, WitnessError> {
    let control = control_state(alphas, eigenvalues, t)?;
    Ok(readout_from_control(control, t, None))
}

/// Witness readout from finite-shot tomography of the control state.
pub fn read_sampled<R: Rng + ?Sized>(
    alphas: &DVector<Complex64>,
    eigenvalues: &[f64],
    t: f64,
    shots_per_axis: u64,
    rng: &mut R,
) -> Result<WitnessReadout, WitnessError> {
    let ideal = control_state(alphas, eigenvalues, t)?;
    let sampled = tomography_sample(&ideal, shots_per_axis, rng)?;
    Ok(readout_from_control(sampled, t, Some(shots_per_axis)))
}

/// The search objective `b * E - a * P`. With `b = 0` an undefined energy is
/// tolerated (the estimator is not consulted); with `b > 0` it is an error.
pub fn objective(readout: &WitnessReadout, a: f64, b: f64) -> Result<f64, WitnessError> {
    if !(a >= 0.0 && b >= 0.0 && a + b > 0.0) {
        return Err(WitnessError::InvalidWeights { a, b });
    }
    let energy_term = if b > 0.0 {
        match readout.energy {
            Some(e) => b * e,
            None => {
                return Err(WitnessError::PhaseUndefined {
                    magnitude: readout.control.off_diagonal().norm(),
                })
            }
        }
    } else {
        0.0
    };
    Ok(energy_term - a * readout.purity)
}

/// The long-time average of the control purity,
/// `(1 + sum_j |alpha_j|^4) / 2` for non-degenerate spectra.
pub fn time_averaged_purity(alphas: &DVector<Complex64>) -> f64 {
    let inverse_participation: f64 = alphas.iter().map(|a| a.norm_sqr().powi(2)).sum();
    (1.0 + inverse_participation) / 2.0
}

/// How the witness evolution time is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeStrategy {
    /// `t = (pi/2) / (lambda_max - lambda_min)` from the full spectrum.
    SpectralRange,
    /// `t = (pi/2) / bound` for a caller-supplied bound on the spectral
    /// range (e.g. a mean-field estimate when the spectrum is unknown).
    Bound(f64),
}

pub fn choose_evolution_time(
    eigensystem: &HermitianEigensystem,
    strategy: TimeStrategy,
) -> Result<f64, WitnessError> {
    let range = match strategy {
        TimeStrategy::SpectralRange => {
            let (lo, hi) = eigensystem.spectral_range();
            hi - lo
        }
        TimeStrategy::Bound(bound) => bound,
    };
    if !(range.is_finite() && range > 0.0) {
        return Err(WitnessError::FlatSpectrum);
    }
    Ok(std::f64::consts::FRAC_PI_2 / range)
}
