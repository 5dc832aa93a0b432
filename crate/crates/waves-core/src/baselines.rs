//! Comparison methods sharing the swarm optimizer: the folded-spectrum
//! variational search and the energy-only search.
//!
//! The folded search minimizes `<psi|(H - eps)^2|psi>`, which is zero only
//! at eigenstates with eigenvalue `eps`. It carries no witness, so nothing
//! in the search itself certifies that a converged swarm sits on an
//! eigenstate; the restart driver can only gate candidates on the folded
//! value dropping below an absolute target the caller supplies
//! ([`FoldedConfig::accept_residual`]). Attempts that never clear it burn
//! through the full restart budget.
//!
//! The energy-only search lives in [`crate::optimizer`] and is re-exported
//! here; it is the full witness search with the purity weight and the
//! purity acceptance gate removed.

use rand_distr::{Distribution, Normal};

use crate::ansatz::{apply_excitation, prepare, AnsatzSpec, ExcitationOp};
use crate::optimizer::{
    fidelity_probe_for, run_driver, AcceptanceCheck, DriverConfig, EvalError, EvalSample,
    NoiseModel, Objective, OptimizerError, SearchResult, SwarmConfig, SwarmInit,
};
use crate::pauli::{PauliError, PauliSum};
use crate::state::{EigenSubspace, StateVector};

pub use crate::optimizer::run_energy_only_search;

/// Parameters specific to the folded-spectrum search; the swarm itself is
/// configured through the shared [`SwarmConfig`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FoldedConfig {
    /// The energy shift the spectrum is folded around, in the same units
    /// as the Hamiltonian.
    pub epsilon_shift: f64,
    /// Energy distance from `epsilon_shift` at which a candidate counts as
    /// converged: an attempt is accepted once its folded value drops below
    /// `accept_residual^2`. The folded value has no internal certificate,
    /// so this scale must come from the caller.
    pub accept_residual: f64,
}

impl FoldedConfig {
    fn validate(&self) -> Result<(), OptimizerError> {
        if !self.epsilon_shift.is_finite() {
            return Err(OptimizerError::InvalidConfig {
                message: format!("epsilon_shift must be finite, got {}", self.epsilon_shift),
            });
        }
        if !self.accept_residual.is_finite() || self.accept_residual <= 0.0 {
            return Err(OptimizerError::InvalidConfig {
                message: format!(
                    "accept_residual must be finite and positive, got {}",
                    self.accept_residual
                ),
            });
        }
        Ok(())
    }
}

fn shifted_apply(
    hamiltonian: &PauliSum,
    epsilon_shift: f64,
    state: &StateVector,
) -> Result<nalgebra::DVector<crate::Complex64>, PauliError> {
    if !epsilon_shift.is_finite() {
        return Err(PauliError::NonFiniteCoefficient {
            value: epsilon_shift,
        });
    }
    let mut shifted = hamiltonian.apply(state.amplitudes())?;
    shifted.axpy(
        crate::Complex64::new(-epsilon_shift, 0.0),
        state.amplitudes(),
        crate::Complex64::new(1.0, 0.0),
    );
    Ok(shifted)
}

/// The folded-spectrum value `<psi|(H - eps)^2|psi>`, computed as the
/// squared norm of `(H - eps)|psi>` so the Pauli sum is never squared.
/// Non-negative, and zero exactly when `psi` is an eigenstate with
/// eigenvalue `eps`.
pub fn folded_objective(
    state: &StateVector,
    hamiltonian: &PauliSum,
    epsilon_shift: f64,
) -> Result<f64, PauliError> {
    Ok(shifted_apply(hamiltonian, epsilon_shift, state)?.norm_squared())
}

/// Standard deviation of a `shots`-sample mean of the folded observable:
/// `sqrt((<(H-eps)^4> - <(H-eps)^2>^2) / shots)`.
pub fn folded_shot_std(
    state: &StateVector,
    hamiltonian: &PauliSum,
    epsilon_shift: f64,
    shots: u64,
) -> Result<f64, PauliError> {
    let shifted = shifted_apply(hamiltonian, epsilon_shift, state)?;
    let second_moment = shifted.norm_squared();
    let mut fourth = hamiltonian.apply(&shifted)?;
    fourth.axpy(
        crate::Complex64::new(-epsilon_shift, 0.0),
        &shifted,
        crate::Complex64::new(1.0, 0.0),
    );
    let fourth_moment = fourth.norm_squared();
    let variance = (fourth_moment - second_moment * second_moment).max(0.0);
    Ok((variance / shots as f64).sqrt())
}

/// The folded value over ansatz parameters, under the configured noise.
///
/// There is no control qubit here, so tomography shot counts are modeled
/// as additive Gaussian noise on the objective with the true shot variance
/// of the folded observable. Parameter noise jitters the preparation
/// exactly as in the witness objective. The witness weights are ignored.
pub struct FoldedObjective<'a> {
    pub spec: &'a AnsatzSpec,
    pub hamiltonian: &'a PauliSum,
    pub epsilon_shift: f64,
    pub excitation: Option<&'a ExcitationOp>,
    pub noise: NoiseModel,
}

impl Objective for FoldedObjective<'_> {
    fn dim(&self) -> usize {
        self.spec.num_parameters()
    }

    fn evaluate(
        &self,
        theta: &[f64],
        _weights: (f64, f64),
        rng: &mut rand_chacha::ChaCha12Rng,
    ) -> Result<EvalSample, EvalError> {
        let prepared = prepare(self.spec, theta, self.noise.parameter_noise.as_ref(), rng)?;
        let trial = match self.excitation {
            Some(op) => apply_excitation(&prepared, op)?,
            None => prepared,
        };
        let exact = folded_objective(&trial, self.hamiltonian, self.epsilon_shift)?;
        let objective = match self.noise.tomography_shots {
            Some(shots) => {
                let sigma = folded_shot_std(&trial, self.hamiltonian, self.epsilon_shift, shots)?;
                let draw: f64 = Normal::new(0.0, sigma)
                    .expect("sigma is non-negative")
                    .sample(rng);
                exact + draw
            }
            None => exact,
        };
        Ok(EvalSample {
            objective,
            energy: None,
            purity: None,
        })
    }
}

/// Folded-spectrum search: the restart driver of the witness searches run
/// on [`folded_objective`], with the swarm initialized around
/// `theta_init`. The config's init must be Gaussian; its mean is replaced
/// by `theta_init`. An attempt is accepted when its scored folded value
/// drops below `folded.accept_residual` squared; `driver.energy_slack`
/// and `driver.purity_accept` are not consulted.
#[allow(clippy::too_many_arguments)]
pub fn run_folded_search(
    hamiltonian: &PauliSum,
    spec: &AnsatzSpec,
    theta_init: &[f64],
    excitation: Option<&ExcitationOp>,
    folded: &FoldedConfig,
    config: &SwarmConfig,
    driver: &DriverConfig,
    noise: NoiseModel,
    oracle: Option<&EigenSubspace>,
) -> Result<SearchResult, OptimizerError> {
    folded.validate()?;
    if theta_init.len() != spec.num_parameters() {
        return Err(OptimizerError::InvalidConfig {
            message: format!(
                "theta_init has {} parameters, ansatz has {}",
                theta_init.len(),
                spec.num_parameters()
            ),
        });
    }
    let std = match &config.init {
        SwarmInit::Gaussian { std, .. } => std.clone(),
        SwarmInit::Uniform { .. } => {
            return Err(OptimizerError::InvalidConfig {
                message: "folded search needs a Gaussian init around the initial guess".into(),
            })
        }
    };
    let mut config = config.clone();
    config.init = SwarmInit::Gaussian {
        mean: theta_init.to_vec(),
        std,
    };
    config.adaptive = false;
    let objective = FoldedObjective {
        spec,
        hamiltonian,
        epsilon_shift: folded.epsilon_shift,
        excitation,
        noise,
    };
    let probe = oracle.map(|sub| fidelity_probe_for(spec, excitation, sub));
    run_driver(
        &objective,
        &config,
        driver,
        AcceptanceCheck::ObjectiveBelow {
            ceiling: folded.accept_residual * folded.accept_residual,
        },
        probe.as_ref().map(|p| p as &dyn Fn(&[f64]) -> Result<f64, EvalError>),
        0,
    )
}
