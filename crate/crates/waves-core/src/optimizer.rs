//! Particle-swarm variational search with restarts.
//!
//! One swarm life follows the classic loop: evaluate every particle,
//! keep the `S` best, resample the rest around the survivors' weighted
//! mean, and stop on dispersion collapse, objective plateau, or a step
//! cap. A plateau usually means the swarm contracted into whichever
//! basin first captured the survivor set, so the search drivers treat
//! Dispersion and Plateau alike as "this attempt is done" and restart
//! with a fresh swarm, keeping a global step counter so random streams
//! never repeat across attempts.
//!
//! A finished attempt is scored by re-evaluating the objective at its
//! posterior mean, and accepted only when the witness agrees it found the
//! right kind of state: high control purity (the trial state sits on one
//! eigenstate) plus an energy check (against the lowest energy seen
//! anywhere in the search for ground runs, or against the initial-guess
//! energy for excited runs). An accepted candidate gets one short polishing
//! swarm initialized tightly around it; the better-scoring of the two is
//! returned.

use crate::ansatz::{apply_excitation, prepare, AnsatzError, AnsatzSpec, ExcitationOp,
    ParameterNoise};
use crate::pauli::{HermitianEigensystem, PauliError, PauliSum};
use crate::rng::{stream, STREAM_INIT, STREAM_PROBE, STREAM_RESAMPLE, STREAM_SCORE};
use crate::state::{subspace_fidelity, EigenSubspace, StateError};
use crate::witness::{objective as witness_objective, read_exact, read_sampled, WitnessError};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use std::borrow::Cow;
use thiserror::Error;

/// Errors surfaced by objective evaluation.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Witness(#[from] WitnessError),
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("invalid swarm config: {message}")]
    InvalidConfig { message: String },
    #[error("init bounds invalid at coordinate {coordinate}: lower {lower} > upper {upper}")]
    InvalidBounds {
        coordinate: usize,
        lower: f64,
        upper: f64,
    },
    #[error("init distribution has {init_dim} coordinates, objective has {dim}")]
    InitDimensionMismatch { init_dim: usize, dim: usize },
    #[error("swarm already converged ({reason:?}); start a new attempt instead")]
    AlreadyConverged { reason: ConvergenceReason },
    #[error("objective evaluation failed for particle {particle} at step {step}: {source}")]
    Evaluation {
        particle: usize,
        step: u64,
        #[source]
        source: EvalError,
    },
    #[error("search setup failed: {source}")]
    Setup {
        #[source]
        source: EvalError,
    },
}

/// One objective evaluation: the scalar being minimized plus the witness
/// quantities that drove it, when available.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalSample {
    pub objective: f64,
    pub energy: Option<f64>,
    pub purity: Option<f64>,
}

/// A stochastic objective. `weights = (a, b)` are the purity and energy
/// weights of `b * E - a * P`; objectives that do not use the witness are
/// free to ignore them.
pub trait Objective {
    fn dim(&self) -> usize;
    fn evaluate(
        &self,
        theta: &[f64],
        weights: (f64, f64),
        rng: &mut ChaCha12Rng,
    ) -> Result<EvalSample, EvalError>;
}

/// Stochastic ingredients of a simulated experiment. Both parts are
/// optional and independent: `tomography_shots` replaces exact control
/// readout with per-axis binomial sampling; `parameter_noise` jitters every
/// ansatz parameter at preparation time and offsets the witness phase by
/// one draw of the same width per evaluation, standing in for the identical
/// jitter in the phases that implement the controlled evolution. The phase
/// offset moves the energy estimate by `sigma / t` per evaluation but
/// leaves the contrast magnitude, and with it the purity, untouched.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NoiseModel {
    pub tomography_shots: Option<u64>,
    pub parameter_noise: Option<ParameterNoise>,
}

/// Initial particle distribution.
#[derive(Clone, Debug, PartialEq)]
pub enum SwarmInit {
    /// Independent uniform draws per coordinate over `[lower, upper)`.
    Uniform { lower: Vec<f64>, upper: Vec<f64> },
    /// Independent Gaussian draws per coordinate.
    Gaussian { mean: Vec<f64>, std: Vec<f64> },
}

impl SwarmInit {
    /// Uniform over `[0, 2*pi)` in every coordinate.
    pub fn uniform_angles(dim: usize) -> Self {
        SwarmInit::Uniform {
            lower: vec![0.0; dim],
            upper: vec![2.0 * std::f64::consts::PI; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SwarmInit::Uniform { lower, .. } => lower.len(),
            SwarmInit::Gaussian { mean, .. } => mean.len(),
        }
    }

    fn validate(&self, dim: usize) -> Result<(), OptimizerError> {
        let self_dim = self.dim();
        if self_dim != dim {
            return Err(OptimizerError::InitDimensionMismatch {
                init_dim: self_dim,
                dim,
            });
        }
        match self {
            SwarmInit::Uniform { lower, upper } => {
                if upper.len() != lower.len() {
                    return Err(OptimizerError::InvalidConfig {
                        message: "uniform init bound vectors differ in length".into(),
                    });
                }
                for (i, (&lo, &hi)) in lower.iter().zip(upper).enumerate() {
                    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                        return Err(OptimizerError::InvalidBounds {
                            coordinate: i,
                            lower: lo,
                            upper: hi,
                        });
                    }
                }
            }
            SwarmInit::Gaussian { mean, std } => {
                if std.len() != mean.len() {
                    return Err(OptimizerError::InvalidConfig {
                        message: "gaussian init mean and std differ in length".into(),
                    });
                }
                if mean.iter().chain(std.iter()).any(|v| !v.is_finite())
                    || std.iter().any(|&s| s < 0.0)
                {
                    return Err(OptimizerError::InvalidConfig {
                        message: "gaussian init needs finite means and non-negative stds".into(),
                    });
                }
            }
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            SwarmInit::Uniform { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(&lo, &hi)| lo + rng.gen::<f64>() * (hi - lo))
                .collect(),
            SwarmInit::Gaussian { mean, std } => mean
                .iter()
                .zip(std)
                .map(|(&m, &s)| {
                    Normal::new(m, s)
                        .expect("validated at config time")
                        .sample(rng)
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwarmConfig {
    pub num_particles: usize,
    pub survivors: usize,
    pub weight_a: f64,
    pub weight_b: f64,
    pub adaptive: bool,
    pub greedy: bool,
    pub fobj_plateau_threshold: f64,
    pub dispersion_threshold: f64,
    pub max_steps: u64,
    pub init: SwarmInit,
    pub seed: u64,
}

impl SwarmConfig {
    /// Defaults: `S = ceil(sqrt(N))`, weights `(a, b) = (1.25, 1)`,
    /// non-adaptive, non-greedy, thresholds 0.02, 100-step cap.
    pub fn defaults(num_particles: usize, init: SwarmInit, seed: u64) -> Self {
        let survivors = (num_particles as f64).sqrt().ceil() as usize;
        SwarmConfig {
            num_particles,
            survivors,
            weight_a: 1.25,
            weight_b: 1.0,
            adaptive: false,
            greedy: false,
            fobj_plateau_threshold: 0.02,
            dispersion_threshold: 0.02,
            max_steps: 100,
            init,
            seed,
        }
    }

    fn validate(&self, dim: usize) -> Result<(), OptimizerError> {
        if self.num_particles == 0 {
            return Err(OptimizerError::InvalidConfig {
                message: "num_particles must be at least 1".into(),
            });
        }
        if self.survivors == 0 || self.survivors > self.num_particles {
            return Err(OptimizerError::InvalidConfig {
                message: format!(
                    "survivors must be in 1..={}, got {}",
                    self.num_particles, self.survivors
                ),
            });
        }
        if !(self.weight_a >= 0.0 && self.weight_b >= 0.0 && self.weight_a + self.weight_b > 0.0)
        {
            return Err(OptimizerError::InvalidConfig {
                message: format!(
                    "objective weights must be non-negative and not both zero (a={}, b={})",
                    self.weight_a, self.weight_b
                ),
            });
        }
        if !(self.fobj_plateau_threshold > 0.0 && self.fobj_plateau_threshold.is_finite()) {
            return Err(OptimizerError::InvalidConfig {
                message: "plateau threshold must be positive".into(),
            });
        }
        if !(self.dispersion_threshold > 0.0 && self.dispersion_threshold.is_finite()) {
            return Err(OptimizerError::InvalidConfig {
                message: "dispersion threshold must be positive".into(),
            });
        }
        if self.max_steps == 0 {
            return Err(OptimizerError::InvalidConfig {
                message: "max_steps must be at least 1".into(),
            });
        }
        self.init.validate(dim)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Particle {
    pub theta: Vec<f64>,
    pub objective: Option<f64>,
    pub energy: Option<f64>,
    pub purity: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvergenceReason {
    Dispersion,
    Plateau,
    MaxSteps,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwarmState {
    /// Completed steps of this swarm life.
    pub step: u64,
    /// Stream coordinate for the next step; drivers keep this increasing
    /// across restart attempts.
    pub global_step: u64,
    pub particles: Vec<Particle>,
    pub posterior_mean: Vec<f64>,
    pub posterior_std: Vec<f64>,
    /// Population mean objective of the last completed step.
    pub last_mean_fobj: Option<f64>,
    /// Best (lowest) objective and its parameters from the last step.
    pub best_fobj: Option<f64>,
    pub best_theta: Option<Vec<f64>>,
    /// Lowest witness energy among all of the last step's evaluations,
    /// discarded particles included.
    pub step_energy_min: Option<f64>,
    pub converged: Option<ConvergenceReason>,
    /// Current objective weights (differ from the config after adaptive
    /// updates).
    pub weight_a: f64,
    pub weight_b: f64,
}

/// Fresh swarm with stream coordinates starting at `step_offset`. Restart
/// drivers pass the running global step so no stream is ever reused.
pub fn init_swarm_at(
    config: &SwarmConfig,
    dim: usize,
    step_offset: u64,
) -> Result<SwarmState, OptimizerError> {
    if dim == 0 {
        return Err(OptimizerError::InvalidConfig {
            message: "objective dimension must be at least 1".into(),
        });
    }
    config.validate(dim)?;
    let mut rng = stream(config.seed, step_offset, STREAM_INIT);
    let particles: Vec<Particle> = (0..config.num_particles)
        .map(|_| Particle {
            theta: config.init.sample(&mut rng),
            objective: None,
            energy: None,
            purity: None,
        })
        .collect();
    let (mean, std) = unweighted_stats(&particles, dim);
    Ok(SwarmState {
        step: 0,
        global_step: step_offset,
        particles,
        posterior_mean: mean,
        posterior_std: std,
        last_mean_fobj: None,
        best_fobj: None,
        best_theta: None,
        step_energy_min: None,
        converged: None,
        weight_a: config.weight_a,
        weight_b: config.weight_b,
    })
}

/// Fresh swarm for a standalone run.
pub fn init_swarm(config: &SwarmConfig, dim: usize) -> Result<SwarmState, OptimizerError> {
    init_swarm_at(config, dim, 0)
}

fn unweighted_stats(particles: &[Particle], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = particles.len() as f64;
    let mut mean = vec![0.0; dim];
    for p in particles {
        for (m, &t) in mean.iter_mut().zip(&p.theta) {
            *m += t / n;
        }
    }
    let mut var = vec![0.0; dim];
    for p in particles {
        for ((v, &t), &m) in var.iter_mut().zip(&p.theta).zip(&mean) {
            *v += (t - m) * (t - m) / n;
        }
    }
    (mean, var.into_iter().map(f64::sqrt).collect())
}

/// One step of the swarm: evaluate all `N` particles on their own random
/// streams, select the `S` lowest objectives (ties to the lower particle
/// index), form the survivor-weighted mean and std, check the two
/// convergence criteria, then resample `N - S` fresh particles around the
/// mean.
pub fn swarm_step<O: Objective>(
    state: &SwarmState,
    objective: &O,
    config: &SwarmConfig,
) -> Result<SwarmState, OptimizerError> {
    if let Some(reason) = state.converged {
        return Err(OptimizerError::AlreadyConverged { reason });
    }
    let dim = objective.dim();
    config.validate(dim)?;
    let n = config.num_particles;
    let s = config.survivors;
    let weights_now = (state.weight_a, state.weight_b);

    // evaluate every particle on its own stream
    let mut evaluated: Vec<Particle> = Vec::with_capacity(n);
    for (index, particle) in state.particles.iter().enumerate() {
        let mut rng = stream(config.seed, state.global_step, index as u64);
        let sample = objective
            .evaluate(&particle.theta, weights_now, &mut rng)
            .map_err(|source| OptimizerError::Evaluation {
                particle: index,
                step: state.global_step,
                source,
            })?;
        evaluated.push(Particle {
            theta: particle.theta.clone(),
            objective: Some(sample.objective),
            energy: sample.energy,
            purity: sample.purity,
        });
    }

    let fobj = |p: &Particle| p.objective.expect("evaluated above");
    let mean_fobj = evaluated.iter().map(|p| fobj(p)).sum::<f64>() / n as f64;
    let step_energy_min = evaluated
        .iter()
        .filter_map(|p| p.energy)
        .fold(None, |acc: Option<f64>, e| {
            Some(acc.map_or(e, |m| m.min(e)))
        });

    // survivor selection: S lowest objectives, ties broken by index
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        fobj(&evaluated[a])
            .partial_cmp(&fobj(&evaluated[b]))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut survivor_indices: Vec<usize> = order[..s].to_vec();
    survivor_indices.sort_unstable();
    let survivors: Vec<Particle> = survivor_indices
        .iter()
        .map(|&i| evaluated[i].clone())
        .collect();

    // survivor weights: proportional to distance below the worst survivor
    let survivor_fobj: Vec<f64> = survivors.iter().map(|p| fobj(p)).collect();
    let max_f = survivor_fobj.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let all_equal = survivor_fobj.iter().all(|&f| f == survivor_fobj[0]);
    let all_finite = survivor_fobj.iter().all(|f| f.is_finite());
    let raw: Vec<f64> = if all_equal || !all_finite {
        vec![1.0; s]
    } else {
        survivor_fobj.iter().map(|&f| (max_f - f) + 1e-12).collect()
    };
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.into_iter().map(|w| w / total).collect();

    let mut posterior_mean = vec![0.0; dim];
    for (p, &w) in survivors.iter().zip(&weights) {
        for (m, &t) in posterior_mean.iter_mut().zip(&p.theta) {
            *m += w * t;
        }
    }
    let mut posterior_var = vec![0.0; dim];
    for (p, &w) in survivors.iter().zip(&weights) {
        for ((v, &t), &m) in posterior_var.iter_mut().zip(&p.theta).zip(&posterior_mean) {
            *v += w * (t - m) * (t - m);
        }
    }
    let posterior_std: Vec<f64> = posterior_var.into_iter().map(f64::sqrt).collect();

    // adaptive objective weights from the survivor-vs-population contrast
    let (mut weight_a, mut weight_b) = (state.weight_a, state.weight_b);
    if config.adaptive {
        let pop_p = mean_of(&evaluated, |p| p.purity);
        let pop_e = mean_of(&evaluated, |p| p.energy);
        let sur_p = mean_of(&survivors, |p| p.purity);
        let sur_e = mean_of(&survivors, |p| p.energy);
        if let (Some(pp), Some(pe), Some(sp), Some(se)) = (pop_p, pop_e, sur_p, sur_e) {
            let da = (sp - pp).abs();
            let db = (se - pe).abs();
            if da + db > 0.0 {
                weight_a = (da / (da + db)).clamp(0.05, 0.95);
                weight_b = 1.0 - weight_a;
            }
        }
    }

    // convergence checks
    let max_std = posterior_std.iter().cloned().fold(0.0, f64::max);
    let converged = if max_std < config.dispersion_threshold {
        Some(ConvergenceReason::Dispersion)
    } else if let Some(prev) = state.last_mean_fobj {
        if (mean_fobj - prev).abs() < config.fobj_plateau_threshold {
            Some(ConvergenceReason::Plateau)
        } else if state.step + 1 >= config.max_steps {
            Some(ConvergenceReason::MaxSteps)
        } else {
            None
        }
    } else if state.step + 1 >= config.max_steps {
        Some(ConvergenceReason::MaxSteps)
    } else {
        None
    };

    // best particle of this step
    let best_index = order[0];
    let best_fobj = fobj(&evaluated[best_index]);
    let best_theta = evaluated[best_index].theta.clone();

    // resample around the (possibly greedy) center
    let resample_center: Vec<f64> = if config.greedy {
        best_theta.clone()
    } else {
        posterior_mean.clone()
    };
    let mut resample_rng = stream(config.seed, state.global_step, STREAM_RESAMPLE);
    let mut next_particles = survivors;
    for _ in 0..(n - s) {
        let theta: Vec<f64> = resample_center
            .iter()
            .zip(&posterior_std)
            .map(|(&m, &sd)| {
                Normal::new(m, sd)
                    .expect("std is non-negative")
                    .sample(&mut resample_rng)
            })
            .collect();
        next_particles.push(Particle {
            theta,
            objective: None,
            energy: None,
            purity: None,
        });
    }

    Ok(SwarmState {
        step: state.step + 1,
        global_step: state.global_step + 1,
        particles: next_particles,
        posterior_mean,
        posterior_std,
        last_mean_fobj: Some(mean_fobj),
        best_fobj: Some(best_fobj),
        best_theta: Some(best_theta),
        step_energy_min,
        converged,
        weight_a,
        weight_b,
    })
}

fn mean_of(particles: &[Particle], get: impl Fn(&Particle) -> Option<f64>) -> Option<f64> {
    let mut acc = 0.0;
    for p in particles {
        acc += get(p)?;
    }
    Some(acc / particles.len() as f64)
}

/// Restart, acceptance, and polish policy around the bare swarm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriverConfig {
    /// Total swarm steps across all restart attempts.
    pub total_step_budget: u64,
    /// Never accept before this many attempts have been scored.
    pub min_attempts: usize,
    /// Witness purity the scored posterior mean must reach.
    pub purity_accept: f64,
    /// Energy tolerance for the acceptance checks.
    pub energy_slack: f64,
    /// Std of the Gaussian init of the polishing swarm.
    pub polish_std: f64,
    /// Step cap of the polishing swarm; 0 disables polishing.
    pub polish_steps: u64,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            total_step_budget: 100,
            min_attempts: 2,
            purity_accept: 0.98,
            energy_slack: 0.02,
            polish_std: 0.15,
            polish_steps: 10,
        }
    }
}

impl DriverConfig {
    fn validate(&self) -> Result<(), OptimizerError> {
        if self.total_step_budget == 0 {
            return Err(OptimizerError::InvalidConfig {
                message: "total_step_budget must be at least 1".into(),
            });
        }
        if self.min_attempts == 0 {
            return Err(OptimizerError::InvalidConfig {
                message: "min_attempts must be at least 1".into(),
            });
        }
        if !((0.0..=1.0).contains(&self.purity_accept)) {
            return Err(OptimizerError::InvalidConfig {
                message: "purity_accept must be in [0, 1]".into(),
            });
        }
        if !(self.energy_slack.is_finite() && self.energy_slack >= 0.0) {
            return Err(OptimizerError::InvalidConfig {
                message: "energy_slack must be finite and non-negative".into(),
            });
        }
        if !(self.polish_std.is_finite() && self.polish_std >= 0.0) {
            return Err(OptimizerError::InvalidConfig {
                message: "polish_std must be finite and non-negative".into(),
            });
        }
        Ok(())
    }
}

/// What a finished search reports.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub theta_best: Vec<f64>,
    /// Final posterior std of the phase that produced `theta_best`.
    pub theta_uncertainty: Vec<f64>,
    /// Population mean objective per step of the winning attempt (polish
    /// steps appended when polishing ran).
    pub fobj_trace: Vec<f64>,
    /// Fidelity of the per-step posterior mean against the oracle subspace.
    pub fidelity_trace: Option<Vec<f64>>,
    /// Steps of the winning attempt (plus polish); equals the trace length.
    pub steps: u64,
    pub convergence_reason: Option<ConvergenceReason>,
    /// Scored objective at `theta_best`.
    pub score: f64,
    pub energy_at_best: Option<f64>,
    pub purity_at_best: Option<f64>,
    /// Whether a candidate passed the witness acceptance checks (as opposed
    /// to the budget running out).
    pub accepted: bool,
    /// Restart attempts consumed (polish not counted).
    pub attempts: usize,
    /// Swarm steps consumed across all attempts, polish included.
    pub total_steps: u64,
    /// Objective evaluations: `N` per step, plus one per attempt scoring
    /// and any probe evaluations.
    pub evaluations: u64,
}

pub(crate) enum AcceptanceCheck {
    /// Accept when the scored energy sits within `slack` of the lowest
    /// energy observed across all evaluations (the landscape minimum), and
    /// purity clears the floor when one is set.
    LandscapeMin { purity_floor: Option<f64> },
    /// Accept when purity clears the floor and, if the initial guess had a
    /// defined energy, the scored energy stays within `slack` of it.
    GuessAnchor {
        purity_floor: f64,
        guess_energy: Option<f64>,
    },
    /// Accept when the scored objective drops below an absolute ceiling.
    /// For objectives without witness readout, where no purity-style
    /// certificate exists and the caller must judge the scale.
    ObjectiveBelow { ceiling: f64 },
}

struct AttemptRecord {
    theta: Vec<f64>,
    sigma: Vec<f64>,
    fobj_trace: Vec<f64>,
    fidelity_trace: Option<Vec<f64>>,
    steps: u64,
    reason: Option<ConvergenceReason>,
    score: f64,
    energy: Option<f64>,
    purity: Option<f64>,
}

struct DriverScratch {
    global_step: u64,
    evaluations: u64,
    e_min_seen: f64,
}

fn run_attempt<O: Objective>(
    objective: &O,
    config: &SwarmConfig,
    budget_end: Option<u64>,
    scratch: &mut DriverScratch,
    fidelity_probe: Option<&dyn Fn(&[f64]) -> Result<f64, EvalError>>,
) -> Result<AttemptRecord, OptimizerError> {
    let dim = objective.dim();
    let mut state = init_swarm_at(config, dim, scratch.global_step)?;
    let mut fobj_trace = Vec::new();
    let mut fidelity_trace = fidelity_probe.map(|_| Vec::new());
    loop {
        state = swarm_step(&state, objective, config)?;
        scratch.global_step = state.global_step;
        scratch.evaluations += config.num_particles as u64;
        if let Some(e) = state.step_energy_min {
            if e < scratch.e_min_seen {
                scratch.e_min_seen = e;
            }
        }
        fobj_trace.push(state.last_mean_fobj.expect("step completed"));
        if let (Some(trace), Some(probe)) = (fidelity_trace.as_mut(), fidelity_probe) {
            let f = probe(&state.posterior_mean)
                .map_err(|source| OptimizerError::Setup { source })?;
            trace.push(f);
        }
        let out_of_budget = budget_end.is_some_and(|end| scratch.global_step >= end);
        if state.converged.is_some() || out_of_budget {
            break;
        }
    }

    // score the candidate by re-evaluating at the posterior mean
    let mut score_rng = stream(config.seed, scratch.global_step, STREAM_SCORE);
    scratch.evaluations += 1;
    let (score, energy, purity) = match objective.evaluate(
        &state.posterior_mean,
        (state.weight_a, state.weight_b),
        &mut score_rng,
    ) {
        Ok(sample) => (sample.objective, sample.energy, sample.purity),
        Err(EvalError::Witness(WitnessError::PhaseUndefined { .. })) => {
            (f64::INFINITY, None, None)
        }
        Err(source) => return Err(OptimizerError::Setup { source }),
    };
    Ok(AttemptRecord {
        theta: state.posterior_mean.clone(),
        sigma: state.posterior_std.clone(),
        fobj_trace,
        fidelity_trace,
        steps: state.step,
        reason: state.converged,
        score,
        energy,
        purity,
    })
}

fn energy_test(
    check: &AcceptanceCheck,
    record: &AttemptRecord,
    scratch: &DriverScratch,
    slack: f64,
) -> bool {
    match check {
        AcceptanceCheck::LandscapeMin { .. } => record
            .energy
            .is_some_and(|e| e <= scratch.e_min_seen + slack),
        AcceptanceCheck::GuessAnchor { guess_energy, .. } => match guess_energy {
            Some(guess) => record.energy.is_some_and(|e| (e - guess).abs() <= slack),
            None => true,
        },
        AcceptanceCheck::ObjectiveBelow { ceiling } => record.score <= *ceiling,
    }
}

fn accepts(check: &AcceptanceCheck, record: &AttemptRecord, scratch: &DriverScratch,
    driver: &DriverConfig) -> bool {
    let purity_ok = match check {
        AcceptanceCheck::LandscapeMin { purity_floor } => match purity_floor {
            Some(floor) => record.purity.is_some_and(|p| p >= *floor),
            None => true,
        },
        AcceptanceCheck::GuessAnchor { purity_floor, .. } => {
            record.purity.is_some_and(|p| p >= *purity_floor)
        }
        AcceptanceCheck::ObjectiveBelow { .. } => true,
    };
    purity_ok && energy_test(check, record, scratch, driver.energy_slack)
}

pub(crate) fn run_driver<O: Objective>(
    objective: &O,
    config: &SwarmConfig,
    driver: &DriverConfig,
    check: AcceptanceCheck,
    fidelity_probe: Option<&dyn Fn(&[f64]) -> Result<f64, EvalError>>,
    initial_evaluations: u64,
) -> Result<SearchResult, OptimizerError> {
    driver.validate()?;
    let dim = objective.dim();
    config.validate(dim)?;
    let mut scratch = DriverScratch {
        global_step: 0,
        evaluations: initial_evaluations,
        e_min_seen: f64::INFINITY,
    };
    let mut records: Vec<AttemptRecord> = Vec::new();
    let mut accepted_record: Option<AttemptRecord> = None;
    let mut attempts = 0usize;
    while scratch.global_step < driver.total_step_budget {
        let record = run_attempt(
            objective,
            config,
            Some(driver.total_step_budget),
            &mut scratch,
            fidelity_probe,
        )?;
        attempts += 1;
        let is_acceptable =
            attempts >= driver.min_attempts && accepts(&check, &record, &scratch, driver);
        if is_acceptable {
            accepted_record = Some(record);
            break;
        }
        records.push(record);
    }
    let accepted = accepted_record.is_some();
    // on budget exhaustion, prefer the best-scoring attempt whose energy
    // still passes the witness energy test; the raw best score is only a
    // last resort
    let fallback = |records: Vec<AttemptRecord>| -> Option<AttemptRecord> {
        let mut vetted: Option<AttemptRecord> = None;
        let mut any: Option<AttemptRecord> = None;
        for record in records {
            let passes = energy_test(&check, &record, &scratch, driver.energy_slack);
            if any.as_ref().is_none_or(|b| record.score < b.score) {
                any = Some(clone_record(&record));
            }
            if passes && vetted.as_ref().is_none_or(|b| record.score < b.score) {
                vetted = Some(record);
            }
        }
        vetted.or(any)
    };
    let mut winner = accepted_record
        .or_else(|| fallback(records))
        .expect("budget >= 1 guarantees at least one attempt");

    // one local polishing swarm around the winning candidate
    if driver.polish_steps > 0 {
        let polish_config = SwarmConfig {
            init: SwarmInit::Gaussian {
                mean: winner.theta.clone(),
                std: vec![driver.polish_std; dim],
            },
            max_steps: driver.polish_steps,
            ..config.clone()
        };
        let polish = run_attempt(objective, &polish_config, None, &mut scratch, fidelity_probe)?;
        let polish_anchor_ok = match &check {
            AcceptanceCheck::GuessAnchor {
                guess_energy: Some(guess),
                ..
            } => polish
                .energy
                .is_some_and(|e| (e - guess).abs() <= driver.energy_slack),
            _ => true,
        };
        let polish_wins = polish.score < winner.score && polish_anchor_ok;
        winner.fobj_trace.extend_from_slice(&polish.fobj_trace);
        if let (Some(trace), Some(polish_trace)) =
            (winner.fidelity_trace.as_mut(), polish.fidelity_trace.as_ref())
        {
            trace.extend_from_slice(polish_trace);
        }
        winner.steps += polish.steps;
        winner.reason = polish.reason;
        if polish_wins {
            winner.theta = polish.theta;
            winner.sigma = polish.sigma;
            winner.score = polish.score;
            winner.energy = polish.energy;
            winner.purity = polish.purity;
        }
    }

    Ok(SearchResult {
        theta_best: winner.theta,
        theta_uncertainty: winner.sigma,
        fobj_trace: winner.fobj_trace,
        fidelity_trace: winner.fidelity_trace,
        steps: winner.steps,
        convergence_reason: winner.reason,
        score: winner.score,
        energy_at_best: winner.energy,
        purity_at_best: winner.purity,
        accepted,
        attempts,
        total_steps: scratch.global_step,
        evaluations: scratch.evaluations,
    })
}

fn clone_record(r: &AttemptRecord) -> AttemptRecord {
    AttemptRecord {
        theta: r.theta.clone(),
        sigma: r.sigma.clone(),
        fobj_trace: r.fobj_trace.clone(),
        fidelity_trace: r.fidelity_trace.clone(),
        steps: r.steps,
        reason: r.reason,
        score: r.score,
        energy: r.energy,
        purity: r.purity,
    }
}

/// The witness-based objective `b * E - a * P` over ansatz parameters,
/// optionally behind an excitation unitary and under the configured noise.
/// An undefined phase with `b > 0` maps to an infinite objective (the
/// particle is simply unfit); other failures propagate. With
/// `record_purity` off the sample's purity is withheld, modeling a
/// protocol that never performs the purity readout.
pub struct WitnessObjective<'a> {
    pub spec: &'a AnsatzSpec,
    pub eigensystem: &'a HermitianEigensystem,
    pub t: f64,
    pub excitation: Option<&'a ExcitationOp>,
    pub noise: NoiseModel,
    pub record_purity: bool,
}

impl Objective for WitnessObjective<'_> {
    fn dim(&self) -> usize {
        self.spec.num_parameters()
    }

    fn evaluate(
        &self,
        theta: &[f64],
        weights: (f64, f64),
        rng: &mut ChaCha12Rng,
    ) -> Result<EvalSample, EvalError> {
        let (a, b) = weights;
        let prepared = prepare(self.spec, theta, self.noise.parameter_noise.as_ref(), rng)?;
        let trial = match self.excitation {
            Some(op) => apply_excitation(&prepared, op)?,
            None => prepared,
        };
        let alphas = self.eigensystem.to_eigenbasis(trial.amplitudes());
        let eigenvalues: Cow<'_, [f64]> = match &self.noise.parameter_noise {
            Some(noise) => {
                let offset = Normal::new(0.0, noise.sigma())
                    .expect("sigma validated at construction")
                    .sample(rng)
                    / self.t;
                self.eigensystem
                    .eigenvalues()
                    .iter()
                    .map(|&l| l + offset)
                    .collect::<Vec<f64>>()
                    .into()
            }
            None => self.eigensystem.eigenvalues().into(),
        };
        let readout = match self.noise.tomography_shots {
            Some(shots) => read_sampled(&alphas, &eigenvalues, self.t, shots, rng)?,
            None => read_exact(&alphas, &eigenvalues, self.t)?,
        };
        let objective = match witness_objective(&readout, a, b) {
            Ok(f) => f,
            Err(WitnessError::PhaseUndefined { .. }) => f64::INFINITY,
            Err(other) => return Err(other.into()),
        };
        Ok(EvalSample {
            objective,
            energy: readout.energy,
            purity: self.record_purity.then_some(readout.purity),
        })
    }
}

pub(crate) fn fidelity_probe_for<'a>(
    spec: &'a AnsatzSpec,
    excitation: Option<&'a ExcitationOp>,
    subspace: &'a EigenSubspace,
) -> impl Fn(&[f64]) -> Result<f64, EvalError> + 'a {
    move |theta: &[f64]| {
        let prepared = crate::ansatz::prepare_exact(spec, theta)?;
        let trial = match excitation {
            Some(op) => apply_excitation(&prepared, op)?,
            None => prepared,
        };
        Ok(subspace_fidelity(&trial, subspace)?)
    }
}

/// Ground-state search: minimizes `b * E - a * P` with restarts until the
/// witness accepts a candidate (purity at least `purity_accept` and scored
/// energy within `energy_slack` of the lowest energy seen anywhere), then
/// polishes it.
pub fn run_ground_search(
    hamiltonian: &PauliSum,
    spec: &AnsatzSpec,
    t: f64,
    config: &SwarmConfig,
    driver: &DriverConfig,
    noise: NoiseModel,
    oracle: Option<&EigenSubspace>,
) -> Result<SearchResult, OptimizerError> {
    let eigensystem = hamiltonian
        .eigendecompose()
        .map_err(|e| OptimizerError::Setup { source: e.into() })?;
    let objective = WitnessObjective {
        spec,
        eigensystem: &eigensystem,
        t,
        excitation: None,
        noise,
        record_purity: true,
    };
    let check = AcceptanceCheck::LandscapeMin {
        purity_floor: Some(driver.purity_accept),
    };
    let probe = oracle.map(|sub| fidelity_probe_for(spec, None, sub));
    run_driver(
        &objective,
        config,
        driver,
        check,
        probe.as_ref().map(|p| p as &dyn Fn(&[f64]) -> Result<f64, EvalError>),
        0,
    )
}

/// Energy-only search (`a = 0, b = 1`): the same restart driver with the
/// purity acceptance check removed, so only the energy-vs-landscape-minimum
/// test gates a candidate. The protocol never performs the purity readout,
/// so every sample and the returned `purity_at_best` carry `None`; that is
/// the accounting hook for comparing measurement budgets against the
/// witness-gated search.
pub fn run_energy_only_search(
    hamiltonian: &PauliSum,
    spec: &AnsatzSpec,
    t: f64,
    config: &SwarmConfig,
    driver: &DriverConfig,
    noise: NoiseModel,
    oracle: Option<&EigenSubspace>,
) -> Result<SearchResult, OptimizerError> {
    let eigensystem = hamiltonian
        .eigendecompose()
        .map_err(|e| OptimizerError::Setup { source: e.into() })?;
    let mut config = config.clone();
    config.weight_a = 0.0;
    config.weight_b = 1.0;
    config.adaptive = false;
    let objective = WitnessObjective {
        spec,
        eigensystem: &eigensystem,
        t,
        excitation: None,
        noise,
        record_purity: false,
    };
    let check = AcceptanceCheck::LandscapeMin { purity_floor: None };
    let probe = oracle.map(|sub| fidelity_probe_for(spec, None, sub));
    run_driver(
        &objective,
        &config,
        driver,
        check,
        probe.as_ref().map(|p| p as &dyn Fn(&[f64]) -> Result<f64, EvalError>),
        0,
    )
}

/// Excited-state search: pure purity maximization (`a = 1, b = 0`) of the
/// excited trial `E_p A(theta) |ref>`, with the swarm initialized around
/// the converged ground parameters. The config's init must be Gaussian; its
/// mean is replaced by `theta_g`. Acceptance anchors the scored energy to
/// the measured energy of the initial guess when that energy is defined,
/// and falls back to a purity-only check otherwise.
pub fn run_excited_search(
    hamiltonian: &PauliSum,
    spec: &AnsatzSpec,
    theta_g: &[f64],
    excitation: &ExcitationOp,
    t: f64,
    config: &SwarmConfig,
    driver: &DriverConfig,
    noise: NoiseModel,
    oracle: Option<&EigenSubspace>,
) -> Result<SearchResult, OptimizerError> {
    if theta_g.len() != spec.num_parameters() {
        return Err(OptimizerError::InvalidConfig {
            message: format!(
                "theta_g has {} parameters, ansatz has {}",
                theta_g.len(),
                spec.num_parameters()
            ),
        });
    }
    let std = match &config.init {
        SwarmInit::Gaussian { std, .. } => std.clone(),
        SwarmInit::Uniform { .. } => {
            return Err(OptimizerError::InvalidConfig {
                message: "excited search needs a Gaussian init around the ground parameters"
                    .into(),
            })
        }
    };
    let eigensystem = hamiltonian
        .eigendecompose()
        .map_err(|e| OptimizerError::Setup { source: e.into() })?;
    let mut config = config.clone();
    config.init = SwarmInit::Gaussian {
        mean: theta_g.to_vec(),
        std,
    };
    config.weight_a = 1.0;
    config.weight_b = 0.0;
    config.adaptive = false;
    let objective = WitnessObjective {
        spec,
        eigensystem: &eigensystem,
        t,
        excitation: Some(excitation),
        noise,
        record_purity: true,
    };

    // measure the initial guess once; its energy anchors acceptance
    let mut probe_rng = stream(config.seed, 0, STREAM_PROBE);
    let guess_sample = objective
        .evaluate(theta_g, (1.0, 0.0), &mut probe_rng)
        .map_err(|source| OptimizerError::Setup { source })?;
    let check = AcceptanceCheck::GuessAnchor {
        purity_floor: driver.purity_accept,
        guess_energy: guess_sample.energy,
    };
    let probe = oracle.map(|sub| fidelity_probe_for(spec, Some(excitation), sub));
    run_driver(
        &objective,
        &config,
        driver,
        check,
        probe.as_ref().map(|p| p as &dyn Fn(&[f64]) -> Result<f64, EvalError>),
        1,
    )
}
