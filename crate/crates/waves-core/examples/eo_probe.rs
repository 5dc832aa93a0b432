use waves_core::ansatz::{prepare_exact, AnsatzSpec, ParameterNoise};
use waves_core::optimizer::{run_energy_only_search, run_ground_search, DriverConfig, NoiseModel, SwarmConfig, SwarmInit};
use waves_core::pauli::{PauliAxis, PauliSum, PauliTerm};
use waves_core::rng::run_seed;
use waves_core::state::{subspace_fidelity, EigenSubspace};

fn main() {
    let h = PauliSum::new(1, vec![
        PauliTerm::identity(0.22),
        PauliTerm::new(0.037, vec![(0, PauliAxis::X)]),
    ]).unwrap();
    let esys = h.eigendecompose().unwrap();
    let ground = EigenSubspace::new(esys.eigenvalues()[0], vec![esys.eigenvector(0)]).unwrap();
    let spec = AnsatzSpec::single_qubit_sum();
    let runs = 50u64;

    for (polish_std, polish_steps, dispersion) in [
        (0.15, 10, 0.02), (0.3, 25, 0.02), (0.15, 10, 0.002), (0.3, 25, 0.002),
    ] {
        let driver = DriverConfig {
            min_attempts: 1000, energy_slack: 1e6, polish_std, polish_steps,
            ..DriverConfig::default()
        };
        for sigma in [0.0, 0.14] {
            let noise = if sigma == 0.0 {
                NoiseModel::default()
            } else {
                NoiseModel { tomography_shots: None, parameter_noise: Some(ParameterNoise::new(sigma).unwrap()) }
            };
            let mut eo = Vec::new();
            let mut wit = Vec::new();
            for r in 0..runs {
                let mut config = SwarmConfig::defaults(8, SwarmInit::uniform_angles(2), run_seed(4000, r));
                config.dispersion_threshold = dispersion;
                let result = run_energy_only_search(
                    &h, &spec, 26.0, &config, &driver, noise, Some(&ground),
                ).unwrap();
                eo.push(subspace_fidelity(&prepare_exact(&spec, &result.theta_best).unwrap(), &ground).unwrap());
                let result = run_ground_search(
                    &h, &spec, 26.0, &config, &driver, noise, Some(&ground),
                ).unwrap();
                wit.push(subspace_fidelity(&prepare_exact(&spec, &result.theta_best).unwrap(), &ground).unwrap());
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            println!("polish {polish_std}/{polish_steps} disp {dispersion} sigma {sigma}: energy-only {:.4}  witness {:.4}  diff {:+.4}",
                mean(&eo), mean(&wit), mean(&wit) - mean(&eo));
        }
    }
}
