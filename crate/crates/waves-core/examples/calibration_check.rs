use waves_core::ansatz::{AnsatzSpec, ExcitationOp};
use waves_core::optimizer::{
    run_energy_only_search, run_excited_search, run_ground_search, DriverConfig, NoiseModel,
    SwarmConfig, SwarmInit,
};
use waves_core::pauli::{PauliAxis, PauliSum, PauliTerm};
use waves_core::rng::run_seed;
use waves_core::state::{subspace_fidelity, EigenSubspace};

fn main() {
    let h = PauliSum::new(
        1,
        vec![
            PauliTerm::identity(0.22),
            PauliTerm::new(0.037, vec![(0, PauliAxis::X)]),
        ],
    )
    .unwrap();
    let spec = AnsatzSpec::single_qubit_sum();
    let esys = h.eigendecompose().unwrap();
    let ground = EigenSubspace::new(esys.eigenvalues()[0], vec![esys.eigenvector(0)]).unwrap();
    let excited = EigenSubspace::new(esys.eigenvalues()[1], vec![esys.eigenvector(1)]).unwrap();
    let noise = NoiseModel {
        tomography_shots: Some(1500),
        parameter_noise: None,
    };
    let config_for = |seed: u64| {
        let mut c = SwarmConfig::defaults(8, SwarmInit::uniform_angles(2), seed);
        c.max_steps = 25;
        c
    };

    // ground: 100 seeded runs
    let mut fids = Vec::new();
    let mut steps = Vec::new();
    let mut accepted = 0;
    for run in 0..100u64 {
        let seed = run_seed(1000, run);
        let r = run_ground_search(
            &h,
            &spec,
            26.0,
            &config_for(seed),
            &DriverConfig::default(),
            noise,
            None,
        )
        .unwrap();
        let psi = waves_core::ansatz::prepare_exact(&spec, &r.theta_best).unwrap();
        let fid = subspace_fidelity(&psi, &ground).unwrap();
        if !r.accepted || fid < 0.9 {
            println!(
                "run {run}: accepted={} fid={fid:.4} attempts={} total={} score={:.4} \
                 purity={:?} energy={:?} reason={:?}",
                r.accepted,
                r.attempts,
                r.total_steps,
                r.score,
                r.purity_at_best,
                r.energy_at_best,
                r.convergence_reason
            );
        }
        fids.push(fid);
        steps.push(r.steps);
        accepted += usize::from(r.accepted);
    }
    let mean = fids.iter().sum::<f64>() / 100.0;
    let min = fids.iter().cloned().fold(1.0, f64::min);
    let bad = fids.iter().filter(|&&f| f < 0.9).count();
    steps.sort_unstable();
    println!(
        "ground: mean={mean:.5} min={min:.4} bad={bad} accepted={accepted} medsteps={} maxsteps={}",
        steps[50], steps[99]
    );

    // excited from a converged ground run per seed
    let excitation = ExcitationOp::half_pi(
        PauliSum::new(1, vec![PauliTerm::new(1.0, vec![(0, PauliAxis::Z)])]).unwrap(),
    );
    let mut efids = Vec::new();
    for run in 0..100u64 {
        let seed = run_seed(2000, run);
        let g = run_ground_search(
            &h,
            &spec,
            26.0,
            &config_for(seed),
            &DriverConfig::default(),
            noise,
            None,
        )
        .unwrap();
        let mut config = config_for(seed.wrapping_add(1));
        config.init = SwarmInit::Gaussian {
            mean: vec![0.0; 2],
            std: vec![0.3, 0.3],
        };
        let r = run_excited_search(
            &h,
            &spec,
            &g.theta_best,
            &excitation,
            26.0,
            &config,
            &DriverConfig::default(),
            noise,
            None,
        )
        .unwrap();
        let psi = waves_core::ansatz::prepare_exact(&spec, &r.theta_best).unwrap();
        let trial = waves_core::ansatz::apply_excitation(&psi, &excitation).unwrap();
        efids.push(subspace_fidelity(&trial, &excited).unwrap());
    }
    let emean = efids.iter().sum::<f64>() / 100.0;
    let emin = efids.iter().cloned().fold(1.0, f64::min);
    let ebad = efids.iter().filter(|&&f| f < 0.9).count();
    println!("excited: mean={emean:.5} min={emin:.4} bad={ebad}");

    // noisy-parameter comparison: full objective vs energy-only
    let noisy = NoiseModel {
        tomography_shots: Some(1500),
        parameter_noise: Some(waves_core::ansatz::ParameterNoise::new(0.14).unwrap()),
    };
    let mut fo = Vec::new();
    let mut eo = Vec::new();
    for run in 0..100u64 {
        let seed = run_seed(3000, run);
        let r = run_ground_search(
            &h,
            &spec,
            26.0,
            &config_for(seed),
            &DriverConfig::default(),
            noisy,
            None,
        )
        .unwrap();
        let psi = waves_core::ansatz::prepare_exact(&spec, &r.theta_best).unwrap();
        fo.push(subspace_fidelity(&psi, &ground).unwrap());

        let seed2 = run_seed(3001, run);
        let r2 = run_energy_only_search(
            &h,
            &spec,
            26.0,
            &config_for(seed2),
            &DriverConfig::default(),
            noisy,
            None,
        )
        .unwrap();
        let psi2 = waves_core::ansatz::prepare_exact(&spec, &r2.theta_best).unwrap();
        eo.push(subspace_fidelity(&psi2, &ground).unwrap());
    }
    let fom = fo.iter().sum::<f64>() / 100.0;
    let eom = eo.iter().sum::<f64>() / 100.0;
    println!("noisy: fobj={fom:.4} eonly={eom:.4} gap={:.4}", fom - eom);
}
