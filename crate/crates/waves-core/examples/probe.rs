use waves_core::ansatz::{prepare_exact, apply_excitation, AnsatzForm, AnsatzSpec, ExcitationOp};
use waves_core::baselines::{run_folded_search, FoldedConfig};
use waves_core::hamiltonians::spectrum_oracle_default;
use waves_core::optimizer::{
    run_excited_search, DriverConfig, NoiseModel, SwarmConfig, SwarmInit,
};
use waves_core::pauli::PauliSum;
use waves_core::rng::run_seed;
use waves_core::state::subspace_fidelity;

fn main() {
    let h = PauliSum::parse("qubits 2\n-0.6 Z0\n-0.25 Z1\n").unwrap();
    let oracle = spectrum_oracle_default(&h).unwrap();
    println!("eigenvalues: {:?}", oracle.eigensystem.eigenvalues());

    let y1 = PauliSum::parse("qubits 2\n1.0 Y1\n").unwrap();
    let xx = PauliSum::parse("qubits 2\n1.0 X0 X1\n").unwrap();
    let spec = AnsatzSpec::with_form("pair-2q", 2, vec![y1, xx.clone()], "00", AnsatzForm::OrderedProduct)
        .unwrap();
    let excitation = ExcitationOp::new(xx, std::f64::consts::FRAC_PI_4).unwrap();
    let theta_init = [std::f64::consts::FRAC_PI_2, 0.0];

    // sanity: guess state and target eigenstate
    let guess = apply_excitation(&prepare_exact(&spec, &theta_init).unwrap(), &excitation).unwrap();
    for (j, sub) in oracle.subspaces.iter().enumerate() {
        println!("guess fid with subspace {j}: {:.4}", subspace_fidelity(&guess, sub).unwrap());
    }
    let target = apply_excitation(
        &prepare_exact(&spec, &[std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_4]).unwrap(),
        &excitation,
    )
    .unwrap();
    println!("target fid with subspace 1: {:.6}", subspace_fidelity(&target, &oracle.subspaces[1]).unwrap());

    let lambda1 = oracle.subspaces[1].eigenvalue;
    let lambda2 = oracle.subspaces[2].eigenvalue;
    let gap = lambda2 - lambda1;
    let eps_good = lambda1 + 0.01 * gap;
    let eps_mid = 0.5 * (lambda1 + lambda2);
    let t_excited = std::f64::consts::PI / gap;
    println!("eps_good {eps_good:.4}  eps_mid {eps_mid:.4}  t {t_excited:.4}");

    let master: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2024);
    let runs = 100;
    let noise = NoiseModel::default();

    let make_config = |seed: u64| SwarmConfig::defaults(
        8,
        SwarmInit::Gaussian { mean: theta_init.to_vec(), std: vec![0.3; 2] },
        seed,
    );

    let mut excited_fids = Vec::new();
    let mut excited_evals = Vec::new();
    let mut excited_any99 = 0;
    for r in 0..runs {
        let res = run_excited_search(
            &h, &spec, &theta_init, &excitation, t_excited,
            &make_config(run_seed(master, r)), &DriverConfig::default(), noise,
            Some(&oracle.subspaces[1]),
        ).unwrap();
        let state = apply_excitation(&prepare_exact(&spec, &res.theta_best).unwrap(), &excitation).unwrap();
        let max_fid = oracle.subspaces.iter()
            .map(|s| subspace_fidelity(&state, s).unwrap())
            .fold(0.0f64, f64::max);
        if max_fid >= 0.99 { excited_any99 += 1; }
        excited_fids.push(max_fid);
        excited_evals.push(res.evaluations);
    }
    println!("excited: {excited_any99}/{runs} at max fid>=0.99  min {:.4}  evals median {}",
        excited_fids.iter().cloned().fold(1.0f64, f64::min),
        { let mut v = excited_evals.clone(); v.sort_unstable(); v[v.len()/2] });

    for residual in [0.05] {
        let driver = DriverConfig { total_step_budget: 200, ..DriverConfig::default() };
        let mut good_fids = Vec::new();
        let mut good_evals = Vec::new();
        let mut good_accepted = 0;
        let mut mid_stranded = 0;
        let mut mid_accepted = 0;
        for r in 0..runs {
            let res = run_folded_search(
                &h, &spec, &theta_init, Some(&excitation),
                &FoldedConfig { epsilon_shift: eps_good, accept_residual: residual },
                &make_config(run_seed(master, r)), &driver, noise,
                Some(&oracle.subspaces[1]),
            ).unwrap();
            let state = apply_excitation(&prepare_exact(&spec, &res.theta_best).unwrap(), &excitation).unwrap();
            good_fids.push(subspace_fidelity(&state, &oracle.subspaces[1]).unwrap());
            good_evals.push(res.evaluations);
            if res.accepted { good_accepted += 1; }

            let res = run_folded_search(
                &h, &spec, &theta_init, Some(&excitation),
                &FoldedConfig { epsilon_shift: eps_mid, accept_residual: residual },
                &make_config(run_seed(master, r)), &driver, noise, None,
            ).unwrap();
            let state = apply_excitation(&prepare_exact(&spec, &res.theta_best).unwrap(), &excitation).unwrap();
            let max_fid = oracle.subspaces.iter()
                .map(|s| subspace_fidelity(&state, s).unwrap())
                .fold(0.0f64, f64::max);
            if max_fid < 0.9 { mid_stranded += 1; }
            if res.accepted { mid_accepted += 1; }
        }
        let good99 = good_fids.iter().filter(|&&f| f >= 0.99).count();
        println!("residual {residual}: good {good99}/{runs} fid>=0.99 (min {:.4}, accepted {good_accepted}, evals median {})  mid stranded {mid_stranded}/{runs} (accepted {mid_accepted})",
            good_fids.iter().cloned().fold(1.0f64, f64::min),
            { let mut v = good_evals.clone(); v.sort_unstable(); v[v.len()/2] });
    }
}
