use super::*;
use crate::fockspace::QuantumState;
use crate::models::rabi_from_dimensionless;
use crate::spectral;
use ndarray::Array2;

fn approx(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

#[test]
fn step_policy_picks_the_finer_of_both_rules() {
    let policy = StepPolicy::default();
    let nu = std::f64::consts::TAU * 1.0e6;
    // long run: the fast period dominates
    approx(policy.dt_target(nu, 0.25), 1.0e-6 / 20.0, 1e-18);
    // short run: the minimum substep count dominates
    approx(policy.dt_target(nu, 1.0e-4), 1.0e-4 / 5000.0, 1e-18);
    // no fast scale at all
    approx(policy.dt_target(0.0, 1.0), 1.0 / 5000.0, 1e-18);
}

#[test]
fn stationary_state_stays_put() {
    // constant H, psi0 an eigenstate: |<psi(t)|psi0>| = 1 within 1e-8
    let space = SpaceSpec::new(10).unwrap();
    let params = rabi_from_dimensionless(8.0, 0.7, 1.0).unwrap();
    let h_op = rabi_hamiltonian(&params, &space);
    let gs = spectral::ground_state(&h_op).unwrap();
    let mut h = ConstantHamiltonian {
        fastest: params.omega,
        matrix: h_op.entries,
    };
    let times = sample_times(5.0, 10);
    let (final_state, stats) = propagate_schrodinger(
        &mut h,
        &gs.state,
        0.0,
        5.0,
        &StepPolicy::default(),
        &times,
        |_, _| {},
    )
    .unwrap();
    let overlap = final_state.inner(&gs.state).norm();
    approx(overlap, 1.0, 1e-8);
    assert!(stats.max_norm_drift < 1e-9);
}

#[test]
fn rk4_is_fourth_order_on_a_rabi_ramp() {
    // halving dt shrinks the global sigma_z error by 16 within 20%
    let space = SpaceSpec::new(14).unwrap();
    let target = rabi_from_dimensionless(4.0, 0.8, 1.0).unwrap();
    let tau = 3.0;
    let run = |steps_per_period: f64| -> f64 {
        let mut h = RabiRampHamiltonian::new(target, tau, &space);
        let policy = StepPolicy {
            steps_per_period,
            min_substeps: 1.0,
        };
        let psi0 = vacuum_spin_down(&space);
        let times = vec![0.0, tau];
        let (psi, _) =
            propagate_schrodinger(&mut h, &psi0, 0.0, tau, &policy, &times, |_, _| {}).unwrap();
        let probs = psi.probabilities();
        let b = space.boson_dim();
        probs
            .iter()
            .enumerate()
            .map(|(i, p)| if i < b { *p } else { -*p })
            .sum()
    };
    let reference = run(640.0);
    let coarse = (run(20.0) - reference).abs();
    let fine = (run(40.0) - reference).abs();
    assert!(coarse > 1e-12, "coarse error too small to resolve the order");
    let ratio = coarse / fine;
    assert!(
        (12.8..=19.2).contains(&ratio),
        "convergence ratio {ratio} (coarse {coarse:.3e}, fine {fine:.3e})"
    );
}

#[test]
fn dephasing_coherence_decays_at_twice_the_rate() {
    let space = SpaceSpec::new(1).unwrap();
    let b = space.boson_dim();
    let dim = space.total_dim();
    let gamma = 0.3;
    let mut psi = StateVector::basis(dim, 0);
    psi.amplitudes[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    psi.amplitudes[b] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let rho0 = DensityMatrix::from_pure(&psi);
    let mut h = ConstantHamiltonian {
        matrix: Array2::zeros((dim, dim)),
        fastest: 0.0,
    };
    let rates = NoiseRates {
        gamma_dp: gamma,
        ..Default::default()
    };
    let t_end = 2.0;
    let times = sample_times(t_end, 8);
    let mut checked = 0;
    let (_, stats) = propagate_lindblad(
        &mut h,
        &rho0,
        &rates,
        &space,
        0.0,
        t_end,
        &StepPolicy::default(),
        &times,
        |t, rho: &DensityMatrix| {
            let coherence = rho.entries[(0, b)].norm();
            approx(coherence, 0.5 * (-2.0 * gamma * t).exp(), 1e-8);
            checked += 1;
        },
    )
    .unwrap();
    assert_eq!(checked, 9);
    assert!(stats.max_trace_drift < 1e-12);
    assert_eq!(stats.positivity_warnings, 0);
}

#[test]
fn phonon_damping_follows_the_exponential_law() {
    let space = SpaceSpec::new(12).unwrap();
    let b = space.boson_dim();
    let n0 = 3;
    let gamma = 0.4;
    let psi = StateVector::basis(space.total_dim(), b + n0); // |down, n0>
    let rho0 = DensityMatrix::from_pure(&psi);
    let mut h = ConstantHamiltonian {
        matrix: Array2::zeros((space.total_dim(), space.total_dim())),
        fastest: 0.0,
    };
    let rates = NoiseRates {
        gamma_a: gamma,
        ..Default::default()
    };
    let t_end = 1.5;
    let times = sample_times(t_end, 6);
    propagate_lindblad(
        &mut h,
        &rho0,
        &rates,
        &space,
        0.0,
        t_end,
        &StepPolicy::default(),
        &times,
        |t, rho: &DensityMatrix| {
            let pops = rho.fock_populations(&space).unwrap();
            let mean_n: f64 = pops.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
            approx(mean_n, n0 as f64 * (-gamma * t).exp(), 1e-8);
        },
    )
    .unwrap();
}

#[test]
fn phonon_heating_follows_the_exponential_law() {
    let space = SpaceSpec::new(24).unwrap();
    let gamma = 0.5;
    let psi = vacuum_spin_down(&space);
    let rho0 = DensityMatrix::from_pure(&psi);
    let mut h = ConstantHamiltonian {
        matrix: Array2::zeros((space.total_dim(), space.total_dim())),
        fastest: 0.0,
    };
    let rates = NoiseRates {
        gamma_h: gamma,
        ..Default::default()
    };
    let t_end = 0.8; // <n> grows to e^0.4 - 1, far below the cutoff
    let times = sample_times(t_end, 4);
    propagate_lindblad(
        &mut h,
        &rho0,
        &rates,
        &space,
        0.0,
        t_end,
        &StepPolicy::default(),
        &times,
        |t, rho: &DensityMatrix| {
            let pops = rho.fock_populations(&space).unwrap();
            let mean_n: f64 = pops.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
            approx(mean_n, (gamma * t).exp() - 1.0, 1e-7);
        },
    )
    .unwrap();
}

#[test]
fn lindblad_with_zero_rates_reproduces_unitary_dynamics() {
    let space = SpaceSpec::new(16).unwrap();
    let target = rabi_from_dimensionless(5.0, 0.9, 1.0).unwrap();
    let tau = 2.0;
    let times = sample_times(tau, 20);
    let policy = StepPolicy::default();

    let mut h = RabiRampHamiltonian::new(target, tau, &space);
    let psi0 = vacuum_spin_down(&space);
    let mut unitary_sz = Vec::new();
    propagate_schrodinger(&mut h, &psi0, 0.0, tau, &policy, &times, |_, psi| {
        let probs = psi.probabilities();
        let b = space.boson_dim();
        unitary_sz.push(
            probs
                .iter()
                .enumerate()
                .map(|(i, p)| if i < b { *p } else { -*p })
                .sum::<f64>(),
        );
    })
    .unwrap();

    let mut h = RabiRampHamiltonian::new(target, tau, &space);
    let rho0 = DensityMatrix::from_pure(&psi0);
    let mut lindblad_sz = Vec::new();
    propagate_lindblad(
        &mut h,
        &rho0,
        &NoiseRates::default(),
        &space,
        0.0,
        tau,
        &policy,
        &times,
        |_, rho: &DensityMatrix| {
            let probs = rho.probabilities();
            let b = space.boson_dim();
            lindblad_sz.push(
                probs
                    .iter()
                    .enumerate()
                    .map(|(i, p)| if i < b { *p } else { -*p })
                    .sum::<f64>(),
            );
        },
    )
    .unwrap();

    for (u, l) in unitary_sz.iter().zip(lindblad_sz.iter()) {
        approx(*u, *l, 1e-6);
    }
}

#[test]
fn sudden_quench_freezes_the_state() {
    let target = rabi_from_dimensionless(50.0, 1.0, 1.0).unwrap();
    let mut spec = QuenchSpec::new(target, 1e-8);
    spec.cutoff_seed = 30;
    let res = run_quench_rabi(&spec).unwrap();
    approx(res.sigma_z_final, -1.0, 1e-9);
    approx(res.residual, (-1.0 - res.sigma_z_ground).abs(), 1e-9);
    assert!(res.non_universal);
}

#[test]
fn quench_escalates_the_cutoff_when_the_tail_leaks() {
    let target = rabi_from_dimensionless(50.0, 1.0, 1.0).unwrap();
    let mut spec = QuenchSpec::new(target, 20.0);
    spec.cutoff_seed = 20;
    let res = run_quench_rabi(&spec).unwrap();
    assert!(
        res.cutoff_used > 20,
        "expected escalation, stayed at {}",
        res.cutoff_used
    );
    assert!(res.trajectory.iter().all(|s| s.tail < 1e-8));
}

#[test]
fn commutator_fast_path_matches_dense() {
    let space = SpaceSpec::new(6).unwrap();
    let dim = space.total_dim();
    let target = rabi_from_dimensionless(12.0, 1.0, 1.0).unwrap();
    let mut h = RabiRampHamiltonian::new(target, 1.0, &space);

    // pseudo-random hermitian rho
    let mut rho = Array2::<C64>::zeros((dim, dim));
    let mut x = 0.123_f64;
    for i in 0..dim {
        for j in i..dim {
            x = (x * 61.7).fract();
            let y = (x * 17.3).fract();
            let v = if i == j {
                C64::new(x, 0.0)
            } else {
                C64::new(x - 0.5, y - 0.5)
            };
            rho[(i, j)] = v;
            rho[(j, i)] = v.conj();
        }
    }

    let t = 0.37;
    let mut fast = Array2::<C64>::zeros((dim, dim));
    h.commutator_into(t, &rho, &mut fast);

    let m = h.matrix(t);
    let hr = m.dot(&rho);
    let rh = rho.dot(&m);
    for i in 0..dim {
        for j in 0..dim {
            let v = hr[(i, j)] - rh[(i, j)];
            let expect = C64::new(v.im, -v.re);
            assert!(
                (fast[(i, j)] - expect).norm() < 1e-10 * target.omega,
                "mismatch at ({i},{j})"
            );
        }
    }
}
