use qgsp_core::blockenc::make_projector;
use qgsp_core::groundprep::{
    amplitude_amplify, low_energy_bound, low_energy_eps, prepare_low_energy, prepare_with_bound,
    raw_circuit, raw_success_frequency, toy_raw_circuit, AmplifyMode, PrepProblem,
};
use qgsp_core::hamlib::{
    make_degenerate, make_random_gapless, make_random_gapped, BenchmarkInstance,
};
use qgsp_core::linalg::ComplexMatrix;
use qgsp_core::polyapprox::eval_on_hermitian;
use qgsp_core::qsp::sign_phases;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn problem(inst: &BenchmarkInstance, gamma: f64, gap: f64, mu: f64, eps: f64) -> PrepProblem {
    PrepProblem {
        be_h: inst.block_encoding().unwrap(),
        u_i: inst.state_prep(),
        gamma,
        delta_gap: Some(gap),
        mu: Some(mu),
        eps,
        ground_truth: Some(inst.ground_state.clone()),
        hamiltonian: Some(inst.h.clone()),
    }
}

/// `‖P̃ φ_0‖²` from the sign polynomial evaluated on the exact spectrum.
fn spectral_success(inst: &BenchmarkInstance, mu: f64, delta: f64, eps: f64) -> f64 {
    let sp = sign_phases(delta, eps).unwrap();
    let alpha_t = inst.alpha + mu.abs();
    let shifted = inst
        .h
        .sub(&ComplexMatrix::identity(inst.h.rows()).scale_real(mu))
        .unwrap()
        .scale_real(1.0 / alpha_t);
    let s = eval_on_hermitian(&sp.poly, &shifted).unwrap();
    let p = ComplexMatrix::identity(inst.h.rows())
        .sub(&s)
        .unwrap()
        .scale_real(0.5);
    p.mul_vec(&inst.initial_state).unwrap().norm_sqr()
}

#[test]
fn planted_six_qubit_instance() {
    let (gamma, gap, eps) = (0.1, 0.05, 1e-3);
    let inst = make_random_gapped(6, gamma, gap, 42).unwrap();
    let p = problem(&inst, gamma, gap, 0.0, eps);
    let r = prepare_with_bound(&p, AmplifyMode::Deterministic, 1).unwrap();
    assert!(
        r.fidelity.unwrap() >= 1.0 - eps,
        "fidelity {}",
        r.fidelity.unwrap()
    );
    assert!(r.success_prob >= gamma * gamma * (1.0 - eps / 2.0) * (1.0 - eps / 2.0));
    let oracle = spectral_success(&inst, 0.0, r.projector.delta, r.projector.eps);
    assert!((oracle - r.success_prob).abs() < 1e-9);
    let proj = make_projector(&p.be_h, 0.0, r.projector.delta, r.projector.eps).unwrap();
    let raw = raw_circuit(&proj, &p.u_i).unwrap();
    let shots = 10_000;
    let f = raw_success_frequency(&raw, shots, 5).unwrap();
    let sigma = (oracle * (1.0 - oracle) / shots as f64).sqrt();
    assert!((f - oracle).abs() <= 3.0 * sigma, "freq {f} vs {oracle}");
}

#[test]
fn fidelity_chain_holds() {
    for seed in 0..4 {
        let gamma = 0.2;
        let eps = 1e-2;
        let inst = make_random_gapped(3, gamma, 0.1, seed).unwrap();
        let p = problem(&inst, gamma, 0.1, 0.0, eps);
        let r = prepare_with_bound(&p, AmplifyMode::Deterministic, seed).unwrap();
        let ov = inst.gamma_true;
        let chain = (ov - gamma * eps / 2.0) / (ov + gamma * eps / 2.0);
        assert!(r.fidelity.unwrap() >= chain - 1e-12);
        assert!(chain >= 1.0 - eps);
    }
}

#[test]
fn oblivious_schedule_mean_iterations() {
    let a = 0.1;
    let raw = toy_raw_circuit(a).unwrap();
    let runs = 200;
    let mut total = 0usize;
    for seed in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = amplitude_amplify(
            &raw,
            AmplifyMode::Oblivious { floor: a / 2.0 },
            None,
            &mut rng,
        )
        .unwrap();
        total += out.iterations;
    }
    let mean = total as f64 / runs as f64;
    assert!(mean <= 4.0 / a, "mean iterations {mean}");
}

#[test]
fn oblivious_mode_prepares_ground_state() {
    let inst = make_random_gapped(3, 0.3, 0.1, 8).unwrap();
    let p = problem(&inst, 0.3, 0.1, 0.0, 1e-3);
    let r = prepare_with_bound(&p, AmplifyMode::Oblivious { floor: 0.15 }, 3).unwrap();
    assert!(r.fidelity.unwrap() >= 1.0 - 1e-3);
}

#[test]
fn degenerate_ground_space_low_energy() {
    let inst = make_degenerate(3, 3, 4).unwrap();
    let mu = inst.ground_energy() + 0.1;
    let p = problem(&inst, 1.0, 0.1, mu, 1e-2);
    let r = prepare_low_energy(&p, mu, 0.02, 1.0, None, AmplifyMode::Deterministic, 0).unwrap();
    assert!(r.energy.unwrap() <= mu);
    assert!((r.energy.unwrap() - inst.ground_energy()).abs() < 1e-3);
}

#[test]
fn gapless_low_energy_meets_bound() {
    let inst = make_random_gapless(6, 17).unwrap();
    let mu = inst.ground_energy() + 0.1;
    let d = 0.02;
    let w = inst.low_energy_weight(mu - 3.0 * d).unwrap();
    let gamma = w.sqrt();
    let p = problem(&inst, gamma, 0.0, mu, 0.0);
    let r = prepare_low_energy(&p, mu, d, gamma, None, AmplifyMode::Deterministic, 2).unwrap();
    let e = r.energy.unwrap();
    assert!(e <= mu, "energy {e} above {mu}");
    let eps = low_energy_eps(gamma, d, inst.alpha);
    assert!(low_energy_bound(mu, d, gamma, inst.alpha, eps) <= mu);
    // Rayleigh quotient recomputed from the exact frame.
    let v = inst.eigenvectors.as_ref().unwrap();
    let rq: f64 = inst
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, l)| l * v.column(k).inner(&r.state).norm_sqr())
        .sum();
    assert!((rq - e).abs() < 1e-10);
}

#[test]
fn halving_eps_prime_keeps_energy_bound() {
    for seed in 0..6u64 {
        let inst = make_random_gapless(3, 100 + seed).unwrap();
        let mu = inst.ground_energy() + 0.1;
        let d = 0.02;
        let gamma = inst.low_energy_weight(mu - 3.0 * d).unwrap().sqrt();
        let p = problem(&inst, gamma, 0.0, mu, 0.0);
        let half = low_energy_eps(gamma, d, inst.alpha) / 2.0;
        let r = prepare_low_energy(
            &p,
            mu,
            d,
            gamma,
            Some(half),
            AmplifyMode::Deterministic,
            seed,
        )
        .unwrap();
        assert!(r.energy.unwrap() <= mu);
    }
}

#[test]
fn exact_ground_state_input() {
    let inst = make_random_gapped(3, 1.0, 0.1, 1).unwrap();
    let eps = 1e-3;
    let p = problem(&inst, 1.0, 0.1, 0.0, eps);
    let r = prepare_with_bound(&p, AmplifyMode::Deterministic, 0).unwrap();
    assert!(r.fidelity.unwrap() >= 1.0 - eps);
    assert!(r.success_prob >= (1.0 - eps / 2.0) * (1.0 - eps / 2.0));
}
