use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qgsp_core::blockenc::make_reflector;
use qgsp_core::energysearch::{AeMode, EnergySearch, ProbeBackend, SearchParams};
use qgsp_core::groundprep::{prepare_with_bound, AmplifyMode, PrepProblem};
use qgsp_core::hamlib::{make_random_gapped, make_single_qubit, GroverFamily};
use qgsp_core::linalg::eig_hermitian;
use qgsp_core::polyapprox::build_sign_poly;
use qgsp_core::qsp::{sign_phases, solve_phase_factors};

fn polynomials(c: &mut Criterion) {
    c.bench_function("sign_poly δ=0.1 ε=1e-6", |b| {
        b.iter(|| build_sign_poly(black_box(0.1), black_box(1e-6)).unwrap())
    });
    let p = build_sign_poly(0.1, 1e-6).unwrap();
    c.bench_function("phase_factors δ=0.1 ε=1e-6", |b| {
        b.iter(|| solve_phase_factors(black_box(&p), 1e-12).unwrap())
    });
}

fn circuits(c: &mut Criterion) {
    sign_phases(0.2, 1e-4).unwrap();
    let be = make_single_qubit(0.3).unwrap().block_encoding().unwrap();
    c.bench_function("reflector block, single qubit", |b| {
        b.iter(|| {
            make_reflector(&be, 0.0, 0.2, 1e-4)
                .unwrap()
                .block()
                .unwrap()
        })
    });
    let g = GroverFamily::all_ones(7, 0.5).unwrap().dense();
    c.bench_function("jacobi eig, 128x128", |b| {
        b.iter(|| eig_hermitian(black_box(&g)).unwrap())
    });
}

fn algorithms(c: &mut Criterion) {
    let inst = make_random_gapped(4, 0.2, 0.1, 1).unwrap();
    let p = PrepProblem {
        be_h: inst.block_encoding().unwrap(),
        u_i: inst.state_prep(),
        gamma: 0.2,
        delta_gap: Some(0.1),
        mu: Some(0.0),
        eps: 1e-3,
        ground_truth: Some(inst.ground_state.clone()),
        hamiltonian: Some(inst.h.clone()),
    };
    let mut group = c.benchmark_group("algorithms");
    group.sample_size(10);
    group.bench_function("prepare_with_bound, 4 qubits", |b| {
        b.iter(|| prepare_with_bound(&p, AmplifyMode::Deterministic, 0).unwrap())
    });
    let params = SearchParams {
        gamma: 0.2,
        h: 0.02,
        vartheta: 0.1,
        offset: 0.0,
        mode: AeMode::StatisticalModel,
        backend: ProbeBackend::Spectral,
    };
    let s = EnergySearch::new(&p.be_h, &p.u_i, params).unwrap();
    let mut seed = 0;
    group.bench_function("energy search, spectral probes", |b| {
        b.iter(|| {
            seed += 1;
            s.locate(seed).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, polynomials, circuits, algorithms);
criterion_main!(benches);
