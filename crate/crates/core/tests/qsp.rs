use qgsp_core::hamlib::{
    first_strings, make_counting, make_degenerate, make_grover_family, make_random_gapless,
    make_random_gapped, make_single_qubit, make_tfim, BenchmarkInstance,
};
use qgsp_core::linalg::operator_norm_diff;
use qgsp_core::polyapprox::eval_on_hermitian;
use qgsp_core::qsp::{assemble_qsp_unitary, sign_phases};

fn instances() -> Vec<(String, BenchmarkInstance)> {
    let mut v = Vec::new();
    for a in [0.1, 0.3, 0.5, 0.7] {
        v.push((format!("single a={a}"), make_single_qubit(a).unwrap()));
    }
    for n in 2..=5 {
        v.push((format!("grover n={n}"), make_grover_family(n, 0.4).unwrap()));
    }
    v.push((
        "counting".into(),
        make_counting(4, &first_strings(3)).unwrap(),
    ));
    for n in [3, 6] {
        v.push((
            format!("planted n={n}"),
            make_random_gapped(n, 0.3, 0.05, 7).unwrap(),
        ));
    }
    v.push(("gapless".into(), make_random_gapless(4, 3).unwrap()));
    v.push(("degenerate".into(), make_degenerate(3, 2, 1).unwrap()));
    v.push(("tfim".into(), make_tfim(4, 1.0, 1.0).unwrap()));
    v
}

#[test]
fn circuit_block_matches_spectral_oracle() {
    for (delta, eps) in [(0.2, 1e-3), (0.1, 1e-6)] {
        let sp = sign_phases(delta, eps).unwrap();
        for (name, inst) in instances() {
            let be = inst.block_encoding().unwrap();
            let q = assemble_qsp_unitary(&be, &sp.phases).unwrap();
            let want = eval_on_hermitian(&sp.poly, &inst.h.scale_real(1.0 / inst.alpha)).unwrap();
            let err = operator_norm_diff(&q.block().unwrap(), &want).unwrap();
            assert!(
                err <= sp.phases.residual + 1e-9,
                "{name}: {err:e} vs residual {:e}",
                sp.phases.residual
            );
        }
    }
}
