use qgsp_core::hamlib::{
    first_strings, load_hamiltonian, make_counting, make_pauli, parse_hamiltonian, save_dense,
    shifted_grover_truth, GroverFamily, PauliTerm,
};
use qgsp_core::linalg::{eig_hermitian, operator_norm_diff};

/// `(λ_-, λ_+)` of the structured Grover operator: dense Jacobi up to
/// `n = 8`, Lanczos above.
fn numeric_pair(g: &GroverFamily, n: usize) -> (f64, f64) {
    if n <= 8 {
        let v = eig_hermitian(&g.dense()).unwrap().values;
        (v[0], v[1])
    } else {
        let v = g.distinct_spectrum(n as u64).unwrap();
        (v[0], v[1])
    }
}

#[test]
fn shifted_grover_sweep() {
    for delta in [0.05, 0.1, 0.15] {
        let mut prev_gap_err = f64::INFINITY;
        let mut prev_ov_err = f64::INFINITY;
        for n in 6..=12 {
            let b = shifted_grover_truth(n, delta).unwrap();
            let g = GroverFamily::all_ones(n, b.tau).unwrap();
            let (lo, hi) = numeric_pair(&g, n);
            assert!((lo - b.lambda_minus).abs() < 1e-10, "n={n} δ={delta}");
            assert!((hi - b.lambda_plus).abs() < 1e-10, "n={n} δ={delta}");
            let (_, _, gs) = g.restricted_numeric().unwrap();
            let ov = gs.amplitudes()[g.marked].norm();
            assert!((ov - b.overlap_t).abs() < 1e-10);
            let gap_err = (b.gap - b.gap_leading).abs() / b.gap;
            let ov_err = (ov - b.overlap_t_leading).abs() / ov;
            assert!(
                gap_err < prev_gap_err,
                "gap error not decreasing at n={n} δ={delta}"
            );
            assert!(
                ov_err < prev_ov_err,
                "overlap error not decreasing at n={n} δ={delta}"
            );
            prev_gap_err = gap_err;
            prev_ov_err = ov_err;
        }
    }
}

#[test]
fn counting_spectrum_all_set_sizes() {
    let n = 4;
    for size in 1..16 {
        let inst = make_counting(n, &first_strings(size)).unwrap();
        let a = (size as f64 / 16.0).sqrt();
        let e = 2.0 * a * (1.0 - a * a).sqrt();
        let v = eig_hermitian(&inst.h).unwrap().values;
        assert!(
            (v[0] + e).abs() < 1e-12 && (v[15] - e).abs() < 1e-12,
            "|S| = {size}"
        );
        assert!(v[1..15].iter().all(|x| x.abs() < 1e-12));
        let block = inst.block_encoding().unwrap().encoded().unwrap();
        assert!(operator_norm_diff(&block, &inst.h).unwrap() < 1e-12);
    }
}

#[test]
fn grover_half_point_gap() {
    for n in 2..=10 {
        let g = GroverFamily::all_ones(n, 0.5).unwrap();
        let want = 2.0 / ((1usize << n) as f64).sqrt();
        let (lo, hi) = numeric_pair(&g, n);
        assert!((hi - lo - want).abs() < 1e-10, "n={n}");
        assert!((g.truth().gap - want).abs() < 1e-12);
    }
}

#[test]
fn pauli_file_round_trip() {
    let dir = std::env::temp_dir().join(format!("qgsp-hamlib-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("h.json");
    std::fs::write(&p, r#"{"ZZ": 1.0, "XI": 0.5, "IX": 0.5}"#).unwrap();
    let inst = load_hamiltonian(&p).unwrap();
    assert_eq!(inst.alpha, 2.0);
    let terms = vec![
        PauliTerm {
            coeff: 1.0,
            paulis: "ZZ".into(),
        },
        PauliTerm {
            coeff: 0.5,
            paulis: "XI".into(),
        },
        PauliTerm {
            coeff: 0.5,
            paulis: "IX".into(),
        },
    ];
    let direct = make_pauli(&terms).unwrap();
    assert!(operator_norm_diff(&inst.h, &direct.h).unwrap() < 1e-14);
    let q = dir.join("dense.json");
    save_dense(&inst, &q).unwrap();
    let back = load_hamiltonian(&q).unwrap();
    assert_eq!(back.h, inst.h);
    assert!(parse_hamiltonian(r#"{"terms": [{"coeff": 1.0, "paulis": "XQ"}]}"#).is_err());
    std::fs::remove_dir_all(&dir).ok();
}
