use qgsp_core::polyapprox::{build_sign_poly, sign_poly_of_degree};

const DELTAS: [f64; 4] = [0.4, 0.2, 0.1, 0.05];
const EPSILONS: [f64; 3] = [1e-2, 1e-4, 1e-6];

fn degree_grid() -> Vec<Vec<usize>> {
    DELTAS
        .iter()
        .map(|&d| {
            EPSILONS
                .iter()
                .map(|&e| build_sign_poly(d, e).unwrap().degree)
                .collect()
        })
        .collect()
}

#[test]
fn degree_scaling_fit() {
    let grid = degree_grid();
    // Least squares for d = c x with x = ln(1/ε)/δ.
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &d) in DELTAS.iter().enumerate() {
        for (j, &e) in EPSILONS.iter().enumerate() {
            let x = (1.0 / e).ln() / d;
            sxy += x * grid[i][j] as f64;
            sxx += x * x;
        }
    }
    let c = sxy / sxx;
    for (i, &d) in DELTAS.iter().enumerate() {
        for (j, &e) in EPSILONS.iter().enumerate() {
            let pred = c * (1.0 / e).ln() / d;
            let dev = (grid[i][j] as f64 - pred).abs() / pred;
            assert!(
                dev < 0.35,
                "δ={d} ε={e}: degree {} vs {pred:.1}",
                grid[i][j]
            );
        }
    }
    for i in 0..DELTAS.len() {
        for j in 0..EPSILONS.len() {
            if i + 1 < DELTAS.len() {
                assert!(grid[i + 1][j] >= grid[i][j]);
            }
            if j + 1 < EPSILONS.len() {
                assert!(grid[i][j + 1] >= grid[i][j]);
            }
        }
    }
}

#[test]
fn minimal_degree_is_minimal() {
    for (d, e) in [(0.2, 1e-4), (0.1, 1e-3), (0.4, 1e-6)] {
        let p = build_sign_poly(d, e).unwrap();
        assert!(p.eps_achieved <= e);
        assert!(p.grid_max_abs() <= 1.0 + 1e-12);
        if p.degree > 1 {
            let (below, _) = sign_poly_of_degree(d, p.degree - 2).unwrap();
            assert!(below.eps_achieved > e);
        }
    }
    assert_eq!(build_sign_poly(0.2, 1e-4).unwrap().degree, 43);
}
