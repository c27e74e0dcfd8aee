//! Quantum signal processing: phase factors for odd real polynomials and the
//! circuit that applies them to a block-encoded Hermitian matrix.
//!
//! Convention. For phases `φ_0..φ_d` and `x ∈ [-1,1]`,
//!
//! ```text
//! U(x) = e^{iφ_0 Z} R(x) e^{iφ_1 Z} R(x) ... R(x) e^{iφ_d Z},
//! R(x) = [[x, √(1-x²)], [√(1-x²), -x]],
//! ```
//!
//! and `P(x) = U(x)_{00}`. The realized transform is `Re P`.
//!
//! The solver works internally with `W(x) = e^{i arccos(x) X}` because the
//! symmetric starting point is non-degenerate there (`R(x)² = I` makes the
//! analogous start in the `R` convention a saddle). Using
//! `R = -i e^{iπ/4 Z} W e^{iπ/4 Z}` the two phase sets are related by
//! `φ_0 = ψ_0 + (d-1)π/4`, `φ_d = ψ_d + (d-1)π/4`, `φ_j = ψ_j - π/2`
//! otherwise, and then `P_R = P_W` identically.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::blockenc::BlockEncoding;
use crate::circuit::Circuit;
use crate::error::{check_range, Error, Result};
use crate::linalg::{hadamard, pauli_x, ComplexMatrix, C64};
use crate::polyapprox::{cached_sign_poly, OddPolynomial};

/// Points of the Chebyshev grid used to report the residual.
pub const RESIDUAL_GRID: usize = 1000;
/// L-BFGS iteration cap.
pub const MAX_LBFGS_ITERATIONS: usize = 20_000;
const LBFGS_MEMORY: usize = 12;

/// Phase factors `φ_0..φ_d` in the `R(x)` convention.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseFactorSequence {
    pub phases: Vec<f64>,
    pub degree: usize,
    /// `max |Re P - target|` over a 1000-point Chebyshev grid.
    pub residual: f64,
}

impl PhaseFactorSequence {
    /// Wraps phases without a target; the residual is left at zero.
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.len() < 2 {
            return Err(Error::DimensionMismatch(format!(
                "need at least 2 phases, got {}",
                phases.len()
            )));
        }
        Ok(Self {
            degree: phases.len() - 1,
            phases,
            residual: 0.0,
        })
    }

    /// `P(x)` for these phases.
    pub fn eval(&self, x: f64) -> Result<C64> {
        qsp_product_2x2(&self.phases, x)
    }

    /// Phases realizing `-Re P`.
    pub fn negated(&self) -> Self {
        let mut phases = self.phases.clone();
        phases[0] += FRAC_PI_2;
        *phases.last_mut().unwrap() += FRAC_PI_2;
        Self {
            phases,
            ..self.clone()
        }
    }
}

#[inline]
fn mul2(a: &[C64; 4], b: &[C64; 4]) -> [C64; 4] {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

/// `m · e^{iφZ}`: scales the columns.
#[inline]
fn mul_rz(m: &[C64; 4], phi: f64) -> [C64; 4] {
    let e = C64::from_polar(1.0, phi);
    let ec = e.conj();
    [m[0] * e, m[1] * ec, m[2] * e, m[3] * ec]
}

/// `P(x)`, the `(0,0)` entry of the QSP product in the `R(x)` convention.
pub fn qsp_product_2x2(phases: &[f64], x: f64) -> Result<C64> {
    check_range("x", x, x.abs() <= 1.0, "|x| <= 1")?;
    if phases.is_empty() {
        return Err(Error::DimensionMismatch("empty phase list".into()));
    }
    let s = (1.0 - x * x).max(0.0).sqrt();
    let r = [
        C64::new(x, 0.0),
        C64::new(s, 0.0),
        C64::new(s, 0.0),
        C64::new(-x, 0.0),
    ];
    let mut u = mul_rz(
        &[
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ],
        phases[0],
    );
    for &phi in &phases[1..] {
        u = mul_rz(&mul2(&u, &r), phi);
    }
    Ok(u[0])
}

/// Converts solver (`W`-convention) phases into the public `R` convention.
fn w_to_r_phases(psi: &[f64]) -> Vec<f64> {
    let d = psi.len() - 1;
    let end_shift = (d as f64 - 1.0) * FRAC_PI_4;
    psi.iter()
        .enumerate()
        .map(|(j, &p)| {
            let v = if j == 0 || j == d {
                p + end_shift
            } else {
                p - FRAC_PI_2
            };
            v.rem_euclid(2.0 * PI)
        })
        .collect()
}

/// Full symmetric phase list from the reduced parameters.
fn expand_symmetric(reduced: &[f64], degree: usize) -> Vec<f64> {
    (0..=degree).map(|j| reduced[j.min(degree - j)]).collect()
}

/// Least-squares objective on the positive Chebyshev nodes, with gradient
/// with respect to the reduced (symmetric) phases.
struct Objective {
    degree: usize,
    nodes: Vec<f64>,
    targets: Vec<f64>,
}

impl Objective {
    fn new(target: &OddPolynomial) -> Self {
        let degree = target.degree;
        let dt = degree.div_ceil(2);
        let nodes: Vec<f64> = (1..=dt)
            .map(|k| ((2 * k - 1) as f64 * PI / (4 * dt) as f64).cos())
            .collect();
        let targets = nodes.iter().map(|&x| target.value(x)).collect();
        Self {
            degree,
            nodes,
            targets,
        }
    }

    /// Node residuals `g_k - f_k` and, if requested, the Jacobian
    /// `∂g_k/∂ψ_i` (row-major, square).
    fn residuals(&self, reduced: &[f64], with_jacobian: bool) -> (Vec<f64>, Vec<f64>) {
        let d = self.degree;
        let dt = reduced.len();
        let phases = expand_symmetric(reduced, d);
        let mut res = Vec::with_capacity(self.nodes.len());
        let mut jac = if with_jacobian {
            vec![0.0; self.nodes.len() * dt]
        } else {
            Vec::new()
        };
        let mut prefix: Vec<[C64; 4]> = Vec::with_capacity(d + 1);
        for (k, (&x, &t)) in self.nodes.iter().zip(&self.targets).enumerate() {
            let w = w_matrix(x);
            prefix.clear();
            let mut p = mul_rz(&IDENTITY2, phases[0]);
            prefix.push(p);
            for &phi in &phases[1..] {
                p = mul_rz(&mul2(&p, &w), phi);
                prefix.push(p);
            }
            res.push(p[0].re - t);
            if !with_jacobian {
                continue;
            }
            // Backward sweep: suffix = W e^{iφ_{j+1}Z} ... W e^{iφ_d Z}.
            let row = &mut jac[k * dt..(k + 1) * dt];
            let mut suffix = IDENTITY2;
            for j in (0..=d).rev() {
                let pj = &prefix[j];
                // d/dφ_j Re (P_j iZ S)_{00} = Re[i (P00 S00 - P01 S10)]
                row[j.min(d - j)] -= (pj[0] * suffix[0] - pj[1] * suffix[2]).im;
                if j > 0 {
                    suffix = mul2(&w, &rz_mul(phases[j], &suffix));
                }
            }
        }
        (res, jac)
    }

    /// Returns `(F, ∇F, max residual)` with `F = ½ Σ_k (g_k - f_k)²`.
    fn eval(&self, reduced: &[f64]) -> (f64, Vec<f64>, f64) {
        let dt = reduced.len();
        let (res, jac) = self.residuals(reduced, true);
        let mut grad = vec![0.0; dt];
        for (k, r) in res.iter().enumerate() {
            for (g, j) in grad.iter_mut().zip(&jac[k * dt..(k + 1) * dt]) {
                *g += r * j;
            }
        }
        (half_sq(&res), grad, max_abs(&res))
    }
}

fn half_sq(v: &[f64]) -> f64 {
    0.5 * v.iter().map(|r| r * r).sum::<f64>()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, r| m.max(r.abs()))
}

const IDENTITY2: [C64; 4] = [
    C64 { re: 1.0, im: 0.0 },
    C64 { re: 0.0, im: 0.0 },
    C64 { re: 0.0, im: 0.0 },
    C64 { re: 1.0, im: 0.0 },
];

#[inline]
fn w_matrix(x: f64) -> [C64; 4] {
    let s = (1.0 - x * x).max(0.0).sqrt();
    [
        C64::new(x, 0.0),
        C64::new(0.0, s),
        C64::new(0.0, s),
        C64::new(x, 0.0),
    ]
}

/// `e^{iφZ} · m`: scales the rows.
#[inline]
fn rz_mul(phi: f64, m: &[C64; 4]) -> [C64; 4] {
    let e = C64::from_polar(1.0, phi);
    let ec = e.conj();
    [m[0] * e, m[1] * e, m[2] * ec, m[3] * ec]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Optimizer used by [`solve_phase_factors_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseSolver {
    /// Gauss-Newton on the square node system with backtracking, falling
    /// back to L-BFGS if it stalls.
    GaussNewton,
    /// L-BFGS on the least-squares objective.
    Lbfgs,
}

/// Solves for phases whose `Re P` matches the odd target to within
/// `eps_prime` in max norm, using the default optimizer.
pub fn solve_phase_factors(target: &OddPolynomial, eps_prime: f64) -> Result<PhaseFactorSequence> {
    solve_phase_factors_with(target, eps_prime, PhaseSolver::GaussNewton)
}

/// As [`solve_phase_factors`] with an explicit optimizer.
///
/// The node residual is driven well below `eps_prime`: with as many nodes
/// as free parameters an exact fit matches the target on all of `[-1,1]`,
/// so the reported grid residual then sits near round-off.
pub fn solve_phase_factors_with(
    target: &OddPolynomial,
    eps_prime: f64,
    method: PhaseSolver,
) -> Result<PhaseFactorSequence> {
    check_range(
        "eps_prime",
        eps_prime,
        eps_prime > 0.0 && eps_prime < 1.0,
        "0 < eps_prime < 1",
    )?;
    if target.degree.is_multiple_of(2) || target.cheb_odd.is_empty() {
        return Err(Error::OutOfRange {
            name: "degree",
            value: target.degree as f64,
            expected: "odd positive integer",
        });
    }
    let peak = target.grid_max_abs();
    if peak > 1.0 + 1e-12 {
        return Err(Error::OutOfRange {
            name: "max |target|",
            value: peak,
            expected: "<= 1 on [-1, 1]",
        });
    }
    let obj = Objective::new(target);
    let mut x = vec![0.0; obj.nodes.len()];
    x[0] = FRAC_PI_4;
    let node_tol = (1e-3 * eps_prime).max(1e-14);

    if method == PhaseSolver::GaussNewton {
        // Quadratic convergence makes the last few digits nearly free.
        x = gauss_newton(&obj, x, 1e-14);
    }
    if max_abs(&obj.residuals(&x, false).0) > node_tol {
        x = lbfgs(&obj, x, node_tol);
    }

    let phases = w_to_r_phases(&expand_symmetric(&x, target.degree));
    let residual = grid_residual(&phases, target);
    if residual > eps_prime {
        return Err(Error::NoConvergence {
            what: "phase-factor optimization",
            residual,
        });
    }
    Ok(PhaseFactorSequence {
        degree: target.degree,
        phases,
        residual,
    })
}

const MAX_GAUSS_NEWTON_ITERATIONS: usize = 200;

fn gauss_newton(obj: &Objective, mut x: Vec<f64>, node_tol: f64) -> Vec<f64> {
    let n = x.len();
    let (mut res, mut jac) = obj.residuals(&x, true);
    for _ in 0..MAX_GAUSS_NEWTON_ITERATIONS {
        if max_abs(&res) <= node_tol {
            break;
        }
        let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
        let Some(dir) = crate::polyapprox::solve_dense(jac, rhs, n) else {
            break;
        };
        let f = half_sq(&res);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
            let rn = obj.residuals(&xn, false).0;
            // The Newton direction has directional derivative -2F.
            if half_sq(&rn) <= (1.0 - 1e-4 * step) * f {
                accepted = Some(xn);
                break;
            }
            step *= 0.5;
        }
        let Some(xn) = accepted else {
            break;
        };
        x = xn;
        (res, jac) = obj.residuals(&x, true);
    }
    x
}

fn lbfgs(obj: &Objective, mut x: Vec<f64>, node_tol: f64) -> Vec<f64> {
    let (mut f, mut g, mut worst) = obj.eval(&x);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut iter = 0;
    while worst > node_tol {
        iter += 1;
        let gnorm = dot(&g, &g).sqrt();
        if iter > MAX_LBFGS_ITERATIONS || gnorm < 1e-15 {
            break;
        }
        // Two-loop recursion.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(s_hist.len());
        for (s, y) in s_hist.iter().zip(&y_hist).rev() {
            let a = dot(s, &q) / dot(y, s);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y), a) in s_hist.iter().zip(&y_hist).zip(alphas.into_iter().rev()) {
            let b = dot(y, &q) / dot(y, s);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            dir = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
            s_hist.clear();
            y_hist.clear();
        }
        // Backtracking Armijo search from the unit quasi-Newton step.
        let mut step = if s_hist.is_empty() {
            (1.0 / gnorm).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
            let (fnew, gnew, wnew) = obj.eval(&xn);
            if fnew <= f + 1e-4 * step * slope {
                accepted = Some((xn, fnew, gnew, wnew));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gnew, wnew)) = accepted else {
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-300 {
            if s_hist.len() == LBFGS_MEMORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
        }
        x = xn;
        f = fnew;
        g = gnew;
        worst = wnew;
    }
    x
}

/// `max |Re P(x) - target(x)|` on the Chebyshev points `cos(kπ/(N-1))`.
pub fn grid_residual(phases: &[f64], target: &OddPolynomial) -> f64 {
    (0..RESIDUAL_GRID)
        .map(|k| (PI * k as f64 / (RESIDUAL_GRID - 1) as f64).cos())
        .map(|x| (qsp_product_2x2(phases, x).unwrap().re - target.value(x)).abs())
        .fold(0.0, f64::max)
}

/// Sign approximant together with phases realizing it.
#[derive(Clone, Debug)]
pub struct SignPhases {
    pub poly: OddPolynomial,
    pub phases: PhaseFactorSequence,
}

type SignCache = Mutex<HashMap<(u64, u64), Arc<SignPhases>>>;

/// Builds (or fetches from a process-wide cache) the sign polynomial for
/// `(δ, ε)` and its phases. Both steps are deterministic, so caching does
/// not change results.
pub fn sign_phases(delta: f64, eps: f64) -> Result<Arc<SignPhases>> {
    static CACHE: OnceLock<SignCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (delta.to_bits(), eps.to_bits());
    if let Some(hit) = cache.lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let poly = (*cached_sign_poly(delta, eps)?).clone();
    let slack = (eps - poly.eps_achieved).max(1e-10);
    let phases = solve_phase_factors(&poly, slack.min(0.5))?;
    let entry = Arc::new(SignPhases { poly, phases });
    cache.lock().unwrap().insert(key, entry.clone());
    Ok(entry)
}

/// The QSP circuit of a block-encoding: one signal qubit in front of the
/// encoding's ancillas.
#[derive(Clone, Debug)]
pub struct QspCircuit {
    pub phases: PhaseFactorSequence,
    /// Encoding of `Re P(A/α)` with `m + 1` ancillas and normalization 1.
    pub encoding: BlockEncoding,
}

impl QspCircuit {
    pub fn num_qubits(&self) -> usize {
        self.encoding.num_qubits()
    }

    /// Dense unitary of the whole circuit.
    pub fn unitary(&self) -> Result<ComplexMatrix> {
        self.encoding.unitary()
    }

    /// The extracted block `(⟨0|⟨0^m| ⊗ I) W (|0⟩|0^m⟩ ⊗ I)`.
    pub fn block(&self) -> Result<ComplexMatrix> {
        self.encoding.block()
    }
}

/// Builds the real-part QSP circuit for `be` and the given phases.
///
/// Layout: qubit 0 is the signal qubit, then the `m` ancillas of `be`, then
/// the system. The signal is Hadamard-conjugated; each phase is applied as
/// `X_{0^m}`, `diag(e^{-iφ}, e^{iφ})`, `X_{0^m}` on the signal, where `X_{0^m}`
/// flips it when all block ancillas read zero. Queries alternate
/// `U, U†, ..., U` with the phase `φ_d` applied first.
pub fn assemble_qsp_unitary(
    be: &BlockEncoding,
    phases: &PhaseFactorSequence,
) -> Result<QspCircuit> {
    let d = phases.degree;
    if d.is_multiple_of(2) || phases.phases.len() != d + 1 {
        return Err(Error::OutOfRange {
            name: "degree",
            value: d as f64,
            expected: "odd, with degree + 1 phases",
        });
    }
    let m = be.num_ancilla;
    if m == 0 {
        return Err(Error::DimensionMismatch(
            "QSP needs at least one block ancilla".into(),
        ));
    }
    let total = 1 + be.num_qubits();
    let mut c = Circuit::new(total)?;
    let zero_ctrl: Vec<(usize, bool)> = (1..=m).map(|q| (q, false)).collect();
    let inner: Vec<usize> = (1..total).collect();
    let u = be.circuit().clone();

    c.gate(hadamard(), &[0], &[])?;
    for (step, &phi) in phases.phases.iter().rev().enumerate() {
        c.gate(pauli_x(), &[0], &zero_ctrl)?;
        c.gate(
            ComplexMatrix::from_rows(&[
                vec![C64::from_polar(1.0, -phi), C64::new(0.0, 0.0)],
                vec![C64::new(0.0, 0.0), C64::from_polar(1.0, phi)],
            ]),
            &[0],
            &[],
        )?;
        c.gate(pauli_x(), &[0], &zero_ctrl)?;
        if step < d {
            c.sub(u.clone(), &inner, &[], step % 2 == 1)?;
        }
    }
    c.gate(hadamard(), &[0], &[])?;
    c.set_gate_estimate(((m + 1) * d) as u64);

    let encoding = BlockEncoding::from_circuit(
        Arc::new(c),
        1.0,
        m + 1,
        phases.residual + be.epsilon,
        be.ledger_tag,
    )?;
    Ok(QspCircuit {
        phases: phases.clone(),
        encoding,
    })
}
