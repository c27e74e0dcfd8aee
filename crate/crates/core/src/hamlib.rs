//! Benchmark Hamiltonians with known ground truth.
//!
//! Every constructor returns a [`BenchmarkInstance`] carrying the dense
//! matrix, its normalization, the exact spectrum and ground state, an initial
//! state with its exact overlap, and where the family has one, an explicit
//! block-encoding circuit.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::blockenc::{encode_hermitian, BlockEncoding};
use crate::circuit::{Circuit, OracleTag};
use crate::error::{check_range, Error, Result};
use crate::linalg::{
    eig_hermitian, hadamard, kron, operator_norm, pauli_x, pauli_y, pauli_z, ComplexMatrix,
    StateVector, C64, ONE, SPECTRAL_TOL, STRUCTURAL_TOL, ZERO,
};

/// Spectral radius of the planted random instances.
pub const PLANTED_RADIUS: f64 = 0.25;
/// Largest register the Grover and counting constructions accept.
pub const MAX_FAMILY_QUBITS: usize = 12;
/// Eigenvalue separation below which an instance is flagged degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Which construction produced an instance, with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    SingleQubit {
        a: f64,
    },
    Grover {
        n: usize,
        marked: usize,
        tau: f64,
    },
    Counting {
        n: usize,
        marked: Vec<usize>,
    },
    RandomGapped {
        n: usize,
        gamma: f64,
        delta: f64,
        seed: u64,
    },
    RandomGapless {
        n: usize,
        seed: u64,
    },
    Degenerate {
        n: usize,
        multiplicity: usize,
        seed: u64,
    },
    Tfim {
        n: usize,
        coupling: f64,
        field: f64,
    },
    Pauli {
        n: usize,
        terms: usize,
    },
    Dense {
        n: usize,
    },
}

#[derive(Clone, Debug)]
pub struct BenchmarkInstance {
    pub family: Family,
    pub num_qubits: usize,
    pub h: ComplexMatrix,
    pub alpha: f64,
    /// Ascending, with multiplicity.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns, when the full frame is known.
    pub eigenvectors: Option<ComplexMatrix>,
    pub ground_state: StateVector,
    pub initial_state: StateVector,
    /// `|⟨φ_0|ψ_0⟩|`.
    pub gamma_true: f64,
    /// `λ_1 - λ_0`.
    pub gap_true: f64,
    pub degenerate: bool,
    encoding: Option<BlockEncoding>,
}

/// JSON export of an instance's ground truth.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(flatten)]
    pub family: Family,
    pub num_qubits: usize,
    pub alpha: f64,
    pub eigenvalues: Vec<f64>,
    pub ground_state: StateVector,
    pub initial_state: StateVector,
    pub gamma_true: f64,
    pub gap_true: f64,
    pub degenerate: bool,
}

impl BenchmarkInstance {
    fn from_parts(
        family: Family,
        h: ComplexMatrix,
        alpha: f64,
        eigenvalues: Vec<f64>,
        eigenvectors: Option<ComplexMatrix>,
        ground_state: StateVector,
        initial_state: StateVector,
    ) -> Result<Self> {
        let num_qubits = crate::linalg::qubits_of(h.rows()).ok_or_else(|| {
            Error::DimensionMismatch(format!("dimension {} is not a power of two", h.rows()))
        })?;
        let gap_true = if eigenvalues.len() > 1 {
            eigenvalues[1] - eigenvalues[0]
        } else {
            0.0
        };
        Ok(Self {
            family,
            num_qubits,
            gamma_true: ground_state.fidelity(&initial_state),
            degenerate: eigenvalues.len() > 1 && gap_true < DEGENERACY_TOL,
            gap_true,
            h,
            alpha,
            eigenvalues,
            eigenvectors,
            ground_state,
            initial_state,
            encoding: None,
        })
    }

    /// Diagonalizes `h` densely.
    pub fn from_dense(
        family: Family,
        h: ComplexMatrix,
        alpha: f64,
        initial: StateVector,
    ) -> Result<Self> {
        if initial.dim() != h.rows() {
            return Err(Error::DimensionMismatch(format!(
                "initial state of dimension {} for a {}x{} Hamiltonian",
                initial.dim(),
                h.rows(),
                h.cols()
            )));
        }
        let eig = eig_hermitian(&h)?;
        let ground = eig.vector(0);
        Self::from_parts(
            family,
            h,
            alpha,
            eig.values,
            Some(eig.vectors),
            ground,
            initial,
        )
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// The family's explicit block-encoding if it has one, otherwise the
    /// one-ancilla dilation of `H/α`.
    pub fn block_encoding(&self) -> Result<BlockEncoding> {
        match &self.encoding {
            Some(be) => Ok(be.clone()),
            None => encode_hermitian(&self.h, self.alpha),
        }
    }

    /// Whether the family supplies its own block-encoding circuit.
    pub fn has_explicit_encoding(&self) -> bool {
        self.encoding.is_some()
    }

    /// `U_I` with `U_I |0^n⟩ = |φ_0⟩`.
    pub fn state_prep(&self) -> ComplexMatrix {
        state_prep_unitary(&self.initial_state)
    }

    /// `Σ_{λ_k <= threshold} |⟨ψ_k|φ_0⟩|²`; needs the eigenvector frame.
    pub fn low_energy_weight(&self, threshold: f64) -> Result<f64> {
        let v = self.eigenvectors.as_ref().ok_or_else(|| {
            Error::DimensionMismatch("instance carries no eigenvector frame".into())
        })?;
        Ok(self
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l <= threshold)
            .map(|(k, _)| v.column(k).inner(&self.initial_state).norm_sqr())
            .sum())
    }

    /// `‖H - V Λ V†‖` when the frame is known.
    pub fn reconstruction_error(&self) -> Result<Option<f64>> {
        let Some(v) = &self.eigenvectors else {
            return Ok(None);
        };
        let n = self.eigenvalues.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                let mut s = ZERO;
                for k in 0..n {
                    s += v[(r, k)] * v[(c, k)].conj() * self.eigenvalues[k];
                }
                m[(r, c)] = s;
            }
        }
        Ok(Some(crate::linalg::operator_norm_diff(&self.h, &m)?))
    }

    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth {
            family: self.family.clone(),
            num_qubits: self.num_qubits,
            alpha: self.alpha,
            eigenvalues: self.eigenvalues.clone(),
            ground_state: self.ground_state.clone(),
            initial_state: self.initial_state.clone(),
            gamma_true: self.gamma_true,
            gap_true: self.gap_true,
            degenerate: self.degenerate,
        }
    }
}

/// A unitary whose first column is `φ`: a Householder reflection composed with
/// a phase on `|0⟩`.
pub fn state_prep_unitary(phi: &StateVector) -> ComplexMatrix {
    let n = phi.dim();
    let a0 = phi.amplitudes()[0];
    let phase = if a0.norm() > 0.0 { a0 / a0.norm() } else { ONE };
    // v = e^{iθ}|0⟩ - φ; P = I - 2 v v† / ‖v‖² maps e^{iθ}|0⟩ to φ.
    let mut v = phi.scale(-ONE);
    v.amplitudes_mut()[0] += phase;
    let vn = v.norm_sqr();
    let mut u = ComplexMatrix::identity(n);
    if vn > 1e-300 {
        let va = v.amplitudes();
        for r in 0..n {
            for c in 0..n {
                u[(r, c)] -= va[r] * va[c].conj() * (2.0 / vn);
            }
        }
    }
    for r in 0..n {
        u[(r, 0)] *= phase;
    }
    u
}

// ---------------------------------------------------------------------------
// Single-qubit family

/// `V(a) = [[√a, -√(1-a)], [√(1-a), √a]]`.
pub fn v_gate(a: f64) -> ComplexMatrix {
    let (s, c) = (a.sqrt(), (1.0 - a).sqrt());
    ComplexMatrix::from_real_rows(&[&[s, -c], &[c, s]])
}

/// Two-qubit circuit `V(a)`, zero-controlled `σ_x`, `V(a)†` whose top-left
/// block is `H(a)`. The `σ_x` is the counted oracle.
pub fn single_qubit_circuit(a: f64) -> Result<Circuit> {
    check_range("a", a, (0.0..=1.0).contains(&a), "0 <= a <= 1")?;
    let mut c = Circuit::new(2)?;
    c.gate(v_gate(a), &[0], &[])?;
    c.oracle(
        OracleTag::Other,
        Arc::new(pauli_x()),
        &[1],
        &[(0, false)],
        false,
    )?;
    c.gate(v_gate(a).adjoint(), &[0], &[])?;
    Ok(c)
}

/// `H(a) = a σ_x + (1-a) I` with eigenpairs `(1, |+⟩)` and `(1-2a, |−⟩)`.
/// The initial state is `|0⟩`.
pub fn make_single_qubit(a: f64) -> Result<BenchmarkInstance> {
    let circuit = single_qubit_circuit(a)?;
    let h = pauli_x()
        .scale_real(a)
        .add(&ComplexMatrix::identity(2).scale_real(1.0 - a))?;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let plus = StateVector::from_real(&[r, r]);
    let minus = StateVector::from_real(&[r, -r]);
    let low = 1.0 - 2.0 * a;
    let mut frame = ComplexMatrix::zeros(2, 2);
    frame.set_column(0, &minus);
    frame.set_column(1, &plus);
    let mut inst = BenchmarkInstance::from_parts(
        Family::SingleQubit { a },
        h,
        1.0,
        vec![low, 1.0],
        Some(frame),
        minus,
        StateVector::basis(2, 0),
    )?;
    let be = BlockEncoding::from_circuit(Arc::new(circuit), 1.0, 1, 0.0, OracleTag::UH)?;
    inst.encoding = Some(retag(be)?);
    Ok(inst)
}

/// Re-wraps an encoding as a single `U_H` oracle so that ledgers of circuits
/// built on it count `U_H` queries.
fn retag(be: BlockEncoding) -> Result<BlockEncoding> {
    let u = be.unitary()?;
    let mut out = BlockEncoding::from_unitary(u, be.alpha, be.num_ancilla, OracleTag::UH)?;
    out.epsilon = be.epsilon;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Grover interpolation family

/// `H(τ) = (1-τ) D + τ U_t` on `n` qubits, with `D = I - 2|u⟩⟨u|` and
/// `U_t = I - 2|t⟩⟨t|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroverFamily {
    pub n: usize,
    pub marked: usize,
    pub tau: f64,
}

/// Closed-form ground truth inside `span{|u⟩, |t⟩}`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GroverTruth {
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    /// Eigenvalue on the orthogonal complement.
    pub bulk: f64,
    pub gap: f64,
    /// Ground state as `c_u |u⟩ + c_t |t⟩` (normalized in the full space).
    pub ground_u: f64,
    pub ground_t: f64,
}

impl GroverFamily {
    pub fn new(n: usize, marked: usize, tau: f64) -> Result<Self> {
        check_range(
            "n",
            n as f64,
            (1..=MAX_FAMILY_QUBITS).contains(&n),
            "1 <= n <= 12",
        )?;
        check_range("tau", tau, (0.0..=1.0).contains(&tau), "0 <= tau <= 1")?;
        if marked >= 1 << n {
            return Err(Error::OutOfRange {
                name: "marked",
                value: marked as f64,
                expected: "a string of n bits",
            });
        }
        Ok(Self { n, marked, tau })
    }

    /// All-ones marked string.
    pub fn all_ones(n: usize, tau: f64) -> Result<Self> {
        Self::new(n, (1usize << n.min(63)) - 1, tau)
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// `⟨u|t⟩ = 1/√N`.
    pub fn overlap_ut(&self) -> f64 {
        1.0 / (self.dim() as f64).sqrt()
    }

    /// `H(τ) v` without forming the matrix.
    pub fn matvec(&self, v: &StateVector) -> StateVector {
        let s = self.overlap_ut();
        let mean: C64 = v.amplitudes().iter().sum::<C64>() * s;
        let mut out = StateVector::from_amplitudes(
            v.amplitudes()
                .iter()
                .map(|&z| z * (1.0 - self.tau) - mean * (2.0 * s * (1.0 - self.tau)) + z * self.tau)
                .collect(),
        );
        out.amplitudes_mut()[self.marked] -= v.amplitudes()[self.marked] * (2.0 * self.tau);
        out
    }

    pub fn dense(&self) -> ComplexMatrix {
        let n = self.dim();
        let w = 2.0 * (1.0 - self.tau) / n as f64;
        let mut h = ComplexMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                h[(r, c)] = C64::new(if r == c { 1.0 } else { 0.0 } - w, 0.0);
            }
        }
        h[(self.marked, self.marked)] -= C64::new(2.0 * self.tau, 0.0);
        h
    }

    /// Matrix `M` with `H [|u⟩ |t⟩] = [|u⟩ |t⟩] M` in the non-orthogonal
    /// basis `{|u⟩, |t⟩}`.
    pub fn restricted_matrix(&self) -> [[f64; 2]; 2] {
        let s = self.overlap_ut();
        let t = self.tau;
        [
            [2.0 * t - 1.0, -2.0 * (1.0 - t) * s],
            [-2.0 * t * s, 1.0 - 2.0 * t],
        ]
    }

    pub fn truth(&self) -> GroverTruth {
        let s = self.overlap_ut();
        let m = self.restricted_matrix();
        let root =
            ((1.0 - 2.0 * self.tau).powi(2) + 4.0 * self.tau * (1.0 - self.tau) * s * s).sqrt();
        // Eigenvector of M for -root: (M - λ)c = 0 from the first row, falling
        // back to the second row when that one vanishes.
        let (mut cu, mut ct) = if m[0][1].abs() > 1e-300 || (m[0][0] + root).abs() > 1e-300 {
            (-m[0][1], m[0][0] + root)
        } else {
            (m[1][1] + root, -m[1][0])
        };
        if cu.abs() + ct.abs() < 1e-300 {
            // M is already diagonal with -root in the (0,0) slot.
            cu = 1.0;
            ct = 0.0;
        }
        let norm = (cu * cu + ct * ct + 2.0 * s * cu * ct).sqrt();
        let sign = if cu < 0.0 || (cu == 0.0 && ct < 0.0) {
            -1.0
        } else {
            1.0
        };
        let bulk = 1.0;
        let lambda_plus = root;
        let first_excited = if self.n == 1 {
            lambda_plus
        } else {
            lambda_plus.min(bulk)
        };
        GroverTruth {
            lambda_minus: -root,
            lambda_plus,
            bulk,
            gap: first_excited + root,
            ground_u: sign * cu / norm,
            ground_t: sign * ct / norm,
        }
    }

    pub fn ground_state(&self) -> StateVector {
        let tr = self.truth();
        let mut v = StateVector::uniform(self.n).scale(C64::new(tr.ground_u, 0.0));
        v.amplitudes_mut()[self.marked] += tr.ground_t;
        v
    }

    /// Numerical restriction: orthonormalize `{|u⟩, |t⟩}`, project `H` with
    /// matrix-vector products and diagonalize the 2×2 result. Returns the two
    /// eigenvalues and the ground vector in the full space.
    pub fn restricted_numeric(&self) -> Result<(f64, f64, StateVector)> {
        let u = StateVector::uniform(self.n);
        let t = StateVector::basis(self.dim(), self.marked);
        let e1 = u.clone();
        let e2 = t.sub(&u.scale(u.inner(&t))).normalized()?;
        let basis = [e1, e2];
        let mut m = ComplexMatrix::zeros(2, 2);
        for (c, bc) in basis.iter().enumerate() {
            let hb = self.matvec(bc);
            for (r, br) in basis.iter().enumerate() {
                m[(r, c)] = br.inner(&hb);
            }
        }
        let eig = eig_hermitian(&m)?;
        let g = eig.vector(0);
        let ground = basis[0]
            .scale(g.amplitudes()[0])
            .add(&basis[1].scale(g.amplitudes()[1]));
        Ok((eig.values[0], eig.values[1], ground))
    }

    /// Distinct eigenvalues by Lanczos on the structured operator, from a
    /// start vector with weight on every invariant subspace.
    pub fn distinct_spectrum(&self, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = StateVector::from_amplitudes(
            (0..self.dim())
                .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect(),
        );
        let mut vals = crate::linalg::lanczos_spectrum(|v| self.matvec(v), &start, 12)?;
        vals.dedup_by(|a, b| (*a - *b).abs() < 1e-8);
        Ok(vals)
    }

    /// Dense instance with initial state `|u⟩ = H^{⊗n}|0^n⟩`. The spectrum is
    /// the closed form with the bulk eigenvalue repeated `N - 2` times.
    pub fn instance(&self) -> Result<BenchmarkInstance> {
        crate::linalg::check_qubit_budget(self.n + 1)?;
        let tr = self.truth();
        let mut eigenvalues = vec![tr.lambda_minus, tr.lambda_plus];
        eigenvalues.extend(std::iter::repeat_n(tr.bulk, self.dim().saturating_sub(2)));
        eigenvalues.sort_by(f64::total_cmp);
        BenchmarkInstance::from_parts(
            Family::Grover {
                n: self.n,
                marked: self.marked,
                tau: self.tau,
            },
            self.dense(),
            1.0,
            eigenvalues,
            None,
            self.ground_state(),
            StateVector::uniform(self.n),
        )
    }
}

/// `H(τ)` on `n` qubits with the all-ones marked string.
pub fn make_grover_family(n: usize, tau: f64) -> Result<BenchmarkInstance> {
    GroverFamily::all_ones(n, tau)?.instance()
}

/// `H^{⊗n}`, the circuit preparing `|u⟩`.
pub fn hadamard_transform(n: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::identity(1);
    for _ in 0..n {
        m = kron(&m, &hadamard());
    }
    m
}

/// Exact and leading-order quantities for `H(1/2 - N^{-1/2+δ})`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ShiftedGroverTruth {
    pub n: usize,
    pub delta_exp: f64,
    pub tau: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// `λ_+ - λ_-`.
    pub gap: f64,
    /// `4 N^{δ-1/2}`.
    pub gap_leading: f64,
    /// Unnormalized ground vector `χ = c_u |u⟩ + c_t |t⟩`.
    pub chi_u: f64,
    pub chi_t: f64,
    /// `|⟨Φ|t⟩|` for the normalized `χ`.
    pub overlap_t: f64,
    /// `¼ N^{-δ}`.
    pub overlap_t_leading: f64,
    /// `|⟨Φ|u⟩|`.
    pub overlap_u: f64,
}

pub fn shifted_grover_truth(n: usize, delta_exp: f64) -> Result<ShiftedGroverTruth> {
    check_range(
        "n",
        n as f64,
        (1..=MAX_FAMILY_QUBITS).contains(&n),
        "1 <= n <= 12",
    )?;
    check_range(
        "delta_exp",
        delta_exp,
        delta_exp > 0.0 && delta_exp < 1.0 / 6.0,
        "0 < delta_exp < 1/6",
    )?;
    let nn = (1usize << n) as f64;
    let tau = 0.5 - nn.powf(delta_exp - 0.5);
    let pre = nn.powf(delta_exp - 0.5);
    let root = (4.0 + nn.powf(-2.0 * delta_exp) - 4.0 / nn).sqrt();
    let lambda_plus = pre * root;
    let chi_u = nn.powf(delta_exp) * (nn.powf(-delta_exp) + 2.0 / nn.sqrt());
    let chi_t = nn.powf(delta_exp) * (root - 2.0);
    let s = 1.0 / nn.sqrt();
    let norm = (chi_u * chi_u + chi_t * chi_t + 2.0 * s * chi_u * chi_t).sqrt();
    Ok(ShiftedGroverTruth {
        n,
        delta_exp,
        tau,
        lambda_plus,
        lambda_minus: -lambda_plus,
        gap: 2.0 * lambda_plus,
        gap_leading: 4.0 * pre,
        chi_u,
        chi_t,
        overlap_t: (chi_u * s + chi_t).abs() / norm,
        overlap_t_leading: 0.25 * nn.powf(-delta_exp),
        overlap_u: (chi_u + chi_t * s).abs() / norm,
    })
}

// ---------------------------------------------------------------------------
// Counting Hamiltonian

fn diffusion(n: usize) -> ComplexMatrix {
    let dim = 1usize << n;
    let w = 2.0 / dim as f64;
    let mut d = ComplexMatrix::identity(dim);
    for r in 0..dim {
        for c in 0..dim {
            d[(r, c)] -= C64::new(w, 0.0);
        }
    }
    d
}

fn marking_oracle(n: usize, marked: &[usize]) -> ComplexMatrix {
    let mut diag = vec![1.0; 1 << n];
    for &x in marked {
        diag[x] = -1.0;
    }
    ComplexMatrix::from_diag(&diag)
}

fn check_marked(n: usize, marked: &[usize]) -> Result<Vec<usize>> {
    check_range(
        "n",
        n as f64,
        (1..=MAX_FAMILY_QUBITS).contains(&n),
        "1 <= n <= 12",
    )?;
    let dim = 1usize << n;
    let mut s: Vec<usize> = marked.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.is_empty() || s.len() >= dim || s.iter().any(|&x| x >= dim) {
        return Err(Error::OutOfRange {
            name: "marked set size",
            value: s.len() as f64,
            expected: "a nonempty proper subset of the n-bit strings",
        });
    }
    Ok(s)
}

/// `(H ⊗ I)[|0⟩⟨0| ⊗ D - |1⟩⟨1| ⊗ U_f D U_f](H ⊗ I)` with the two
/// controlled-`U_f` layers as counted oracles.
pub fn counting_circuit(n: usize, marked: &[usize]) -> Result<Circuit> {
    let s = check_marked(n, marked)?;
    let uf = Arc::new(marking_oracle(n, &s));
    let d = diffusion(n);
    let sys: Vec<usize> = (1..=n).collect();
    let mut c = Circuit::new(n + 1)?;
    c.gate(hadamard(), &[0], &[])?;
    c.gate(d.clone(), &sys, &[(0, false)])?;
    c.oracle(OracleTag::Other, uf.clone(), &sys, &[(0, true)], false)?;
    c.gate(d, &sys, &[(0, true)])?;
    c.oracle(OracleTag::Other, uf, &sys, &[(0, true)], false)?;
    c.gate(pauli_z(), &[0], &[])?;
    c.gate(hadamard(), &[0], &[])?;
    Ok(c)
}

/// `H = ½(D - U_f D U_f)` with its `(1, 1, 0)` block-encoding. The initial
/// state is `|u⟩`; the ground state is `(|u_0⟩ + |u_1⟩)/√2` with energy
/// `-2a√(1-a²)`, `a = √(|S|/N)`.
pub fn make_counting(n: usize, marked: &[usize]) -> Result<BenchmarkInstance> {
    let s = check_marked(n, marked)?;
    let circuit = counting_circuit(n, &s)?;
    let dim = 1usize << n;
    let d = diffusion(n);
    let uf = marking_oracle(n, &s);
    let h = d.sub(&uf.matmul(&d)?.matmul(&uf)?)?.scale_real(0.5);
    let a = (s.len() as f64 / dim as f64).sqrt();
    let b = (1.0 - a * a).sqrt();
    let e = 2.0 * a * b;
    let mut u0 = StateVector::zeros(dim);
    let mut u1 = StateVector::zeros(dim);
    for x in 0..dim {
        let target = if s.binary_search(&x).is_ok() {
            &mut u0
        } else {
            &mut u1
        };
        target.amplitudes_mut()[x] = ONE;
    }
    let u0 = u0.normalized()?;
    let u1 = u1.normalized()?;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let ground = u0.add(&u1).scale(C64::new(r, 0.0));
    let mut eigenvalues = vec![-e, e];
    eigenvalues.extend(std::iter::repeat_n(0.0, dim - 2));
    eigenvalues.sort_by(f64::total_cmp);
    let mut inst = BenchmarkInstance::from_parts(
        Family::Counting { n, marked: s },
        h,
        1.0,
        eigenvalues,
        None,
        ground,
        StateVector::uniform(n),
    )?;
    let be = BlockEncoding::from_circuit(Arc::new(circuit), 1.0, 1, 0.0, OracleTag::UH)?;
    inst.encoding = Some(retag(be)?);
    Ok(inst)
}

/// The first `count` strings in ascending order as a marked set.
pub fn first_strings(count: usize) -> Vec<usize> {
    (0..count).collect()
}

// ---------------------------------------------------------------------------
// Random instances

fn gaussian_c64(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Orthonormal frame from Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary(dim: usize, rng: &mut ChaCha8Rng) -> Result<ComplexMatrix> {
    let mut cols: Vec<StateVector> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v = StateVector::from_amplitudes((0..dim).map(|_| gaussian_c64(rng)).collect());
        for _ in 0..2 {
            for q in &cols {
                v = v.sub(&q.scale(q.inner(&v)));
            }
        }
        if v.norm() > 1e-8 {
            cols.push(v.normalized()?);
        }
    }
    let mut u = ComplexMatrix::zeros(dim, dim);
    for (c, v) in cols.iter().enumerate() {
        u.set_column(c, v);
    }
    Ok(u)
}

/// `V diag(λ) V†`, Hermitian by construction.
fn assemble(frame: &ComplexMatrix, spectrum: &[f64]) -> ComplexMatrix {
    let n = spectrum.len();
    let mut h = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        for c in r..n {
            let mut s = ZERO;
            for k in 0..n {
                s += frame[(r, k)] * frame[(c, k)].conj() * spectrum[k];
            }
            h[(r, c)] = s;
            h[(c, r)] = s.conj();
        }
        h[(r, r)] = C64::new(h[(r, r)].re, 0.0);
    }
    h
}

/// Random state in the span of frame columns `cols`, normalized.
fn random_in_span(
    frame: &ComplexMatrix,
    cols: std::ops::Range<usize>,
    rng: &mut ChaCha8Rng,
) -> Result<StateVector> {
    let mut v = StateVector::zeros(frame.rows());
    for k in cols {
        v = v.add(&frame.column(k).scale(gaussian_c64(rng)));
    }
    v.normalized()
}

/// Random instance with spectrum `(-Δ/2, Δ/2, uniform on [Δ/2, r])` where
/// `r = max(0.25, Δ)`, and an initial state with overlap exactly `γ`.
pub fn make_random_gapped(
    n: usize,
    gamma: f64,
    delta: f64,
    seed: u64,
) -> Result<BenchmarkInstance> {
    check_range(
        "gamma",
        gamma,
        gamma > 0.0 && gamma <= 1.0,
        "0 < gamma <= 1",
    )?;
    check_range(
        "delta",
        delta,
        delta > 0.0 && delta <= 1.0,
        "0 < delta <= 1",
    )?;
    check_range("n", n as f64, (1..=10).contains(&n), "1 <= n <= 10")?;
    crate::linalg::check_qubit_budget(n)?;
    let dim = 1usize << n;
    let radius = PLANTED_RADIUS.max(delta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frame = random_unitary(dim, &mut rng)?;
    let mut spectrum = vec![-delta / 2.0, delta / 2.0];
    for _ in 2..dim {
        spectrum.push(rng.random_range(delta / 2.0..=radius));
    }
    spectrum[2..].sort_by(f64::total_cmp);
    let ground = frame.column(0);
    let initial = if gamma >= 1.0 || dim == 1 {
        ground.clone()
    } else {
        let rest = random_in_span(&frame, 1..dim, &mut rng)?;
        ground
            .scale(C64::new(gamma, 0.0))
            .add(&rest.scale(C64::new((1.0 - gamma * gamma).sqrt(), 0.0)))
    };
    let h = assemble(&frame, &spectrum);
    BenchmarkInstance::from_parts(
        Family::RandomGapped {
            n,
            gamma,
            delta,
            seed,
        },
        h,
        radius,
        spectrum,
        Some(frame),
        ground,
        initial,
    )
}

/// Random instance with no gap structure: eigenvalues uniform on
/// `[-1/2, 1/2]` and a random initial state. `α = 1/2`.
pub fn make_random_gapless(n: usize, seed: u64) -> Result<BenchmarkInstance> {
    check_range("n", n as f64, (1..=10).contains(&n), "1 <= n <= 10")?;
    crate::linalg::check_qubit_budget(n)?;
    let dim = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frame = random_unitary(dim, &mut rng)?;
    let mut spectrum: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5..=0.5)).collect();
    spectrum.sort_by(f64::total_cmp);
    let initial = random_in_span(&frame, 0..dim, &mut rng)?;
    let h = assemble(&frame, &spectrum);
    BenchmarkInstance::from_parts(
        Family::RandomGapless { n, seed },
        h,
        0.5,
        spectrum,
        Some(frame.clone()),
        frame.column(0),
        initial,
    )
}

/// Random instance whose lowest eigenvalue `-1/4` has the given multiplicity;
/// the rest is uniform on `[0, 1/4]`. The initial state lies in the ground
/// space.
pub fn make_degenerate(n: usize, multiplicity: usize, seed: u64) -> Result<BenchmarkInstance> {
    check_range("n", n as f64, (1..=10).contains(&n), "1 <= n <= 10")?;
    let dim = 1usize << n;
    check_range(
        "multiplicity",
        multiplicity as f64,
        multiplicity >= 1 && multiplicity < dim,
        "1 <= multiplicity < 2^n",
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frame = random_unitary(dim, &mut rng)?;
    let mut spectrum = vec![-PLANTED_RADIUS; multiplicity];
    let mut rest: Vec<f64> = (multiplicity..dim)
        .map(|_| rng.random_range(0.0..=PLANTED_RADIUS))
        .collect();
    rest.sort_by(f64::total_cmp);
    spectrum.extend(rest);
    let initial = random_in_span(&frame, 0..multiplicity, &mut rng)?;
    let h = assemble(&frame, &spectrum);
    let mut inst = BenchmarkInstance::from_parts(
        Family::Degenerate {
            n,
            multiplicity,
            seed,
        },
        h,
        PLANTED_RADIUS,
        spectrum,
        Some(frame),
        initial.clone(),
        initial,
    )?;
    // Any vector in the ground space is a ground state; the initial state is.
    inst.gamma_true = 1.0;
    Ok(inst)
}

// ---------------------------------------------------------------------------
// Pauli sums and file formats

/// One term `c · P_1 ⊗ ... ⊗ P_n`; character `i` acts on qubit `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coeff: f64,
    pub paulis: String,
}

fn pauli_matrix(ch: char) -> Result<ComplexMatrix> {
    match ch.to_ascii_uppercase() {
        'I' => Ok(ComplexMatrix::identity(2)),
        'X' => Ok(pauli_x()),
        'Y' => Ok(pauli_y()),
        'Z' => Ok(pauli_z()),
        other => Err(Error::Parse(format!("unknown Pauli letter `{other}`"))),
    }
}

/// `Σ c_j P_j` and `α = Σ |c_j|`.
pub fn assemble_pauli_sum(terms: &[PauliTerm]) -> Result<(ComplexMatrix, f64)> {
    let n = terms
        .first()
        .map(|t| t.paulis.chars().count())
        .ok_or_else(|| Error::Parse("empty Pauli sum".into()))?;
    if n == 0 {
        return Err(Error::Parse("Pauli strings must be nonempty".into()));
    }
    crate::linalg::check_qubit_budget(n)?;
    let dim = 1usize << n;
    let mut h = ComplexMatrix::zeros(dim, dim);
    let mut alpha = 0.0;
    for t in terms {
        if t.paulis.chars().count() != n {
            return Err(Error::Parse(format!(
                "Pauli string `{}` has length {}, expected {n}",
                t.paulis,
                t.paulis.chars().count()
            )));
        }
        if !t.coeff.is_finite() {
            return Err(Error::Parse(format!(
                "non-finite coefficient for `{}`",
                t.paulis
            )));
        }
        let mut p = ComplexMatrix::identity(1);
        for ch in t.paulis.chars() {
            p = kron(&p, &pauli_matrix(ch)?);
        }
        h = h.add(&p.scale_real(t.coeff))?;
        alpha += t.coeff.abs();
    }
    let defect = h.hermitian_defect();
    if defect > STRUCTURAL_TOL {
        return Err(Error::NotHermitian {
            asymmetry: defect,
            tol: STRUCTURAL_TOL,
        });
    }
    Ok((h, alpha))
}

/// Instance from a Pauli sum; the initial state is `|0^n⟩`.
pub fn make_pauli(terms: &[PauliTerm]) -> Result<BenchmarkInstance> {
    let (h, alpha) = assemble_pauli_sum(terms)?;
    let n = terms[0].paulis.chars().count();
    BenchmarkInstance::from_dense(
        Family::Pauli {
            n,
            terms: terms.len(),
        },
        h,
        alpha,
        StateVector::zero_state(n),
    )
}

/// Open transverse-field Ising chain `-J Σ Z_i Z_{i+1} - g Σ X_i`; the
/// initial state is `|0^n⟩`.
pub fn make_tfim(n: usize, coupling: f64, field: f64) -> Result<BenchmarkInstance> {
    check_range("n", n as f64, (2..=10).contains(&n), "2 <= n <= 10")?;
    let mut terms = Vec::new();
    for i in 0..n - 1 {
        let mut s = vec!['I'; n];
        s[i] = 'Z';
        s[i + 1] = 'Z';
        terms.push(PauliTerm {
            coeff: -coupling,
            paulis: s.into_iter().collect(),
        });
    }
    for i in 0..n {
        let mut s = vec!['I'; n];
        s[i] = 'X';
        terms.push(PauliTerm {
            coeff: -field,
            paulis: s.into_iter().collect(),
        });
    }
    let mut inst = make_pauli(&terms)?;
    inst.family = Family::Tfim { n, coupling, field };
    Ok(inst)
}

#[derive(Serialize, Deserialize)]
struct DenseFile {
    format: String,
    alpha: Option<f64>,
    matrix: ComplexMatrix,
}

/// Parses the Pauli-list format `{"terms": [{"coeff", "paulis"}]}`, the map
/// shorthand `{"ZZ": 1.0, ...}`, or the dense format
/// `{"format": "dense", "matrix": {rows, cols, re, im}, "alpha"?}`.
pub fn parse_hamiltonian(json: &str) -> Result<BenchmarkInstance> {
    let v: Value = serde_json::from_str(json)?;
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Parse("Hamiltonian file must hold a JSON object".into()))?;
    if obj.contains_key("matrix") {
        let f: DenseFile = serde_json::from_value(v.clone())?;
        if f.format != "dense" {
            return Err(Error::Parse(format!(
                "unknown matrix format `{}`",
                f.format
            )));
        }
        if !f.matrix.is_square() {
            return Err(Error::Parse("dense matrix must be square".into()));
        }
        let n = crate::linalg::qubits_of(f.matrix.rows())
            .ok_or_else(|| Error::Parse("dense matrix dimension must be a power of two".into()))?;
        let defect = f.matrix.hermitian_defect();
        if defect > STRUCTURAL_TOL {
            return Err(Error::NotHermitian {
                asymmetry: defect,
                tol: STRUCTURAL_TOL,
            });
        }
        let alpha = match f.alpha {
            Some(a) => a,
            None => operator_norm(&f.matrix),
        };
        return BenchmarkInstance::from_dense(
            Family::Dense { n },
            f.matrix,
            alpha,
            StateVector::zero_state(n),
        );
    }
    let terms: Vec<PauliTerm> = if let Some(t) = obj.get("terms") {
        serde_json::from_value(t.clone())?
    } else {
        obj.iter()
            .map(|(k, c)| {
                c.as_f64()
                    .map(|coeff| PauliTerm {
                        coeff,
                        paulis: k.clone(),
                    })
                    .ok_or_else(|| Error::Parse(format!("coefficient of `{k}` is not a number")))
            })
            .collect::<Result<_>>()?
    };
    make_pauli(&terms)
}

pub fn load_hamiltonian(path: impl AsRef<Path>) -> Result<BenchmarkInstance> {
    parse_hamiltonian(&std::fs::read_to_string(path)?)
}

/// Writes `H` in the dense format read by [`load_hamiltonian`].
pub fn save_dense(inst: &BenchmarkInstance, path: impl AsRef<Path>) -> Result<()> {
    let f = DenseFile {
        format: "dense".into(),
        alpha: Some(inst.alpha),
        matrix: inst.h.clone(),
    };
    std::fs::write(path, serde_json::to_string(&f)?)?;
    Ok(())
}

/// Checks the instance invariants: ground truth reproduces `H`, and the
/// stored overlap matches the states.
pub fn verify_instance(inst: &BenchmarkInstance) -> Result<()> {
    let hg = inst.h.mul_vec(&inst.ground_state)?;
    let resid = hg
        .sub(&inst.ground_state.scale(C64::new(inst.eigenvalues[0], 0.0)))
        .norm();
    if resid > SPECTRAL_TOL {
        return Err(Error::NoConvergence {
            what: "ground-state residual check",
            residual: resid,
        });
    }
    if let Some(e) = inst.reconstruction_error()? {
        if e > SPECTRAL_TOL {
            return Err(Error::NoConvergence {
                what: "spectral reconstruction check",
                residual: e,
            });
        }
    }
    Ok(())
}
