//! Dense complex linear algebra: matrices, state vectors, tensor products,
//! Hermitian eigendecomposition (cyclic Jacobi), operator norms and
//! projective measurement sampling.
//!
//! Register convention: qubit 0 is the most significant bit of a basis
//! index, so `kron(A, B)` puts `A` on the leading qubits. Ancilla registers
//! always come first, which makes `(<0^m| ⊗ I) U (|0^m> ⊗ I)` the top-left
//! block of `U`.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Default tolerance for structural predicates (Hermiticity, unitarity).
pub const STRUCTURAL_TOL: f64 = 1e-10;
/// Default tolerance for spectral statements, relative to the operator norm.
pub const SPECTRAL_TOL: f64 = 1e-9;

/// Default cap on the number of qubits of any dense register.
pub const DEFAULT_MAX_QUBITS: usize = 14;

/// Largest register (in qubits) the simulator will allocate. Reads
/// `QGSP_MAX_QUBITS` so large sweeps can opt in explicitly.
pub fn max_qubits() -> usize {
    std::env::var("QGSP_MAX_QUBITS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_QUBITS)
}

pub(crate) fn check_qubit_budget(requested: usize) -> Result<()> {
    let cap = max_qubits();
    if requested > cap {
        return Err(Error::QubitBudget { requested, cap });
    }
    Ok(())
}

/// Number of qubits of a power-of-two dimension.
pub fn qubits_of(dim: usize) -> Option<usize> {
    if dim.is_power_of_two() {
        Some(dim.trailing_zeros() as usize)
    } else {
        None
    }
}

/// Dense complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for c in 0..self.cols.min(8) {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows of complex entries. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows
                .iter()
                .flat_map(|row| row.iter().map(|&x| C64::new(x, 0.0)))
                .collect(),
        }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// `|v><w|`.
    pub fn outer(v: &StateVector, w: &StateVector) -> Self {
        let mut m = Self::zeros(v.dim(), w.dim());
        for (r, a) in v.amplitudes().iter().enumerate() {
            for (c, b) in w.amplitudes().iter().enumerate() {
                m[(r, c)] = a * b.conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> StateVector {
        StateVector::from_amplitudes((0..self.rows).map(|r| self[(r, c)]).collect())
    }

    pub fn set_column(&mut self, c: usize, v: &StateVector) {
        assert_eq!(v.dim(), self.rows);
        for (r, &a) in v.amplitudes().iter().enumerate() {
            self[(r, c)] = a;
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(c, r)] = self[(r, c)].conj();
            }
        }
        m
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    fn check_same_shape(&self, other: &Self, what: &str) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "matmul: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &StateVector) -> Result<StateVector> {
        if self.cols != v.dim() {
            return Err(Error::DimensionMismatch(format!(
                "apply: {}x{} matrix on dimension {}",
                self.rows,
                self.cols,
                v.dim()
            )));
        }
        let amps = (0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v.amplitudes())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        Ok(StateVector::from_amplitudes(amps))
    }

    /// The top-left `n x n` block.
    pub fn top_left(&self, n: usize) -> Self {
        assert!(n <= self.rows && n <= self.cols);
        let mut m = Self::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                m[(r, c)] = self[(r, c)];
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    /// Largest entrywise deviation of `U^† U` from the identity.
    pub fn unitary_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in a..n {
                let mut s = ZERO;
                for r in 0..n {
                    s += self[(r, a)].conj() * self[(r, b)];
                }
                if a == b {
                    s -= ONE;
                }
                worst = worst.max(s.norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitary_defect() <= tol
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson {
            rows: self.rows,
            cols: self.cols,
            re: self.data.iter().map(|z| z.re).collect(),
            im: self.data.iter().map(|z| z.im).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(d)?;
        let n = raw.rows * raw.cols;
        if raw.re.len() != n || raw.im.len() != n {
            return Err(serde::de::Error::custom(format!(
                "expected {n} entries in re/im, got {}/{}",
                raw.re.len(),
                raw.im.len()
            )));
        }
        Ok(ComplexMatrix {
            rows: raw.rows,
            cols: raw.cols,
            data: raw
                .re
                .into_iter()
                .zip(raw.im)
                .map(|(re, im)| C64::new(re, im))
                .collect(),
        })
    }
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut m = ComplexMatrix::zeros(rows, cols);
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let x = a[(ar, ac)];
            if x == ZERO {
                continue;
            }
            for br in 0..b.rows {
                for bc in 0..b.cols {
                    m[(ar * b.rows + br, ac * b.cols + bc)] = x * b[(br, bc)];
                }
            }
        }
    }
    m
}

/// `U |s>`.
pub fn apply(u: &ComplexMatrix, s: &StateVector) -> Result<StateVector> {
    u.mul_vec(s)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
}

pub fn hadamard() -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_real_rows(&[&[h, h], &[h, -h]])
}

/// Pure state on a register of qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    pub fn from_amplitudes(amps: Vec<C64>) -> Self {
        Self { amps }
    }

    pub fn from_real(amps: &[f64]) -> Self {
        Self {
            amps: amps.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            amps: vec![ZERO; dim],
        }
    }

    /// Computational basis state `|index>` of the given dimension.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut s = Self::zeros(dim);
        s.amps[index] = ONE;
        s
    }

    /// `|0...0>` on `n` qubits.
    pub fn zero_state(n: usize) -> Self {
        Self::basis(1 << n, 0)
    }

    /// Uniform superposition over `n` qubits.
    pub fn uniform(n: usize) -> Self {
        let dim = 1usize << n;
        let a = 1.0 / (dim as f64).sqrt();
        Self {
            amps: vec![C64::new(a, 0.0); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn num_qubits(&self) -> Option<usize> {
        qubits_of(self.dim())
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroNormBranch);
        }
        for z in &mut self.amps {
            *z /= n;
        }
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Fidelity `|<self|other>|` between normalized states.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm()
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Self { amps }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            amps: self.amps.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            amps: self
                .amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            amps: self
                .amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// `<self|A|self>`, real part (A Hermitian).
    pub fn expectation(&self, a: &ComplexMatrix) -> Result<f64> {
        Ok(self.inner(&a.mul_vec(self)?).re)
    }

    /// First `len` amplitudes, i.e. the system component with all leading
    /// (ancilla) qubits in `|0>`.
    pub fn leading_block(&self, len: usize) -> Self {
        Self {
            amps: self.amps[..len].to_vec(),
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> StateVector {
        self.vectors.column(k)
    }

    /// `V f(Λ) V^†`.
    pub fn apply_function(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for r in 0..n {
            for c in r..n {
                let mut s = ZERO;
                for (k, &w) in fv.iter().enumerate() {
                    if w != 0.0 {
                        s += self.vectors[(r, k)] * self.vectors[(c, k)].conj() * w;
                    }
                }
                out[(r, c)] = s;
                out[(c, r)] = s.conj();
            }
        }
        out
    }

    /// `V diag(λ) V^†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_function(|l| l)
    }
}

/// Hermitian eigendecomposition with the default Hermiticity tolerance.
pub fn eig_hermitian(a: &ComplexMatrix) -> Result<HermitianEigen> {
    eig_hermitian_with(a, STRUCTURAL_TOL)
}

/// Cyclic Jacobi eigendecomposition of a Hermitian matrix.
///
/// Each rotation first absorbs the phase of `a[p][q]` and then applies the
/// real symmetric Jacobi rotation annihilating it. Sweeps continue until the
/// off-diagonal mass is below `1e-15` of the Frobenius norm.
pub fn eig_hermitian_with(a: &ComplexMatrix, herm_tol: f64) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            a.rows, a.cols
        )));
    }
    let scale = a.max_abs().max(1.0);
    let defect = a.hermitian_defect();
    if defect > herm_tol * scale {
        return Err(Error::NotHermitian {
            asymmetry: defect,
            tol: herm_tol,
        });
    }
    let n = a.rows;
    // Symmetrize so tiny input asymmetries cannot accumulate.
    let mut m = a.clone();
    for r in 0..n {
        m[(r, r)] = C64::new(m[(r, r)].re, 0.0);
        for c in r + 1..n {
            let z = (a[(r, c)] + a[(c, r)].conj()) * 0.5;
            m[(r, c)] = z;
            m[(c, r)] = z.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let fro = m.frobenius_norm();
    let target = (1e-15 * fro).powi(2);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if off <= target || fro == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let b = apq.norm();
                if b <= 1e-300 || b < 1e-18 * fro {
                    continue;
                }
                let u = apq / b;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (2.0 * b);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J = I except J[p][p]=c, J[q][q]=c, J[p][q]=s u, J[q][p]=-s conj(u)
                let spq = u * s;
                let sqp = -u.conj() * s;
                // m <- m J (columns p, q)
                for r in 0..n {
                    let mp = m[(r, p)];
                    let mq = m[(r, q)];
                    m[(r, p)] = mp * c + mq * sqp;
                    m[(r, q)] = mp * spq + mq * c;
                }
                // m <- J^† m (rows p, q)
                for col in 0..n {
                    let mp = m[(p, col)];
                    let mq = m[(q, col)];
                    m[(p, col)] = mp * c + mq * sqp.conj();
                    m[(q, col)] = mp * spq.conj() + mq * c;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                for r in 0..n {
                    let vp = v[(r, p)];
                    let vq = v[(r, q)];
                    v[(r, p)] = vp * c + vq * sqp;
                    v[(r, q)] = vp * spq + vq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, dst)] = v[(r, src)];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// Spectral norm (largest singular value).
pub fn operator_norm(a: &ComplexMatrix) -> f64 {
    if a.rows == 0 || a.cols == 0 {
        return 0.0;
    }
    // Gram matrix on the smaller side; its top eigenvalue is sigma_max^2 with
    // absolute error ~1e-16 sigma_max^2, i.e. full relative accuracy.
    let gram = if a.rows >= a.cols {
        a.adjoint().matmul(a)
    } else {
        a.matmul(&a.adjoint())
    }
    .expect("shapes agree by construction");
    let eig = eig_hermitian_with(&gram, f64::INFINITY).expect("Gram matrix is square");
    eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// `‖A − B‖_2`.
pub fn operator_norm_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    Ok(operator_norm(&a.sub(b)?))
}

/// Ritz values of the Krylov space generated by `start` under a Hermitian
/// operator, using Lanczos with full reorthogonalization.
///
/// The iteration stops on breakdown (the Krylov space became invariant), in
/// which case the returned values are exact eigenvalues of the operator
/// restricted to that space. This is how large structured matrices with a
/// handful of distinct eigenvalues are diagonalized without an `O(N^3)`
/// dense solve.
pub fn lanczos_spectrum(
    matvec: impl Fn(&StateVector) -> StateVector,
    start: &StateVector,
    max_dim: usize,
) -> Result<Vec<f64>> {
    let mut basis: Vec<StateVector> = Vec::new();
    let mut q = start.clone().normalized()?;
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    for _ in 0..max_dim {
        let mut w = matvec(&q);
        let alpha = q.inner(&w).re;
        alphas.push(alpha);
        basis.push(q.clone());
        // Full reorthogonalization, twice for stability.
        for _ in 0..2 {
            for b in &basis {
                let c = b.inner(&w);
                w = w.sub(&b.scale(c));
            }
        }
        let beta = w.norm();
        if beta < 1e-12 * (1.0 + alpha.abs()) {
            break;
        }
        betas.push(beta);
        q = w.scale(C64::new(1.0 / beta, 0.0));
    }
    let k = alphas.len();
    let mut t = ComplexMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = C64::new(alphas[i], 0.0);
        if i + 1 < k {
            t[(i, i + 1)] = C64::new(betas[i], 0.0);
            t[(i + 1, i)] = C64::new(betas[i], 0.0);
        }
    }
    Ok(eig_hermitian(&t)?.values)
}

/// Probability of each outcome pattern on the measured qubits, indexed by the
/// pattern read with `qubits[0]` as the most significant bit.
pub fn outcome_probabilities(s: &StateVector, qubits: &[usize]) -> Result<Vec<f64>> {
    let n = s
        .num_qubits()
        .ok_or_else(|| Error::DimensionMismatch(format!("dimension {} is not 2^n", s.dim())))?;
    if let Some(&q) = qubits.iter().find(|&&q| q >= n) {
        return Err(Error::DimensionMismatch(format!(
            "qubit {q} out of range for {n} qubits"
        )));
    }
    let mut probs = vec![0.0; 1 << qubits.len()];
    for (idx, a) in s.amplitudes().iter().enumerate() {
        probs[pattern_of(idx, n, qubits)] += a.norm_sqr();
    }
    Ok(probs)
}

fn pattern_of(idx: usize, n: usize, qubits: &[usize]) -> usize {
    qubits
        .iter()
        .fold(0, |acc, &q| (acc << 1) | ((idx >> (n - 1 - q)) & 1))
}

/// Samples a single outcome index from a discrete distribution.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &p) in probs.iter().enumerate() {
        if u < p {
            return i;
        }
        u -= p;
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Outcome of a projective measurement of some qubits.
#[derive(Clone, Debug)]
pub struct Measurement {
    /// Outcome bits, one per measured qubit in the order requested.
    pub bits: Vec<u8>,
    /// Probability of the observed outcome.
    pub probability: f64,
    /// Renormalized post-measurement state.
    pub post_state: StateVector,
}

impl Measurement {
    pub fn pattern(&self) -> usize {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }
}

/// Measures `qubits` in the computational basis with an explicit seed.
pub fn measure(s: &StateVector, qubits: &[usize], rng_seed: u64) -> Result<Measurement> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    measure_with(s, qubits, &mut rng)
}

/// Measures `qubits` drawing randomness from `rng`.
pub fn measure_with<R: Rng + ?Sized>(
    s: &StateVector,
    qubits: &[usize],
    rng: &mut R,
) -> Result<Measurement> {
    let probs = outcome_probabilities(s, qubits)?;
    let pattern = sample_index(&probs, rng);
    collapse(s, qubits, pattern)
}

/// Projects onto a given outcome pattern and renormalizes.
pub fn collapse(s: &StateVector, qubits: &[usize], pattern: usize) -> Result<Measurement> {
    let n = s
        .num_qubits()
        .ok_or_else(|| Error::DimensionMismatch(format!("dimension {} is not 2^n", s.dim())))?;
    let mut post = StateVector::zeros(s.dim());
    let mut p = 0.0;
    for (idx, a) in s.amplitudes().iter().enumerate() {
        if pattern_of(idx, n, qubits) == pattern {
            post.amplitudes_mut()[idx] = *a;
            p += a.norm_sqr();
        }
    }
    if p <= 0.0 {
        return Err(Error::ZeroNormBranch);
    }
    post.normalize()?;
    let k = qubits.len();
    let bits = (0..k)
        .map(|i| ((pattern >> (k - 1 - i)) & 1) as u8)
        .collect();
    Ok(Measurement {
        bits,
        probability: p,
        post_state: post,
    })
}
