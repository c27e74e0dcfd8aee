//! Block-encodings and the reflector/projector constructions built on them.
//!
//! A block-encoding of `A` is a unitary `U` on `m` ancilla qubits followed by
//! `n` system qubits with `‖A - α (⟨0^m| ⊗ I) U (|0^m⟩ ⊗ I)‖ <= ε`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::linalg::{
    collapse, eig_hermitian, hadamard, operator_norm_diff, outcome_probabilities, sample_index,
    ComplexMatrix, StateVector, STRUCTURAL_TOL,
};
use crate::qsp::{assemble_qsp_unitary, sign_phases, PhaseFactorSequence};

pub use crate::circuit::{Circuit, OracleCounts, OracleTag, QueryLedger};

#[derive(Clone, Debug)]
pub struct BlockEncoding {
    circuit: Arc<Circuit>,
    pub alpha: f64,
    pub num_ancilla: usize,
    pub num_system: usize,
    pub epsilon: f64,
    /// Oracle the encoding is ultimately charged to.
    pub ledger_tag: OracleTag,
    cost: QueryLedger,
}

impl BlockEncoding {
    /// Wraps a circuit whose first `num_ancilla` qubits are the ancillas.
    pub fn from_circuit(
        circuit: Arc<Circuit>,
        alpha: f64,
        num_ancilla: usize,
        epsilon: f64,
        ledger_tag: OracleTag,
    ) -> Result<Self> {
        check_range("alpha", alpha, alpha > 0.0, "alpha > 0")?;
        if num_ancilla > circuit.num_qubits() {
            return Err(Error::DimensionMismatch(format!(
                "{num_ancilla} ancillas on a {}-qubit circuit",
                circuit.num_qubits()
            )));
        }
        let cost = circuit.cost();
        Ok(Self {
            num_system: circuit.num_qubits() - num_ancilla,
            circuit,
            alpha,
            num_ancilla,
            epsilon,
            ledger_tag,
            cost,
        })
    }

    /// Treats a dense unitary as a single oracle call tagged `tag`.
    pub fn from_unitary(
        u: ComplexMatrix,
        alpha: f64,
        num_ancilla: usize,
        tag: OracleTag,
    ) -> Result<Self> {
        let n = crate::linalg::qubits_of(u.rows())
            .filter(|_| u.is_square())
            .ok_or_else(|| {
                Error::DimensionMismatch(format!(
                    "{}x{} is not a register operator",
                    u.rows(),
                    u.cols()
                ))
            })?;
        let defect = u.unitary_defect();
        if defect > STRUCTURAL_TOL {
            return Err(Error::OutOfRange {
                name: "unitarity defect",
                value: defect,
                expected: "<= 1e-10",
            });
        }
        let mut c = Circuit::new(n)?;
        let targets: Vec<usize> = (0..n).collect();
        c.oracle(tag, Arc::new(u), &targets, &[], false)?;
        Self::from_circuit(Arc::new(c), alpha, num_ancilla, 0.0, tag)
    }

    pub fn circuit(&self) -> &Arc<Circuit> {
        &self.circuit
    }

    pub fn num_qubits(&self) -> usize {
        self.num_ancilla + self.num_system
    }

    pub fn system_dim(&self) -> usize {
        1 << self.num_system
    }

    /// Oracle calls and gate estimate for one application.
    pub fn cost(&self) -> &QueryLedger {
        &self.cost
    }

    /// `(⟨0^m| ⊗ I) U (|0^m⟩ ⊗ I)`.
    pub fn block(&self) -> Result<ComplexMatrix> {
        self.circuit.top_left_block(self.num_ancilla)
    }

    /// `α` times the block: the encoded matrix.
    pub fn encoded(&self) -> Result<ComplexMatrix> {
        Ok(self.block()?.scale_real(self.alpha))
    }

    pub fn unitary(&self) -> Result<ComplexMatrix> {
        self.circuit.unitary()
    }

    /// `‖target - α·block‖`.
    pub fn contract_error(&self, target: &ComplexMatrix) -> Result<f64> {
        operator_norm_diff(target, &self.encoded()?)
    }

    /// `|0^m⟩ ⊗ |φ⟩`.
    pub fn embed(&self, system: &StateVector) -> Result<StateVector> {
        if system.dim() != self.system_dim() {
            return Err(Error::DimensionMismatch(format!(
                "system state of dimension {} for a {}-qubit system",
                system.dim(),
                self.num_system
            )));
        }
        Ok(StateVector::basis(1 << self.num_ancilla, 0).kron(system))
    }

    /// Runs the circuit on a full-register state.
    pub fn apply(&self, state: &StateVector, ledger: &mut QueryLedger) -> Result<StateVector> {
        self.circuit.apply(state, ledger)
    }
}

/// The one-ancilla dilation `[[A, √(I-A²)], [√(I-A²), -A]]` with `A = H/α`.
pub fn encode_hermitian(h: &ComplexMatrix, alpha: f64) -> Result<BlockEncoding> {
    check_range("alpha", alpha, alpha > 0.0, "alpha > 0")?;
    let eig = eig_hermitian(h)?;
    let norm = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if norm > alpha * (1.0 + 1e-12) {
        return Err(Error::OutOfRange {
            name: "alpha",
            value: alpha,
            expected: "alpha >= ||H||",
        });
    }
    let a = h.scale_real(1.0 / alpha);
    let b = eig.apply_function(|l| (1.0 - (l / alpha).powi(2)).max(0.0).sqrt());
    let n = h.rows();
    let mut u = ComplexMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            u[(r, c)] = a[(r, c)];
            u[(r, n + c)] = b[(r, c)];
            u[(n + r, c)] = b[(r, c)];
            u[(n + r, n + c)] = -a[(r, c)];
        }
    }
    BlockEncoding::from_unitary(u, alpha, 1, OracleTag::UH)
}

/// Encoding of `H - μI` with normalization `α + |μ|` and one extra ancilla
/// (prepended as qubit 0), by a two-term linear combination of unitaries.
pub fn shift_encoding(be: &BlockEncoding, mu: f64) -> Result<BlockEncoding> {
    check_range("mu", mu, true, "finite")?;
    let alpha_t = be.alpha + mu.abs();
    let c0 = (be.alpha / alpha_t).sqrt();
    let c1 = (mu.abs() / alpha_t).sqrt();
    let prep = ComplexMatrix::from_real_rows(&[&[c0, -c1], &[c1, c0]]);
    let total = 1 + be.num_qubits();
    let mut c = Circuit::new(total)?;
    let inner: Vec<usize> = (1..total).collect();
    c.gate(prep.clone(), &[0], &[])?;
    c.sub(be.circuit().clone(), &inner, &[(0, false)], false)?;
    // |1⟩⟨1| ⊗ (-sign μ) I is a phase on the selector qubit.
    let s = if mu > 0.0 { -1.0 } else { 1.0 };
    c.gate(ComplexMatrix::from_diag(&[1.0, s]), &[0], &[])?;
    c.gate(prep.adjoint(), &[0], &[])?;
    BlockEncoding::from_circuit(
        Arc::new(c),
        alpha_t,
        be.num_ancilla + 1,
        be.epsilon,
        be.ledger_tag,
    )
}

/// `REF(μ, δ, ε)`: an encoding (normalization 1, `m + 2` ancillas) of the
/// reflector `R_{<μ}` realized as `-S((H - μ)/α̃; δ, ε)` with `α̃ = α + |μ|`.
///
/// The caller is responsible for the gap condition `|λ_k - μ| >= δ α̃`;
/// without it the block carries no accuracy guarantee.
pub fn make_reflector(
    be_h: &BlockEncoding,
    mu: f64,
    delta: f64,
    eps: f64,
) -> Result<BlockEncoding> {
    check_range("delta", delta, delta > 0.0 && delta < 1.0, "0 < delta < 1")?;
    check_range("eps", eps, eps > 0.0 && eps < 1.0, "0 < eps < 1")?;
    let shifted = shift_encoding(be_h, mu)?;
    let sp = sign_phases(delta, eps)?;
    let qsp = assemble_qsp_unitary(&shifted, &sp.phases.negated())?;
    let mut enc = qsp.encoding;
    enc.epsilon = sp.poly.eps_achieved + sp.phases.residual + shifted.epsilon;
    Ok(enc)
}

/// `PROJ(μ, δ, ε)`: Hadamard-conjugated controlled-`REF(μ, δ, ε)`, an
/// encoding of `P_{<μ} = (I + R_{<μ})/2` with `m + 3` ancillas and accuracy
/// `ε/2`. The control qubit is qubit 0.
pub fn make_projector(
    be_h: &BlockEncoding,
    mu: f64,
    delta: f64,
    eps: f64,
) -> Result<BlockEncoding> {
    let reflector = make_reflector(be_h, mu, delta, eps)?;
    projector_from_reflector(&reflector)
}

/// Wraps an existing reflector encoding into the projector circuit.
pub fn projector_from_reflector(reflector: &BlockEncoding) -> Result<BlockEncoding> {
    let total = 1 + reflector.num_qubits();
    let mut c = Circuit::new(total)?;
    let inner: Vec<usize> = (1..total).collect();
    c.gate(hadamard(), &[0], &[])?;
    c.sub(reflector.circuit().clone(), &inner, &[(0, true)], false)?;
    c.gate(hadamard(), &[0], &[])?;
    BlockEncoding::from_circuit(
        Arc::new(c),
        1.0,
        reflector.num_ancilla + 1,
        reflector.epsilon / 2.0,
        reflector.ledger_tag,
    )
}

/// Query cost of one `PROJ(μ, ·, ·)` application whose sign polynomial has
/// the given odd degree. The phases do not enter the count, so none are
/// solved for.
pub fn projector_cost(be_h: &BlockEncoding, mu: f64, degree: usize) -> Result<QueryLedger> {
    let shifted = shift_encoding(be_h, mu)?;
    let qsp = assemble_qsp_unitary(&shifted, &PhaseFactorSequence::new(vec![0.0; degree + 1])?)?;
    Ok(projector_from_reflector(&qsp.encoding)?.cost().clone())
}

/// Classification of the ancilla readout after a projector application.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostselectOutcome {
    /// All ancillas 0: the state is proportional to `P̃_{<μ}|φ⟩`.
    Success0,
    /// Control ancilla 1, the rest 0: the state is close to `P_{>μ}|φ⟩`.
    Flip1,
    Garbage,
}

#[derive(Clone, Debug)]
pub struct PostselectResult {
    pub outcome: PostselectOutcome,
    /// Normalized system state after the measurement.
    pub post_state: StateVector,
    /// Probability of the observed ancilla pattern.
    pub probability: f64,
    pub ledger: QueryLedger,
}

/// Exact probabilities of the three outcome classes for `be` applied to
/// `|0^m⟩|φ⟩`, plus the unmeasured output state.
#[derive(Clone, Debug)]
pub struct OutcomeDistribution {
    pub success0: f64,
    pub flip1: f64,
    pub garbage: f64,
    pub output: StateVector,
}

fn classify(pattern: usize, m: usize) -> PostselectOutcome {
    if pattern == 0 {
        PostselectOutcome::Success0
    } else if pattern == 1 << (m - 1) {
        PostselectOutcome::Flip1
    } else {
        PostselectOutcome::Garbage
    }
}

/// Runs `be` on `|0^m⟩|φ⟩` and returns the outcome-class probabilities.
pub fn outcome_distribution(
    be: &BlockEncoding,
    system: &StateVector,
    ledger: &mut QueryLedger,
) -> Result<OutcomeDistribution> {
    let out = be.apply(&be.embed(system)?, ledger)?;
    let anc: Vec<usize> = (0..be.num_ancilla).collect();
    let probs = outcome_probabilities(&out, &anc)?;
    let mut d = OutcomeDistribution {
        success0: 0.0,
        flip1: 0.0,
        garbage: 0.0,
        output: out,
    };
    for (pat, p) in probs.iter().enumerate() {
        match classify(pat, be.num_ancilla) {
            PostselectOutcome::Success0 => d.success0 += p,
            PostselectOutcome::Flip1 => d.flip1 += p,
            PostselectOutcome::Garbage => d.garbage += p,
        }
    }
    Ok(d)
}

/// Applies `be` to `|0^m⟩|φ⟩`, measures all ancillas and classifies the
/// result.
pub fn apply_and_postselect(
    be: &BlockEncoding,
    system: &StateVector,
    rng_seed: u64,
) -> Result<PostselectResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    apply_and_postselect_with(be, system, &mut rng)
}

pub fn apply_and_postselect_with<R: rand::Rng + ?Sized>(
    be: &BlockEncoding,
    system: &StateVector,
    rng: &mut R,
) -> Result<PostselectResult> {
    if be.num_ancilla == 0 {
        return Err(Error::DimensionMismatch("nothing to postselect on".into()));
    }
    let mut ledger = QueryLedger::new();
    let out = be.apply(&be.embed(system)?, &mut ledger)?;
    let anc: Vec<usize> = (0..be.num_ancilla).collect();
    let probs = outcome_probabilities(&out, &anc)?;
    let pattern = sample_index(&probs, rng);
    let m = collapse(&out, &anc, pattern)?;
    let sys_dim = be.system_dim();
    let post = StateVector::from_amplitudes(
        m.post_state.amplitudes()[pattern * sys_dim..(pattern + 1) * sys_dim].to_vec(),
    );
    Ok(PostselectResult {
        outcome: classify(pattern, be.num_ancilla),
        post_state: post,
        probability: m.probability,
        ledger,
    })
}

/// Ideal reflector `Σ_{λ<μ} |ψ⟩⟨ψ| - Σ_{λ>μ} |ψ⟩⟨ψ|` from an exact spectrum.
pub fn ideal_reflector(h: &ComplexMatrix, mu: f64) -> Result<ComplexMatrix> {
    Ok(eig_hermitian(h)?.apply_function(|l| if l < mu { 1.0 } else { -1.0 }))
}

/// Ideal projector onto eigenvectors with eigenvalue below `μ`.
pub fn ideal_projector(h: &ComplexMatrix, mu: f64) -> Result<ComplexMatrix> {
    Ok(eig_hermitian(h)?.apply_function(|l| if l < mu { 1.0 } else { 0.0 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli_x, pauli_z, C64, ONE};
    use crate::polyapprox::eval_on_hermitian;
    use crate::qsp::{qsp_product_2x2, solve_phase_factors};

    fn h_of(a: f64) -> ComplexMatrix {
        pauli_x()
            .scale_real(a)
            .add(&ComplexMatrix::identity(2).scale_real(1.0 - a))
            .unwrap()
    }

    #[test]
    fn encode_hermitian_examples() {
        let be = encode_hermitian(&ComplexMatrix::zeros(2, 2), 1.0).unwrap();
        let u = be.unitary().unwrap();
        let want = crate::linalg::kron(&pauli_x(), &ComplexMatrix::identity(2));
        assert!(operator_norm_diff(&u, &want).unwrap() < 1e-12);

        let be = encode_hermitian(&pauli_x(), 1.0).unwrap();
        assert!(be.contract_error(&pauli_x()).unwrap() < 1e-12);
        assert!(be.unitary().unwrap().is_unitary(1e-10));
        assert_eq!((be.num_ancilla, be.num_system), (1, 1));

        assert!(matches!(
            encode_hermitian(&pauli_x(), 0.5),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn shift_encoding_examples() {
        let be = encode_hermitian(&pauli_z(), 1.0).unwrap();
        let s0 = shift_encoding(&be, 0.0).unwrap();
        assert_eq!(s0.alpha, 1.0);
        assert_eq!(s0.num_ancilla, 2);
        assert!(s0.contract_error(&pauli_z()).unwrap() < 1e-12);

        let s1 = shift_encoding(&be, 1.0).unwrap();
        assert_eq!(s1.alpha, 2.0);
        let want = ComplexMatrix::from_diag(&[0.0, -2.0]);
        assert!(s1.contract_error(&want).unwrap() < 1e-10 * 2.0);
        assert_eq!(s1.cost().u_h.total(), 1);

        let h = h_of(0.3);
        let s = shift_encoding(&encode_hermitian(&h, 1.0).unwrap(), 0.5).unwrap();
        let block = s.encoded().unwrap();
        let ev = eig_hermitian(&block).unwrap().values;
        assert!((ev[0] + 0.1).abs() < 1e-10 && (ev[1] - 0.5).abs() < 1e-10);

        let neg = shift_encoding(&encode_hermitian(&h, 1.0).unwrap(), -0.25).unwrap();
        let want = h
            .sub(&ComplexMatrix::identity(2).scale_real(-0.25))
            .unwrap();
        assert!(neg.contract_error(&want).unwrap() < 1e-10);
        assert!(neg.unitary().unwrap().is_unitary(1e-10));
    }

    #[test]
    fn qsp_circuit_matches_2x2_product_for_random_phases() {
        // Non-symmetric phases on a non-Hermitian unitary (the shifted
        // encoding) check both the query order and the phase order.
        let h = ComplexMatrix::from_real_rows(&[&[0.3, 0.2], &[0.2, -0.5]]);
        let be = shift_encoding(&encode_hermitian(&h, 0.7).unwrap(), 0.2).unwrap();
        let phases = PhaseFactorSequence::new(vec![0.3, -1.1, 0.7, 2.0, -0.4, 0.9]);
        assert!(phases.is_err() || phases.as_ref().unwrap().degree == 5);
        let phases = phases.unwrap();
        let qsp = assemble_qsp_unitary(&be, &phases).unwrap();
        let a = be.block().unwrap();
        let eig = eig_hermitian(&a).unwrap();
        let want = eig.apply_function(|x| qsp_product_2x2(&phases.phases, x).unwrap().re);
        let got = qsp.block().unwrap();
        assert!(operator_norm_diff(&got, &want).unwrap() < 1e-12);
        assert!(qsp.unitary().unwrap().is_unitary(1e-10));
        assert_eq!(qsp.encoding.cost().u_h.fwd, 3);
        assert_eq!(qsp.encoding.cost().u_h.inv, 2);
    }

    #[test]
    fn qsp_degree_one_zero_phases_reproduces_operator() {
        let be = encode_hermitian(&pauli_x(), 1.0).unwrap();
        let qsp =
            assemble_qsp_unitary(&be, &PhaseFactorSequence::new(vec![0.0, 0.0]).unwrap()).unwrap();
        assert!(operator_norm_diff(&qsp.block().unwrap(), &pauli_x()).unwrap() < 1e-10);
    }

    #[test]
    fn reflector_on_single_qubit_example() {
        let h = h_of(0.3);
        let be = encode_hermitian(&h, 1.0).unwrap();
        let r = make_reflector(&be, 0.0, 0.2, 1e-4).unwrap();
        let plus = StateVector::uniform(1);
        let minus = StateVector::from_real(&[1.0, -1.0]).normalized().unwrap();
        // R_{<0}(0.3) = -|+⟩⟨+| - |−⟩⟨−| since both eigenvalues are positive.
        let want = ComplexMatrix::outer(&plus, &plus)
            .add(&ComplexMatrix::outer(&minus, &minus))
            .unwrap()
            .scale_real(-1.0);
        let err = r.contract_error(&want).unwrap();
        assert!(err <= 1e-4, "{err}");
        assert!(r.epsilon <= 1e-4);
        assert_eq!(r.num_ancilla, 3);
        let d = sign_phases(0.2, 1e-4).unwrap().poly.degree as u64;
        assert_eq!(r.cost().u_h.total(), d);
    }

    #[test]
    fn reflector_on_diagonal_example_and_spectral_oracle() {
        let h = ComplexMatrix::from_diag(&[-0.5, 0.5]);
        let be = encode_hermitian(&h, 1.0).unwrap();
        let r = make_reflector(&be, 0.0, 0.2, 1e-4).unwrap();
        let want = ComplexMatrix::from_diag(&[1.0, -1.0]);
        assert!(r.contract_error(&want).unwrap() <= 1e-4);

        let sp = sign_phases(0.2, 1e-4).unwrap();
        let oracle = eval_on_hermitian(&sp.poly.negated(), &h).unwrap();
        assert!(
            operator_norm_diff(&r.block().unwrap(), &oracle).unwrap() <= sp.phases.residual + 1e-10
        );
    }

    #[test]
    fn projector_examples() {
        let h = h_of(0.3);
        let be = encode_hermitian(&h, 1.0).unwrap();
        let eps = 1e-4;
        // Both eigenvalues (0.4, 1) lie above 0, so P_{<0} vanishes.
        let p0 = make_projector(&be, 0.0, 0.2, eps).unwrap();
        assert!(p0.contract_error(&ComplexMatrix::zeros(2, 2)).unwrap() <= eps / 2.0);

        // μ = 0.7 splits the spectrum with gap 0.6: δ = 0.6 / (4 · 1.7).
        let r = make_reflector(&be, 0.7, 0.6 / 6.8, eps).unwrap();
        let p = projector_from_reflector(&r).unwrap();
        let pb = p.block().unwrap();
        let rb = r.block().unwrap();
        let from_r = ComplexMatrix::identity(2).add(&rb).unwrap().scale_real(0.5);
        assert!(operator_norm_diff(&pb, &from_r).unwrap() < 1e-10);

        // 0.4 < 0.7 < 1: the projector keeps |−⟩.
        let minus = StateVector::from_real(&[1.0, -1.0]).normalized().unwrap();
        let want = ComplexMatrix::outer(&minus, &minus);
        assert!(p.contract_error(&want).unwrap() <= eps / 2.0);
        let idem = operator_norm_diff(&pb.matmul(&pb).unwrap(), &pb).unwrap();
        assert!(idem <= 1.5 * eps);
        assert_eq!(p.num_ancilla, 4);

        let d = ComplexMatrix::from_diag(&[0.2, 0.8]);
        let p = make_projector(&encode_hermitian(&d, 1.0).unwrap(), 0.95, 0.1 / 1.95, eps).unwrap();
        assert!(p.contract_error(&ComplexMatrix::identity(2)).unwrap() <= eps / 2.0);
    }

    #[test]
    fn postselection_outcomes() {
        let h = ComplexMatrix::from_diag(&[-0.5, 0.5]);
        let be = encode_hermitian(&h, 1.0).unwrap();
        let p = make_projector(&be, 0.0, 0.2, 1e-3).unwrap();
        let ground = StateVector::basis(2, 0);
        let excited = StateVector::basis(2, 1);
        let r = apply_and_postselect(&p, &ground, 1).unwrap();
        assert_eq!(r.outcome, PostselectOutcome::Success0);
        assert!(r.post_state.fidelity(&ground) > 1.0 - 1e-6);
        assert_eq!(r.ledger.u_h.total(), p.cost().u_h.total());
        let r = apply_and_postselect(&p, &excited, 1).unwrap();
        assert_eq!(r.outcome, PostselectOutcome::Flip1);
        assert!(r.post_state.fidelity(&excited) > 1.0 - 1e-6);

        let mix = StateVector::from_amplitudes(vec![ONE, C64::new(0.0, 1.0)])
            .normalized()
            .unwrap();
        let d = outcome_distribution(&p, &mix, &mut QueryLedger::new()).unwrap();
        assert!((d.success0 + d.flip1 + d.garbage - 1.0).abs() < 1e-12);
        assert!((d.success0 - 0.5).abs() < 1e-3);
        // Garbage is ‖G‖²/2 with ‖G‖² = 1 - ‖R̃φ‖² <= 2ε - ε².
        assert!(d.garbage <= 1e-3 - 0.5e-6 + 1e-12);
    }

    #[test]
    fn garbage_probability_is_first_order_in_eps() {
        // Put an eigenvalue where the sign approximant dips to 1 - ε.
        let eps = 1e-3;
        let sp = sign_phases(0.2, eps).unwrap();
        let (x, s) = (0..=20_000)
            .map(|i| 0.2 + 0.8 * i as f64 / 20_000.0)
            .map(|x| (x, sp.poly.value(x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let h = ComplexMatrix::from_diag(&[-x, x]);
        let p = make_projector(&encode_hermitian(&h, 1.0).unwrap(), 0.0, 0.2, eps).unwrap();
        let phi = StateVector::basis(2, 1);
        let d = outcome_distribution(&p, &phi, &mut QueryLedger::new()).unwrap();
        let exact = (1.0 - s * s) / 2.0;
        assert!((d.garbage - exact).abs() < 1e-10);
        assert!(d.garbage <= eps - eps * eps / 2.0 + 1e-12);
        assert!(d.garbage > eps * eps / 2.0);

        // Sampled frequency against the first-order bound.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let shots = 100_000;
        let hits = (0..shots)
            .filter(|_| {
                let probs = [d.success0, d.flip1, d.garbage];
                sample_index(&probs, &mut rng) == 2
            })
            .count();
        let bound = eps - eps * eps / 2.0;
        let sigma = (bound * (1.0 - bound) / shots as f64).sqrt();
        assert!((hits as f64 / shots as f64) <= bound + 3.0 * sigma);
    }

    #[test]
    fn phase_solver_feeds_circuit_for_custom_target() {
        let t3 = crate::polyapprox::OddPolynomial::from_coefficients(vec![0.0, 1.0], 1.0, 0.0);
        let ph = solve_phase_factors(&t3, 1e-8).unwrap();
        let h = ComplexMatrix::from_real_rows(&[&[0.1, 0.3], &[0.3, 0.4]]);
        let be = encode_hermitian(&h, 0.8).unwrap();
        let q = assemble_qsp_unitary(&be, &ph).unwrap();
        let want = eval_on_hermitian(&t3, &h.scale_real(1.0 / 0.8)).unwrap();
        assert!(operator_norm_diff(&q.block().unwrap(), &want).unwrap() <= ph.residual + 1e-10);
    }

    #[test]
    fn projector_cost_without_phases() {
        let be = encode_hermitian(&h_of(0.3), 1.0).unwrap();
        let proj = make_projector(&be, -0.2, 0.1, 1e-3).unwrap();
        let d = sign_phases(0.1, 1e-3).unwrap().poly.degree;
        assert_eq!(&projector_cost(&be, -0.2, d).unwrap(), proj.cost());
    }
}
