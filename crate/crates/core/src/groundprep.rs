//! Ground-state preparation with a known energy upper bound, amplitude
//! amplification, and low-energy state preparation without a gap.
//!
//! The raw circuit is `A = PROJ (I ⊗ U_I)` acting on `|0^{m+3}⟩|0^n⟩`; its
//! good subspace is "all projector ancillas read 0", which with the
//! ancilla-first register layout is the leading block of the state vector.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blockenc::{make_projector, BlockEncoding};
use crate::circuit::{Circuit, OracleTag, QueryLedger};
use crate::error::{check_range, Error, Result};
use crate::linalg::{sample_index, ComplexMatrix, StateVector, C64};

/// Rounds (oblivious mode) or attempts (deterministic mode) before
/// amplification gives up.
pub const MAX_AMPLIFY_ROUNDS: usize = 64;
/// Growth factor of the exponential-guess schedule.
pub const SCHEDULE_GROWTH: f64 = 1.2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum AmplifyMode {
    /// `k = ⌊π/(4 arcsin a)⌋` Grover iterations with the exact raw amplitude.
    Deterministic,
    /// Exponential-guess schedule for an unknown amplitude. `floor` is a
    /// promised lower bound on the amplitude and caps the guess at `1/floor`.
    Oblivious { floor: f64 },
}

/// Raw circuit `A` with `flags` leading ancillas whose all-zero pattern
/// marks success.
#[derive(Clone, Debug)]
pub struct RawCircuit {
    pub circuit: Arc<Circuit>,
    pub flags: usize,
    inverse: Arc<Circuit>,
}

impl RawCircuit {
    pub fn new(circuit: Arc<Circuit>, flags: usize) -> Result<Self> {
        if flags == 0 || flags > circuit.num_qubits() {
            return Err(Error::DimensionMismatch(format!(
                "{flags} flag qubits on a {}-qubit circuit",
                circuit.num_qubits()
            )));
        }
        let n = circuit.num_qubits();
        let mut inv = Circuit::new(n)?;
        let all: Vec<usize> = (0..n).collect();
        inv.sub(circuit.clone(), &all, &[], true)?;
        Ok(Self {
            circuit,
            flags,
            inverse: Arc::new(inv),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.circuit.num_qubits()
    }

    /// Length of the good block.
    pub fn good_len(&self) -> usize {
        1 << (self.num_qubits() - self.flags)
    }

    /// `A|0⟩`.
    pub fn prepare(&self, ledger: &mut QueryLedger) -> Result<StateVector> {
        self.circuit
            .apply(&StateVector::zero_state(self.num_qubits()), ledger)
    }

    pub fn good_probability(&self, state: &StateVector) -> f64 {
        state.amplitudes()[..self.good_len()]
            .iter()
            .map(|z| z.norm_sqr())
            .sum()
    }

    /// One Grover iterate `Q = -A S_0 A† S_χ`.
    pub fn grover_step(&self, state: &mut StateVector, ledger: &mut QueryLedger) -> Result<()> {
        let g = self.good_len();
        for z in &mut state.amplitudes_mut()[..g] {
            *z = -*z;
        }
        self.inverse.apply_in_place(state, ledger)?;
        let a = state.amplitudes_mut();
        a[0] = -a[0];
        self.circuit.apply_in_place(state, ledger)?;
        for z in state.amplitudes_mut() {
            *z = -*z;
        }
        Ok(())
    }

    /// Measures the flags; on success returns the normalized good block.
    pub fn measure_good<R: Rng + ?Sized>(
        &self,
        state: &StateVector,
        rng: &mut R,
    ) -> Result<Option<StateVector>> {
        let p = self.good_probability(state);
        if p > 0.0 && rng.random::<f64>() < p {
            Ok(Some(state.leading_block(self.good_len()).normalized()?))
        } else {
            Ok(None)
        }
    }
}

#[derive(Clone, Debug)]
pub struct AmplifyOutcome {
    /// Normalized system state after a successful flag measurement.
    pub state: StateVector,
    /// Grover iterates applied over all rounds.
    pub iterations: usize,
    /// Prepare-iterate-measure rounds, including the successful one.
    pub rounds: usize,
    /// Success probability of the final round before measurement.
    pub final_success_prob: f64,
    pub ledger: QueryLedger,
}

/// Amplifies the good component of `A|0⟩` and measures it out.
///
/// With [`AmplifyMode::Deterministic`] the raw amplitude `a` must be given;
/// each round runs `⌊π/(4 arcsin a)⌋` iterates. The oblivious mode draws the
/// iterate count uniformly below a guess `m` that grows by
/// [`SCHEDULE_GROWTH`] after each failure.
pub fn amplitude_amplify<R: Rng + ?Sized>(
    raw: &RawCircuit,
    mode: AmplifyMode,
    known_amplitude: Option<f64>,
    rng: &mut R,
) -> Result<AmplifyOutcome> {
    let mut ledger = QueryLedger::new();
    let mut iterations = 0usize;
    let mut guess = 1.0f64;
    let k_fixed = match mode {
        AmplifyMode::Deterministic => {
            let a = known_amplitude.ok_or(Error::OutOfRange {
                name: "known_amplitude",
                value: f64::NAN,
                expected: "required in deterministic mode",
            })?;
            check_range(
                "known_amplitude",
                a,
                (0.0..=1.0).contains(&a),
                "0 <= a <= 1",
            )?;
            Some(grover_count(a))
        }
        AmplifyMode::Oblivious { floor } => {
            check_range(
                "floor",
                floor,
                floor > 0.0 && floor <= 1.0,
                "0 < floor <= 1",
            )?;
            None
        }
    };
    for round in 1..=MAX_AMPLIFY_ROUNDS {
        let k = match (k_fixed, mode) {
            (Some(k), _) => k,
            (None, AmplifyMode::Oblivious { .. }) => rng.random_range(0..guess.ceil() as usize),
            (None, AmplifyMode::Deterministic) => unreachable!(),
        };
        let mut s = raw.prepare(&mut ledger)?;
        for _ in 0..k {
            raw.grover_step(&mut s, &mut ledger)?;
        }
        iterations += k;
        let p = raw.good_probability(&s);
        if let Some(state) = raw.measure_good(&s, rng)? {
            return Ok(AmplifyOutcome {
                state,
                iterations,
                rounds: round,
                final_success_prob: p,
                ledger,
            });
        }
        if let AmplifyMode::Oblivious { floor } = mode {
            guess = (guess * SCHEDULE_GROWTH).min(1.0 / floor);
        }
    }
    Err(Error::AmplificationFailed {
        attempts: MAX_AMPLIFY_ROUNDS,
    })
}

/// `⌊π/(4 arcsin a)⌋`, zero for `a = 0`.
pub fn grover_count(a: f64) -> usize {
    if a <= 0.0 {
        0
    } else {
        (std::f64::consts::PI / (4.0 * a.min(1.0).asin())).floor() as usize
    }
}

/// Inputs of a preparation run.
#[derive(Clone, Debug)]
pub struct PrepProblem {
    pub be_h: BlockEncoding,
    /// `U_I` with `U_I|0^n⟩ = |φ_0⟩`.
    pub u_i: ComplexMatrix,
    /// Overlap lower bound `γ`.
    pub gamma: f64,
    /// Gap lower bound `Δ`.
    pub delta_gap: Option<f64>,
    /// Energy upper bound `μ`.
    pub mu: Option<f64>,
    /// Target fidelity is `1 - ε`.
    pub eps: f64,
    /// Exact ground state, used only to report the achieved fidelity.
    pub ground_truth: Option<StateVector>,
    /// Exact Hamiltonian, used only to report the output energy.
    pub hamiltonian: Option<ComplexMatrix>,
}

/// Parameters of the projector that was built.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProjectorParams {
    pub mu: f64,
    /// Normalized half-gap `δ` passed to the sign polynomial.
    pub delta: f64,
    /// Sign-polynomial accuracy `ε` of `PROJ(μ, δ, ε)`.
    pub eps: f64,
    pub degree: usize,
    /// `α + |μ|`.
    pub alpha_shifted: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PrepResult {
    pub state: StateVector,
    /// `|⟨ψ_0|ψ⟩|` against the exact ground state, when known.
    pub fidelity: Option<f64>,
    /// `⟨ψ|H|ψ⟩`, when the Hamiltonian is known.
    pub energy: Option<f64>,
    /// `‖P̃ |φ_0⟩‖²`, the success probability without amplification.
    pub success_prob: f64,
    /// Success probability of the final amplified round.
    pub amplified_success_prob: f64,
    pub iterations: usize,
    pub rounds: usize,
    pub projector: ProjectorParams,
    pub ledger: QueryLedger,
}

/// `A = PROJ (I ⊗ U_I)` for a projector encoding.
pub fn raw_circuit(proj: &BlockEncoding, u_i: &ComplexMatrix) -> Result<RawCircuit> {
    if u_i.rows() != proj.system_dim() || !u_i.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "U_I is {}x{} for a {}-qubit system",
            u_i.rows(),
            u_i.cols(),
            proj.num_system
        )));
    }
    let total = proj.num_qubits();
    let sys: Vec<usize> = (proj.num_ancilla..total).collect();
    let all: Vec<usize> = (0..total).collect();
    let mut c = Circuit::new(total)?;
    c.oracle(OracleTag::UI, Arc::new(u_i.clone()), &sys, &[], false)?;
    c.sub(proj.circuit().clone(), &all, &[], false)?;
    RawCircuit::new(Arc::new(c), proj.num_ancilla)
}

fn run_projected(
    p: &PrepProblem,
    params: ProjectorParams,
    mode: AmplifyMode,
    rng_seed: u64,
) -> Result<PrepResult> {
    let proj = make_projector(&p.be_h, params.mu, params.delta, params.eps)?;
    let raw = raw_circuit(&proj, &p.u_i)?;
    let mut probe = QueryLedger::new();
    let success_prob = raw.good_probability(&raw.prepare(&mut probe)?);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let out = amplitude_amplify(&raw, mode, Some(success_prob.sqrt()), &mut rng)?;
    let fidelity = p.ground_truth.as_ref().map(|g| g.fidelity(&out.state));
    let energy = match &p.hamiltonian {
        Some(h) => Some(out.state.expectation(h)?),
        None => None,
    };
    Ok(PrepResult {
        state: out.state,
        fidelity,
        energy,
        success_prob,
        amplified_success_prob: out.final_success_prob,
        iterations: out.iterations,
        rounds: out.rounds,
        projector: params,
        ledger: out.ledger,
    })
}

fn degree_of(delta: f64, eps: f64) -> Result<usize> {
    Ok(crate::qsp::sign_phases(delta, eps)?.poly.degree)
}

/// Projector parameters for the known-bound algorithm:
/// `PROJ(μ, Δ/(4α̃), γε)` with `α̃ = α + |μ|`.
pub fn with_bound_params(p: &PrepProblem) -> Result<ProjectorParams> {
    check_range(
        "gamma",
        p.gamma,
        p.gamma > 0.0 && p.gamma <= 1.0,
        "0 < gamma <= 1",
    )?;
    check_range("eps", p.eps, p.eps > 0.0 && p.eps < 1.0, "0 < eps < 1")?;
    let mu = p.mu.ok_or(Error::OutOfRange {
        name: "mu",
        value: f64::NAN,
        expected: "an energy upper bound is required",
    })?;
    let gap = p.delta_gap.ok_or(Error::OutOfRange {
        name: "delta_gap",
        value: f64::NAN,
        expected: "a gap lower bound is required",
    })?;
    check_range("mu", mu, true, "finite")?;
    let alpha_shifted = p.be_h.alpha + mu.abs();
    let delta = gap / (4.0 * alpha_shifted);
    check_range(
        "delta_gap",
        gap,
        delta > 0.0 && delta < 1.0,
        "0 < Δ < 4(α + |μ|)",
    )?;
    let eps = p.gamma * p.eps;
    Ok(ProjectorParams {
        mu,
        delta,
        eps,
        degree: degree_of(delta, eps)?,
        alpha_shifted,
    })
}

/// Projects `|φ_0⟩` with `PROJ(μ, Δ/(4α̃), γε)` and amplifies. Under the
/// overlap and gap promises the output has fidelity at least `1 - ε`.
pub fn prepare_with_bound(p: &PrepProblem, mode: AmplifyMode, rng_seed: u64) -> Result<PrepResult> {
    let params = with_bound_params(p)?;
    run_projected(p, params, mode, rng_seed)
}

/// `ε' = γ² δ / (8α)`.
pub fn low_energy_eps(gamma: f64, delta_resolution: f64, alpha: f64) -> f64 {
    gamma * gamma * delta_resolution / (8.0 * alpha)
}

/// Projector parameters for low-energy preparation:
/// `PROJ(μ - 2δ, δ/α̃, ε')`.
pub fn low_energy_params(
    p: &PrepProblem,
    mu: f64,
    delta_resolution: f64,
    gamma: f64,
    eps_prime: Option<f64>,
) -> Result<ProjectorParams> {
    check_range(
        "gamma",
        gamma,
        gamma > 0.0 && gamma <= 1.0,
        "0 < gamma <= 1",
    )?;
    check_range("mu", mu, true, "finite")?;
    let shift = mu - 2.0 * delta_resolution;
    let alpha_shifted = p.be_h.alpha + shift.abs();
    let delta = delta_resolution / alpha_shifted;
    check_range(
        "delta_resolution",
        delta_resolution,
        delta > 0.0 && delta < 1.0,
        "0 < δ < α + |μ - 2δ|",
    )?;
    let eps = eps_prime.unwrap_or_else(|| low_energy_eps(gamma, delta_resolution, p.be_h.alpha));
    check_range("eps_prime", eps, eps > 0.0 && eps < 1.0, "0 < eps' < 1")?;
    Ok(ProjectorParams {
        mu: shift,
        delta,
        eps,
        degree: degree_of(delta, eps)?,
        alpha_shifted,
    })
}

/// Prepares a state with `⟨ψ|H|ψ⟩ <= μ` given
/// `Σ_{λ_k <= μ - 3δ} |⟨ψ_k|φ_0⟩|² >= γ²`. No gap is assumed.
pub fn prepare_low_energy(
    p: &PrepProblem,
    mu: f64,
    delta_resolution: f64,
    gamma: f64,
    eps_prime: Option<f64>,
    mode: AmplifyMode,
    rng_seed: u64,
) -> Result<PrepResult> {
    let params = low_energy_params(p, mu, delta_resolution, gamma, eps_prime)?;
    run_projected(p, params, mode, rng_seed)
}

/// Upper bound on the output Rayleigh quotient from the low-energy chain,
/// `(μ - δ + (αε' + αε'²/4)/g) / (1 - ε'/g)` with `g = γ²(1 - ε'/2)²`.
pub fn low_energy_bound(
    mu: f64,
    delta_resolution: f64,
    gamma: f64,
    alpha: f64,
    eps_prime: f64,
) -> f64 {
    let g = gamma * gamma * (1.0 - eps_prime / 2.0).powi(2);
    (mu - delta_resolution + (alpha * eps_prime + alpha * eps_prime * eps_prime / 4.0) / g)
        / (1.0 - eps_prime / g)
}

/// Fraction of `shots` flag measurements on `A|0⟩` that read all zeros.
pub fn raw_success_frequency(raw: &RawCircuit, shots: usize, rng_seed: u64) -> Result<f64> {
    let mut sink = QueryLedger::new();
    let s = raw.prepare(&mut sink)?;
    let p = raw.good_probability(&s);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let probs = [p, (1.0 - p).max(0.0)];
    let hits = (0..shots)
        .filter(|_| sample_index(&probs, &mut rng) == 0)
        .count();
    Ok(hits as f64 / shots as f64)
}

/// Single-qubit raw circuit `R_y` with success amplitude `a` on `|0⟩`;
/// the flag is qubit 0 and the "system" is empty, padded with one qubit.
pub fn toy_raw_circuit(a: f64) -> Result<RawCircuit> {
    check_range("a", a, (0.0..=1.0).contains(&a), "0 <= a <= 1")?;
    let b = (1.0 - a * a).sqrt();
    let mut c = Circuit::new(2)?;
    c.oracle(
        OracleTag::Other,
        Arc::new(ComplexMatrix::from_rows(&[
            vec![C64::new(a, 0.0), C64::new(-b, 0.0)],
            vec![C64::new(b, 0.0), C64::new(a, 0.0)],
        ])),
        &[0],
        &[],
        false,
    )?;
    RawCircuit::new(Arc::new(c), 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamlib::{make_random_gapped, make_single_qubit};

    #[test]
    fn deterministic_grover_algebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let raw = toy_raw_circuit(1.0).unwrap();
        let out = amplitude_amplify(&raw, AmplifyMode::Deterministic, Some(1.0), &mut rng).unwrap();
        assert_eq!(out.iterations, 0);
        let raw = toy_raw_circuit(0.5).unwrap();
        let out = amplitude_amplify(&raw, AmplifyMode::Deterministic, Some(0.5), &mut rng).unwrap();
        assert_eq!(out.iterations, 1);
        assert!((out.final_success_prob - 1.0).abs() < 1e-12);
        // Each iterate costs A and A†, plus the initial A.
        assert_eq!(out.ledger.other.fwd, 2);
        assert_eq!(out.ledger.other.inv, 1);
    }

    #[test]
    fn deterministic_success_bound() {
        for a in [0.05, 0.1, 0.3, 0.7, 0.95] {
            let raw = toy_raw_circuit(a).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let out =
                amplitude_amplify(&raw, AmplifyMode::Deterministic, Some(a), &mut rng).unwrap();
            let k = grover_count(a) as f64;
            let th = f64::asin(a);
            let expected = ((2.0 * k + 1.0) * th).sin().powi(2);
            assert!((out.final_success_prob - expected).abs() < 1e-12);
            assert!(out.final_success_prob >= (a * a).max(expected) - 1e-12);
        }
    }

    #[test]
    fn zero_amplitude_gives_up() {
        let raw = toy_raw_circuit(0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let err = amplitude_amplify(&raw, AmplifyMode::Oblivious { floor: 0.1 }, None, &mut rng)
            .unwrap_err();
        assert!(matches!(err, Error::AmplificationFailed { .. }));
        let err =
            amplitude_amplify(&raw, AmplifyMode::Deterministic, Some(0.0), &mut rng).unwrap_err();
        assert!(matches!(err, Error::AmplificationFailed { .. }));
    }

    #[test]
    fn single_qubit_prepares_minus() {
        // H(0.3) has eigenvalues 0.4 and 1, so μ = 0.7 with Δ = 0.5 satisfies
        // both promises.
        let inst = make_single_qubit(0.3).unwrap();
        let p = PrepProblem {
            be_h: inst.block_encoding().unwrap(),
            u_i: inst.state_prep(),
            gamma: inst.gamma_true,
            delta_gap: Some(0.5),
            mu: Some(0.7),
            eps: 1e-3,
            ground_truth: Some(inst.ground_state.clone()),
            hamiltonian: Some(inst.h.clone()),
        };
        let r = prepare_with_bound(&p, AmplifyMode::Deterministic, 4).unwrap();
        assert!(r.fidelity.unwrap() >= 1.0 - 1e-3);
        let g = p.gamma;
        assert!(r.success_prob >= g * g * (1.0f64 - 1e-3 / 2.0).powi(2));
        assert_eq!(r.ledger.u_i.total(), (2 * r.iterations + r.rounds) as u64);
    }

    #[test]
    fn exact_initial_state() {
        let inst = make_random_gapped(2, 1.0, 0.1, 9).unwrap();
        let p = PrepProblem {
            be_h: inst.block_encoding().unwrap(),
            u_i: inst.state_prep(),
            gamma: 1.0,
            delta_gap: Some(0.1),
            mu: Some(0.0),
            eps: 1e-2,
            ground_truth: Some(inst.ground_state.clone()),
            hamiltonian: None,
        };
        let r = prepare_with_bound(&p, AmplifyMode::Deterministic, 0).unwrap();
        assert!(r.fidelity.unwrap() >= 1.0 - 1e-2);
        assert!(r.success_prob >= (1.0f64 - 1e-2 / 2.0).powi(2));
    }

    #[test]
    fn missing_bound_is_precondition_error() {
        let inst = make_single_qubit(0.3).unwrap();
        let p = PrepProblem {
            be_h: inst.block_encoding().unwrap(),
            u_i: inst.state_prep(),
            gamma: 0.5,
            delta_gap: Some(0.5),
            mu: None,
            eps: 1e-3,
            ground_truth: None,
            hamiltonian: None,
        };
        assert!(prepare_with_bound(&p, AmplifyMode::Deterministic, 0)
            .unwrap_err()
            .is_precondition());
    }

    #[test]
    fn low_energy_bound_closes() {
        // With ε' = γ²δ/(8α) the chain bound stays below μ whenever |μ| <= α.
        for &(mu, d, g, a) in &[
            (0.1, 0.02, 0.2, 0.5),
            (-0.3, 0.05, 0.5, 1.0),
            (0.45, 0.01, 0.1, 0.5),
        ] {
            let e = low_energy_eps(g, d, a);
            assert!(low_energy_bound(mu, d, g, a, e) <= mu);
        }
    }
}
