//! Binary amplitude estimation, the grid binary search that brackets the
//! ground energy, and ground-state preparation without a prior bound.
//!
//! A probe at grid point `x_k` projects `|φ_0⟩` with `PROJ(x_k, h/(2α̃), γ/2)`.
//! Its success amplitude is at least `3γ/4` when `λ_0 <= x_{k-1}` and at most
//! `γ/4` when `λ_0 >= x_{k+1}`, so a binary amplitude estimate with those
//! thresholds reads off which side of `x_k` the ground energy is on.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blockenc::{make_projector, projector_cost, BlockEncoding};
use crate::circuit::{Circuit, OracleTag, QueryLedger};
use crate::error::{check_range, Error, Result};
use crate::groundprep::{
    prepare_with_bound, raw_circuit, AmplifyMode, PrepProblem, PrepResult, RawCircuit,
};
use crate::linalg::{
    eig_hermitian, hadamard, outcome_probabilities, sample_index, ComplexMatrix, C64,
};
use crate::polyapprox::cached_sign_poly;

/// Chernoff constant in the vote count `r = ⌈18 ln(1/δ)⌉`.
pub const VOTE_CONSTANT: f64 = 18.0;
/// Largest flagged circuit the QPE mode will simulate, before adding the
/// counting register.
pub const CIRCUIT_QPE_MAX_QUBITS: usize = 8;

/// How a binary amplitude estimate is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AeMode {
    /// Exact amplitude against the midpoint threshold. Noise free.
    OracleThreshold,
    /// Samples the exact phase-estimation outcome distribution.
    StatisticalModel,
    /// Simulates phase estimation on the Grover iterate.
    CircuitQpe,
}

impl AeMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AeMode::OracleThreshold => "oracle_threshold",
            AeMode::StatisticalModel => "statistical_model",
            AeMode::CircuitQpe => "circuit_qpe",
        }
    }
}

impl fmt::Display for AeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "oracle_threshold" | "oracle" => Ok(AeMode::OracleThreshold),
            "statistical_model" | "statistical" => Ok(AeMode::StatisticalModel),
            "circuit_qpe" | "circuit" => Ok(AeMode::CircuitQpe),
            other => Err(Error::Parse(format!("unknown AE mode `{other}`"))),
        }
    }
}

/// `⌈18 ln(1/δ)⌉`, at least 1.
pub fn majority_votes(delta: f64) -> usize {
    ((VOTE_CONSTANT * (1.0 / delta).ln()).ceil() as usize).max(1)
}

/// `⌈log_2 g⌉` for `g >= 1`.
pub fn ceil_log2(g: usize) -> usize {
    if g <= 1 {
        0
    } else {
        (usize::BITS - (g - 1).leading_zeros()) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AeConfig {
    pub mode: AeMode,
    /// Failure probability of one binary estimate.
    pub delta: f64,
    /// Independent estimates combined by majority vote.
    pub votes: usize,
}

impl AeConfig {
    pub fn new(mode: AeMode, delta: f64) -> Result<Self> {
        check_range("delta", delta, delta > 0.0 && delta < 1.0, "0 < delta < 1")?;
        Ok(Self {
            mode,
            delta,
            votes: majority_votes(delta),
        })
    }

    /// One estimate, no vote. Correct with probability at least `8/π²`.
    pub fn single(mode: AeMode) -> Self {
        Self {
            mode,
            delta: 1.0 - 8.0 / (PI * PI),
            votes: 1,
        }
    }

    /// Per-call budget for a search over `g` intervals:
    /// `min(ϑ/(2 log_2(4α/h)), ϑ/(2⌈log_2 g⌉))`.
    pub fn for_search(mode: AeMode, vartheta: f64, grid: &EnergyGrid) -> Result<Self> {
        check_range(
            "vartheta",
            vartheta,
            vartheta > 0.0 && vartheta < 1.0,
            "0 < vartheta < 1",
        )?;
        let by_ratio = vartheta / (2.0 * (4.0 * grid.alpha / grid.h).log2());
        let by_calls = vartheta / (2.0 * ceil_log2(grid.intervals).max(1) as f64);
        Self::new(mode, by_ratio.min(by_calls))
    }

    /// Grover evaluations `M` per estimate for the gap `γ_1 - γ_0`: the
    /// smallest `M` with `π/M <= (γ_1 - γ_0)/2`, rounded up to a power of
    /// two for the circuit mode.
    pub fn evaluations(&self, gamma0: f64, gamma1: f64) -> Result<usize> {
        check_range(
            "gamma1 - gamma0",
            gamma1 - gamma0,
            gamma0 >= 0.0 && gamma1 > gamma0 && gamma1 <= 1.0,
            "0 <= gamma0 < gamma1 <= 1",
        )?;
        let m = ((2.0 * PI / (gamma1 - gamma0)) - 1e-9).ceil().max(1.0) as usize;
        Ok(match self.mode {
            AeMode::CircuitQpe => m.next_power_of_two(),
            _ => m,
        })
    }
}

/// Query cost of one `M`-evaluation estimate: `A` once, then `M - 1`
/// controlled Grover iterates, each one `A` and one `A†`.
pub fn estimate_cost(cost_a: &QueryLedger, m: usize) -> QueryLedger {
    let mut l = cost_a.clone();
    let fwd = cost_a.all_controlled();
    let inv = cost_a.inverted().all_controlled();
    l.add_scaled(&fwd, (m - 1) as u64);
    l.add_scaled(&inv, (m - 1) as u64);
    l
}

/// `F(x) = sin²(πx) / (M² sin²(πx/M))`, the Fejér-type kernel of `M`-point
/// phase estimation, with its removable singularities filled in.
fn fejer(x: f64, m: usize) -> f64 {
    let mf = m as f64;
    let den = (PI * x / mf).sin();
    if den.abs() < 1e-12 {
        return 1.0;
    }
    let num = (PI * x).sin();
    (num * num) / (mf * mf * den * den)
}

/// Outcome distribution of `M`-point phase estimation on `A|0⟩` with
/// success amplitude `a`: `½[F(y - Mθ/π) + F(y + Mθ/π)]`, `θ = arcsin a`.
pub fn qpe_distribution(amplitude: f64, m: usize) -> Vec<f64> {
    let theta = amplitude.clamp(0.0, 1.0).asin();
    let shift = m as f64 * theta / PI;
    let mut p: Vec<f64> = (0..m)
        .map(|y| 0.5 * (fejer(y as f64 - shift, m) + fejer(y as f64 + shift, m)))
        .collect();
    let total: f64 = p.iter().sum();
    for v in &mut p {
        *v /= total;
    }
    p
}

/// `|sin(πy/M)|`, the amplitude read from outcome `y`.
pub fn amplitude_from_outcome(y: usize, m: usize) -> f64 {
    (PI * y as f64 / m as f64).sin().abs()
}

/// `Q = -A S_0 A† S_χ` as a circuit on the flagged register.
pub fn grover_iterate_circuit(raw: &RawCircuit) -> Result<Circuit> {
    let n = raw.num_qubits();
    let all: Vec<usize> = (0..n).collect();
    let flip_zero = ComplexMatrix::from_diag(&[-1.0, 1.0]);
    let mut q = Circuit::new(n)?;
    let flag_ctrl: Vec<(usize, bool)> = (1..raw.flags).map(|i| (i, false)).collect();
    q.gate(flip_zero.clone(), &[0], &flag_ctrl)?;
    q.sub(raw.circuit.clone(), &all, &[], true)?;
    let zero_ctrl: Vec<(usize, bool)> = (1..n).map(|i| (i, false)).collect();
    q.gate(flip_zero, &[0], &zero_ctrl)?;
    q.sub(raw.circuit.clone(), &all, &[], false)?;
    q.gate(ComplexMatrix::identity(2).scale_real(-1.0), &[0], &[])?;
    Ok(q)
}

/// Inverse quantum Fourier transform on `t` qubits, as a dense matrix.
fn inverse_qft(t: usize) -> ComplexMatrix {
    let m = 1usize << t;
    let norm = 1.0 / (m as f64).sqrt();
    let mut f = ComplexMatrix::zeros(m, m);
    for z in 0..m {
        for y in 0..m {
            let ang = -2.0 * PI * ((y * z) % m) as f64 / m as f64;
            f[(z, y)] = C64::from_polar(norm, ang);
        }
    }
    f
}

/// Phase estimation of the Grover iterate with a `t`-qubit counting register
/// (qubits `0..t`) in front of the flagged register.
pub fn qpe_circuit(raw: &RawCircuit, t: usize) -> Result<Circuit> {
    if raw.num_qubits() > CIRCUIT_QPE_MAX_QUBITS {
        return Err(Error::QubitBudget {
            requested: raw.num_qubits(),
            cap: CIRCUIT_QPE_MAX_QUBITS,
        });
    }
    if t == 0 {
        return Err(Error::DimensionMismatch(
            "phase estimation needs a counting qubit".into(),
        ));
    }
    let n = raw.num_qubits();
    let total = t + n;
    let inner: Vec<usize> = (t..total).collect();
    let q = Arc::new(grover_iterate_circuit(raw)?);
    let mut c = Circuit::new(total)?;
    c.sub(raw.circuit.clone(), &inner, &[], false)?;
    for j in 0..t {
        c.gate(hadamard(), &[j], &[])?;
    }
    for j in 0..t {
        for _ in 0..(1usize << (t - 1 - j)) {
            c.sub(q.clone(), &inner, &[(j, true)], false)?;
        }
    }
    let counting: Vec<usize> = (0..t).collect();
    c.gate(inverse_qft(t), &counting, &[])?;
    Ok(c)
}

/// Success-flagged circuit as seen by amplitude estimation: the exact
/// success amplitude, the cost of one application, and (when available)
/// the circuit itself for the QPE mode.
#[derive(Debug)]
pub struct FlaggedAmplitude {
    pub amplitude: f64,
    pub cost: QueryLedger,
    raw: Option<RawCircuit>,
    qpe: Mutex<HashMap<usize, Arc<Vec<f64>>>>,
}

impl FlaggedAmplitude {
    pub fn from_circuit(raw: RawCircuit) -> Result<Self> {
        let mut sink = QueryLedger::new();
        let p = raw.good_probability(&raw.prepare(&mut sink)?);
        Ok(Self {
            amplitude: p.clamp(0.0, 1.0).sqrt(),
            cost: raw.circuit.cost(),
            raw: Some(raw),
            qpe: Mutex::new(HashMap::new()),
        })
    }

    /// An amplitude known without a circuit; the QPE mode is unavailable.
    pub fn from_value(amplitude: f64, cost: QueryLedger) -> Result<Self> {
        check_range(
            "amplitude",
            amplitude,
            (0.0..=1.0).contains(&amplitude),
            "0 <= a <= 1",
        )?;
        Ok(Self {
            amplitude,
            cost,
            raw: None,
            qpe: Mutex::new(HashMap::new()),
        })
    }

    pub fn raw(&self) -> Option<&RawCircuit> {
        self.raw.as_ref()
    }

    /// Outcome distribution of an `M`-point estimate in the given mode.
    pub fn outcome_distribution(&self, mode: AeMode, m: usize) -> Result<Arc<Vec<f64>>> {
        match mode {
            AeMode::OracleThreshold | AeMode::StatisticalModel => {
                Ok(Arc::new(qpe_distribution(self.amplitude, m)))
            }
            AeMode::CircuitQpe => {
                if let Some(hit) = self.qpe.lock().unwrap().get(&m) {
                    return Ok(hit.clone());
                }
                let raw = self.raw.as_ref().ok_or_else(|| {
                    Error::DimensionMismatch(
                        "circuit QPE needs the flagged circuit, not just its amplitude".into(),
                    )
                })?;
                if !m.is_power_of_two() {
                    return Err(Error::OutOfRange {
                        name: "evaluations",
                        value: m as f64,
                        expected: "a power of two in circuit mode",
                    });
                }
                let t = m.trailing_zeros() as usize;
                let c = qpe_circuit(raw, t)?;
                let mut sink = QueryLedger::new();
                let out = c.apply(
                    &crate::linalg::StateVector::zero_state(c.num_qubits()),
                    &mut sink,
                )?;
                let counting: Vec<usize> = (0..t).collect();
                let d = Arc::new(outcome_probabilities(&out, &counting)?);
                self.qpe.lock().unwrap().insert(m, d.clone());
                Ok(d)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AeOutcome {
    pub bit: bool,
    pub votes_for_one: usize,
    pub votes: usize,
    /// Grover evaluations `M` per estimate.
    pub evaluations: usize,
    /// The amplitude violated the promise (strictly between the thresholds).
    pub flagged: bool,
    pub ledger: QueryLedger,
}

/// Decides `a < γ_0` (bit 0) versus `a > γ_1` (bit 1).
///
/// Each estimate reads `|sin(πy/M)|` from an `M`-point phase estimate and
/// compares it with `(γ_0 + γ_1)/2`; the bit is the strict majority of
/// `cfg.votes` estimates, ties going to 0. Outside the promise the result is
/// whichever side the estimates fall on, and the call is flagged.
pub fn binary_amplitude_estimate<R: Rng + ?Sized>(
    target: &FlaggedAmplitude,
    gamma0: f64,
    gamma1: f64,
    cfg: &AeConfig,
    rng: &mut R,
) -> Result<AeOutcome> {
    let m = cfg.evaluations(gamma0, gamma1)?;
    let mid = 0.5 * (gamma0 + gamma1);
    let a = target.amplitude;
    let votes_for_one = match cfg.mode {
        AeMode::OracleThreshold => {
            if a > mid {
                cfg.votes
            } else {
                0
            }
        }
        AeMode::StatisticalModel | AeMode::CircuitQpe => {
            let dist = target.outcome_distribution(cfg.mode, m)?;
            (0..cfg.votes)
                .filter(|_| amplitude_from_outcome(sample_index(&dist, rng), m) > mid)
                .count()
        }
    };
    let mut ledger = QueryLedger::new();
    ledger.add_scaled(&estimate_cost(&target.cost, m), cfg.votes as u64);
    Ok(AeOutcome {
        bit: 2 * votes_for_one > cfg.votes,
        votes_for_one,
        votes: cfg.votes,
        evaluations: m,
        flagged: a > gamma0 && a < gamma1,
        ledger,
    })
}

/// Uniform grid `x_k = -α - offset + k h`, `k = 0..=G`, covering `[-α, α]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyGrid {
    pub alpha: f64,
    pub h: f64,
    /// Shift of the origin below `-α`, in `[0, h)`.
    pub offset: f64,
    /// Number of intervals `G`.
    pub intervals: usize,
}

impl EnergyGrid {
    pub fn new(alpha: f64, h: f64, offset: f64) -> Result<Self> {
        check_range("alpha", alpha, alpha > 0.0, "alpha > 0")?;
        check_range("h", h, h > 0.0 && h <= 2.0 * alpha, "0 < h <= 2 alpha")?;
        check_range(
            "offset",
            offset,
            offset >= 0.0 && offset < h,
            "0 <= offset < h",
        )?;
        let intervals = ((2.0 * alpha + offset) / h - 1e-9).ceil().max(1.0) as usize;
        Ok(Self {
            alpha,
            h,
            offset,
            intervals,
        })
    }

    pub fn point(&self, k: usize) -> f64 {
        -self.alpha - self.offset + k as f64 * self.h
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.intervals).map(|k| self.point(k)).collect()
    }
}

/// One iteration of the bracket search, with the bracket after the update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStep {
    pub k: usize,
    pub b_k: bool,
    pub b_k1: bool,
    pub lower: usize,
    pub upper: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub lower: usize,
    pub upper: usize,
    pub iterations: usize,
    pub trace: Vec<SearchStep>,
}

/// The bracket search over `g` intervals with a bit oracle `probe(k)`.
///
/// Starting from `(L, U) = (0, g)`, while `U - L > 3` it probes
/// `k = ⌊(L+U)/2⌋` and `k + 1` and updates:
/// `(1,1)` sets `U = k+1`, `(0,0)` sets `L = k`, `(0,1)` returns
/// `(k-1, k+2)` and `(1,0)` returns `(k, k+1)`.
pub fn bracket_search(
    g: usize,
    mut probe: impl FnMut(usize) -> Result<bool>,
) -> Result<SearchOutcome> {
    let guard = ceil_log2(g) + 2;
    let (mut lower, mut upper) = (0usize, g);
    let mut trace = Vec::new();
    while upper - lower > 3 {
        if trace.len() >= guard {
            return Err(Error::NoConvergence {
                what: "bracket search",
                residual: (upper - lower) as f64,
            });
        }
        let k = (lower + upper) / 2;
        let b_k = probe(k)?;
        let b_k1 = probe(k + 1)?;
        let done = match (b_k, b_k1) {
            (true, true) => {
                upper = k + 1;
                false
            }
            (false, false) => {
                lower = k;
                false
            }
            (false, true) => {
                lower = k - 1;
                upper = k + 2;
                true
            }
            (true, false) => {
                lower = k;
                upper = k + 1;
                true
            }
        };
        trace.push(SearchStep {
            k,
            b_k,
            b_k1,
            lower,
            upper,
        });
        if done {
            break;
        }
    }
    Ok(SearchOutcome {
        lower,
        upper,
        iterations: trace.len(),
        trace,
    })
}

/// How probe amplitudes are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeBackend {
    /// Build `PROJ(x_k, ·, ·)(I ⊗ U_I)` and simulate it.
    Circuit,
    /// Evaluate the sign polynomial on the exact spectrum of the encoded
    /// matrix. Same amplitude up to the phase residual, far cheaper.
    Spectral,
}

/// Projector used by the probe at one grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeProjector {
    pub mu: f64,
    pub delta: f64,
    pub eps: f64,
    pub alpha_shifted: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub k: usize,
    pub bit: bool,
    pub amplitude: f64,
    pub flagged: bool,
}

/// Search result: grid indices `L < U` with `x_L < λ_0 < x_U` at
/// confidence `1 - ϑ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyBracket {
    pub lower: usize,
    pub upper: usize,
    pub x_lower: f64,
    pub x_upper: f64,
    pub h: f64,
    pub vartheta: f64,
    pub confidence: f64,
    pub iterations: usize,
    pub ae_calls: usize,
    pub flagged_calls: usize,
    pub ae: AeConfig,
    pub evaluations: usize,
    pub trace: Vec<SearchStep>,
    pub probes: Vec<ProbeRecord>,
    pub ledger: QueryLedger,
}

impl EnergyBracket {
    pub fn width(&self) -> f64 {
        self.x_upper - self.x_lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.x_lower < x && x < self.x_upper
    }

    /// Ground-energy estimate, accurate to half the bracket width.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.x_lower + self.x_upper)
    }
}

/// Spectral data of the encoded matrix seen from `|φ_0⟩`.
#[derive(Clone, Debug)]
struct Spectrum {
    values: Vec<f64>,
    weights: Vec<f64>,
}

/// Settings of a bracket search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Overlap lower bound `γ`.
    pub gamma: f64,
    /// Grid spacing.
    pub h: f64,
    /// Overall failure budget.
    pub vartheta: f64,
    /// Grid origin shift below `-α`.
    pub offset: f64,
    pub mode: AeMode,
    pub backend: ProbeBackend,
}

/// A configured bracket search. Probe amplitudes depend only on the grid
/// point, so they are computed once and shared by all seeded runs.
pub struct EnergySearch {
    be_h: BlockEncoding,
    u_i: ComplexMatrix,
    pub grid: EnergyGrid,
    pub params: SearchParams,
    pub ae: AeConfig,
    spectrum: Option<Spectrum>,
    cache: Mutex<HashMap<usize, Arc<FlaggedAmplitude>>>,
}

impl EnergySearch {
    pub fn new(be_h: &BlockEncoding, u_i: &ComplexMatrix, params: SearchParams) -> Result<Self> {
        let g = params.gamma;
        check_range("gamma", g, g > 0.0 && g <= 1.0, "0 < gamma <= 1")?;
        if u_i.rows() != be_h.system_dim() || !u_i.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "U_I is {}x{} for a {}-qubit system",
                u_i.rows(),
                u_i.cols(),
                be_h.num_system
            )));
        }
        let grid = EnergyGrid::new(be_h.alpha, params.h, params.offset)?;
        let ae = AeConfig::for_search(params.mode, params.vartheta, &grid)?;
        if params.mode == AeMode::CircuitQpe && params.backend == ProbeBackend::Spectral {
            return Err(Error::OutOfRange {
                name: "backend",
                value: f64::NAN,
                expected: "circuit QPE needs the circuit probe backend",
            });
        }
        let spectrum = match params.backend {
            ProbeBackend::Spectral => {
                let eig = eig_hermitian(&be_h.encoded()?)?;
                let phi = u_i.column(0);
                let weights = (0..eig.values.len())
                    .map(|j| eig.vector(j).inner(&phi).norm_sqr())
                    .collect();
                Some(Spectrum {
                    values: eig.values,
                    weights,
                })
            }
            ProbeBackend::Circuit => None,
        };
        Ok(Self {
            be_h: be_h.clone(),
            u_i: u_i.clone(),
            grid,
            params,
            ae,
            spectrum,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// `(γ_0, γ_1) = (γ/4, 3γ/4)`.
    pub fn thresholds(&self) -> (f64, f64) {
        (self.params.gamma / 4.0, 3.0 * self.params.gamma / 4.0)
    }

    /// `PROJ(x_k, h/(2α̃_k), γ/2)` with `α̃_k = α + |x_k|`.
    pub fn probe_projector(&self, k: usize) -> ProbeProjector {
        let mu = self.grid.point(k);
        let alpha_shifted = self.be_h.alpha + mu.abs();
        ProbeProjector {
            mu,
            delta: self.grid.h / (2.0 * alpha_shifted),
            eps: self.params.gamma / 2.0,
            alpha_shifted,
        }
    }

    /// Flagged circuit of the probe at `k` (cached).
    pub fn flagged_amplitude(&self, k: usize) -> Result<Arc<FlaggedAmplitude>> {
        if k > self.grid.intervals {
            return Err(Error::DimensionMismatch(format!(
                "grid index {k} beyond {}",
                self.grid.intervals
            )));
        }
        if let Some(hit) = self.cache.lock().unwrap().get(&k) {
            return Ok(hit.clone());
        }
        let p = self.probe_projector(k);
        let fa = match &self.spectrum {
            None => {
                let proj = make_projector(&self.be_h, p.mu, p.delta, p.eps)?;
                FlaggedAmplitude::from_circuit(raw_circuit(&proj, &self.u_i)?)?
            }
            Some(sp) => {
                let poly = cached_sign_poly(p.delta, p.eps)?;
                let a2: f64 = sp
                    .values
                    .iter()
                    .zip(&sp.weights)
                    .map(|(&l, &w)| {
                        let f = 0.5
                            * (1.0 - poly.value(((l - p.mu) / p.alpha_shifted).clamp(-1.0, 1.0)));
                        w * f * f
                    })
                    .sum();
                let mut cost = projector_cost(&self.be_h, p.mu, poly.degree)?;
                cost.record(OracleTag::UI, false, false, 1);
                FlaggedAmplitude::from_value(a2.clamp(0.0, 1.0).sqrt(), cost)?
            }
        };
        let fa = Arc::new(fa);
        self.cache.lock().unwrap().insert(k, fa.clone());
        Ok(fa)
    }

    /// One binary estimate `B_k`.
    pub fn probe<R: Rng + ?Sized>(
        &self,
        k: usize,
        rng: &mut R,
    ) -> Result<(ProbeRecord, AeOutcome)> {
        let fa = self.flagged_amplitude(k)?;
        let (g0, g1) = self.thresholds();
        let out = binary_amplitude_estimate(&fa, g0, g1, &self.ae, rng)?;
        Ok((
            ProbeRecord {
                k,
                bit: out.bit,
                amplitude: fa.amplitude,
                flagged: out.flagged,
            },
            out,
        ))
    }

    /// Runs the bracket search with randomness derived from `rng_seed`.
    pub fn locate(&self, rng_seed: u64) -> Result<EnergyBracket> {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut ledger = QueryLedger::new();
        let mut probes = Vec::new();
        let mut evaluations = 0;
        let s = bracket_search(self.grid.intervals, |k| {
            let (rec, out) = self.probe(k, &mut rng)?;
            ledger.merge(&out.ledger);
            evaluations = out.evaluations;
            let bit = rec.bit;
            probes.push(rec);
            Ok(bit)
        })?;
        Ok(EnergyBracket {
            lower: s.lower,
            upper: s.upper,
            x_lower: self.grid.point(s.lower),
            x_upper: self.grid.point(s.upper),
            h: self.grid.h,
            vartheta: self.params.vartheta,
            confidence: 1.0 - self.params.vartheta,
            iterations: s.iterations,
            ae_calls: probes.len(),
            flagged_calls: probes.iter().filter(|p| p.flagged).count(),
            ae: self.ae,
            evaluations,
            trace: s.trace,
            probes,
            ledger,
        })
    }
}

/// Preparation result when the energy bound came from a bracket search.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnknownBoundResult {
    pub bracket: EnergyBracket,
    /// `x_U + Δ/4`, the bound handed to the projector.
    pub mu: f64,
    pub prep: PrepResult,
    /// Search plus preparation.
    pub ledger: QueryLedger,
}

/// Ground-state preparation with only overlap and gap bounds.
///
/// A bracket search with `h = Δ/6` gives `x_L < λ_0 < x_U` and
/// `x_U - x_L <= Δ/2`. Then `μ = x_U + Δ/4` satisfies `λ_0 < μ - Δ/4` and
/// `λ_1 >= λ_0 + Δ > μ + Δ/4`, which is what `PROJ(μ, Δ/(4α̃), γε)` needs.
pub struct UnknownBoundPrep {
    problem: PrepProblem,
    search: EnergySearch,
    amplify: AmplifyMode,
}

impl UnknownBoundPrep {
    /// `problem.mu` is ignored; `problem.delta_gap` is required.
    pub fn new(
        problem: PrepProblem,
        vartheta: f64,
        mode: AeMode,
        backend: ProbeBackend,
        amplify: AmplifyMode,
    ) -> Result<Self> {
        let gap = problem.delta_gap.ok_or(Error::OutOfRange {
            name: "delta_gap",
            value: f64::NAN,
            expected: "a gap lower bound is required",
        })?;
        check_range("delta_gap", gap, gap > 0.0, "gap > 0")?;
        let h = gap / 6.0;
        let params = SearchParams {
            gamma: problem.gamma,
            h,
            vartheta,
            offset: h / 7.0,
            mode,
            backend,
        };
        let search = EnergySearch::new(&problem.be_h, &problem.u_i, params)?;
        Ok(Self {
            problem,
            search,
            amplify,
        })
    }

    pub fn search(&self) -> &EnergySearch {
        &self.search
    }

    pub fn run(&self, rng_seed: u64) -> Result<UnknownBoundResult> {
        let mut seeds = ChaCha8Rng::seed_from_u64(rng_seed);
        let (s_search, s_prep) = (seeds.random::<u64>(), seeds.random::<u64>());
        let bracket = self.search.locate(s_search)?;
        let gap = self.problem.delta_gap.unwrap_or_default();
        let mu = bracket.x_upper + gap / 4.0;
        let p = PrepProblem {
            mu: Some(mu),
            ..self.problem.clone()
        };
        let prep = prepare_with_bound(&p, self.amplify, s_prep)?;
        let mut ledger = bracket.ledger.clone();
        ledger.merge(&prep.ledger);
        Ok(UnknownBoundResult {
            bracket,
            mu,
            prep,
            ledger,
        })
    }
}

/// One-shot form of [`UnknownBoundPrep`].
pub fn prepare_without_bound(
    problem: PrepProblem,
    vartheta: f64,
    mode: AeMode,
    backend: ProbeBackend,
    amplify: AmplifyMode,
    rng_seed: u64,
) -> Result<UnknownBoundResult> {
    UnknownBoundPrep::new(problem, vartheta, mode, backend, amplify)?.run(rng_seed)
}
