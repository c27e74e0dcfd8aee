use qgsp_core::blockenc::{ideal_reflector, make_reflector, QueryLedger};
use qgsp_core::energysearch::{AeMode, EnergySearch, ProbeBackend, SearchParams, UnknownBoundPrep};
use qgsp_core::groundprep::{
    low_energy_bound, prepare_low_energy, prepare_with_bound, AmplifyMode, PrepProblem, PrepResult,
};
use qgsp_core::hamlib::{
    first_strings, load_hamiltonian, make_counting, make_degenerate, make_random_gapless,
    make_random_gapped, make_single_qubit, make_tfim, shifted_grover_truth, BenchmarkInstance,
    GroverFamily,
};
use qgsp_core::linalg::{eig_hermitian, operator_norm_diff};
use qgsp_core::polyapprox::cached_sign_poly;
use qgsp_core::qsp::sign_phases;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, Report, Table};

type Res<T> = Result<T, CliError>;

/// SplitMix64 step: independent per-purpose streams from the one seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_INSTANCE: u64 = 1;
const STREAM_RUN: u64 = 2;

fn seed(c: &RunConfig) -> u64 {
    c.seed.unwrap_or(0)
}

fn run_seed(c: &RunConfig) -> u64 {
    derive_seed(seed(c), STREAM_RUN)
}

fn require(ok: bool, msg: impl Into<String>) -> Res<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::usage(msg))
    }
}

fn open_unit(name: &str, x: f64) -> Res<f64> {
    require(
        x > 0.0 && x < 1.0 && x.is_finite(),
        format!("--{name} must lie in (0, 1), got {x}"),
    )?;
    Ok(x)
}

fn positive(name: &str, x: f64) -> Res<f64> {
    require(
        x > 0.0 && x.is_finite(),
        format!("--{name} must be positive, got {x}"),
    )?;
    Ok(x)
}

fn ae_mode(c: &RunConfig) -> Res<AeMode> {
    Ok(c.ae_mode
        .as_deref()
        .unwrap_or("statistical_model")
        .parse()?)
}

fn backend(c: &RunConfig) -> Res<ProbeBackend> {
    match c.backend.as_deref().unwrap_or("circuit") {
        "circuit" => Ok(ProbeBackend::Circuit),
        "spectral" => Ok(ProbeBackend::Spectral),
        other => Err(CliError::usage(format!(
            "unknown backend `{other}` (circuit or spectral)"
        ))),
    }
}

fn amplify(c: &RunConfig, gamma: f64) -> Res<AmplifyMode> {
    match c.amplify.as_deref().unwrap_or("deterministic") {
        "deterministic" => Ok(AmplifyMode::Deterministic),
        "oblivious" => Ok(AmplifyMode::Oblivious { floor: gamma / 2.0 }),
        other => Err(CliError::usage(format!(
            "unknown amplification `{other}` (deterministic or oblivious)"
        ))),
    }
}

/// Builds the instance named by `--family`, defaulting to `default`.
pub fn instance(c: &RunConfig, default: &str) -> Res<BenchmarkInstance> {
    let s = derive_seed(seed(c), STREAM_INSTANCE);
    let fam = c.family.as_deref().unwrap_or(default);
    let inst = match fam {
        "single-qubit" => make_single_qubit(c.a.unwrap_or(0.3))?,
        "planted" => make_random_gapped(
            c.n.unwrap_or(3),
            c.gamma.unwrap_or(0.3),
            c.delta_gap.unwrap_or(0.1),
            s,
        )?,
        "gapless" => make_random_gapless(c.n.unwrap_or(4), s)?,
        "degenerate" => make_degenerate(c.n.unwrap_or(3), 2, s)?,
        "grover" => {
            let n = c.n.unwrap_or(4);
            let marked = c.marked.unwrap_or((1usize << n.min(usize::BITS as usize - 1)) - 1);
            GroverFamily::new(n, marked, c.tau.unwrap_or(0.5))?.instance()?
        }
        "counting" => make_counting(c.n.unwrap_or(4), &first_strings(c.marked.unwrap_or(1)))?,
        "tfim" => make_tfim(c.n.unwrap_or(4), 1.0, 1.0)?,
        "file" => {
            let p = c
                .hamiltonian
                .as_ref()
                .ok_or_else(|| CliError::usage("--family file needs --hamiltonian <path>"))?;
            load_hamiltonian(p)?
        }
        other => {
            return Err(CliError::usage(format!(
                "unknown family `{other}` (single-qubit, planted, gapless, degenerate, grover, counting, tfim, file)"
            )))
        }
    };
    Ok(inst)
}

fn truth_json(inst: &BenchmarkInstance) -> Value {
    json!({
        "family": inst.family,
        "num_qubits": inst.num_qubits,
        "alpha": inst.alpha,
        "ground_energy": inst.ground_energy(),
        "gamma_true": inst.gamma_true,
        "gap_true": inst.gap_true,
        "degenerate": inst.degenerate,
    })
}

fn problem(
    inst: &BenchmarkInstance,
    gamma: f64,
    gap: Option<f64>,
    mu: Option<f64>,
    eps: f64,
) -> Res<PrepProblem> {
    Ok(PrepProblem {
        be_h: inst.block_encoding()?,
        u_i: inst.state_prep(),
        gamma,
        delta_gap: gap,
        mu,
        eps,
        ground_truth: Some(inst.ground_state.clone()),
        hamiltonian: Some(inst.h.clone()),
    })
}

fn gamma_of(c: &RunConfig, inst: &BenchmarkInstance) -> Res<f64> {
    let g = c.gamma.unwrap_or(inst.gamma_true.min(1.0));
    require(
        g > 0.0 && g <= 1.0,
        format!("--gamma must lie in (0, 1], got {g}"),
    )?;
    Ok(g)
}

fn gap_of(c: &RunConfig, inst: &BenchmarkInstance) -> Res<f64> {
    let g = c.delta_gap.unwrap_or(inst.gap_true);
    require(
        g > 0.0 && g.is_finite(),
        "a positive --delta-gap is required (the instance has no gap)",
    )?;
    Ok(g)
}

fn prep_json(r: &PrepResult) -> Value {
    json!({
        "fidelity": r.fidelity,
        "energy": r.energy,
        "success_prob": r.success_prob,
        "amplified_success_prob": r.amplified_success_prob,
        "iterations": r.iterations,
        "rounds": r.rounds,
        "projector": r.projector,
    })
}

fn merge(mut v: Value, extra: Value) -> Value {
    if let (Value::Object(a), Value::Object(b)) = (&mut v, extra) {
        a.extend(b);
    }
    v
}

fn finish(command: &str, body: Value, table: Option<Table>, ledger: QueryLedger) -> Res<Report> {
    let json = merge(json!({ "command": command, "ledger": ledger }), body);
    let table = table.unwrap_or_else(|| Table::from_scalars(&json));
    Ok(Report {
        json,
        table,
        ledger,
    })
}

pub fn sign_poly(c: &RunConfig) -> Res<Report> {
    let delta = open_unit("delta", c.delta.unwrap_or(0.2))?;
    let eps = open_unit("eps", c.eps.unwrap_or(1e-4))?;
    let points = c.points.unwrap_or(201);
    require(points >= 2, "--points must be at least 2")?;
    let p = cached_sign_poly(delta, eps)?;
    let mut t = Table::new(&["x", "s"]);
    for i in 0..points {
        let x = -1.0 + 2.0 * i as f64 / (points - 1) as f64;
        t.push(vec![num(x), num(p.value(x))]);
    }
    let body = json!({
        "delta": delta,
        "eps": eps,
        "degree": p.degree,
        "eps_achieved": p.eps_achieved,
        "grid_max_abs": p.grid_max_abs(),
        "cheb_odd": p.cheb_odd,
    });
    finish("sign-poly", body, Some(t), QueryLedger::new())
}

pub fn phase_factors(c: &RunConfig) -> Res<Report> {
    let delta = open_unit("delta", c.delta.unwrap_or(0.2))?;
    let eps = open_unit("eps", c.eps.unwrap_or(1e-4))?;
    let sp = sign_phases(delta, eps)?;
    let mut t = Table::new(&["j", "phase"]);
    for (j, &phi) in sp.phases.phases.iter().enumerate() {
        t.push(vec![j.to_string(), num(phi)]);
    }
    let body = json!({
        "delta": delta,
        "eps": eps,
        "degree": sp.phases.degree,
        "eps_achieved": sp.poly.eps_achieved,
        "residual": sp.phases.residual,
        "phases": sp.phases.phases,
    });
    finish("phase-factors", body, Some(t), QueryLedger::new())
}

/// Operator-norm error of `REF(μ, δ, ε)` on the single-qubit family across
/// `a ∈ [0, 1]`.
pub fn reflector_sweep(c: &RunConfig) -> Res<Report> {
    let delta = open_unit("delta", c.delta.unwrap_or(0.2))?;
    let eps = open_unit("eps", c.eps.unwrap_or(1e-4))?;
    let mu = c.mu.unwrap_or(0.0);
    let points = c.points.unwrap_or(201);
    require(points >= 2, "--points must be at least 2")?;
    // Warm the shared phase cache before fanning out.
    let sp = sign_phases(delta, eps)?;
    let rows: Vec<(f64, f64, QueryLedger)> = (0..points)
        .into_par_iter()
        .map(|i| -> Res<(f64, f64, QueryLedger)> {
            let a = i as f64 / (points - 1) as f64;
            let inst = make_single_qubit(a)?;
            let r = make_reflector(&inst.block_encoding()?, mu, delta, eps)?;
            let err = operator_norm_diff(&r.block()?, &ideal_reflector(&inst.h, mu)?)?;
            Ok((a, err, r.cost().clone()))
        })
        .collect::<Res<Vec<_>>>()?;
    let mut ledger = QueryLedger::new();
    let mut t = Table::new(&["a", "operator_norm_error"]);
    let (mut inside, mut outside) = (0.0f64, 0.0f64);
    for (a, err, l) in &rows {
        ledger.merge(l);
        t.push(vec![num(*a), num(*err)]);
        if *a > 0.4 && *a < 0.6 {
            inside = inside.max(*err);
        } else {
            outside = outside.max(*err);
        }
    }
    let body = json!({
        "delta": delta,
        "eps": eps,
        "mu": mu,
        "degree": sp.poly.degree,
        "points": points,
        "max_error_outside": outside,
        "max_error_inside": inside,
        "rows": rows.iter().map(|(a, e, _)| json!({"a": a, "error": e})).collect::<Vec<_>>(),
    });
    finish("reflector-sweep", body, Some(t), ledger)
}

pub fn prepare(c: &RunConfig) -> Res<Report> {
    let inst = instance(c, "planted")?;
    let gamma = gamma_of(c, &inst)?;
    let gap = gap_of(c, &inst)?;
    let mu = match c.mu {
        Some(m) => m,
        None => inst.ground_energy() + 0.5 * inst.gap_true,
    };
    let eps = open_unit("eps", c.eps.unwrap_or(1e-3))?;
    let p = problem(&inst, gamma, Some(gap), Some(mu), eps)?;
    let r = prepare_with_bound(&p, amplify(c, gamma)?, run_seed(c))?;
    let body = merge(
        json!({
            "instance": truth_json(&inst),
            "gamma": gamma,
            "delta_gap": gap,
            "mu": mu,
            "eps": eps,
        }),
        prep_json(&r),
    );
    finish("prepare", body, None, r.ledger.clone())
}

fn search_params(c: &RunConfig, gamma: f64, h: f64) -> Res<SearchParams> {
    let vartheta = open_unit("vartheta", c.vartheta.unwrap_or(0.1))?;
    let offset = c.grid_offset.unwrap_or(0.0);
    require(
        offset >= 0.0 && offset < h,
        "--grid-offset must lie in [0, h)",
    )?;
    Ok(SearchParams {
        gamma,
        h,
        vartheta,
        offset,
        mode: ae_mode(c)?,
        backend: backend(c)?,
    })
}

pub fn estimate_energy(c: &RunConfig) -> Res<Report> {
    let inst = instance(c, "counting")?;
    let gamma = gamma_of(c, &inst)?;
    let h = positive("h", c.h.unwrap_or(0.05))?;
    let params = search_params(c, gamma, h)?;
    let s = EnergySearch::new(&inst.block_encoding()?, &inst.state_prep(), params)?;
    let b = s.locate(run_seed(c))?;
    let mut t = Table::new(&["k", "b_k", "b_k1", "lower", "upper"]);
    for st in &b.trace {
        t.push(vec![
            st.k.to_string(),
            (st.b_k as u8).to_string(),
            (st.b_k1 as u8).to_string(),
            st.lower.to_string(),
            st.upper.to_string(),
        ]);
    }
    let body = json!({
        "instance": truth_json(&inst),
        "bracket": [b.x_lower, b.x_upper],
        "bracket_indices": [b.lower, b.upper],
        "estimate": b.midpoint(),
        "h": h,
        "vartheta": params.vartheta,
        "gamma": gamma,
        "ae_mode": params.mode,
        "backend": params.backend,
        "delta_ae": b.ae.delta,
        "votes": b.ae.votes,
        "evaluations": b.evaluations,
        "iterations": b.iterations,
        "ae_calls": b.ae_calls,
        "flagged_calls": b.flagged_calls,
        "trace": b.trace.iter().map(|st| json!([st.k, st.b_k as u8, st.b_k1 as u8])).collect::<Vec<_>>(),
        "contains_ground_energy": b.contains(inst.ground_energy()),
    });
    finish("estimate-energy", body, Some(t), b.ledger.clone())
}

pub fn prepare_unknown(c: &RunConfig) -> Res<Report> {
    let inst = instance(c, "tfim")?;
    let gamma = gamma_of(c, &inst)?;
    let gap = gap_of(c, &inst)?;
    let eps = open_unit("eps", c.eps.unwrap_or(1e-3))?;
    let vartheta = open_unit("vartheta", c.vartheta.unwrap_or(0.05))?;
    let p = problem(&inst, gamma, Some(gap), None, eps)?;
    let prep = UnknownBoundPrep::new(p, vartheta, ae_mode(c)?, backend(c)?, amplify(c, gamma)?)?;
    let r = prep.run(run_seed(c))?;
    let body = merge(
        json!({
            "instance": truth_json(&inst),
            "gamma": gamma,
            "delta_gap": gap,
            "eps": eps,
            "vartheta": vartheta,
            "h": prep.search().grid.h,
            "bracket": [r.bracket.x_lower, r.bracket.x_upper],
            "mu": r.mu,
            "search_ledger": r.bracket.ledger,
            "prep_ledger": r.prep.ledger,
        }),
        prep_json(&r.prep),
    );
    finish("prepare-unknown", body, None, r.ledger)
}

pub fn low_energy(c: &RunConfig) -> Res<Report> {
    let inst = instance(c, "gapless")?;
    let mu = c.mu.unwrap_or(inst.ground_energy() + 0.1);
    let d = positive("delta", c.delta.unwrap_or(0.02))?;
    let gamma = match c.gamma {
        Some(g) => g,
        None => inst.low_energy_weight(mu - 3.0 * d)?.sqrt(),
    };
    require(
        gamma > 0.0 && gamma <= 1.0,
        format!("no weight below mu - 3 delta (gamma = {gamma}); raise --mu or lower --delta"),
    )?;
    let p = problem(&inst, gamma, None, Some(mu), 0.5)?;
    let r = prepare_low_energy(
        &p,
        mu,
        d,
        gamma,
        c.eps_prime,
        amplify(c, gamma)?,
        run_seed(c),
    )?;
    let bound = low_energy_bound(mu, d, gamma, inst.alpha, r.projector.eps);
    let body = merge(
        json!({
            "instance": truth_json(&inst),
            "mu": mu,
            "delta": d,
            "gamma": gamma,
            "eps_prime": r.projector.eps,
            "energy_bound": bound,
            "energy_below_mu": r.energy.is_some_and(|e| e <= mu),
        }),
        prep_json(&r),
    );
    finish("low-energy", body, None, r.ledger.clone())
}

/// Closed-form lower-bound instances against numerics.
pub fn lowerbound_demo(c: &RunConfig) -> Res<Report> {
    let n = c.n.unwrap_or(6);
    let delta_exp = c.delta.unwrap_or(0.1);
    let tau = c.tau.unwrap_or(0.5);
    let g = GroverFamily::all_ones(n, tau)?;
    let tr = g.truth();
    let numeric = g.distinct_spectrum(derive_seed(seed(c), STREAM_INSTANCE))?;
    let nn = (1usize << n) as f64;
    let b = shifted_grover_truth(n, delta_exp)?;
    let gb = GroverFamily::all_ones(n, b.tau)?;
    let nb = gb.distinct_spectrum(derive_seed(seed(c), STREAM_INSTANCE))?;
    let counting = if n <= 8 {
        let size = c.marked.unwrap_or(1);
        let inst = make_counting(n, &first_strings(size))?;
        let a = (size as f64 / nn).sqrt();
        let v = eig_hermitian(&inst.h)?.values;
        json!({
            "marked": size,
            "a": a,
            "predicted": 2.0 * a * (1.0 - a * a).sqrt(),
            "numeric_min": v[0],
            "numeric_max": v[v.len() - 1],
            "overlap": inst.gamma_true,
        })
    } else {
        Value::Null
    };
    let body = json!({
        "n": n,
        "grover": {
            "tau": tau,
            "lambda_minus": tr.lambda_minus,
            "lambda_plus": tr.lambda_plus,
            "gap": tr.gap,
            "gap_at_half_formula": 2.0 / nn.sqrt(),
            "numeric_distinct": numeric,
        },
        "shifted": {
            "delta_exp": delta_exp,
            "truth": b,
            "numeric_lambda_minus": nb[0],
            "numeric_lambda_plus": nb[1],
            "gap_relative_error": (b.gap - b.gap_leading).abs() / b.gap,
            "overlap_relative_error": (b.overlap_t - b.overlap_t_leading).abs() / b.overlap_t,
        },
        "counting": counting,
    });
    finish("lowerbound-demo", body, None, QueryLedger::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_split() {
        assert_ne!(derive_seed(1, 1), derive_seed(1, 2));
        assert_ne!(derive_seed(1, 1), derive_seed(2, 1));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }

    #[test]
    fn unknown_family_is_usage_error() {
        let c = RunConfig {
            family: Some("nope".into()),
            ..RunConfig::default()
        };
        let e = instance(&c, "planted").unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
