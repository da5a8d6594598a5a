//! Dispatch of scenario analyses to the library.

use histlab::channels::{channel_history, dephase, marginal_in, marginal_out, validate_cptp};
use histlab::history::{build_history, temporal_marginal};
use histlab::monitor::{run_protocol, MonitorProtocol};
use histlab::qcore::{MatrixJson, VectorJson};
use histlab::tempcorr::{
    angle_grid, classical_lg_max, lg_sweep, pointer_two_time_with_offset, sequential_measure, LgRow,
};
use histlab::uncertainty::{
    brute_force_projective, discrimination_success, helstrom_success, instant_marginals,
    time_discrimination, uncertainty_report, DiscriminationStrategy, BRUTE_FORCE_STEP,
};
use serde_json::{json, Value};

use crate::report::{AnalysisBlock, Report, Status};
use crate::scenario::{Analysis, Prepared};

type AnalysisResult = Result<Value, String>;

fn mat(m: &histlab::qcore::ComplexMatrix) -> MatrixJson {
    MatrixJson::from(m.clone())
}

fn err(e: histlab::Error) -> String {
    e.to_string()
}

fn history(p: &Prepared) -> AnalysisResult {
    let (chain, init) = (p.chain.as_ref().unwrap(), p.initial.as_ref().unwrap());
    let h = build_history(chain, init).map_err(err)?;
    let norm = h
        .vector()
        .amplitudes()
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let marginals = (0..chain.n_instants())
        .map(|t| temporal_marginal(&h, t).map(|m| mat(m.matrix())))
        .collect::<histlab::Result<Vec<_>>>()
        .map_err(err)?;
    Ok(json!({
        "n_instants": chain.n_instants(),
        "labels": chain.labels(),
        "norm": norm,
        "state": h,
        "path_amplitudes": VectorJson::from_amps(&h.path_amplitudes()),
        "marginals": marginals,
    }))
}

fn monitor(p: &Prepared) -> AnalysisResult {
    let proto = MonitorProtocol::new(
        p.chain.clone().unwrap(),
        p.initial.clone().unwrap(),
        p.postselect.clone(),
    )
    .map_err(err)?;
    let out = run_protocol(&proto).map_err(err)?;
    Ok(json!({
        "dims": out.dims,
        "success_prob": out.success_prob,
        "fidelity_vs_history": out.fidelity_vs_history,
        "postselect": proto.postselect(),
        "monitor_state": out.monitor_state,
    }))
}

fn channel(p: &Prepared) -> AnalysisResult {
    let (rho, choi) = (
        p.rho.as_ref().ok_or("no input state")?,
        p.choi.as_ref().unwrap(),
    );
    let op = channel_history(rho, choi).map_err(err)?;
    let out = marginal_out(&op);
    let direct = choi.apply(rho.matrix()).map_err(err)?;
    let dephased = choi
        .apply(&dephase(rho.matrix(), choi.in_basis()).map_err(err)?)
        .map_err(err)?;
    let cptp = match &p.kraus {
        Some(k) => serde_json::to_value(validate_cptp(k)).map_err(|e| e.to_string())?,
        None => Value::Null,
    };
    let trace = op.trace();
    Ok(json!({
        "dims": op.dims(),
        "trace": trace.re,
        "trace_imag": trace.im,
        "hermiticity_residual": op.hermiticity_residual(),
        "min_eigenvalue": op.min_eigenvalue(),
        "trace_decreasing": op.is_trace_decreasing(),
        "history_operator": mat(op.matrix()),
        "marginal_out": mat(&out),
        "marginal_in": mat(&marginal_in(&op)),
        "direct_output": mat(&direct),
        "marginal_out_vs_direct": out.max_abs_diff(&direct),
        "marginal_out_vs_dephased": out.max_abs_diff(&dephased),
        "cptp": cptp,
    }))
}

fn pointer(p: &Prepared) -> AnalysisResult {
    let spec = p.pointer.as_ref().unwrap();
    let d = pointer_two_time_with_offset(
        p.chain.as_ref().unwrap(),
        p.initial.as_ref().unwrap(),
        p.spin.as_ref().unwrap(),
        spec.t1,
        spec.t2,
        spec.lattice_dim,
        spec.offset,
    )
    .map_err(err)?;
    let mean: f64 = d
        .positions
        .iter()
        .zip(&d.probabilities)
        .map(|(&q, pr)| q as f64 * pr)
        .sum();
    Ok(json!({
        "positions": d.positions,
        "probabilities": d.probabilities,
        "p_zero": d.prob(0),
        "mean_displacement": mean,
    }))
}

fn sequential(p: &Prepared) -> AnalysisResult {
    let plan = p.plan.as_ref().ok_or("no measurement plan")?;
    let shots = p.scenario.measurements.as_ref().unwrap().shots;
    let r = sequential_measure(
        plan,
        p.initial.as_ref().unwrap(),
        shots,
        p.seed.unwrap_or(0),
    )
    .map_err(err)?;
    let mut v = serde_json::to_value(&r).map_err(|e| e.to_string())?;
    v["prob_all_equal"] = json!(r.prob_all_equal());
    v["instants"] = json!(plan.instants());
    Ok(v)
}

/// Rows of the sweep requested by the scenario.
pub fn lg_rows(p: &Prepared) -> Result<Vec<LgRow>, String> {
    let l = p.lg.as_ref().ok_or("no lg section")?;
    let grid = angle_grid(l.theta_min, l.theta_max, l.steps);
    lg_sweep(
        &grid,
        p.lg_observable.as_ref().unwrap(),
        p.lg_rho.as_ref().unwrap(),
    )
    .map_err(err)
}

fn lg(p: &Prepared) -> AnalysisResult {
    let rows = lg_rows(p)?;
    let best = rows
        .iter()
        .max_by(|a, b| a.k.total_cmp(&b.k))
        .cloned()
        .ok_or("empty sweep")?;
    Ok(json!({
        "n_rows": rows.len(),
        "max": best,
        "violated_count": rows.iter().filter(|r| r.violated).count(),
        "classical_max": classical_lg_max(),
        "rows": rows,
    }))
}

fn uncertainty(p: &Prepared) -> AnalysisResult {
    let em = p.energy.as_ref().unwrap();
    let (chain, source) = match &p.energy_chain {
        Some(c) => (c, "energy_model"),
        None => (p.chain.as_ref().unwrap(), "scenario"),
    };
    let r = uncertainty_report(chain, p.initial.as_ref().unwrap(), em).map_err(err)?;
    let mut v = serde_json::to_value(&r).map_err(|e| e.to_string())?;
    v["chain_source"] = json!(source);
    Ok(v)
}

fn discrimination(p: &Prepared) -> AnalysisResult {
    let h = build_history(p.chain.as_ref().unwrap(), p.initial.as_ref().unwrap()).map_err(err)?;
    let e = instant_marginals(&h).map_err(err)?;
    let helstrom = if e.len() == 2 {
        Some(helstrom_success(&e).map_err(err)?)
    } else {
        None
    };
    let brute = if e.dim() == 2 && e.len() <= 4 {
        Some(brute_force_projective(&e, BRUTE_FORCE_STEP).map_err(err)?)
    } else {
        None
    };
    Ok(json!({
        "n_instants": e.len(),
        "priors": e.priors(),
        "random_guess": discrimination_success(&e, DiscriminationStrategy::RandomGuess).map_err(err)?,
        "pretty_good": discrimination_success(&e, DiscriminationStrategy::PrettyGood).map_err(err)?,
        "helstrom": helstrom,
        "brute_force_projective": brute,
        "time": time_discrimination(&e).map_err(err)?,
    }))
}

fn run_one(p: &Prepared, a: Analysis) -> AnalysisResult {
    match a {
        Analysis::History => history(p),
        Analysis::Monitor => monitor(p),
        Analysis::Channel => channel(p),
        Analysis::Pointer => pointer(p),
        Analysis::Sequential => sequential(p),
        Analysis::Lg => lg(p),
        Analysis::Uncertainty => uncertainty(p),
        Analysis::Discrimination => discrimination(p),
    }
}

/// Runs `analyses` in order; a failing analysis becomes an error block and the rest still run.
pub fn run_scenario(p: &Prepared, analyses: &[Analysis]) -> Report {
    let results = analyses
        .iter()
        .map(|&a| match run_one(p, a) {
            Ok(data) => AnalysisBlock {
                analysis: a,
                status: Status::Ok,
                data: Some(data),
                error: None,
            },
            Err(e) => AnalysisBlock {
                analysis: a,
                status: Status::Error,
                data: None,
                error: Some(e),
            },
        })
        .collect();
    let mut report = Report::new(&p.scenario.name, p.seed, p.tolerance, results);
    report.evaluate(&p.scenario.expect);
    report
}

/// CSV table of a sweep: `theta,c12,c23,c13,k,violated`.
pub fn lg_csv(rows: &[LgRow]) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| e.to_string())?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}
