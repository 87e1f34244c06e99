//! The subcommands. Each returns the `outputs` object of its record and may
//! write CSV tables or binary dumps next to it.

use std::fs;
use std::io::Write;
use std::path::Path;

use phi4_core::checks::identity_suites;
use phi4_core::flow::{
    build_stochastic_vector, delta_constant, gamma_dot, gamma_table, sample_flow, sample_terminal, FlowSetup,
};
use phi4_core::oracle::{
    compare_report, jensen_bound, mc_free_energy_difference, mc_partition, quadrature_partition, McOptions, OracleResult,
};
use phi4_core::parallel::map_samples;
use phi4_core::stats::Estimate;
use phi4_core::variational::{
    evaluate_policy, optimize, DriftPolicy, Evaluator, FSpec, OptimizeResult, TerminalConstants, EVAL_STREAM_OFFSET,
};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, PolicyFamily};
use crate::error::CliError;
use crate::record::{fmt, write_csv, SCHEMA_VERSION};

/// Field dump layout version.
pub const DUMP_VERSION: u32 = 1;

/// Oracle feasibility limits in three dimensions (beyond them `exp(-V)` overflows
/// or the estimator variance explodes at unit coupling).
const ORACLE_MAX_N_3D: usize = 8;
const ORACLE_MAX_T_3D: f64 = 4.0;

fn mc_options(cfg: &ExperimentConfig) -> McOptions {
    McOptions {
        samples: cfg.oracle_samples,
        seed: cfg.seed,
        workers: cfg.workers,
        control_variates: cfg.control_variates,
    }
}

/// Terminal constants including `delta_T` (three dimensions), with its estimate.
fn terminal_constants(cfg: &ExperimentConfig, setup: &FlowSetup, lambda: f64) -> Result<(TerminalConstants, Value), CliError> {
    let m = setup.cells();
    if setup.grid().dim() == 2 {
        return Ok((TerminalConstants { c: setup.c(m), gamma: 0.0, delta: 0.0 }, Value::Null));
    }
    let d = delta_constant(setup, lambda, cfg.delta_samples, cfg.seed, cfg.workers)?;
    let k = TerminalConstants { c: setup.c(m), gamma: setup.gamma(m), delta: d.value };
    Ok((k, json!({ "value": d.value, "se": d.se, "samples": cfg.delta_samples })))
}

pub fn constants(cfg: &ExperimentConfig, out: &Path) -> Result<Value, CliError> {
    let setup = cfg.setup_for(cfg.t)?;
    let grid = setup.grid().clone();
    let knots = setup.time().knots().to_vec();
    let three = cfg.d == 3;
    let (gamma, gamma_err) = if three { gamma_table(&grid, &knots)? } else { (vec![], 0.0) };
    let mut rows = Vec::with_capacity(knots.len());
    for (k, &t) in knots.iter().enumerate() {
        let c = setup.c(k);
        let mut r = vec![fmt(t), fmt(c), fmt(6.0 * c), fmt(3.0 * c * c)];
        if three {
            r.push(fmt(gamma[k]));
            r.push(fmt(if t > 0.0 { gamma_dot(&grid, t) } else { 0.0 }));
            r.push(fmt(setup.gamma(k)));
        }
        rows.push(r);
    }
    let header: &[&str] = if three {
        &["t", "c", "a", "b", "gamma", "gamma_dot", "gamma_cell"]
    } else {
        &["t", "c", "a", "b"]
    };
    write_csv(&out.join("constants.csv"), header, &rows)?;
    let mut o = json!({
        "table": "constants.csv",
        "columns": header,
        "knots": knots.len(),
        "c_T": setup.c(setup.cells()),
    });
    if three {
        let (_, delta) = terminal_constants(cfg, &setup, cfg.lambda)?;
        o["gamma_T"] = json!(gamma[gamma.len() - 1]);
        o["gamma_cell_T"] = json!(setup.gamma(setup.cells()));
        o["gamma_quadrature_error"] = json!(gamma_err);
        o["delta_T"] = delta;
    }
    Ok(o)
}

pub fn sample(cfg: &ExperimentConfig, out: &Path) -> Result<Value, CliError> {
    let setup = cfg.setup_for(cfg.t)?;
    let fields = map_samples(cfg.samples, cfg.workers, |i| sample_terminal(&setup, cfg.seed, i as u64).inverse());
    let mut buf = Vec::new();
    buf.extend_from_slice(b"PHI4");
    buf.extend_from_slice(&DUMP_VERSION.to_le_bytes());
    buf.extend_from_slice(&(cfg.d as u32).to_le_bytes());
    buf.extend_from_slice(&(cfg.n as u32).to_le_bytes());
    buf.extend_from_slice(&cfg.l.to_le_bytes());
    buf.extend_from_slice(&(fields.len() as u64).to_le_bytes());
    for f in &fields {
        for v in f.values() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::create_dir_all(out)?;
    let path = out.join("fields.phi4");
    fs::File::create(&path)?.write_all(&buf)?;
    let digest: String = Sha256::digest(&buf).iter().map(|b| format!("{b:02x}")).collect();
    Ok(json!({
        "file": "fields.phi4",
        "dump_version": DUMP_VERSION,
        "count": fields.len(),
        "points_per_field": setup.grid().len(),
        "sha256": digest,
    }))
}

pub fn identity_check(cfg: &ExperimentConfig) -> Result<Value, CliError> {
    let suites = identity_suites(cfg.d, cfg.l, cfg.n, cfg.t, cfg.seed)?;
    let pass = suites.iter().all(|s| s.pass);
    let o = json!({ "pass": pass, "suites": suites });
    if !pass {
        return Err(CliError::Numerical(format!("identity suites failed: {o}")));
    }
    Ok(o)
}

fn run_policy(cfg: &ExperimentConfig, eval: &Evaluator) -> Result<OptimizeResult, CliError> {
    Ok(optimize(eval, &cfg.drift_policy()?, &cfg.optimize_options())?)
}

fn oracle_value(r: &OracleResult) -> Value {
    serde_json::to_value(r).expect("oracle result serialises")
}

/// Means of the objective pieces of `policy` on the evaluation streams.
fn upsilon_breakdown(cfg: &ExperimentConfig, eval: &Evaluator, policy: &DriftPolicy) -> Result<Value, CliError> {
    let setup = eval.setup;
    let rows = map_samples(cfg.opt_eval_samples, cfg.workers, |i| {
        let v = build_stochastic_vector(setup, &sample_flow(setup, cfg.seed, EVAL_STREAM_OFFSET + i as u64));
        eval.evaluate(&v, policy)
    });
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); 10];
    for r in rows {
        let e = r?;
        let u = e.upsilon.unwrap_or_default();
        for j in 0..6 {
            cols[j].push(u.terms[j]);
        }
        cols[6].push(u.f_term);
        cols[7].push(e.quartic);
        cols[8].push(0.5 * e.l_norm_sq);
        cols[9].push(0.5 * e.u_norm_sq);
    }
    let names = [
        "upsilon_1", "upsilon_2", "upsilon_3", "upsilon_4", "upsilon_5", "upsilon_6", "f", "quartic", "half_l_sq",
        "half_u_sq",
    ];
    let mut o = serde_json::Map::new();
    for (n, c) in names.iter().zip(&cols) {
        o.insert((*n).into(), serde_json::to_value(Estimate::from_samples(c)).expect("estimate serialises"));
    }
    Ok(Value::Object(o))
}

pub fn free_energy(cfg: &ExperimentConfig, out: &Path) -> Result<Value, CliError> {
    let setup = cfg.setup_for(cfg.t)?;
    let grid = setup.grid().clone();
    let eval = Evaluator::new(&setup, cfg.potential(&grid, cfg.lambda));
    let r = run_policy(cfg, &eval)?;
    let trace: Vec<Vec<String>> = r
        .trace
        .iter()
        .map(|t| vec![t.iteration.to_string(), fmt(t.objective), fmt(t.best)])
        .collect();
    write_csv(&out.join("trace.csv"), &["iteration", "objective", "best"], &trace)?;
    let mut o = json!({
        "policy": r.policy.tag(),
        "params": r.policy.params(),
        "optimized": r.estimate,
        "zero_drift": r.zero_drift,
        "improvement": r.improvement,
        "trace": "trace.csv",
    });
    let feasible = cfg.d == 2 || (cfg.n <= ORACLE_MAX_N_3D && cfg.t <= ORACLE_MAX_T_3D);
    if feasible {
        let (k, delta) = terminal_constants(cfg, &setup, cfg.lambda)?;
        match mc_partition(&setup, &eval.cfg, &k, &mc_options(cfg)) {
            Ok(oracle) => {
                o["oracle"] = oracle_value(&oracle);
                o["bracket"] = serde_json::to_value(compare_report(&r.estimate, &oracle)).expect("report serialises");
            }
            Err(e) => o["oracle_error"] = json!(e.to_string()),
        }
        if cfg.d == 3 {
            o["delta_T"] = delta;
        }
    } else {
        o["oracle"] = Value::Null;
        o["oracle_skipped"] = json!(format!(
            "three-dimensional oracle limited to N <= {ORACLE_MAX_N_3D}, T <= {ORACLE_MAX_T_3D}"
        ));
    }
    if cfg.d == 3 {
        o["upsilon_breakdown"] = upsilon_breakdown(cfg, &eval, &r.policy)?;
    }
    Ok(o)
}

pub fn oracle(cfg: &ExperimentConfig) -> Result<Value, CliError> {
    let setup = cfg.setup_for(cfg.t)?;
    let pot = cfg.potential(setup.grid(), cfg.lambda);
    let (k, delta) = terminal_constants(cfg, &setup, cfg.lambda)?;
    let opts = mc_options(cfg);
    let mc = mc_partition(&setup, &pot, &k, &opts)?;
    let jensen = jensen_bound(&setup, &pot, &k, &opts)?;
    let quad = match quadrature_partition(&setup, &pot, &k) {
        Ok(q) => oracle_value(&q),
        Err(e) => json!({ "skipped": e.to_string() }),
    };
    Ok(json!({
        "mc": oracle_value(&mc),
        "quadrature": quad,
        "jensen": oracle_value(&jensen),
        "delta_T": delta,
    }))
}

pub fn convergence(cfg: &ExperimentConfig, out: &Path) -> Result<Value, CliError> {
    let mut rows = Vec::new();
    let mut est = Vec::new();
    for &t in &cfg.t_list {
        let setup = cfg.setup_for(t)?;
        let eval = Evaluator::new(&setup, cfg.potential(setup.grid(), cfg.lambda));
        let policy = cfg.drift_policy()?;
        let e = if cfg.policy == PolicyFamily::LinearFeedback {
            run_policy(cfg, &eval)?.estimate
        } else {
            let s = evaluate_policy(&eval, &policy, cfg.seed, EVAL_STREAM_OFFSET, cfg.opt_eval_samples, cfg.workers)?;
            Estimate::from_samples(&s)
        };
        rows.push(vec![fmt(t), fmt(e.value), fmt(e.se), e.n.to_string(), policy.tag().to_string()]);
        est.push(e);
    }
    write_csv(&out.join("convergence.csv"), &["T", "estimate", "se", "n_samples", "policy"], &rows)?;
    let diffs: Vec<Value> = est
        .windows(2)
        .map(|w| json!({ "difference": w[1].value - w[0].value, "se": w[0].combined_se(&w[1]) }))
        .collect();
    Ok(json!({ "table": "convergence.csv", "estimates": est, "successive_differences": diffs }))
}

/// `W(f / |Lambda|) - W(0)` for `f = mean(. g)` together with the Gaussian value.
pub fn laplace(cfg: &ExperimentConfig) -> Result<Value, CliError> {
    let setup = cfg.setup_for(cfg.t)?;
    let grid = setup.grid().clone();
    let vol = grid.volume();
    let g = cfg.g_field(&grid);
    let gh = g.forward();
    // Var mean(Y_T g) under the free field
    let var_g: f64 = gh
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, z)| setup.terminal_variance(i) * z.norm_sqr())
        .sum();
    let gaussian = -0.5 * var_g / vol;
    let m = setup.cells();
    // delta cancels in the difference and is left at zero
    let k = TerminalConstants { c: setup.c(m), gamma: if cfg.d == 3 { setup.gamma(m) } else { 0.0 }, delta: 0.0 };
    let mut tilted = cfg.potential(&grid, cfg.lambda);
    tilted.f = FSpec::Linear(g).scaled(1.0 / vol);
    let mut plain = tilted.clone();
    plain.f = FSpec::Zero;
    let opts = mc_options(cfg);
    let diff = mc_free_energy_difference(&setup, &tilted, &plain, &k, &opts)?;
    Ok(json!({
        "value": diff.value,
        "se": diff.se,
        "n_samples": diff.n,
        "gaussian": gaussian,
        "minus_gaussian": diff.value - gaussian,
    }))
}

/// Summarises every record in the output directory into `report.csv`.
pub fn report(out: &Path) -> Result<Value, CliError> {
    let mut rows = Vec::new();
    let mut entries: Vec<_> = fs::read_dir(out)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json") && !p.ends_with("report.json"))
        .collect();
    entries.sort();
    for p in &entries {
        let text = fs::read_to_string(p)?;
        let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        if v["schema_version"] != json!(SCHEMA_VERSION) {
            return Err(CliError::Io(format!("{}: unsupported schema version {}", p.display(), v["schema_version"])));
        }
        rows.push(vec![
            p.file_name().unwrap_or_default().to_string_lossy().into_owned(),
            v["command"].as_str().unwrap_or("").to_string(),
            v["config_hash"].as_str().unwrap_or("").to_string(),
            v["wall_clock_s"].to_string(),
        ]);
    }
    write_csv(&out.join("report.csv"), &["file", "command", "config_hash", "wall_clock_s"], &rows)?;
    Ok(json!({ "table": "report.csv", "records": rows.len() }))
}
