//! Command implementations behind the `slhnet` CLI.
//!
//! Exit-code contract: `0` success, `1` diagnostics (lexical, syntactic,
//! reference or usage problems), `2` numerical failure (invariant violations,
//! trace drift, divergence).

use std::env;
use std::thread;

use slhnet_core::dynamics::{
    evolve_master, evolve_zakai, heisenberg_coefficients, simulate_record, Trajectory,
};
use slhnet_core::network::ReducedNetwork;
use slhnet_core::{Operator, SlhTriple, DEFAULT_TOL};

use crate::ast::Diagnostic;
use crate::eval::{compile, eval_expr, CompiledNetlist, EvalContext};
use crate::json::{heisenberg_to_json, triple_to_json};
use crate::parser::{parse_expression, parse_netlist};

#[derive(Debug)]
pub enum CliError {
    /// Parse/reference/usage problems -> exit 1.
    Diagnostics(Vec<Diagnostic>),
    /// Invariant or integration failures -> exit 2.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Diagnostics(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Diagnostics(vec![Diagnostic::error(message, 1, 1)])
    }
}

/// Options merged from command-line flags; the run block fills the gaps.
#[derive(Clone, Debug, Default)]
pub struct CommandOptions {
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub seed: Option<u64>,
    pub channel: Option<usize>,
    pub runs: Option<usize>,
    pub tol: Option<f64>,
    pub obs: Vec<String>,
    pub format: Option<OutputFormat>,
    /// Contents of a record file to filter against (instead of simulating).
    pub record_in: Option<String>,
    /// Destination path for the simulated record (the caller writes it).
    pub record_out: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

type RunResult = Result<(Vec<f64>, Trajectory), String>;

pub struct FilterOutput {
    pub payload: String,
    /// First run's record, when `--record-out` asked for it.
    pub record_csv: Option<String>,
}

fn compile_text(text: &str) -> Result<CompiledNetlist, CliError> {
    let doc = parse_netlist(text).map_err(CliError::Diagnostics)?;
    compile(&doc).map_err(CliError::Diagnostics)
}

fn reduce_compiled(compiled: &CompiledNetlist) -> Result<ReducedNetwork, CliError> {
    let spec = compiled.build_network().map_err(CliError::Diagnostics)?;
    spec.reduce()
        .map_err(|e| CliError::Numerical(e.to_string()))
}

struct InvariantReport {
    lines: Vec<String>,
    failures: usize,
}

fn check_invariants(
    compiled: &CompiledNetlist,
    reduced: &ReducedNetwork,
    tol: f64,
) -> InvariantReport {
    let mut lines = Vec::new();
    let mut failures = 0;
    let mut check_triple = |label: &str, triple: &SlhTriple, exempt: bool| {
        if triple.channels() > 0 {
            match triple.scattering().is_unitary(tol) {
                Ok(true) => lines.push(format!("{label}: S unitary within {tol:.1e}: PASS")),
                Ok(false) | Err(_) => {
                    failures += 1;
                    lines.push(format!("{label}: S unitary within {tol:.1e}: FAIL"));
                }
            }
        }
        let dev = triple
            .hamiltonian()
            .max_abs_diff(&triple.hamiltonian().dagger());
        if dev <= tol {
            lines.push(format!("{label}: H self-adjoint (dev {dev:.3e}): PASS"));
        } else if exempt {
            lines.push(format!(
                "{label}: H self-adjoint (dev {dev:.3e}): WARN (grid boundary rows, expected)"
            ));
        } else {
            failures += 1;
            lines.push(format!("{label}: H self-adjoint (dev {dev:.3e}): FAIL"));
        }
    };
    for component in &compiled.components {
        check_triple(
            &format!("component {}", component.name),
            &component.triple,
            component.boundary_exempt,
        );
    }
    let any_exempt = compiled.components.iter().any(|c| c.boundary_exempt);
    check_triple("reduced network", &reduced.triple, any_exempt);
    InvariantReport { lines, failures }
}

fn require_valid(compiled: &CompiledNetlist, reduced: &ReducedNetwork, tol: f64) -> Result<(), CliError> {
    let report = check_invariants(compiled, reduced, tol);
    if report.failures > 0 {
        let failing: Vec<String> = report
            .lines
            .into_iter()
            .filter(|l| l.ends_with("FAIL"))
            .collect();
        return Err(CliError::Numerical(format!(
            "invariant check failed:\n{}",
            failing.join("\n")
        )));
    }
    Ok(())
}

fn resolve_observables(
    compiled: &CompiledNetlist,
    opts: &CommandOptions,
) -> Result<Vec<(String, Operator)>, CliError> {
    let ctx = EvalContext::of(compiled);
    let mut out = Vec::new();
    if !opts.obs.is_empty() {
        for text in &opts.obs {
            let expr = parse_expression(text).map_err(CliError::Diagnostics)?;
            let op = eval_expr(&ctx, &expr).map_err(|d| CliError::Diagnostics(vec![d]))?;
            out.push((text.replace(char::is_whitespace, ""), op));
        }
    } else {
        for (name, expr) in &compiled.run.obs {
            let op = eval_expr(&ctx, expr).map_err(|d| CliError::Diagnostics(vec![d]))?;
            out.push((name.clone(), op));
        }
    }
    Ok(out)
}

fn tolerance(compiled: &CompiledNetlist, opts: &CommandOptions) -> f64 {
    opts.tol.or(compiled.run.tol).unwrap_or(DEFAULT_TOL)
}

/// `slhnet reduce FILE`: emit `{channels, signature, S, L, H, chain_report}`.
pub fn cmd_reduce(text: &str, opts: &CommandOptions) -> Result<String, CliError> {
    if opts.format == Some(OutputFormat::Csv) {
        return Err(CliError::usage("reduce only supports --format json"));
    }
    let compiled = compile_text(text)?;
    let reduced = reduce_compiled(&compiled)?;
    require_valid(&compiled, &reduced, tolerance(&compiled, opts))?;
    let json = triple_to_json(&reduced.triple, Some(&reduced.report));
    serde_json::to_string_pretty(&json).map_err(|e| CliError::Numerical(e.to_string()))
}

/// `slhnet heisenberg FILE --obs EXPR`: Itô coefficients of an observable.
pub fn cmd_heisenberg(text: &str, opts: &CommandOptions) -> Result<String, CliError> {
    if opts.format == Some(OutputFormat::Csv) {
        return Err(CliError::usage("heisenberg only supports --format json"));
    }
    let compiled = compile_text(text)?;
    let reduced = reduce_compiled(&compiled)?;
    require_valid(&compiled, &reduced, tolerance(&compiled, opts))?;
    let observables = resolve_observables(&compiled, opts)?;
    let (_, x) = observables
        .first()
        .ok_or_else(|| CliError::usage("heisenberg needs an operator: pass --obs EXPR"))?;
    let coeff = heisenberg_coefficients(&reduced.triple, x);
    let sig = coeff.drift.signature().clone();
    let json = heisenberg_to_json(&coeff, &sig, reduced.triple.channels());
    serde_json::to_string_pretty(&json).map_err(|e| CliError::Numerical(e.to_string()))
}

fn trajectory_csv(names: &[String], traj: &Trajectory) -> String {
    let mut out = String::from("t");
    for name in names {
        out.push_str(&format!(",{name}_re,{name}_im"));
    }
    out.push('\n');
    for (k, t) in traj.times.iter().enumerate() {
        out.push_str(&format!("{t:?}"));
        for j in 0..names.len() {
            let v = traj.expectations[k][j];
            out.push_str(&format!(",{:?},{:?}", v.re, v.im));
        }
        out.push('\n');
    }
    out
}

fn trajectory_json(names: &[String], traj: &Trajectory) -> String {
    let columns: Vec<serde_json::Value> = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            serde_json::json!({
                "name": name,
                "re": traj.expectations.iter().map(|e| e[j].re).collect::<Vec<_>>(),
                "im": traj.expectations.iter().map(|e| e[j].im).collect::<Vec<_>>(),
            })
        })
        .collect();
    serde_json::json!({
        "times": traj.times,
        "norms": traj.norms,
        "observables": columns,
    })
    .to_string()
}

/// `slhnet simulate FILE --dt DT --T T [--obs EXPR]...`: master-equation run.
pub fn cmd_simulate(text: &str, opts: &CommandOptions) -> Result<String, CliError> {
    let compiled = compile_text(text)?;
    let reduced = reduce_compiled(&compiled)?;
    require_valid(&compiled, &reduced, tolerance(&compiled, opts))?;
    let dt = opts
        .dt
        .or(compiled.run.dt)
        .ok_or_else(|| CliError::usage("simulate needs --dt (or dt in the run block)"))?;
    let t_final = opts
        .t_final
        .or(compiled.run.t_final)
        .ok_or_else(|| CliError::usage("simulate needs --T (or T in the run block)"))?;
    let observables = resolve_observables(&compiled, opts)?;
    let sig = reduced.triple.signature().clone();
    let rho0 = compiled
        .build_state(&sig)
        .map_err(|d| CliError::Diagnostics(vec![d]))?;
    let ops: Vec<Operator> = observables.iter().map(|(_, op)| op.clone()).collect();
    let traj = evolve_master(&reduced.triple, &rho0, dt, t_final, &ops)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let names: Vec<String> = observables.into_iter().map(|(n, _)| n).collect();
    Ok(match opts.format {
        Some(OutputFormat::Json) => trajectory_json(&names, &traj),
        _ => trajectory_csv(&names, &traj),
    })
}

fn read_record_csv(text: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line == "dy") {
            continue;
        }
        out.push(line.parse::<f64>().map_err(|e| {
            CliError::usage(format!("record line {}: {e}", i + 1))
        })?);
    }
    if out.is_empty() {
        return Err(CliError::usage("record file has no increments"));
    }
    Ok(out)
}

fn record_csv(record: &[f64]) -> String {
    let mut out = String::from("dy\n");
    for dy in record {
        out.push_str(&format!("{dy:?}\n"));
    }
    out
}

fn worker_count(runs: usize) -> usize {
    let default = thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let cap = env::var("SLHNET_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(default);
    cap.min(runs).max(1)
}

/// `slhnet filter FILE --channel K --seed N --dt DT --T T [--runs N]`:
/// homodyne record simulation + unnormalized quantum filter.
///
/// Output columns: `t`, the filter normalization `sigma1 = tr(ρ̃)`, then the
/// normalized estimate `π_t(X)` per observable — averaged over `--runs`
/// independent seeded records (`seed + run_index`).
pub fn cmd_filter(text: &str, opts: &CommandOptions) -> Result<FilterOutput, CliError> {
    let compiled = compile_text(text)?;
    let reduced = reduce_compiled(&compiled)?;
    require_valid(&compiled, &reduced, tolerance(&compiled, opts))?;
    let dt = opts
        .dt
        .or(compiled.run.dt)
        .ok_or_else(|| CliError::usage("filter needs --dt (or dt in the run block)"))?;
    let t_final = opts
        .t_final
        .or(compiled.run.t_final)
        .ok_or_else(|| CliError::usage("filter needs --T (or T in the run block)"))?;
    let channel = opts.channel.or(compiled.run.channel).unwrap_or(0);
    let seed = opts.seed.or(compiled.run.seed).unwrap_or(0);
    let runs = opts.runs.or(compiled.run.runs).unwrap_or(1).max(1);
    let observables = resolve_observables(&compiled, opts)?;
    let sig = reduced.triple.signature().clone();
    let rho0 = compiled
        .build_state(&sig)
        .map_err(|d| CliError::Diagnostics(vec![d]))?;
    let ops: Vec<Operator> = observables.iter().map(|(_, op)| op.clone()).collect();
    let names: Vec<String> = observables.iter().map(|(n, _)| n.clone()).collect();
    let triple = &reduced.triple;

    let run_one = |run_seed: u64, fixed: Option<&[f64]>| -> RunResult {
        let record = match fixed {
            Some(r) => r.to_vec(),
            None => simulate_record(triple, channel, &rho0, dt, t_final, run_seed)
                .map_err(|e| e.to_string())?,
        };
        let traj =
            evolve_zakai(triple, channel, &rho0, &record, dt, &ops).map_err(|e| e.to_string())?;
        Ok((record, traj))
    };

    let results: Vec<RunResult> = if let Some(path_text) =
        &opts.record_in
    {
        let record = read_record_csv(path_text)?;
        vec![run_one(seed, Some(&record))]
    } else if runs == 1 {
        vec![run_one(seed, None)]
    } else {
        let workers = worker_count(runs);
        let mut slots: Vec<Option<RunResult>> =
            (0..runs).map(|_| None).collect();
        thread::scope(|scope| {
            for (w, chunk) in slots.chunks_mut(runs.div_ceil(workers)).enumerate() {
                let run_one = &run_one;
                let base = w * runs.div_ceil(workers);
                scope.spawn(move || {
                    for (k, slot) in chunk.iter_mut().enumerate() {
                        *slot = Some(run_one(seed + (base + k) as u64, None));
                    }
                });
            }
        });
        slots.into_iter().map(|s| s.expect("all runs filled")).collect()
    };

    let mut trajectories = Vec::with_capacity(results.len());
    let mut first_record = None;
    for r in results {
        let (record, traj) = r.map_err(CliError::Numerical)?;
        if first_record.is_none() {
            first_record = Some(record);
        }
        trajectories.push(traj);
    }

    // average sigma1 and the normalized estimates across runs
    let steps = trajectories[0].times.len();
    let mut mean = Trajectory {
        times: trajectories[0].times.clone(),
        expectations: vec![vec![num_complex::Complex64::ZERO; names.len()]; steps],
        norms: vec![0.0; steps],
        states: Vec::new(),
    };
    let m = trajectories.len() as f64;
    for traj in &trajectories {
        for k in 0..steps {
            mean.norms[k] += traj.norms[k] / m;
            for j in 0..names.len() {
                mean.expectations[k][j] +=
                    traj.expectations[k][j] / num_complex::Complex64::from(traj.norms[k] * m);
            }
        }
    }

    // the mean trajectory already holds normalized estimates
    let payload = match opts.format {
        Some(OutputFormat::Json) => trajectory_json(&names, &mean),
        _ => {
            let mut csv = String::from("t,sigma1");
            for name in &names {
                csv.push_str(&format!(",{name}_re,{name}_im"));
            }
            csv.push('\n');
            for k in 0..steps {
                csv.push_str(&format!("{:?}", mean.times[k]));
                csv.push_str(&format!(",{:?}", mean.norms[k]));
                for j in 0..names.len() {
                    csv.push_str(&format!(
                        ",{:?},{:?}",
                        mean.expectations[k][j].re, mean.expectations[k][j].im
                    ));
                }
                csv.push('\n');
            }
            csv
        }
    };
    let record_csv = if opts.record_out.is_some() {
        first_record.map(|r| record_csv(&r))
    } else {
        None
    };
    Ok(FilterOutput {
        payload,
        record_csv,
    })
}

/// `slhnet check FILE`: diagnostics plus an invariant report.
///
/// Returns the report and whether every invariant passed.
pub fn cmd_check(text: &str, opts: &CommandOptions) -> Result<(String, bool), CliError> {
    let compiled = compile_text(text)?;
    let reduced = reduce_compiled(&compiled)?;
    let tol = tolerance(&compiled, opts);
    let report = check_invariants(&compiled, &reduced, tol);
    let mut out = String::new();
    out.push_str(&format!(
        "netlist: {} component(s), {} connection group(s), {} coupling(s)\n",
        compiled.components.len(),
        compiled.connections.len(),
        compiled.couplings.len()
    ));
    out.push_str(&format!(
        "reduced network: {} channel(s), signature `{}`\n",
        reduced.triple.channels(),
        reduced.triple.signature()
    ));
    for chain in &reduced.report.chains {
        out.push_str(&format!("chain: {}\n", chain.join(" -> ")));
    }
    if !reduced.report.unconnected.is_empty() {
        out.push_str(&format!(
            "unconnected: {}\n",
            reduced.report.unconnected.join(", ")
        ));
    }
    out.push_str(&format!(
        "direct coupling: {}\n",
        if reduced.report.direct_coupling {
            "yes"
        } else {
            "no"
        }
    ));
    for line in &report.lines {
        out.push_str(line);
        out.push('\n');
    }
    let ok = report.failures == 0;
    out.push_str(if ok { "check: PASS\n" } else { "check: FAIL\n" });
    Ok((out, ok))
}
