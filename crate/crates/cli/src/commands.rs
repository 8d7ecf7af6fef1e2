use std::fs;
use std::time::Instant;

use anyhow::{anyhow, Context as _};
use fair_assort::constrained::{oracle_bruteforce, solve_bms_constrained, ConstraintFamily, OracleError};
use fair_assort::experiment::{run_experiment, CellResult, ExperimentConfig};
use fair_assort::policy::{heuristic_policy, PolicyError, PolicySpec, ALPHA_ONE_TOL};
use fair_assort::simulate::SimError;
use fair_assort::static_solver::gap_bounds;
use fair_assort::upper_bound::{UpperBoundError, UpperBoundSolution, EXACT_N_MAX};
use fair_assort::{
    audit_balancing, generate, make_gap_instance, sales_to_distribution, solve_bms,
    solve_bms_deterministic, solve_upper_bound_alpha1, solve_upper_bound_exact,
    solve_upper_bound_fptas, DynamicInstance, GenConfig, Instance, PolicyKind, SalesVector,
    SamplingMode, SimulationConfig,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::io::{
    json_arg, print_json, read_json, Failure, Outcome, EXIT_BOUND, EXIT_FAILURE, EXIT_INFEASIBLE,
    EXIT_MALFORMED,
};
use crate::tables;
use crate::{BuildPolicy, Experiment, Gap, GenInstance, Kind, Mode, Simulate, SolveConstrained, SolveStatic, UpperBound};

pub struct Context {
    pub quiet: bool,
    pub json: bool,
}

impl Context {
    fn warn(&self, msg: impl std::fmt::Display) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

fn with_distribution(inst: &Instance, xs: &SalesVector, mut out: Value) -> Result<Value, Failure> {
    let dist = sales_to_distribution(inst, xs).context("building the assortment distribution")?;
    out["distribution"] = serde_json::to_value(dist).context("serializing distribution")?;
    Ok(out)
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, Failure> {
    Ok(serde_json::to_value(v).context("serializing output")?)
}

pub fn solve_static(ctx: &Context, a: &SolveStatic) -> Outcome {
    let inst: Instance = read_json(&a.instance, "instance")?;
    if let Some(spec) = &a.constraint {
        return constrained(ctx, &inst, spec, a.brute, a.emit_distribution);
    }
    if a.deterministic {
        return print_json(&solve_bms_deterministic(&inst));
    }
    if a.brute {
        return constrained(ctx, &inst, "\"all\"", true, a.emit_distribution);
    }
    let sol = solve_bms(&inst);
    let mut out = to_value(&sol)?;
    if a.emit_distribution {
        out = with_distribution(&inst, &sol.xs, out)?;
    }
    print_json(&out)
}

pub fn solve_constrained(ctx: &Context, a: &SolveConstrained) -> Outcome {
    let inst: Instance = read_json(&a.instance, "instance")?;
    constrained(ctx, &inst, &a.constraint, a.brute, a.emit_distribution)
}

fn constrained(_ctx: &Context, inst: &Instance, spec: &str, brute: bool, emit: bool) -> Outcome {
    let family: ConstraintFamily = json_arg(spec, "constraint family")?;
    family
        .validate(inst.n())
        .map_err(|e| Failure::new(EXIT_MALFORMED, e))?;
    let result = if brute {
        let pred = family.clone();
        let oracle = oracle_bruteforce(move |s: &[usize]| pred.admits(s), 20);
        solve_bms_constrained(inst, &oracle)
    } else {
        solve_bms_constrained(inst, family.oracle(20).as_ref())
    };
    let sol = result.map_err(|e| match e {
        OracleError::InvalidFamily(_) => Failure::new(EXIT_MALFORMED, e),
        e => Failure::new(EXIT_FAILURE, e),
    })?;
    if !sol.feasible {
        return Err(Failure::new(
            EXIT_INFEASIBLE,
            anyhow!("no nonempty assortment of the family can be offered under the balancing constraint"),
        ));
    }
    let mut out = to_value(&sol)?;
    if emit {
        out = with_distribution(inst, &sol.xs, out)?;
    }
    print_json(&out)
}

fn ub_failure(e: UpperBoundError) -> Failure {
    match e {
        UpperBoundError::Lp { .. } => Failure::new(EXIT_FAILURE, e),
        e => Failure::new(EXIT_MALFORMED, e),
    }
}

fn policy_failure(e: PolicyError) -> Failure {
    match e {
        PolicyError::Epsilon(_) | PolicyError::Dimension { .. } => Failure::new(EXIT_MALFORMED, e),
        PolicyError::UpperBound(e) => ub_failure(e),
        e => Failure::new(EXIT_FAILURE, e),
    }
}

pub fn upper_bound(_ctx: &Context, a: &UpperBound) -> Outcome {
    let d: DynamicInstance = read_json(&a.instance, "dynamic instance")?;
    let sol = if a.alpha1 {
        solve_upper_bound_alpha1(&d)
    } else if a.exact {
        solve_upper_bound_exact(&d, a.n_max)
    } else {
        solve_upper_bound_fptas(&d, a.eps)
    }
    .map_err(ub_failure)?;
    print_json(&sol)
}

/// Relaxation used to start the heuristics and to normalize revenue.
fn relaxation(d: &DynamicInstance, eps: f64) -> Result<UpperBoundSolution, Failure> {
    if (d.alpha() - 1.0).abs() <= ALPHA_ONE_TOL {
        solve_upper_bound_alpha1(d)
    } else if d.n() <= EXACT_N_MAX {
        solve_upper_bound_exact(d, EXACT_N_MAX)
    } else {
        solve_upper_bound_fptas(d, (eps / 2.0).min(0.25))
    }
    .map_err(ub_failure)
}

fn make_policy(d: &DynamicInstance, kind: Kind, eps: f64) -> Result<PolicySpec, Failure> {
    match kind {
        Kind::Policy => fair_assort::build_policy(d, eps).map_err(policy_failure),
        Kind::Heuristic1 | Kind::Heuristic2 => {
            let x = relaxation(d, eps)?.xs.x;
            let kind = if kind == Kind::Heuristic1 { PolicyKind::Heuristic1 } else { PolicyKind::Heuristic2 };
            heuristic_policy(d, &x, kind).map_err(policy_failure)
        }
    }
}

pub fn build_policy(_ctx: &Context, a: &BuildPolicy) -> Outcome {
    let d: DynamicInstance = read_json(&a.instance, "dynamic instance")?;
    print_json(&make_policy(&d, a.kind, a.eps)?)
}

pub fn simulate(_ctx: &Context, a: &Simulate) -> Outcome {
    let d: DynamicInstance = read_json(&a.instance, "dynamic instance")?;
    let spec = match &a.policy {
        Some(path) => read_json(path, "policy")?,
        None => make_policy(&d, a.kind, a.eps)?,
    };
    let ub = relaxation(&d, a.eps)?.objective;
    let cfg = SimulationConfig {
        replicates: a.replicates,
        seed: a.seed,
        mode: match a.mode {
            Mode::Direct => SamplingMode::Direct,
            Mode::Assortment => SamplingMode::Assortment,
        },
        upper_bound: Some(ub),
        keep_trajectories: a.trajectories,
    };
    let report = fair_assort::simulate(&d, &spec, &cfg).map_err(|e| match e {
        SimError::NoReplicates | SimError::Dimension { .. } => Failure::new(EXIT_MALFORMED, e),
        e => Failure::new(EXIT_FAILURE, e),
    })?;
    let audit = audit_balancing(&report, d.alpha(), None);
    print_json(&json!({ "upper_bound": ub, "report": report, "audit": audit }))
}

pub fn gen_instance(_ctx: &Context, a: &GenInstance) -> Outcome {
    let cfg = GenConfig {
        n: a.n,
        horizon: a.horizon,
        p0: a.p0,
        gamma: a.gamma,
        alpha: a.alpha,
        seed: a.seed,
    };
    let d = generate(&cfg).map_err(|e| Failure::new(EXIT_MALFORMED, e))?;
    match &a.output {
        Some(path) => {
            let text = serde_json::to_string_pretty(&d).context("serializing instance")?;
            fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
            Ok(())
        }
        None => print_json(&d),
    }
}

pub fn experiment(ctx: &Context, a: &Experiment) -> Outcome {
    let cfg = match (&a.config, a.paper_scale) {
        (Some(path), _) => read_json(path, "experiment config")?,
        (None, true) => {
            ctx.warn("warning: the paper-scale grid simulates 40-product instances up to T = 16000 and can take hours");
            ExperimentConfig::paper()
        }
        (None, false) => ExperimentConfig::desk(),
    };
    if cfg.replicates == 0 || cfg.n == 0 || !(cfg.eps > 0.0 && cfg.eps < 0.5) {
        return Err(Failure::new(EXIT_MALFORMED, anyhow!("config needs n ≥ 1, replicates ≥ 1 and eps in (0, 1/2)")));
    }
    let start = Instant::now();
    let results = run_experiment(&cfg);
    let mut ok: Vec<CellResult> = Vec::new();
    let mut failed = 0;
    for (cell, r) in &results {
        match r {
            Ok(res) => ok.push(res.clone()),
            Err(e) => {
                failed += 1;
                eprintln!(
                    "cell T={} p0={} gamma={} alpha={} seed={} failed: {e}",
                    cell.horizon, cell.p0, cell.gamma, cell.alpha, cell.seed
                );
            }
        }
    }
    ctx.warn(format!(
        "{} cells, {failed} failed, {:.1}s",
        results.len(),
        start.elapsed().as_secs_f64()
    ));

    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        tables::write_table(fs::File::create(dir.join("table1.csv"))?, &ok, tables::Table::Revenue)?;
        tables::write_table(fs::File::create(dir.join("table2.csv"))?, &ok, tables::Table::Balance)?;
        let text = serde_json::to_string_pretty(&json_results(&results)).context("serializing results")?;
        fs::write(dir.join("results.json"), text + "\n")?;
    }
    if ctx.json {
        print_json(&json_results(&results))?;
    } else {
        let table = if a.table == 1 { tables::Table::Revenue } else { tables::Table::Balance };
        tables::write_table(std::io::stdout().lock(), &ok, table)?;
    }
    if failed > 0 {
        return Err(Failure::new(EXIT_FAILURE, anyhow!("{failed} of {} cells failed", results.len())));
    }
    Ok(())
}

type CellRun = (fair_assort::experiment::Cell, Result<CellResult, fair_assort::experiment::ExperimentError>);

fn json_results(results: &[CellRun]) -> Vec<Value> {
    results
        .iter()
        .map(|(cell, r)| match r {
            Ok(res) => json!({ "cell": cell, "result": res }),
            Err(e) => json!({ "cell": cell, "error": e.to_string() }),
        })
        .collect()
}

#[derive(Serialize)]
struct GapRow {
    n: usize,
    alpha: f64,
    revenue: f64,
    revenue_deterministic: f64,
    ratio: f64,
    lower: f64,
    upper: f64,
    within_bounds: bool,
}

pub fn gap(ctx: &Context, a: &Gap) -> Outcome {
    let mut rows = Vec::new();
    for &alpha in &a.alpha {
        let g = make_gap_instance(a.n, alpha).map_err(|e| Failure::new(EXIT_MALFORMED, e))?;
        let revenue = solve_bms(&g).revenue;
        let revenue_deterministic = solve_bms_deterministic(&g).revenue;
        let ratio = revenue / revenue_deterministic;
        let (lower, upper) = gap_bounds(a.n, alpha);
        let within_bounds = ratio >= lower * (1.0 - 1e-9) && ratio <= upper * (1.0 + 1e-9);
        rows.push(GapRow { n: a.n, alpha, revenue, revenue_deterministic, ratio, lower, upper, within_bounds });
    }
    if ctx.json {
        print_json(&rows)?;
    } else {
        let mut w = csv::Writer::from_writer(std::io::stdout().lock());
        for row in &rows {
            w.serialize(row).context("writing CSV")?;
        }
        w.flush()?;
    }
    let bad: Vec<f64> = rows.iter().filter(|r| !r.within_bounds).map(|r| r.alpha).collect();
    if !bad.is_empty() {
        return Err(Failure::new(EXIT_BOUND, anyhow!("ratio outside the bounds at alpha = {bad:?}")));
    }
    Ok(())
}
