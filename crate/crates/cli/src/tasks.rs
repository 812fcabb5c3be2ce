//! Task runners. Each returns the bytes to write.

use smk_core::exec::{try_map_indexed, Execution};
use smk_core::kolmogorov::{
    solve_evolutionary_with, solve_markov, solve_renewal_with, solve_volterra_caputo_with, Record,
    SolutionGrid, SolverOptions,
};
use smk_core::laplace::{oracle_solution_with, InversionConfig};
use smk_core::limits::run_limit;
use smk_core::samplers::RngStream;
use smk_core::semi_markov::{
    empirical_marginal_with, simulate_path, simulate_time_change, SemiMarkovModel,
};
use smk_core::SmkError;

use crate::config::{Construction, RunConfig, SolveMethod, Task};
use crate::error::CliError;
use crate::output::{json_report, num, Csv, Metadata};
use crate::validate::run_validate;

/// Exact-by-construction rows (Monte Carlo frequencies, matrix exponential).
const TIGHT_ROW_TOL: f64 = 1e-9;
/// Laplace inversion rows.
const ORACLE_ROW_TOL: f64 = 1e-6;

pub struct TaskOutput {
    pub bytes: Vec<u8>,
    /// One-line summary for the terminal.
    pub summary: String,
    /// `Some` for `validate` when checks failed.
    pub failure: Option<CliError>,
}

pub fn metadata(cfg: &RunConfig) -> Metadata {
    let method = match &cfg.task {
        Task::Solve { method, .. } => Some(method.name().to_string()),
        Task::Oracle { inversion, .. } => cfg
            .model
            .as_ref()
            .map(|m| inversion_name(inversion.for_model(m))),
        Task::Simulate { construction, .. } => Some(
            match construction {
                Construction::Direct => "direct",
                Construction::TimeChange => "time_change",
            }
            .to_string(),
        ),
        Task::Limit { experiment } => Some(
            serde_json::to_value(experiment.kind)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
        ),
        _ => None,
    };
    Metadata {
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: cfg.config_sha256.clone(),
        seed: cfg.seed,
        task: cfg.task.name(),
        method,
    }
}

fn inversion_name(c: InversionConfig) -> String {
    match c {
        InversionConfig::Talbot { nodes } => format!("talbot({nodes})"),
        InversionConfig::GaverStehfest { order } => format!("gaver_stehfest({order})"),
    }
}

pub fn execute(cfg: &RunConfig, exec: Execution) -> Result<TaskOutput, CliError> {
    let meta = metadata(cfg);
    let rng = RngStream::new(cfg.seed, 0);
    let model = || cfg.model.as_ref().expect("validated: model present");
    match &cfg.task {
        Task::Simulate {
            x0,
            horizon,
            n_paths,
            construction,
        } => simulate(
            model(),
            *x0,
            *horizon,
            *n_paths,
            *construction,
            &rng,
            exec,
            &meta,
        ),
        Task::Marginal { x0, times, n_paths } => {
            marginal(model(), *x0, times, *n_paths, &rng, exec, &meta)
        }
        Task::Solve {
            method,
            t_max,
            dt,
            record_every,
        } => {
            let grid = solve(model(), *method, *t_max, *dt, *record_every, exec)?;
            match method {
                SolveMethod::MatrixExp => grid.check_stochastic(TIGHT_ROW_TOL, TIGHT_ROW_TOL)?,
                _ => grid.check_invariants()?,
            }
            Ok(grid_output(&grid, &meta))
        }
        Task::Oracle { times, inversion } => {
            let grid = oracle_solution_with(model(), times, *inversion, exec)?;
            grid.check_stochastic(ORACLE_ROW_TOL, ORACLE_ROW_TOL)?;
            Ok(grid_output(&grid, &meta))
        }
        Task::Limit { experiment } => {
            let report = run_limit(experiment, &rng, exec)?;
            if report.reference_row_sum_defect > ORACLE_ROW_TOL {
                return Err(SmkError::OutOfRange(format!(
                    "reference law sums to 1 only within {:.3e}",
                    report.reference_row_sum_defect
                ))
                .into());
            }
            let summary = format!(
                "limit: TV {} across scales, verdict {}",
                report
                    .scales
                    .iter()
                    .map(|s| format!("{:.4}", s.tv_distance))
                    .collect::<Vec<_>>()
                    .join(" -> "),
                if report.verdict { "pass" } else { "fail" }
            );
            let value =
                serde_json::to_value(&report).map_err(|e| CliError::Output(e.to_string()))?;
            Ok(TaskOutput {
                bytes: json_report(&meta, value),
                summary,
                failure: None,
            })
        }
        Task::Validate {
            t_max,
            dt,
            n_paths,
            x0,
        } => run_validate(model(), *t_max, *dt, *n_paths, *x0, &rng, exec, &meta),
    }
}

pub fn solve(
    model: &SemiMarkovModel,
    method: SolveMethod,
    t_max: f64,
    dt: f64,
    record_every: usize,
    exec: Execution,
) -> Result<SolutionGrid, SmkError> {
    let record = if record_every > 1 {
        Record::Every(record_every)
    } else {
        Record::All
    };
    let opts = SolverOptions { record, exec };
    match method {
        SolveMethod::Renewal => solve_renewal_with(model, t_max, dt, opts),
        SolveMethod::VolterraCaputo => solve_volterra_caputo_with(model, t_max, dt, opts),
        SolveMethod::Evolutionary => solve_evolutionary_with(model, t_max, dt, opts),
        SolveMethod::MatrixExp => {
            let steps = (t_max / dt).round().max(1.0) as usize;
            let times: Vec<f64> = (0..=steps)
                .filter(|k| k % record_every == 0 || *k == steps)
                .map(|k| t_max * k as f64 / steps as f64)
                .collect();
            solve_markov(model, &times)
        }
    }
}

fn grid_output(grid: &SolutionGrid, meta: &Metadata) -> TaskOutput {
    let n = grid.n_states();
    let mut header = vec!["t".to_string()];
    for i in 0..n {
        for j in 0..n {
            header.push(format!("pi_{i}_{j}"));
        }
    }
    let mut csv = Csv::new(meta, &header);
    for (t, m) in grid.times.iter().zip(&grid.values) {
        let mut row = Vec::with_capacity(1 + n * n);
        row.push(num(*t));
        for i in 0..n {
            for j in 0..n {
                row.push(num(m[(i, j)]));
            }
        }
        csv.row(&row);
    }
    TaskOutput {
        bytes: csv.into_bytes(),
        summary: format!(
            "{}: {} grid points, {n} states",
            grid.method.name(),
            grid.len()
        ),
        failure: None,
    }
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    model: &SemiMarkovModel,
    x0: usize,
    horizon: f64,
    n_paths: usize,
    construction: Construction,
    rng: &RngStream,
    exec: Execution,
    meta: &Metadata,
) -> Result<TaskOutput, CliError> {
    let paths = try_map_indexed(exec, n_paths, |k| {
        let mut r = rng.substream(k as u64);
        match construction {
            Construction::Direct => simulate_path(model, x0, horizon, &mut r),
            Construction::TimeChange => simulate_time_change(model, x0, horizon, &mut r),
        }
    })?;
    let mut csv = Csv::new(meta, &["path".into(), "epoch".into(), "state".into()]);
    let mut jumps = 0;
    for (k, p) in paths.iter().enumerate() {
        jumps += p.n_jumps();
        for (e, s) in p.epochs.iter().zip(&p.states) {
            csv.row(&[k.to_string(), num(*e), s.to_string()]);
        }
    }
    Ok(TaskOutput {
        bytes: csv.into_bytes(),
        summary: format!("simulate: {n_paths} paths, {jumps} jumps before t = {horizon}"),
        failure: None,
    })
}

fn marginal(
    model: &SemiMarkovModel,
    x0: usize,
    times: &[f64],
    n_paths: usize,
    rng: &RngStream,
    exec: Execution,
    meta: &Metadata,
) -> Result<TaskOutput, CliError> {
    let n = model.n_states();
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|j| format!("p_{j}")));
    header.extend((0..n).map(|j| format!("se_{j}")));
    let mut csv = Csv::new(meta, &header);
    for (k, &t) in times.iter().enumerate() {
        let m = empirical_marginal_with(model, x0, t, n_paths, &rng.substream(k as u64), exec)?;
        let s: f64 = m.probabilities.iter().sum();
        if (s - 1.0).abs() > TIGHT_ROW_TOL {
            return Err(
                SmkError::OutOfRange(format!("empirical marginal at t = {t} sums to {s}")).into(),
            );
        }
        let mut row = vec![num(t)];
        row.extend(m.probabilities.iter().map(|&p| num(p)));
        row.extend(m.std_errors.iter().map(|&p| num(p)));
        csv.row(&row);
    }
    Ok(TaskOutput {
        bytes: csv.into_bytes(),
        summary: format!("marginal: {} times, {n_paths} paths each", times.len()),
        failure: None,
    })
}
