//! The `validate` task: invariant suites for the configured model.

use std::fmt::Write as _;

use smk_core::exec::Execution;
use smk_core::kolmogorov::{build_generator, SolutionGrid};
use smk_core::laplace::{oracle_solution_with, InversionConfig};
use smk_core::samplers::RngStream;
use smk_core::semi_markov::{empirical_marginal_with, SemiMarkovModel};
use smk_core::SmkError;

use crate::config::{capability_error, SolveMethod};
use crate::error::CliError;
use crate::output::Metadata;
use crate::tasks::{solve, TaskOutput};

const ORACLE_POINTS: usize = 10;
const SOLVER_VS_ORACLE: f64 = 5e-3;
const EXPM_VS_ORACLE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

fn max_gap(a: &SolutionGrid, oracle: &SolutionGrid) -> f64 {
    let mut gap: f64 = 0.0;
    for (t, m) in oracle.times.iter().zip(&oracle.values) {
        let k = a.index_near(*t);
        gap = gap.max((&a.values[k] - m).amax());
    }
    gap
}

fn table(checks: &[Check]) -> String {
    let w = checks
        .iter()
        .map(|c| c.name.len())
        .max()
        .unwrap_or(5)
        .max(5);
    let mut s = format!(
        "{:<w$}  status  {:>10}  {:>10}\n",
        "check", "value", "tolerance"
    );
    for c in checks {
        let _ = writeln!(
            s,
            "{:<w$}  {:<6}  {:>10.3e}  {:>10.1e}",
            c.name,
            if c.passed { "pass" } else { "FAIL" },
            c.value,
            c.tolerance
        );
    }
    s
}

#[allow(clippy::too_many_arguments)]
pub fn run_validate(
    model: &SemiMarkovModel,
    t_max: f64,
    dt: f64,
    n_paths: usize,
    x0: usize,
    rng: &RngStream,
    exec: Execution,
    meta: &Metadata,
) -> Result<TaskOutput, CliError> {
    let n = model.n_states();
    let mut checks = Vec::new();

    let h_defect = (0..n)
        .map(|i| (model.h_row(i).iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("H rows sum to 1", h_defect, 1e-12));
    checks.push(Check::at_most(
        "generator rows sum to 0",
        build_generator(model).row_sum_defect(),
        1e-12,
    ));

    let times: Vec<f64> = (0..=ORACLE_POINTS)
        .map(|k| t_max * k as f64 / ORACLE_POINTS as f64)
        .collect();
    let oracle = oracle_solution_with(model, &times, InversionConfig::talbot(), exec)?;
    let (rows, range) = oracle.stochasticity_defect();
    checks.push(Check::at_most("oracle rows sum to 1", rows, 1e-6));
    checks.push(Check::at_most("oracle entries in [0, 1]", range, 1e-6));

    for method in [
        SolveMethod::Renewal,
        SolveMethod::VolterraCaputo,
        SolveMethod::Evolutionary,
        SolveMethod::MatrixExp,
    ] {
        if capability_error(method, model).is_some() {
            continue;
        }
        let grid = match solve(model, method, t_max, dt, 1, exec) {
            Ok(g) => g,
            Err(e @ SmkError::NonConvergence { .. }) => return Err(e.into()),
            Err(_) => {
                checks.push(Check {
                    name: format!("{} runs", method.name()),
                    value: f64::NAN,
                    tolerance: 0.0,
                    passed: false,
                });
                continue;
            }
        };
        let (rows, range) = grid.stochasticity_defect();
        let row_tol = grid.dt.map_or(1e-9, |dt| 10.0 * dt);
        checks.push(Check::at_most(
            format!("{} rows sum to 1", method.name()),
            rows,
            row_tol,
        ));
        checks.push(Check::at_most(
            format!("{} entries in [0, 1]", method.name()),
            range,
            1e-6,
        ));
        let tol = if method == SolveMethod::MatrixExp {
            EXPM_VS_ORACLE
        } else {
            SOLVER_VS_ORACLE
        };
        checks.push(Check::at_most(
            format!("{} vs oracle", method.name()),
            max_gap(&grid, &oracle),
            tol,
        ));
    }

    let m = empirical_marginal_with(model, x0, t_max, n_paths, rng, exec)?;
    let exact = oracle.last();
    let z = (0..n)
        .map(|j| {
            let p = exact[(x0, j)].clamp(0.0, 1.0);
            let se = (p * (1.0 - p) / n_paths as f64)
                .sqrt()
                .max(1.0 / n_paths as f64);
            (m.probabilities[j] - p).abs() / se
        })
        .fold(0.0, f64::max);
    checks.push(Check::at_most("Monte Carlo marginal vs oracle (z)", z, 4.0));

    let mut text = meta.comment_block();
    text.push_str(&table(&checks));
    let failed = checks.iter().filter(|c| !c.passed).count();
    Ok(TaskOutput {
        bytes: text.into_bytes(),
        summary: format!(
            "validate: {} of {} checks passed",
            checks.len() - failed,
            checks.len()
        ),
        failure: (failed > 0).then_some(CliError::ChecksFailed {
            failed,
            total: checks.len(),
        }),
    })
}
