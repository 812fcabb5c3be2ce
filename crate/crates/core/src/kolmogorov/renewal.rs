//! Product integration of the backward renewal equation
//! `π(t) = F̄(t) I + ∫₀ᵗ f(s) H π(t − s) ds`, row by row.
//!
//! Over `[t_m, t_{m+1}]` the density is integrated exactly through the
//! survival increment `w_m = F̄(t_m) − F̄(t_{m+1})` and `Hπ(t_n − s)` is
//! replaced by the average of its endpoint values.

use nalgebra::DMatrix;

use crate::bernstein::{waiting_survival, WaitingTimeLaw};
use crate::error::{Result, SmkError};
use crate::semi_markov::SemiMarkovModel;

use super::engine::{grid_steps, sparse_rows, RowWeights, Scheme, SolverOptions, Source};
use super::{Method, SolutionGrid};

pub fn solve_renewal(model: &SemiMarkovModel, t_max: f64, dt: f64) -> Result<SolutionGrid> {
    solve_renewal_with(model, t_max, dt, SolverOptions::default())
}

pub fn solve_renewal_with(
    model: &SemiMarkovModel,
    t_max: f64,
    dt: f64,
    opts: SolverOptions,
) -> Result<SolutionGrid> {
    let (steps, dt) = grid_steps(t_max, dt)?;
    if steps < 100 {
        return Err(SmkError::InvalidParams(format!(
            "renewal solver needs dt ≤ t_max/100, got {steps} steps"
        )));
    }
    let n = model.n_states();

    // survival on the grid, computed once per distinct law
    let mut cache: Vec<(&WaitingTimeLaw, std::sync::Arc<Vec<f64>>)> = Vec::new();
    let mut survival = Vec::with_capacity(n);
    for i in 0..n {
        let law = model.law(i);
        if let Some((_, s)) = cache.iter().find(|(l, _)| *l == law) {
            survival.push(s.clone());
            continue;
        }
        let s = (0..=steps + 1)
            .map(|k| {
                waiting_survival(law, k as f64 * dt)
                    .map_err(|e| SmkError::KernelUnavailable(format!("state {i}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let s = std::sync::Arc::new(s);
        cache.push((law, s.clone()));
        survival.push(s);
    }

    let h = model.h_matrix();
    let mut a = DMatrix::identity(n, n);
    let mut rows = Vec::with_capacity(n);
    for (i, s) in survival.iter().enumerate() {
        let w: Vec<f64> = (0..=steps).map(|m| s[m] - s[m + 1]).collect();
        for k in 0..n {
            a[(i, k)] -= 0.5 * w[0] * h[(i, k)];
        }
        let mut conv = vec![0.0; steps + 1];
        for d in 1..=steps {
            conv[d] = 0.5 * (w[d] + w[d - 1]);
        }
        let mut first = vec![0.0; steps + 1];
        for m in 1..=steps {
            first[m] = 0.5 * w[m - 1];
        }
        rows.push(RowWeights {
            first,
            conv,
            second: Vec::new(),
            scale: 1.0,
            scale_first: None,
        });
    }
    let diag_survival = survival.clone();
    Scheme {
        method: Method::Renewal,
        dt,
        steps,
        a,
        a_first: None,
        rows,
        source: Source::Product(sparse_rows(&h)),
        diag: Box::new(move |i, step| diag_survival[i][step]),
        diag_first: None,
    }
    .run(opts)
}
