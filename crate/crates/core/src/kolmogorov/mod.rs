//! Backward equations on a finite state space.
//!
//! | solver                 | stable | mixture | drift (Markov) |
//! |------------------------|--------|---------|----------------|
//! | [`solve_renewal`]      | yes    | yes     | yes            |
//! | [`solve_volterra_caputo`] | yes | no      | yes            |
//! | [`solve_evolutionary`] | yes    | no      | yes            |
//! | [`solve_markov`]       | no     | no      | yes            |
//!
//! The time-stepping solvers share one stepper (see `engine`); each builds
//! its own per-row weights. Orders may differ between states.

mod caputo;
mod engine;
mod evolutionary;
mod grid;
mod markov;
mod renewal;

use nalgebra::DMatrix;

use crate::bernstein::BernsteinSpec;
use crate::error::{Result, SmkError};
use crate::semi_markov::SemiMarkovModel;

pub use caputo::{solve_volterra_caputo, solve_volterra_caputo_with};
pub use engine::{Record, SolverOptions};
pub use evolutionary::{solve_evolutionary, solve_evolutionary_with};
pub use grid::{Method, SolutionGrid};
pub use markov::solve_markov;
pub use renewal::{solve_renewal, solve_renewal_with};

/// `G = Θ(H − I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    pub g: DMatrix<f64>,
}

impl GeneratorMatrix {
    pub fn n_states(&self) -> usize {
        self.g.nrows()
    }

    /// Largest absolute row sum.
    pub fn row_sum_defect(&self) -> f64 {
        self.g.row_iter().map(|r| r.sum().abs()).fold(0.0, f64::max)
    }
}

pub fn build_generator(model: &SemiMarkovModel) -> GeneratorMatrix {
    let n = model.n_states();
    let mut g = DMatrix::from_fn(n, n, |i, j| {
        model.theta(i) * (model.h(i, j) - if i == j { 1.0 } else { 0.0 })
    });
    // put the rounding of the row sum on the diagonal so rows sum to zero
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| g[(i, j)]).sum();
        g[(i, i)] = -off;
    }
    GeneratorMatrix { g }
}

/// Default step: `t_max / 2000`.
pub fn default_dt(t_max: f64) -> f64 {
    t_max / 2000.0
}

/// Per-state order for the solvers restricted to a single order per state.
fn state_orders(model: &SemiMarkovModel, solver: &str) -> Result<Vec<f64>> {
    (0..model.n_states())
        .map(|i| match model.exponent(i) {
            BernsteinSpec::Stable { alpha } => Ok(*alpha),
            BernsteinSpec::MarkovDegenerate => Ok(1.0),
            BernsteinSpec::StableMixture { .. } => Err(SmkError::UnsupportedSpec(format!(
                "{solver} needs a single order per state but state {i} has a stable mixture; use the renewal solver"
            ))),
        })
        .collect()
}
