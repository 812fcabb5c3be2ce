//! Integrated Riemann–Liouville form
//! `π(t) = I + ∫₀ᵗ u(t − s) G π(s) ds`, `u(s) = s^{α−1}/Γ(α)`,
//! by product trapezoid integration against the power kernel.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::semi_markov::SemiMarkovModel;
use crate::special_fn::gamma;

use super::engine::{grid_steps, sparse_rows, RowWeights, Scheme, SolverOptions, Source};
use super::{build_generator, state_orders, Method, SolutionGrid};

/// `(d+1)^{a} − 2d^{a} + (d−1)^{a}` for `a = α + 1`, computed without
/// cancelling the leading terms.
fn second_difference(alpha: f64, d: usize) -> f64 {
    let a = alpha + 1.0;
    let d = d as f64;
    let x = 1.0 / d;
    d.powf(a) * ((a * x.ln_1p()).exp_m1() + (a * (-x).ln_1p()).exp_m1())
}

/// Weight of the initial point at step `n`: `(n−1)^{α+1} − (n−1−α) n^α`.
fn start_weight(alpha: f64, n: usize) -> f64 {
    if n == 1 {
        return alpha;
    }
    let nf = n as f64;
    let g = (alpha * (-1.0 / nf).ln_1p()).exp_m1();
    nf.powf(alpha) * ((nf - 1.0) * g + alpha)
}

pub fn solve_evolutionary(model: &SemiMarkovModel, t_max: f64, dt: f64) -> Result<SolutionGrid> {
    solve_evolutionary_with(model, t_max, dt, SolverOptions::default())
}

pub fn solve_evolutionary_with(
    model: &SemiMarkovModel,
    t_max: f64,
    dt: f64,
    opts: SolverOptions,
) -> Result<SolutionGrid> {
    let orders = state_orders(model, "the evolutionary solver")?;
    let (steps, dt) = grid_steps(t_max, dt)?;
    let g = build_generator(model).g;
    let c: Vec<f64> = orders
        .iter()
        .map(|&a| dt.powf(a) / gamma(a + 2.0))
        .collect();
    let a = DMatrix::identity(g.nrows(), g.nrows())
        - DMatrix::from_diagonal(&DVector::from_vec(c.clone())) * &g;

    let rows = orders
        .iter()
        .zip(&c)
        .map(|(&alpha, &scale)| {
            let mut conv = vec![0.0; steps + 1];
            for (d, w) in conv.iter_mut().enumerate().skip(1) {
                *w = second_difference(alpha, d);
            }
            let first = (0..=steps)
                .map(|m| if m == 0 { 0.0 } else { start_weight(alpha, m) })
                .collect();
            RowWeights {
                first,
                conv,
                second: Vec::new(),
                scale,
                scale_first: None,
            }
        })
        .collect();

    Scheme {
        method: Method::Evolutionary,
        dt,
        steps,
        a,
        a_first: None,
        rows,
        source: Source::Product(sparse_rows(&g)),
        diag: Box::new(|_, _| 1.0),
        diag_first: None,
    }
    .run(opts)
}
