//! Variable-order Caputo form `𝔇_t π = G π`, one order per row.
//!
//! Rows with `α(i) < 1` use Grünwald–Letnikov weights on `π − I`, plus one
//! starting weight on `π_1 − I` that makes the discrete operator exact on
//! `t^α` (the leading term of the solution near 0). Rows with `α(i) = 1` are
//! plain ODE rows, advanced with BDF2 after a backward Euler start.

use std::rc::Rc;

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::semi_markov::SemiMarkovModel;
use crate::special_fn::gamma;

use super::engine::{grid_steps, RowWeights, Scheme, SolverOptions, Source};
use super::{build_generator, state_orders, Method, SolutionGrid};

/// `g_0 = 1`, `g_k = g_{k−1}(k − 1 − α)/k`.
pub(crate) fn gl_weights(alpha: f64, len: usize) -> Vec<f64> {
    let mut g = vec![0.0; len];
    if len > 0 {
        g[0] = 1.0;
    }
    for k in 1..len {
        g[k] = g[k - 1] * (k as f64 - 1.0 - alpha) / k as f64;
    }
    g
}

/// Starting weights `s_n = Γ(α+1) − Σ_{k<n} g_k (n−k)^α`, `n = 0..len`.
pub(crate) fn starting_weights(alpha: f64, g: &[f64], len: usize) -> Vec<f64> {
    let target = gamma(alpha + 1.0);
    let pows: Vec<f64> = (0..len).map(|k| (k as f64).powf(alpha)).collect();
    (0..len)
        .map(|n| target - (0..n).map(|k| g[k] * pows[n - k]).sum::<f64>())
        .collect()
}

pub fn solve_volterra_caputo(model: &SemiMarkovModel, t_max: f64, dt: f64) -> Result<SolutionGrid> {
    solve_volterra_caputo_with(model, t_max, dt, SolverOptions::default())
}

pub fn solve_volterra_caputo_with(
    model: &SemiMarkovModel,
    t_max: f64,
    dt: f64,
    opts: SolverOptions,
) -> Result<SolutionGrid> {
    let orders = state_orders(model, "the Caputo solver")?;
    let (steps, dt) = grid_steps(t_max, dt)?;
    let g = build_generator(model).g;

    // c_i is the coefficient of π_n on the left; BDF2 rows use 3/(2dt)
    let lead: Vec<f64> = orders
        .iter()
        .map(|&a| if a == 1.0 { 1.5 / dt } else { dt.powf(-a) })
        .collect();
    // step 1: backward Euler, or the corrected operator `Γ(α+1) dt^{−α} Q_1`
    let start: Vec<f64> = orders
        .iter()
        .map(|&a| {
            if a == 1.0 {
                1.0 / dt
            } else {
                gamma(a + 1.0) * dt.powf(-a)
            }
        })
        .collect();
    let a = DMatrix::from_diagonal(&DVector::from_vec(lead.clone())) - &g;
    let a_first = DMatrix::from_diagonal(&DVector::from_vec(start.clone())) - &g;

    // GL and starting weights, shared between rows of equal order
    type Weights = Rc<(Vec<f64>, Vec<f64>)>;
    let mut weight_cache: Vec<(f64, Weights)> = Vec::new();

    let rows = orders
        .iter()
        .map(|&alpha| {
            if alpha == 1.0 {
                return RowWeights {
                    first: Vec::new(),
                    conv: vec![0.0, -4.0, 1.0],
                    second: Vec::new(),
                    scale: -0.5 / dt,
                    scale_first: None,
                };
            }
            let w = match weight_cache.iter().find(|(a, _)| *a == alpha) {
                Some((_, w)) => w.clone(),
                None => {
                    let g = gl_weights(alpha, steps + 1);
                    let s = starting_weights(alpha, &g, steps + 1);
                    let w = Rc::new((g, s));
                    weight_cache.push((alpha, w.clone()));
                    w
                }
            };
            let mut conv = w.0.clone();
            conv[0] = 0.0;
            RowWeights {
                first: Vec::new(),
                conv,
                second: w.1.clone(),
                scale: -dt.powf(-alpha),
                scale_first: None,
            }
        })
        .collect();

    Scheme {
        method: Method::VolterraCaputo,
        dt,
        steps,
        a,
        a_first: Some(a_first),
        rows,
        source: Source::Increment,
        diag: Box::new(move |i, _| lead[i]),
        diag_first: Some(start),
    }
    .run(opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_weights_sum_to_zero_in_the_limit() {
        let g = gl_weights(0.6, 200_000);
        let s: f64 = g.iter().sum();
        assert!(s.abs() < 1e-2, "{s}");
        assert!(g[1..].iter().all(|&w| w < 0.0));
        assert_eq!(gl_weights(1.0, 4), vec![1.0, -1.0, 0.0, 0.0]);
    }

    #[test]
    fn corrected_operator_is_exact_on_the_power() {
        // dt^{-α}(Σ g_k u_{n−k} + s_n u_1) with u_k = k^α equals Γ(α+1)
        let alpha = 0.35;
        let g = gl_weights(alpha, 50);
        let s = starting_weights(alpha, &g, 50);
        for (n, sn) in s.iter().enumerate().skip(1) {
            let v: f64 = (0..=n)
                .map(|k| g[k] * ((n - k) as f64).powf(alpha))
                .sum::<f64>()
                + sn;
            assert!((v - gamma(alpha + 1.0)).abs() < 1e-12, "{n}");
        }
    }
}
