//! Numerical Laplace inversion and the Laplace-domain reference solution.
//!
//! Taking transforms in the backward renewal equation gives, for every
//! `λ`, the linear system
//!
//! ```text
//! [(f(λ,i) + θ_i) δ_ik − θ_i h_ik] π̃_kj(λ) = λ⁻¹ f(λ,i) δ_ij
//! ```
//!
//! whose inversion entry by entry is the oracle every time-domain solver is
//! checked against.

use std::f64::consts::{LN_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmkError};
use crate::exec::{try_map_indexed, Execution};
use crate::kolmogorov::{Method, SolutionGrid};
use crate::semi_markov::SemiMarkovModel;

/// Disagreement between two inversion orders above which the result is rejected.
pub const CONVERGENCE_TOL: f64 = 1e-4;
const RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum InversionConfig {
    /// Gaver–Stehfest with an even number of terms, at most 18.
    GaverStehfest { order: usize },
    /// Fixed Talbot (cotangent) contour with the given number of nodes, at least 16.
    Talbot { nodes: usize },
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self::gaver_stehfest()
    }
}

impl InversionConfig {
    pub fn gaver_stehfest() -> Self {
        Self::GaverStehfest { order: 14 }
    }

    pub fn talbot() -> Self {
        Self::Talbot { nodes: 32 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::GaverStehfest { order } if order % 2 != 0 || !(4..=18).contains(&order) => {
                Err(SmkError::InvalidParams(format!(
                    "Gaver-Stehfest order {order} must be even and in [4, 18]"
                )))
            }
            Self::Talbot { nodes } if nodes < 16 || nodes % 2 != 0 => Err(SmkError::InvalidParams(
                format!("Talbot node count {nodes} must be even and at least 16"),
            )),
            _ => Ok(()),
        }
    }

    /// The configuration actually used by the oracle. A fractional state
    /// makes the original nonsmooth at 0, and even for smooth originals
    /// Gaver–Stehfest stalls near 1e-5 in double precision, so the oracle
    /// always runs on the contour.
    pub fn for_model(self, _model: &SemiMarkovModel) -> Self {
        match self {
            Self::GaverStehfest { .. } => Self::talbot(),
            other => other,
        }
    }

    /// Lower-order companion used for the convergence check.
    fn companion(&self) -> Self {
        match *self {
            Self::GaverStehfest { order } => Self::GaverStehfest { order: order - 2 },
            Self::Talbot { nodes } => Self::Talbot { nodes: nodes - 8 },
        }
    }
}

/// Talbot contour `z(θ) = (N/t)(0.5017 θ cot(0.6407 θ) − 0.6122 + 0.2645 iθ)`
/// with the midpoint rule on `(−π, π)`; uses conjugate symmetry, so `F`
/// must map conjugates to conjugates.
pub fn talbot_sum<F: Fn(Complex64) -> Complex64>(transform: F, t: f64, nodes: usize) -> f64 {
    talbot_nodes(t, nodes)
        .map(|(z, w)| (w * transform(z)).im)
        .sum::<f64>()
}

/// Nodes and weights such that `f(t) ≈ Σ Im(w_k F(z_k))`.
fn talbot_nodes(t: f64, nodes: usize) -> impl Iterator<Item = (Complex64, Complex64)> {
    let n = nodes as f64;
    let scale = n / t;
    let step = 2.0 * PI / n;
    (0..nodes / 2).map(move |k| {
        let theta = (k as f64 + 0.5) * step;
        let c = 0.6407 * theta;
        let (sin, cos) = c.sin_cos();
        let cot = cos / sin;
        let z = scale * Complex64::new(0.5017 * theta * cot - 0.6122, 0.2645 * theta);
        let dz = scale * Complex64::new(0.5017 * (cot - c / (sin * sin)), 0.2645);
        let w = (z * t).exp() * dz * (2.0 / n);
        (z, w)
    })
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Gaver–Stehfest weights `V_1..V_N`.
pub fn stehfest_weights(order: usize) -> Vec<f64> {
    let half = order / 2;
    (1..=order)
        .map(|k| {
            let lo = k.div_ceil(2);
            let hi = k.min(half);
            let s: f64 = (lo..=hi)
                .map(|j| {
                    (j as f64).powi(half as i32) * factorial(2 * j)
                        / (factorial(half - j)
                            * factorial(j)
                            * factorial(j - 1)
                            * factorial(k - j)
                            * factorial(2 * j - k))
                })
                .sum();
            if (k + half).is_multiple_of(2) {
                s
            } else {
                -s
            }
        })
        .collect()
}

fn gaver_stehfest_sum<F: Fn(f64) -> f64>(transform: F, t: f64, order: usize) -> f64 {
    let a = LN_2 / t;
    stehfest_weights(order)
        .iter()
        .enumerate()
        .map(|(k, v)| v * transform((k + 1) as f64 * a))
        .sum::<f64>()
        * a
}

fn estimate<F: Fn(Complex64) -> Complex64>(transform: &F, t: f64, cfg: InversionConfig) -> f64 {
    match cfg {
        InversionConfig::GaverStehfest { order } => {
            gaver_stehfest_sum(|l| transform(Complex64::new(l, 0.0)).re, t, order)
        }
        InversionConfig::Talbot { nodes } => talbot_sum(transform, t, nodes),
    }
}

/// Invert a Laplace transform at `t > 0`, checking agreement with the next
/// lower order.
pub fn invert<F: Fn(Complex64) -> Complex64>(
    transform: F,
    t: f64,
    cfg: InversionConfig,
) -> Result<f64> {
    cfg.validate()?;
    if !(t > 0.0) {
        return Err(SmkError::Domain(format!(
            "inversion time {t} must be positive"
        )));
    }
    let first = estimate(&transform, t, cfg);
    let second = estimate(&transform, t, cfg.companion());
    let diff = (first - second).abs();
    if !(diff <= CONVERGENCE_TOL) {
        return Err(SmkError::NonConvergence {
            location: None,
            first,
            second,
            diff,
        });
    }
    Ok(first)
}

/// The system matrix `diag(f + θ) − diag(θ) H` and right-hand side
/// `diag(f/λ)` at a complex Laplace variable.
fn resolvent_parts(
    model: &SemiMarkovModel,
    s: Complex64,
) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let n = model.n_states();
    let f: Vec<Complex64> = (0..n).map(|i| model.exponent(i).eval_complex(s)).collect();
    let a = DMatrix::from_fn(n, n, |i, k| {
        let th = model.theta(i);
        let diag = if i == k {
            f[i] + th
        } else {
            Complex64::new(0.0, 0.0)
        };
        diag - th * model.h(i, k)
    });
    let b = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            f[i] / s
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    (a, b)
}

/// `π̃(s)` for complex `s` (principal branch of every exponent).
pub fn resolvent_complex(model: &SemiMarkovModel, s: Complex64) -> Result<DMatrix<Complex64>> {
    let (a, b) = resolvent_parts(model, s);
    let x =
        a.clone().lu().solve(&b).ok_or_else(|| {
            SmkError::SingularSystem(format!("resolvent matrix singular at λ = {s}"))
        })?;
    let residual = (&a * &x - &b).norm();
    let scale = b.norm().max(1.0);
    if !(residual <= RESIDUAL_TOL * scale) {
        return Err(SmkError::SingularSystem(format!(
            "resolvent residual {residual:.3e} at λ = {s} exceeds tolerance"
        )));
    }
    Ok(x)
}

/// `π̃(λ)` for real `λ > 0`.
pub fn resolvent_solve(model: &SemiMarkovModel, lambda: f64) -> Result<DMatrix<f64>> {
    if !(lambda > 0.0) {
        return Err(SmkError::Domain(format!(
            "lambda = {lambda} must be positive"
        )));
    }
    Ok(resolvent_complex(model, Complex64::new(lambda, 0.0))?.map(|z| z.re))
}

fn invert_matrix(model: &SemiMarkovModel, t: f64, cfg: InversionConfig) -> Result<DMatrix<f64>> {
    let n = model.n_states();
    let mut out = DMatrix::zeros(n, n);
    match cfg {
        InversionConfig::Talbot { nodes } => {
            for (z, w) in talbot_nodes(t, nodes) {
                let r = resolvent_complex(model, z)?;
                out += r.map(|v| (w * v).im);
            }
        }
        InversionConfig::GaverStehfest { order } => {
            let a = LN_2 / t;
            for (k, v) in stehfest_weights(order).into_iter().enumerate() {
                let r = resolvent_solve(model, (k + 1) as f64 * a)?;
                out += r * (v * a);
            }
        }
    }
    Ok(out)
}

/// Reference `π(t_k)` by entrywise inversion of the resolvent. `t = 0` maps
/// to the identity; all other times must be positive and increasing.
pub fn oracle_solution(
    model: &SemiMarkovModel,
    times: &[f64],
    cfg: InversionConfig,
) -> Result<SolutionGrid> {
    oracle_solution_with(model, times, cfg, Execution::default())
}

pub fn oracle_solution_with(
    model: &SemiMarkovModel,
    times: &[f64],
    cfg: InversionConfig,
    exec: Execution,
) -> Result<SolutionGrid> {
    cfg.validate()?;
    if times.is_empty() {
        return Err(SmkError::InvalidParams("time grid is empty".into()));
    }
    if times.windows(2).any(|w| !(w[0] < w[1])) || !(times[0] >= 0.0) {
        return Err(SmkError::InvalidParams(
            "times must be nonnegative and strictly increasing".into(),
        ));
    }
    let cfg = cfg.for_model(model);
    let n = model.n_states();
    let values = try_map_indexed(exec, times.len(), |k| {
        let t = times[k];
        if t == 0.0 {
            return Ok(DMatrix::identity(n, n));
        }
        let first = invert_matrix(model, t, cfg)?;
        let second = invert_matrix(model, t, cfg.companion())?;
        for i in 0..n {
            for j in 0..n {
                let diff = (first[(i, j)] - second[(i, j)]).abs();
                if !(diff <= CONVERGENCE_TOL) {
                    return Err(SmkError::NonConvergence {
                        location: Some((k, i, j)),
                        first: first[(i, j)],
                        second: second[(i, j)],
                        diff,
                    });
                }
            }
        }
        Ok(first)
    })?;
    Ok(SolutionGrid::new(times.to_vec(), values, Method::Oracle))
}
