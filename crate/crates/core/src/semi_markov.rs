//! Stepped semi-Markov processes on finite state spaces: the model, the
//! renewal path simulator, the explicit time-changed construction, and Monte
//! Carlo marginals.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::bernstein::{BernsteinSpec, WaitingTimeLaw};
use crate::error::{Result, SmkError};
use crate::exec::{map_indexed, Execution};
use crate::samplers::{
    sample_exponential, sample_stable_subordinator, sample_waiting_time, RngStream,
};

/// Default cap on the number of jumps of a single path.
pub const DEFAULT_JUMP_CAP: usize = 10_000_000;

const ROW_SUM_TOL: f64 = 1e-12;

/// Finite-state stepped semi-Markov model.
///
/// Holding times depend on the departure state only. A state whose row of
/// `H` is the unit vector on itself is absorbing; any other self-loop is an
/// ordinary jump that restarts the clock.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiMarkovModel {
    h: Vec<Vec<f64>>,
    laws: Vec<WaitingTimeLaw>,
}

impl SemiMarkovModel {
    pub fn new(h: Vec<Vec<f64>>, theta: Vec<f64>, exponents: Vec<BernsteinSpec>) -> Result<Self> {
        let n = h.len();
        if n == 0 {
            return Err(SmkError::InvalidModel(
                "model needs at least one state".into(),
            ));
        }
        if theta.len() != n || exponents.len() != n {
            return Err(SmkError::InvalidModel(format!(
                "H has {n} rows but theta has {} entries and {} laws were given",
                theta.len(),
                exponents.len()
            )));
        }
        for (i, row) in h.iter().enumerate() {
            if row.len() != n {
                return Err(SmkError::InvalidModel(format!(
                    "row {i} of H has {} entries, expected {n}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|&p| !(p >= 0.0 && p.is_finite())) {
                return Err(SmkError::InvalidModel(format!(
                    "H[{i}][{j}] = {} is not a probability",
                    row[j]
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(SmkError::InvalidModel(format!(
                    "row {i} of H sums to {s}, expected 1"
                )));
            }
        }
        let laws = theta
            .into_iter()
            .zip(exponents)
            .enumerate()
            .map(|(i, (t, e))| {
                WaitingTimeLaw::new(e, t)
                    .map_err(|err| SmkError::InvalidModel(format!("state {i}: {err}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { h, laws })
    }

    /// Same exponent for every state.
    pub fn with_shared_exponent(
        h: Vec<Vec<f64>>,
        theta: Vec<f64>,
        exponent: BernsteinSpec,
    ) -> Result<Self> {
        let n = h.len();
        Self::new(h, theta, vec![exponent; n])
    }

    /// Two states swapping at rate `θ` with the given exponent.
    pub fn two_state_symmetric(exponent: BernsteinSpec, theta: f64) -> Result<Self> {
        Self::with_shared_exponent(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![theta; 2],
            exponent,
        )
    }

    pub fn n_states(&self) -> usize {
        self.h.len()
    }

    pub fn h_row(&self, i: usize) -> &[f64] {
        &self.h[i]
    }

    pub fn h(&self, i: usize, j: usize) -> f64 {
        self.h[i][j]
    }

    pub fn h_matrix(&self) -> DMatrix<f64> {
        let n = self.n_states();
        DMatrix::from_fn(n, n, |i, j| self.h[i][j])
    }

    pub fn law(&self, i: usize) -> &WaitingTimeLaw {
        &self.laws[i]
    }

    pub fn laws(&self) -> &[WaitingTimeLaw] {
        &self.laws
    }

    pub fn theta(&self, i: usize) -> f64 {
        self.laws[i].theta
    }

    pub fn exponent(&self, i: usize) -> &BernsteinSpec {
        &self.laws[i].exponent
    }

    pub fn is_absorbing(&self, i: usize) -> bool {
        self.h[i][i] == 1.0
    }

    pub fn all_markov(&self) -> bool {
        self.laws.iter().all(|l| l.exponent.is_markov())
    }

    fn check_state(&self, x: usize) -> Result<()> {
        if x < self.n_states() {
            Ok(())
        } else {
            Err(SmkError::InvalidParams(format!(
                "state {x} out of range 0..{}",
                self.n_states()
            )))
        }
    }
}

/// One trajectory truncated at `horizon`: `states[k]` is occupied on
/// `[epochs[k], epochs[k+1])`, and the last state until past the horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub states: Vec<usize>,
    pub epochs: Vec<f64>,
    pub horizon: f64,
}

impl PathRecord {
    pub fn n_jumps(&self) -> usize {
        self.epochs.len() - 1
    }

    /// Holding times `J_k = T_{k+1} − T_k` of the completed sojourns.
    pub fn holding_times(&self) -> Vec<f64> {
        self.epochs.windows(2).map(|w| w[1] - w[0]).collect()
    }

    fn index_at(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(SmkError::OutOfHorizon {
                t,
                horizon: self.horizon,
            });
        }
        Ok(self.epochs.partition_point(|&e| e <= t) - 1)
    }
}

/// Position and time since the last jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgeState {
    pub position: usize,
    pub age: f64,
}

/// Right-continuous evaluation `X(t)`.
pub fn state_at(path: &PathRecord, t: f64) -> Result<usize> {
    Ok(path.states[path.index_at(t)?])
}

/// `(X(t), t − T_{N(t)})`.
pub fn age_at(path: &PathRecord, t: f64) -> Result<AgeState> {
    let k = path.index_at(t)?;
    Ok(AgeState {
        position: path.states[k],
        age: t - path.epochs[k],
    })
}

/// Runs the renewal construction, reporting each accepted jump `(epoch, state)`.
/// Returns the state occupied at the horizon.
fn walk<F: FnMut(f64, usize)>(
    model: &SemiMarkovModel,
    x0: usize,
    horizon: f64,
    rng: &mut RngStream,
    cap: usize,
    mut on_jump: F,
) -> Result<usize> {
    let mut x = x0;
    let mut t = 0.0;
    let mut jumps = 0usize;
    loop {
        if model.is_absorbing(x) {
            return Ok(x);
        }
        let j = sample_waiting_time(rng, model.law(x));
        if t + j > horizon {
            return Ok(x);
        }
        t += j;
        x = rng.categorical(model.h_row(x));
        jumps += 1;
        if jumps > cap {
            return Err(SmkError::Explosion { cap });
        }
        on_jump(t, x);
    }
}

/// Simulate one path on `[0, horizon]` by drawing each holding time from the
/// departure state's law and each destination from the row of `H`.
pub fn simulate_path(
    model: &SemiMarkovModel,
    x0: usize,
    horizon: f64,
    rng: &mut RngStream,
) -> Result<PathRecord> {
    simulate_path_capped(model, x0, horizon, rng, DEFAULT_JUMP_CAP)
}

pub fn simulate_path_capped(
    model: &SemiMarkovModel,
    x0: usize,
    horizon: f64,
    rng: &mut RngStream,
    cap: usize,
) -> Result<PathRecord> {
    model.check_state(x0)?;
    if !(horizon > 0.0) {
        return Err(SmkError::InvalidParams(format!(
            "horizon {horizon} must be positive"
        )));
    }
    let mut states = vec![x0];
    let mut epochs = vec![0.0];
    walk(model, x0, horizon, rng, cap, |t, x| {
        epochs.push(t);
        states.push(x);
    })?;
    Ok(PathRecord {
        states,
        epochs,
        horizon,
    })
}

/// Simulate the same process as a time-changed Markov chain: run the chain
/// with exponential clocks `𝒥_n ~ Exp(θ(X_n))` and map each clock interval
/// through a fresh increment of the departure state's subordinator, so that
/// `T_{n+1} − T_n = σ^{(X_n)}(𝒥_n)`.
pub fn simulate_time_change(
    model: &SemiMarkovModel,
    x0: usize,
    horizon: f64,
    rng: &mut RngStream,
) -> Result<PathRecord> {
    model.check_state(x0)?;
    if !(horizon > 0.0) {
        return Err(SmkError::InvalidParams(format!(
            "horizon {horizon} must be positive"
        )));
    }
    if let Some(i) = (0..model.n_states()).find(|&i| model.exponent(i).is_markov()) {
        return Err(SmkError::UnsupportedSpec(format!(
            "state {i} has no time change (pure drift); use simulate_path"
        )));
    }
    let mut states = vec![x0];
    let mut epochs = vec![0.0];
    let mut x = x0;
    let mut sigma = 0.0;
    while !model.is_absorbing(x) {
        let clock = sample_exponential(rng, model.theta(x));
        let next = rng.categorical(model.h_row(x));
        let increment = match model.exponent(x) {
            BernsteinSpec::Stable { alpha } => sample_stable_subordinator(rng, *alpha, clock),
            BernsteinSpec::StableMixture { components } => components
                .iter()
                .map(|c| sample_stable_subordinator(rng, c.alpha, c.weight * clock))
                .sum(),
            BernsteinSpec::MarkovDegenerate => unreachable!("checked above"),
        };
        if sigma + increment > horizon {
            break;
        }
        sigma += increment;
        x = next;
        epochs.push(sigma);
        states.push(x);
        if epochs.len() > DEFAULT_JUMP_CAP {
            return Err(SmkError::Explosion {
                cap: DEFAULT_JUMP_CAP,
            });
        }
    }
    Ok(PathRecord {
        states,
        epochs,
        horizon,
    })
}

/// Monte Carlo estimate of one row of `π(t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marginal {
    pub probabilities: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub n_paths: usize,
}

impl Marginal {
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.probabilities
            .iter()
            .copied()
            .zip(self.std_errors.iter().copied())
            .collect()
    }
}

const PATHS_PER_BLOCK: usize = 1024;

/// `P^{x0}(X(t) = j)` for all `j`, with binomial standard errors. Path `k`
/// uses `rng.substream(k)`, so the estimate does not depend on the thread count.
pub fn empirical_marginal(
    model: &SemiMarkovModel,
    x0: usize,
    t: f64,
    n_paths: usize,
    rng: &RngStream,
) -> Result<Marginal> {
    empirical_marginal_with(model, x0, t, n_paths, rng, Execution::default())
}

pub fn empirical_marginal_with(
    model: &SemiMarkovModel,
    x0: usize,
    t: f64,
    n_paths: usize,
    rng: &RngStream,
    exec: Execution,
) -> Result<Marginal> {
    model.check_state(x0)?;
    if n_paths < 1000 {
        return Err(SmkError::InvalidParams(format!(
            "n_paths = {n_paths} must be at least 1000"
        )));
    }
    if !(t >= 0.0) {
        return Err(SmkError::Domain(format!("time {t} must be nonnegative")));
    }
    let n = model.n_states();
    let counts = if t == 0.0 {
        let mut c = vec![0u64; n];
        c[x0] = n_paths as u64;
        c
    } else {
        let blocks = n_paths.div_ceil(PATHS_PER_BLOCK);
        let partial = map_indexed(exec, blocks, |b| -> Result<Vec<u64>> {
            let mut c = vec![0u64; n];
            let end = ((b + 1) * PATHS_PER_BLOCK).min(n_paths);
            for k in b * PATHS_PER_BLOCK..end {
                let mut r = rng.substream(k as u64);
                let x = walk(model, x0, t, &mut r, DEFAULT_JUMP_CAP, |_, _| {})?;
                c[x] += 1;
            }
            Ok(c)
        });
        let mut c = vec![0u64; n];
        for block in partial {
            for (acc, v) in c.iter_mut().zip(block?) {
                *acc += v;
            }
        }
        c
    };
    let total = n_paths as f64;
    let probabilities: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let std_errors = probabilities
        .iter()
        .map(|&p| (p * (1.0 - p) / total).sqrt())
        .collect();
    Ok(Marginal {
        probabilities,
        std_errors,
        n_paths,
    })
}
