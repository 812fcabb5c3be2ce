//! Shared time stepper for the three integro-differential forms.
//!
//! Every scheme advances `π_n` by solving, row by row,
//!
//! ```text
//! A π_n = diag(d_n) + diag(s) · Σ_{m<n} w_i(n, m) Q_m
//! ```
//!
//! with a constant implicit matrix `A` (factored once), a history quantity
//! `Q_m` derived from `π_m` (`Hπ`, `Gπ` or `π − I`) and per-row convolution
//! weights. Rows are independent in the history sum, which is where the
//! quadratic cost sits, so that loop is spread across threads for large
//! state spaces.

use nalgebra::DMatrix;

use crate::error::{Result, SmkError};
use crate::exec::{map_indexed, Execution};

use super::{Method, SolutionGrid};

/// Which grid points to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Record {
    #[default]
    All,
    Every(usize),
    Last,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SolverOptions {
    pub record: Record,
    pub exec: Execution,
}

/// Row-parallel history sums only pay off above this many states.
const PARALLEL_MIN_STATES: usize = 24;

/// Sparse rows of a matrix.
pub(crate) type SparseRows = Vec<Vec<(usize, f64)>>;

pub(crate) fn sparse_rows(m: &DMatrix<f64>) -> SparseRows {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .filter(|&k| m[(i, k)] != 0.0)
                .map(|k| (k, m[(i, k)]))
                .collect()
        })
        .collect()
}

pub(crate) enum Source {
    /// `Q = M π` for a sparse matrix `M`.
    Product(SparseRows),
    /// `Q = π − I`.
    Increment,
}

/// Per-row weights. `w(n, 0) = first[n]`, `w(n, m) = conv[n − m]` for `m ≥ 1`;
/// entries past the end of either vector are zero.
pub(crate) struct RowWeights {
    pub first: Vec<f64>,
    pub conv: Vec<f64>,
    /// Extra weight on `Q_1` at step `n` (starting correction); may be empty.
    pub second: Vec<f64>,
    pub scale: f64,
    /// Scale used at step 1 instead of `scale` (for self-starting multistep rows).
    pub scale_first: Option<f64>,
}

impl RowWeights {
    fn window(&self, steps: usize) -> usize {
        // number of past steps referenced (m ≥ 1); the m = 0 slot is kept separately
        self.conv.len().saturating_sub(1).min(steps)
    }
}

pub(crate) struct Scheme {
    pub method: Method,
    pub dt: f64,
    pub steps: usize,
    pub a: DMatrix<f64>,
    pub a_first: Option<DMatrix<f64>>,
    pub rows: Vec<RowWeights>,
    pub source: Source,
    /// Diagonal forcing `d_n[i]` as a function of `(i, n)`.
    pub diag: Box<dyn Fn(usize, usize) -> f64 + Sync>,
    /// Diagonal forcing at step 1, when different.
    pub diag_first: Option<Vec<f64>>,
}

struct RowHistory {
    /// `Q_0` row.
    initial: Vec<f64>,
    /// `Q_1` row, once known.
    q1: Vec<f64>,
    /// Rows `Q_{start} .. Q_{start + len − 1}` flattened.
    data: Vec<f64>,
    start: usize,
    window: usize,
}

fn q_row(source: &Source, pi: &DMatrix<f64>, i: usize, out: &mut [f64]) {
    let n = pi.ncols();
    match source {
        Source::Product(rows) => {
            out.iter_mut().for_each(|v| *v = 0.0);
            for &(k, w) in &rows[i] {
                for (j, o) in out.iter_mut().enumerate().take(n) {
                    *o += w * pi[(k, j)];
                }
            }
        }
        Source::Increment => {
            for (j, o) in out.iter_mut().enumerate() {
                *o = pi[(i, j)] - if i == j { 1.0 } else { 0.0 };
            }
        }
    }
}

impl Scheme {
    pub fn run(self, opts: SolverOptions) -> Result<SolutionGrid> {
        let n = self.a.nrows();
        let lu = self.a.clone().lu();
        if !lu.is_invertible() {
            return Err(SmkError::SingularSystem(format!(
                "{} step matrix",
                self.method.name()
            )));
        }
        let lu_first = match &self.a_first {
            Some(a) => {
                let l = a.clone().lu();
                if !l.is_invertible() {
                    return Err(SmkError::SingularSystem(format!(
                        "{} first-step matrix",
                        self.method.name()
                    )));
                }
                Some(l)
            }
            None => None,
        };
        let exec = if n >= PARALLEL_MIN_STATES {
            opts.exec
        } else {
            Execution::Sequential
        };

        let identity = DMatrix::<f64>::identity(n, n);
        let mut hist: Vec<RowHistory> = (0..n)
            .map(|i| {
                let mut q0 = vec![0.0; n];
                q_row(&self.source, &identity, i, &mut q0);
                RowHistory {
                    initial: q0,
                    q1: Vec::new(),
                    data: Vec::new(),
                    start: 1,
                    window: self.rows[i].window(self.steps),
                }
            })
            .collect();

        let keep = |k: usize| match opts.record {
            Record::All => true,
            Record::Every(e) => k.is_multiple_of(e.max(1)) || k == self.steps,
            Record::Last => k == self.steps,
        };
        let mut times = Vec::new();
        let mut values = Vec::new();
        if keep(0) {
            times.push(0.0);
            values.push(identity.clone());
        }

        for step in 1..=self.steps {
            let sums = map_indexed(exec, n, |i| history_sum(&hist[i], &self.rows[i], step, n));
            let first = step == 1;
            let mut rhs = DMatrix::<f64>::zeros(n, n);
            for (i, s) in sums.iter().enumerate() {
                let row = &self.rows[i];
                let scale = if first {
                    row.scale_first.unwrap_or(row.scale)
                } else {
                    row.scale
                };
                for j in 0..n {
                    rhs[(i, j)] = scale * s[j];
                }
                let d = match (&self.diag_first, first) {
                    (Some(df), true) => df[i],
                    _ => (self.diag)(i, step),
                };
                rhs[(i, i)] += d;
            }
            let solver = if first {
                lu_first.as_ref().unwrap_or(&lu)
            } else {
                &lu
            };
            let pi = solver.solve(&rhs).ok_or_else(|| {
                SmkError::SingularSystem(format!("{} step {step}", self.method.name()))
            })?;
            if pi.iter().any(|v| !v.is_finite()) {
                return Err(SmkError::OutOfRange(format!(
                    "{} produced a non-finite value at step {step}",
                    self.method.name()
                )));
            }
            let mut buf = vec![0.0; n];
            for (i, h) in hist.iter_mut().enumerate() {
                if step == 1 && !self.rows[i].second.is_empty() {
                    h.q1 = vec![0.0; n];
                    q_row(&self.source, &pi, i, &mut h.q1);
                }
                if h.window == 0 {
                    continue;
                }
                q_row(&self.source, &pi, i, &mut buf);
                h.data.extend_from_slice(&buf);
                let stored = h.data.len() / n;
                if stored > h.window {
                    h.data.drain(..n * (stored - h.window));
                    h.start += stored - h.window;
                }
            }
            if keep(step) {
                times.push(step as f64 * self.dt);
                values.push(pi);
            }
        }
        Ok(SolutionGrid::new(times, values, self.method).with_dt(self.dt))
    }
}

fn history_sum(h: &RowHistory, w: &RowWeights, step: usize, n: usize) -> Vec<f64> {
    let mut acc = vec![0.0; n];
    if let Some(&c) = w.first.get(step) {
        if c != 0.0 {
            for (a, q) in acc.iter_mut().zip(&h.initial) {
                *a += c * q;
            }
        }
    }
    if step >= 2 {
        if let Some(&c) = w.second.get(step) {
            if c != 0.0 {
                for (a, q) in acc.iter_mut().zip(&h.q1) {
                    *a += c * q;
                }
            }
        }
    }
    let stored = h.data.len() / n;
    for s in 0..stored {
        let m = h.start + s;
        if m >= step {
            break;
        }
        let Some(&c) = w.conv.get(step - m) else {
            continue;
        };
        if c == 0.0 {
            continue;
        }
        let q = &h.data[s * n..(s + 1) * n];
        for (a, v) in acc.iter_mut().zip(q) {
            *a += c * v;
        }
    }
    acc
}

/// Number of steps for `t_max` at nominal step `dt`; the step is adjusted so
/// that the grid ends exactly at `t_max`.
pub(crate) fn grid_steps(t_max: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(SmkError::InvalidParams(format!(
            "t_max = {t_max} must be positive"
        )));
    }
    if !(dt > 0.0 && dt <= t_max) {
        return Err(SmkError::InvalidParams(format!(
            "dt = {dt} must lie in (0, t_max]"
        )));
    }
    let steps = (t_max / dt).round().max(1.0) as usize;
    Ok((steps, t_max / steps as f64))
}
