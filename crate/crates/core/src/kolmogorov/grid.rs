use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Result, SmkError};

/// Which solver produced a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Renewal,
    VolterraCaputo,
    Evolutionary,
    MatrixExp,
    Oracle,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Renewal => "renewal",
            Method::VolterraCaputo => "volterra_caputo",
            Method::Evolutionary => "evolutionary",
            Method::MatrixExp => "matrix_exp",
            Method::Oracle => "oracle",
        }
    }
}

/// `π(t_k)` on a time grid. Time-stepping solvers use a uniform grid from 0
/// and set `dt`; the oracle and the matrix exponential accept any grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionGrid {
    pub times: Vec<f64>,
    pub values: Vec<DMatrix<f64>>,
    pub method: Method,
    pub dt: Option<f64>,
}

impl SolutionGrid {
    pub fn new(times: Vec<f64>, values: Vec<DMatrix<f64>>, method: Method) -> Self {
        Self {
            times,
            values,
            method,
            dt: None,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn n_states(&self) -> usize {
        self.values.first().map_or(0, |m| m.nrows())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `π_ij(t_k)` along the grid.
    pub fn entry(&self, i: usize, j: usize) -> Vec<f64> {
        self.values.iter().map(|m| m[(i, j)]).collect()
    }

    pub fn last(&self) -> &DMatrix<f64> {
        self.values.last().expect("grid is never empty")
    }

    /// Index of the grid point closest to `t`.
    pub fn index_near(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 {
            0
        } else if k == self.times.len() {
            k - 1
        } else if (self.times[k] - t).abs() < (t - self.times[k - 1]).abs() {
            k
        } else {
            k - 1
        }
    }

    /// Largest deviation of a row sum from 1 and the most negative /
    /// most-above-one entry over the whole grid.
    pub fn stochasticity_defect(&self) -> (f64, f64) {
        let mut row_defect: f64 = 0.0;
        let mut range_defect: f64 = 0.0;
        for m in &self.values {
            for i in 0..m.nrows() {
                let row = m.row(i);
                row_defect = row_defect.max((row.sum() - 1.0).abs());
                for &v in row.iter() {
                    range_defect = range_defect.max(-v).max(v - 1.0);
                }
            }
        }
        (row_defect, range_defect)
    }

    /// Rows sum to 1 within `row_tol`; entries in `[−range_tol, 1 + range_tol]`.
    pub fn check_stochastic(&self, row_tol: f64, range_tol: f64) -> Result<()> {
        let (rows, range) = self.stochasticity_defect();
        if rows > row_tol {
            return Err(SmkError::OutOfRange(format!(
                "{} solution: a row sum deviates from 1 by {rows:.3e} (tolerance {row_tol:.1e})",
                self.method.name()
            )));
        }
        if range > range_tol {
            return Err(SmkError::OutOfRange(format!(
                "{} solution: an entry leaves [0, 1] by {range:.3e}",
                self.method.name()
            )));
        }
        Ok(())
    }

    /// The tolerance attached to a time-stepping grid: rows within `10·dt`,
    /// entries within `1e-6` of `[0, 1]`.
    pub fn check_invariants(&self) -> Result<()> {
        let row_tol = self.dt.map_or(1e-5, |dt| 10.0 * dt);
        self.check_stochastic(row_tol, 1e-6)
    }
}
