//! Scaling-limit experiments on a one-dimensional lattice.
//!
//! At scale `c` the walker sits on a lattice of local spacing
//! `h(x) = c^{α(x)}` and waits a Mittag-Leffler time of order `α(x)` before
//! each jump. Observed at time `t/c`, i.e. with the clock rescaled, the walk
//! is a lattice process with rate `θ/h(x)²` and symmetric `±h(x)` jumps
//! (diffusion) or rate `θ/h(x)` and `+h(x)` jumps (drift). Its generator
//! tends to `θ·½Δ` (resp. `θ∂_x`) as `c → 0`.
//!
//! The reference law is the same equation on a fixed lattice of spacing
//! `h_ref` with absorbing ends, solved by the Caputo stepper. Walkers are
//! binned to that lattice by spreading each one uniformly over its own cell
//! `[x − h(x)/2, x + h(x)/2]`, so coarse walks are compared on equal terms.

use serde::{Deserialize, Serialize};

use crate::bernstein::{BernsteinSpec, WaitingTimeLaw};
use crate::error::{Result, SmkError};
use crate::exec::{map_indexed, Execution};
use crate::kolmogorov::{solve_volterra_caputo_with, Record, SolverOptions};
use crate::laplace::{oracle_solution_with, InversionConfig};
use crate::samplers::{sample_waiting_time, RngStream};
use crate::semi_markov::{SemiMarkovModel, DEFAULT_JUMP_CAP};
use crate::special_fn::gamma;
use crate::stats::total_variation;

/// Largest mass allowed on the absorbing ends of the truncated lattice.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-3;
/// Bins with fewer expected walkers than this are pooled in the bin-wise check.
const MIN_EXPECTED: f64 = 10.0;
const PATHS_PER_BLOCK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    FractionalDiffusion,
    FractionalPoissonDrift,
    /// Diffusion with `α ≡ 1`; checks the harness against the lattice heat equation.
    BrownianMarkovControl,
}

/// Order as a function of position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphaProfile {
    Constant {
        alpha: f64,
    },
    /// `left` for `x < boundary`, `right` otherwise.
    TwoRegion {
        left: f64,
        right: f64,
        boundary: f64,
    },
}

impl AlphaProfile {
    pub fn at(&self, x: f64) -> f64 {
        match *self {
            AlphaProfile::Constant { alpha } => alpha,
            AlphaProfile::TwoRegion {
                left,
                right,
                boundary,
            } => {
                if x < boundary {
                    left
                } else {
                    right
                }
            }
        }
    }

    fn values(&self) -> Vec<f64> {
        match *self {
            AlphaProfile::Constant { alpha } => vec![alpha],
            AlphaProfile::TwoRegion { left, right, .. } => vec![left, right],
        }
    }

    fn is_markov(&self) -> bool {
        self.values().iter().all(|&a| a == 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitExperimentConfig {
    pub kind: LimitKind,
    pub alpha: AlphaProfile,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Strictly decreasing, in `(0, 1]`.
    #[serde(default = "default_scales")]
    pub scales: Vec<f64>,
    #[serde(default = "default_t_eval")]
    pub t_eval: f64,
    /// Reference sites on each side of the origin (drift: to the right);
    /// chosen from the spread of the limit law when absent.
    #[serde(default)]
    pub lattice_halfwidth: Option<usize>,
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    /// Reference spacing; defaults to the finest walker spacing.
    #[serde(default)]
    pub h_ref: Option<f64>,
    /// Solver step; defaults to `t_eval/500`.
    #[serde(default)]
    pub dt: Option<f64>,
}

fn default_theta() -> f64 {
    1.0
}

fn default_scales() -> Vec<f64> {
    vec![0.4, 0.2, 0.1]
}

fn default_t_eval() -> f64 {
    1.0
}

fn default_n_paths() -> usize {
    100_000
}

impl LimitExperimentConfig {
    pub fn new(kind: LimitKind, alpha: AlphaProfile) -> Self {
        Self {
            kind,
            alpha,
            theta: default_theta(),
            scales: default_scales(),
            t_eval: default_t_eval(),
            lattice_halfwidth: None,
            n_paths: default_n_paths(),
            h_ref: None,
            dt: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SmkError::InvalidParams(m));
        for a in self.alpha.values() {
            if !(a > 0.0 && a <= 1.0) {
                return bad(format!("order {a} outside (0, 1]"));
            }
        }
        if let AlphaProfile::TwoRegion { boundary, .. } = self.alpha {
            if !boundary.is_finite() {
                return bad("region boundary must be finite".into());
            }
        }
        if self.kind == LimitKind::BrownianMarkovControl && !self.alpha.is_markov() {
            return bad("the Brownian control needs alpha = 1 everywhere".into());
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return bad(format!("theta = {} must be positive", self.theta));
        }
        if !(self.t_eval > 0.0 && self.t_eval.is_finite()) {
            return bad(format!("t_eval = {} must be positive", self.t_eval));
        }
        if self.scales.is_empty() {
            return bad("scales is empty".into());
        }
        if let Some(&c) = self.scales.iter().find(|&&c| !(c > 0.0 && c <= 1.0)) {
            return bad(format!("scale {c} outside (0, 1]"));
        }
        if self.scales.windows(2).any(|w| !(w[0] > w[1])) {
            return bad("scales must be strictly decreasing".into());
        }
        if self.n_paths < 100 {
            return bad(format!("n_paths = {} must be at least 100", self.n_paths));
        }
        if let Some(h) = self.h_ref {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("h_ref = {h} must be positive"));
            }
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt <= self.t_eval) {
                return bad(format!("dt = {dt} must lie in (0, t_eval]"));
            }
        }
        if self.lattice_halfwidth == Some(0) {
            return bad("lattice_halfwidth must be positive".into());
        }
        Ok(())
    }

    fn drift(&self) -> bool {
        self.kind == LimitKind::FractionalPoissonDrift
    }

    fn spacing(&self, c: f64, x: f64) -> f64 {
        c.powf(self.alpha.at(x))
    }

    /// Finest spacing any walker uses.
    fn finest_spacing(&self) -> f64 {
        let c = *self.scales.last().expect("validated");
        self.alpha
            .values()
            .iter()
            .map(|&a| c.powf(a))
            .fold(f64::INFINITY, f64::min)
    }

    fn rate(&self, h: f64) -> f64 {
        if self.drift() {
            self.theta / h
        } else {
            self.theta / (h * h)
        }
    }

    fn auto_halfwidth(&self, h_ref: f64) -> usize {
        // mean and spread of the limit law at t_eval, maximised over the orders
        let span = self
            .alpha
            .values()
            .iter()
            .map(|&a| {
                let m = self.theta * self.t_eval.powf(a) / gamma(1.0 + a);
                if self.drift() {
                    m + 10.0 * (m + m * m).sqrt()
                } else {
                    10.0 * m.sqrt()
                }
            })
            .fold(0.0, f64::max);
        ((span + 2.0) / h_ref).ceil() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleResult {
    pub c: f64,
    pub tv_distance: f64,
    /// Monte Carlo standard error of the distance, `½(Σ_b Var p̂_b)^{1/2}`.
    pub std_error: f64,
    /// Empirical mass on the absorbing ends.
    pub boundary_mass: f64,
    pub empirical: Vec<f64>,
}

/// Bin-wise comparison of the finest empirical law with the reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlCheck {
    pub bins_checked: usize,
    /// Largest `|p̂ − p| / SE` over checked bins and the pooled tail cell.
    pub max_z: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitExperimentReport {
    pub kind: LimitKind,
    pub h_ref: f64,
    pub lattice_halfwidth: usize,
    /// Position of each reference bin.
    pub positions: Vec<f64>,
    pub reference: Vec<f64>,
    pub reference_row_sum_defect: f64,
    pub reference_boundary_mass: f64,
    pub scales: Vec<ScaleResult>,
    /// Distance at the smallest scale strictly below the distance at the
    /// largest; vacuously true for a single scale.
    pub verdict: bool,
    /// Present when `α ≡ 1`.
    pub control: Option<ControlCheck>,
    /// Drift with constant order: largest gap between the reference and the
    /// Laplace-inversion pmf on the same lattice.
    pub oracle_max_diff: Option<f64>,
}

struct Lattice {
    h: f64,
    k: usize,
    drift: bool,
}

impl Lattice {
    fn n_bins(&self) -> usize {
        if self.drift {
            self.k + 1
        } else {
            2 * self.k + 1
        }
    }

    /// Bin index of the origin.
    fn origin(&self) -> usize {
        if self.drift {
            0
        } else {
            self.k
        }
    }

    fn position(&self, b: usize) -> f64 {
        (b as f64 - self.origin() as f64) * self.h
    }

    /// Outermost positions still inside the lattice.
    fn bounds(&self) -> (f64, f64) {
        (self.position(0), self.position(self.n_bins() - 1))
    }

    fn is_boundary(&self, b: usize) -> bool {
        b == self.n_bins() - 1 || (!self.drift && b == 0)
    }

    /// Spread a unit mass uniformly over `[lo, hi]` into the bins, clamping
    /// anything beyond the ends onto the end bins.
    fn smear(&self, lo: f64, hi: f64, mut emit: impl FnMut(usize, f64)) {
        let last = self.n_bins() - 1;
        let to_bin = |x: f64| x / self.h + self.origin() as f64 + 0.5;
        let (u_lo, u_hi) = (to_bin(lo), to_bin(hi));
        let width = u_hi - u_lo;
        let first = u_lo.floor();
        let mut edge = first;
        while edge < u_hi {
            let a = edge.max(u_lo);
            let b = (edge + 1.0).min(u_hi);
            let w = (b - a) / width;
            let idx = edge.clamp(0.0, last as f64) as usize;
            if w > 0.0 {
                emit(idx, w);
            }
            edge += 1.0;
        }
    }
}

/// The reference lattice model: symmetric nearest-neighbour jumps (or unit
/// right jumps for drift) at rate `θ/h²` (`θ/h`), per-site order, absorbing ends.
fn reference_model(cfg: &LimitExperimentConfig, lat: &Lattice) -> Result<SemiMarkovModel> {
    let n = lat.n_bins();
    let mut h = vec![vec![0.0; n]; n];
    for (b, row) in h.iter_mut().enumerate() {
        if lat.is_boundary(b) {
            row[b] = 1.0;
        } else if cfg.drift() {
            row[b + 1] = 1.0;
        } else {
            row[b - 1] = 0.5;
            row[b + 1] = 0.5;
        }
    }
    let rate = cfg.rate(lat.h);
    let exponents = (0..n)
        .map(|b| BernsteinSpec::with_order(cfg.alpha.at(lat.position(b))))
        .collect::<Result<Vec<_>>>()?;
    SemiMarkovModel::new(h, vec![rate; n], exponents)
}

struct Accumulator {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

/// One walker on `[0, t_eval]`; returns its final position, or `None` once it
/// leaves the lattice (absorbed on the nearest end).
fn walk_one(
    cfg: &LimitExperimentConfig,
    c: f64,
    laws: &[(f64, WaitingTimeLaw)],
    bounds: (f64, f64),
    rng: &mut RngStream,
) -> Result<f64> {
    let law_for = |a: f64| {
        &laws
            .iter()
            .find(|(b, _)| *b == a)
            .expect("law for every order")
            .1
    };
    let mut x = 0.0f64;
    let mut t = 0.0;
    let mut jumps = 0usize;
    loop {
        let alpha = cfg.alpha.at(x);
        let h = c.powf(alpha);
        let law = law_for(alpha);
        t += sample_waiting_time(rng, law);
        if t > cfg.t_eval {
            return Ok(x);
        }
        let up = cfg.drift() || rng.uniform() < 0.5;
        x += if up { h } else { -h };
        if x <= bounds.0 || x >= bounds.1 {
            return Ok(x.clamp(bounds.0, bounds.1));
        }
        jumps += 1;
        if jumps > DEFAULT_JUMP_CAP {
            return Err(SmkError::Explosion {
                cap: DEFAULT_JUMP_CAP,
            });
        }
    }
}

fn empirical_at_scale(
    cfg: &LimitExperimentConfig,
    lat: &Lattice,
    c: f64,
    rng: &RngStream,
    exec: Execution,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let laws = cfg
        .alpha
        .values()
        .into_iter()
        .map(|a| {
            let h = c.powf(a);
            Ok((
                a,
                WaitingTimeLaw::new(BernsteinSpec::with_order(a)?, cfg.rate(h))?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let bounds = lat.bounds();
    let nb = lat.n_bins();
    let blocks = cfg.n_paths.div_ceil(PATHS_PER_BLOCK);
    let partial = map_indexed(exec, blocks, |blk| -> Result<Accumulator> {
        let mut acc = Accumulator {
            sum: vec![0.0; nb],
            sum_sq: vec![0.0; nb],
        };
        let end = ((blk + 1) * PATHS_PER_BLOCK).min(cfg.n_paths);
        for p in blk * PATHS_PER_BLOCK..end {
            let mut r = rng.substream(p as u64);
            let x = walk_one(cfg, c, &laws, bounds, &mut r)?;
            let s = cfg.spacing(c, x);
            let (lo, hi) = if x <= bounds.0 || x >= bounds.1 {
                (x, x)
            } else {
                (x - 0.5 * s, x + 0.5 * s)
            };
            if lo == hi {
                let b = if x <= bounds.0 { 0 } else { nb - 1 };
                acc.sum[b] += 1.0;
                acc.sum_sq[b] += 1.0;
            } else {
                lat.smear(lo, hi, |b, w| {
                    acc.sum[b] += w;
                    acc.sum_sq[b] += w * w;
                });
            }
        }
        Ok(acc)
    });
    let mut sum = vec![0.0; nb];
    let mut sum_sq = vec![0.0; nb];
    for acc in partial {
        let acc = acc?;
        for b in 0..nb {
            sum[b] += acc.sum[b];
            sum_sq[b] += acc.sum_sq[b];
        }
    }
    let n = cfg.n_paths as f64;
    let p: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let var: Vec<f64> = p
        .iter()
        .zip(&sum_sq)
        .map(|(&m, &q)| ((q / n - m * m).max(0.0)) / n)
        .collect();
    Ok((p, var))
}

/// Bin-wise `|p̂ − p| ≤ 4 SE` with the binomial SE of the reference, over
/// bins expecting at least `MIN_EXPECTED` walkers; the remaining bins form
/// one pooled cell.
fn control_check(empirical: &[f64], reference: &[f64], n_paths: usize) -> ControlCheck {
    let n = n_paths as f64;
    let z = |p_hat: f64, p: f64| {
        let se = (p * (1.0 - p) / n).sqrt();
        if se > 0.0 {
            (p_hat - p).abs() / se
        } else if p_hat == p {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let mut max_z: f64 = 0.0;
    let mut checked = 0;
    let (mut pool_hat, mut pool_ref) = (0.0, 0.0);
    for (&ph, &p) in empirical.iter().zip(reference) {
        if p * n >= MIN_EXPECTED {
            max_z = max_z.max(z(ph, p));
            checked += 1;
        } else {
            pool_hat += ph;
            pool_ref += p;
        }
    }
    if pool_ref * n >= MIN_EXPECTED {
        max_z = max_z.max(z(pool_hat, pool_ref));
        checked += 1;
    }
    ControlCheck {
        bins_checked: checked,
        max_z,
        passed: max_z <= 4.0,
    }
}

fn run(
    cfg: &LimitExperimentConfig,
    rng: &RngStream,
    exec: Execution,
) -> Result<LimitExperimentReport> {
    cfg.validate()?;
    let h_ref = cfg.h_ref.unwrap_or_else(|| cfg.finest_spacing());
    let k = cfg
        .lattice_halfwidth
        .unwrap_or_else(|| cfg.auto_halfwidth(h_ref));
    let lat = Lattice {
        h: h_ref,
        k,
        drift: cfg.drift(),
    };

    let model = reference_model(cfg, &lat)?;
    let dt = cfg.dt.unwrap_or(cfg.t_eval / 500.0);
    let grid = solve_volterra_caputo_with(
        &model,
        cfg.t_eval,
        dt,
        SolverOptions {
            record: Record::Last,
            exec,
        },
    )?;
    let row = grid.last().row(lat.origin()).transpose();
    let reference: Vec<f64> = row.iter().copied().collect();
    let row_defect = (reference.iter().sum::<f64>() - 1.0).abs();
    if row_defect > 1e-4 {
        return Err(SmkError::OutOfRange(format!(
            "reference law sums to 1 only within {row_defect:.3e}"
        )));
    }
    let ref_boundary: f64 = (0..lat.n_bins())
        .filter(|&b| lat.is_boundary(b))
        .map(|b| reference[b])
        .sum();
    if ref_boundary >= BOUNDARY_MASS_LIMIT {
        return Err(SmkError::BoundaryMass {
            mass: ref_boundary,
            limit: BOUNDARY_MASS_LIMIT,
        });
    }

    let oracle_max_diff = match cfg.alpha {
        AlphaProfile::Constant { .. } if cfg.drift() => {
            let o = oracle_solution_with(&model, &[cfg.t_eval], InversionConfig::talbot(), exec)?;
            let orow = o.last().row(lat.origin());
            Some(
                orow.iter()
                    .zip(&reference)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            )
        }
        _ => None,
    };

    let mut scales = Vec::with_capacity(cfg.scales.len());
    let mut finest = None;
    for (s, &c) in cfg.scales.iter().enumerate() {
        let (p, var) = empirical_at_scale(cfg, &lat, c, &rng.substream(s as u64), exec)?;
        let boundary_mass: f64 = (0..lat.n_bins())
            .filter(|&b| lat.is_boundary(b))
            .map(|b| p[b])
            .sum();
        if boundary_mass >= BOUNDARY_MASS_LIMIT {
            return Err(SmkError::BoundaryMass {
                mass: boundary_mass,
                limit: BOUNDARY_MASS_LIMIT,
            });
        }
        scales.push(ScaleResult {
            c,
            tv_distance: total_variation(&p, &reference),
            std_error: 0.5 * var.iter().sum::<f64>().sqrt(),
            boundary_mass,
            empirical: p.clone(),
        });
        finest = Some(p);
    }
    let verdict = scales.len() < 2 || scales.last().unwrap().tv_distance < scales[0].tv_distance;
    let control = cfg.alpha.is_markov().then(|| {
        control_check(
            finest.as_deref().expect("at least one scale"),
            &reference,
            cfg.n_paths,
        )
    });

    Ok(LimitExperimentReport {
        kind: cfg.kind,
        h_ref,
        lattice_halfwidth: k,
        positions: (0..lat.n_bins()).map(|b| lat.position(b)).collect(),
        reference,
        reference_row_sum_defect: row_defect,
        reference_boundary_mass: ref_boundary,
        scales,
        verdict,
        control,
        oracle_max_diff,
    })
}

/// Symmetric walk against the variable-order diffusion equation
/// `𝔇_t^{α(·)} q = θ·½Δ q`.
pub fn run_fractional_diffusion_limit(
    cfg: &LimitExperimentConfig,
    rng: &RngStream,
) -> Result<LimitExperimentReport> {
    run_fractional_diffusion_limit_with(cfg, rng, Execution::default())
}

pub fn run_fractional_diffusion_limit_with(
    cfg: &LimitExperimentConfig,
    rng: &RngStream,
    exec: Execution,
) -> Result<LimitExperimentReport> {
    if cfg.drift() {
        return Err(SmkError::InvalidParams(
            "drift experiments go through run_fractional_poisson_limit".into(),
        ));
    }
    run(cfg, rng, exec)
}

/// Right-jumping walk against `𝔇_t^{α(·)} q = θ ∂_x q`.
pub fn run_fractional_poisson_limit(
    cfg: &LimitExperimentConfig,
    rng: &RngStream,
) -> Result<LimitExperimentReport> {
    run_fractional_poisson_limit_with(cfg, rng, Execution::default())
}

pub fn run_fractional_poisson_limit_with(
    cfg: &LimitExperimentConfig,
    rng: &RngStream,
    exec: Execution,
) -> Result<LimitExperimentReport> {
    if !cfg.drift() {
        return Err(SmkError::InvalidParams(
            "run_fractional_poisson_limit needs kind = fractional_poisson_drift".into(),
        ));
    }
    run(cfg, rng, exec)
}

/// Dispatch on `cfg.kind`.
pub fn run_limit(
    cfg: &LimitExperimentConfig,
    rng: &RngStream,
    exec: Execution,
) -> Result<LimitExperimentReport> {
    if cfg.drift() {
        run_fractional_poisson_limit_with(cfg, rng, exec)
    } else {
        run_fractional_diffusion_limit_with(cfg, rng, exec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(drift: bool) -> Lattice {
        Lattice {
            h: 0.5,
            k: 4,
            drift,
        }
    }

    #[test]
    fn smear_conserves_mass() {
        let lat = lattice(false);
        for &(lo, hi) in &[
            (-0.25, 0.25),
            (-0.6, 0.4),
            (1.0, 1.9),
            (1.8, 2.6),
            (-3.0, -2.2),
        ] {
            let mut total = 0.0;
            lat.smear(lo, hi, |b, w| {
                assert!(b < lat.n_bins());
                total += w;
            });
            assert!((total - 1.0).abs() < 1e-12, "{lo} {hi}");
        }
        let mut hits = Vec::new();
        lat.smear(-0.25, 0.25, |b, w| hits.push((b, w)));
        assert_eq!(hits, vec![(4, 1.0)]);
    }

    #[test]
    fn lattice_geometry() {
        let sym = lattice(false);
        assert_eq!(sym.n_bins(), 9);
        assert_eq!(sym.position(4), 0.0);
        assert!(sym.is_boundary(0) && sym.is_boundary(8) && !sym.is_boundary(4));
        let drift = lattice(true);
        assert_eq!(drift.n_bins(), 5);
        assert_eq!(drift.bounds(), (0.0, 2.0));
        assert!(!drift.is_boundary(0) && drift.is_boundary(4));
    }

    #[test]
    fn config_checks() {
        let mut cfg = LimitExperimentConfig::new(
            LimitKind::FractionalDiffusion,
            AlphaProfile::Constant { alpha: 0.7 },
        );
        cfg.validate().unwrap();
        cfg.scales = vec![0.1, 0.4];
        assert!(cfg.validate().is_err());
        cfg.scales = vec![1.5];
        assert!(cfg.validate().is_err());
        let ctl = LimitExperimentConfig::new(
            LimitKind::BrownianMarkovControl,
            AlphaProfile::Constant { alpha: 0.7 },
        );
        assert!(ctl.validate().is_err());
    }

    #[test]
    fn reference_rows_are_stochastic() {
        let cfg = LimitExperimentConfig::new(
            LimitKind::FractionalDiffusion,
            AlphaProfile::TwoRegion {
                left: 0.5,
                right: 0.8,
                boundary: 0.0,
            },
        );
        let m = reference_model(&cfg, &lattice(false)).unwrap();
        assert!(m.is_absorbing(0) && m.is_absorbing(8));
        assert_eq!(m.h(4, 3), 0.5);
        assert_eq!(m.exponent(3), &BernsteinSpec::Stable { alpha: 0.5 });
        assert_eq!(m.exponent(4), &BernsteinSpec::Stable { alpha: 0.8 });
    }

    #[test]
    fn control_check_flags_large_gaps() {
        let r = vec![0.25, 0.5, 0.25];
        assert!(control_check(&r, &r, 10_000).passed);
        let off = vec![0.3, 0.45, 0.25];
        assert!(!control_check(&off, &r, 10_000).passed);
    }

    #[test]
    fn single_scale_gives_one_row() {
        let mut cfg = LimitExperimentConfig::new(
            LimitKind::FractionalPoissonDrift,
            AlphaProfile::Constant { alpha: 0.8 },
        );
        cfg.scales = vec![1.0];
        cfg.n_paths = 2000;
        let rep = run_fractional_poisson_limit(&cfg, &RngStream::new(5, 0)).unwrap();
        assert_eq!(rep.scales.len(), 1);
        assert!(rep.verdict);
        assert!(rep.oracle_max_diff.unwrap() < 1e-3);
    }
}
