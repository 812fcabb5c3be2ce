//! Mittag-Leffler functions on the negative real axis and the gamma function.
//!
//! `E_{α,β}(z) = Σ_k z^k / Γ(αk + β)`. Near the origin the power series is
//! summed directly (with compensation). Further out the series cancels
//! catastrophically for small `α`, so the function is recovered from its
//! Laplace representation
//!
//! ```text
//! E_{α,β}(z) = L⁻¹[ s^{α−β} / (s^α − z) ](1)
//! ```
//!
//! inverted on a Talbot contour. For `z < 0` and `α ≤ 1` the transform has no
//! singularities off the negative real axis, which is exactly the setting in
//! which the contour rule converges geometrically.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmkError};
use crate::laplace::talbot_sum;

/// `|z|` up to which the power series is used.
const SERIES_RADIUS: f64 = 1.0;
/// Contour nodes for the Talbot branch. 32 nodes sit at round-off level.
const TALBOT_NODES: usize = 32;

/// Gamma function.
pub fn gamma(x: f64) -> f64 {
    // exact on small positive integers
    if x.fract() == 0.0 && (1.0..=20.0).contains(&x) {
        return (1..x as u64).product::<u64>() as f64;
    }
    statrs::function::gamma::gamma(x)
}

/// Natural log of `|Γ(x)|` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Parameters `(α, β)` of the two-parameter Mittag-Leffler function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlParams {
    alpha: f64,
    beta: f64,
}

impl MlParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(SmkError::InvalidParams(format!(
                "alpha = {alpha} must lie in (0, 1]"
            )));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(SmkError::InvalidParams(format!(
                "beta = {beta} must be positive"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// One-parameter function `E_α = E_{α,1}`.
    pub fn one(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// `E_{α,β}(z)`.
///
/// The contract covers `z ≤ 0`. Positive arguments are summed by the power
/// series, which is only reliable for moderate `z`; they exist for tests.
pub fn mittag_leffler(params: MlParams, z: f64) -> Result<f64> {
    if z.is_nan() {
        return Err(SmkError::Domain("argument is NaN".into()));
    }
    let MlParams { alpha, beta } = params;
    if alpha == 1.0 && beta == 1.0 {
        return Ok(z.exp());
    }
    if z == 0.0 {
        return Ok(1.0 / gamma(beta));
    }
    if z > 0.0 || -z <= SERIES_RADIUS {
        return Ok(series(alpha, beta, z));
    }
    if z == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    Ok(contour(alpha, beta, z))
}

fn series(alpha: f64, beta: f64, z: f64) -> f64 {
    let ln_abs = z.abs().ln();
    // Neumaier summation
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    let mut k = 0usize;
    loop {
        let arg = alpha * k as f64 + beta;
        let mag = (k as f64 * ln_abs - ln_gamma(arg)).exp();
        let term = if z < 0.0 && k % 2 == 1 { -mag } else { mag };
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        // past the peak of the terms and below round-off of the sum
        if k as f64 * alpha > z.abs() && mag < 1e-18 * (sum + comp).abs().max(1e-300) {
            break;
        }
        k += 1;
        if k > 10_000 {
            break;
        }
    }
    sum + comp
}

fn contour(alpha: f64, beta: f64, z: f64) -> f64 {
    talbot_sum(
        |s: Complex64| s.powf(alpha - beta) / (s.powf(alpha) - z),
        1.0,
        TALBOT_NODES,
    )
}

/// Waiting-time survival `E_α(−θ t^α)` of a state with stable exponent.
pub fn ml_survival(alpha: f64, theta: f64, t: f64) -> Result<f64> {
    check_rate(theta)?;
    if !(t >= 0.0) {
        return Err(SmkError::Domain(format!("time {t} must be nonnegative")));
    }
    if t == 0.0 {
        MlParams::one(alpha)?;
        return Ok(1.0);
    }
    let v = mittag_leffler(MlParams::one(alpha)?, -theta * t.powf(alpha))?;
    Ok(v.clamp(0.0, 1.0))
}

/// Waiting-time density `θ t^{α−1} E_{α,α}(−θ t^α)`.
pub fn ml_waiting_density(alpha: f64, theta: f64, t: f64) -> Result<f64> {
    check_rate(theta)?;
    let params = MlParams::new(alpha, alpha)?;
    if !(t > 0.0) {
        return Err(SmkError::Domain(format!(
            "waiting density is singular at t = {t}; require t > 0"
        )));
    }
    let v = mittag_leffler(params, -theta * t.powf(alpha))?;
    Ok((theta * t.powf(alpha - 1.0) * v).max(0.0))
}

fn check_rate(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(SmkError::InvalidParams(format!(
            "rate theta = {theta} must be positive"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::erf::erfc;

    fn ml(a: f64, b: f64, z: f64) -> f64 {
        mittag_leffler(MlParams::new(a, b).unwrap(), z).unwrap()
    }

    #[test]
    fn trivial_values() {
        assert_eq!(ml(0.7, 1.0, 0.0), 1.0);
        assert!((ml(1.0, 1.0, -1.0) - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert!((ml(1.0, 2.0, 1.0) - (std::f64::consts::E - 1.0)).abs() < 1e-12);
        assert!((ml(1.0, 2.0, -3.0) - (1.0 - (-3.0f64).exp()) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn half_order_matches_erfc_identity() {
        // E_{1/2}(−x) = e^{x²} erfc(x)
        for &x in &[0.05f64, 0.3, 0.99, 1.01, 1.7, 3.0, 6.0, 12.0, 25.0] {
            let oracle = (x * x).exp() * erfc(x);
            let got = ml(0.5, 1.0, -x);
            assert!((got - oracle).abs() < 1e-10, "x={x}: {got} vs {oracle}");
        }
    }

    #[test]
    fn series_and_contour_agree_at_crossover() {
        for &a in &[0.2, 0.45, 0.6, 0.9, 0.999] {
            for &b in &[a, 1.0, 1.5, 2.0] {
                let s = series(a, b, -1.0);
                let c = contour(a, b, -1.0);
                assert!((s - c).abs() < 1e-12, "alpha={a} beta={b}: {s} vs {c}");
            }
        }
    }

    #[test]
    fn unit_order_general_beta_via_contour() {
        // E_{1,2}(z) = (e^z − 1)/z
        for &z in &[-2.0f64, -7.5, -40.0] {
            let oracle = (z.exp() - 1.0) / z;
            assert!((ml(1.0, 2.0, z) - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(MlParams::new(0.0, 1.0).is_err());
        assert!(MlParams::new(1.2, 1.0).is_err());
        assert!(MlParams::new(0.5, 0.0).is_err());
        assert!(ml_survival(0.5, -1.0, 1.0).is_err());
    }

    #[test]
    fn survival_examples() {
        assert_eq!(ml_survival(0.5, 1.0, 0.0).unwrap(), 1.0);
        assert!((ml_survival(1.0, 2.0, 1.0).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        assert!((ml_survival(0.5, 1.0, 1.0).unwrap() - erfc(1.0) * 1f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn density_examples() {
        assert!((ml_waiting_density(1.0, 1.0, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-12);
        assert!(ml_waiting_density(0.5, 1.0, 0.0).is_err());
        // leading behaviour t^{-1/2}/Γ(1/2) near the origin
        let t: f64 = 1e-10;
        let lead = t.powf(-0.5) / gamma(0.5);
        let d = ml_waiting_density(0.5, 1.0, t).unwrap();
        assert!((d / lead - 1.0).abs() < 1e-4);
    }

    #[test]
    fn density_is_minus_derivative_of_survival() {
        for &a in &[0.3, 0.6, 1.0] {
            for &t in &[0.05, 0.4, 1.0, 3.0, 20.0] {
                let h = 1e-5 * t;
                let fd = -(ml_survival(a, 1.0, t + h).unwrap()
                    - ml_survival(a, 1.0, t - h).unwrap())
                    / (2.0 * h);
                let d = ml_waiting_density(a, 1.0, t).unwrap();
                assert!((fd - d).abs() < 1e-6, "alpha={a} t={t}: {fd} vs {d}");
            }
        }
    }

    #[test]
    fn survival_is_decreasing_and_positive_far_out() {
        let mut prev = 1.0;
        for i in 1..200 {
            let z = -0.5 * i as f64;
            let v = ml(0.4, 1.0, z);
            assert!(v > 0.0 && v < prev, "z={z}");
            prev = v;
        }
    }
}
