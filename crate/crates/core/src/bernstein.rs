//! Per-state Laplace exponents (Bernstein functions) and the kernels the
//! solvers build from them.
//!
//! Only a small catalog is admitted: pure stable exponents `λ^α`, finite
//! positive mixtures `Σ w_m λ^{α_m}`, and the drift `f(λ) = λ` which gives
//! back exponential holding times. Every member of the first two families has
//! an infinite Lévy measure and a completely monotone waiting survival, so the
//! time-change construction applies without runtime checks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmkError};
use crate::laplace::{invert, InversionConfig};
use crate::special_fn::{gamma, ml_survival};

/// One component `w λ^α` of a stable mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableComponent {
    pub weight: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BernsteinSpec {
    /// `f(λ) = λ^α`, `α ∈ (0, 1)`.
    Stable { alpha: f64 },
    /// `f(λ) = Σ w_m λ^{α_m}`.
    StableMixture { components: Vec<StableComponent> },
    /// `f(λ) = λ`: no time change.
    MarkovDegenerate,
}

impl BernsteinSpec {
    pub fn stable(alpha: f64) -> Result<Self> {
        check_order(alpha)?;
        Ok(Self::Stable { alpha })
    }

    /// Order `α ∈ (0, 1]`, mapping `α = 1` to [`BernsteinSpec::MarkovDegenerate`].
    pub fn with_order(alpha: f64) -> Result<Self> {
        if alpha == 1.0 {
            Ok(Self::MarkovDegenerate)
        } else {
            Self::stable(alpha)
        }
    }

    pub fn mixture(components: &[(f64, f64)]) -> Result<Self> {
        if components.is_empty() {
            return Err(SmkError::InvalidParams(
                "stable mixture needs at least one component".into(),
            ));
        }
        let mut out = Vec::with_capacity(components.len());
        for &(weight, alpha) in components {
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(SmkError::InvalidParams(format!(
                    "mixture weight {weight} must be positive"
                )));
            }
            check_order(alpha)?;
            out.push(StableComponent { weight, alpha });
        }
        Ok(Self::StableMixture { components: out })
    }

    /// Re-run the constructor checks, e.g. after deserialisation.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Stable { alpha } => check_order(*alpha),
            Self::StableMixture { components } => {
                let pairs: Vec<_> = components.iter().map(|c| (c.weight, c.alpha)).collect();
                Self::mixture(&pairs).map(|_| ())
            }
            Self::MarkovDegenerate => Ok(()),
        }
    }

    /// Single fractional order, when there is one (`1` for the drift).
    pub fn order(&self) -> Option<f64> {
        match self {
            Self::Stable { alpha } => Some(*alpha),
            Self::MarkovDegenerate => Some(1.0),
            Self::StableMixture { .. } => None,
        }
    }

    pub fn is_markov(&self) -> bool {
        matches!(self, Self::MarkovDegenerate)
    }

    /// `f(s)` on the principal branch, for complex Laplace variables.
    pub fn eval_complex(&self, s: Complex64) -> Complex64 {
        match self {
            Self::Stable { alpha } => s.powf(*alpha),
            Self::StableMixture { components } => {
                components.iter().map(|c| c.weight * s.powf(c.alpha)).sum()
            }
            Self::MarkovDegenerate => s,
        }
    }
}

fn check_order(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(SmkError::InvalidParams(format!(
            "stable order {alpha} must lie in (0, 1)"
        )))
    }
}

/// Holding-time law of one state: exponent plus rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaitingTimeLaw {
    pub exponent: BernsteinSpec,
    pub theta: f64,
}

impl WaitingTimeLaw {
    pub fn new(exponent: BernsteinSpec, theta: f64) -> Result<Self> {
        exponent.validate()?;
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(SmkError::InvalidParams(format!(
                "rate theta = {theta} must be positive"
            )));
        }
        Ok(Self { exponent, theta })
    }

    pub fn stable(alpha: f64, theta: f64) -> Result<Self> {
        Self::new(BernsteinSpec::stable(alpha)?, theta)
    }

    pub fn markov(theta: f64) -> Result<Self> {
        Self::new(BernsteinSpec::MarkovDegenerate, theta)
    }

    /// Laplace transform of the survival, `λ^{-1} f(λ) / (θ + f(λ))`.
    pub fn survival_transform(&self, s: Complex64) -> Complex64 {
        let f = self.exponent.eval_complex(s);
        f / (s * (f + self.theta))
    }
}

/// `f(λ)` for real `λ > 0`.
pub fn eval_exponent(spec: &BernsteinSpec, lambda: f64) -> Result<f64> {
    spec.validate()?;
    if !(lambda > 0.0) {
        return Err(SmkError::Domain(format!(
            "lambda = {lambda} must be positive"
        )));
    }
    Ok(match spec {
        BernsteinSpec::Stable { alpha } => lambda.powf(*alpha),
        BernsteinSpec::StableMixture { components } => components
            .iter()
            .map(|c| c.weight * lambda.powf(c.alpha))
            .sum(),
        BernsteinSpec::MarkovDegenerate => lambda,
    })
}

/// Tail of the Lévy measure, `ν̄(t) = ν(t, ∞)`.
pub fn levy_tail(spec: &BernsteinSpec, t: f64) -> Result<f64> {
    spec.validate()?;
    if !(t > 0.0) {
        return Err(SmkError::Domain(format!("t = {t} must be positive")));
    }
    let stable_tail = |alpha: f64| t.powf(-alpha) / gamma(1.0 - alpha);
    match spec {
        BernsteinSpec::Stable { alpha } => Ok(stable_tail(*alpha)),
        BernsteinSpec::StableMixture { components } => Ok(components
            .iter()
            .map(|c| c.weight * stable_tail(c.alpha))
            .sum()),
        BernsteinSpec::MarkovDegenerate => Err(SmkError::UnsupportedSpec(
            "pure drift has no Lévy tail".into(),
        )),
    }
}

/// Potential density `u^f(t) = t^{α−1}/Γ(α)`; closed form for stable exponents only.
pub fn potential_density(spec: &BernsteinSpec, t: f64) -> Result<f64> {
    spec.validate()?;
    if !(t > 0.0) {
        return Err(SmkError::Domain(format!("t = {t} must be positive")));
    }
    match spec {
        BernsteinSpec::Stable { alpha } => Ok(t.powf(alpha - 1.0) / gamma(*alpha)),
        other => Err(SmkError::UnsupportedSpec(format!(
            "no closed-form potential density for {other:?}"
        ))),
    }
}

/// Recover `f(λ)` from the Laplace transform `F̃` of a waiting survival:
/// `f(λ) = θ λF̃(λ) / (1 − λF̃(λ))`.
pub fn survival_to_exponent<F: Fn(f64) -> f64>(
    survival_laplace: F,
    theta: f64,
    lambda: f64,
) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(SmkError::Domain(format!(
            "lambda = {lambda} must be positive"
        )));
    }
    if !(theta > 0.0) {
        return Err(SmkError::InvalidParams(format!(
            "rate theta = {theta} must be positive"
        )));
    }
    let x = lambda * survival_laplace(lambda);
    if !(x > 0.0 && x < 1.0) {
        return Err(SmkError::OutOfRange(format!(
            "λF̃(λ) = {x} at λ = {lambda} is outside (0, 1)"
        )));
    }
    Ok(theta * x / (1.0 - x))
}

/// `P(J > t)` for a holding time with the given law.
pub fn waiting_survival(law: &WaitingTimeLaw, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(SmkError::Domain(format!("time {t} must be nonnegative")));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    match &law.exponent {
        BernsteinSpec::Stable { alpha } => ml_survival(*alpha, law.theta, t),
        BernsteinSpec::MarkovDegenerate => Ok((-law.theta * t).exp()),
        BernsteinSpec::StableMixture { .. } => {
            let v = invert(|s| law.survival_transform(s), t, InversionConfig::talbot())?;
            Ok(v.clamp(0.0, 1.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_examples() {
        let st = BernsteinSpec::stable(0.5).unwrap();
        assert!((eval_exponent(&st, 4.0).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(
            eval_exponent(&BernsteinSpec::MarkovDegenerate, 3.7).unwrap(),
            3.7
        );
        let mix = BernsteinSpec::mixture(&[(0.5, 0.3), (0.5, 0.7)]).unwrap();
        assert!((eval_exponent(&mix, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tail_examples() {
        let st = BernsteinSpec::stable(0.5).unwrap();
        assert!((levy_tail(&st, 1.0).unwrap() - 0.564_189_583_547_756_3).abs() < 1e-12);
        assert!((levy_tail(&st, 4.0).unwrap() - 0.282_094_791_773_878_1).abs() < 1e-12);
        let mix = BernsteinSpec::mixture(&[(1.0, 0.5)]).unwrap();
        assert!((levy_tail(&mix, 1.0).unwrap() - levy_tail(&st, 1.0).unwrap()).abs() < 1e-15);
        assert!(matches!(
            levy_tail(&BernsteinSpec::MarkovDegenerate, 1.0),
            Err(SmkError::UnsupportedSpec(_))
        ));
    }

    #[test]
    fn potential_density_examples() {
        let st = BernsteinSpec::stable(0.5).unwrap();
        assert!((potential_density(&st, 1.0).unwrap() - 0.564_189_583_547_756_3).abs() < 1e-12);
        let near_one = BernsteinSpec::stable(0.999).unwrap();
        assert!((potential_density(&near_one, 1.0).unwrap() - 0.999_422_1).abs() < 1e-6);
        let mix = BernsteinSpec::mixture(&[(1.0, 0.5)]).unwrap();
        assert!(potential_density(&mix, 1.0).is_err());
        assert!(potential_density(&BernsteinSpec::MarkovDegenerate, 1.0).is_err());
    }

    #[test]
    fn survival_to_exponent_examples() {
        let ml = |l: f64| l.powf(-0.5) / (1.0 + l.powf(0.5));
        assert!((survival_to_exponent(ml, 1.0, 4.0).unwrap() - 2.0).abs() < 1e-12);
        let expo = |l: f64| 1.0 / (l + 2.0);
        assert!((survival_to_exponent(expo, 2.0, 5.0).unwrap() - 5.0).abs() < 1e-12);
        assert!(matches!(
            survival_to_exponent(|l: f64| 2.0 / l, 1.0, 1.0),
            Err(SmkError::OutOfRange(_))
        ));
    }

    #[test]
    fn waiting_survival_examples() {
        let st = WaitingTimeLaw::stable(0.6, 1.0).unwrap();
        assert_eq!(waiting_survival(&st, 0.0).unwrap(), 1.0);
        let mk = WaitingTimeLaw::markov(3.0).unwrap();
        assert!((waiting_survival(&mk, 1.0).unwrap() - 0.049_787_068_367_863_94).abs() < 1e-15);
        let half = WaitingTimeLaw::stable(0.5, 1.0).unwrap();
        assert!((waiting_survival(&half, 1.0).unwrap() - 0.427_583_576_155_807).abs() < 1e-6);
    }

    #[test]
    fn single_component_mixture_survival_matches_stable() {
        let mix = WaitingTimeLaw::new(BernsteinSpec::mixture(&[(1.0, 0.6)]).unwrap(), 1.3).unwrap();
        for &t in &[0.01, 0.3, 1.0, 4.0, 30.0] {
            let a = waiting_survival(&mix, t).unwrap();
            let b = ml_survival(0.6, 1.3, t).unwrap();
            assert!((a - b).abs() < 1e-9, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn constructors_reject_bad_input() {
        assert!(BernsteinSpec::stable(1.0).is_err());
        assert!(BernsteinSpec::mixture(&[(0.0, 0.5)]).is_err());
        assert!(BernsteinSpec::mixture(&[]).is_err());
        assert!(WaitingTimeLaw::stable(0.5, 0.0).is_err());
        assert!(eval_exponent(&BernsteinSpec::MarkovDegenerate, 0.0).is_err());
    }
}
