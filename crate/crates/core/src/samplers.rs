//! Random variates for holding times and subordinators.
//!
//! Every variate is a fixed function of a fixed number of uniforms:
//!
//! | variate                       | uniforms |
//! |-------------------------------|----------|
//! | exponential                   | 1        |
//! | one-sided stable (Kanter)     | 2        |
//! | stable / inverse-stable value | 2        |
//! | waiting time, drift           | 1        |
//! | waiting time, stable          | 3        |
//! | waiting time, m-mixture       | 1 + 2m   |
//!
//! so a stream split into per-path substreams reproduces bit for bit no matter
//! how paths are scheduled.

use std::f64::consts::PI;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bernstein::{BernsteinSpec, WaitingTimeLaw};

/// A seeded, splittable random stream. `(seed, stream_id)` fixes the sequence.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Independent child stream number `index`, derived only from
    /// `(seed, stream_id, index)`; the parent's position is irrelevant.
    pub fn substream(&self, index: u64) -> Self {
        let id = splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(0xA076_1D64_78BD_642F)));
        Self::new(self.seed, id)
    }

    /// Uniform on the open interval `(0, 1)`; consumes one 64-bit word.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Index drawn from a discrete distribution (one uniform).
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let u = self.uniform();
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
        last
    }
}

/// A draw of the one-sided stable law with `E e^{-λS} = e^{-λ^α}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableVariate {
    pub alpha: f64,
    pub value: f64,
}

impl StableVariate {
    /// Kanter's representation:
    /// `S = sin(αU)/sin(U)^{1/α} · (sin((1−α)U)/E)^{(1−α)/α}`.
    pub fn draw(rng: &mut RngStream, alpha: f64) -> Self {
        assert!(
            alpha > 0.0 && alpha < 1.0,
            "stable order {alpha} outside (0, 1)"
        );
        let u = PI * rng.uniform();
        let e = -rng.uniform().ln();
        let a = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
        let b = (((1.0 - alpha) * u).sin() / e).powf((1.0 - alpha) / alpha);
        let value = (a * b).max(f64::MIN_POSITIVE);
        Self { alpha, value }
    }
}

/// `Exp(θ)` by inversion.
pub fn sample_exponential(rng: &mut RngStream, theta: f64) -> f64 {
    assert!(theta > 0.0, "rate {theta} must be positive");
    -rng.uniform().ln() / theta
}

/// `σ_α(t) = t^{1/α} S_α`.
pub fn sample_stable_subordinator(rng: &mut RngStream, alpha: f64, t: f64) -> f64 {
    assert!(t > 0.0, "subordinator time {t} must be positive");
    t.powf(1.0 / alpha) * StableVariate::draw(rng, alpha).value
}

/// Holding time `J = σ^f(E)` with `E ~ Exp(θ)` run through the subordinator
/// of the law's exponent.
pub fn sample_waiting_time(rng: &mut RngStream, law: &WaitingTimeLaw) -> f64 {
    let e = sample_exponential(rng, law.theta);
    match &law.exponent {
        BernsteinSpec::MarkovDegenerate => e,
        BernsteinSpec::Stable { alpha } => sample_stable_subordinator(rng, *alpha, e),
        BernsteinSpec::StableMixture { components } => components
            .iter()
            .map(|c| sample_stable_subordinator(rng, c.alpha, c.weight * e))
            .sum(),
    }
}

/// Marginal `L(t) = (t/S)^α` of the inverse stable subordinator.
pub fn sample_inverse_stable(rng: &mut RngStream, alpha: f64, t: f64) -> f64 {
    assert!(t > 0.0, "time {t} must be positive");
    let s = StableVariate::draw(rng, alpha).value;
    (t / s).powf(alpha)
}
