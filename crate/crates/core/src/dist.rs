//! Truncated-distribution primitives used by the priors and the sampler.
//!
//! Conventions: normal distributions are parameterized by mean and *standard
//! deviation* in code (call sites convert written variances); t densities with
//! 3 degrees of freedom are parameterized by their *variance* `c`, so the
//! underlying scale is `sqrt(c/3)` (a t with nu = 3 and scale s has variance
//! 3 s^2). Truncation bounds are on the same axis as the argument. Log
//! densities return `-inf` outside the bounds or when the interval mass
//! underflows; sampling functions report those cases as errors instead.

use crate::error::{Error, Result};
use rand::Rng;
use statrs::distribution::ContinuousCDF;
use statrs::function::erf::erfc;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_74;
const SQRT_3: f64 = 1.732_050_807_568_877_2;
/// Normalizing constant of the standard t3 density, 2 / (pi * sqrt(3)).
const T3_NORM: f64 = 0.367_552_596_947_861_06;

fn std_normal() -> statrs::distribution::Normal {
    statrs::distribution::Normal::new(0.0, 1.0).expect("standard normal")
}

/// Standard normal CDF, accurate in both tails.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal survival function (upper tail), accurate in both tails.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn normal_quantile(u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) || !u.is_finite() {
        return Err(Error::InputDomain(format!(
            "quantile argument {u} outside [0, 1]"
        )));
    }
    Ok(std_normal().inverse_cdf(u))
}

pub fn normal_lpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -LN_SQRT_2PI - sd.ln() - 0.5 * z * z
}

/// Standard normal draw by inverse CDF.
pub fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    // `gen` can return exactly 0, whose quantile is -inf
    std_normal().inverse_cdf(u.max(f64::MIN_POSITIVE))
}

/// Probability mass of the standardized interval (a, b), computed through the
/// nearer tail so that intervals far from the mean keep precision.
fn std_interval_mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        normal_sf(a) - normal_sf(b)
    } else if b <= 0.0 {
        normal_cdf(b) - normal_cdf(a)
    } else {
        // straddles the mean; both terms are moderate
        normal_cdf(b) - normal_cdf(a)
    }
}

/// Log density of a normal restricted to (lo, hi).
pub fn trunc_normal_lpdf(x: f64, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    if !(x >= lo && x <= hi) || lo >= hi || sd <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    let mass = std_interval_mass(a, b);
    if mass <= 0.0 || !mass.is_finite() {
        return f64::NEG_INFINITY;
    }
    normal_lpdf(x, mean, sd) - mass.ln()
}

/// Exact inverse-CDF draw from N(mean, sd^2) restricted to (lo, hi).
pub fn sample_truncated_normal<R: Rng + ?Sized>(
    rng: &mut R,
    mean: f64,
    sd: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::InputDomain(format!(
            "truncated normal needs positive finite sd, got {sd}"
        )));
    }
    if !(lo < hi) {
        return Err(Error::InputDomain(format!(
            "truncation interval ({lo}, {hi}) is empty"
        )));
    }
    let a = ((lo - mean) / sd).max(f64::NEG_INFINITY);
    let b = ((hi - mean) / sd).min(f64::INFINITY);
    let z = sample_std_truncated(rng, a, b)?;
    Ok((mean + sd * z).clamp(lo, hi))
}

fn sample_std_truncated<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> Result<f64> {
    if a > 0.0 {
        // reflect so the interval sits in the left tail, where the CDF
        // keeps precision
        return Ok(-sample_std_truncated(rng, -b, -a)?);
    }
    let fa = normal_cdf(a);
    let fb = normal_cdf(b);
    let mass = fb - fa;
    if !(mass > 0.0) {
        return Err(Error::NumericDegenerate(format!(
            "truncation interval ({a}, {b}) carries no representable mass"
        )));
    }
    let u: f64 = rng.gen();
    let z = std_normal().inverse_cdf(fa + u * mass);
    Ok(z.clamp(a, b))
}

/// Log density of the t distribution with 3 degrees of freedom, location
/// `mean` and variance `var`.
pub fn t3_lpdf(x: f64, mean: f64, var: f64) -> f64 {
    if !(var > 0.0) {
        return f64::NEG_INFINITY;
    }
    let scale = (var / 3.0).sqrt();
    let u = (x - mean) / scale;
    T3_NORM.ln() - scale.ln() - 2.0 * (1.0 + u * u / 3.0).ln()
}

/// CDF of the standard (location 0, scale 1) t3 distribution, closed form.
pub fn t3_std_cdf(t: f64) -> f64 {
    let u = t / SQRT_3;
    0.5 + (u.atan() + u / (1.0 + u * u)) / std::f64::consts::PI
}

/// Quantile of the standard t3 distribution via safeguarded Newton.
pub fn t3_std_quantile(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) || !q.is_finite() {
        return Err(Error::InputDomain(format!(
            "quantile argument {q} outside [0, 1]"
        )));
    }
    if q == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if q == 1.0 {
        return Ok(f64::INFINITY);
    }
    // Cauchy-shaped start, then bracketed bisection with Newton polish.
    let mut t = SQRT_3 * (std::f64::consts::PI * (q - 0.5)).tan();
    let (mut lo, mut hi) = (t, t);
    while t3_std_cdf(lo) > q {
        lo -= 1.0 + lo.abs();
    }
    while t3_std_cdf(hi) < q {
        hi += 1.0 + hi.abs();
    }
    for _ in 0..200 {
        let f = t3_std_cdf(t) - q;
        if f > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let pdf = T3_NORM / (1.0 + t * t / 3.0).powi(2);
        let step = f / pdf.max(1e-300);
        let mut next = t - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-15 * (1.0 + t.abs()) {
            return Ok(next);
        }
        t = next;
    }
    Ok(t)
}

/// Log density of a t3(mean, var) restricted to (lo, hi).
pub fn trunc_t3_lpdf(x: f64, mean: f64, var: f64, lo: f64, hi: f64) -> f64 {
    if !(x >= lo && x <= hi) || lo >= hi || !(var > 0.0) {
        return f64::NEG_INFINITY;
    }
    let scale = (var / 3.0).sqrt();
    let fa = if lo == f64::NEG_INFINITY {
        0.0
    } else {
        t3_std_cdf((lo - mean) / scale)
    };
    let fb = if hi == f64::INFINITY {
        1.0
    } else {
        t3_std_cdf((hi - mean) / scale)
    };
    let mass = fb - fa;
    if !(mass > 0.0) {
        return f64::NEG_INFINITY;
    }
    t3_lpdf(x, mean, var) - mass.ln()
}

/// Inverse-CDF draw from t3(mean, var) restricted to (lo, hi).
pub fn sample_truncated_t3<R: Rng + ?Sized>(
    rng: &mut R,
    mean: f64,
    var: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::InputDomain(format!(
            "truncated t3 needs positive finite variance, got {var}"
        )));
    }
    if !(lo < hi) {
        return Err(Error::InputDomain(format!(
            "truncation interval ({lo}, {hi}) is empty"
        )));
    }
    let scale = (var / 3.0).sqrt();
    let fa = if lo == f64::NEG_INFINITY {
        0.0
    } else {
        t3_std_cdf((lo - mean) / scale)
    };
    let fb = if hi == f64::INFINITY {
        1.0
    } else {
        t3_std_cdf((hi - mean) / scale)
    };
    let mass = fb - fa;
    if !(mass > 0.0) {
        return Err(Error::NumericDegenerate(format!(
            "truncation interval ({lo}, {hi}) carries no representable t3 mass"
        )));
    }
    let u: f64 = rng.gen();
    let t = t3_std_quantile(fa + u * mass)?;
    Ok((mean + scale * t).clamp(lo, hi))
}

/// Log density of a uniform on (lo, hi).
pub fn uniform_lpdf(x: f64, lo: f64, hi: f64) -> f64 {
    if lo >= hi || x < lo || x > hi {
        return f64::NEG_INFINITY;
    }
    -(hi - lo).ln()
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}
