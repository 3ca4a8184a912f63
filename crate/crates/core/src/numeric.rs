//! Small numerical kernels shared across modules: compensated summation,
//! standard normal tail functions, Kolmogorov–Smirnov distance and seed mixing.

use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

pub fn compensated_mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Mean of squared deviations from the mean (divisor `n`).
pub fn mean_squared_deviation(values: &[f64]) -> f64 {
    let mean = compensated_mean(values);
    compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / values.len() as f64
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper-tail probability `1 - Φ(x)` without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile for `p ∈ (0, 1)`: a closed-form start polished by
/// two Newton steps against the accurate CDF.
pub fn normal_quantile(p: f64) -> f64 {
    let mut x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..2 {
        let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if !(density > 0.0) {
            break;
        }
        let err = if x > 0.0 { (1.0 - p) - normal_sf(x) } else { normal_cdf(x) - p };
        x -= err / density;
    }
    x
}

/// Two-sided p-value against the standard normal, `2(1 - Φ(|t|))`.
pub fn p_value(t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::invalid(format!("test statistic must be finite, got {t}")));
    }
    Ok((2.0 * normal_sf(t.abs())).min(1.0))
}

/// Two-sided critical value `Φ⁻¹(1 - alpha/2)`.
pub fn critical_value(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(normal_quantile(1.0 - alpha / 2.0))
}

/// Kolmogorov–Smirnov distance `sup_x |F_n(x) - Φ(x)|` of a sample to N(0, 1).
pub fn ks_distance_to_normal(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = normal_cdf(x);
            let above = (i as f64 + 1.0) / n - cdf;
            let below = cdf - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Sample standard deviation (divisor `n - 1`).
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    (mean_squared_deviation(values) * n / (n - 1.0)).sqrt()
}

/// SplitMix64 finalizer applied to a `(base, counter)` pair. Gives each Monte
/// Carlo replicate an independent, platform-stable seed.
pub fn mix64(base: u64, counter: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(counter.wrapping_mul(0xd1b5_4a32_d192_ed03));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
