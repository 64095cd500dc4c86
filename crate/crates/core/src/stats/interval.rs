use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const WILSON_Z_95: f64 = 1.96;

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if successes > n {
        return Err(Error::TooManySuccesses { successes, n });
    }
    if !z.is_finite() || z < 0.0 {
        return Err(Error::NonFinite { field: "z" });
    }
    let n = n as f64;
    let p_hat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p_hat + z2 / (2.0 * n)) / denom;
    let half = z * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Ok(((center - half).max(0.0), (center + half).min(1.0)))
}

/// Cohen's d between two accuracy proportions, standardized by the
/// equal-weight pooled Bernoulli standard deviation. Sample sizes do not
/// enter the formula; they are accepted so call sites read like the data.
pub fn cohens_d_proportions(p1: f64, _n1: u64, p2: f64, _n2: u64) -> Result<f64> {
    for (index, value) in [p1, p2].into_iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidProbability { index, value });
        }
    }
    let pooled_var = (p1 * (1.0 - p1) + p2 * (1.0 - p2)) / 2.0;
    if pooled_var <= 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok((p1 - p2) / pooled_var.sqrt())
}
