use crate::error::{Error, Result};

fn check_probs(probs: &[f64]) -> Result<()> {
    for (index, &value) in probs.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidProbability { index, value });
        }
    }
    Ok(())
}

/// Probability mass function of the number of successes among independent
/// Bernoulli trials with the given success probabilities.
///
/// Built by convolving one trial at a time, O(n²). Entry `j` of the result is
/// P(X = j), for j in 0..=n.
pub fn poisson_binomial_pmf(probs: &[f64]) -> Result<Vec<f64>> {
    check_probs(probs)?;
    let mut pmf = vec![0.0; probs.len() + 1];
    pmf[0] = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        let q = 1.0 - p;
        // walk downwards so pmf[j - 1] still holds the previous round
        for j in (1..=i + 1).rev() {
            pmf[j] = pmf[j] * q + pmf[j - 1] * p;
        }
        pmf[0] *= q;
    }
    Ok(pmf)
}

/// Exact upper tail P(X >= k) of a Poisson-Binomial variable.
pub fn poisson_binomial_tail(probs: &[f64], k: usize) -> Result<f64> {
    if k > probs.len() {
        return Err(Error::ThresholdOutOfRange {
            k,
            n: probs.len(),
        });
    }
    let pmf = poisson_binomial_pmf(probs)?;
    if k == 0 {
        return Ok(1.0);
    }
    // sum smallest terms first
    let tail: f64 = pmf[k..].iter().rev().sum();
    Ok(tail.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Sums the probability of every one of the 2^n outcomes.
    fn brute_force_tail(probs: &[f64], k: usize) -> f64 {
        let n = probs.len();
        let mut total = 0.0;
        for mask in 0u32..(1u32 << n) {
            if (mask.count_ones() as usize) < k {
                continue;
            }
            let mut p = 1.0;
            for (i, &pi) in probs.iter().enumerate() {
                p *= if mask & (1 << i) != 0 { pi } else { 1.0 - pi };
            }
            total += p;
        }
        total
    }

    fn binomial_tail(n: u64, p: f64, k: u64) -> f64 {
        let mut total = 0.0;
        for j in k..=n {
            let mut c = 1.0;
            for i in 0..j {
                c = c * (n - i) as f64 / (i + 1) as f64;
            }
            total += c * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32);
        }
        total
    }

    #[test]
    fn two_fair_coins() {
        assert!((poisson_binomial_tail(&[0.5, 0.5], 2).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn certain_event() {
        assert_eq!(poisson_binomial_tail(&[1.0, 0.3], 1).unwrap(), 1.0);
    }

    #[test]
    fn flat_high_confidence_tail() {
        let probs = vec![0.57; 27];
        let tail = poisson_binomial_tail(&probs, 21).unwrap();
        assert!((0.010..=0.030).contains(&tail), "{tail}");
        assert!((tail - binomial_tail(27, 0.57, 21)).abs() < 1e-12);
        // frozen from an independent binomial survival function
        assert!((tail - 0.020_868_074_441_465).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_probability() {
        assert!(matches!(
            poisson_binomial_tail(&[0.2, 1.5], 1),
            Err(Error::InvalidProbability { index: 1, .. })
        ));
        assert!(poisson_binomial_tail(&[f64::NAN], 0).is_err());
    }

    #[test]
    fn rejects_k_past_n() {
        assert!(matches!(
            poisson_binomial_tail(&[0.2], 2),
            Err(Error::ThresholdOutOfRange { k: 2, n: 1 })
        ));
    }

    #[test]
    fn empty_vector() {
        assert_eq!(poisson_binomial_tail(&[], 0).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn matches_enumeration(probs in prop::collection::vec(0.0f64..=1.0, 0..=14), k_frac in 0.0f64..=1.0) {
            let k = (k_frac * probs.len() as f64).round() as usize;
            let dp = poisson_binomial_tail(&probs, k).unwrap();
            prop_assert!((dp - brute_force_tail(&probs, k)).abs() < 1e-12);
        }

        #[test]
        fn equal_probs_reduce_to_binomial(n in 1u64..40, p in 0.0f64..=1.0, k_frac in 0.0f64..=1.0) {
            let k = (k_frac * n as f64).round() as u64;
            let dp = poisson_binomial_tail(&vec![p; n as usize], k as usize).unwrap();
            prop_assert!((dp - binomial_tail(n, p, k)).abs() < 1e-12);
        }

        #[test]
        fn tail_is_monotone(probs in prop::collection::vec(0.0f64..=1.0, 0..=30)) {
            let mut prev = poisson_binomial_tail(&probs, 0).unwrap();
            prop_assert_eq!(prev, 1.0);
            for k in 1..=probs.len() {
                let t = poisson_binomial_tail(&probs, k).unwrap();
                prop_assert!(t <= prev + 1e-15);
                prev = t;
            }
        }
    }
}
