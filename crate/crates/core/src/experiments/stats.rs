//! Interval and test statistics for Monte Carlo rates.

use statrs::distribution::{ContinuousCDF, Normal};

/// Two-sided z for a 95% interval.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    assert!(trials > 0, "empty sample");
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Two-sided p-value of the pooled two-proportion z-test.
pub fn two_proportion_p_value(s1: usize, n1: usize, s2: usize, n2: usize) -> f64 {
    assert!(n1 > 0 && n2 > 0, "empty sample");
    let (p1, p2) = (s1 as f64 / n1 as f64, s2 as f64 / n2 as f64);
    let pooled = (s1 + s2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if se == 0.0 {
        return 1.0; // both proportions identical and degenerate
    }
    let z = (p1 - p2) / se;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    2.0 * (1.0 - normal.cdf(z.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_brackets_the_point_estimate() {
        let (lo, hi) = wilson_interval(95, 100, Z_95);
        assert!(lo < 0.95 && 0.95 < hi);
        assert!(lo > 0.88 && hi < 0.99);

        let (lo, hi) = wilson_interval(0, 50, Z_95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.12);

        let (lo, hi) = wilson_interval(50, 50, Z_95);
        assert!(lo > 0.9);
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn wilson_narrows_with_sample_size() {
        let (lo1, hi1) = wilson_interval(90, 100, Z_95);
        let (lo2, hi2) = wilson_interval(900, 1000, Z_95);
        assert!(hi2 - lo2 < hi1 - lo1);
    }

    #[test]
    fn two_proportion_detects_difference() {
        // Same rates: large p-value.
        assert!(two_proportion_p_value(500, 1000, 505, 1000) > 0.5);
        // Clearly different rates: tiny p-value.
        assert!(two_proportion_p_value(500, 1000, 700, 1000) < 1e-6);
        // Identical degenerate samples.
        assert_eq!(two_proportion_p_value(10, 10, 10, 10), 1.0);
    }
}
