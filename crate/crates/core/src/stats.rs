//! Small statistics toolbox: autocorrelation-aware errors, Wilson intervals, quantiles,
//! bootstrap and Pearson's chi-square test.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Integrated autocorrelation time with Sokal's automatic window (`c = 6`).
///
/// Returns `0.5` for uncorrelated data and for constant series.
pub fn integrated_autocorr_time(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return 0.5;
    }
    let m = mean(xs);
    let c0 = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
    if c0 <= 0.0 || !c0.is_finite() {
        return 0.5;
    }
    let mut tau = 0.5;
    for t in 1..n / 2 {
        let ct = xs[..n - t]
            .iter()
            .zip(&xs[t..])
            .map(|(a, b)| (a - m) * (b - m))
            .sum::<f64>()
            / n as f64;
        tau += ct / c0;
        if (t as f64) >= 6.0 * tau {
            break;
        }
    }
    tau.max(0.5)
}

/// Mean and its standard error, inflated by `2 τ_int`.
pub fn mean_with_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let tau = integrated_autocorr_time(xs);
    let var = variance(xs);
    (mean(xs), (var * 2.0 * tau / n).sqrt())
}

/// Wilson score interval for `k` successes out of `n` at `z` standard deviations.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Linear-interpolation quantile (type 7) of unsorted data.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Standard deviation of `statistic` over bootstrap resamples of whole groups.
pub fn bootstrap_groups<R: Rng>(
    groups: &[Vec<f64>],
    resamples: usize,
    rng: &mut R,
    statistic: impl Fn(&[f64]) -> f64,
) -> f64 {
    if groups.len() < 2 || resamples < 2 {
        return 0.0;
    }
    let mut values = Vec::with_capacity(resamples);
    let mut pooled = Vec::new();
    for _ in 0..resamples {
        pooled.clear();
        for _ in 0..groups.len() {
            let g = &groups[rng.gen_range(0..groups.len())];
            pooled.extend_from_slice(g);
        }
        let v = statistic(&pooled);
        if v.is_finite() {
            values.push(v);
        }
    }
    variance(&values).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness-of-fit of observed counts against expected probabilities.
///
/// Cells with expected count below `min_expected` are pooled into one cell.
pub fn chi_square_test(observed: &[u64], probs: &[f64], min_expected: f64) -> ChiSquareTest {
    assert_eq!(observed.len(), probs.len());
    let n: u64 = observed.iter().sum();
    let n = n as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * n;
        if e < min_expected {
            pool_o += o as f64;
            pool_e += e;
        } else {
            stat += (o as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    if pool_e > 0.0 {
        stat += (pool_o - pool_e).powi(2) / pool_e;
        cells += 1;
    }
    let dof = cells.saturating_sub(1).max(1);
    let p_value = ChiSquared::new(dof as f64)
        .map(|d| 1.0 - d.cdf(stat))
        .unwrap_or(f64::NAN);
    ChiSquareTest { statistic: stat, dof, p_value }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn autocorrelation_of_constant_and_white_noise() {
        assert_eq!(integrated_autocorr_time(&[1.0; 100]), 0.5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..20_000).map(|_| rng.gen::<f64>()).collect();
        let tau = integrated_autocorr_time(&xs);
        assert!((tau - 0.5).abs() < 0.1, "tau = {tau}");
    }

    #[test]
    fn ar1_autocorrelation_time() {
        // AR(1) with coefficient a has tau_int = (1 + a) / (2 (1 - a)).
        let a = 0.8;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut x = 0.0;
        let xs: Vec<f64> = (0..200_000)
            .map(|_| {
                x = a * x + rng.gen::<f64>() - 0.5;
                x
            })
            .collect();
        let tau = integrated_autocorr_time(&xs);
        assert!((tau - 4.5).abs() < 0.5, "tau = {tau}");
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(3, 10, 1.96);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo, hi) = wilson_interval(0, 10, 1.96);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.4);
    }

    #[test]
    fn quantiles() {
        let xs = [5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(median(&xs), 3.0);
        assert_eq!(quantile(&xs, 0.25), 2.0);
        assert_eq!(quantile(&xs, 1.0), 5.0);
    }

    #[test]
    fn chi_square_accepts_exact_counts() {
        let t = chi_square_test(&[250, 250, 500], &[0.25, 0.25, 0.5], 5.0);
        assert_eq!(t.statistic, 0.0);
        assert!(t.p_value > 0.99);
        let t = chi_square_test(&[400, 100, 500], &[0.25, 0.25, 0.5], 5.0);
        assert!(t.p_value < 1e-6);
    }
}
