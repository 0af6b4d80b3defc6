//! Sample summaries, bootstrap intervals and the Kolmogorov-Smirnov gap.

use rand::Rng;
use serde::Serialize;

use crate::rng::{self, Domain};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn standard_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Linear interpolation between order statistics (the "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi || sorted[lo] == sorted[hi] {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

pub fn median(xs: &[f64]) -> f64 {
    quantile_sorted(&sorted(xs), 0.5)
}

/// Right-continuous empirical CDF of sorted samples.
pub fn ecdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&s| s <= x) as f64 / sorted.len() as f64
}

/// `sup |F_n - F|`, checked at every grid point and on both sides of every
/// sample point.
///
/// Both functions are taken right-continuous; at a sample point `s` the
/// left limits are compared as well, with `F(s-)` read at the next float
/// below `s`. A sample equal to its own point mass therefore scores 0.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F, grid: &[f64]) -> f64 {
    let s = sorted(samples);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        let x = s[i];
        let mut j = i;
        while j < s.len() && s[j] == x {
            j += 1;
        }
        if x.is_finite() {
            d = d.max((cdf(x.next_down()) - i as f64 / n).abs());
            d = d.max((cdf(x) - j as f64 / n).abs());
        }
        i = j;
    }
    for &x in grid {
        d = d.max((ecdf(&s, x) - cdf(x)).abs());
    }
    d
}

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Bootstrap replicates of `stat`, resampling from stream
/// `(seed, Bootstrap, stream_index)`.
pub fn bootstrap<F>(xs: &[f64], reps: usize, seed: u64, stream_index: u64, stat: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut rng = rng::stream(seed, Domain::Bootstrap, stream_index);
    let mut buf = vec![0.0; xs.len()];
    (0..reps)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = xs[rng.random_range(0..xs.len())];
            }
            stat(&buf)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Percentile interval at `level` from bootstrap replicates.
pub fn percentile_interval(replicates: &[f64], level: f64) -> Interval {
    let s = sorted(replicates);
    let tail = 0.5 * (1.0 - level);
    Interval {
        lo: quantile_sorted(&s, tail),
        hi: quantile_sorted(&s, 1.0 - tail),
    }
}

/// Count, moments and range of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub zero_fraction: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        Self {
            count: xs.len(),
            mean: mean(xs),
            sd: if xs.len() > 1 { variance(xs).sqrt() } else { 0.0 },
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            zero_fraction: xs.iter().filter(|&&x| x == 0.0).count() as f64 / xs.len() as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 1.0), 4.0);
        assert_eq!(quantile_sorted(&s, 0.5), 2.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    }

    /// Brute force: scan a dense grid plus points just either side of
    /// each sample, counting by hand.
    fn ks_oracle(samples: &[f64], cdf: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
        let n = samples.len() as f64;
        let mut points: Vec<f64> = (0..=30_000).map(|i| lo + (hi - lo) * i as f64 / 30_000.0).collect();
        for &s in samples {
            points.push(s);
            points.push(s - 1e-12);
        }
        points
            .into_iter()
            .map(|x| {
                let below = samples.iter().filter(|&&s| s <= x).count() as f64 / n;
                (below - cdf(x)).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn ks_two_points_against_uniform() {
        let u = |x: f64| (x / 3.0).clamp(0.0, 1.0);
        let d = ks_distance(&[1.0, 2.0], u, &linspace(0.0, 3.0, 7));
        assert!((d - 1.0 / 3.0).abs() < 1e-12);
        assert!((d - ks_oracle(&[1.0, 2.0], u, -1.0, 4.0)).abs() < 1e-9);
    }

    #[test]
    fn ks_point_mass_is_zero() {
        let point = |x: f64| if x >= 2.5 { 1.0 } else { 0.0 };
        assert_eq!(ks_distance(&[2.5; 10], point, &linspace(0.0, 5.0, 11)), 0.0);
    }

    #[test]
    fn ks_matches_oracle_on_random_samples() {
        let mut rng = crate::rng::stream(1, Domain::Trial, 0);
        let cdf = |x: f64| 1.0 - (-x.max(0.0)).exp();
        for _ in 0..5 {
            let xs: Vec<f64> = (0..40).map(|_| rng.random::<f64>() * 3.0).collect();
            let d = ks_distance(&xs, cdf, &[]);
            assert!((d - ks_oracle(&xs, cdf, 0.0, 3.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn ks_self_draws_within_dkw_scale() {
        let mut rng = crate::rng::stream(2, Domain::Trial, 0);
        let xs: Vec<f64> = (0..10_000).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let d = ks_distance(&xs, |x| 1.0 - (-x.max(0.0)).exp(), &linspace(0.0, 5.0, 200));
        assert!(d <= 1.36 / 100.0 * 1.5, "{d}");
    }

    #[test]
    fn bootstrap_is_reproducible_and_covers_mean() {
        let xs: Vec<f64> = (0..200).map(|i| (i % 17) as f64).collect();
        let a = bootstrap(&xs, 500, 9, 0, mean);
        assert_eq!(a, bootstrap(&xs, 500, 9, 0, mean));
        let ci = percentile_interval(&a, 0.95);
        assert!(ci.contains(mean(&xs)));
        // bootstrap sd of the mean close to the analytic standard error
        let sd = variance(&a).sqrt();
        assert!((sd / standard_error(&xs) - 1.0).abs() < 0.15);
    }
}
