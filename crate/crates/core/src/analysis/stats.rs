//! Small statistics toolkit for replicate experiments.

use std::collections::BTreeMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::random::aux_uniform;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Binomial proportion and its standard error `sqrt(p(1-p)/n)`.
pub fn proportion(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = successes as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

/// Ordinary least squares `y = intercept + slope * x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let (mx, my) = (mean(xs), mean(ys));
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let slope_se = if n > 2.0 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    LinearFit {
        slope,
        intercept,
        slope_se,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness of fit of `observed` counts against cell probabilities.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let statistic: f64 = observed
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = probs.iter().filter(|&&p| p > 0.0).count().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).unwrap().cdf(statistic)
    };
    ChiSquare {
        statistic,
        dof,
        p_value,
    }
}

/// Ratio `sum(num) / sum(den)` with a standard error clustered on the index
/// (one cluster per seed).
pub fn ratio_estimate(num: &[f64], den: &[f64]) -> (f64, f64) {
    assert_eq!(num.len(), den.len());
    let sd: f64 = den.iter().sum();
    if sd == 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let r = num.iter().sum::<f64>() / sd;
    let g = num.len() as f64;
    if g < 2.0 {
        return (r, f64::NAN);
    }
    let ss: f64 = num.iter().zip(den).map(|(y, x)| (y - r * x).powi(2)).sum();
    (r, (g / (g - 1.0) * ss).sqrt() / sd)
}

/// Bootstrap replicates of `stat` over resampled index sets.
pub fn bootstrap<F>(n: usize, replicates: usize, seed: u64, stat: F) -> Vec<f64>
where
    F: Fn(&[usize]) -> f64,
{
    (0..replicates)
        .map(|b| {
            let idx: Vec<usize> = (0..n)
                .map(|i| {
                    let u = aux_uniform(seed, b as u64, i as u64);
                    ((u * n as f64) as usize).min(n - 1)
                })
                .collect();
            stat(&idx)
        })
        .collect()
}

/// Total-variation distance between two distributions on a common key type.
pub fn total_variation<K: Ord>(p: &BTreeMap<K, f64>, q: &BTreeMap<K, f64>) -> f64 {
    let mut d = 0.0;
    for (k, &pv) in p {
        d += (pv - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, &qv) in q {
        if !p.contains_key(k) {
            d += qv.abs();
        }
    }
    0.5 * d
}
