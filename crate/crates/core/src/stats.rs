//! Small descriptive-statistics helpers shared by the selectors and the
//! benchmark harness. Quantiles use linear interpolation between the closest
//! order statistics (index `(len - 1) * p`).

use crate::error::{invalid, Error, Result};

pub fn mean(data: &[f64]) -> f64 {
    data.iter().sum::<f64>() / data.len() as f64
}

/// Sample standard deviation with the `n - 1` denominator.
pub fn sample_sd(data: &[f64]) -> f64 {
    let n = data.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(data);
    let ss: f64 = data.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (n - 1) as f64).sqrt()
}

pub fn sorted(data: &[f64]) -> Vec<f64> {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        return sorted[lo];
    }
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn quantile(data: &[f64], p: f64) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, got: 0 });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid("p", format!("quantile level {p} outside [0, 1]")));
    }
    Ok(quantile_sorted(&sorted(data), p))
}

pub fn median(data: &[f64]) -> Result<f64> {
    quantile(data, 0.5)
}

pub fn iqr(data: &[f64]) -> Result<f64> {
    let s = sorted(data);
    if s.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, got: 0 });
    }
    Ok(quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25))
}

/// Median and median absolute deviation from the median (no consistency
/// factor).
pub fn median_mad(values: &[f64]) -> Result<(f64, f64)> {
    let med = median(values)?;
    let dev: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    Ok((med, median(&dev)?))
}

/// Composite trapezoid rule over an arbitrary (sorted) abscissa.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// `count` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (count - 1) as f64;
            (0..count)
                .map(|i| {
                    if i == count - 1 {
                        hi
                    } else {
                        lo + step * i as f64
                    }
                })
                .collect()
        }
    }
}
