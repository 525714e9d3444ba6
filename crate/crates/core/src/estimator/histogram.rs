use crate::error::{check_finite, invalid, Error, Result};

/// Sturges denominator `1 + 3.322 (log10 n + log10 m)`; `3.322 log10` is
/// `log2` to four digits.
fn sturges_classes(n: usize, m: usize) -> f64 {
    1.0 + 3.322 * ((n as f64).log10() + (m as f64).log10())
}

/// Width for a span that already includes the noise spread.
pub(crate) fn sturges_width(span: f64, n: usize, m: usize) -> f64 {
    span / sturges_classes(n, m)
}

/// Adjusted Sturges bin width `(R + 2h) / (1 + 3.322 {log10 n + log10 m})`
/// for an expanded sample of `n·m` pseudo-observations.
pub fn bin_width(range: f64, h: f64, n: usize, m: usize) -> Result<f64> {
    if !(range > 0.0 && range.is_finite()) {
        return Err(invalid("range", format!("must be positive, got {range}")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid("h", format!("must be positive, got {h}")));
    }
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: n });
    }
    if m < 1 {
        return Err(invalid("m", "need at least one replicate per observation"));
    }
    Ok(sturges_width(range + 2.0 * h, n, m))
}

/// Density histogram on a uniform grid anchored at the smallest value.
///
/// Bins are half-open `[left, right)` except the last, which is closed. The
/// last bin may extend past the largest value so that all bins share the
/// width `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramGrid {
    origin: f64,
    theta: f64,
    counts: Vec<u64>,
    heights: Vec<f64>,
    total: u64,
}

impl HistogramGrid {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn midpoint(&self, r: usize) -> f64 {
        self.origin + self.theta * (r as f64 + 0.5)
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.len()).map(|r| self.midpoint(r)).collect()
    }

    /// Bin of `x`; values beyond either end land in the nearest end bin.
    pub fn bin_index(&self, x: f64) -> usize {
        let pos = ((x - self.origin) / self.theta).floor();
        if pos <= 0.0 {
            0
        } else {
            (pos as usize).min(self.len() - 1)
        }
    }

    /// Counts of arbitrary values on this grid.
    pub fn count_values(&self, values: &[f64]) -> Vec<u64> {
        let mut counts = vec![0u64; self.len()];
        for &v in values {
            counts[self.bin_index(v)] += 1;
        }
        counts
    }
}

pub fn build_histogram(pseudo: &[f64], theta: f64) -> Result<HistogramGrid> {
    build_histogram_with_min_bins(pseudo, theta, 1)
}

pub(crate) fn build_histogram_with_min_bins(
    pseudo: &[f64],
    theta: f64,
    min_bins: usize,
) -> Result<HistogramGrid> {
    if pseudo.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, got: 0 });
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(invalid(
            "theta",
            format!("bin width must be positive, got {theta}"),
        ));
    }
    check_finite(pseudo)?;
    let (lo, hi) = pseudo
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let bins = (((hi - lo) / theta).ceil() as usize).max(min_bins).max(1);
    let mut grid = HistogramGrid {
        origin: lo,
        theta,
        counts: vec![0; bins],
        heights: Vec::new(),
        total: pseudo.len() as u64,
    };
    grid.counts = grid.count_values(pseudo);
    let scale = 1.0 / (pseudo.len() as f64 * theta);
    grid.heights = grid.counts.iter().map(|&c| c as f64 * scale).collect();
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjusted_sturges_examples() {
        let w = bin_width(4.0, 0.2, 50, 10).unwrap();
        let expected = 4.4 / (1.0 + 3.322 * (50f64.log10() + 1.0));
        assert_eq!(w, expected);
        assert!((w - 0.4415).abs() < 1e-4);
        // classical Sturges width through the unchecked helper
        let classic = sturges_width(1.0, 10, 1);
        assert!((classic - 0.231_374).abs() < 1e-6);
        assert_eq!(
            sturges_width(3.0, 200, 1),
            3.0 / (1.0 + 3.322 * 200f64.log10())
        );
    }

    #[test]
    fn bin_width_rejects_bad_inputs() {
        assert!(bin_width(0.0, 0.1, 10, 1).is_err());
        assert!(bin_width(1.0, 0.0, 10, 1).is_err());
        assert!(bin_width(1.0, 0.1, 1, 1).is_err());
        assert!(bin_width(1.0, 0.1, 10, 0).is_err());
    }

    #[test]
    fn half_open_binning() {
        let g = build_histogram(&[0.0, 1.0, 2.0, 3.0], 2.0).unwrap();
        assert_eq!(g.counts(), &[2, 2]);
        assert_eq!(g.heights(), &[0.25, 0.25]);
        assert_eq!(g.midpoints(), vec![1.0, 3.0]);
    }

    #[test]
    fn single_bin_mass() {
        let pseudo: Vec<f64> = (0..100).map(|i| 5.0 + 1e-3 * i as f64).collect();
        let g = build_histogram(&pseudo, 1.0).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.heights()[0], 1.0);
        let padded = build_histogram_with_min_bins(&pseudo, 1.0, 2).unwrap();
        assert_eq!(padded.counts(), &[100, 0]);
    }

    #[test]
    fn empty_rejected() {
        assert!(build_histogram(&[], 1.0).is_err());
        assert!(build_histogram(&[1.0], 0.0).is_err());
    }
}
