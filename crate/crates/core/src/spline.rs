//! Natural cubic spline interpolation on a uniform knot grid.
//!
//! Second derivatives `M_i` at the knots solve the tridiagonal system
//! `M_{i-1} + 4 M_i + M_{i+1} = 6 (y_{i+1} - 2 y_i + y_{i-1}) / θ²` with
//! `M_1 = M_B = 0`. On `[b_i, b_{i+1}]`
//!
//! ```text
//! S_i(x) = M_{i+1} (x - b_i)³ / 6θ + M_i (b_{i+1} - x)³ / 6θ
//!        + (y_{i+1}/θ - M_{i+1} θ/6)(x - b_i) + (y_i/θ - M_i θ/6)(b_{i+1} - x)
//! ```
//!
//! Outside `[b_1, b_B]` the spline continues along the tangent line at the
//! nearest end knot.

use crate::error::{check_finite, invalid, Error, Result};

/// Relative tolerance on the knot spacing.
pub const SPACING_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct NaturalSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second_derivatives: Vec<f64>,
    spacing: f64,
}

/// Solves a tridiagonal system with constant bands `(lower, diag, upper)` by
/// forward elimination and back substitution. No pivoting: callers guarantee
/// strict diagonal dominance.
pub(crate) fn solve_tridiagonal(lower: f64, diag: f64, upper: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    if n == 0 {
        return Vec::new();
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper / diag;
    d[0] = rhs[0] / diag;
    for i in 1..n {
        let denom = diag - lower * c[i - 1];
        c[i] = upper / denom;
        d[i] = (rhs[i] - lower * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

impl NaturalSpline {
    /// Fits the natural interpolating spline through `(knots[i], values[i])`.
    pub fn fit(knots: &[f64], values: &[f64]) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: knots.len(),
                right: values.len(),
            });
        }
        let b = knots.len();
        if b < 2 {
            return Err(Error::TooFewObservations { needed: 2, got: b });
        }
        check_finite(knots)?;
        check_finite(values)?;
        let spacing = (knots[b - 1] - knots[0]) / (b - 1) as f64;
        if spacing <= 0.0 {
            return Err(invalid("knots", "knots must be strictly increasing"));
        }
        for (index, w) in knots.windows(2).enumerate() {
            let gap = w[1] - w[0];
            if (gap - spacing).abs() > SPACING_TOLERANCE * spacing {
                return Err(Error::NonUniformGrid {
                    index,
                    gap,
                    expected: spacing,
                });
            }
        }

        let mut second_derivatives = vec![0.0; b];
        if b > 2 {
            let scale = 6.0 / (spacing * spacing);
            let rhs: Vec<f64> = values
                .windows(3)
                .map(|y| scale * (y[2] - 2.0 * y[1] + y[0]))
                .collect();
            let interior = solve_tridiagonal(1.0, 4.0, 1.0, &rhs);
            second_derivatives[1..b - 1].copy_from_slice(&interior);
        }

        Ok(Self {
            knots: knots.to_vec(),
            values: values.to_vec(),
            second_derivatives,
            spacing,
        })
    }

    /// Convenience constructor for knots `start + i·spacing`.
    pub fn fit_uniform(start: f64, spacing: f64, values: &[f64]) -> Result<Self> {
        let knots: Vec<f64> = (0..values.len())
            .map(|i| start + spacing * i as f64)
            .collect();
        Self::fit(&knots, values)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn second_derivatives(&self) -> &[f64] {
        &self.second_derivatives
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn first_knot(&self) -> f64 {
        self.knots[0]
    }

    pub fn last_knot(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    fn segment_of(&self, x: f64) -> usize {
        let last = self.knots.len() - 2;
        let pos = ((x - self.knots[0]) / self.spacing).floor();
        if pos <= 0.0 {
            0
        } else {
            (pos as usize).min(last)
        }
    }

    /// Value of cubic piece `seg` (covering `[b_seg, b_{seg+1}]`) at `x`.
    pub fn segment_value(&self, seg: usize, x: f64) -> f64 {
        let t = self.spacing;
        let (m0, m1) = (
            self.second_derivatives[seg],
            self.second_derivatives[seg + 1],
        );
        let (y0, y1) = (self.values[seg], self.values[seg + 1]);
        let a = x - self.knots[seg];
        let b = self.knots[seg + 1] - x;
        m1 * a * a * a / (6.0 * t)
            + m0 * b * b * b / (6.0 * t)
            + (y1 / t - m1 * t / 6.0) * a
            + (y0 / t - m0 * t / 6.0) * b
    }

    pub fn segment_derivative(&self, seg: usize, x: f64) -> f64 {
        let t = self.spacing;
        let (m0, m1) = (
            self.second_derivatives[seg],
            self.second_derivatives[seg + 1],
        );
        let (y0, y1) = (self.values[seg], self.values[seg + 1]);
        let a = x - self.knots[seg];
        let b = self.knots[seg + 1] - x;
        m1 * a * a / (2.0 * t) - m0 * b * b / (2.0 * t) + (y1 - y0) / t - (m1 - m0) * t / 6.0
    }

    pub fn segment_second_derivative(&self, seg: usize, x: f64) -> f64 {
        let t = self.spacing;
        let a = x - self.knots[seg];
        let b = self.knots[seg + 1] - x;
        (self.second_derivatives[seg + 1] * a + self.second_derivatives[seg] * b) / t
    }

    /// Evaluates the spline, continuing linearly beyond the end knots.
    pub fn evaluate(&self, x: f64) -> f64 {
        let first = self.first_knot();
        let last = self.last_knot();
        if x < first {
            let slope = self.segment_derivative(0, first);
            self.values[0] + slope * (x - first)
        } else if x > last {
            let seg = self.knots.len() - 2;
            let slope = self.segment_derivative(seg, last);
            self.values[seg + 1] + slope * (x - last)
        } else {
            self.segment_value(self.segment_of(x), x)
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let first = self.first_knot();
        let last = self.last_knot();
        if x < first {
            self.segment_derivative(0, first)
        } else if x > last {
            self.segment_derivative(self.knots.len() - 2, last)
        } else {
            self.segment_derivative(self.segment_of(x), x)
        }
    }

    /// Second derivative; zero on the linear continuation.
    pub fn second_derivative(&self, x: f64) -> f64 {
        if x < self.first_knot() || x > self.last_knot() {
            0.0
        } else {
            self.segment_second_derivative(self.segment_of(x), x)
        }
    }
}
