use std::fmt;

use crate::error::{invalid, Error, Result};

/// Domain constraint on the observations.
///
/// Constrained supports are mapped to the real line before noise is added:
/// `log(x - L)` below, `log(U - x)` above and `logit((x - L)/(U - L))` on an
/// interval.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SupportSpec {
    #[default]
    Unbounded,
    LowerBounded(f64),
    UpperBounded(f64),
    Interval(f64, f64),
}

impl SupportSpec {
    /// Builds a support from optional lower/upper bounds.
    pub fn from_bounds(lower: Option<f64>, upper: Option<f64>) -> Result<Self> {
        let spec = match (lower, upper) {
            (None, None) => SupportSpec::Unbounded,
            (Some(l), None) => SupportSpec::LowerBounded(l),
            (None, Some(u)) => SupportSpec::UpperBounded(u),
            (Some(l), Some(u)) => SupportSpec::Interval(l, u),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid("support", format!("bound {v} is not finite")))
            }
        };
        match *self {
            SupportSpec::Unbounded => Ok(()),
            SupportSpec::LowerBounded(l) => finite(l),
            SupportSpec::UpperBounded(u) => finite(u),
            SupportSpec::Interval(l, u) => {
                finite(l)?;
                finite(u)?;
                if l < u {
                    Ok(())
                } else {
                    Err(invalid(
                        "support",
                        format!("interval requires L < U, got ({l}, {u})"),
                    ))
                }
            }
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, SupportSpec::Unbounded)
    }

    /// Strict interior membership.
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            SupportSpec::Unbounded => x.is_finite(),
            SupportSpec::LowerBounded(l) => x > l && x.is_finite(),
            SupportSpec::UpperBounded(u) => x < u && x.is_finite(),
            SupportSpec::Interval(l, u) => x > l && x < u,
        }
    }

    /// Maps an interior point to the real line.
    pub fn forward(&self, x: f64) -> Result<f64> {
        if !self.contains(x) {
            return Err(Error::OutsideSupport {
                value: x,
                support: self.to_string(),
            });
        }
        Ok(match *self {
            SupportSpec::Unbounded => x,
            SupportSpec::LowerBounded(l) => (x - l).ln(),
            SupportSpec::UpperBounded(u) => (u - x).ln(),
            SupportSpec::Interval(l, u) => ((x - l) / (u - x)).ln(),
        })
    }

    /// Inverse of [`forward`](Self::forward). Results that round onto a
    /// bound are nudged to the nearest interior float.
    pub fn backward(&self, z: f64) -> f64 {
        let x = match *self {
            SupportSpec::Unbounded => return z,
            SupportSpec::LowerBounded(l) => l + z.exp(),
            SupportSpec::UpperBounded(u) => u - z.exp(),
            SupportSpec::Interval(l, u) => {
                if z >= 0.0 {
                    u - (u - l) / (1.0 + z.exp())
                } else {
                    l + (u - l) / (1.0 + (-z).exp())
                }
            }
        };
        self.nudge_inside(x)
    }

    fn nudge_inside(&self, x: f64) -> f64 {
        let (lo, hi) = self.bounds();
        let mut x = x;
        if let Some(l) = lo {
            if x <= l {
                x = l.next_up();
            }
        }
        if let Some(u) = hi {
            if x >= u {
                x = u.next_down();
            }
        }
        x
    }

    /// `|dz/dx|` of the forward map at an interior point.
    pub fn jacobian(&self, x: f64) -> f64 {
        match *self {
            SupportSpec::Unbounded => 1.0,
            SupportSpec::LowerBounded(l) => 1.0 / (x - l),
            SupportSpec::UpperBounded(u) => 1.0 / (u - x),
            SupportSpec::Interval(l, u) => (u - l) / ((x - l) * (u - x)),
        }
    }

    pub fn bounds(&self) -> (Option<f64>, Option<f64>) {
        match *self {
            SupportSpec::Unbounded => (None, None),
            SupportSpec::LowerBounded(l) => (Some(l), None),
            SupportSpec::UpperBounded(u) => (None, Some(u)),
            SupportSpec::Interval(l, u) => (Some(l), Some(u)),
        }
    }
}

impl fmt::Display for SupportSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SupportSpec::Unbounded => write!(f, "(-inf, inf)"),
            SupportSpec::LowerBounded(l) => write!(f, "({l}, inf)"),
            SupportSpec::UpperBounded(u) => write!(f, "(-inf, {u})"),
            SupportSpec::Interval(l, u) => write!(f, "({l}, {u})"),
        }
    }
}
