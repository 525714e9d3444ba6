//! Bandwidth selectors for the SHIDE estimator.
//!
//! `h_amise` is the plug-in AMISE minimiser
//! `(R(K)(1 + 1/c) / (σ_K⁴ Ψ))^{1/5} n^{-1/5}`. The percentile rules use the
//! α-quantile `d_α` of the nearest-neighbour spacings: the raw rule returns
//! `d_α / 2`, the calibrated rule rescales `d_α` by
//! `λ_n = n^{4/5} (R(K)(1 + 1/c) / (σ_K⁴ Ψ))^{1/5} f̄ / q_α` with
//! `q_α = -ln(1 - α)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::baseline::{normal_pdf, silverman_bw};
use crate::error::{check_finite, invalid, Error, Result};
use crate::kernel::{check_order, roughness, sigma_k_sq, RoughnessMethod};
use crate::stats;

/// Smallest value [`pilot_density_at`] returns.
pub const PILOT_FLOOR: f64 = 1e-300;

/// Pilot estimate of `Ψ = ∫ (f'')²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum PsiMethod {
    /// Normal reference with `s = sd(x)`.
    #[default]
    NormalRefSd,
    /// Normal reference with `s = IQR(x) / 1.349`.
    NormalRefIqr,
    /// Second derivative of an oversmoothed SHIDE fit (two-pass).
    ShidePilot,
}

impl fmt::Display for PsiMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PsiMethod::NormalRefSd => "sd",
            PsiMethod::NormalRefIqr => "iqr",
            PsiMethod::ShidePilot => "shide",
        })
    }
}

impl FromStr for PsiMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sd" => Ok(PsiMethod::NormalRefSd),
            "iqr" => Ok(PsiMethod::NormalRefIqr),
            "shide" => Ok(PsiMethod::ShidePilot),
            other => Err(invalid(
                "psi",
                format!("unknown method `{other}` (sd|iqr|shide)"),
            )),
        }
    }
}

/// Where the calibrated percentile rule reads its pilot density `f̄`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PilotLocation {
    /// Pilot KDE at the empirical `p`-quantile (`0.5` is the median).
    Quantile(f64),
    /// Density level `f̄` that makes the exponential spacing model reproduce
    /// the observed `α`: `f̄ = q_α / t` where `t` solves
    /// `mean_i [1 - exp(-t f̂(X_i))] = α` with `f̂` the pilot KDE.
    #[default]
    SpacingMatched,
}

impl fmt::Display for PilotLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PilotLocation::Quantile(p) if *p == 0.5 => f.write_str("median"),
            PilotLocation::Quantile(p) => write!(f, "{p}"),
            PilotLocation::SpacingMatched => f.write_str("spacing"),
        }
    }
}

impl FromStr for PilotLocation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(PilotLocation::Quantile(0.5)),
            "spacing" => Ok(PilotLocation::SpacingMatched),
            other => {
                let p: f64 = other.parse().map_err(|_| {
                    invalid(
                        "pilot",
                        format!("expected median|spacing|QUANTILE, got `{other}`"),
                    )
                })?;
                if p > 0.0 && p < 1.0 {
                    Ok(PilotLocation::Quantile(p))
                } else {
                    Err(invalid("pilot", format!("quantile {p} outside (0, 1)")))
                }
            }
        }
    }
}

/// Scale estimate used by the normal reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceScale {
    Sd,
    Iqr,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectorInputs {
    pub n: usize,
    pub k: u32,
    pub c: f64,
    pub alpha: f64,
    pub psi_method: PsiMethod,
    pub roughness_method: RoughnessMethod,
    pub pilot: PilotLocation,
}

impl SelectorInputs {
    /// Inputs with the default `c = 1`, `α = 0.5`, normal-reference Ψ and
    /// exact roughness.
    pub fn new(n: usize, k: u32) -> Self {
        Self {
            n,
            k,
            c: 1.0,
            alpha: 0.5,
            psi_method: PsiMethod::default(),
            roughness_method: RoughnessMethod::default(),
            pilot: PilotLocation::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::TooFewObservations {
                needed: 2,
                got: self.n,
            });
        }
        check_order(self.k)?;
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(invalid("c", format!("must be positive, got {}", self.c)));
        }
        check_alpha(self.alpha)?;
        if let PilotLocation::Quantile(p) = self.pilot {
            if !(p > 0.0 && p < 1.0) {
                return Err(invalid("pilot", format!("quantile {p} outside (0, 1)")));
            }
        }
        Ok(())
    }

    /// `(R(K)(1 + 1/c) / σ_K⁴)^{1/5}`, the Ψ- and n-free part of `h_amise`.
    fn kernel_factor(&self) -> Result<f64> {
        let r = roughness(self.k, self.roughness_method)?;
        let s2 = sigma_k_sq(self.k);
        Ok((r * (1.0 + 1.0 / self.c) / (s2 * s2)).powf(0.2))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")))
    }
}

/// `q_α = -ln(1 - α)`.
pub fn q_alpha(alpha: f64) -> f64 {
    -(-alpha).ln_1p()
}

/// Consecutive differences of the sorted sample.
pub fn spacings(data: &[f64]) -> Result<Vec<f64>> {
    if data.len() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            got: data.len(),
        });
    }
    check_finite(data)?;
    let s = stats::sorted(data);
    Ok(s.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Empirical α-quantile with linear interpolation.
pub fn spacing_quantile(spacings: &[f64], alpha: f64) -> Result<f64> {
    if spacings.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, got: 0 });
    }
    check_alpha(alpha)?;
    stats::quantile(spacings, alpha)
}

fn positive_spacing_quantile(data: &[f64], alpha: f64) -> Result<f64> {
    let d = spacings(data)?;
    if d.iter().all(|&v| v == 0.0) {
        return Err(Error::Degenerate("all ties".into()));
    }
    let q = spacing_quantile(&d, alpha)?;
    if q > 0.0 {
        Ok(q)
    } else {
        Err(Error::Degenerate(format!(
            "spacing quantile at alpha = {alpha} is zero (too many ties)"
        )))
    }
}

/// Raw percentile rule `d_α / 2`.
pub fn h_raw_percentile(data: &[f64], alpha: f64) -> Result<f64> {
    Ok(positive_spacing_quantile(data, alpha)? / 2.0)
}

/// Normal-reference curvature `3 s^{-5} / (8 √π)` for a given scale.
pub fn psi_for_scale(s: f64) -> f64 {
    3.0 / (8.0 * PI.sqrt() * s.powi(5))
}

pub fn reference_scale(data: &[f64], scale: ReferenceScale) -> Result<f64> {
    if data.len() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            got: data.len(),
        });
    }
    check_finite(data)?;
    let s = match scale {
        ReferenceScale::Sd => stats::sample_sd(data),
        ReferenceScale::Iqr => stats::iqr(data)? / 1.349,
    };
    if s > 0.0 {
        Ok(s)
    } else {
        Err(Error::Degenerate(format!(
            "{scale:?} scale estimate is zero"
        )))
    }
}

pub fn psi_normal_reference(data: &[f64], scale: ReferenceScale) -> Result<f64> {
    Ok(psi_for_scale(reference_scale(data, scale)?))
}

/// AMISE-optimal half-width for a given curvature estimate.
pub fn h_amise(inputs: &SelectorInputs, psi_hat: f64) -> Result<f64> {
    inputs.validate()?;
    check_psi(psi_hat)?;
    Ok(inputs.kernel_factor()? * psi_hat.powf(-0.2) * (inputs.n as f64).powf(-0.2))
}

fn check_psi(psi_hat: f64) -> Result<()> {
    if psi_hat > 0.0 && psi_hat.is_finite() {
        Ok(())
    } else {
        Err(invalid(
            "psi_hat",
            format!("must be positive and finite, got {psi_hat}"),
        ))
    }
}

/// Pilot density value; `floored` marks results raised to [`PILOT_FLOOR`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotDensity {
    pub value: f64,
    pub floored: bool,
}

fn gaussian_kde_at(data: &[f64], h: f64, x: f64) -> f64 {
    data.iter().map(|&xi| normal_pdf((x - xi) / h)).sum::<f64>() / (data.len() as f64 * h)
}

/// Gaussian KDE with the Silverman bandwidth, evaluated at `x`.
pub fn pilot_density_at(data: &[f64], x: f64) -> Result<PilotDensity> {
    let h = silverman_bw(data)?;
    let value = gaussian_kde_at(data, h, x);
    if value > PILOT_FLOOR {
        Ok(PilotDensity {
            value,
            floored: false,
        })
    } else {
        log::warn!("pilot density at {x} underflows; using floor {PILOT_FLOOR}");
        Ok(PilotDensity {
            value: PILOT_FLOOR,
            floored: true,
        })
    }
}

/// Density level matched to the observed spacing quantile (see
/// [`PilotLocation::SpacingMatched`]).
pub fn spacing_matched_density(data: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let h = silverman_bw(data)?;
    let f: Vec<f64> = data
        .par_iter()
        .map(|&x| gaussian_kde_at(data, h, x))
        .collect();
    let n = f.len() as f64;
    let coverage = |t: f64| f.iter().map(|&fi| -(-t * fi).exp_m1()).sum::<f64>() / n;

    let mean_f = f.iter().sum::<f64>() / n;
    let guess = q_alpha(alpha) / mean_f;
    let (mut lo, mut hi) = (guess, guess);
    while coverage(lo) > alpha {
        lo *= 0.5;
    }
    while coverage(hi) < alpha {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if coverage(mid) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(q_alpha(alpha) / (0.5 * (lo + hi)))
}

/// Calibrated percentile rule `λ_n d_α`.
pub fn h_calibrated_percentile(data: &[f64], inputs: &SelectorInputs, psi_hat: f64) -> Result<f64> {
    inputs.validate()?;
    check_psi(psi_hat)?;
    let d_alpha = positive_spacing_quantile(data, inputs.alpha)?;
    let f_bar = match inputs.pilot {
        PilotLocation::Quantile(p) => pilot_density_at(data, stats::quantile(data, p)?)?.value,
        PilotLocation::SpacingMatched => spacing_matched_density(data, inputs.alpha)?,
    };
    let n = data.len() as f64;
    let lambda =
        n.powf(0.8) * inputs.kernel_factor()? * psi_hat.powf(-0.2) * f_bar / q_alpha(inputs.alpha);
    Ok(lambda * d_alpha)
}
