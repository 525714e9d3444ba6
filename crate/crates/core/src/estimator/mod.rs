//! The SHIDE pipeline.
//!
//! Each observation is mapped to the working (real-line) scale, expanded into
//! `m` pseudo-observations by adding bounded polynomial-kernel noise, and the
//! expanded sample is histogrammed. A natural cubic spline through the square
//! roots of the bin heights gives `S`, and the density estimate is `S²`.

mod histogram;
mod support;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use histogram::{bin_width, build_histogram, HistogramGrid};
pub use support::SupportSpec;

use crate::bandwidth::{
    h_amise, h_calibrated_percentile, h_raw_percentile, psi_normal_reference, PilotLocation,
    PsiMethod, ReferenceScale, SelectorInputs,
};
use crate::error::{check_finite, invalid, Error, Result};
use crate::kernel::{check_order, PolynomialKernel, RoughnessMethod};
use crate::spline::NaturalSpline;
use crate::stats;

/// Grid size for the second-derivative integral of the SHIDE pilot.
const PILOT_GRID: usize = 4096;
/// Stream salt separating the pilot pass from the main pass.
const PILOT_SEED_SALT: u64 = 0x5851_f42d_4c95_7f2d;

/// Scale on which the histogram and spline are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum WorkingScale {
    /// Back-transform the pseudo-data and histogram them on the data scale.
    #[default]
    Original,
    /// Histogram on the transformed scale; evaluation applies the Jacobian.
    Transformed,
}

impl fmt::Display for WorkingScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WorkingScale::Original => "original",
            WorkingScale::Transformed => "transformed",
        })
    }
}

impl FromStr for WorkingScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(WorkingScale::Original),
            "transformed" => Ok(WorkingScale::Transformed),
            other => Err(invalid("working_scale", format!("unknown scale `{other}`"))),
        }
    }
}

/// How the noise half-width `h` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthChoice {
    Fixed(f64),
    AmiseOpt {
        c: f64,
        psi_method: PsiMethod,
        roughness_method: RoughnessMethod,
    },
    Percentile {
        alpha: f64,
        calibrated: bool,
        c: f64,
        psi_method: PsiMethod,
        roughness_method: RoughnessMethod,
        pilot: PilotLocation,
    },
}

impl BandwidthChoice {
    pub fn amise() -> Self {
        BandwidthChoice::AmiseOpt {
            c: 1.0,
            psi_method: PsiMethod::default(),
            roughness_method: RoughnessMethod::default(),
        }
    }

    /// Calibrated percentile rule with default settings.
    pub fn percentile(alpha: f64) -> Self {
        BandwidthChoice::Percentile {
            alpha,
            calibrated: true,
            c: 1.0,
            psi_method: PsiMethod::default(),
            roughness_method: RoughnessMethod::default(),
            pilot: PilotLocation::default(),
        }
    }
}

impl Default for BandwidthChoice {
    fn default() -> Self {
        Self::amise()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShideConfig {
    pub k: u32,
    pub m: usize,
    pub bandwidth: BandwidthChoice,
    pub support: SupportSpec,
    pub seed: u64,
    pub normalize: bool,
    pub grid_points: usize,
    pub working_scale: WorkingScale,
}

impl Default for ShideConfig {
    fn default() -> Self {
        Self {
            k: 3,
            m: 10,
            bandwidth: BandwidthChoice::default(),
            support: SupportSpec::Unbounded,
            seed: 0,
            normalize: false,
            grid_points: 512,
            working_scale: WorkingScale::Original,
        }
    }
}

impl ShideConfig {
    pub fn validate(&self) -> Result<()> {
        check_order(self.k)?;
        if self.m < 1 {
            return Err(invalid("m", "need at least one replicate per observation"));
        }
        if self.grid_points < 2 {
            return Err(invalid("grid_points", "need at least two grid points"));
        }
        self.support.validate()?;
        let check_c = |c: f64| {
            if c > 0.0 && c.is_finite() {
                Ok(())
            } else {
                Err(invalid("c", format!("must be positive, got {c}")))
            }
        };
        match self.bandwidth {
            BandwidthChoice::Fixed(h) => {
                if !(h > 0.0 && h.is_finite()) {
                    return Err(invalid("h", format!("must be positive, got {h}")));
                }
            }
            BandwidthChoice::AmiseOpt { c, .. } => check_c(c)?,
            BandwidthChoice::Percentile { alpha, c, .. } => {
                check_c(c)?;
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
                }
            }
        }
        Ok(())
    }
}

/// A fitted SHIDE density.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    spline: NaturalSpline,
    support: SupportSpec,
    scale: WorkingScale,
    window: (f64, f64),
    h_used: f64,
    theta_used: f64,
    bins: usize,
    normalization_constant: f64,
}

impl DensityEstimate {
    /// Density on the original scale; zero outside the support and outside
    /// the pseudo-data range.
    pub fn evaluate(&self, x: f64) -> f64 {
        if !self.support.contains(x) {
            return 0.0;
        }
        let (w, jacobian) = match self.scale {
            WorkingScale::Original => (x, 1.0),
            WorkingScale::Transformed => match self.support.forward(x) {
                Ok(w) => (w, self.support.jacobian(x)),
                Err(_) => return 0.0,
            },
        };
        if w < self.window.0 || w > self.window.1 {
            return 0.0;
        }
        let s = self.spline.evaluate(w);
        self.normalization_constant * s * s * jacobian
    }

    pub fn evaluate_many(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.evaluate(x)).collect()
    }

    pub fn spline(&self) -> &NaturalSpline {
        &self.spline
    }

    pub fn support(&self) -> SupportSpec {
        self.support
    }

    /// Scale the spline lives on (always `Transformed` for unbounded data,
    /// where both coincide).
    pub fn working_scale(&self) -> WorkingScale {
        self.scale
    }

    /// Pseudo-data range on the spline's scale.
    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    /// Pseudo-data range on the original scale.
    pub fn data_range(&self) -> (f64, f64) {
        match self.scale {
            WorkingScale::Original => self.window,
            WorkingScale::Transformed => {
                let a = self.support.backward(self.window.0);
                let b = self.support.backward(self.window.1);
                (a.min(b), a.max(b))
            }
        }
    }

    pub fn h_used(&self) -> f64 {
        self.h_used
    }

    pub fn theta_used(&self) -> f64 {
        self.theta_used
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn normalization_constant(&self) -> f64 {
        self.normalization_constant
    }

    /// `∫ S²` over the window on the spline's scale (before normalisation).
    pub fn raw_mass(&self) -> f64 {
        squared_spline_integral(&self.spline, self.window.0, self.window.1)
    }
}

/// Five-point Gauss–Legendre rule on `[-1, 1]`; exact for degree ≤ 9.
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// `∫_a^b S(w)² dw`, exact up to rounding because `S²` is a polynomial of
/// degree at most six between consecutive breakpoints.
fn squared_spline_integral(spline: &NaturalSpline, a: f64, b: f64) -> f64 {
    let mut breaks = vec![a];
    breaks.extend(spline.knots().iter().copied().filter(|&t| t > a && t < b));
    breaks.push(b);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let piece: f64 = GL_NODES
            .iter()
            .zip(GL_WEIGHTS)
            .map(|(&t, wt)| {
                let s = spline.evaluate(mid + half * t);
                wt * s * s
            })
            .sum();
        total += half * piece;
    }
    total
}

fn pseudo_working<R: Rng + ?Sized>(
    z: &[f64],
    kernel: &PolynomialKernel,
    m: usize,
    rng: &mut R,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(z.len() * m);
    for &zi in z {
        for _ in 0..m {
            out.push(zi + kernel.sample(rng));
        }
    }
    out
}

fn forward_all(data: &[f64], support: &SupportSpec) -> Result<Vec<f64>> {
    data.iter().map(|&x| support.forward(x)).collect()
}

/// Expands each observation into `m` pseudo-observations `x_i + ε_ij`, with
/// the noise added on the transformed scale. Outputs lie strictly inside the
/// support.
pub fn generate_pseudo<R: Rng + ?Sized>(
    data: &[f64],
    kernel: &PolynomialKernel,
    m: usize,
    support: &SupportSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, got: 0 });
    }
    if m < 1 {
        return Err(invalid("m", "need at least one replicate per observation"));
    }
    support.validate()?;
    let z = forward_all(data, support)?;
    let w = pseudo_working(&z, kernel, m, rng);
    Ok(w.into_iter().map(|v| support.backward(v)).collect())
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        })
}

/// Curvature functional `∫ (f'')²` of a normalised SHIDE fit built with the
/// normal-reference bandwidth, on already transformed data.
pub fn shide_pilot_psi(
    z: &[f64],
    k: u32,
    m: usize,
    c: f64,
    roughness_method: RoughnessMethod,
    seed: u64,
) -> Result<f64> {
    let config = ShideConfig {
        k,
        m,
        bandwidth: BandwidthChoice::AmiseOpt {
            c,
            psi_method: PsiMethod::NormalRefSd,
            roughness_method,
        },
        support: SupportSpec::Unbounded,
        seed: seed ^ PILOT_SEED_SALT,
        normalize: true,
        ..ShideConfig::default()
    };
    let pilot = shide_estimate(z, &config)?;
    let (a, b) = pilot.window();
    let spline = pilot.spline();
    let scale = pilot.normalization_constant();
    let grid = stats::linspace(a, b, PILOT_GRID);
    let f2sq: Vec<f64> = grid
        .iter()
        .map(|&w| {
            let s = spline.evaluate(w);
            let d = spline.derivative(w);
            let f2 = 2.0 * scale * (d * d + s * spline.second_derivative(w));
            f2 * f2
        })
        .collect();
    let psi = stats::trapezoid(&grid, &f2sq);
    if psi > 0.0 && psi.is_finite() {
        Ok(psi)
    } else {
        Err(Error::Degenerate("pilot fit has no curvature".into()))
    }
}

fn estimate_psi(
    z: &[f64],
    config: &ShideConfig,
    psi_method: PsiMethod,
    c: f64,
    rm: RoughnessMethod,
) -> Result<f64> {
    match psi_method {
        PsiMethod::NormalRefSd => psi_normal_reference(z, ReferenceScale::Sd),
        PsiMethod::NormalRefIqr => psi_normal_reference(z, ReferenceScale::Iqr),
        PsiMethod::ShidePilot => shide_pilot_psi(z, config.k, config.m, c, rm, config.seed),
    }
}

/// Half-width on the transformed scale, before the range clamp.
pub fn select_bandwidth(z: &[f64], config: &ShideConfig) -> Result<f64> {
    let n = z.len();
    match config.bandwidth {
        BandwidthChoice::Fixed(h) => Ok(h),
        BandwidthChoice::AmiseOpt {
            c,
            psi_method,
            roughness_method,
        } => {
            let inputs = SelectorInputs {
                c,
                psi_method,
                roughness_method,
                ..SelectorInputs::new(n, config.k)
            };
            let psi = estimate_psi(z, config, psi_method, c, roughness_method)?;
            h_amise(&inputs, psi)
        }
        BandwidthChoice::Percentile {
            alpha,
            calibrated: false,
            ..
        } => h_raw_percentile(z, alpha),
        BandwidthChoice::Percentile {
            alpha,
            calibrated: true,
            c,
            psi_method,
            roughness_method,
            pilot,
        } => {
            let inputs = SelectorInputs {
                n,
                k: config.k,
                c,
                alpha,
                psi_method,
                roughness_method,
                pilot,
            };
            let psi = estimate_psi(z, config, psi_method, c, roughness_method)?;
            h_calibrated_percentile(z, &inputs, psi)
        }
    }
}

/// Fits a SHIDE density.
pub fn shide_estimate(data: &[f64], config: &ShideConfig) -> Result<DensityEstimate> {
    config.validate()?;
    let n = data.len();
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: n });
    }
    check_finite(data)?;
    let support = config.support;
    let z = forward_all(data, &support)?;
    let (z_min, z_max) = min_max(&z);
    let range = z_max - z_min;
    if range <= 0.0 {
        return Err(Error::Degenerate("all observations are identical".into()));
    }

    let mut h = select_bandwidth(&z, config)?;
    if h > range {
        log::warn!("bandwidth {h} exceeds the data range {range}; clamping");
        h = range;
    }
    let kernel = PolynomialKernel::new(config.k, h)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let working = pseudo_working(&z, &kernel, config.m, &mut rng);

    let scale = if support.is_unbounded() {
        WorkingScale::Transformed
    } else {
        config.working_scale
    };
    let (values, theta) = match scale {
        WorkingScale::Transformed => (working, bin_width(range, h, n, config.m)?),
        WorkingScale::Original => {
            let pseudo: Vec<f64> = working.iter().map(|&w| support.backward(w)).collect();
            let (lo, hi) = min_max(&pseudo);
            if hi <= lo {
                return Err(Error::Degenerate("pseudo-data collapse to a point".into()));
            }
            let theta = histogram::sturges_width(hi - lo, n, config.m);
            (pseudo, theta)
        }
    };

    let grid = histogram::build_histogram_with_min_bins(&values, theta, 2)?;
    let roots: Vec<f64> = grid.heights().iter().map(|p| p.sqrt()).collect();
    let spline = NaturalSpline::fit_uniform(grid.midpoint(0), theta, &roots)?;
    let window = min_max(&values);

    let mut estimate = DensityEstimate {
        spline,
        support,
        scale,
        window,
        h_used: h,
        theta_used: theta,
        bins: grid.len(),
        normalization_constant: 1.0,
    };
    if config.normalize {
        let mass = estimate.raw_mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Degenerate(format!(
                "cannot normalise a fit of mass {mass}"
            )));
        }
        estimate.normalization_constant = 1.0 / mass;
    }
    Ok(estimate)
}
