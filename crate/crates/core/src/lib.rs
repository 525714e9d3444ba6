//! Density estimation by pseudo-data simulation, refined histograms and
//! squared natural-spline interpolation (SHIDE), with Gaussian KDE baselines
//! and a Monte-Carlo benchmark harness.
//!
//! ```
//! use shide::estimator::{shide_estimate, ShideConfig};
//!
//! let data: Vec<f64> = (0..200).map(|i| ((i as f64) * 0.37).sin()).collect();
//! let est = shide_estimate(&data, &ShideConfig::default()).unwrap();
//! assert!(est.evaluate(0.0) > 0.0);
//! ```

pub mod bandwidth;
pub mod baseline;
pub mod bench;
pub mod cli;
mod error;
pub mod estimator;
pub mod kernel;
pub mod spline;
pub mod stats;

pub use error::{Error, Result};
pub use estimator::{shide_estimate, DensityEstimate, ShideConfig, SupportSpec};
pub use kernel::PolynomialKernel;
