//! Gaussian-kernel baselines: the additive KDE with Silverman and
//! Sheather–Jones bandwidths, and the multiplicative-convolution KDE for
//! single-signed data.

use std::f64::consts::PI;

use crate::error::{check_finite, invalid, Error, Result};
use crate::stats;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn normal_pdf(u: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * u * u).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignDomain {
    RealLine,
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdeMode {
    Additive,
    Multiplicative,
}

/// Gaussian kernel density estimate.
///
/// The multiplicative form is `(1/nh) Σ (1/|x_i|) K(x / (h x_i))` with
/// `K = 2φ` on the positive half-line, so that each term is a proper density
/// on the half-line of the data.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeEstimate {
    data: Vec<f64>,
    h: f64,
    sign_domain: SignDomain,
    mode: KdeMode,
}

fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(invalid("h", format!("bandwidth must be positive, got {h}")))
    }
}

impl KdeEstimate {
    pub fn additive(data: &[f64], h: f64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::TooFewObservations { needed: 1, got: 0 });
        }
        check_finite(data)?;
        check_bandwidth(h)?;
        Ok(Self {
            data: data.to_vec(),
            h,
            sign_domain: SignDomain::RealLine,
            mode: KdeMode::Additive,
        })
    }

    /// Multiplicative estimate; all observations must share a strict sign.
    pub fn multiplicative(data: &[f64], h: f64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::TooFewObservations { needed: 1, got: 0 });
        }
        check_finite(data)?;
        check_bandwidth(h)?;
        let sign_domain = if data.iter().all(|&x| x > 0.0) {
            SignDomain::Positive
        } else if data.iter().all(|&x| x < 0.0) {
            SignDomain::Negative
        } else {
            return Err(Error::SignDomain(
                "multiplicative KDE needs all observations strictly positive or all strictly negative"
                    .into(),
            ));
        };
        Ok(Self {
            data: data.to_vec(),
            h,
            sign_domain,
            mode: KdeMode::Multiplicative,
        })
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn sign_domain(&self) -> SignDomain {
        self.sign_domain
    }

    pub fn mode(&self) -> KdeMode {
        self.mode
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let n = self.data.len() as f64;
        let h = self.h;
        match self.mode {
            KdeMode::Additive => {
                self.data
                    .iter()
                    .map(|&xi| normal_pdf((x - xi) / h))
                    .sum::<f64>()
                    / (n * h)
            }
            KdeMode::Multiplicative => {
                let inside = match self.sign_domain {
                    SignDomain::Positive => x > 0.0,
                    SignDomain::Negative => x < 0.0,
                    SignDomain::RealLine => unreachable!("multiplicative estimates are signed"),
                };
                if !inside {
                    return 0.0;
                }
                self.data
                    .iter()
                    .map(|&xi| 2.0 * normal_pdf(x / (h * xi)) / xi.abs())
                    .sum::<f64>()
                    / (n * h)
            }
        }
    }

    pub fn evaluate_many(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.evaluate(x)).collect()
    }
}

fn check_sample(data: &[f64], needed: usize) -> Result<()> {
    if data.len() < needed {
        return Err(Error::TooFewObservations {
            needed,
            got: data.len(),
        });
    }
    check_finite(data)
}

/// Silverman's rule `0.9 min(sd, IQR/1.34) n^{-1/5}` (sd alone when IQR = 0).
pub fn silverman_bw(data: &[f64]) -> Result<f64> {
    check_sample(data, 2)?;
    let sd = stats::sample_sd(data);
    let iqr = stats::iqr(data)?;
    let scale = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if scale <= 0.0 {
        return Err(Error::Degenerate("zero scale".into()));
    }
    Ok(0.9 * scale * (data.len() as f64).powf(-0.2))
}

/// Outcome of the Sheather–Jones search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SjSelection {
    pub bandwidth: f64,
    /// True when the bracket had no sign change and Silverman's rule was used.
    pub fell_back: bool,
}

/// Pairwise Gaussian-derivative functional estimates over sorted data.
/// Pairs with `|u| > 37.7` contribute below `exp(-710)` and are skipped.
struct PairSums<'a> {
    sorted: &'a [f64],
}

const PAIR_CUTOFF_SQ: f64 = 1420.0;

impl PairSums<'_> {
    fn sum(&self, g: f64, term: impl Fn(f64) -> f64) -> f64 {
        let x = self.sorted;
        let cutoff = PAIR_CUTOFF_SQ.sqrt() * g;
        let mut total = 0.0;
        for i in 0..x.len() {
            for &xj in &x[i + 1..] {
                let d = xj - x[i];
                if d > cutoff {
                    break;
                }
                let u2 = (d / g) * (d / g);
                total += (-0.5 * u2).exp() * term(u2);
            }
        }
        total
    }

    fn n(&self) -> f64 {
        self.sorted.len() as f64
    }

    /// `Ψ̂₄(g)`, diagonal terms included.
    fn psi4(&self, g: f64) -> f64 {
        let n = self.n();
        let s = 2.0 * self.sum(g, |u2| u2 * u2 - 6.0 * u2 + 3.0) + 3.0 * n;
        s / (n * (n - 1.0) * g.powi(5) * (2.0 * PI).sqrt())
    }

    /// `Ψ̂₆(g)`, diagonal terms included.
    fn psi6(&self, g: f64) -> f64 {
        let n = self.n();
        let s = 2.0 * self.sum(g, |u2| u2 * u2 * u2 - 15.0 * u2 * u2 + 45.0 * u2 - 15.0) - 15.0 * n;
        s / (n * (n - 1.0) * g.powi(7) * (2.0 * PI).sqrt())
    }
}

/// Sheather–Jones solve-the-equation bandwidth with exact pairwise sums.
pub fn sj_select(data: &[f64]) -> Result<SjSelection> {
    check_sample(data, 3)?;
    let sorted = stats::sorted(data);
    let n = sorted.len() as f64;
    let sd = stats::sample_sd(&sorted);
    let iqr = stats::quantile_sorted(&sorted, 0.75) - stats::quantile_sorted(&sorted, 0.25);
    let scale = if iqr > 0.0 { sd.min(iqr / 1.349) } else { sd };
    if scale <= 0.0 {
        return Err(Error::Degenerate("zero scale".into()));
    }
    let fallback = |why: &str| -> Result<SjSelection> {
        log::warn!("Sheather-Jones: {why}; using Silverman's rule");
        Ok(SjSelection {
            bandwidth: silverman_bw(data)?,
            fell_back: true,
        })
    };

    let sums = PairSums { sorted: &sorted };
    let a = 1.24 * scale * n.powf(-1.0 / 7.0);
    let b = 1.23 * scale * n.powf(-1.0 / 9.0);
    let sd_a = sums.psi4(a);
    let td_b = -sums.psi6(b);
    let alpha2 = 1.357 * (sd_a / td_b).powf(1.0 / 7.0);
    if !(alpha2 > 0.0 && alpha2.is_finite()) {
        return fallback("pilot functionals have the wrong sign");
    }
    let c1 = 1.0 / (2.0 * PI.sqrt() * n);
    let equation = |h: f64| {
        let psi = sums.psi4(alpha2 * h.powf(5.0 / 7.0));
        if psi > 0.0 {
            (c1 / psi).powf(0.2) - h
        } else {
            f64::INFINITY
        }
    };

    let (mut lo, mut hi) = (1e-3 * scale, 10.0 * scale);
    let (f_lo, f_hi) = (equation(lo), equation(hi));
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return fallback("no sign change in the search bracket");
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-13 * hi {
            break;
        }
        if equation(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(SjSelection {
        bandwidth: 0.5 * (lo + hi),
        fell_back: false,
    })
}

pub fn sj_bw(data: &[f64]) -> Result<f64> {
    Ok(sj_select(data)?.bandwidth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal, StandardNormal};

    fn normal_sample(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn additive_examples() {
        let one = KdeEstimate::additive(&[0.0], 1.0).unwrap();
        assert!((one.evaluate(0.0) - 0.398_94).abs() < 1e-5);
        let two = KdeEstimate::additive(&[-1.0, 1.0], 1.0).unwrap();
        assert!((two.evaluate(0.0) - 0.241_97).abs() < 1e-5);
        assert!(KdeEstimate::additive(&[1.0], 0.0).is_err());
    }

    #[test]
    fn multiplicative_examples() {
        // K = 2φ on the half-line, so values are twice the plain-φ form.
        let est = KdeEstimate::multiplicative(&[2.0], 0.5).unwrap();
        assert!((est.evaluate(1.0) - 2.0 * 0.241_970_724_519_143_37).abs() < 1e-15);
        let unit = KdeEstimate::multiplicative(&[1.0], 0.7).unwrap();
        for x in [0.1, 0.5, 2.0] {
            assert!((unit.evaluate(x) - 2.0 * normal_pdf(x / 0.7) / 0.7).abs() < 1e-15);
        }
        assert_eq!(unit.evaluate(-3.0), 0.0);
        assert_eq!(unit.evaluate(0.0), 0.0);
        assert!(matches!(
            KdeEstimate::multiplicative(&[1.0, -1.0], 1.0),
            Err(Error::SignDomain(_))
        ));
        assert!(KdeEstimate::multiplicative(&[0.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn silverman_examples() {
        let z = normal_sample(10_000, 1);
        let h = silverman_bw(&z).unwrap();
        assert!((h / (0.9 * 10_000f64.powf(-0.2)) - 1.0).abs() < 0.05);
        assert!(silverman_bw(&[3.0, 3.0, 3.0]).is_err());
        // IQR = 0 with a nonzero sd falls back to the sd
        let tied = [0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        let expected = 0.9 * stats::sample_sd(&tied) * 6f64.powf(-0.2);
        assert!((silverman_bw(&tied).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn sj_close_to_silverman_for_normal() {
        let z = normal_sample(500, 8);
        let sel = sj_select(&z).unwrap();
        assert!(!sel.fell_back);
        let ratio = sel.bandwidth / silverman_bw(&z).unwrap();
        assert!((0.75..=1.33).contains(&ratio), "{ratio}");
    }

    #[test]
    fn sj_smaller_than_silverman_on_bimodal() {
        let mut wins = 0;
        for seed in 0..30 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let left = Normal::new(-1.0, 1.0).unwrap();
            let right = Normal::new(2.0, 2.0).unwrap();
            let z: Vec<f64> = (0..500)
                .map(|_| {
                    let u: f64 = rand::Rng::random(&mut rng);
                    if u < 0.35 {
                        left.sample(&mut rng)
                    } else {
                        right.sample(&mut rng)
                    }
                })
                .collect();
            if sj_bw(&z).unwrap() < silverman_bw(&z).unwrap() {
                wins += 1;
            }
        }
        assert!(wins >= 24, "{wins}/30");
    }

    #[test]
    fn sj_rejects_tiny_samples() {
        assert!(matches!(
            sj_bw(&[1.0, 2.0]),
            Err(Error::TooFewObservations { .. })
        ));
        assert!(sj_bw(&[1.0, 1.0, 1.0]).is_err());
    }
}
