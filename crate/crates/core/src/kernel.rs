//! Uniform-sum polynomial kernels.
//!
//! `f_k` is the density of `V_k = U_1 + ... + U_k` with `U_i` uniform on
//! `[-1/2, 1/2]` (a centred Irwin–Hall density). It is a piecewise polynomial
//! of degree `k - 1`, symmetric, supported on `[-k/2, k/2]`.
//!
//! [`PolynomialKernel`] rescales `f_k` to the half-width `h`:
//! `K_h(x) = (k / 2h) f_k(k x / 2h)`, supported on `[-h, h]`, with variance
//! `h^2 / (3k)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{invalid, Error, Result};

/// Largest supported kernel order. The alternating closed form loses
/// precision quickly beyond this.
pub const MAX_ORDER: u32 = 30;

pub(crate) fn check_order(k: u32) -> Result<()> {
    if k == 0 || k > MAX_ORDER {
        Err(Error::InvalidOrder(k))
    } else {
        Ok(())
    }
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Centred Irwin–Hall density, no order check. Evaluated on the left half
/// (`v <= 0`) where the alternating sum has the fewest terms.
fn irwin_hall_pdf(k: u32, v: f64) -> f64 {
    let half = k as f64 / 2.0;
    if v.abs() > half {
        return 0.0;
    }
    let s = half - v.abs();
    let terms = s.floor() as u32;
    let mut sum = 0.0;
    for j in 0..=terms.min(k) {
        let t = (s - j as f64).powi(k as i32 - 1) * binomial(k, j);
        if j % 2 == 0 {
            sum += t;
        } else {
            sum -= t;
        }
    }
    (sum / factorial(k - 1)).max(0.0)
}

fn irwin_hall_cdf(k: u32, v: f64) -> f64 {
    let half = k as f64 / 2.0;
    if v <= -half {
        return 0.0;
    }
    if v >= half {
        return 1.0;
    }
    if v > 0.0 {
        return 1.0 - irwin_hall_cdf(k, -v);
    }
    let s = v + half;
    let mut sum = 0.0;
    for j in 0..=(s.floor() as u32).min(k) {
        let t = (s - j as f64).powi(k as i32) * binomial(k, j);
        if j % 2 == 0 {
            sum += t;
        } else {
            sum -= t;
        }
    }
    (sum / factorial(k)).clamp(0.0, 1.0)
}

/// Density of the sum of `k` independent uniforms on `[-1/2, 1/2]`.
pub fn fk_pdf(k: u32, v: f64) -> Result<f64> {
    check_order(k)?;
    Ok(irwin_hall_pdf(k, v))
}

/// Distribution function matching [`fk_pdf`].
pub fn fk_cdf(k: u32, v: f64) -> Result<f64> {
    check_order(k)?;
    Ok(irwin_hall_cdf(k, v))
}

/// Characteristic function `[sin(t/2) / (t/2)]^k`.
pub fn kernel_cf(k: u32, t: f64) -> f64 {
    if t.abs() < 1e-8 {
        return 1.0;
    }
    let half = t / 2.0;
    (half.sin() / half).powi(k as i32)
}

/// Scaled second moment of the base kernel on `[-1, 1]`: `1 / (3k)`.
pub fn sigma_k_sq(k: u32) -> f64 {
    1.0 / (3.0 * k as f64)
}

/// Which formula to use for `R(K) = ∫ K²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum RoughnessMethod {
    /// Closed form `k / (2 · 4^k) · C(2k, k)`.
    Paper,
    /// Direct value of `∫ K²(t) dt` for the base kernel on `[-1, 1]`.
    #[default]
    Exact,
}

impl fmt::Display for RoughnessMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoughnessMethod::Paper => "paper",
            RoughnessMethod::Exact => "exact",
        })
    }
}

impl FromStr for RoughnessMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(RoughnessMethod::Paper),
            "exact" => Ok(RoughnessMethod::Exact),
            other => Err(invalid("roughness", format!("unknown method `{other}`"))),
        }
    }
}

/// Roughness `R(K)` of the base kernel `K(t) = (k/2) f_k(k t / 2)`.
///
/// The exact value uses `∫ f_k² = f_{2k}(0)` (the density of a difference of
/// two independent copies at zero), hence `R(K) = (k/2) f_{2k}(0)`.
pub fn roughness(k: u32, method: RoughnessMethod) -> Result<f64> {
    check_order(k)?;
    Ok(match method {
        RoughnessMethod::Paper => k as f64 / (2.0 * 4f64.powi(k as i32)) * binomial(2 * k, k),
        RoughnessMethod::Exact => k as f64 / 2.0 * irwin_hall_pdf(2 * k, 0.0),
    })
}

/// Bounded noise law `K_h` of order `k` and half-width `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolynomialKernel {
    order: u32,
    half_width: f64,
}

impl PolynomialKernel {
    pub fn new(order: u32, half_width: f64) -> Result<Self> {
        check_order(order)?;
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(invalid(
                "h",
                format!("half-width must be positive and finite, got {half_width}"),
            ));
        }
        Ok(Self { order, half_width })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    fn scale(&self) -> f64 {
        self.order as f64 / (2.0 * self.half_width)
    }

    /// `K_h(x)`; zero for `|x| > h`.
    pub fn pdf(&self, x: f64) -> f64 {
        let a = self.scale();
        a * irwin_hall_pdf(self.order, a * x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        irwin_hall_cdf(self.order, self.scale() * x)
    }

    /// Variance of a draw: `h² / (3k)`.
    pub fn variance(&self) -> f64 {
        self.half_width * self.half_width * sigma_k_sq(self.order)
    }

    /// One draw `(2h/k) · Σ U_i`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let sum: f64 = (0..self.order).map(|_| rng.random::<f64>() - 0.5).sum();
        let h = self.half_width;
        (sum / self.scale()).clamp(-h, h)
    }

    /// `count` independent draws; the generator is the only state touched.
    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.sample(rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = if n % 2 == 1 { n + 1 } else { n };
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + h * i as f64);
        }
        s * h / 3.0
    }

    /// Integrate piecewise over the polynomial pieces of `f_k`.
    fn integrate_pieces(k: u32, f: impl Fn(f64) -> f64) -> f64 {
        let half = k as f64 / 2.0;
        (0..k)
            .map(|p| {
                let a = -half + p as f64;
                simpson(&f, a, a + 1.0, 200)
            })
            .sum()
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(fk_pdf(2, 0.5).unwrap(), 0.5);
        assert_eq!(fk_pdf(3, 0.0).unwrap(), 0.75);
        assert_eq!(fk_pdf(3, 1.0).unwrap(), 0.125);
        assert_eq!(fk_pdf(1, 0.7).unwrap(), 0.0);
        assert_eq!(fk_pdf(1, 0.2).unwrap(), 1.0);
        assert!(matches!(fk_pdf(0, 0.0), Err(Error::InvalidOrder(0))));
        assert!(matches!(fk_pdf(31, 0.0), Err(Error::InvalidOrder(31))));
    }

    #[test]
    fn fk4_matches_monte_carlo_histogram() {
        // Histogram of 2e6 sums of four uniforms, bin [0.29, 0.31).
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 2_000_000;
        let mut hits = 0usize;
        for _ in 0..draws {
            let v: f64 = (0..4).map(|_| rng.random::<f64>() - 0.5).sum();
            if (0.29..0.31).contains(&v) {
                hits += 1;
            }
        }
        let mc = hits as f64 / (draws as f64 * 0.02);
        let exact = fk_pdf(4, 0.3).unwrap();
        assert!((mc - exact).abs() < 1e-2, "mc {mc} vs {exact}");
        // 2/3 - v^2 + |v|^3/2 on |v| <= 1
        assert!((exact - (2.0 / 3.0 - 0.09 + 0.0135)).abs() < 1e-14);
    }

    #[test]
    fn fk_normalised_and_symmetric() {
        for k in 1..=8 {
            let total = integrate_pieces(k, |v| fk_pdf(k, v).unwrap());
            assert!((total - 1.0).abs() < 1e-8, "k={k}: {total}");
            for i in 0..50 {
                let v = -4.5 + 0.19 * i as f64;
                assert_eq!(fk_pdf(k, v).unwrap(), fk_pdf(k, -v).unwrap());
            }
        }
    }

    #[test]
    fn cdf_consistent_with_pdf() {
        for k in [1, 2, 3, 5] {
            let half = k as f64 / 2.0;
            let v = 0.37 - half / 3.0;
            // Simpson on each polynomial piece up to v.
            let mut direct = 0.0;
            let mut a = -half;
            while a < v {
                let b = (a + 1.0).min(v);
                direct += simpson(|u| fk_pdf(k, u).unwrap(), a, b, 200);
                a += 1.0;
            }
            assert!((fk_cdf(k, v).unwrap() - direct).abs() < 1e-9);
            assert_eq!(fk_cdf(k, half).unwrap(), 1.0);
            assert_eq!(fk_cdf(k, -half).unwrap(), 0.0);
        }
    }

    #[test]
    fn scaled_kernel_examples() {
        let uniform = PolynomialKernel::new(1, 1.0).unwrap();
        assert_eq!(uniform.pdf(0.0), 0.5);
        let k3 = PolynomialKernel::new(3, 2.0).unwrap();
        assert!((k3.pdf(0.0) - 0.5625).abs() < 1e-15);
        let k2 = PolynomialKernel::new(2, 0.5).unwrap();
        assert_eq!(k2.pdf(0.6), 0.0);
        assert!(PolynomialKernel::new(3, 0.0).is_err());
        assert!(PolynomialKernel::new(3, f64::NAN).is_err());
    }

    #[test]
    fn characteristic_function() {
        assert_eq!(kernel_cf(5, 0.0), 1.0);
        let expected = (2.0 / std::f64::consts::PI).powi(2);
        assert!((kernel_cf(2, std::f64::consts::PI) - expected).abs() < 1e-15);
        assert!((expected - 0.4053).abs() < 1e-4);
        assert!(kernel_cf(1, 2.0 * std::f64::consts::PI).abs() < 1e-15);
        // cosine transform of f_2 at t = pi
        let num = integrate_pieces(2, |v| {
            fk_pdf(2, v).unwrap() * (std::f64::consts::PI * v).cos()
        });
        assert!((num - expected).abs() < 1e-9);
    }

    #[test]
    fn moments() {
        assert_eq!(sigma_k_sq(1), 1.0 / 3.0);
        assert_eq!(sigma_k_sq(3), 1.0 / 9.0);
        assert_eq!(sigma_k_sq(12), 1.0 / 36.0);
        let k = PolynomialKernel::new(3, 0.6).unwrap();
        assert!((k.variance() - 0.04).abs() < 1e-15);
    }

    #[test]
    fn roughness_values() {
        assert_eq!(roughness(1, RoughnessMethod::Paper).unwrap(), 0.25);
        assert_eq!(roughness(2, RoughnessMethod::Paper).unwrap(), 0.375);
        assert_eq!(roughness(3, RoughnessMethod::Paper).unwrap(), 0.46875);
        assert!((roughness(1, RoughnessMethod::Exact).unwrap() - 0.5).abs() < 1e-15);
        assert!((roughness(2, RoughnessMethod::Exact).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        // independent route: quadrature of K^2 on [-1, 1]
        for k in 1..=8u32 {
            let kern = PolynomialKernel::new(k, 1.0).unwrap();
            let pieces = k as usize * 2;
            let quad: f64 = (0..pieces)
                .map(|p| {
                    let a = -1.0 + 2.0 * p as f64 / pieces as f64;
                    let b = a + 2.0 / pieces as f64;
                    simpson(|t| kern.pdf(t).powi(2), a, b, 400)
                })
                .sum();
            let exact = roughness(k, RoughnessMethod::Exact).unwrap();
            assert!((quad - exact).abs() < 1e-9, "k={k}: {quad} vs {exact}");
        }
    }

    #[test]
    fn roughness_exact_increasing() {
        let values: Vec<f64> = (1..=8)
            .map(|k| roughness(k, RoughnessMethod::Exact).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[1] > w[0]));
        // large-k precision stays usable up to the order cap
        let r30 = roughness(30, RoughnessMethod::Exact).unwrap();
        let asym = 0.5 * (90.0 / std::f64::consts::PI).sqrt();
        assert!((r30 / asym - 1.0).abs() < 0.02);
    }

    #[test]
    fn sampling_bounds_and_determinism() {
        let k = PolynomialKernel::new(3, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = k.sample_noise(&mut rng, 10_000);
        assert!(draws.iter().all(|d| d.abs() <= 0.2));
        assert!(k.sample_noise(&mut rng, 0).is_empty());
        let a = k.sample_noise(&mut ChaCha8Rng::seed_from_u64(9), 100);
        let b = k.sample_noise(&mut ChaCha8Rng::seed_from_u64(9), 100);
        assert_eq!(a, b);
    }

    #[test]
    fn sample_variance_uniform() {
        let k = PolynomialKernel::new(1, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 1_000_000;
        let draws = k.sample_noise(&mut rng, n);
        let var = draws.iter().map(|d| d * d).sum::<f64>() / n as f64;
        // Var(eps^2) for U(-1,1) is 1/5 - 1/9
        let se = ((1.0 / 5.0 - 1.0 / 9.0) / n as f64).sqrt();
        assert!((var - 1.0 / 3.0).abs() < 3.0 * se, "{var}");
    }
}
