//! Simulation models, MISE and the replicated SHIDE-versus-KDE benchmark.
//!
//! Every replication draws its data from a generator seeded with
//! `mix_seed(base, model, n, rep)`; each method then gets its own noise seed
//! derived from the data seed, so results do not depend on which methods run
//! or in which order.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, Exp1, StandardNormal};
use rayon::prelude::*;

use crate::bandwidth::{PilotLocation, PsiMethod};
use crate::baseline::{normal_pdf, sj_bw, KdeEstimate};
use crate::error::{invalid, Error, Result};
use crate::estimator::{shide_estimate, BandwidthChoice, ShideConfig, SupportSpec, WorkingScale};
use crate::kernel::RoughnessMethod;
use crate::stats;

pub use crate::stats::median_mad;

/// Truncation interval of model V.
pub const MODEL5_BOUNDS: (f64, f64) = (-1.0, 0.5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelId {
    I,
    II,
    III,
    IV,
    V,
}

impl ModelId {
    pub const ALL: [ModelId; 5] = [
        ModelId::I,
        ModelId::II,
        ModelId::III,
        ModelId::IV,
        ModelId::V,
    ];

    pub fn index(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelId::I => "I",
            ModelId::II => "II",
            ModelId::III => "III",
            ModelId::IV => "IV",
            ModelId::V => "V",
        })
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" => Ok(ModelId::I),
            "II" => Ok(ModelId::II),
            "III" => Ok(ModelId::III),
            "IV" => Ok(ModelId::IV),
            "V" => Ok(ModelId::V),
            other => Err(invalid(
                "model",
                format!("unknown model `{other}` (I, II, III, IV, V)"),
            )),
        }
    }
}

/// A simulation model.
///
/// I = N(0, 1); II = 0.35 N(-1, 1) + 0.65 N(2, 2²); III = Cauchy(0, 1);
/// IV = Exp(1); V = N(0, σ²) truncated to (-1, 0.5) with σ = 3 by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub id: ModelId,
    pub model5_sigma: f64,
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

impl ModelSpec {
    pub fn new(id: ModelId) -> Self {
        Self {
            id,
            model5_sigma: 3.0,
        }
    }

    pub fn with_sigma(id: ModelId, model5_sigma: f64) -> Result<Self> {
        if !(model5_sigma > 0.0 && model5_sigma.is_finite()) {
            return Err(invalid(
                "model5_sigma",
                format!("must be positive, got {model5_sigma}"),
            ));
        }
        Ok(Self { id, model5_sigma })
    }

    /// Support handed to SHIDE for this model.
    pub fn support(&self) -> SupportSpec {
        match self.id {
            ModelId::IV => SupportSpec::LowerBounded(0.0),
            ModelId::V => SupportSpec::Interval(MODEL5_BOUNDS.0, MODEL5_BOUNDS.1),
            _ => SupportSpec::Unbounded,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.id {
            ModelId::I => StandardNormal.sample(rng),
            ModelId::II => {
                let u: f64 = rng.random();
                let z: f64 = StandardNormal.sample(rng);
                if u < 0.35 {
                    -1.0 + z
                } else {
                    2.0 + 2.0 * z
                }
            }
            ModelId::III => Cauchy::new(0.0, 1.0).expect("valid scale").sample(rng),
            ModelId::IV => Exp1.sample(rng),
            ModelId::V => {
                let (a, b) = MODEL5_BOUNDS;
                loop {
                    let z: f64 = StandardNormal.sample(rng);
                    let x = self.model5_sigma * z;
                    if x > a && x < b {
                        return x;
                    }
                }
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self.id {
            ModelId::I => normal_pdf(x),
            ModelId::II => 0.35 * normal_pdf(x + 1.0) + 0.65 * normal_pdf((x - 2.0) / 2.0) / 2.0,
            ModelId::III => 1.0 / (std::f64::consts::PI * (1.0 + x * x)),
            ModelId::IV => {
                if x >= 0.0 {
                    (-x).exp()
                } else {
                    0.0
                }
            }
            ModelId::V => {
                let (a, b) = MODEL5_BOUNDS;
                if x <= a || x >= b {
                    return 0.0;
                }
                let s = self.model5_sigma;
                let mass = std_normal_cdf(b / s) - std_normal_cdf(a / s);
                normal_pdf(x / s) / (s * mass)
            }
        }
    }
}

/// Integrated squared difference by the trapezoid rule on a uniform grid.
pub fn mise(estimate_values: &[f64], truth_values: &[f64], grid: &[f64]) -> Result<f64> {
    if estimate_values.len() != truth_values.len() {
        return Err(Error::LengthMismatch {
            left: estimate_values.len(),
            right: truth_values.len(),
        });
    }
    if grid.len() != estimate_values.len() {
        return Err(Error::LengthMismatch {
            left: grid.len(),
            right: estimate_values.len(),
        });
    }
    if grid.len() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            got: grid.len(),
        });
    }
    let sq: Vec<f64> = estimate_values
        .iter()
        .zip(truth_values)
        .map(|(e, t)| (e - t) * (e - t))
        .collect();
    Ok(stats::trapezoid(grid, &sq))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    KdeSj,
    ShideOpt,
    ShidePerc,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::KdeSj, Method::ShideOpt, Method::ShidePerc];

    pub fn method_label(self) -> &'static str {
        match self {
            Method::KdeSj => "KDE",
            Method::ShideOpt | Method::ShidePerc => "SHIDE",
        }
    }

    pub fn selector_label(self) -> &'static str {
        match self {
            Method::KdeSj => "SJ",
            Method::ShideOpt => "opt",
            Method::ShidePerc => "perc",
        }
    }

    fn seed_salt(self) -> u64 {
        match self {
            Method::KdeSj => 0x6b64_655f_736a_0001,
            Method::ShideOpt => 0x7368_6964_655f_0002,
            Method::ShidePerc => 0x7368_6964_655f_0003,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.method_label(), self.selector_label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kde_sj" => Ok(Method::KdeSj),
            "shide_opt" => Ok(Method::ShideOpt),
            "shide_perc" => Ok(Method::ShidePerc),
            other => Err(invalid(
                "method",
                format!("unknown method `{other}` (KDE_SJ, SHIDE_opt, SHIDE_perc)"),
            )),
        }
    }
}

/// SplitMix64 finaliser.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Data seed for one replication: SplitMix64 folded over
/// `(base, model index, n, rep)`.
pub fn mix_seed(base: u64, model: ModelId, n: usize, rep: usize) -> u64 {
    [model.index(), n as u64, rep as u64]
        .into_iter()
        .fold(splitmix64(base), |acc, v| splitmix64(acc ^ v))
}

/// SHIDE settings shared by both SHIDE methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShideSettings {
    pub k: u32,
    pub m: usize,
    pub c: f64,
    pub alpha: f64,
    pub psi_method: PsiMethod,
    pub roughness_method: RoughnessMethod,
    pub pilot: PilotLocation,
    pub working_scale: WorkingScale,
}

impl Default for ShideSettings {
    fn default() -> Self {
        Self {
            k: 3,
            m: 10,
            c: 1.0,
            alpha: 0.5,
            psi_method: PsiMethod::default(),
            roughness_method: RoughnessMethod::default(),
            pilot: PilotLocation::default(),
            working_scale: WorkingScale::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub models: Vec<ModelId>,
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub base_seed: u64,
    pub methods: Vec<Method>,
    pub model5_sigma: f64,
    pub grid_points: usize,
    /// Worker threads; `None` uses the machine's parallelism.
    pub jobs: Option<usize>,
    pub shide: ShideSettings,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            models: ModelId::ALL.to_vec(),
            sizes: vec![50, 500],
            reps: 300,
            base_seed: 0,
            methods: Method::ALL.to_vec(),
            model5_sigma: 3.0,
            grid_points: 512,
            jobs: None,
            shide: ShideSettings::default(),
        }
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(invalid("reps", "need at least one replication"));
        }
        if self.models.is_empty() || self.sizes.is_empty() || self.methods.is_empty() {
            return Err(invalid(
                "bench",
                "models, sizes and methods must be nonempty",
            ));
        }
        if let Some(&n) = self.sizes.iter().find(|&&n| n < 3) {
            return Err(invalid("n", format!("sample size {n} is below 3")));
        }
        if self.grid_points < 2 {
            return Err(invalid("grid_points", "need at least two grid points"));
        }
        if self.jobs == Some(0) {
            return Err(invalid("jobs", "need at least one worker"));
        }
        ModelSpec::with_sigma(ModelId::V, self.model5_sigma)?;
        let s = &self.shide;
        ShideConfig {
            k: s.k,
            m: s.m,
            bandwidth: BandwidthChoice::Percentile {
                alpha: s.alpha,
                calibrated: true,
                c: s.c,
                psi_method: s.psi_method,
                roughness_method: s.roughness_method,
                pilot: s.pilot,
            },
            ..ShideConfig::default()
        }
        .validate()
    }

    /// Everything that determines the output, except the worker count.
    pub fn fingerprint(&self) -> String {
        let s = &self.shide;
        format!(
            "shide {} models={} n={} reps={} seed={} methods={} grid={} window=data+-3h \
             model5_sigma={} k={} m={} c={} alpha={} psi={} roughness={} pilot={} \
             working_scale={} rng=chacha8 seed_mix=splitmix64",
            env!("CARGO_PKG_VERSION"),
            join(&self.models),
            join(&self.sizes),
            self.reps,
            self.base_seed,
            join(&self.methods),
            self.grid_points,
            self.model5_sigma,
            s.k,
            s.m,
            s.c,
            s.alpha,
            s.psi_method,
            s.roughness_method,
            s.pilot,
            s.working_scale,
        )
    }
}

/// One (model, n, method, rep) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub model: ModelId,
    pub n: usize,
    pub method: Method,
    pub rep: usize,
    pub bandwidth: f64,
    pub mise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRecord {
    pub model: ModelId,
    pub n: usize,
    pub method: Method,
    pub replication_mises: Vec<f64>,
    pub median: f64,
    pub mad: f64,
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOutput {
    pub fingerprint: String,
    /// Ordered by model, n and method (configuration order), then rep.
    pub replications: Vec<Replication>,
    pub records: Vec<BenchmarkRecord>,
}

/// Fits `method` to `data` and returns its bandwidth and MISE against the
/// model density on `[min - 3h, max + 3h]`.
pub fn evaluate_method(
    method: Method,
    model: &ModelSpec,
    data: &[f64],
    data_seed: u64,
    settings: &ShideSettings,
    grid_points: usize,
) -> Result<(f64, f64)> {
    let (lo, hi) = data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let (h, values, grid) = match method {
        Method::KdeSj => {
            let h = sj_bw(data)?;
            let kde = KdeEstimate::additive(data, h)?;
            let grid = stats::linspace(lo - 3.0 * h, hi + 3.0 * h, grid_points);
            (h, kde.evaluate_many(&grid), grid)
        }
        Method::ShideOpt | Method::ShidePerc => {
            let bandwidth = if method == Method::ShideOpt {
                BandwidthChoice::AmiseOpt {
                    c: settings.c,
                    psi_method: settings.psi_method,
                    roughness_method: settings.roughness_method,
                }
            } else {
                BandwidthChoice::Percentile {
                    alpha: settings.alpha,
                    calibrated: true,
                    c: settings.c,
                    psi_method: settings.psi_method,
                    roughness_method: settings.roughness_method,
                    pilot: settings.pilot,
                }
            };
            let config = ShideConfig {
                k: settings.k,
                m: settings.m,
                bandwidth,
                support: model.support(),
                seed: splitmix64(data_seed ^ method.seed_salt()),
                normalize: false,
                grid_points,
                working_scale: settings.working_scale,
            };
            let est = shide_estimate(data, &config)?;
            let h = est.h_used();
            let grid = stats::linspace(lo - 3.0 * h, hi + 3.0 * h, grid_points);
            (h, est.evaluate_many(&grid), grid)
        }
    };
    let truth: Vec<f64> = grid.iter().map(|&x| model.pdf(x)).collect();
    Ok((h, mise(&values, &truth, &grid)?))
}

fn run_cell(
    config: &BenchConfig,
    model: ModelId,
    n: usize,
    rep: usize,
) -> Result<Vec<Replication>> {
    let spec = ModelSpec::with_sigma(model, config.model5_sigma)?;
    let data_seed = mix_seed(config.base_seed, model, n, rep);
    let mut rng = ChaCha8Rng::seed_from_u64(data_seed);
    let data = spec.sample(n, &mut rng);
    config
        .methods
        .iter()
        .map(|&method| {
            let (bandwidth, mise) = evaluate_method(
                method,
                &spec,
                &data,
                data_seed,
                &config.shide,
                config.grid_points,
            )?;
            Ok(Replication {
                model,
                n,
                method,
                rep,
                bandwidth,
                mise,
            })
        })
        .collect()
}

/// Runs every (model, n, rep) cell, in parallel when `jobs` allows.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchmarkOutput> {
    config.validate()?;
    let mut cells = Vec::new();
    for &model in &config.models {
        for &n in &config.sizes {
            for rep in 0..config.reps {
                cells.push((model, n, rep));
            }
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = config.jobs {
        builder = builder.num_threads(jobs);
    }
    let pool = builder
        .build()
        .map_err(|e| invalid("jobs", format!("cannot start worker pool: {e}")))?;
    let per_cell: Vec<Vec<Replication>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(model, n, rep)| run_cell(config, model, n, rep))
            .collect::<Result<Vec<_>>>()
    })?;

    let fingerprint = config.fingerprint();
    let mut replications = Vec::with_capacity(per_cell.len() * config.methods.len());
    let mut records = Vec::new();
    let reps = config.reps;
    for (mi, &model) in config.models.iter().enumerate() {
        for (ni, &n) in config.sizes.iter().enumerate() {
            let block = &per_cell[(mi * config.sizes.len() + ni) * reps..][..reps];
            for (ki, &method) in config.methods.iter().enumerate() {
                let rows: Vec<Replication> = block.iter().map(|cell| cell[ki].clone()).collect();
                let mises: Vec<f64> = rows.iter().map(|r| r.mise).collect();
                let (median, mad) = median_mad(&mises)?;
                records.push(BenchmarkRecord {
                    model,
                    n,
                    method,
                    replication_mises: mises,
                    median,
                    mad,
                    fingerprint: fingerprint.clone(),
                });
                replications.extend(rows);
            }
        }
    }
    Ok(BenchmarkOutput {
        fingerprint,
        replications,
        records,
    })
}

/// Scientific notation with 17 significant digits (round-trips exactly).
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

/// Detail CSV: `model,n,method,selector,rep,mise` under a `#` fingerprint.
pub fn detail_csv(output: &BenchmarkOutput) -> String {
    let mut s = format!(
        "# {}\nmodel,n,method,selector,rep,mise\n",
        output.fingerprint
    );
    for r in &output.replications {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.model,
            r.n,
            r.method.method_label(),
            r.method.selector_label(),
            r.rep,
            format_number(r.mise)
        ));
    }
    s
}

/// Summary CSV: `model,n,method,selector,median,mad`.
pub fn summary_csv(output: &BenchmarkOutput) -> String {
    let mut s = format!(
        "# {}\nmodel,n,method,selector,median,mad\n",
        output.fingerprint
    );
    for r in &output.records {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.model,
            r.n,
            r.method.method_label(),
            r.method.selector_label(),
            format_number(r.median),
            format_number(r.mad)
        ));
    }
    s
}
