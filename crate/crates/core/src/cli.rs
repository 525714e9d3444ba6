//! Command-line front end.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bandwidth::{PilotLocation, PsiMethod};
use crate::baseline::{silverman_bw, sj_bw, KdeEstimate};
use crate::bench::{
    detail_csv, format_number, run_benchmark, summary_csv, BenchConfig, Method, ModelId, ModelSpec,
    ShideSettings,
};
use crate::estimator::{shide_estimate, BandwidthChoice, ShideConfig, SupportSpec, WorkingScale};
use crate::kernel::RoughnessMethod;
use crate::stats;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: cannot parse `{text}` as a number")]
    Parse { line: usize, text: String },
    #[error("line {line}: value {value} is not finite")]
    NonFinite { line: usize, value: f64 },
    #[error("need at least 2 values, got {0}")]
    TooFew(usize),
    #[error(transparent)]
    Shide(#[from] crate::Error),
}

fn io_err(path: &Path, source: io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "shide",
    version,
    about = "SHIDE density estimation, KDE baselines and benchmarks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a density from data and write `x,density` on a uniform grid
    Estimate(EstimateArgs),
    /// Gaussian KDE of the data on a uniform grid
    Kde(KdeArgs),
    /// Draw a sample from one of the simulation models
    Sample(SampleArgs),
    /// Run the replicated MISE benchmark
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SharedArgs {
    /// Input file with one value per line (`-` for standard input)
    #[arg(long, default_value = "-")]
    pub input: PathBuf,
    /// Output file (standard output when omitted)
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Random seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of evaluation grid points
    #[arg(long, default_value_t = 512, value_parser = clap::value_parser!(u64).range(2..))]
    pub grid: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimateMethod {
    Shide,
    Kde,
    Mkde,
}

/// SHIDE bandwidth: a selector name or a fixed half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthArg {
    Opt,
    Perc,
    Fixed(f64),
}

fn parse_bandwidth(s: &str) -> Result<BandwidthArg, String> {
    match s {
        "opt" => Ok(BandwidthArg::Opt),
        "perc" => Ok(BandwidthArg::Perc),
        other => match other.parse::<f64>() {
            Ok(h) if h > 0.0 && h.is_finite() => Ok(BandwidthArg::Fixed(h)),
            _ => Err(format!(
                "expected opt, perc or a positive number, got `{other}`"
            )),
        },
    }
}

/// KDE bandwidth: a selector name or a fixed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KdeBandwidthArg {
    Sj,
    Silverman,
    Fixed(f64),
}

fn parse_kde_bandwidth(s: &str) -> Result<KdeBandwidthArg, String> {
    match s {
        "sj" => Ok(KdeBandwidthArg::Sj),
        "silverman" => Ok(KdeBandwidthArg::Silverman),
        other => match other.parse::<f64>() {
            Ok(h) if h > 0.0 && h.is_finite() => Ok(KdeBandwidthArg::Fixed(h)),
            _ => Err(format!(
                "expected sj, silverman or a positive number, got `{other}`"
            )),
        },
    }
}

fn parse_from_str<T: std::str::FromStr<Err = crate::Error>>(s: &str) -> Result<T, String> {
    s.parse::<T>().map_err(|e| e.to_string())
}

fn parse_list<T: std::str::FromStr<Err = crate::Error>>(s: &str) -> Result<Vec<T>, String> {
    s.split(',').map(parse_from_str::<T>).collect()
}

fn parse_sizes(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid sample size `{v}`"))
        })
        .collect()
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
    /// Estimator
    #[arg(long, value_enum, default_value_t = EstimateMethod::Shide)]
    pub method: EstimateMethod,
    /// SHIDE bandwidth: opt, perc or a fixed half-width on the working scale
    #[arg(long, default_value = "opt", value_parser = parse_bandwidth)]
    pub bandwidth: BandwidthArg,
    /// Percentile level for `--bandwidth perc`
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Kernel order
    #[arg(long, default_value_t = 3)]
    pub k: u32,
    /// Pseudo-replicates per observation
    #[arg(long, default_value_t = 10)]
    pub m: usize,
    /// Coupling constant
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Lower support bound
    #[arg(long, allow_hyphen_values = true)]
    pub lower: Option<f64>,
    /// Upper support bound
    #[arg(long, allow_hyphen_values = true)]
    pub upper: Option<f64>,
    /// Rescale the SHIDE estimate to unit mass
    #[arg(long)]
    pub normalize: bool,
    /// Kernel roughness formula: paper|exact
    #[arg(long, default_value = "exact", value_parser = parse_from_str::<RoughnessMethod>)]
    pub roughness: RoughnessMethod,
    /// Histogram scale for bounded supports: original|transformed
    #[arg(long, default_value = "original", value_parser = parse_from_str::<WorkingScale>)]
    pub working_scale: WorkingScale,
    /// Curvature pilot for the selectors: sd|iqr|shide
    #[arg(long, default_value = "sd", value_parser = parse_from_str::<PsiMethod>)]
    pub psi: PsiMethod,
    /// Pilot density location for `--bandwidth perc`: spacing|median|QUANTILE
    #[arg(long, default_value = "spacing", value_parser = parse_from_str::<PilotLocation>)]
    pub pilot: PilotLocation,
    /// Use the raw percentile rule d_α/2 instead of the calibrated one
    #[arg(long)]
    pub raw_percentile: bool,
    /// Bandwidth for `--method kde|mkde`: sj|silverman|FLOAT (mkde selectors
    /// run on log|x|)
    #[arg(long, default_value = "sj", value_parser = parse_kde_bandwidth)]
    pub bw: KdeBandwidthArg,
}

#[derive(Debug, Args)]
pub struct KdeArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
    /// Bandwidth: sj|silverman|FLOAT
    #[arg(long, default_value = "sj", value_parser = parse_kde_bandwidth)]
    pub bw: KdeBandwidthArg,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
    /// Model: I, II, III, IV or V
    #[arg(long, value_parser = parse_from_str::<ModelId>)]
    pub model: ModelId,
    /// Sample size
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    /// Standard deviation of the untruncated normal in model V
    #[arg(long, default_value_t = 3.0)]
    pub model5_sigma: f64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
    /// Comma-separated models
    // Fully qualified so clap takes the parser output as the whole value.
    #[arg(long, default_value = "I,II,III,IV,V", value_parser = parse_list::<ModelId>)]
    pub models: std::vec::Vec<ModelId>,
    /// Comma-separated sample sizes
    #[arg(long, default_value = "50,500", value_parser = parse_sizes)]
    pub n: std::vec::Vec<usize>,
    /// Replications per (model, n)
    #[arg(long, default_value_t = 300)]
    pub reps: usize,
    /// Comma-separated methods
    #[arg(long, default_value = "KDE_SJ,SHIDE_opt,SHIDE_perc", value_parser = parse_list::<Method>)]
    pub methods: std::vec::Vec<Method>,
    /// Worker threads (default: machine parallelism)
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Standard deviation of the untruncated normal in model V
    #[arg(long, default_value_t = 3.0)]
    pub model5_sigma: f64,
    /// Summary CSV path (default: `<output stem>_summary.csv`, or standard
    /// error when writing to standard output)
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Kernel order
    #[arg(long, default_value_t = 3)]
    pub k: u32,
    /// Pseudo-replicates per observation
    #[arg(long, default_value_t = 10)]
    pub m: usize,
    /// Coupling constant
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Percentile level for SHIDE_perc
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Kernel roughness formula: paper|exact
    #[arg(long, default_value = "exact", value_parser = parse_from_str::<RoughnessMethod>)]
    pub roughness: RoughnessMethod,
    /// Curvature pilot: sd|iqr|shide
    #[arg(long, default_value = "sd", value_parser = parse_from_str::<PsiMethod>)]
    pub psi: PsiMethod,
    /// Pilot density location for SHIDE_perc: spacing|median|QUANTILE
    #[arg(long, default_value = "spacing", value_parser = parse_from_str::<PilotLocation>)]
    pub pilot: PilotLocation,
}

/// Parses one value per line; a non-numeric first line is a header.
pub fn parse_data(text: &str) -> Result<Vec<f64>, CliError> {
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let token = raw.trim();
        if token.is_empty() {
            continue;
        }
        match token.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => return Err(CliError::NonFinite { line, value: v }),
            Err(_) if line == 1 => continue,
            Err(_) => {
                return Err(CliError::Parse {
                    line,
                    text: token.to_string(),
                })
            }
        }
    }
    if values.len() < 2 {
        return Err(CliError::TooFew(values.len()));
    }
    Ok(values)
}

pub fn read_data(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = if path.as_os_str() == "-" {
        let mut buf = String::new();
        io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| io_err(path, e))?;
        buf
    } else {
        fs::read_to_string(path).map_err(|e| io_err(path, e))?
    };
    parse_data(&text)
}

/// Writes `content` to `path` through a temporary file renamed on success,
/// or to standard output when `path` is `None` or `-`.
pub fn write_output(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        None => write_stdout(content),
        Some(p) if p.as_os_str() == "-" => write_stdout(content),
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut builder = tempfile::Builder::new();
            // Temp files default to 0600; ask for the usual umask-filtered mode.
            #[cfg(unix)]
            {
                use std::os::unix::fs::PermissionsExt;
                builder.permissions(fs::Permissions::from_mode(0o666));
            }
            let mut tmp = builder.tempfile_in(dir).map_err(|e| io_err(p, e))?;
            tmp.write_all(content.as_bytes())
                .map_err(|e| io_err(p, e))?;
            tmp.persist(p).map_err(|e| io_err(p, e.error))?;
            Ok(())
        }
    }
}

fn write_stdout(content: &str) -> Result<(), CliError> {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    lock.write_all(content.as_bytes())
        .and_then(|_| lock.flush())
        .map_err(|e| io_err(Path::new("<stdout>"), e))
}

fn density_csv(xs: &[f64], ys: &[f64]) -> String {
    let mut s = String::from("x,density\n");
    for (x, y) in xs.iter().zip(ys) {
        s.push_str(&format_number(*x));
        s.push(',');
        s.push_str(&format_number(*y));
        s.push('\n');
    }
    s
}

fn padded_grid(data: &[f64], h: f64, points: usize) -> Vec<f64> {
    let (lo, hi) = data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    stats::linspace(lo - 3.0 * h, hi + 3.0 * h, points)
}

fn kde_bandwidth(data: &[f64], choice: KdeBandwidthArg) -> crate::Result<f64> {
    match choice {
        KdeBandwidthArg::Sj => sj_bw(data),
        KdeBandwidthArg::Silverman => silverman_bw(data),
        KdeBandwidthArg::Fixed(h) => Ok(h),
    }
}

fn cmd_estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let data = read_data(&args.shared.input)?;
    let points = args.shared.grid as usize;
    let (xs, ys) = match args.method {
        EstimateMethod::Shide => {
            let bandwidth = match args.bandwidth {
                BandwidthArg::Fixed(h) => BandwidthChoice::Fixed(h),
                BandwidthArg::Opt => BandwidthChoice::AmiseOpt {
                    c: args.c,
                    psi_method: args.psi,
                    roughness_method: args.roughness,
                },
                BandwidthArg::Perc => BandwidthChoice::Percentile {
                    alpha: args.alpha,
                    calibrated: !args.raw_percentile,
                    c: args.c,
                    psi_method: args.psi,
                    roughness_method: args.roughness,
                    pilot: args.pilot,
                },
            };
            let config = ShideConfig {
                k: args.k,
                m: args.m,
                bandwidth,
                support: SupportSpec::from_bounds(args.lower, args.upper)?,
                seed: args.shared.seed,
                normalize: args.normalize,
                grid_points: points,
                working_scale: args.working_scale,
            };
            let est = shide_estimate(&data, &config)?;
            eprintln!(
                "method=shide h={} theta={} bins={} seed={}",
                est.h_used(),
                est.theta_used(),
                est.bins(),
                args.shared.seed
            );
            let xs = padded_grid(&data, est.h_used(), points);
            let ys = est.evaluate_many(&xs);
            (xs, ys)
        }
        EstimateMethod::Kde => {
            let h = kde_bandwidth(&data, args.bw)?;
            let kde = KdeEstimate::additive(&data, h)?;
            eprintln!("method=kde h={h} seed={}", args.shared.seed);
            let xs = padded_grid(&data, h, points);
            let ys = kde.evaluate_many(&xs);
            (xs, ys)
        }
        EstimateMethod::Mkde => mkde_curve(&data, args.bw, points, args.shared.seed)?,
    };
    write_output(args.shared.output.as_deref(), &density_csv(&xs, &ys))
}

fn mkde_curve(
    data: &[f64],
    bw: KdeBandwidthArg,
    points: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    // Constructing first rejects mixed-sign data before any selector runs.
    KdeEstimate::multiplicative(data, 1.0)?;
    let logs: Vec<f64> = data.iter().map(|x| x.abs().ln()).collect();
    let h = kde_bandwidth(&logs, bw)?;
    let kde = KdeEstimate::multiplicative(data, h)?;
    eprintln!("method=mkde h={h} seed={seed}");
    let far = data.iter().fold(0.0f64, |a, x| a.max(x.abs())) * (1.0 + 3.0 * h);
    let xs = if data[0] > 0.0 {
        stats::linspace(0.0, far, points)
    } else {
        stats::linspace(-far, 0.0, points)
    };
    let ys = kde.evaluate_many(&xs);
    Ok((xs, ys))
}

fn cmd_kde(args: &KdeArgs) -> Result<(), CliError> {
    let data = read_data(&args.shared.input)?;
    let h = kde_bandwidth(&data, args.bw)?;
    let kde = KdeEstimate::additive(&data, h)?;
    eprintln!("method=kde h={h} seed={}", args.shared.seed);
    let xs = padded_grid(&data, h, args.shared.grid as usize);
    let ys = kde.evaluate_many(&xs);
    write_output(args.shared.output.as_deref(), &density_csv(&xs, &ys))
}

fn cmd_sample(args: &SampleArgs) -> Result<(), CliError> {
    let spec = ModelSpec::with_sigma(args.model, args.model5_sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.shared.seed);
    let values = spec.sample(args.n as usize, &mut rng);
    let mut s = String::with_capacity(values.len() * 24);
    for v in values {
        s.push_str(&format_number(v));
        s.push('\n');
    }
    write_output(args.shared.output.as_deref(), &s)
}

fn summary_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "bench".into());
    output.with_file_name(format!("{stem}_summary.csv"))
}

fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    let config = BenchConfig {
        models: args.models.clone(),
        sizes: args.n.clone(),
        reps: args.reps,
        base_seed: args.shared.seed,
        methods: args.methods.clone(),
        model5_sigma: args.model5_sigma,
        grid_points: args.shared.grid as usize,
        jobs: args.jobs,
        shide: ShideSettings {
            k: args.k,
            m: args.m,
            c: args.c,
            alpha: args.alpha,
            psi_method: args.psi,
            roughness_method: args.roughness,
            pilot: args.pilot,
            working_scale: WorkingScale::default(),
        },
    };
    let output = run_benchmark(&config)?;
    let detail = detail_csv(&output);
    let summary = summary_csv(&output);
    let out_path = args
        .shared
        .output
        .as_deref()
        .filter(|p| p.as_os_str() != "-");
    let summary_target = match (&args.summary, out_path) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(p)) => Some(summary_path(p)),
        (None, None) => None,
    };
    write_output(out_path, &detail)?;
    match summary_target {
        Some(p) => write_output(Some(&p), &summary),
        None => {
            eprint!("{summary}");
            Ok(())
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Kde(a) => cmd_kde(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

/// Entry point for the `shide` binary.
pub fn run() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
