use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hdproj::dataset::{load_csv, load_direction_csv, make_folds, write_csv_to, write_direction_csv, CsvLayout, Direction};
use hdproj::projection_test::{CrossFit, DirectionProvider, Statistic, TestOptions, TestResult, TestSpec};
use hdproj::simulation::{degeneracy_demo, monte_carlo, Generator, McReport, NullSetting};
use hdproj::sparse_logistic::{LassoConfig, DEFAULT_CV_FOLDS};
use hdproj::Error;
use serde::Serialize;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "hdproj", version, about = "Cross-fitted projection tests for high-dimensional two-sample means")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a test on a two-group CSV file.
    Test(TestArgs),
    /// Write one simulated dataset as CSV.
    Simulate(SimulateArgs),
    /// Rejection proportions of a test over simulated datasets.
    Montecarlo(MonteCarloArgs),
    /// Fraction of equal-means datasets whose cross-validated lasso is exactly zero.
    DemoDegeneracy(DegeneracyArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum StatisticArg {
    Plugin,
    Onestep,
    Anchored,
}

impl From<StatisticArg> for Statistic {
    fn from(s: StatisticArg) -> Self {
        match s {
            StatisticArg::Plugin => Statistic::Plugin,
            StatisticArg::Onestep => Statistic::OneStep,
            StatisticArg::Anchored => Statistic::Anchored,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum Setting {
    #[value(name = "appA-global")]
    #[serde(rename = "appA-global")]
    AppAGlobal,
    #[value(name = "appA-projected")]
    #[serde(rename = "appA-projected")]
    AppAProjected,
    #[value(name = "f1-global")]
    #[serde(rename = "f1-global")]
    F1Global,
    #[value(name = "f1-projected")]
    #[serde(rename = "f1-projected")]
    F1Projected,
    #[value(name = "f1-alternative")]
    #[serde(rename = "f1-alternative")]
    F1Alternative,
    #[value(name = "f2")]
    #[serde(rename = "f2")]
    F2,
}

/// Options shared by every statistic.
#[derive(Args, Debug, Clone)]
struct StatArgs {
    #[arg(long, value_enum, default_value = "plugin")]
    statistic: StatisticArg,
    /// Principal component to project on (default 1).
    #[arg(long)]
    pc_index: Option<usize>,
    #[arg(long, default_value_t = 2)]
    m_folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Hard-threshold the out-of-fold nuisance means.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    threshold_means: bool,
    /// Sparse PC budget: a positive integer or "auto" (ceil(sqrt(p))).
    #[arg(long, default_value = "auto")]
    sparsity_budget: String,
    /// Use the dense leading eigenvector instead of sparse PCA.
    #[arg(long)]
    dense_pc: bool,
    /// Anchor weight exponent: w_n = n^a.
    #[arg(long, default_value_t = 0.5)]
    anchor_w_exponent: f64,
    /// Anchor threshold exponent: r_n = n^-g.
    #[arg(long, conflicts_with = "anchor_r_zero")]
    anchor_r_exponent: Option<f64>,
    /// Set the anchor threshold to zero.
    #[arg(long)]
    anchor_r_zero: bool,
    #[arg(long, default_value_t = DEFAULT_CV_FOLDS)]
    cv_folds: usize,
}

#[derive(Args)]
struct TestArgs {
    /// Two-group CSV with a group column and numeric features.
    #[arg(long)]
    data: PathBuf,
    /// Fixed projection direction (`feature_name,weight`), used in every fold.
    #[arg(long)]
    direction: Option<PathBuf>,
    #[arg(long, default_value = "group")]
    group_column: String,
    #[arg(long, default_value = "control")]
    control_label: String,
    #[arg(long, default_value = "treatment")]
    treatment_label: String,
    #[command(flatten)]
    stat: StatArgs,
    #[arg(long)]
    output: PathBuf,
    /// `json` writes the report; `csv` writes the mean direction.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct Sizes {
    /// Samples per group (sets both groups).
    #[arg(long, conflicts_with_all = ["n_x", "n_z"])]
    n: Option<usize>,
    #[arg(long)]
    n_x: Option<usize>,
    #[arg(long)]
    n_z: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    setting: Setting,
    #[command(flatten)]
    sizes: Sizes,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    /// Also write the population eigenvector `--pc-index` as a direction CSV.
    #[arg(long)]
    direction_output: Option<PathBuf>,
    #[arg(long, default_value_t = 1, requires = "direction_output")]
    pc_index: usize,
}

#[derive(Args)]
struct MonteCarloArgs {
    #[arg(long, value_enum)]
    setting: Setting,
    #[command(flatten)]
    sizes: Sizes,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    /// Replace the estimated direction and nuisances by population values.
    #[arg(long)]
    oracle: bool,
    #[command(flatten)]
    stat: StatArgs,
    #[arg(long, env = "HDPROJ_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    output: PathBuf,
    /// `json` writes the report; `csv` writes `rep,t` rows.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct DegeneracyArgs {
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "HDPROJ_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Resolved statistic settings, embedded in every report.
#[derive(Debug, Clone, Serialize)]
struct StatConfig {
    statistic: StatisticArg,
    pc_index: Option<usize>,
    m_folds: usize,
    seed: u64,
    alpha: f64,
    threshold_means: bool,
    sparsity_budget: Option<usize>,
    dense_pc: bool,
    anchor_w_exponent: f64,
    /// `null` means a zero threshold.
    anchor_r_exponent: Option<f64>,
    cv_folds: usize,
}

impl StatArgs {
    fn resolve(&self, has_direction: bool) -> Result<StatConfig, Failure> {
        if self.m_folds < 2 {
            return Err(usage(format!("--m-folds must be at least 2, got {}", self.m_folds)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(usage(format!("--alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.pc_index == Some(0) {
            return Err(usage("--pc-index must be at least 1"));
        }
        let sparsity_budget = match self.sparsity_budget.as_str() {
            "auto" => None,
            s => match s.parse::<usize>() {
                Ok(b) if b >= 1 => Some(b),
                _ => return Err(usage(format!("--sparsity-budget must be 'auto' or a positive integer, got '{s}'"))),
            },
        };
        if self.dense_pc && sparsity_budget.is_some() {
            return Err(usage("--sparsity-budget cannot be combined with --dense-pc"));
        }
        if !(self.anchor_w_exponent > 0.0 && self.anchor_w_exponent <= 0.5) {
            return Err(usage(format!(
                "--anchor-w-exponent must lie in (0, 0.5], got {}",
                self.anchor_w_exponent
            )));
        }
        let anchor_r_exponent = if self.anchor_r_zero {
            None
        } else {
            let g = self.anchor_r_exponent.unwrap_or(1.0 / 3.0);
            if !(g > 0.0 && g.is_finite()) {
                return Err(usage(format!("--anchor-r-exponent must be positive, got {g}")));
            }
            Some(g)
        };
        if self.cv_folds < 2 {
            return Err(usage(format!("--cv-folds must be at least 2, got {}", self.cv_folds)));
        }
        if has_direction {
            match self.statistic {
                StatisticArg::Onestep => {
                    return Err(usage("--direction cannot be used with --statistic onestep, which estimates its own direction"))
                }
                _ if self.pc_index.is_some() => {
                    return Err(usage(format!(
                        "--pc-index cannot be combined with --direction for --statistic {}",
                        Statistic::from(self.statistic).as_str()
                    )))
                }
                _ => {}
            }
        }
        Ok(StatConfig {
            statistic: self.statistic,
            pc_index: if has_direction { None } else { Some(self.pc_index.unwrap_or(1)) },
            m_folds: self.m_folds,
            seed: self.seed,
            alpha: self.alpha,
            threshold_means: self.threshold_means,
            sparsity_budget,
            dense_pc: self.dense_pc,
            anchor_w_exponent: self.anchor_w_exponent,
            anchor_r_exponent,
            cv_folds: self.cv_folds,
        })
    }
}

impl StatConfig {
    fn options(&self) -> TestOptions {
        let mut o = TestOptions::default();
        o.nuisance.threshold_means = self.threshold_means;
        o.nuisance.sparsity_budget = self.sparsity_budget;
        o.nuisance.dense_pc = self.dense_pc;
        o.w_exponent = self.anchor_w_exponent;
        o.r_exponent = self.anchor_r_exponent;
        o.lasso = LassoConfig {
            cv_folds: self.cv_folds,
            seed: self.seed,
            ..LassoConfig::default()
        };
        o
    }
}

#[derive(Serialize)]
struct TestReport<'a> {
    #[serde(flatten)]
    result: &'a TestResult,
    version: &'static str,
    config: TestConfig<'a>,
}

#[derive(Serialize)]
struct TestConfig<'a> {
    command: &'static str,
    data: &'a Path,
    direction: Option<&'a Path>,
    group_column: &'a str,
    control_label: &'a str,
    treatment_label: &'a str,
    #[serde(flatten)]
    stat: &'a StatConfig,
}

#[derive(Serialize)]
struct MonteCarloReport<'a> {
    #[serde(flatten)]
    report: &'a McReport,
    version: &'static str,
    config: MonteCarloConfig<'a>,
}

#[derive(Serialize)]
struct MonteCarloConfig<'a> {
    command: &'static str,
    setting: Setting,
    n_x: usize,
    n_z: usize,
    reps: usize,
    oracle: bool,
    #[serde(flatten)]
    stat: &'a StatConfig,
}

/// Writes via a temporary sibling so a failed run leaves no partial file.
fn write_atomically(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> Result<(), Failure>) -> Outcome {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        write(&mut w)?;
        w.flush()?;
        Ok(())
    })();
    match result {
        Ok(()) => Ok(std::fs::rename(&tmp, path)?),
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e)
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome {
    write_atomically(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| usage(e.to_string()))?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

fn cmd_test(args: &TestArgs) -> Outcome {
    let stat = args.stat.resolve(args.direction.is_some())?;
    let layout = CsvLayout::new(&args.group_column, &args.control_label, &args.treatment_label);
    let data = load_csv(&args.data, &layout)?;
    let provider = match &args.direction {
        Some(path) => DirectionProvider::Fixed(load_direction_csv(path, data.feature_names(), data.p())?),
        None => DirectionProvider::Pc(stat.pc_index.unwrap_or(1)),
    };
    let plan = make_folds(data.n_x(), data.n_z(), stat.m_folds, stat.seed)?;
    let spec = TestSpec::new(stat.statistic.into(), provider).with_options(stat.options());
    let result = CrossFit::new(&data, &plan)?.run(&spec)?;

    match args.format {
        Format::Json => {
            let report = TestReport {
                result: &result,
                version: VERSION,
                config: TestConfig {
                    command: "test",
                    data: &args.data,
                    direction: args.direction.as_deref(),
                    group_column: &args.group_column,
                    control_label: &args.control_label,
                    treatment_label: &args.treatment_label,
                    stat: &stat,
                },
            };
            write_json(&args.output, &report)?;
        }
        Format::Csv => {
            let names: Vec<String> = (0..data.p()).map(|j| data.feature_name(j)).collect();
            let mean = Direction::user(result.mean_direction.clone().into())?;
            write_atomically(&args.output, |w| Ok(write_direction_csv(&mean, &names, w)?))?;
        }
    }

    println!("statistic {}: T = {:.6}", Statistic::from(stat.statistic).as_str(), result.statistic);
    println!("p-value: {:.6e}", result.p_value);
    println!("reject at alpha = {}: {}", stat.alpha, result.p_value < stat.alpha);
    if let Some([lo, hi]) = result.ci_95 {
        println!("95% interval (fold sum): [{lo:.6}, {hi:.6}]");
    }
    println!("top features of the mean direction:");
    for j in result.top_features(10) {
        println!("  {:<24} {:+.6}", data.feature_name(j), result.mean_direction[j]);
    }
    Ok(())
}

fn generator(setting: Setting, sizes: &Sizes) -> Result<Generator, Failure> {
    let (default_x, default_z) = match setting {
        Setting::AppAGlobal | Setting::AppAProjected => (500, 250),
        Setting::F2 => (250, 50),
        _ => (500, 500),
    };
    let n_x = sizes.n.or(sizes.n_x).unwrap_or(default_x);
    let n_z = sizes.n.or(sizes.n_z).unwrap_or(default_z);
    if n_x < 4 || n_z < 4 {
        return Err(usage(format!("--n-x and --n-z must both be at least 4, got {n_x} and {n_z}")));
    }
    let g = match setting {
        Setting::AppAGlobal => Generator::spiked(NullSetting::GlobalNull)?.with_sizes(n_x, n_z)?,
        Setting::AppAProjected => Generator::spiked(NullSetting::ProjectedNull)?.with_sizes(n_x, n_z)?,
        Setting::F1Global => Generator::zero_inflated(NullSetting::GlobalNull, n_x, n_z)?,
        Setting::F1Projected => Generator::zero_inflated(NullSetting::ProjectedNull, n_x, n_z)?,
        Setting::F1Alternative => Generator::zero_inflated(NullSetting::Alternative, n_x, n_z)?,
        Setting::F2 => Generator::blocks(n_x, n_z)?,
    };
    Ok(g)
}

fn cmd_simulate(args: &SimulateArgs) -> Outcome {
    let g = generator(args.setting, &args.sizes)?;
    let data = g.sample(args.seed)?;
    let layout = CsvLayout::new("group", "control", "treatment");
    let direction = match &args.direction_output {
        Some(_) => {
            if args.pc_index == 0 || args.pc_index > data.p() {
                return Err(usage(format!("--pc-index must lie in [1, {}]", data.p())));
            }
            Some(g.spec().direction(args.pc_index)?)
        }
        None => None,
    };
    write_atomically(&args.output, |w| {
        Ok(write_csv_to(&data, w, &layout)?)
    })?;
    if let (Some(path), Some(v)) = (&args.direction_output, direction) {
        let names: Vec<String> = (0..data.p()).map(|j| data.feature_name(j)).collect();
        write_atomically(path, |w| Ok(write_direction_csv(&v, &names, w)?))?;
    }
    println!(
        "wrote {} control and {} treatment rows with {} features",
        data.n_x(),
        data.n_z(),
        data.p()
    );
    Ok(())
}

fn resolve_workers(w: Option<usize>) -> Result<usize, Failure> {
    match w {
        Some(0) => Err(usage("--workers (or HDPROJ_WORKERS) must be at least 1")),
        Some(w) => Ok(w),
        None => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn cmd_montecarlo(args: &MonteCarloArgs) -> Outcome {
    let stat = args.stat.resolve(false)?;
    if args.reps == 0 {
        return Err(usage("--reps must be at least 1"));
    }
    let workers = resolve_workers(args.workers)?;
    let g = generator(args.setting, &args.sizes)?;
    let test = TestSpec::new(stat.statistic.into(), DirectionProvider::Pc(stat.pc_index.unwrap_or(1)))
        .with_options(stat.options())
        .with_oracle(args.oracle);
    let report = monte_carlo(&g, &test, stat.m_folds, args.reps, stat.seed, stat.alpha, workers)?;
    match args.format {
        Format::Json => write_json(
            &args.output,
            &MonteCarloReport {
                report: &report,
                version: VERSION,
                config: MonteCarloConfig {
                    command: "montecarlo",
                    setting: args.setting,
                    n_x: g.n_x(),
                    n_z: g.n_z(),
                    reps: args.reps,
                    oracle: args.oracle,
                    stat: &stat,
                },
            },
        )?,
        Format::Csv => write_atomically(&args.output, |w| Ok(report.write_csv(w)?))?,
    }
    println!("{}: rejection_rate {:.4}", report.statistic, report.rejection_rate);
    println!(
        "reps {}, degenerate {}, KS distance to N(0,1) {:.4}",
        report.reps, report.degenerate_reps, report.ks_to_normal
    );
    Ok(())
}

#[derive(Serialize)]
struct DegeneracyReport {
    version: &'static str,
    reps: usize,
    seed: u64,
    zero_fraction: f64,
}

fn cmd_demo_degeneracy(args: &DegeneracyArgs) -> Outcome {
    if args.reps < 50 {
        return Err(usage(format!("--reps must be at least 50, got {}", args.reps)));
    }
    let workers = resolve_workers(args.workers)?;
    let fraction = degeneracy_demo(args.reps, args.seed, workers)?;
    if let Some(path) = &args.output {
        write_json(
            path,
            &DegeneracyReport {
                version: VERSION,
                reps: args.reps,
                seed: args.seed,
                zero_fraction: fraction,
            },
        )?;
    }
    println!("fraction of exactly-zero lasso fits: {fraction:.4} over {} reps", args.reps);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Montecarlo(a) => cmd_montecarlo(a),
        Command::DemoDegeneracy(a) => cmd_demo_degeneracy(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical degeneracy: {msg}");
            ExitCode::from(3)
        }
    }
}
