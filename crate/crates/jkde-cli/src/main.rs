//! Command-line toolkit for density estimation on mixed
//! discrete/continuous data: fit and evaluate models, run simulation
//! studies and convergence-rate experiments, and query the closed-form
//! bias/efficiency calculators.

mod errors;
mod gridparse;
mod io;

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use jkde::bandwidth::{normal_reference_scales, reference_bandwidths, select_cv, CvConfig};
use jkde::estimator::{Bandwidths, JkdeModel};
use jkde::kernels::{KernelFamily, KernelSpec};
use jkde::noise::{validate_noise_class, NoiseShape, NoiseSpec};
use jkde::persist::{DatasetRef, ModelDocument};
use jkde::simharness::{
    rate_experiment, run_scenario, ErrorMode, EstimatorKind, RateConfig, ScenarioConfig,
};
use jkde::theory::{
    are, bias_cell_weights, bias_oracle_quadrature, bias_second_differences, DiscretePmf,
};

use errors::{CliError, CliResult};
use gridparse::{
    parse_f64_list, parse_grid, parse_i64_list, parse_ladder, parse_scenario, parse_usize_list,
};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(name = "jkde", version, about = "Density estimation for mixed discrete/continuous data")]
struct Cli {
    /// Cap the worker thread count (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a CSV dataset and save it as JSON.
    Fit(FitArgs),
    /// Evaluate a saved model over a grid, writing CSV.
    Eval(EvalArgs),
    /// Compare estimators on synthetic data, writing per-replicate errors.
    Simulate(SimulateArgs),
    /// Measure how estimation error shrinks as the sample grows.
    Rates(RatesArgs),
    /// Print the bias of a discrete-cell estimate by three methods.
    Bias(BiasArgs),
    /// Print the asymptotic efficiency ratio against sample frequencies.
    Are(AreArgs),
    /// Check noise parameters against the admissible class.
    ValidateNoise(ValidateNoiseArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated names of integer-valued columns.
    #[arg(long, default_value = "")]
    discrete: String,
    /// Comma-separated names of real-valued columns (default: all other columns).
    #[arg(long)]
    continuous: Option<String>,
    /// uniform | epanechnikov | biweight
    #[arg(long, default_value = "epanechnikov")]
    kernel: String,
    /// uniform | trapezoid
    #[arg(long, default_value = "uniform")]
    noise: String,
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    /// Discrete bandwidths, comma separated, one per discrete column.
    #[arg(long)]
    h: Option<String>,
    /// Continuous bandwidths, comma separated, one per continuous column.
    #[arg(long)]
    b: Option<String>,
    /// Select bandwidths by leave-one-out likelihood cross-validation.
    #[arg(long)]
    cv: bool,
    /// Grid points per coordinate in the cross-validation search.
    #[arg(long, default_value_t = 15)]
    cv_grid: usize,
    /// Lower clamp for leave-one-out densities inside the log.
    #[arg(long, default_value_t = 1e-10)]
    cv_floor: f64,
    /// Use the plateau / normal-reference bandwidth rule.
    #[arg(long)]
    reference: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Where to write the model JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Model JSON produced by `fit`.
    #[arg(long)]
    model: PathBuf,
    /// Dataset CSV (default: the path recorded in the model).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Evaluation grid, e.g. "z1=0:15;x1=-2:0.4:2".
    #[arg(long)]
    grid: String,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario descriptor, e.g. "p=1,q=1,m=15".
    #[arg(long)]
    scenario: String,
    /// Success probability of the binomial generator.
    #[arg(long, default_value_t = 0.3)]
    theta: f64,
    /// Comma-separated sample sizes.
    #[arg(long, default_value = "50,200")]
    n: String,
    /// Replicates per sample size.
    #[arg(long, default_value_t = 200)]
    nsim: usize,
    /// Comma-separated estimator labels.
    #[arg(long, default_value = "jkde,jkde2,jkde-ref,jkde2-ref,liracine")]
    estimators: String,
    #[arg(long, default_value = "epanechnikov")]
    kernel: String,
    /// Grid points per coordinate in the cross-validation search.
    #[arg(long, default_value_t = 15)]
    cv_grid: usize,
    /// Lower clamp for leave-one-out densities inside the log.
    #[arg(long, default_value_t = 1e-10)]
    cv_floor: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (default: stdout). Median summaries go to stderr.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RatesArgs {
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    q: usize,
    /// Kernel order assumed by the bandwidth rate (shipped kernels: 2).
    #[arg(long, default_value_t = 2)]
    ell: u32,
    /// Binomial size of the discrete generator.
    #[arg(long, default_value_t = 1)]
    m: i64,
    #[arg(long, default_value_t = 0.3)]
    theta: f64,
    /// Discrete part of the evaluation point (default: zeros).
    #[arg(long)]
    z: Option<String>,
    /// Continuous part of the evaluation point (default: zeros).
    #[arg(long)]
    x: Option<String>,
    /// Geometric ladder start:factor:end of sample sizes.
    #[arg(long, default_value = "250:2:16000")]
    ladder: String,
    #[arg(long, default_value_t = 400)]
    reps: usize,
    /// pointwise | supgrid
    #[arg(long, default_value = "pointwise")]
    mode: String,
    #[arg(long, default_value = "epanechnikov")]
    kernel: String,
    #[arg(long, default_value = "uniform")]
    noise: String,
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    /// Scale on the continuous reference bandwidth.
    #[arg(long, default_value_t = 1.0)]
    b_scale: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV of per-n errors (default: stdout). The slope summary
    /// goes to stdout after the rows.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BiasArgs {
    /// Cell probabilities, e.g. "0.7,0.3"; must sum to one.
    #[arg(long)]
    pmf: String,
    /// Integer value of the first cell.
    #[arg(long, default_value_t = 0)]
    zmin: i64,
    /// Cell to evaluate at.
    #[arg(long)]
    z: i64,
    /// Discrete bandwidth.
    #[arg(long)]
    h: f64,
    #[arg(long, default_value = "uniform")]
    kernel: String,
    #[arg(long, default_value = "uniform")]
    noise: String,
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
}

#[derive(Args)]
struct AreArgs {
    /// Cell probability the ratio is evaluated at.
    #[arg(long)]
    f: f64,
    #[arg(long, default_value = "epanechnikov")]
    kernel: String,
    #[arg(long, default_value = "uniform")]
    noise: String,
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
}

#[derive(Args)]
struct ValidateNoiseArgs {
    /// uniform | trapezoid
    #[arg(long)]
    noise: String,
    #[arg(long, default_value_t = 0.5)]
    gamma1: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma2: f64,
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            std::process::exit(2);
        }
        // May fail if a pool already exists; results do not depend on the
        // thread count, so that is harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Fit(args) => run_fit(args),
        Command::Eval(args) => run_eval(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Rates(args) => run_rates(args),
        Command::Bias(args) => run_bias(args),
        Command::Are(args) => run_are(args),
        Command::ValidateNoise(args) => run_validate_noise(args),
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    match seed {
        Some(s) => s,
        None => {
            eprintln!("seed: {DEFAULT_SEED} (default; pass --seed to vary)");
            DEFAULT_SEED
        }
    }
}

fn parse_kernel(name: &str) -> CliResult<KernelSpec> {
    Ok(KernelSpec::new(KernelFamily::from_str(name)?))
}

fn cv_config(grid: usize, floor: f64) -> CliResult<CvConfig> {
    if grid < 2 {
        return Err(CliError::Usage("--cv-grid must be at least 2".into()));
    }
    if !(floor.is_finite() && floor > 0.0) {
        return Err(CliError::Usage(
            "--cv-floor must be positive and finite".into(),
        ));
    }
    Ok(CvConfig {
        grid_points: grid,
        floor,
        ..CvConfig::default()
    })
}

fn parse_noise(name: &str, gamma1: Option<f64>, gamma2: Option<f64>) -> CliResult<NoiseSpec> {
    let shape = NoiseShape::from_str(name)?;
    let (d1, d2) = match shape {
        NoiseShape::Uniform => (0.5, 0.5),
        // The in-class trapezoid needs complementary shoulders; require
        // explicit parameters rather than inventing a default.
        NoiseShape::Trapezoid => {
            if gamma1.is_none() || gamma2.is_none() {
                return Err(CliError::Usage(
                    "trapezoid noise needs --gamma1 and --gamma2".into(),
                ));
            }
            (0.0, 0.0)
        }
    };
    Ok(NoiseSpec::new(
        shape,
        gamma1.unwrap_or(d1),
        gamma2.unwrap_or(d2),
    )?)
}

fn name_list(spec: &str) -> Vec<String> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn open_out(out: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(
            File::create(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
        ),
        None => Box::new(std::io::stdout().lock()),
    })
}

/// Rounds away quadrature and accumulation dust (well below every
/// tolerance in use) so printed values are stable and exact zeros print
/// as `0`.
fn snap(v: f64) -> f64 {
    let s = (v / 1e-12).round() * 1e-12;
    if s == 0.0 {
        0.0
    } else {
        s
    }
}

fn run_fit(args: FitArgs) -> CliResult<()> {
    let discrete = name_list(&args.discrete);
    let continuous = match &args.continuous {
        Some(spec) => name_list(spec),
        None => {
            let headers = io::read_headers(&args.data)?;
            headers
                .into_iter()
                .filter(|h| !discrete.contains(h))
                .collect()
        }
    };
    let data = io::read_dataset(&args.data, &discrete, &continuous)?;
    let kernel = parse_kernel(&args.kernel)?;
    let noise = parse_noise(&args.noise, args.gamma1, args.gamma2)?;
    let seed = resolve_seed(args.seed);

    let explicit = args.h.is_some() || args.b.is_some();
    if (args.cv && args.reference) || (explicit && (args.cv || args.reference)) {
        return Err(CliError::Usage(
            "pick one of --cv, --reference, or explicit --h/--b".into(),
        ));
    }
    let bandwidths = if args.cv {
        select_cv(&data, kernel, &noise, &cv_config(args.cv_grid, args.cv_floor)?, seed)?
    } else if args.reference {
        let scales = normal_reference_scales(&data);
        reference_bandwidths(data.n(), kernel.order(), &noise, data.p(), &scales)?
    } else {
        let h = match &args.h {
            Some(spec) => parse_f64_list(spec, "h")?,
            None => Vec::new(),
        };
        let b = match &args.b {
            Some(spec) => parse_f64_list(spec, "b")?,
            None => Vec::new(),
        };
        if h.len() != data.p() || b.len() != data.q() {
            return Err(CliError::Usage(format!(
                "need {} discrete and {} continuous bandwidths (got {} and {}); \
                 or pass --cv / --reference",
                data.p(),
                data.q(),
                h.len(),
                b.len()
            )));
        }
        Bandwidths::new(h, b)?
    };

    let model = JkdeModel::fit(data, kernel, noise, bandwidths, seed)?;
    let doc = ModelDocument::from_model(
        &model,
        DatasetRef {
            path: args.data.display().to_string(),
            discrete,
            continuous,
        },
    );
    io::write_model(&args.out, &doc)
}

fn run_eval(args: EvalArgs) -> CliResult<()> {
    let doc = io::read_model(&args.model)?;
    let discrete = doc.dataset.discrete.clone();
    let continuous = doc.dataset.continuous.clone();
    let data_path = args
        .data
        .clone()
        .unwrap_or_else(|| PathBuf::from(&doc.dataset.path));
    let data = io::read_dataset(&data_path, &discrete, &continuous)?;
    let model = doc.into_model(data)?;
    let grid = parse_grid(&args.grid, &discrete, &continuous)?;
    let densities = model.evaluate_grid(&grid)?;

    let mut writer = csv::Writer::from_writer(open_out(&args.out)?);
    let mut header: Vec<String> = discrete.clone();
    header.extend(continuous.iter().cloned());
    header.push("density".into());
    writer.write_record(&header)?;
    let mut idx = 0usize;
    let mut write_err: Option<csv::Error> = None;
    grid.for_each_node(|zs, xs| {
        if write_err.is_some() {
            return;
        }
        let mut record: Vec<String> = zs.iter().map(|v| v.to_string()).collect();
        record.extend(xs.iter().map(|v| v.to_string()));
        record.push(densities[idx].to_string());
        idx += 1;
        if let Err(e) = writer.write_record(&record) {
            write_err = Some(e);
        }
    });
    if let Some(e) = write_err {
        return Err(e.into());
    }
    writer.flush().map_err(CliError::from)?;
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> CliResult<()> {
    let (p, q, m) = parse_scenario(&args.scenario)?;
    let scenario_label = format!("p={p},q={q},m={m}");
    let estimators: Vec<EstimatorKind> = name_list(&args.estimators)
        .iter()
        .map(|s| EstimatorKind::from_str(s))
        .collect::<jkde::Result<_>>()?;
    let config = ScenarioConfig {
        p,
        q,
        m,
        theta: args.theta,
        n_list: parse_usize_list(&args.n, "n")?,
        n_sim: args.nsim,
        estimators: estimators.clone(),
        kernel: parse_kernel(&args.kernel)?,
        seed: resolve_seed(args.seed),
        cv: cv_config(args.cv_grid, args.cv_floor)?,
    };
    let table = run_scenario(&config)?;

    let mut writer = csv::Writer::from_writer(open_out(&args.out)?);
    writer.write_record(["scenario", "estimator", "n", "replicate", "rase"])?;
    for row in &table.rows {
        writer.write_record([
            scenario_label.as_str(),
            row.estimator.label(),
            &row.n.to_string(),
            &row.replicate.to_string(),
            &row.rase.to_string(),
        ])?;
    }
    writer.flush().map_err(CliError::from)?;

    for &kind in &estimators {
        for &n in &config.n_list {
            if let Some(median) = table.median_rase(kind, n) {
                eprintln!("median {scenario_label} {kind} n={n}: {median}");
            }
        }
    }
    Ok(())
}

fn run_rates(args: RatesArgs) -> CliResult<()> {
    let kernel = parse_kernel(&args.kernel)?;
    if args.ell != kernel.order() {
        return Err(CliError::Usage(format!(
            "--ell {} does not match the {} kernel (order {})",
            args.ell,
            kernel.family(),
            kernel.order()
        )));
    }
    let config = RateConfig {
        p: args.p,
        q: args.q,
        m: args.m,
        theta: args.theta,
        z: match &args.z {
            Some(spec) => parse_i64_list(spec, "z")?,
            None => vec![0; args.p],
        },
        x: match &args.x {
            Some(spec) => parse_f64_list(spec, "x")?,
            None => vec![0.0; args.q],
        },
        n_ladder: parse_ladder(&args.ladder)?,
        reps: args.reps,
        mode: ErrorMode::from_str(&args.mode)?,
        kernel,
        noise: parse_noise(&args.noise, args.gamma1, args.gamma2)?,
        seed: resolve_seed(args.seed),
        b_scale: args.b_scale,
    };
    let result = rate_experiment(&config)?;

    let mut writer = csv::Writer::from_writer(open_out(&args.out)?);
    writer.write_record(["n", "reps", "rmse"])?;
    for &(n, rmse) in &result.per_n {
        writer.write_record([&n.to_string(), &config.reps.to_string(), &rmse.to_string()])?;
    }
    writer.flush().map_err(CliError::from)?;
    println!("slope={} stderr={}", result.slope, result.stderr);
    Ok(())
}

fn run_bias(args: BiasArgs) -> CliResult<()> {
    if !(args.h.is_finite() && args.h > 0.0) {
        return Err(CliError::Usage(format!(
            "--h must be positive and finite, got {}",
            args.h
        )));
    }
    let probs = parse_f64_list(&args.pmf, "pmf")?;
    let pmf = DiscretePmf::new(args.zmin, probs)?;
    let kernel = parse_kernel(&args.kernel)?;
    let noise = parse_noise(&args.noise, args.gamma1, args.gamma2)?;

    // The symmetric second-difference route assumes the uniform noise
    // density; the other two apply to the whole class.
    if noise.shape() == NoiseShape::Uniform {
        let v = bias_second_differences(&pmf, args.z, args.h, kernel);
        println!("second-differences,{}", snap(v));
    }
    let v = bias_cell_weights(&pmf, args.z, args.h, kernel, &noise);
    println!("cell-weights,{}", snap(v));
    let v = bias_oracle_quadrature(&pmf, args.z, args.h, kernel, &noise);
    println!("quadrature,{}", snap(v));
    Ok(())
}

fn run_are(args: AreArgs) -> CliResult<()> {
    let kernel = parse_kernel(&args.kernel)?;
    let noise = parse_noise(&args.noise, args.gamma1, args.gamma2)?;
    let value = are(args.f, &noise, kernel)?;
    println!("{value:.6}");
    Ok(())
}

fn run_validate_noise(args: ValidateNoiseArgs) -> CliResult<()> {
    let shape = NoiseShape::from_str(&args.noise)?;
    let report = validate_noise_class(shape, args.gamma1, args.gamma2);
    for check in &report.checks {
        println!(
            "{},{},{}",
            check.name,
            if check.passed { "pass" } else { "fail" },
            check.residual
        );
    }
    println!("result,{}", if report.passed() { "pass" } else { "fail" });
    Ok(())
}
