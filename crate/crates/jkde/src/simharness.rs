//! Simulation harness: synthetic data, competing estimators, risk tables,
//! and convergence-rate experiments.
//!
//! The generating model is fixed: discrete coordinates are iid binomial
//! counts, continuous ones iid standard normal, all independent. That keeps
//! the true density available in closed form for error measurement.

use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

use crate::bandwidth::{
    normal_reference_scales, reference_bandwidths, select_cv, select_cv_li_racine, CvConfig,
};
use crate::estimator::{
    li_racine_eval, rase, sample_frequency, GridSpec, JkdeModel, MixedDataset,
};
use crate::kernels::KernelSpec;
use crate::noise::NoiseSpec;
use crate::rng::{self, derive_seed, RngStream};
use crate::theory::DiscretePmf;
use crate::{Error, Result};

/// Draws `n` observations with `p` binomial(m, theta) columns and `q`
/// standard normal columns, row by row from `stream`.
pub fn simulate(
    p: usize,
    q: usize,
    m: i64,
    theta: f64,
    n: usize,
    stream: &mut RngStream,
) -> Result<MixedDataset> {
    if p > 0 {
        if m < 1 {
            return Err(Error::InvalidArgument(format!(
                "binomial count parameter must be at least 1, got {m}"
            )));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "binomial success probability must lie in (0, 1), got {theta}"
            )));
        }
    }
    let binom = if p > 0 {
        Some(Binomial::new(m as u64, theta).map_err(|e| Error::InvalidArgument(e.to_string()))?)
    } else {
        None
    };
    let mut z = Vec::with_capacity(n * p);
    let mut x = Vec::with_capacity(n * q);
    for _ in 0..n {
        if let Some(b) = &binom {
            for _ in 0..p {
                z.push(b.sample(stream) as i64);
            }
        }
        for _ in 0..q {
            x.push(<StandardNormal as Distribution<f64>>::sample(
                &StandardNormal,
                stream,
            ));
        }
    }
    MixedDataset::new(z, x, p, q)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Density of the generating model at a mixed point: a product of
/// binomial(m, theta) masses and standard normal densities.
pub fn true_density(z: &[i64], x: &[f64], m: i64, theta: f64) -> Result<f64> {
    let mut value = 1.0;
    if !z.is_empty() {
        let pmf = DiscretePmf::binomial(m, theta)?;
        for &zk in z {
            value *= pmf.prob(zk);
        }
    }
    for &xj in x {
        value *= normal_pdf(xj);
    }
    Ok(value)
}

/// The estimators the study compares.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    /// Jittered estimator, uniform noise, cross-validated bandwidths.
    Jkde,
    /// Jittered estimator, trapezoid(0.375, 0.625) noise, cross-validated.
    Jkde2,
    /// Jittered estimator, uniform noise, reference-rule bandwidths.
    JkdeRef,
    /// Jittered estimator, trapezoid noise, reference-rule bandwidths.
    Jkde2Ref,
    /// Geometric ordered-kernel smoother with cross-validated parameters.
    LiRacine,
    /// Raw sample frequencies; discrete-only data.
    SampleFreq,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 6] = [
        EstimatorKind::Jkde,
        EstimatorKind::Jkde2,
        EstimatorKind::JkdeRef,
        EstimatorKind::Jkde2Ref,
        EstimatorKind::LiRacine,
        EstimatorKind::SampleFreq,
    ];

    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Jkde => "jkde",
            EstimatorKind::Jkde2 => "jkde2",
            EstimatorKind::JkdeRef => "jkde-ref",
            EstimatorKind::Jkde2Ref => "jkde2-ref",
            EstimatorKind::LiRacine => "liracine",
            EstimatorKind::SampleFreq => "freq",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown estimator '{s}'")))
    }
}

/// How a rate experiment measures error.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorMode {
    /// Absolute error at a single evaluation point.
    Pointwise,
    /// Largest absolute error over the standard evaluation grid.
    SupGrid,
}

impl fmt::Display for ErrorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorMode::Pointwise => "pointwise",
            ErrorMode::SupGrid => "supgrid",
        })
    }
}

impl FromStr for ErrorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pointwise" => Ok(ErrorMode::Pointwise),
            "supgrid" => Ok(ErrorMode::SupGrid),
            other => Err(Error::InvalidArgument(format!(
                "unknown error mode '{other}'"
            ))),
        }
    }
}

/// Configuration for a comparative risk study.
#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub p: usize,
    pub q: usize,
    pub m: i64,
    pub theta: f64,
    pub n_list: Vec<usize>,
    pub n_sim: usize,
    pub estimators: Vec<EstimatorKind>,
    pub kernel: KernelSpec,
    pub seed: u64,
    pub cv: CvConfig,
}

/// One replicate's error for one estimator at one sample size.
#[derive(Clone, Debug, PartialEq)]
pub struct RaseRow {
    pub estimator: EstimatorKind,
    pub n: usize,
    pub replicate: usize,
    pub rase: f64,
}

/// All replicates of a study.
#[derive(Clone, Debug, PartialEq)]
pub struct RiskTable {
    pub rows: Vec<RaseRow>,
}

impl RiskTable {
    /// Median error for one estimator at one sample size; `None` when the
    /// table has no matching rows.
    pub fn median_rase(&self, estimator: EstimatorKind, n: usize) -> Option<f64> {
        let mut values: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.estimator == estimator && r.n == n)
            .map(|r| r.rase)
            .collect();
        if values.is_empty() {
            return None;
        }
        values.sort_by(|a, b| a.partial_cmp(b).expect("errors are finite"));
        let mid = values.len() / 2;
        Some(if values.len() % 2 == 1 {
            values[mid]
        } else {
            0.5 * (values[mid - 1] + values[mid])
        })
    }
}

fn trapezoid_noise() -> NoiseSpec {
    NoiseSpec::trapezoid(0.375, 0.625).expect("fixed trapezoid parameters are valid")
}

fn grid_nodes(grid: &GridSpec) -> Vec<(Vec<i64>, Vec<f64>)> {
    let mut nodes = Vec::with_capacity(grid.node_count());
    grid.for_each_node(|z, x| nodes.push((z.to_vec(), x.to_vec())));
    nodes
}

fn fit_and_evaluate(
    estimator: EstimatorKind,
    data: &MixedDataset,
    grid: &GridSpec,
    nodes: &[(Vec<i64>, Vec<f64>)],
    kernel: KernelSpec,
    cv: &CvConfig,
    fit_seed: u64,
) -> Result<Vec<f64>> {
    match estimator {
        EstimatorKind::Jkde | EstimatorKind::Jkde2 => {
            let noise = if estimator == EstimatorKind::Jkde {
                NoiseSpec::uniform()
            } else {
                trapezoid_noise()
            };
            let bw = select_cv(data, kernel, &noise, cv, fit_seed)?;
            let model = JkdeModel::fit(data.clone(), kernel, noise, bw, fit_seed)?;
            model.evaluate_grid(grid)
        }
        EstimatorKind::JkdeRef | EstimatorKind::Jkde2Ref => {
            let noise = if estimator == EstimatorKind::JkdeRef {
                NoiseSpec::uniform()
            } else {
                trapezoid_noise()
            };
            let scales = normal_reference_scales(data);
            let bw =
                reference_bandwidths(data.n(), kernel.order(), &noise, data.p(), &scales)?;
            let model = JkdeModel::fit(data.clone(), kernel, noise, bw, fit_seed)?;
            model.evaluate_grid(grid)
        }
        EstimatorKind::LiRacine => {
            let (lambdas, b) = select_cv_li_racine(data, kernel, cv)?;
            nodes
                .iter()
                .map(|(z, x)| li_racine_eval(data, z, x, &lambdas, &b, kernel))
                .collect()
        }
        EstimatorKind::SampleFreq => nodes
            .iter()
            .map(|(z, _)| sample_frequency(data, z))
            .collect(),
    }
}

/// Runs the comparative study. Every estimator sees the same data stream
/// for a given (n, replicate) pair; fit randomness is keyed by estimator
/// position so adding or removing estimators never perturbs the others.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RiskTable> {
    if config.n_sim == 0 || config.n_list.is_empty() || config.estimators.is_empty() {
        return Err(Error::InvalidArgument(
            "study needs at least one sample size, replicate, and estimator".into(),
        ));
    }
    if config.estimators.contains(&EstimatorKind::SampleFreq) && config.q != 0 {
        return Err(Error::RequiresDiscreteOnly);
    }
    let grid = GridSpec::simulation_grid(config.p, config.q, config.m)?;
    let nodes = grid_nodes(&grid);
    let truth: Vec<f64> = nodes
        .iter()
        .map(|(z, x)| true_density(z, x, config.m, config.theta))
        .collect::<Result<_>>()?;

    let tasks: Vec<(usize, usize)> = config
        .n_list
        .iter()
        .flat_map(|&n| (0..config.n_sim).map(move |r| (n, r)))
        .collect();

    let groups: Vec<Result<Vec<RaseRow>>> = tasks
        .par_iter()
        .map(|&(n, r)| {
            let mut stream = RngStream::derive(
                config.seed,
                &[rng::DOMAIN_SCENARIO_DATA, n as u64, r as u64],
            );
            let data = simulate(config.p, config.q, config.m, config.theta, n, &mut stream)?;
            config
                .estimators
                .iter()
                .enumerate()
                .map(|(est_idx, &estimator)| {
                    let fit_seed = derive_seed(
                        config.seed,
                        &[rng::DOMAIN_SCENARIO_FIT, n as u64, r as u64, est_idx as u64],
                    );
                    let estimates = fit_and_evaluate(
                        estimator,
                        &data,
                        &grid,
                        &nodes,
                        config.kernel,
                        &config.cv,
                        fit_seed,
                    )?;
                    Ok(RaseRow {
                        estimator,
                        n,
                        replicate: r,
                        rase: rase(&estimates, &truth)?,
                    })
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::with_capacity(tasks.len() * config.estimators.len());
    for group in groups {
        rows.extend(group?);
    }
    Ok(RiskTable { rows })
}

/// Configuration for a convergence-rate experiment.
#[derive(Clone, Debug)]
pub struct RateConfig {
    pub p: usize,
    pub q: usize,
    pub m: i64,
    pub theta: f64,
    /// Evaluation point, used in pointwise mode.
    pub z: Vec<i64>,
    pub x: Vec<f64>,
    pub n_ladder: Vec<usize>,
    pub reps: usize,
    pub mode: ErrorMode,
    pub kernel: KernelSpec,
    pub noise: NoiseSpec,
    pub seed: u64,
    /// Scale for the continuous reference bandwidth b = scale * n^(-1/(2 ell + q)).
    pub b_scale: f64,
}

/// Root mean squared error per sample size, with the fitted log-log slope.
#[derive(Clone, Debug, PartialEq)]
pub struct RateResult {
    pub per_n: Vec<(usize, f64)>,
    pub slope: f64,
    pub stderr: f64,
}

/// Geometric ladder of sample sizes from `start` to `end`, inclusive.
pub fn geometric_ladder(start: usize, end: usize, points: usize) -> Result<Vec<usize>> {
    if start == 0 || end <= start || points < 2 {
        return Err(Error::InvalidArgument(
            "ladder needs 0 < start < end and at least two points".into(),
        ));
    }
    let ratio = (end as f64 / start as f64).powf(1.0 / (points - 1) as f64);
    let mut ladder = Vec::with_capacity(points);
    let mut prev = 0usize;
    for i in 0..points {
        let raw = (start as f64 * ratio.powi(i as i32)).round() as usize;
        let n = raw.max(prev + 1);
        ladder.push(n);
        prev = n;
    }
    *ladder.first_mut().expect("points >= 2") = start;
    *ladder.last_mut().expect("points >= 2") = end;
    Ok(ladder)
}

/// Ordinary least squares of `ys` on `xs`: slope and its standard error.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len();
    if n != ys.len() || n < 3 {
        return Err(Error::InvalidArgument(
            "slope fit needs at least three matched points".into(),
        ));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::NumericFailure("degenerate slope-fit design".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (rss / (nf - 2.0) / sxx).sqrt();
    Ok((slope, stderr))
}

/// Measures how fast the estimation error shrinks along a ladder of sample
/// sizes, using plateau discrete bandwidths and reference-rate continuous
/// ones, then fits a log-log slope.
pub fn rate_experiment(config: &RateConfig) -> Result<RateResult> {
    if config.reps < 2 {
        return Err(Error::InvalidArgument(
            "rate experiment needs at least two replicates".into(),
        ));
    }
    if config.mode == ErrorMode::Pointwise
        && (config.z.len() != config.p || config.x.len() != config.q)
    {
        return Err(Error::DimensionMismatch(
            "evaluation point does not match the data dimensions".into(),
        ));
    }
    if !(config.b_scale > 0.0 && config.b_scale.is_finite()) {
        return Err(Error::InvalidBandwidth(format!(
            "bandwidth scale must be positive and finite, got {}",
            config.b_scale
        )));
    }
    let grid = GridSpec::simulation_grid(config.p, config.q, config.m)?;
    let nodes = grid_nodes(&grid);
    let truth_grid: Vec<f64> = nodes
        .iter()
        .map(|(z, x)| true_density(z, x, config.m, config.theta))
        .collect::<Result<_>>()?;
    let truth_point = if config.mode == ErrorMode::Pointwise {
        true_density(&config.z, &config.x, config.m, config.theta)?
    } else {
        0.0
    };

    let mut per_n = Vec::with_capacity(config.n_ladder.len());
    for &n in &config.n_ladder {
        let sq_errors: Vec<Result<f64>> = (0..config.reps)
            .into_par_iter()
            .map(|r| {
                let mut stream = RngStream::derive(
                    config.seed,
                    &[rng::DOMAIN_RATE_DATA, n as u64, r as u64],
                );
                let data =
                    simulate(config.p, config.q, config.m, config.theta, n, &mut stream)?;
                let scales = vec![config.b_scale; config.q];
                let bw = reference_bandwidths(
                    n,
                    config.kernel.order(),
                    &config.noise,
                    config.p,
                    &scales,
                )?;
                let fit_seed = derive_seed(
                    config.seed,
                    &[rng::DOMAIN_RATE_FIT, n as u64, r as u64],
                );
                let model =
                    JkdeModel::fit(data, config.kernel, config.noise, bw, fit_seed)?;
                let err = match config.mode {
                    ErrorMode::Pointwise => {
                        (model.evaluate(&config.z, &config.x)? - truth_point).abs()
                    }
                    ErrorMode::SupGrid => {
                        let estimates = model.evaluate_grid(&grid)?;
                        estimates
                            .iter()
                            .zip(&truth_grid)
                            .map(|(e, t)| (e - t).abs())
                            .fold(0.0f64, f64::max)
                    }
                };
                Ok(err * err)
            })
            .collect();
        let mut total = 0.0;
        for e in sq_errors {
            total += e?;
        }
        let rmse = (total / config.reps as f64).sqrt();
        if !(rmse > 0.0) {
            return Err(Error::NumericFailure(format!(
                "error vanished at n = {n}; slope undefined"
            )));
        }
        per_n.push((n, rmse));
    }

    let xs: Vec<f64> = per_n.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = per_n.iter().map(|&(_, e)| e.ln()).collect();
    let (slope, stderr) = ols_slope(&xs, &ys)?;
    Ok(RateResult {
        per_n,
        slope,
        stderr,
    })
}
