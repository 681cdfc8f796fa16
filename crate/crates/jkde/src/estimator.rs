//! Jittered product-kernel density estimation on mixed data.
//!
//! Discrete coordinates receive additive noise once, at fit time; the model
//! is then an ordinary product-kernel density estimate on the jittered
//! sample, evaluated back at integer points (or anywhere else). With a
//! discrete bandwidth no larger than the noise plateau, only observations
//! sitting exactly at the evaluation point contribute in the discrete
//! direction, which is what makes the estimator unbiased there.

use crate::kernels::KernelSpec;
use crate::noise::NoiseSpec;
use crate::rng::{self, RngStream};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Observations with `p` integer-valued and `q` real-valued coordinates,
/// stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedDataset {
    n: usize,
    p: usize,
    q: usize,
    z: Vec<i64>,
    x: Vec<f64>,
}

impl MixedDataset {
    /// Builds a dataset from row-major coordinate blocks.
    pub fn new(z: Vec<i64>, x: Vec<f64>, p: usize, q: usize) -> Result<Self> {
        if p + q == 0 {
            return Err(Error::DimensionMismatch(
                "dataset needs at least one coordinate".into(),
            ));
        }
        let n = if p > 0 { z.len() / p } else { x.len() / q };
        if p > 0 && z.len() != n * p {
            return Err(Error::DimensionMismatch(format!(
                "discrete block has {} values, not a multiple of p = {p}",
                z.len()
            )));
        }
        if p == 0 && !z.is_empty() {
            return Err(Error::DimensionMismatch(
                "discrete block must be empty when p = 0".into(),
            ));
        }
        if x.len() != n * q {
            return Err(Error::DimensionMismatch(format!(
                "continuous block has {} values, expected {}",
                x.len(),
                n * q
            )));
        }
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::DimensionMismatch(
                "continuous values must be finite".into(),
            ));
        }
        Ok(MixedDataset { n, p, q, z, x })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn z_row(&self, i: usize) -> &[i64] {
        &self.z[i * self.p..(i + 1) * self.p]
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.x[i * self.q..(i + 1) * self.q]
    }

    /// Observed (min, max) of discrete column `k`.
    pub fn z_column_range(&self, k: usize) -> (i64, i64) {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for i in 0..self.n {
            let v = self.z[i * self.p + k];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Sample standard deviation of continuous column `j` (zero when n < 2).
    pub fn x_column_std(&self, j: usize) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let nf = self.n as f64;
        let mean = (0..self.n).map(|i| self.x[i * self.q + j]).sum::<f64>() / nf;
        let ss = (0..self.n)
            .map(|i| {
                let d = self.x[i * self.q + j] - mean;
                d * d
            })
            .sum::<f64>();
        (ss / (nf - 1.0)).sqrt()
    }
}

/// Per-coordinate bandwidths: `h` for discrete, `b` for continuous columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BandwidthsDoc", into = "BandwidthsDoc")]
pub struct Bandwidths {
    h: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BandwidthsDoc {
    h: Vec<f64>,
    b: Vec<f64>,
}

impl TryFrom<BandwidthsDoc> for Bandwidths {
    type Error = Error;

    fn try_from(doc: BandwidthsDoc) -> Result<Self> {
        Bandwidths::new(doc.h, doc.b)
    }
}

impl From<Bandwidths> for BandwidthsDoc {
    fn from(bw: Bandwidths) -> Self {
        BandwidthsDoc { h: bw.h, b: bw.b }
    }
}

impl Bandwidths {
    pub fn new(h: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        for &v in h.iter().chain(b.iter()) {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidBandwidth(format!(
                    "bandwidths must be finite and positive, got {v}"
                )));
            }
        }
        Ok(Bandwidths { h, b })
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }
}

/// Evaluation lattice: one axis of integers per discrete coordinate, one
/// axis of reals per continuous coordinate. Nodes enumerate the Cartesian
/// product in row-major order (last axis fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    z_axes: Vec<Vec<i64>>,
    x_axes: Vec<Vec<f64>>,
}

impl GridSpec {
    pub fn new(z_axes: Vec<Vec<i64>>, x_axes: Vec<Vec<f64>>) -> Result<Self> {
        if z_axes.iter().any(|a| a.is_empty()) || x_axes.iter().any(|a| a.is_empty()) {
            return Err(Error::EmptyGrid);
        }
        if z_axes.is_empty() && x_axes.is_empty() {
            return Err(Error::EmptyGrid);
        }
        Ok(GridSpec { z_axes, x_axes })
    }

    /// Standard evaluation grid for simulation studies: each discrete axis
    /// is 0..=m, each continuous axis runs -2 to 2 in steps of 0.4.
    pub fn simulation_grid(p: usize, q: usize, m: i64) -> Result<Self> {
        let z_axis: Vec<i64> = (0..=m).collect();
        let x_axis: Vec<f64> = (0..=10).map(|i| (2 * i - 10) as f64 / 5.0).collect();
        GridSpec::new(vec![z_axis; p], vec![x_axis; q])
    }

    pub fn z_axes(&self) -> &[Vec<i64>] {
        &self.z_axes
    }

    pub fn x_axes(&self) -> &[Vec<f64>] {
        &self.x_axes
    }

    pub fn node_count(&self) -> usize {
        self.z_axes
            .iter()
            .map(Vec::len)
            .chain(self.x_axes.iter().map(Vec::len))
            .product()
    }

    /// Calls `f` once per node in row-major order.
    pub fn for_each_node<F: FnMut(&[i64], &[f64])>(&self, mut f: F) {
        let p = self.z_axes.len();
        let q = self.x_axes.len();
        let dims: Vec<usize> = self
            .z_axes
            .iter()
            .map(Vec::len)
            .chain(self.x_axes.iter().map(Vec::len))
            .collect();
        let mut idx = vec![0usize; p + q];
        let mut z_buf = vec![0i64; p];
        let mut x_buf = vec![0f64; q];
        loop {
            for k in 0..p {
                z_buf[k] = self.z_axes[k][idx[k]];
            }
            for j in 0..q {
                x_buf[j] = self.x_axes[j][idx[p + j]];
            }
            f(&z_buf, &x_buf);
            // Odometer increment, last axis fastest.
            let mut axis = p + q;
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < dims[axis] {
                    break;
                }
                idx[axis] = 0;
            }
        }
    }
}

/// Draws the n-by-p jitter matrix for a dataset. Only the dataset's shape
/// matters; values are independent draws from the noise density.
pub fn jitter_matrix(data: &MixedDataset, noise: &NoiseSpec, stream: &mut RngStream) -> Vec<f64> {
    noise.sample(stream, data.n() * data.p())
}

/// A fitted jittered-KDE model: the data, one fixed jitter draw, and the
/// smoothing configuration. Evaluation is deterministic given the model.
#[derive(Clone, Debug)]
pub struct JkdeModel {
    data: MixedDataset,
    jitter: Vec<f64>,
    jittered: Vec<f64>,
    kernel: KernelSpec,
    noise: NoiseSpec,
    bandwidths: Bandwidths,
    seed: u64,
}

impl JkdeModel {
    /// Fits by drawing the jitter from a stream derived from `seed`.
    /// Refitting with the same inputs reproduces the model exactly.
    pub fn fit(
        data: MixedDataset,
        kernel: KernelSpec,
        noise: NoiseSpec,
        bandwidths: Bandwidths,
        seed: u64,
    ) -> Result<Self> {
        let mut stream = RngStream::derive(seed, &[rng::DOMAIN_FIT_JITTER]);
        let jitter = jitter_matrix(&data, &noise, &mut stream);
        JkdeModel::from_parts(data, jitter, kernel, noise, bandwidths, seed)
    }

    /// Assembles a model from an existing jitter matrix (e.g. one loaded
    /// from disk). The jitter must have shape n-by-p and lie strictly
    /// inside the noise support.
    pub fn from_parts(
        data: MixedDataset,
        jitter: Vec<f64>,
        kernel: KernelSpec,
        noise: NoiseSpec,
        bandwidths: Bandwidths,
        seed: u64,
    ) -> Result<Self> {
        if bandwidths.h().len() != data.p() || bandwidths.b().len() != data.q() {
            return Err(Error::DimensionMismatch(format!(
                "bandwidths ({}, {}) do not match data dimensions ({}, {})",
                bandwidths.h().len(),
                bandwidths.b().len(),
                data.p(),
                data.q()
            )));
        }
        if jitter.len() != data.n() * data.p() {
            return Err(Error::DimensionMismatch(format!(
                "jitter has {} entries, expected {}",
                jitter.len(),
                data.n() * data.p()
            )));
        }
        let g2 = noise.gamma2();
        if jitter.iter().any(|e| !e.is_finite() || e.abs() >= g2) {
            return Err(Error::InvalidNoise(
                "jitter entries must lie strictly inside the noise support".into(),
            ));
        }
        let p = data.p();
        let jittered: Vec<f64> = (0..data.n() * p)
            .map(|idx| data.z[idx] as f64 + jitter[idx])
            .collect();
        Ok(JkdeModel {
            data,
            jitter,
            jittered,
            kernel,
            noise,
            bandwidths,
            seed,
        })
    }

    pub fn data(&self) -> &MixedDataset {
        &self.data
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn noise(&self) -> NoiseSpec {
        self.noise
    }

    pub fn bandwidths(&self) -> &Bandwidths {
        &self.bandwidths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The jitter draw, row-major n-by-p.
    pub fn jitter(&self) -> &[f64] {
        &self.jitter
    }

    /// Jittered discrete coordinates of observation `i`.
    pub fn jittered_row(&self, i: usize) -> &[f64] {
        let p = self.data.p();
        &self.jittered[i * p..(i + 1) * p]
    }

    /// Density estimate at a mixed point.
    pub fn evaluate(&self, z: &[i64], x: &[f64]) -> Result<f64> {
        if z.len() != self.data.p() || x.len() != self.data.q() {
            return Err(Error::DimensionMismatch(format!(
                "point ({}, {}) does not match data dimensions ({}, {})",
                z.len(),
                x.len(),
                self.data.p(),
                self.data.q()
            )));
        }
        let u: Vec<f64> = z.iter().map(|&v| v as f64).collect();
        Ok(self.density_at(&u, x))
    }

    /// Density estimate with real-valued discrete coordinates. This is the
    /// underlying kernel density estimate on the jittered sample; leave-one-
    /// out cross-validation evaluates it at the jittered observations.
    pub fn evaluate_at_real(&self, u: &[f64], x: &[f64]) -> Result<f64> {
        if u.len() != self.data.p() || x.len() != self.data.q() {
            return Err(Error::DimensionMismatch(format!(
                "point ({}, {}) does not match data dimensions ({}, {})",
                u.len(),
                x.len(),
                self.data.p(),
                self.data.q()
            )));
        }
        Ok(self.density_at(u, x))
    }

    /// Density estimates over all grid nodes in row-major order.
    pub fn evaluate_grid(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        if grid.z_axes().len() != self.data.p() || grid.x_axes().len() != self.data.q() {
            return Err(Error::DimensionMismatch(format!(
                "grid axes ({}, {}) do not match data dimensions ({}, {})",
                grid.z_axes().len(),
                grid.x_axes().len(),
                self.data.p(),
                self.data.q()
            )));
        }
        let mut out = Vec::with_capacity(grid.node_count());
        let mut u = vec![0f64; self.data.p()];
        grid.for_each_node(|z, x| {
            for (uk, &zk) in u.iter_mut().zip(z) {
                *uk = zk as f64;
            }
            out.push(self.density_at(&u, x));
        });
        Ok(out)
    }

    fn density_at(&self, u: &[f64], x: &[f64]) -> f64 {
        let n = self.data.n();
        let p = self.data.p();
        let q = self.data.q();
        let h = self.bandwidths.h();
        let b = self.bandwidths.b();
        let mut sum = 0.0;
        for i in 0..n {
            let mut w = 1.0;
            let zi = &self.jittered[i * p..i * p + p];
            for k in 0..p {
                w *= self.kernel.eval((zi[k] - u[k]) / h[k]);
                if w == 0.0 {
                    break;
                }
            }
            if w == 0.0 {
                continue;
            }
            let xi = self.data.x_row(i);
            for j in 0..q {
                w *= self.kernel.eval((xi[j] - x[j]) / b[j]);
                if w == 0.0 {
                    break;
                }
            }
            sum += w;
        }
        let denom =
            n as f64 * h.iter().product::<f64>() * b.iter().product::<f64>();
        sum / denom
    }
}

/// Relative frequency of the discrete point `z` in a purely discrete
/// dataset. Errors when the dataset has continuous columns.
pub fn sample_frequency(data: &MixedDataset, z: &[i64]) -> Result<f64> {
    if data.q() != 0 {
        return Err(Error::RequiresDiscreteOnly);
    }
    if z.len() != data.p() {
        return Err(Error::DimensionMismatch(format!(
            "point has {} coordinates, data has {}",
            z.len(),
            data.p()
        )));
    }
    let count = (0..data.n()).filter(|&i| data.z_row(i) == z).count();
    Ok(count as f64 / data.n() as f64)
}

/// Ordered-category kernel estimator used as a baseline: each discrete
/// coordinate is smoothed with the geometric weight lambda^|Z - z|,
/// normalized over the observed category range, and continuous coordinates
/// use the same product kernel as the jittered estimator. lambda = 0
/// degenerates to the sample frequency, lambda = 1 to a uniform weight.
pub fn li_racine_eval(
    data: &MixedDataset,
    z: &[i64],
    x: &[f64],
    lambdas: &[f64],
    b: &[f64],
    kernel: KernelSpec,
) -> Result<f64> {
    if z.len() != data.p() || x.len() != data.q() || lambdas.len() != data.p() {
        return Err(Error::DimensionMismatch(
            "point or smoothing dimensions do not match the data".into(),
        ));
    }
    if b.len() != data.q() {
        return Err(Error::DimensionMismatch(
            "continuous bandwidth count does not match the data".into(),
        ));
    }
    for &l in lambdas {
        if !(0.0..=1.0).contains(&l) {
            return Err(Error::InvalidSmoothing(format!(
                "lambda must lie in [0, 1], got {l}"
            )));
        }
    }
    for &v in b {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidBandwidth(format!(
                "bandwidths must be finite and positive, got {v}"
            )));
        }
    }
    let p = data.p();
    let q = data.q();
    let ranges: Vec<(i64, i64)> = (0..p).map(|k| data.z_column_range(k)).collect();
    let mut sum = 0.0;
    for i in 0..data.n() {
        let zi = data.z_row(i);
        let mut w = 1.0;
        for k in 0..p {
            let lam = lambdas[k];
            let (lo, hi) = ranges[k];
            let mut norm = 0.0;
            for c in lo..=hi {
                norm += lam.powi((zi[k] - c).abs() as i32);
            }
            w *= lam.powi((zi[k] - z[k]).abs() as i32) / norm;
            if w == 0.0 {
                break;
            }
        }
        if w == 0.0 {
            continue;
        }
        let xi = data.x_row(i);
        for j in 0..q {
            w *= kernel.eval((xi[j] - x[j]) / b[j]);
            if w == 0.0 {
                break;
            }
        }
        sum += w;
    }
    Ok(sum / (data.n() as f64 * b.iter().product::<f64>()))
}

/// Root of the summed squared errors between two same-shape value vectors.
pub fn rase(estimates: &[f64], truth: &[f64]) -> Result<f64> {
    if estimates.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "value vectors have lengths {} and {}",
            estimates.len(),
            truth.len()
        )));
    }
    Ok(estimates
        .iter()
        .zip(truth)
        .map(|(e, t)| (e - t) * (e - t))
        .sum::<f64>()
        .sqrt())
}
