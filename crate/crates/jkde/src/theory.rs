//! Closed-form accuracy theory for the jittered estimator.
//!
//! Leading-order bias and variance of the estimator, the efficiency ratio
//! against the sample frequency, and three routes to the exact discrete-
//! direction bias at a finite bandwidth: a closed form for uniform noise, a
//! cell-weight expansion valid for any noise in the class, and a direct
//! quadrature of the estimator's expectation that serves as the ground
//! truth for the other two.

use crate::kernels::KernelSpec;
use crate::noise::NoiseSpec;
use crate::quad::{adaptive_simpson, integrate_gl, integrate_panels, panel_knots};
use crate::{Error, Result};

/// A probability mass function on a contiguous block of integers.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretePmf {
    z_min: i64,
    probs: Vec<f64>,
}

impl DiscretePmf {
    /// Probabilities for z_min, z_min + 1, ...; must be nonnegative and sum
    /// to one within 1e-12.
    pub fn new(z_min: i64, probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("no probabilities given".into()));
        }
        if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::InvalidPmf(
                "probabilities must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPmf(format!("probabilities sum to {total}")));
        }
        Ok(DiscretePmf { z_min, probs })
    }

    /// Binomial(m, theta) restricted to its support 0..=m.
    pub fn binomial(m: i64, theta: f64) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidArgument(format!(
                "binomial needs m >= 1, got {m}"
            )));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "binomial needs theta in (0, 1), got {theta}"
            )));
        }
        let mut probs = Vec::with_capacity(m as usize + 1);
        let mut pk = (1.0 - theta).powi(m as i32);
        let ratio = theta / (1.0 - theta);
        for k in 0..=m {
            probs.push(pk);
            pk *= ratio * (m - k) as f64 / (k + 1) as f64;
        }
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        DiscretePmf::new(0, probs)
    }

    /// Probability of `z`; zero off the support block.
    pub fn prob(&self, z: i64) -> f64 {
        if z < self.z_min {
            return 0.0;
        }
        let idx = (z - self.z_min) as usize;
        self.probs.get(idx).copied().unwrap_or(0.0)
    }

    /// Inclusive support bounds.
    pub fn support(&self) -> (i64, i64) {
        (self.z_min, self.z_min + self.probs.len() as i64 - 1)
    }
}

/// Local information about the target density at one mixed point: its value
/// and the order-ell partial derivative along each continuous coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoryPoint {
    f_value: f64,
    ell_partials: Vec<f64>,
}

impl TheoryPoint {
    pub fn new(f_value: f64, ell_partials: Vec<f64>) -> Result<Self> {
        if !f_value.is_finite() || f_value < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "density value must be finite and nonnegative, got {f_value}"
            )));
        }
        if ell_partials.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidArgument(
                "derivatives must be finite".into(),
            ));
        }
        Ok(TheoryPoint {
            f_value,
            ell_partials,
        })
    }

    pub fn f_value(&self) -> f64 {
        self.f_value
    }

    pub fn ell_partials(&self) -> &[f64] {
        &self.ell_partials
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Leading-order bias with a common continuous bandwidth `b`:
/// b^ell sigma_ell / ell! times the sum of order-ell partials. The discrete
/// direction contributes no bias at or below the noise plateau bandwidth.
pub fn leading_bias(point: &TheoryPoint, b: f64, kernel: KernelSpec) -> f64 {
    debug_assert!(b > 0.0);
    let ell = kernel.order();
    b.powi(ell as i32) * kernel.sigma_ell() / factorial(ell)
        * point.ell_partials().iter().sum::<f64>()
}

/// Leading-order variance at a mixed point for per-coordinate bandwidths.
pub fn pointwise_variance(f_value: f64, n: usize, h: &[f64], b: &[f64], kernel: KernelSpec) -> f64 {
    debug_assert!(n >= 1);
    let d = (h.len() + b.len()) as i32;
    let kappa = kernel.roughness().powi(d);
    let hprod: f64 = h.iter().product();
    let bprod: f64 = b.iter().product();
    f_value / (n as f64 * bprod) * (kappa / hprod - bprod * f_value)
}

/// Leading-order mean squared error: squared bias plus variance, with
/// per-coordinate continuous bandwidths weighting their own partials.
pub fn amse(point: &TheoryPoint, n: usize, h: &[f64], b: &[f64], kernel: KernelSpec) -> f64 {
    debug_assert_eq!(point.ell_partials().len(), b.len());
    let ell = kernel.order();
    let scale = kernel.sigma_ell() / factorial(ell);
    let bias: f64 = point
        .ell_partials()
        .iter()
        .zip(b)
        .map(|(d, bj)| scale * bj.powi(ell as i32) * d)
        .sum();
    bias * bias + pointwise_variance(point.f_value(), n, h, b, kernel)
}

/// Asymptotic efficiency of the sample frequency relative to the jittered
/// estimator at a discrete point with probability `f_value`, when the
/// discrete bandwidth sits at the noise plateau limit. Always at most one;
/// equals zero at f_value = 1 where the frequency has no variance.
pub fn are(f_value: f64, noise: &NoiseSpec, kernel: KernelSpec) -> Result<f64> {
    if !f_value.is_finite() || !(0.0..=1.0).contains(&f_value) {
        return Err(Error::InvalidProbability(f_value));
    }
    if f_value == 1.0 {
        return Ok(0.0);
    }
    let limit = noise.plateau_bandwidth();
    Ok((1.0 - f_value) / (kernel.roughness() / limit - f_value))
}

/// Scaled second difference (f(z+k) - 2 f(z) + f(z-k)) / k^2.
pub fn central_difference(pmf: &DiscretePmf, z: i64, k: i64) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidArgument(format!(
            "difference step must be at least 1, got {k}"
        )));
    }
    let kf = k as f64;
    Ok((pmf.prob(z + k) - 2.0 * pmf.prob(z) + pmf.prob(z - k)) / (kf * kf))
}

/// Mean weight the estimator puts on the cell at real offset `d` from the
/// evaluation point: the integral of K(t) eta(h t - d) over [-1, 1].
fn mean_weight(kernel: KernelSpec, noise: &NoiseSpec, h: f64, d: f64) -> f64 {
    let g2 = noise.gamma2();
    let lo = ((d - g2) / h).max(-1.0);
    let hi = ((d + g2) / h).min(1.0);
    if lo >= hi {
        return 0.0;
    }
    let g1 = noise.gamma1();
    let interior = [(d - g1) / h, (d + g1) / h];
    let knots = panel_knots(lo, hi, &interior);
    integrate_panels(|t| kernel.eval(t) * noise.pdf(h * t - d), &knots)
}

/// Mean weight on the integer cell at offset `k`; the weights over all
/// offsets sum to one for any bandwidth.
pub fn cell_weight(kernel: KernelSpec, noise: &NoiseSpec, h: f64, k: i64) -> f64 {
    debug_assert!(h > 0.0);
    mean_weight(kernel, noise, h, k as f64)
}

/// Pointwise expectation of the jittered estimate at a real coordinate `u`
/// for a one-dimensional discrete law. Constant in `u` on a neighborhood of
/// each integer when `h` is at most the plateau bandwidth.
pub fn expected_density(
    pmf: &DiscretePmf,
    noise: &NoiseSpec,
    kernel: KernelSpec,
    h: f64,
    u: f64,
) -> f64 {
    debug_assert!(h > 0.0);
    let (lo, hi) = pmf.support();
    (lo..=hi)
        .map(|z| pmf.prob(z) * mean_weight(kernel, noise, h, z as f64 - u))
        .sum()
}

/// Exact discrete-direction bias at bandwidth `h` for uniform noise and a
/// symmetric kernel, as a weighted sum of scaled second differences. The
/// weight of step k is k^2 times the kernel mass on the k-th unit window.
pub fn bias_second_differences(pmf: &DiscretePmf, z: i64, h: f64, kernel: KernelSpec) -> f64 {
    debug_assert!(h > 0.0);
    let k_max = ((h + 0.5).ceil() as i64 - 1).max(0);
    let mut bias = 0.0;
    for k in 1..=k_max {
        let lo = ((k as f64 - 0.5) / h).max(-1.0);
        let hi = ((k as f64 + 0.5) / h).min(1.0);
        if lo >= hi {
            continue;
        }
        let rho = (k * k) as f64 * integrate_gl(|t| kernel.eval(t), lo, hi);
        bias += rho * central_difference(pmf, z, k).expect("k >= 1");
    }
    bias
}

/// Exact discrete-direction bias at bandwidth `h` for any noise in the
/// class, grouped by step size. Forward and backward cell weights are kept
/// separate, so asymmetric noise densities would be handled correctly.
pub fn bias_cell_weights(
    pmf: &DiscretePmf,
    z: i64,
    h: f64,
    kernel: KernelSpec,
    noise: &NoiseSpec,
) -> f64 {
    debug_assert!(h > 0.0);
    let k_max = ((h + noise.gamma2()).ceil() as i64 - 1).max(0);
    let mut bias = 0.0;
    for k in 1..=k_max {
        let k2 = (k * k) as f64;
        let rho_fwd = k2 * cell_weight(kernel, noise, h, k);
        let rho_bwd = k2 * cell_weight(kernel, noise, h, -k);
        bias += (rho_fwd * pmf.prob(z + k) - (rho_fwd + rho_bwd) * pmf.prob(z)
            + rho_bwd * pmf.prob(z - k))
            / k2;
    }
    bias
}

/// Ground-truth discrete-direction bias: the estimator's expectation at `z`
/// computed by adaptive quadrature of E K((Z + E - z)/h)/h, minus f(z).
/// Independent of the cell-weight route; used to check the closed forms.
pub fn bias_oracle_quadrature(
    pmf: &DiscretePmf,
    z: i64,
    h: f64,
    kernel: KernelSpec,
    noise: &NoiseSpec,
) -> f64 {
    debug_assert!(h > 0.0);
    let (lo, hi) = pmf.support();
    let g1 = noise.gamma1();
    let g2 = noise.gamma2();
    let mut mean = 0.0;
    for zp in lo..=hi {
        let delta = (z - zp) as f64;
        // Kink locations of the noise density, mapped into kernel argument.
        let kinks = [
            (-g2 - delta) / h,
            (-g1 - delta) / h,
            (g1 - delta) / h,
            (g2 - delta) / h,
        ];
        let pieces = panel_knots(-1.0, 1.0, &kinks);
        let mut integral = 0.0;
        for w in pieces.windows(2) {
            integral += adaptive_simpson(
                |t| kernel.eval(t) * noise.pdf(h * t + delta),
                w[0],
                w[1],
                1e-13,
            );
        }
        mean += pmf.prob(zp) * integral;
    }
    mean - pmf.prob(z)
}
