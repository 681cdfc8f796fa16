//! Jittering noise densities.
//!
//! A valid noise density equals one on the plateau [-gamma1, gamma1],
//! vanishes outside (-gamma2, gamma2), and is absolutely continuous, with
//! 0 < gamma1 <= 1/2 <= gamma2 < 1. Two shapes are built in: the uniform
//! density on [-1/2, 1/2] and a trapezoid with a linear shoulder on each
//! side of the plateau. Unit mass forces gamma1 + gamma2 = 1 for the
//! trapezoid, so it is effectively a one-parameter family.

use crate::quad::{integrate_panels, panel_knots};
use crate::rng::RngStream;
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Shape of the noise density.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseShape {
    Uniform,
    Trapezoid,
}

impl fmt::Display for NoiseShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseShape::Uniform => f.write_str("uniform"),
            NoiseShape::Trapezoid => f.write_str("trapezoid"),
        }
    }
}

impl FromStr for NoiseShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(NoiseShape::Uniform),
            "trapezoid" => Ok(NoiseShape::Trapezoid),
            other => Err(Error::InvalidNoise(format!("unknown shape `{other}`"))),
        }
    }
}

/// A validated noise density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NoiseSpecDoc", into = "NoiseSpecDoc")]
pub struct NoiseSpec {
    shape: NoiseShape,
    gamma1: f64,
    gamma2: f64,
}

#[derive(Serialize, Deserialize)]
struct NoiseSpecDoc {
    shape: NoiseShape,
    gamma1: f64,
    gamma2: f64,
}

impl TryFrom<NoiseSpecDoc> for NoiseSpec {
    type Error = Error;

    fn try_from(doc: NoiseSpecDoc) -> Result<Self> {
        NoiseSpec::new(doc.shape, doc.gamma1, doc.gamma2)
    }
}

impl From<NoiseSpec> for NoiseSpecDoc {
    fn from(spec: NoiseSpec) -> Self {
        NoiseSpecDoc {
            shape: spec.shape,
            gamma1: spec.gamma1,
            gamma2: spec.gamma2,
        }
    }
}

const MASS_TOL: f64 = 1e-12;

impl NoiseSpec {
    /// Uniform noise on [-1/2, 1/2].
    pub fn uniform() -> Self {
        NoiseSpec {
            shape: NoiseShape::Uniform,
            gamma1: 0.5,
            gamma2: 0.5,
        }
    }

    /// Trapezoid noise: plateau on [-gamma1, gamma1], linear shoulders
    /// reaching zero at +-gamma2. Requires gamma1 + gamma2 = 1 so the
    /// density has unit mass.
    pub fn trapezoid(gamma1: f64, gamma2: f64) -> Result<Self> {
        NoiseSpec::new(NoiseShape::Trapezoid, gamma1, gamma2)
    }

    /// General constructor; rejects parameters outside the noise class.
    pub fn new(shape: NoiseShape, gamma1: f64, gamma2: f64) -> Result<Self> {
        if !gamma1.is_finite() || !gamma2.is_finite() {
            return Err(Error::InvalidNoise("parameters must be finite".into()));
        }
        if !(gamma1 > 0.0 && gamma1 <= 0.5 && gamma2 >= 0.5 && gamma2 < 1.0) {
            return Err(Error::InvalidNoise(format!(
                "need 0 < gamma1 <= 1/2 <= gamma2 < 1, got ({gamma1}, {gamma2})"
            )));
        }
        match shape {
            NoiseShape::Uniform => {
                if gamma1 != 0.5 || gamma2 != 0.5 {
                    return Err(Error::InvalidNoise(format!(
                        "uniform shape requires gamma1 = gamma2 = 1/2, got ({gamma1}, {gamma2})"
                    )));
                }
            }
            NoiseShape::Trapezoid => {
                if (gamma1 + gamma2 - 1.0).abs() > MASS_TOL {
                    return Err(Error::InvalidNoise(format!(
                        "trapezoid mass is gamma1 + gamma2 = {}, must be 1",
                        gamma1 + gamma2
                    )));
                }
            }
        }
        Ok(NoiseSpec {
            shape,
            gamma1,
            gamma2,
        })
    }

    pub fn shape(&self) -> NoiseShape {
        self.shape
    }

    /// Plateau half-width.
    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    /// Support half-width.
    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    /// Largest discrete-direction bandwidth for which all kernel mass stays
    /// inside the unit cell around each integer: min(gamma1, 1 - gamma2).
    /// At or below this value the estimator has zero discrete-direction bias.
    pub fn plateau_bandwidth(&self) -> f64 {
        self.gamma1.min(1.0 - self.gamma2)
    }

    /// Density at `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        raw_pdf(self.shape, self.gamma1, self.gamma2, x)
    }

    /// Distribution function at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let (g1, g2) = (self.gamma1, self.gamma2);
        let s = g2 - g1;
        if x <= -g2 {
            0.0
        } else if x >= g2 {
            1.0
        } else if x < -g1 {
            let d = x + g2;
            d * d / (2.0 * s)
        } else if x <= g1 {
            0.5 * s + (x + g1)
        } else {
            let d = g2 - x;
            1.0 - d * d / (2.0 * s)
        }
    }

    /// Quantile function; inverse of `cdf` on the support.
    pub fn inverse_cdf(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::InvalidProbability(u));
        }
        let (g1, g2) = (self.gamma1, self.gamma2);
        let s = g2 - g1;
        let shoulder = 0.5 * s;
        Ok(if u < shoulder {
            -g2 + (2.0 * s * u).sqrt()
        } else if u <= shoulder + 2.0 * g1 {
            -g1 + (u - shoulder)
        } else {
            g2 - (2.0 * s * (1.0 - u)).sqrt()
        })
    }

    /// Draws `count` values. Every draw lies strictly inside
    /// (-gamma2, gamma2); the support boundary has probability zero and is
    /// excluded so that exact-support arguments hold for every sample.
    pub fn sample(&self, stream: &mut RngStream, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let mut u: f64 = stream.random();
            while u == 0.0 {
                u = stream.random();
            }
            out.push(self.inverse_cdf(u).expect("u in (0, 1)"));
        }
        out
    }

    /// Numeric membership report for this spec's parameters.
    pub fn validate_class(&self) -> ValidationReport {
        validate_noise_class(self.shape, self.gamma1, self.gamma2)
    }
}

fn raw_pdf(shape: NoiseShape, gamma1: f64, gamma2: f64, x: f64) -> f64 {
    let a = x.abs();
    match shape {
        NoiseShape::Uniform => {
            if a <= gamma1 {
                1.0
            } else {
                0.0
            }
        }
        NoiseShape::Trapezoid => {
            if a <= gamma1 {
                1.0
            } else if a >= gamma2 {
                0.0
            } else {
                (gamma2 - a) / (gamma2 - gamma1)
            }
        }
    }
}

/// One numeric membership check.
#[derive(Clone, Debug)]
pub struct ClassCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed violation; zero (up to tolerance) when the check passes.
    pub residual: f64,
}

/// Outcome of the noise-class membership checks.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub checks: Vec<ClassCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Checks raw parameters against the noise-class definition: parameter
/// ranges, unit density on the plateau, zero density outside the support,
/// and unit mass. Works on unvalidated parameters so that out-of-class
/// candidates produce a report instead of a construction error.
pub fn validate_noise_class(shape: NoiseShape, gamma1: f64, gamma2: f64) -> ValidationReport {
    let mut checks = Vec::with_capacity(4);

    let finite = gamma1.is_finite() && gamma2.is_finite();
    let range_ok = finite && gamma1 > 0.0 && gamma1 <= 0.5 && gamma2 >= 0.5 && gamma2 < 1.0;
    let range_residual = if range_ok || !finite {
        f64::from(u8::from(!range_ok))
    } else {
        let mut r: f64 = 0.0;
        r = r.max(-gamma1).max(gamma1 - 0.5);
        r = r.max(0.5 - gamma2).max(gamma2 - 1.0);
        r.max(0.0)
    };
    checks.push(ClassCheck {
        name: "parameters",
        passed: range_ok,
        residual: range_residual,
    });

    if !finite {
        checks.push(ClassCheck {
            name: "plateau",
            passed: false,
            residual: f64::NAN,
        });
        checks.push(ClassCheck {
            name: "support",
            passed: false,
            residual: f64::NAN,
        });
        checks.push(ClassCheck {
            name: "mass",
            passed: false,
            residual: f64::NAN,
        });
        return ValidationReport { checks };
    }

    const GRID: usize = 1000;
    let mut plateau_residual: f64 = 0.0;
    for i in 0..=GRID {
        let x = -gamma1 + 2.0 * gamma1 * (i as f64) / (GRID as f64);
        plateau_residual = plateau_residual.max((raw_pdf(shape, gamma1, gamma2, x) - 1.0).abs());
    }
    checks.push(ClassCheck {
        name: "plateau",
        passed: plateau_residual <= MASS_TOL,
        residual: plateau_residual,
    });

    // Strictly outside the support; the boundary itself is a convention.
    let mut support_residual: f64 = 0.0;
    for i in 1..=GRID {
        let x = gamma2 + (i as f64) / (GRID as f64);
        support_residual = support_residual
            .max(raw_pdf(shape, gamma1, gamma2, x))
            .max(raw_pdf(shape, gamma1, gamma2, -x));
    }
    checks.push(ClassCheck {
        name: "support",
        passed: support_residual <= MASS_TOL,
        residual: support_residual,
    });

    let hi = gamma1.abs().max(gamma2.abs()) + 0.5;
    let knots = panel_knots(-hi, hi, &[-gamma2, -gamma1, gamma1, gamma2]);
    let mass = integrate_panels(|x| raw_pdf(shape, gamma1, gamma2, x), &knots);
    let mass_residual = (mass - 1.0).abs();
    checks.push(ClassCheck {
        name: "mass",
        passed: mass_residual <= MASS_TOL,
        residual: mass_residual,
    });

    ValidationReport { checks }
}
