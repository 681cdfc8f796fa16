//! Compactly supported smoothing kernels on [-1, 1].
//!
//! All built-in kernels are symmetric second-order densities: they integrate
//! to one, their first moment vanishes, and their second moment is positive.
//! Moments and roughness are closed forms; the unit tests check them against
//! quadrature.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Kernel family, each a density supported on [-1, 1].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    /// K(t) = 1/2.
    Uniform,
    /// K(t) = 3/4 (1 - t^2).
    Epanechnikov,
    /// K(t) = 15/16 (1 - t^2)^2.
    Biweight,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            KernelFamily::Uniform => "uniform",
            KernelFamily::Epanechnikov => "epanechnikov",
            KernelFamily::Biweight => "biweight",
        };
        f.write_str(name)
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(KernelFamily::Uniform),
            "epanechnikov" => Ok(KernelFamily::Epanechnikov),
            "biweight" => Ok(KernelFamily::Biweight),
            other => Err(Error::InvalidKernel(format!("unknown family `{other}`"))),
        }
    }
}

/// A kernel family together with its moment order.
///
/// The order is the smallest k >= 2 with nonvanishing k-th moment. Every
/// built-in family has order 2; the field exists so that rate experiments
/// can be extended with higher-order kernels without changing signatures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "KernelSpecDoc", into = "KernelSpecDoc")]
pub struct KernelSpec {
    family: KernelFamily,
    order: u32,
}

#[derive(Serialize, Deserialize)]
struct KernelSpecDoc {
    family: KernelFamily,
    order: u32,
}

impl TryFrom<KernelSpecDoc> for KernelSpec {
    type Error = Error;

    fn try_from(doc: KernelSpecDoc) -> Result<Self> {
        let spec = KernelSpec::new(doc.family);
        if doc.order != spec.order {
            return Err(Error::InvalidKernel(format!(
                "family `{}` has order {}, document says {}",
                doc.family, spec.order, doc.order
            )));
        }
        Ok(spec)
    }
}

impl From<KernelSpec> for KernelSpecDoc {
    fn from(spec: KernelSpec) -> Self {
        KernelSpecDoc {
            family: spec.family,
            order: spec.order,
        }
    }
}

impl KernelSpec {
    pub fn new(family: KernelFamily) -> Self {
        KernelSpec { family, order: 2 }
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    /// Moment order of the family (2 for all built-ins).
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Kernel value at `t`; zero outside [-1, 1].
    pub fn eval(&self, t: f64) -> f64 {
        if t.abs() > 1.0 {
            return 0.0;
        }
        match self.family {
            KernelFamily::Uniform => 0.5,
            KernelFamily::Epanechnikov => 0.75 * (1.0 - t * t),
            KernelFamily::Biweight => {
                let s = 1.0 - t * t;
                0.9375 * s * s
            }
        }
    }

    /// Product of one-dimensional evaluations, the multivariate kernel.
    pub fn product(&self, ts: &[f64]) -> f64 {
        let mut w = 1.0;
        for &t in ts {
            w *= self.eval(t);
            if w == 0.0 {
                break;
            }
        }
        w
    }

    /// k-th moment: integral of t^k K(t) over [-1, 1]. Closed form.
    pub fn moment(&self, k: u32) -> f64 {
        if k % 2 == 1 {
            return 0.0;
        }
        let kf = f64::from(k);
        match self.family {
            KernelFamily::Uniform => 1.0 / (kf + 1.0),
            KernelFamily::Epanechnikov => 3.0 / ((kf + 1.0) * (kf + 3.0)),
            KernelFamily::Biweight => {
                1.875 * (1.0 / (kf + 1.0) - 2.0 / (kf + 3.0) + 1.0 / (kf + 5.0))
            }
        }
    }

    /// Moment at the kernel's own order, the constant entering bias formulas.
    pub fn sigma_ell(&self) -> f64 {
        self.moment(self.order)
    }

    /// Integral of K^2 over [-1, 1], the constant entering variance formulas.
    pub fn roughness(&self) -> f64 {
        match self.family {
            KernelFamily::Uniform => 0.5,
            KernelFamily::Epanechnikov => 0.6,
            KernelFamily::Biweight => 5.0 / 7.0,
        }
    }
}

/// All built-in families, handy for iterating in tests and experiments.
pub const ALL_FAMILIES: [KernelFamily; 3] = [
    KernelFamily::Uniform,
    KernelFamily::Epanechnikov,
    KernelFamily::Biweight,
];
