use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Relu,
    Abs,
    Identity,
    Secondary,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Relu, Variant::Abs, Variant::Identity, Variant::Secondary];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Relu => "relu",
            Variant::Abs => "abs",
            Variant::Identity => "identity",
            Variant::Secondary => "secondary",
        }
    }

    /// Whether `h(φ + π) = h(φ)` for every parameter choice.
    pub fn is_pi_periodic(self) -> bool {
        matches!(self, Variant::Abs)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::UnknownVariant(s.to_string()))
    }
}

/// The function of the input phase φ that one cluster integrates.
///
/// `s = k(a+b)/2`, `t = kc` and `u = k(a−b)/2`, all in radians
/// (frequency k means angular frequency 2πk/p).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrandSpec {
    pub variant: Variant,
    pub s: f64,
    pub t: f64,
    pub u: f64,
    pub sigma: f64,
}

/// `sign(cos u)`, with +1 at zero.
pub fn sigma_of(u: f64) -> f64 {
    if u.cos() >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

impl IntegrandSpec {
    pub fn new(variant: Variant, s: f64, t: f64, u: f64) -> Self {
        IntegrandSpec {
            variant,
            s,
            t,
            u,
            sigma: sigma_of(u),
        }
    }

    pub fn from_tokens(variant: Variant, k: usize, p: usize, a: usize, b: usize, c: usize) -> Self {
        let w = 2.0 * PI * k as f64 / p as f64;
        let (a, b, c) = (a as f64, b as f64, c as f64);
        Self::new(variant, w * (a + b) / 2.0, w * c, w * (a - b) / 2.0)
    }

    /// `h(φ)`.
    pub fn eval(&self, phi: f64) -> f64 {
        self.eval_with_output_phase(phi, 2.0 * phi)
    }

    /// `h` with the output phase `2φ` replaced by an arbitrary `psi`.
    pub fn eval_with_output_phase(&self, phi: f64, psi: f64) -> f64 {
        let out = (self.t + psi).cos();
        let x = (self.s + phi).cos();
        match self.variant {
            Variant::Relu => (self.sigma * x).max(0.0) * out,
            Variant::Abs => 0.5 * x.abs() * out,
            Variant::Identity => 0.5 * self.sigma * x * out,
            Variant::Secondary => {
                let y = -(2.0 * self.u).cos() * (2.0 * self.s + 2.0 * phi).cos();
                y.max(0.0) * out
            }
        }
    }

    /// `∫_{−π}^{π} h(φ) dφ`.
    pub fn closed_form(&self) -> f64 {
        let phase = (2.0 * self.s - self.t).cos();
        match self.variant {
            Variant::Relu | Variant::Abs => 2.0 / 3.0 * phase,
            Variant::Identity => 0.0,
            Variant::Secondary => -PI / 2.0 * (2.0 * self.u).cos() * phase,
        }
    }
}

/// Closed-form integral for the tokens `(a, b, c)` at frequency k.
pub fn closed_form(variant: Variant, k: usize, p: usize, a: usize, b: usize, c: usize) -> f64 {
    IntegrandSpec::from_tokens(variant, k, p, a, b, c).closed_form()
}

/// Composite midpoint rule for `∫_{−π}^{π} h`.
pub fn numeric_integral(spec: &IntegrandSpec, n_points: usize) -> f64 {
    integrate(|phi| spec.eval(phi), n_points)
}

pub fn integrate(f: impl Fn(f64) -> f64, n_points: usize) -> f64 {
    let n = n_points.max(16);
    let h = 2.0 * PI / n as f64;
    (0..n).map(|j| f(-PI + (j as f64 + 0.5) * h)).sum::<f64>() * h
}
