//! Kernel evaluation and the Hermite expansion of the Gaussian kernel.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{KdaError, Result};
use crate::multiindex::{check_len, enumerate, DegreeSpec, MultiIndex};

/// Highest Hermite order evaluated; precision degrades beyond it.
pub const MAX_HERMITE_ORDER: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `(x^T u)^d`
    HomoPoly { degree: u32 },
    /// `(1 + x^T u)^d`
    InhomoPoly { degree: u32 },
    /// `exp(-|x - u|^2 / (2 omega^2))`
    Gaussian { bandwidth: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::HomoPoly { degree } | KernelSpec::InhomoPoly { degree } if degree == 0 => {
                Err(KdaError::InvalidArgument("polynomial kernel degree must be at least 1".into()))
            }
            KernelSpec::Gaussian { bandwidth } if !(bandwidth > 0.0 && bandwidth.is_finite()) => {
                Err(KdaError::InvalidArgument(format!("bandwidth {bandwidth} must be positive")))
            }
            _ => Ok(()),
        }
    }

    /// Short label used in file names and tables, e.g. `inhomo3`.
    pub fn label(&self) -> String {
        match *self {
            KernelSpec::HomoPoly { degree } => format!("homo{degree}"),
            KernelSpec::InhomoPoly { degree } => format!("inhomo{degree}"),
            KernelSpec::Gaussian { bandwidth } => format!("gauss{bandwidth}"),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            KernelSpec::HomoPoly { degree } => write!(f, "homo:{degree}"),
            KernelSpec::InhomoPoly { degree } => write!(f, "inhomo:{degree}"),
            KernelSpec::Gaussian { bandwidth } => write!(f, "gauss:{bandwidth}"),
        }
    }
}

/// Parses `homo:<d>`, `inhomo:<d>`, `linear` or `gauss:<omega>`.
impl FromStr for KernelSpec {
    type Err = KdaError;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || KdaError::InvalidArgument(format!("unknown kernel spec '{s}'"));
        let spec = match s.split_once(':') {
            None if s == "linear" => KernelSpec::HomoPoly { degree: 1 },
            Some(("homo", d)) => KernelSpec::HomoPoly { degree: d.parse().map_err(|_| bad())? },
            Some(("inhomo", d)) => KernelSpec::InhomoPoly { degree: d.parse().map_err(|_| bad())? },
            Some(("gauss", w)) => KernelSpec::Gaussian { bandwidth: w.parse().map_err(|_| bad())? },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], u: &[f64]) -> Result<f64> {
    check_len(x.len(), u.len())?;
    Ok(kernel_eval_unchecked(spec, x, u))
}

#[inline]
pub(crate) fn kernel_eval_unchecked(spec: &KernelSpec, x: &[f64], u: &[f64]) -> f64 {
    match *spec {
        KernelSpec::HomoPoly { degree } => dot(x, u).powi(degree as i32),
        KernelSpec::InhomoPoly { degree } => (1.0 + dot(x, u)).powi(degree as i32),
        KernelSpec::Gaussian { bandwidth } => {
            let d2: f64 = x.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum();
            (-d2 / (2.0 * bandwidth * bandwidth)).exp()
        }
    }
}

#[inline]
fn dot(x: &[f64], u: &[f64]) -> f64 {
    x.iter().zip(u).map(|(a, b)| a * b).sum()
}

/// Probabilist's Hermite polynomial `He_m(x)`.
pub fn hermite_he(m: u32, x: f64) -> f64 {
    hermite_he_all(m, x)[m as usize]
}

/// `He_0(x), ..., He_m(x)` by `He_{k+1} = x He_k - k He_{k-1}`.
pub fn hermite_he_all(m: u32, x: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(m as usize + 1);
    h.push(1.0);
    if m >= 1 {
        h.push(x);
    }
    for k in 1..m as usize {
        let next = x * h[k] - k as f64 * h[k - 1];
        h.push(next);
    }
    h
}

/// `H~_j(x_omega) = exp(-|x_omega|^2 / 2) H_j(x_omega) / (j! omega^|j|)` with `x_omega = x / omega`.
pub fn hermite_tilde(j: &MultiIndex, omega: f64, x: &[f64]) -> Result<f64> {
    check_len(j.dim(), x.len())?;
    if !(omega > 0.0) {
        return Err(KdaError::InvalidArgument(format!("bandwidth {omega} must be positive")));
    }
    let xw: Vec<f64> = x.iter().map(|v| v / omega).collect();
    let herm: f64 = j.exponents().iter().zip(&xw).map(|(&e, &v)| hermite_he(e, v)).product();
    let sq: f64 = xw.iter().map(|v| v * v).sum();
    let degree = j.degree();
    let weight = if degree > 15 {
        (-0.5 * sq - j.ln_factorial() - degree as f64 * omega.ln()).exp()
    } else {
        (-0.5 * sq).exp() / (j.factorial() * omega.powi(degree as i32))
    };
    Ok(weight * herm)
}

/// The Gaussian kernel's Hermite representation truncated at total degree `n`:
/// `sum_{|j| <= n} H~_j(x_omega) u^j`. Not symmetric in `x` and `u`.
pub fn gaussian_truncated(omega: f64, n: u32, x: &[f64], u: &[f64]) -> Result<f64> {
    check_len(x.len(), u.len())?;
    if !(omega > 0.0) {
        return Err(KdaError::InvalidArgument(format!("bandwidth {omega} must be positive")));
    }
    if n > MAX_HERMITE_ORDER {
        return Err(KdaError::DegreeTooLarge { degree: n, max: MAX_HERMITE_ORDER });
    }
    let p = x.len();
    // Per coordinate: He_m(x_k / omega) (u_k / omega)^m / m!, so each term is a product.
    let factors: Vec<Vec<f64>> = (0..p)
        .map(|k| {
            let he = hermite_he_all(n, x[k] / omega);
            let r = u[k] / omega;
            let mut pow_over_fact = 1.0;
            he.iter()
                .enumerate()
                .map(|(m, &h)| {
                    if m > 0 {
                        pow_over_fact *= r / m as f64;
                    }
                    h * pow_over_fact
                })
                .collect()
        })
        .collect();
    let sq: f64 = x.iter().map(|v| (v / omega).powi(2)).sum();
    let mut total = 1.0;
    if n >= 1 {
        for j in enumerate(p, DegreeSpec::Range(n)).iter() {
            total += j.exponents().iter().enumerate().map(|(k, &e)| factors[k][e as usize]).product::<f64>();
        }
    }
    Ok((-0.5 * sq).exp() * total)
}
