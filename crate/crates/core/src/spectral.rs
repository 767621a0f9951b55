//! Spectral densities and the reaction-coordinate parameter map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Underdamped spin-boson spectral density
/// `J(w) = alpha Gamma w0^2 w / ((w0^2 - w^2)^2 + Gamma^2 w^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnderdampedSD {
    pub alpha: f64,
    #[serde(rename = "Gamma")]
    pub width: f64,
    pub omega0: f64,
}

impl UnderdampedSD {
    pub fn new(alpha: f64, width: f64, omega0: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !(width >= 0.0) || !(omega0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "underdamped density needs alpha >= 0, Gamma >= 0, omega0 > 0 (got {alpha}, {width}, {omega0})"
            )));
        }
        Ok(Self {
            alpha,
            width,
            omega0,
        })
    }

    /// Parametrised by `pi * alpha` as in the usual presets.
    pub fn from_pi_alpha(pi_alpha: f64, width: f64, omega0: f64) -> Result<Self> {
        Self::new(pi_alpha / std::f64::consts::PI, width, omega0)
    }
}

/// Ohmic residual density `J(w) = gamma w exp(-|w| / Lambda)`, odd in `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhmicRcSD {
    pub gamma: f64,
    /// `None` is an infinite cutoff.
    #[serde(default)]
    pub cutoff: Option<f64>,
}

impl OhmicRcSD {
    pub fn new(gamma: f64, cutoff: Option<f64>) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be >= 0, got {gamma}"
            )));
        }
        if let Some(l) = cutoff {
            if !(l > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "cutoff must be > 0, got {l}"
                )));
            }
        }
        Ok(Self { gamma, cutoff })
    }

    /// Bare density, extended oddly to negative frequencies.
    pub fn eval(&self, xi: f64) -> f64 {
        self.gamma * xi * self.cutoff_factor(xi)
    }

    fn cutoff_factor(&self, xi: f64) -> f64 {
        match self.cutoff {
            Some(l) => (-xi.abs() / l).exp(),
            None => 1.0,
        }
    }
}

/// Reaction-coordinate parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcParams {
    pub lambda: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
    pub residual: OhmicRcSD,
}

impl RcParams {
    pub fn new(lambda: f64, omega: f64, residual: OhmicRcSD) -> Result<Self> {
        if !(omega > 0.0) || !(lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "RC needs Omega > 0 and lambda >= 0 (got Omega = {omega}, lambda = {lambda})"
            )));
        }
        Ok(Self {
            lambda,
            omega,
            residual,
        })
    }

    /// Lamb-Dicke parameter `2 lambda / Omega`.
    pub fn lamb_dicke(&self) -> f64 {
        2.0 * self.lambda / self.omega
    }
}

pub fn eval_underdamped(sd: &UnderdampedSD, omega: f64) -> Result<f64> {
    let w0 = sd.omega0;
    let den = (w0 * w0 - omega * omega).powi(2) + (sd.width * omega).powi(2);
    if den == 0.0 {
        if omega == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Pole { omega });
    }
    Ok(sd.alpha * sd.width * w0 * w0 * omega / den)
}

/// `gamma = Gamma / (2 pi w0)`, `Omega = w0`, `lambda = sqrt(pi alpha w0 / 2)`.
pub fn map_to_rc(sd: &UnderdampedSD) -> RcParams {
    let pi = std::f64::consts::PI;
    RcParams {
        lambda: (pi * sd.alpha * sd.omega0 / 2.0).sqrt(),
        omega: sd.omega0,
        residual: OhmicRcSD {
            gamma: sd.width / (2.0 * pi * sd.omega0),
            cutoff: None,
        },
    }
}

/// Spin-boson density recovered from RC parameters.
pub fn reconstruct_sb(rc: &RcParams, omega: f64) -> Result<f64> {
    let pi = std::f64::consts::PI;
    let (g, w0, l) = (rc.residual.gamma, rc.omega, rc.lambda);
    let den = (w0 * w0 - omega * omega).powi(2) + (2.0 * pi * g * w0 * omega).powi(2);
    if den == 0.0 {
        if omega == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Pole { omega });
    }
    Ok(4.0 * g * w0 * w0 * l * l * omega / den)
}

/// Rate weights `(J(xi) coth(beta xi / 2), J(xi))`.
///
/// `beta` may be infinite. Near `xi = 0` the first weight takes its limit
/// `2 gamma / beta`.
pub fn rate_factor(rc: &OhmicRcSD, xi: f64, beta: f64) -> (f64, f64) {
    let bare = rc.eval(xi);
    let weighted = if beta.is_infinite() {
        rc.gamma * xi.abs() * rc.cutoff_factor(xi)
    } else if xi.abs() < 1e-9 / beta {
        2.0 * rc.gamma / beta
    } else {
        bare / (beta * xi / 2.0).tanh()
    };
    (weighted, bare)
}
