//! Fidelity, trace distance, its time derivative, purity and entropy.

use serde::{Deserialize, Serialize};

use crate::densecx::{
    cr, hermitian_eig, hermitian_eigenvalues, trace_norm, HermitianEig, Operator,
};
use crate::error::{Error, Result};
use crate::tol::Tolerances;

/// Clip eigenvalues in `[-floor, 0)` and roundoff-level values to zero.
fn clip(values: &[f64], floor: f64) -> Result<Vec<f64>> {
    let top = values.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let noise = 64.0 * f64::EPSILON * values.len() as f64 * top;
    values
        .iter()
        .map(|&w| {
            if w.abs() <= noise {
                Ok(0.0)
            } else if w >= 0.0 {
                Ok(w)
            } else if w >= -floor {
                Ok(0.0)
            } else {
                Err(Error::SevereNegativity {
                    eigenvalue: w,
                    floor,
                })
            }
        })
        .collect()
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(r1) r2 sqrt(r1)))^2`.
pub fn fidelity(rho1: &Operator, rho2: &Operator) -> Result<f64> {
    fidelity_tol(rho1, rho2, &Tolerances::default())
}

pub fn fidelity_tol(rho1: &Operator, rho2: &Operator, tol: &Tolerances) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity of {} and {}",
            rho1.dim(),
            rho2.dim()
        )));
    }
    let eig = hermitian_eig(&rho1.hermitian_part())?;
    let w = clip(&eig.values, tol.negativity_clip)?;
    let sqrt1 = HermitianEig {
        values: w,
        vectors: eig.vectors,
    }
    .apply(|x| Some(cr(x.sqrt())))?;
    let m = sqrt1
        .matmul(&rho2.hermitian_part())
        .matmul(&sqrt1)
        .hermitian_part();
    let mu = clip(&hermitian_eigenvalues(&m)?, tol.negativity_clip)?;
    let s: f64 = mu.iter().map(|x| x.sqrt()).sum();
    Ok(s * s)
}

/// `Tr|r1 - r2| / 2`.
pub fn trace_distance(rho1: &Operator, rho2: &Operator) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch(format!(
            "trace distance of {} and {}",
            rho1.dim(),
            rho2.dim()
        )));
    }
    Ok(0.5 * trace_norm(&(rho1 - rho2))?)
}

/// `Tr rho^2`.
pub fn purity(rho: &Operator) -> f64 {
    // Tr(A A) = sum_ij A_ij A_ji; equals sum |A_ij|^2 for Hermitian A.
    let n = rho.dim();
    let m = rho.mat();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            s += (m[(i, j)] * m[(j, i)]).re;
        }
    }
    s
}

/// Von Neumann entropy in bits.
pub fn vn_entropy(rho: &Operator) -> Result<f64> {
    vn_entropy_tol(rho, &Tolerances::default())
}

pub fn vn_entropy_tol(rho: &Operator, tol: &Tolerances) -> Result<f64> {
    let w = clip(
        &hermitian_eigenvalues(&rho.hermitian_part())?,
        tol.negativity_clip,
    )?;
    Ok(w.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum())
}

fn check_grid(n: usize, dt: f64) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "sigma needs at least 3 samples, got {n}"
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sample spacing {dt} must be positive"
        )));
    }
    Ok(())
}

/// `dD/dt` on a uniform grid: central differences inside, second-order
/// one-sided differences at both ends.
pub fn sigma_series(d: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = d.len();
    check_grid(n, dt)?;
    let mut s = vec![0.0; n];
    for i in 1..n - 1 {
        s[i] = (d[i + 1] - d[i - 1]) / (2.0 * dt);
    }
    s[0] = (-3.0 * d[0] + 4.0 * d[1] - d[2]) / (2.0 * dt);
    s[n - 1] = (3.0 * d[n - 1] - 4.0 * d[n - 2] + d[n - 3]) / (2.0 * dt);
    Ok(s)
}

/// Absolute sample error assumed for recorded trace distances.
pub const SAMPLE_FLOOR: f64 = 1e-10;

/// Truncation error estimate of [`sigma_series`]: `|D'''| dt^2 / 6` from the
/// nearest third difference, plus the rounding floor `SAMPLE_FLOOR / dt`.
pub fn sigma_noise(d: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = d.len();
    check_grid(n, dt)?;
    if n < 4 {
        return Ok(vec![SAMPLE_FLOOR / dt; n]);
    }
    let third: Vec<f64> = (0..n - 3)
        .map(|i| (d[i + 3] - 3.0 * d[i + 2] + 3.0 * d[i + 1] - d[i]).abs())
        .collect();
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(2).min(third.len() - 1);
            let hi = i.saturating_sub(1).min(third.len() - 1);
            third[lo].max(third[hi]) / (6.0 * dt) + SAMPLE_FLOOR / dt
        })
        .collect())
}

/// Detection margin applied to [`sigma_noise`].
pub const SIGMA_MARGIN: f64 = 10.0;

/// Maximal index ranges `[start, end]` with `sigma > margin * noise`.
pub fn positive_intervals(sigma: &[f64], noise: &[f64], margin: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, (&s, &e)) in sigma.iter().zip(noise).enumerate() {
        let on = s > margin * e;
        match (on, start) {
            (true, None) => start = Some(i),
            (false, Some(b)) => {
                out.push((b, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(b) = start {
        out.push((b, sigma.len() - 1));
    }
    out
}

/// Integral of `sigma` over its positive part, trapezoidal.
pub fn positive_measure(sigma: &[f64], dt: f64) -> f64 {
    sigma
        .windows(2)
        .map(|w| 0.5 * (w[0].max(0.0) + w[1].max(0.0)) * dt)
        .sum()
}

/// `F(t)`, `1 - F(t)`, `D(t)` and `sigma(t)` on a shared uniform grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSeries {
    pub t: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub infidelity: Vec<f64>,
    pub trace_distance: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl ComparisonSeries {
    /// Compare two trajectories sampled on the same grid.
    pub fn from_pairs(t: &[f64], a: &[Operator], b: &[Operator]) -> Result<Self> {
        Self::from_pairs_tol(t, a, b, &Tolerances::default())
    }

    pub fn from_pairs_tol(
        t: &[f64],
        a: &[Operator],
        b: &[Operator],
        tol: &Tolerances,
    ) -> Result<Self> {
        if a.len() != t.len() || b.len() != t.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} times for trajectories of {} and {} states",
                t.len(),
                a.len(),
                b.len()
            )));
        }
        let fidelity = a
            .iter()
            .zip(b)
            .map(|(x, y)| fidelity_tol(x, y, tol))
            .collect::<Result<Vec<_>>>()?;
        let trace_distance = a
            .iter()
            .zip(b)
            .map(|(x, y)| trace_distance(x, y))
            .collect::<Result<Vec<_>>>()?;
        let sigma = if t.len() >= 3 {
            sigma_series(&trace_distance, t[1] - t[0])?
        } else {
            vec![0.0; t.len()]
        };
        Ok(Self {
            t: t.to_vec(),
            infidelity: fidelity.iter().map(|f| 1.0 - f).collect(),
            fidelity,
            trace_distance,
            sigma,
        })
    }

    pub fn max_infidelity(&self) -> f64 {
        self.infidelity.iter().copied().fold(0.0, f64::max)
    }
}
