//! Spins, truncated bosonic modes and composite states.
//!
//! Factor order is always spin first, then bosonic modes in order:
//! `spin ⊗ boson_1 ⊗ boson_2 ⊗ ..`. The spin basis is `|e> = (1, 0)`,
//! `|g> = (0, 1)`, so `sigma_z |e> = |e>`.

use serde::{Deserialize, Serialize};

use crate::densecx::{c64, cr, func_of_hermitian, kron_all, DensityMatrix, Operator, I, ONE, ZERO};
use crate::error::{Error, Result};
use crate::tol::Tolerances;

pub const SPIN: usize = 0;

/// Tensor layout of a spin coupled to truncated bosonic modes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceLayout {
    boson_dims: Vec<usize>,
}

impl SpaceLayout {
    pub fn new(boson_dims: Vec<usize>) -> Result<Self> {
        if let Some(&n) = boson_dims.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidParameter(format!(
                "Fock truncation {n} is below 2"
            )));
        }
        Ok(Self { boson_dims })
    }

    pub fn spin_only() -> Self {
        Self {
            boson_dims: Vec::new(),
        }
    }

    pub fn boson_dims(&self) -> &[usize] {
        &self.boson_dims
    }

    pub fn n_modes(&self) -> usize {
        self.boson_dims.len()
    }

    /// Factor index of bosonic mode `i` (0-based).
    pub fn mode_factor(&self, i: usize) -> usize {
        1 + i
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![2];
        d.extend_from_slice(&self.boson_dims);
        d
    }

    pub fn total_dim(&self) -> usize {
        2 * self.boson_dims.iter().product::<usize>()
    }

    pub fn identity(&self) -> Operator {
        Operator::identity(&self.dims()).expect("layout dims are valid")
    }

    /// Spin operator embedded on the full layout.
    pub fn spin_op(&self, op: &Operator) -> Operator {
        embed(op, SPIN, self).expect("spin operators are 2x2")
    }

    /// Single-mode operator embedded on mode `i`.
    pub fn mode_op(&self, i: usize, op: &Operator) -> Operator {
        embed(op, self.mode_factor(i), self).expect("mode operator matches truncation")
    }

    /// Spin-and-mode-`i` product `s ⊗ m`, identity elsewhere.
    pub fn spin_mode_op(&self, s: &Operator, i: usize, m: &Operator) -> Operator {
        self.spin_op(s).matmul(&self.mode_op(i, m))
    }

    /// `a_i` on the full layout.
    pub fn annihilation(&self, i: usize) -> Operator {
        self.mode_op(i, &ladder(self.boson_dims[i]).0)
    }

    /// `a_i^dagger a_i` on the full layout.
    pub fn number(&self, i: usize) -> Operator {
        self.mode_op(i, &number(self.boson_dims[i]))
    }

    /// `a_i + a_i^dagger` on the full layout.
    pub fn position(&self, i: usize) -> Operator {
        self.mode_op(i, &position(self.boson_dims[i]))
    }

    /// Flat indices whose Fock labels are all below `limit[i]` on each mode.
    pub fn low_fock_indices(&self, limit: &[usize]) -> Vec<usize> {
        let dims = self.dims();
        let total = self.total_dim();
        (0..total)
            .filter(|&flat| {
                let mut rem = flat;
                let mut labels = vec![0; dims.len()];
                for k in (0..dims.len()).rev() {
                    labels[k] = rem % dims[k];
                    rem /= dims[k];
                }
                labels[1..].iter().zip(limit).all(|(&m, &l)| m < l)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

pub fn pauli(which: Pauli) -> Operator {
    let rows: [[c64; 2]; 2] = match which {
        Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
        Pauli::Y => [[ZERO, -I], [I, ZERO]],
        Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
        Pauli::Plus => [[ZERO, ONE], [ZERO, ZERO]],
        Pauli::Minus => [[ZERO, ZERO], [ONE, ZERO]],
    };
    Operator::from_rows(&[&rows[0], &rows[1]])
}

/// `(a, a^dagger)` truncated to `n` levels.
pub fn ladder(n: usize) -> (Operator, Operator) {
    let a = Operator::from_fn(vec![n], |i, j| {
        if j == i + 1 {
            cr((j as f64).sqrt())
        } else {
            ZERO
        }
    })
    .expect("n >= 1");
    let ad = a.adjoint();
    (a, ad)
}

pub fn number(n: usize) -> Operator {
    let d: Vec<c64> = (0..n).map(|m| cr(m as f64)).collect();
    Operator::diagonal(&[n], &d).expect("n >= 1")
}

pub fn position(n: usize) -> Operator {
    let (a, ad) = ladder(n);
    &a + &ad
}

/// Place `op` on `factor`, identity on every other factor of `layout`.
pub fn embed(op: &Operator, factor: usize, layout: &SpaceLayout) -> Result<Operator> {
    let dims = layout.dims();
    if factor >= dims.len() {
        return Err(Error::FactorOutOfRange {
            index: factor,
            count: dims.len(),
        });
    }
    if op.dim() != dims[factor] {
        return Err(Error::DimensionMismatch(format!(
            "operator of dimension {} placed on factor {factor} of size {}",
            op.dim(),
            dims[factor]
        )));
    }
    let ids: Vec<Operator> = dims
        .iter()
        .map(|&d| Operator::identity(&[d]).expect("d >= 1"))
        .collect();
    let single = op.clone().with_dims(vec![dims[factor]])?;
    let parts: Vec<&Operator> = (0..dims.len())
        .map(|k| if k == factor { &single } else { &ids[k] })
        .collect();
    Ok(kron_all(&parts))
}

/// A truncated Gibbs state of one mode.
#[derive(Debug, Clone)]
pub struct ThermalState {
    pub rho: DensityMatrix,
    /// `(e^{beta Omega} - 1)^{-1}` of the untruncated mode.
    pub n_th: f64,
    /// `<a^dagger a>` of the truncated state.
    pub mean_occupation: f64,
    /// Population of the top two Fock levels.
    pub tail_weight: f64,
}

/// `beta * Omega` giving mean occupation `n_th`.
pub fn beta_omega_from_nth(n_th: f64) -> f64 {
    if n_th <= 0.0 {
        f64::INFINITY
    } else {
        (1.0 / n_th).ln_1p()
    }
}

pub fn thermal_state(beta_omega: f64, n: usize) -> Result<ThermalState> {
    thermal_state_with(beta_omega, n, Tolerances::default().fock_tail)
}

/// Gibbs state with `beta Omega = inf` meaning the exact vacuum.
pub fn thermal_state_with(beta_omega: f64, n: usize, tail_limit: f64) -> Result<ThermalState> {
    if !(beta_omega > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta*Omega must be positive, got {beta_omega}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "Fock truncation {n} is below 2"
        )));
    }
    let mut w = vec![0.0; n];
    if beta_omega.is_infinite() {
        w[0] = 1.0;
    } else {
        let q = (-beta_omega).exp();
        let mut p = 1.0;
        for wm in w.iter_mut() {
            *wm = p;
            p *= q;
        }
        let z: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= z);
    }
    let tail_weight = w[n - 2] + w[n - 1];
    if tail_weight > tail_limit {
        return Err(Error::TruncationTooSmall {
            tail: tail_weight,
            limit: tail_limit,
        });
    }
    let n_th = if beta_omega.is_infinite() {
        0.0
    } else {
        1.0 / beta_omega.exp_m1()
    };
    let mean_occupation = w.iter().enumerate().map(|(m, p)| m as f64 * p).sum();
    let diag: Vec<c64> = w.iter().map(|&p| cr(p)).collect();
    let rho = DensityMatrix::from_operator_unchecked(Operator::diagonal(&[n], &diag)?);
    Ok(ThermalState {
        rho,
        n_th,
        mean_occupation,
        tail_weight,
    })
}

/// `D(alpha) = exp(alpha a^dagger - alpha^* a)` on `n` levels.
pub fn displacement(alpha: c64, n: usize) -> Result<Operator> {
    let limit = n as f64 / 4.0;
    if alpha.norm_sqr() > limit {
        return Err(Error::DisplacementTooLarge {
            alpha_sq: alpha.norm_sqr(),
            limit,
            n,
        });
    }
    let (a, ad) = ladder(n);
    // D = exp(-i G) with Hermitian G = i (alpha a^dagger - alpha^* a).
    let g = (&ad.scale(alpha) - &a.scale(alpha.conj())).scale(I);
    func_of_hermitian(&g.hermitian_part(), |w| Some(c64::from_polar(1.0, -w)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinState {
    E,
    G,
    Plus,
    Minus,
}

pub fn spin_ket(s: SpinState) -> [c64; 2] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    match s {
        SpinState::E => [ONE, ZERO],
        SpinState::G => [ZERO, ONE],
        SpinState::Plus => [cr(r), cr(r)],
        SpinState::Minus => [cr(r), cr(-r)],
    }
}

pub fn spin_state(s: SpinState) -> DensityMatrix {
    DensityMatrix::pure(&[2], &spin_ket(s)).expect("normalised spin ket")
}

pub fn fock_ket(m: usize, n: usize) -> Vec<c64> {
    let mut v = vec![ZERO; n];
    v[m] = ONE;
    v
}

pub fn fock_state(m: usize, n: usize) -> Result<DensityMatrix> {
    if m >= n {
        return Err(Error::InvalidParameter(format!(
            "Fock level {m} outside truncation {n}"
        )));
    }
    DensityMatrix::pure(&[n], &fock_ket(m, n))
}

/// Kronecker product of factor states, left to right.
pub fn product_state(parts: &[&DensityMatrix]) -> DensityMatrix {
    let ops: Vec<&Operator> = parts.iter().map(|p| p.op()).collect();
    DensityMatrix::from_operator_unchecked(kron_all(&ops))
}

/// Population of the top two Fock levels of mode `i`.
pub fn fock_tail(rho: &Operator, layout: &SpaceLayout, i: usize) -> f64 {
    let n = layout.boson_dims()[i];
    let dims = layout.dims();
    let inner: usize = dims[layout.mode_factor(i) + 1..].iter().product();
    (0..rho.dim())
        .filter(|&k| (k / inner) % n >= n - 2)
        .map(|k| rho.get(k, k).re)
        .sum()
}
