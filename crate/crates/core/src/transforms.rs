//! Frame chain `lab -> a -> b -> n` and the composite map
//! `Phi(t) = U_b0(t)^dagger T^dagger U_a0(t)`.
//!
//! `U_a0 = exp(+i (Delta0/2) sx t)`, `T = T(alpha)` with `alpha = -lambda_1/Omega_1`
//! acting on the spin and mode 1, and
//! `U_b0 = exp(-i [(Omega_1 - nu) n_1 - (omega/2) sz] t)`. Mode 2, if present,
//! is left untouched by every step.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::densecx::{c64, cr, Operator, I, ZERO};
use crate::dissipator::{RateOperators, RhsTerms};
use crate::error::{Error, Result};
use crate::hilbert::{displacement, pauli, Pauli, SpaceLayout};
use crate::models::{h_a, h_b, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Lab,
    A,
    B,
    N,
}

impl Frame {
    fn rank(self) -> u8 {
        match self {
            Frame::Lab => 0,
            Frame::A => 1,
            Frame::B => 2,
            Frame::N => 3,
        }
    }
}

/// A state tagged with the frame and time it lives in.
#[derive(Debug, Clone)]
pub struct FrameStamp {
    pub frame: Frame,
    pub t: f64,
}

/// `T(alpha) = [D^dagger (|e><e| - |g><e|) + D (|g><g| + |e><g|)] / sqrt(2)`.
pub fn t_alpha(alpha: f64, layout: &SpaceLayout) -> Result<Operator> {
    let n1 = layout.boson_dims()[0];
    let d = displacement(cr(alpha), n1)?;
    let dd = d.adjoint();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let proj = |i: usize, j: usize| {
        Operator::from_fn(vec![2], |a, b| if a == i && b == j { cr(r) } else { ZERO }).unwrap()
    };
    let (e, g) = (0, 1);
    let mut t = layout.spin_mode_op(&proj(e, e), 0, &dd);
    t -= &layout.spin_mode_op(&proj(g, e), 0, &dd);
    t += &layout.spin_mode_op(&proj(g, g), 0, &d);
    t += &layout.spin_mode_op(&proj(e, g), 0, &d);
    Ok(t)
}

/// `exp(+i (Delta0/2) sx t)` on the full layout.
pub fn u_a0(spec: &ModelSpec, t: f64) -> Operator {
    let th = spec.delta0 * t / 2.0;
    let u = &Operator::identity(&[2]).unwrap().scale_real(th.cos())
        + &pauli(Pauli::X).scale(I * th.sin());
    spec.layout.spin_op(&u)
}

/// Diagonal of the `H_b0` generator: `(Omega_1 - nu) m_1 - (omega/2) s_z`.
pub fn b0_energies(spec: &ModelSpec) -> Vec<f64> {
    let dims = spec.layout.dims();
    let inner: usize = dims[2..].iter().product();
    let n1 = dims[1];
    let w = spec.rc[0].omega - spec.nu_tilde;
    (0..spec.layout.total_dim())
        .map(|k| {
            let s = k / (n1 * inner);
            let m = (k / inner) % n1;
            let sz = if s == 0 { 1.0 } else { -1.0 };
            w * m as f64 - spec.omega_tilde / 2.0 * sz
        })
        .collect()
}

/// `exp(-i H_b0 t)`.
pub fn u_b0(spec: &ModelSpec, t: f64) -> Operator {
    let d: Vec<c64> = b0_energies(spec)
        .iter()
        .map(|&e| c64::from_polar(1.0, -e * t))
        .collect();
    Operator::diagonal(&spec.layout.dims(), &d).unwrap()
}

/// `Phi(t) = U_b0^dagger T^dagger U_a0`.
pub fn phi(spec: &ModelSpec, t: f64) -> Result<Operator> {
    Ok(FrameMap::new(spec)?.phi(t))
}

/// Precomputed pieces of the frame chain for one model.
#[derive(Clone, Debug)]
pub struct FrameMap {
    delta0: f64,
    energies: Vec<f64>,
    t_op: Operator,
    t_dag: Operator,
    t_dag_sx: Operator,
    sx: Operator,
}

impl FrameMap {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let t_op = t_alpha(spec.alpha(), &spec.layout)?;
        let t_dag = t_op.adjoint();
        let sx = spec.layout.spin_op(&pauli(Pauli::X));
        let t_dag_sx = t_dag.matmul(&sx);
        Ok(Self {
            delta0: spec.delta0,
            energies: b0_energies(spec),
            t_op,
            t_dag,
            t_dag_sx,
            sx,
        })
    }

    pub fn t(&self) -> &Operator {
        &self.t_op
    }

    pub fn t_dag(&self) -> &Operator {
        &self.t_dag
    }

    fn cs(&self, t: f64) -> (f64, f64) {
        let th = self.delta0 * t / 2.0;
        (th.cos(), th.sin())
    }

    /// `e^{i E_k t}`, the diagonal of `U_b0^dagger`.
    fn phases(&self, t: f64) -> Vec<c64> {
        self.energies
            .iter()
            .map(|&e| c64::from_polar(1.0, e * t))
            .collect()
    }

    pub fn phi(&self, t: f64) -> Operator {
        let (c, s) = self.cs(t);
        let p = self.phases(t);
        let (a, b) = (self.t_dag.mat(), self.t_dag_sx.mat());
        let n = p.len();
        let m = Mat::from_fn(n, n, |i, j| p[i] * (a[(i, j)] * c + b[(i, j)] * (I * s)));
        Operator::new(self.t_dag.dims().to_vec(), m).unwrap()
    }

    /// Lab state to the multiphoton frame: `Phi rho Phi^dagger`.
    pub fn to_n(&self, rho: &Operator, t: f64) -> Operator {
        self.phi(t).conjugate(rho)
    }

    /// Multiphoton-frame state back to the lab: `Phi^dagger rho Phi`.
    pub fn from_n(&self, rho: &Operator, t: f64) -> Operator {
        self.phi(t).adjoint().conjugate(rho)
    }

    /// One step of the chain. Returns the unitary `W` with `rho_to = W rho_from W^dagger`.
    fn step(&self, from: Frame, t: f64) -> Operator {
        match from {
            Frame::Lab => {
                let (c, s) = self.cs(t);
                self.sx
                    .map(|i, j, z| z * (I * s) + if i == j { cr(c) } else { ZERO })
            }
            Frame::A => self.t_dag.clone(),
            Frame::B => {
                let p = self.phases(t);
                Operator::diagonal(self.t_dag.dims(), &p).unwrap()
            }
            Frame::N => unreachable!("no frame beyond n"),
        }
    }

    /// Move `rho` from `stamp.frame` to `to` at time `stamp.t` along the chain.
    pub fn convert(&self, rho: &Operator, stamp: &FrameStamp, to: Frame) -> Operator {
        let order = [Frame::Lab, Frame::A, Frame::B, Frame::N];
        let (lo, hi) = (stamp.frame.rank(), to.rank());
        let mut out = rho.clone();
        if lo <= hi {
            for f in &order[lo as usize..hi as usize] {
                out = self.step(*f, stamp.t).conjugate(&out);
            }
        } else {
            for f in order[hi as usize..lo as usize].iter().rev() {
                out = self.step(*f, stamp.t).adjoint().conjugate(&out);
            }
        }
        out
    }

    /// Decompose a lab operator for fast evaluation of `Phi(t) A Phi(t)^dagger`.
    pub fn frame_operator(&self, a: &Operator) -> FramedOperator {
        let sas = self.sx.matmul(a).matmul(&self.sx);
        let comm = (&self.sx.matmul(a) - &a.matmul(&self.sx)).scale(I);
        let conj = |x: &Operator| self.t_dag.matmul(x).matmul(&self.t_op);
        FramedOperator {
            a0: conj(a),
            a1: conj(&sas),
            a2: conj(&comm),
            delta0: self.delta0,
            energies: self.energies.clone(),
        }
    }

    pub fn frame_rates(&self, rates: &RateOperators) -> FramedRates {
        FramedRates {
            x: self.frame_operator(rates.x()),
            q: self.frame_operator(rates.q()),
            xp: self.frame_operator(rates.xp()),
            zero: rates.is_zero(),
        }
    }
}

/// `Phi(t) A Phi(t)^dagger` evaluated in `O(d^2)`:
/// `e^{i(E_i - E_j) t} (c^2 A0 + s^2 A1 + c s A2)_{ij}`.
#[derive(Clone, Debug)]
pub struct FramedOperator {
    a0: Operator,
    a1: Operator,
    a2: Operator,
    delta0: f64,
    energies: Vec<f64>,
}

impl FramedOperator {
    pub fn at(&self, t: f64) -> Operator {
        let th = self.delta0 * t / 2.0;
        let (c, s) = (th.cos(), th.sin());
        let (cc, ss, cs) = (c * c, s * s, c * s);
        let p: Vec<c64> = self
            .energies
            .iter()
            .map(|&e| c64::from_polar(1.0, e * t))
            .collect();
        let (a0, a1, a2) = (self.a0.mat(), self.a1.mat(), self.a2.mat());
        let n = p.len();
        let m = Mat::from_fn(n, n, |i, j| {
            (a0[(i, j)] * cc + a1[(i, j)] * ss + a2[(i, j)] * cs) * p[i] * p[j].conj()
        });
        Operator::new(self.a0.dims().to_vec(), m).unwrap()
    }
}

/// Rates of one bath seen in the multiphoton frame.
#[derive(Clone, Debug)]
pub struct FramedRates {
    x: FramedOperator,
    q: FramedOperator,
    xp: FramedOperator,
    zero: bool,
}

impl FramedRates {
    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn terms_at(&self, t: f64) -> RhsTerms<'static> {
        use std::borrow::Cow;
        RhsTerms {
            x: Cow::Owned(self.x.at(t)),
            q: Cow::Owned(self.q.at(t)),
            xp: Cow::Owned(self.xp.at(t)),
        }
    }
}

/// `Phi(t) rho Phi(t)^dagger` for a lab state.
pub fn to_multiphoton_frame(rho: &Operator, spec: &ModelSpec, t: f64) -> Result<Operator> {
    check_dim(rho, spec)?;
    Ok(FrameMap::new(spec)?.to_n(rho, t))
}

/// `Phi(t)^dagger rho Phi(t)` for a multiphoton-frame state.
pub fn from_multiphoton_frame(rho: &Operator, spec: &ModelSpec, t: f64) -> Result<Operator> {
    check_dim(rho, spec)?;
    Ok(FrameMap::new(spec)?.from_n(rho, t))
}

/// Residuals of the `T(alpha)` conjugation identities on the lower half of
/// the mode-1 Fock space, followed by `T^dagger H_a(t) T + lambda^2/Omega = H_b(t)`
/// at each of `times`.
pub fn conjugation_residues(spec: &ModelSpec, times: &[f64]) -> Result<Vec<(String, f64)>> {
    let l = &spec.layout;
    let n1 = l.boson_dims()[0];
    let alpha = spec.alpha();
    let t = t_alpha(alpha, l)?;
    let td = t.adjoint();
    let conj = |a: &Operator| td.matmul(a).matmul(&t);
    let sx = l.spin_op(&pauli(Pauli::X));
    let sy = l.spin_op(&pauli(Pauli::Y));
    let sz = l.spin_op(&pauli(Pauli::Z));
    let sp = l.spin_op(&pauli(Pauli::Plus));
    let x = l.position(0);
    let n = l.number(0);
    let a = l.annihilation(0);
    let id = l.identity();
    let d2 = l.mode_op(0, &displacement(cr(2.0 * alpha), n1)?);
    let idx = l.low_fock_indices(&[n1 / 2]);
    let err =
        |lhs: Operator, rhs: Operator| (&lhs.submatrix(&idx) - &rhs.submatrix(&idx)).max_abs();
    let spd = sp.matmul(&d2);
    let k = spd.scale(-I);
    let cross = &a.adjoint().scale_real(alpha) + &a.scale_real(alpha);
    let mut out = vec![
        ("sx".to_string(), err(conj(&sx), sz.scale_real(-1.0))),
        (
            "x".to_string(),
            err(conj(&x), &x - &sz.scale_real(2.0 * alpha)),
        ),
        (
            "sx x".to_string(),
            err(
                conj(&sx.matmul(&x)),
                &sz.matmul(&x).scale_real(-1.0) + &id.scale_real(2.0 * alpha),
            ),
        ),
        (
            "n".to_string(),
            err(
                conj(&n),
                &(&n + &id.scale_real(alpha * alpha)) - &sz.matmul(&cross),
            ),
        ),
        ("sz".to_string(), err(conj(&sz), &spd + &spd.adjoint())),
        ("sy".to_string(), err(conj(&sy), &k + &k.adjoint())),
    ];
    let shift = id.scale_real(spec.rc[0].lambda.powi(2) / spec.rc[0].omega);
    let hb = h_b(spec)?;
    for &tt in times {
        out.push((
            format!("H_b(t = {tt})"),
            err(&conj(&h_a(spec, tt)) + &shift, hb.at(tt)),
        ));
    }
    Ok(out)
}

fn check_dim(rho: &Operator, spec: &ModelSpec) -> Result<()> {
    if rho.dim() != spec.layout.total_dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} for a layout of dimension {}",
            rho.dim(),
            spec.layout.total_dim()
        )));
    }
    Ok(())
}
