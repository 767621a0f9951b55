//! Eigenbasis rate operators and the reaction-coordinate dissipator
//! `D(rho) = -[x, [chi, rho]] + [x, {Theta, rho}]`.

use std::borrow::Cow;
use std::sync::Arc;

use faer::Mat;

use crate::densecx::{c64, hermitian_eig, HermitianEig, Operator, I, ONE, ZERO};
use crate::error::{Error, Result};
use crate::hilbert::SpaceLayout;
use crate::spectral::{rate_factor, RcParams};
use crate::tol::Tolerances;

/// Largest vectorised side accepted by [`build_liouvillian`].
pub const LIOUVILLIAN_LIMIT: usize = 4096;

/// `chi`, `Theta` and the coupling `x` of one residual bath.
///
/// The products entering the right-hand side are cached:
/// `P = chi - Theta`, `Q = chi + Theta`, `xP` and `Qx`.
#[derive(Clone, Debug)]
pub struct RateOperators {
    chi: Operator,
    theta: Operator,
    x: Operator,
    p: Operator,
    q: Operator,
    xp: Operator,
    qx: Operator,
    zero: bool,
    basis: Option<Arc<HermitianEig>>,
}

impl RateOperators {
    pub fn new(chi: Operator, theta: Operator, x: Operator) -> Self {
        let zero = chi.max_abs() == 0.0 && theta.max_abs() == 0.0;
        let p = &chi - &theta;
        let q = &chi + &theta;
        let xp = x.matmul(&p);
        let qx = q.matmul(&x);
        Self {
            chi,
            theta,
            x,
            p,
            q,
            xp,
            qx,
            zero,
            basis: None,
        }
    }

    pub fn zero(x: Operator) -> Self {
        let z = Operator::zeros(x.dims()).expect("valid dims");
        Self::new(z.clone(), z, x)
    }

    pub fn chi(&self) -> &Operator {
        &self.chi
    }
    pub fn theta(&self) -> &Operator {
        &self.theta
    }
    pub fn x(&self) -> &Operator {
        &self.x
    }
    pub fn p(&self) -> &Operator {
        &self.p
    }
    pub fn q(&self) -> &Operator {
        &self.q
    }
    pub fn xp(&self) -> &Operator {
        &self.xp
    }
    pub fn qx(&self) -> &Operator {
        &self.qx
    }
    pub fn is_zero(&self) -> bool {
        self.zero
    }
    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    /// Eigenbasis of the generating Hamiltonian, when built from one.
    pub fn basis(&self) -> Option<&HermitianEig> {
        self.basis.as_deref()
    }

    /// The operators entering the Hermitian fast form of the right-hand side.
    pub fn terms(&self) -> RhsTerms<'_> {
        RhsTerms {
            x: Cow::Borrowed(&self.x),
            q: Cow::Borrowed(&self.q),
            xp: Cow::Borrowed(&self.xp),
        }
    }

    /// Max Hermiticity residue of `chi` and anti-Hermiticity residue of `Theta`.
    pub fn residues(&self) -> (f64, f64) {
        let anti = (&self.theta + &self.theta.adjoint()).max_abs();
        (self.chi.hermiticity_residue(), anti)
    }

    /// Flip the sign of `Theta`. Used by validation fault injection.
    pub fn with_flipped_theta(&self) -> Self {
        let mut r = Self::new(
            self.chi.clone(),
            self.theta.scale_real(-1.0),
            self.x.clone(),
        );
        r.basis = self.basis.clone();
        r
    }
}

/// `x`, `Q` and `xP` of one bath, owned or borrowed.
pub struct RhsTerms<'a> {
    pub x: Cow<'a, Operator>,
    pub q: Cow<'a, Operator>,
    pub xp: Cow<'a, Operator>,
}

/// Rates of the bath attached to mode `rc_index` for Hamiltonian `h`.
pub fn build_rate_operators(
    h: &Operator,
    layout: &SpaceLayout,
    rc_index: usize,
    rc: &RcParams,
    beta: f64,
) -> Result<RateOperators> {
    if rc_index >= layout.n_modes() {
        return Err(Error::FactorOutOfRange {
            index: rc_index,
            count: layout.n_modes(),
        });
    }
    if h.dim() != layout.total_dim() {
        return Err(Error::DimensionMismatch(format!(
            "Hamiltonian of dimension {} on a layout of dimension {}",
            h.dim(),
            layout.total_dim()
        )));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    let x = layout.position(rc_index);
    if rc.residual.gamma == 0.0 {
        return Ok(RateOperators::zero(x));
    }
    let eig = hermitian_eig(h)?;
    let (chi, theta) = rates_in_basis(&eig, &x, rc, beta);
    let mut r = RateOperators::new(chi, theta, x);
    r.basis = Some(Arc::new(eig));
    Ok(r)
}

fn rates_in_basis(
    eig: &HermitianEig,
    x: &Operator,
    rc: &RcParams,
    beta: f64,
) -> (Operator, Operator) {
    let v = &eig.vectors;
    let xe = v.adjoint().matmul(x).matmul(v);
    let w = &eig.values;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let n = w.len();
    let mut c = Mat::<c64>::zeros(n, n);
    let mut t = Mat::<c64>::zeros(n, n);
    for k in 0..n {
        for j in 0..n {
            let (fw, fb) = rate_factor(&rc.residual, w[j] - w[k], beta);
            let xjk = xe.get(j, k);
            c[(j, k)] = xjk * (half_pi * fw);
            t[(j, k)] = xjk * (half_pi * fb);
        }
    }
    let dims = x.dims().to_vec();
    let c = Operator::new(dims.clone(), c).expect("square");
    let t = Operator::new(dims, t).expect("square");
    let vd = v.adjoint();
    (v.matmul(&c).matmul(&vd), v.matmul(&t).matmul(&vd))
}

/// `-[x, [chi, rho]] + [x, {Theta, rho}]`.
pub fn apply_dissipator(rates: &RateOperators, rho: &Operator) -> Result<Operator> {
    if rho.dim() != rates.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} with rates of dimension {}",
            rho.dim(),
            rates.dim()
        )));
    }
    if rates.is_zero() {
        return Operator::zeros(rho.dims());
    }
    // -x P rho + x rho Q + P rho x - rho Q x
    let mut out = rates.x.matmul(rho).matmul(&rates.q);
    out -= &rates.xp.matmul(rho);
    out += &rates.p.matmul(rho).matmul(&rates.x);
    out -= &rho.matmul(&rates.qx);
    Ok(out)
}

/// Superoperator acting on column-stacked `vec(rho)`.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    pub dims: Vec<usize>,
    pub mat: Mat<c64>,
}

impl Liouvillian {
    pub fn side(&self) -> usize {
        self.mat.nrows()
    }

    pub fn apply(&self, rho: &Operator) -> Operator {
        let v = rho.vec();
        let n = v.len();
        let out: Vec<c64> = (0..n)
            .map(|i| (0..n).map(|j| self.mat[(i, j)] * v[j]).sum())
            .collect();
        Operator::unvec(&self.dims, &out).expect("matching side")
    }
}

/// Add `coef * (B^T ⊗ A)`, the matrix of `X -> A X B`, into `l`.
fn add_sandwich(l: &mut Mat<c64>, coef: c64, a: Option<&Operator>, b: Option<&Operator>) {
    let d = a.or(b).map(|o| o.dim()).expect("one side is explicit");
    let get_a = |i: usize, m: usize| match a {
        Some(a) => a.get(i, m),
        None if i == m => ONE,
        None => ZERO,
    };
    for j in 0..d {
        for nn in 0..d {
            let bnj = match b {
                Some(b) => b.get(nn, j),
                None if nn == j => ONE,
                None => ZERO,
            };
            if bnj == ZERO {
                continue;
            }
            let f = coef * bnj;
            match a {
                Some(_) => {
                    for m in 0..d {
                        for i in 0..d {
                            let am = get_a(i, m);
                            if am != ZERO {
                                l[(j * d + i, nn * d + m)] += f * am;
                            }
                        }
                    }
                }
                None => {
                    for i in 0..d {
                        l[(j * d + i, nn * d + i)] += f;
                    }
                }
            }
        }
    }
}

/// `L vec(rho) = vec(-i[H, rho] + sum_k D_k(rho))`.
pub fn build_liouvillian(h: &Operator, rates: &[&RateOperators]) -> Result<Liouvillian> {
    let d = h.dim();
    let side = d * d;
    if side > LIOUVILLIAN_LIMIT {
        return Err(Error::MemoryGuard {
            side,
            limit: LIOUVILLIAN_LIMIT,
        });
    }
    let mut l = Mat::<c64>::zeros(side, side);
    add_sandwich(&mut l, -I, Some(h), None);
    add_sandwich(&mut l, I, None, Some(h));
    for r in rates {
        if r.dim() != d {
            return Err(Error::DimensionMismatch(
                "rates and Hamiltonian differ in dimension".into(),
            ));
        }
        if r.is_zero() {
            continue;
        }
        add_sandwich(&mut l, -ONE, Some(&r.xp), None);
        add_sandwich(&mut l, ONE, Some(&r.x), Some(&r.q));
        add_sandwich(&mut l, ONE, Some(&r.p), Some(&r.x));
        add_sandwich(&mut l, -ONE, None, Some(&r.qx));
    }
    Ok(Liouvillian {
        dims: h.dims().to_vec(),
        mat: l,
    })
}

/// Rates seen in a frame rotated by the fixed unitary `u`: `u A u^dagger`.
pub fn conjugate_rates(rates: &RateOperators, u: &Operator) -> Result<RateOperators> {
    conjugate_rates_tol(rates, u, &Tolerances::default())
}

pub fn conjugate_rates_tol(
    rates: &RateOperators,
    u: &Operator,
    tol: &Tolerances,
) -> Result<RateOperators> {
    let dev = u.unitarity_residue();
    if dev > tol.unitary {
        return Err(Error::NonUnitary { deviation: dev });
    }
    if u.dim() != rates.dim() {
        return Err(Error::DimensionMismatch(
            "unitary and rates differ in dimension".into(),
        ));
    }
    let r = RateOperators::new(
        u.conjugate(&rates.chi),
        u.conjugate(&rates.theta),
        u.conjugate(&rates.x),
    );
    let (hc, _) = r.residues();
    if hc > tol.herm.max(1e-10 * r.chi.max_abs()) {
        return Err(Error::NonHermitian { deviation: hc });
    }
    Ok(r)
}

/// Independent O(d^4) construction used as an oracle: explicit projector sums
/// `chi = (pi/2) sum_jk x_jk f(xi_jk) |j><k|` built from the eigenvectors of `h`.
pub fn reference_rates(
    h: &Operator,
    x: &Operator,
    rc: &RcParams,
    beta: f64,
) -> Result<RateOperators> {
    let eig = hermitian_eig(h)?;
    let d = h.dim();
    let col = |j: usize| -> Vec<c64> { (0..d).map(|i| eig.vectors.get(i, j)).collect() };
    let mut chi = Operator::zeros(h.dims())?;
    let mut theta = Operator::zeros(h.dims())?;
    for j in 0..d {
        let pj = col(j);
        for k in 0..d {
            let pk = col(k);
            let mut xjk = ZERO;
            for a in 0..d {
                for b in 0..d {
                    xjk += pj[a].conj() * x.get(a, b) * pk[b];
                }
            }
            let (fw, fb) = rate_factor(&rc.residual, eig.values[j] - eig.values[k], beta);
            let proj = Operator::outer(h.dims(), &pj, &pk)?;
            chi += &proj.scale(xjk * (std::f64::consts::FRAC_PI_2 * fw));
            theta += &proj.scale(xjk * (std::f64::consts::FRAC_PI_2 * fb));
        }
    }
    Ok(RateOperators::new(chi, theta, x.clone()))
}

/// `-[x, [chi, rho]] + [x, {Theta, rho}]` from nested commutators.
pub fn reference_dissipator(r: &RateOperators, rho: &Operator) -> Operator {
    use crate::densecx::{anticommutator, commutator};
    let a = commutator(r.x(), &commutator(r.chi(), rho));
    let b = commutator(r.x(), &anticommutator(r.theta(), rho));
    &b - &a
}
