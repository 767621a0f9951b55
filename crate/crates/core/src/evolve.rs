//! Master-equation propagation and observable recording.
//!
//! Two integrators share one time grid ([`Schedule`]): fixed-step RK4 for any
//! generator, and an exact spectral propagator for constant generators
//! (unitary eigenbasis when there is no dissipation, Liouvillian
//! eigendecomposition otherwise).

use std::borrow::Cow;
use std::fmt::Write as _;

use faer::linalg::solvers::{Solve, SolveLstsq};
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::densecx::{
    c64, hermitian_eig, hermitian_eigenvalues, partial_trace, HermitianEig, Operator, I,
};
use crate::dissipator::{apply_dissipator, build_liouvillian, RateOperators, RhsTerms};
use crate::error::{Error, Result};
use crate::hilbert::{fock_tail, SpaceLayout};
use crate::metrics::{purity, vn_entropy_tol};
use crate::models::Hamiltonian;
use crate::tol::Tolerances;
use crate::transforms::FramedRates;

/// Residual-bath terms of a generator.
#[derive(Clone, Debug)]
pub enum Dissipation {
    None,
    Static(Vec<RateOperators>),
    /// Rates seen through a time-dependent frame map.
    Framed(Vec<FramedRates>),
}

/// `rho' = -i[H(t), rho] + sum_k D_k(t)(rho)`.
#[derive(Clone, Debug)]
pub struct Generator {
    hamiltonian: Hamiltonian,
    dissipation: Dissipation,
    dims: Vec<usize>,
}

impl Generator {
    pub fn new(hamiltonian: Hamiltonian, rates: Vec<RateOperators>) -> Result<Self> {
        let dims = hamiltonian.at(0.0).dims().to_vec();
        let d: usize = dims.iter().product();
        if let Some(r) = rates.iter().find(|r| r.dim() != d) {
            return Err(Error::DimensionMismatch(format!(
                "rates of dimension {} for a generator of dimension {d}",
                r.dim()
            )));
        }
        let rates: Vec<_> = rates.into_iter().filter(|r| !r.is_zero()).collect();
        let dissipation = if rates.is_empty() {
            Dissipation::None
        } else {
            Dissipation::Static(rates)
        };
        let g = Self {
            hamiltonian,
            dissipation,
            dims,
        };
        g.check()?;
        Ok(g)
    }

    pub fn framed(hamiltonian: Hamiltonian, rates: Vec<FramedRates>) -> Result<Self> {
        let dims = hamiltonian.at(0.0).dims().to_vec();
        let rates: Vec<_> = rates.into_iter().filter(|r| !r.is_zero()).collect();
        let dissipation = if rates.is_empty() {
            Dissipation::None
        } else {
            Dissipation::Framed(rates)
        };
        let g = Self {
            hamiltonian,
            dissipation,
            dims,
        };
        g.check()?;
        Ok(g)
    }

    pub fn unitary(h: Operator) -> Self {
        let dims = h.dims().to_vec();
        Self {
            hamiltonian: Hamiltonian::Static(h),
            dissipation: Dissipation::None,
            dims,
        }
    }

    pub fn zero(dims: &[usize]) -> Result<Self> {
        Ok(Self::unitary(Operator::zeros(dims)?))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn dissipation(&self) -> &Dissipation {
        &self.dissipation
    }

    pub fn is_dissipative(&self) -> bool {
        !matches!(self.dissipation, Dissipation::None)
    }

    /// True when neither `H` nor the rates depend on time.
    pub fn is_constant(&self) -> bool {
        self.hamiltonian.as_static().is_some()
            && !matches!(self.dissipation, Dissipation::Framed(_))
    }

    fn h_at(&self, t: f64) -> Cow<'_, Operator> {
        match &self.hamiltonian {
            Hamiltonian::Static(h) => Cow::Borrowed(h),
            Hamiltonian::Driven(f) => Cow::Owned(f(t)),
        }
    }

    fn terms(&self, t: f64) -> Vec<RhsTerms<'_>> {
        match &self.dissipation {
            Dissipation::None => Vec::new(),
            Dissipation::Static(r) => r.iter().map(RateOperators::terms).collect(),
            Dissipation::Framed(r) => r.iter().map(|f| f.terms_at(t)).collect(),
        }
    }

    /// Right-hand side for a Hermitian `rho`: `K + K^dagger` with
    /// `K = -i H rho - sum (xP) rho + sum (x rho) Q`.
    pub fn rhs(&self, t: f64, rho: &Operator) -> Operator {
        let mut k = self.h_at(t).matmul(rho).scale(-I);
        for term in self.terms(t) {
            k -= &term.xp.matmul(rho);
            k += &term.x.matmul(rho).matmul(&term.q);
        }
        let kd = k.adjoint();
        k += &kd;
        k
    }

    /// Right-hand side without assuming Hermitian input.
    pub fn rhs_general(&self, t: f64, rho: &Operator) -> Operator {
        let h = self.h_at(t);
        let mut out = (&h.matmul(rho) - &rho.matmul(&h)).scale(-I);
        for term in self.terms(t) {
            // -xP rho + x rho Q + P rho x - rho Qx, with P = Q^dagger and Qx = (xP)^dagger.
            out -= &term.xp.matmul(rho);
            out += &term.x.matmul(rho).matmul(&term.q);
            out += &term.q.adjoint().matmul(rho).matmul(&term.x);
            out -= &rho.matmul(&term.xp.adjoint());
        }
        out
    }

    /// Trace-zero and Hermiticity-preserving on a few random states.
    fn check(&self) -> Result<()> {
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for k in 0..3 {
            let g = Operator::from_fn(self.dims.clone(), |_, _| {
                c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            })?;
            let rho = g.matmul(&g.adjoint());
            let rho = rho.scale_real(1.0 / rho.trace().re);
            let t = k as f64 * 0.37;
            let out = match &self.dissipation {
                Dissipation::Static(rates) => {
                    let h = self.h_at(t);
                    let mut out = (&h.matmul(&rho) - &rho.matmul(&h)).scale(-I);
                    for r in rates {
                        out += &apply_dissipator(r, &rho)?;
                    }
                    out
                }
                _ => self.rhs_general(t, &rho),
            };
            let scale = out.max_abs().max(1e-300) * d as f64;
            let tr = out.trace().norm();
            if tr > 1e-10 * scale.max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "generator is not trace preserving: |Tr L(rho)| = {tr:e}"
                )));
            }
            let herm = out.hermiticity_residue();
            if herm > 1e-10 * scale.max(1.0) {
                return Err(Error::NonHermitian { deviation: herm });
            }
        }
        Ok(())
    }
}

/// Uniform recording grid with a fixed number of RK4 steps per record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub t_final: f64,
    pub intervals: usize,
    pub steps_per_record: usize,
}

impl Schedule {
    /// `intervals` records after `t = 0`, each reached with steps no longer than `dt_max`.
    pub fn new(t_final: f64, intervals: usize, dt_max: f64) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t_final must be positive, got {t_final}"
            )));
        }
        if intervals == 0 {
            return Err(Error::InvalidParameter(
                "need at least one recording interval".into(),
            ));
        }
        if !(dt_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {dt_max}"
            )));
        }
        let per = t_final / intervals as f64;
        let steps_per_record = ((per / dt_max) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Ok(Self {
            t_final,
            intervals,
            steps_per_record,
        })
    }

    /// Grid from a step size and a recording cadence in steps.
    pub fn from_dt(t_final: f64, dt: f64, record_every: usize) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t_final must be positive, got {t_final}"
            )));
        }
        if !(dt > 0.0) || record_every == 0 {
            return Err(Error::InvalidParameter(format!(
                "invalid step {dt} / cadence {record_every}"
            )));
        }
        let steps = ((t_final / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let intervals = steps.div_ceil(record_every);
        Ok(Self {
            t_final,
            intervals,
            steps_per_record: record_every,
        })
    }

    pub fn dt(&self) -> f64 {
        self.t_final / (self.intervals * self.steps_per_record) as f64
    }

    pub fn dt_record(&self) -> f64 {
        self.t_final / self.intervals as f64
    }

    pub fn steps(&self) -> usize {
        self.intervals * self.steps_per_record
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.intervals)
            .map(|i| self.t_final * i as f64 / self.intervals as f64)
            .collect()
    }

    /// Same records, stepped no coarser than `dt_max`.
    pub fn refined(&self, dt_max: f64) -> Self {
        let per = self.dt_record();
        let spr = ((per / dt_max) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Self {
            steps_per_record: spr.max(self.steps_per_record),
            ..*self
        }
    }
}

/// Step size heuristic `min(0.02 / spread(H), tau / 2000)`.
pub fn suggest_dt(gen: &Generator, tau: Option<f64>) -> Result<f64> {
    let w = hermitian_eigenvalues(&gen.h_at(0.0))?;
    let spread = w.last().copied().unwrap_or(0.0) - w.first().copied().unwrap_or(0.0);
    let mut dt = if spread > 0.0 {
        0.02 / spread
    } else {
        f64::INFINITY
    };
    if let Some(tau) = tau {
        dt = dt.min(tau / 2000.0);
    }
    if !dt.is_finite() {
        dt = 0.01;
    }
    Ok(dt)
}

fn guard_trace(rho: &Operator, t: f64, tol: &Tolerances) -> Result<()> {
    let tr = rho.trace();
    if !tr.re.is_finite() || !tr.im.is_finite() {
        return Err(Error::NotFinite { t });
    }
    if (tr.re - 1.0).abs().max(tr.im.abs()) > tol.trace_drift {
        return Err(Error::TraceDrift { t, trace: tr.re });
    }
    Ok(())
}

fn rk4_step(gen: &Generator, t: f64, dt: f64, rho: &Operator) -> Operator {
    let k1 = gen.rhs(t, rho);
    let k2 = gen.rhs(t + 0.5 * dt, &(rho + &k1.scale_real(0.5 * dt)));
    let k3 = gen.rhs(t + 0.5 * dt, &(rho + &k2.scale_real(0.5 * dt)));
    let k4 = gen.rhs(t + dt, &(rho + &k3.scale_real(dt)));
    let mut incr = k1;
    incr += &k2.scale_real(2.0);
    incr += &k3.scale_real(2.0);
    incr += &k4;
    rho + &incr.scale_real(dt / 6.0)
}

/// Classic RK4. `observe(i, t_i, rho)` runs at every record, including `t = 0`.
pub fn integrate_rk4_with<F>(
    gen: &Generator,
    rho0: &Operator,
    sched: &Schedule,
    tol: &Tolerances,
    mut observe: F,
) -> Result<Operator>
where
    F: FnMut(usize, f64, &Operator) -> Result<()>,
{
    check_state_dims(gen, rho0)?;
    let dt = sched.dt();
    let mut rho = rho0.clone();
    guard_trace(&rho, 0.0, tol)?;
    observe(0, 0.0, &rho)?;
    let mut step = 0usize;
    for rec in 1..=sched.intervals {
        for _ in 0..sched.steps_per_record {
            let t = step as f64 * dt;
            rho = rk4_step(gen, t, dt, &rho);
            step += 1;
            guard_trace(&rho, step as f64 * dt, tol)?;
        }
        let t = sched.t_final * rec as f64 / sched.intervals as f64;
        if !rho.is_finite() {
            return Err(Error::NotFinite { t });
        }
        observe(rec, t, &rho)?;
    }
    Ok(rho)
}

/// Max error of `<sx>(t)` against `cos t` for RK4 on `H = sz/2` from `|+>`.
pub fn precession_error(dt: f64, t_final: f64) -> Result<f64> {
    use crate::hilbert::{pauli, spin_state, Pauli, SpinState};
    let gen = Generator::unitary(pauli(Pauli::Z).scale_real(0.5));
    let rho0 = spin_state(SpinState::Plus).into_operator();
    let sx = pauli(Pauli::X);
    let sched = Schedule::from_dt(t_final, dt, 1)?;
    let mut err: f64 = 0.0;
    integrate_rk4_with(&gen, &rho0, &sched, &Tolerances::default(), |_, t, r| {
        err = err.max((sx.matmul(r).trace().re - t.cos()).abs());
        Ok(())
    })?;
    Ok(err)
}

fn check_state_dims(gen: &Generator, rho: &Operator) -> Result<()> {
    if rho.dim() != gen.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} for a generator of dimension {}",
            rho.dim(),
            gen.dim()
        )));
    }
    Ok(())
}

/// Largest accepted eigenvector condition estimate of the Liouvillian.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Exact propagator of a constant generator.
#[derive(Clone, Debug)]
pub enum SpectralPropagator {
    /// `V (rho0~ o e^{-i(w_i - w_j)t}) V^dagger` with `rho0~ = V^dagger rho0 V`.
    Unitary { eig: HermitianEig, rho0: Operator },
    /// `vec rho(t) = R diag(e^{lambda t}) c` with `R c = vec rho0`.
    Liouvillian {
        dims: Vec<usize>,
        r: Mat<c64>,
        lambda: Vec<c64>,
        coeff: Vec<c64>,
        condition: f64,
    },
}

impl SpectralPropagator {
    pub fn new(gen: &Generator, rho0: &Operator) -> Result<Self> {
        check_state_dims(gen, rho0)?;
        let h = gen.hamiltonian.as_static().ok_or_else(|| {
            Error::InvalidParameter("spectral propagation needs a constant Hamiltonian".into())
        })?;
        match &gen.dissipation {
            Dissipation::None => {
                let eig = hermitian_eig(h)?;
                let v = &eig.vectors;
                let rho0 = v.adjoint().matmul(rho0).matmul(v);
                Ok(Self::Unitary { eig, rho0 })
            }
            Dissipation::Static(rates) => {
                let refs: Vec<&RateOperators> = rates.iter().collect();
                let l = build_liouvillian(h, &refs)?;
                let evd = l
                    .mat
                    .eigen()
                    .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
                let r = evd.U().to_owned();
                let s = evd.S().column_vector();
                let lambda: Vec<c64> = (0..l.side()).map(|i| s[i]).collect();
                let sv = r
                    .singular_values()
                    .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
                let smax = sv.iter().copied().fold(0.0, f64::max);
                let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
                let condition = if smin > 0.0 {
                    smax / smin
                } else {
                    f64::INFINITY
                };
                if !(condition <= CONDITION_LIMIT) {
                    return Err(Error::IllConditioned {
                        cond: condition,
                        limit: CONDITION_LIMIT,
                    });
                }
                let v0 = rho0.vec();
                let rhs = Mat::from_fn(v0.len(), 1, |i, _| v0[i]);
                let mut c = r.partial_piv_lu().solve(&rhs);
                let resid = (&r * &c - &rhs).norm_max();
                if resid > 1e-10 {
                    log::warn!("LU residual {resid:e}; switching to least squares");
                    c = r.qr().solve_lstsq(&rhs);
                }
                let coeff = (0..v0.len()).map(|i| c[(i, 0)]).collect();
                Ok(Self::Liouvillian {
                    dims: rho0.dims().to_vec(),
                    r,
                    lambda,
                    coeff,
                    condition,
                })
            }
            Dissipation::Framed(_) => Err(Error::InvalidParameter(
                "spectral propagation needs constant rates".into(),
            )),
        }
    }

    pub fn condition(&self) -> f64 {
        match self {
            Self::Unitary { .. } => 1.0,
            Self::Liouvillian { condition, .. } => *condition,
        }
    }

    pub fn at(&self, t: f64) -> Operator {
        match self {
            Self::Unitary { eig, rho0 } => {
                let w = &eig.values;
                let ph: Vec<c64> = w.iter().map(|&x| c64::from_polar(1.0, -x * t)).collect();
                let r = rho0.map(|i, j, z| z * ph[i] * ph[j].conj());
                eig.vectors.conjugate(&r)
            }
            Self::Liouvillian {
                dims,
                r,
                lambda,
                coeff,
                ..
            } => {
                let n = lambda.len();
                let e = Mat::from_fn(n, 1, |k, _| coeff[k] * (lambda[k] * t).exp());
                let v = r * &e;
                let flat: Vec<c64> = (0..n).map(|i| v[(i, 0)]).collect();
                Operator::unvec(dims, &flat).expect("square side")
            }
        }
    }
}

/// Spectral propagation on the records of `sched`. An ill-conditioned
/// Liouvillian eigenbasis falls back to RK4 with the heuristic step, which is
/// returned alongside the final state.
pub fn propagate_spectral_with<F>(
    gen: &Generator,
    rho0: &Operator,
    sched: &Schedule,
    tol: &Tolerances,
    mut observe: F,
) -> Result<(Operator, Option<f64>)>
where
    F: FnMut(usize, f64, &Operator) -> Result<()>,
{
    let prop = match SpectralPropagator::new(gen, rho0) {
        Ok(p) => p,
        Err(Error::IllConditioned { cond, limit }) => {
            log::warn!(
                "Liouvillian eigenbasis condition {cond:e} > {limit:e}; falling back to RK4"
            );
            let fine = sched.refined(suggest_dt(gen, None)?);
            let last = integrate_rk4_with(gen, rho0, &fine, tol, observe)?;
            return Ok((last, Some(fine.dt())));
        }
        Err(e) => return Err(e),
    };
    let mut last = rho0.clone();
    for (i, t) in sched.times().into_iter().enumerate() {
        last = prop.at(t);
        if !last.is_finite() {
            return Err(Error::NotFinite { t });
        }
        guard_trace(&last, t, tol)?;
        observe(i, t, &last)?;
    }
    Ok((last, None))
}

/// Integrator choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Rk4,
    #[default]
    Spectral,
    Both,
}

/// Observables of one state.
#[derive(Clone, Debug, PartialEq)]
pub struct Observables {
    pub n: Vec<f64>,
    pub sz: f64,
    pub purity_total: f64,
    pub purity_spin: f64,
    pub entropy_spin: f64,
    pub min_eig: f64,
    pub tail: f64,
    pub spectrum: Vec<f64>,
    pub trace: f64,
    pub imag_residue: f64,
    pub herm_residue: f64,
}

pub fn record_observables(rho: &Operator, layout: &SpaceLayout) -> Result<Observables> {
    record_observables_tol(rho, layout, &Tolerances::default())
}

pub fn record_observables_tol(
    rho: &Operator,
    layout: &SpaceLayout,
    tol: &Tolerances,
) -> Result<Observables> {
    if rho.dim() != layout.total_dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} on layout {:?}",
            rho.dim(),
            layout.dims()
        )));
    }
    let dims = layout.dims();
    let d = rho.dim();
    let mut n = vec![0.0; layout.n_modes()];
    let mut sz = 0.0;
    let mut imag: f64 = 0.0;
    let half = d / 2;
    for k in 0..d {
        let p = rho.get(k, k);
        imag = imag.max(p.im.abs());
        sz += if k < half { p.re } else { -p.re };
        let mut rest = k;
        for i in (0..layout.n_modes()).rev() {
            let f = dims[i + 1];
            n[i] += (rest % f) as f64 * p.re;
            rest /= f;
        }
    }
    let spin = partial_trace(rho, &[0])?;
    let spectrum = hermitian_eigenvalues(rho)?;
    let tail = (0..layout.n_modes())
        .map(|i| fock_tail(rho, layout, i))
        .fold(0.0, f64::max);
    Ok(Observables {
        n,
        sz,
        purity_total: purity(rho),
        purity_spin: purity(&spin),
        entropy_spin: vn_entropy_tol(&spin, tol)?,
        min_eig: spectrum.first().copied().unwrap_or(0.0),
        tail,
        spectrum,
        trace: rho.trace().re,
        imag_residue: imag,
        herm_residue: rho.hermiticity_residue(),
    })
}

/// Worst-case values seen over a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_trace_drift: f64,
    pub max_herm_residue: f64,
    pub max_purity: f64,
    pub max_tail: f64,
    pub min_eig: f64,
    pub max_imag_residue: f64,
    /// Max eigenvalue shift from the first record; meaningful for unitary runs.
    pub spectrum_drift: f64,
}

/// Recorded channels on a uniform grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub n: Vec<Vec<f64>>,
    pub sz: Vec<f64>,
    pub purity_total: Vec<f64>,
    pub purity_spin: Vec<f64>,
    pub entropy_spin: Vec<f64>,
    pub min_eig: Vec<f64>,
    pub tail: Vec<f64>,
    pub fid: Option<Vec<f64>>,
    pub tdist: Option<Vec<f64>>,
    pub sigma: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

const SIG: usize = 16;

impl TimeSeries {
    pub fn new(n_modes: usize) -> Self {
        Self {
            n: vec![Vec::new(); n_modes],
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn push(&mut self, t: f64, o: &Observables) {
        self.t.push(t);
        for (c, v) in self.n.iter_mut().zip(&o.n) {
            c.push(*v);
        }
        self.sz.push(o.sz);
        self.purity_total.push(o.purity_total);
        self.purity_spin.push(o.purity_spin);
        self.entropy_spin.push(o.entropy_spin);
        self.min_eig.push(o.min_eig);
        self.tail.push(o.tail);
        let dg = &mut self.diagnostics;
        if self.t.len() == 1 {
            dg.min_eig = o.min_eig;
        }
        dg.max_trace_drift = dg.max_trace_drift.max((o.trace - 1.0).abs());
        dg.max_herm_residue = dg.max_herm_residue.max(o.herm_residue);
        dg.max_purity = dg.max_purity.max(o.purity_total);
        dg.max_tail = dg.max_tail.max(o.tail);
        dg.min_eig = dg.min_eig.min(o.min_eig);
        dg.max_imag_residue = dg.max_imag_residue.max(o.imag_residue);
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((1..=self.n.len()).map(|i| format!("n{i}")));
        for c in [
            "sz",
            "purity_total",
            "purity_spin",
            "entropy_spin",
            "min_eig",
            "tail",
        ] {
            h.push(c.into());
        }
        for (name, c) in [
            ("fid", &self.fid),
            ("tdist", &self.tdist),
            ("sigma", &self.sigma),
        ] {
            if c.is_some() {
                h.push(name.into());
            }
        }
        h
    }

    fn columns(&self) -> Vec<&[f64]> {
        let mut cols: Vec<&[f64]> = vec![&self.t];
        cols.extend(self.n.iter().map(|c| c.as_slice()));
        cols.extend([
            self.sz.as_slice(),
            &self.purity_total,
            &self.purity_spin,
            &self.entropy_spin,
            &self.min_eig,
            &self.tail,
        ]);
        cols.extend(
            [&self.fid, &self.tdist, &self.sigma]
                .into_iter()
                .flatten()
                .map(|c| c.as_slice()),
        );
        cols
    }

    /// Comma-separated with a header row and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = self.header().join(",");
        s.push('\n');
        let cols = self.columns();
        for r in 0..self.len() {
            for (j, c) in cols.iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{:.*e}", SIG, c[r]);
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Config("empty CSV".into()))?
            .split(',')
            .collect();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
        for (ln, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != header.len() {
                return Err(Error::Config(format!(
                    "CSV row {} has {} cells, expected {}",
                    ln + 1,
                    cells.len(),
                    header.len()
                )));
            }
            for (c, v) in cols.iter_mut().zip(cells) {
                c.push(
                    v.trim()
                        .parse()
                        .map_err(|e| Error::Config(format!("CSV value {v:?}: {e}")))?,
                );
            }
        }
        let mut ts = TimeSeries::default();
        for (name, col) in header.into_iter().zip(cols) {
            match name {
                "t" => ts.t = col,
                "sz" => ts.sz = col,
                "purity_total" => ts.purity_total = col,
                "purity_spin" => ts.purity_spin = col,
                "entropy_spin" => ts.entropy_spin = col,
                "min_eig" => ts.min_eig = col,
                "tail" => ts.tail = col,
                "fid" => ts.fid = Some(col),
                "tdist" => ts.tdist = Some(col),
                "sigma" => ts.sigma = Some(col),
                n if n.starts_with('n') && n[1..].parse::<usize>().is_ok() => ts.n.push(col),
                other => return Err(Error::Config(format!("unknown CSV column {other:?}"))),
            }
        }
        Ok(ts)
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Observer that fills a [`TimeSeries`], enforces the truncation guard and
/// optionally keeps selected reduced states.
pub struct Recorder<'a> {
    layout: &'a SpaceLayout,
    tol: Tolerances,
    series: TimeSeries,
    keep: Option<Vec<usize>>,
    states: Vec<Operator>,
    spectrum0: Option<Vec<f64>>,
}

impl<'a> Recorder<'a> {
    pub fn new(layout: &'a SpaceLayout, tol: &Tolerances) -> Self {
        Self {
            layout,
            tol: *tol,
            series: TimeSeries::new(layout.n_modes()),
            keep: None,
            states: Vec::new(),
            spectrum0: None,
        }
    }

    /// Keep the partial trace over every factor not in `keep` at each record;
    /// an empty list keeps the full state.
    pub fn keep_states(mut self, keep: Vec<usize>) -> Self {
        self.keep = Some(keep);
        self
    }

    pub fn observe(&mut self, t: f64, rho: &Operator) -> Result<()> {
        let o = record_observables_tol(rho, self.layout, &self.tol)?;
        if o.tail > self.tol.fock_tail {
            return Err(Error::TruncationTooSmall {
                tail: o.tail,
                limit: self.tol.fock_tail,
            });
        }
        match &self.spectrum0 {
            None => self.spectrum0 = Some(o.spectrum.clone()),
            Some(s0) => {
                let drift = s0
                    .iter()
                    .zip(&o.spectrum)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                let dg = &mut self.series.diagnostics;
                dg.spectrum_drift = dg.spectrum_drift.max(drift);
            }
        }
        self.series.push(t, &o);
        if let Some(keep) = &self.keep {
            let s = if keep.is_empty() {
                rho.clone()
            } else {
                partial_trace(rho, keep)?
            };
            self.states.push(s);
        }
        Ok(())
    }

    pub fn finish(self) -> (TimeSeries, Vec<Operator>) {
        (self.series, self.states)
    }
}

/// RK4 with a standard recorder.
pub fn integrate_rk4(
    gen: &Generator,
    rho0: &Operator,
    sched: &Schedule,
    layout: &SpaceLayout,
    tol: &Tolerances,
) -> Result<(TimeSeries, Operator)> {
    let mut rec = Recorder::new(layout, tol);
    let last = integrate_rk4_with(gen, rho0, sched, tol, |_, t, r| rec.observe(t, r))?;
    Ok((rec.finish().0, last))
}

/// Spectral propagation with a standard recorder.
pub fn propagate_spectral(
    gen: &Generator,
    rho0: &Operator,
    sched: &Schedule,
    layout: &SpaceLayout,
    tol: &Tolerances,
) -> Result<(TimeSeries, Operator)> {
    let mut rec = Recorder::new(layout, tol);
    let (last, _) = propagate_spectral_with(gen, rho0, sched, tol, |_, t, r| rec.observe(t, r))?;
    Ok((rec.finish().0, last))
}
