use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::densecx::{c64, Operator};
use crate::dissipator::{build_rate_operators, reference_dissipator, reference_rates};
use crate::error::{Error, Result};
use crate::evolve::{
    integrate_rk4_with, precession_error, propagate_spectral_with, Generator, Schedule,
};
use crate::hilbert::{product_state, spin_state, thermal_state, SpinState};
use crate::metrics::trace_distance;
use crate::models::{lab_hamiltonian, Hamiltonian, ModelSpec, Temperature};
use crate::spectral::{eval_underdamped, map_to_rc, reconstruct_sb, UnderdampedSD};
use crate::tol::Tolerances;
use crate::transforms::{conjugation_residues, FrameMap};

use super::config::Span;
use super::presets::preset;
use super::run::run_comparison;

/// Deliberate defects for checking that the suites catch them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Flip the sign of `Theta` in the pipeline rates.
    FlipTheta,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub measured: f64,
    /// Upper bound, or the accepted interval for two-sided checks.
    pub bound: Bound,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Bound {
    Max(f64),
    Range(f64, f64),
}

impl Bound {
    fn admits(self, v: f64) -> bool {
        match self {
            Bound::Max(b) => v <= b,
            Bound::Range(lo, hi) => (lo..=hi).contains(&v),
        }
    }

    /// Headroom: `bound / measured` for upper bounds, distance to the nearer
    /// edge for intervals.
    pub fn margin(self, v: f64) -> f64 {
        match self {
            Bound::Max(b) => {
                if v > 0.0 {
                    b / v
                } else {
                    f64::INFINITY
                }
            }
            Bound::Range(lo, hi) => (v - lo).min(hi - v),
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Max(b) => write!(f, "<= {b:.1e}"),
            Bound::Range(lo, hi) => write!(f, "in [{lo}, {hi}]"),
        }
    }
}

impl SuiteResult {
    fn new(name: &str, measured: f64, bound: Bound, detail: String) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
            pass: measured.is_finite() && bound.admits(measured),
            detail,
        }
    }

    fn errored(name: &str, bound: Bound, e: impl fmt::Display) -> Self {
        Self {
            name: name.into(),
            measured: f64::NAN,
            bound,
            pass: false,
            detail: format!("error: {e}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub strict: bool,
    pub suites: Vec<SuiteResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.pass)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.suites {
            write!(
                f,
                "{} {:<22} measured {:.3e} {}",
                if s.pass { "PASS" } else { "FAIL" },
                s.name,
                s.measured,
                s.bound
            )?;
            if self.strict {
                write!(f, " margin {:.3e}", s.bound.margin(s.measured))?;
            }
            if !s.detail.is_empty() {
                write!(f, "  ({})", s.detail)?;
            }
            writeln!(f)?;
        }
        let failed = self.suites.iter().filter(|s| !s.pass).count();
        write!(f, "{} suites, {} failed", self.suites.len(), failed)
    }
}

fn small_spec(
    preset_name: &str,
    fock: usize,
    temperature: Option<Temperature>,
) -> Result<ModelSpec> {
    let mut s = preset(preset_name)?;
    s.model.fock = vec![fock];
    if let Some(t) = temperature {
        s.model.temperature = t;
    }
    s.spec()
}

fn random_state(dims: &[usize], rng: &mut ChaCha8Rng) -> Operator {
    let g = Operator::from_fn(dims.to_vec(), |_, _| {
        c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
    .expect("dims");
    let p = g.matmul(&g.adjoint());
    let tr = p.trace().re;
    p.scale_real(1.0 / tr).hermitian_part()
}

fn lab_state(spec: &ModelSpec) -> Result<Operator> {
    let th = thermal_state(spec.beta_omega(0), spec.layout.boson_dims()[0])?;
    Ok(product_state(&[&spin_state(SpinState::Minus), &th.rho]).into_operator())
}

fn spectral_round_trip() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for width in [1e-3, 1e-2, 1e-1] {
        let sd = UnderdampedSD::from_pi_alpha(0.02, width, 1.0)?;
        let rc = map_to_rc(&sd);
        for k in 0..100 {
            let w = 10f64.powf(-2.0 + 3.0 * k as f64 / 99.0);
            let a = eval_underdamped(&sd, w)?;
            let b = reconstruct_sb(&rc, w)?;
            worst = worst.max((a - b).abs() / a.abs());
        }
    }
    Ok(worst)
}

fn frame_identities() -> Result<(f64, String)> {
    let mut s = preset("fig2a")?;
    s.model.fock = vec![16];
    let spec = s.spec()?;
    let res = conjugation_residues(&spec, &[0.0, 0.7, 1234.5])?;
    let (name, worst) =
        res.into_iter().fold(
            (String::new(), 0.0),
            |acc, (n, e)| if e > acc.1 { (n, e) } else { acc },
        );
    Ok((
        worst,
        format!("worst {name}, N = 16, |alpha| = {:.2}", spec.alpha().abs()),
    ))
}

fn rate_oracle() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for temp in [
        None,
        Some(Temperature::Zero),
        Some(Temperature::BetaOmega(0.5)),
    ] {
        let spec = small_spec("fig4", 12, temp)?;
        let h = lab_hamiltonian(&spec).at(0.0);
        let r = build_rate_operators(&h, &spec.layout, 0, &spec.rc[0], spec.beta)?;
        let o = reference_rates(&h, &spec.layout.position(0), &spec.rc[0], spec.beta)?;
        worst = worst
            .max((r.chi() - o.chi()).max_abs())
            .max((r.theta() - o.theta()).max_abs());
    }
    Ok(worst)
}

/// Framed dissipator of the pipeline against `Phi D_ref(Phi^dagger rho Phi) Phi^dagger`.
fn frame_covariance(fault: Option<Fault>, seed: u64) -> Result<f64> {
    let spec = small_spec("fig4", 8, Some(Temperature::BetaOmega(2.0)))?;
    let h = lab_hamiltonian(&spec).at(0.0);
    let mut rates = build_rate_operators(&h, &spec.layout, 0, &spec.rc[0], spec.beta)?;
    if fault == Some(Fault::FlipTheta) {
        rates = rates.with_flipped_theta();
    }
    let oracle = reference_rates(&h, &spec.layout.position(0), &spec.rc[0], spec.beta)?;
    let frame = FrameMap::new(&spec)?;
    let dims = spec.layout.dims();
    let gen = Generator::framed(
        Hamiltonian::Static(Operator::zeros(&dims)?),
        vec![frame.frame_rates(&rates)],
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for t in [0.0, 1.3, 77.7, 2.5e3] {
        let rho = random_state(&dims, &mut rng);
        let phi = frame.phi(t);
        let lab = phi.adjoint().conjugate(&rho);
        let expect = phi.conjugate(&reference_dissipator(&oracle, &lab));
        let got = gen.rhs(t, &rho);
        worst = worst.max((&got - &expect).max_abs() / expect.max_abs());
    }
    Ok(worst)
}

fn rk4_slope() -> Result<f64> {
    let e1 = precession_error(0.2, 20.0)?;
    let e2 = precession_error(0.1, 20.0)?;
    Ok((e1 / e2).log2())
}

fn integrator_agreement() -> Result<f64> {
    let spec = small_spec("fig4-scaled", 6, None)?;
    let h = lab_hamiltonian(&spec);
    let r = build_rate_operators(&h.at(0.0), &spec.layout, 0, &spec.rc[0], spec.beta)?;
    let gen = Generator::new(h, vec![r])?;
    let rho0 = lab_state(&spec)?;
    let tol = Tolerances::default();
    let sched = Schedule::new(20.0, 20, 2e-3)?;
    let mut a = Vec::new();
    let mut b = Vec::new();
    integrate_rk4_with(&gen, &rho0, &sched, &tol, |_, _, r| {
        a.push(r.clone());
        Ok(())
    })?;
    let (_, fallback) = propagate_spectral_with(&gen, &rho0, &sched, &tol, |_, _, r| {
        b.push(r.clone());
        Ok(())
    })?;
    if let Some(dt) = fallback {
        return Err(Error::InvalidParameter(format!(
            "spectral propagator fell back to RK4 at dt = {dt:e}"
        )));
    }
    let mut worst: f64 = 0.0;
    for (x, y) in a.iter().zip(&b) {
        worst = worst.max(trace_distance(x, y)?);
    }
    Ok(worst)
}

/// Worst conservation violation relative to its limit, over a dissipative
/// and a unitary short run.
fn conservation() -> Result<(f64, String)> {
    let mut worst: f64 = 0.0;
    let mut what = String::new();
    let mut min_eig: f64 = 0.0;
    for name in ["fig4-scaled", "fig2a-scaled"] {
        let mut s = preset(name)?;
        s.model.fock = vec![10];
        s.t_final = Span::Abs(200.0);
        s.records = 50;
        s.tolerances.negativity_clip = 1e-6;
        let a = run_comparison(&s).map_err(|f| f.error)?;
        let unitary = name.starts_with("fig2a");
        let d = &a.summary.diagnostics;
        for (side, g) in [
            ("lab", &d.lab),
            ("simulator", &d.simulator),
            ("target", &d.target),
        ] {
            min_eig = min_eig.min(g.min_eig);
            let mut checks = vec![
                ("trace", g.max_trace_drift / 1e-8),
                ("hermiticity", g.max_herm_residue / 1e-9),
                ("purity", (g.max_purity - 1.0).max(0.0) / 1e-9),
                ("tail", g.max_tail / 1e-6),
            ];
            if unitary {
                checks.push(("spectrum", g.spectrum_drift / 1e-8));
            }
            for (c, v) in checks {
                if v > worst {
                    worst = v;
                    what = format!("{name} {side} {c}");
                }
            }
        }
    }
    Ok((
        worst,
        format!("ratio to limit, worst {what}, min eigenvalue {min_eig:.1e}"),
    ))
}

/// Run every suite. `strict` tightens each bound tenfold and reports margins.
pub fn validate(strict: bool, fault: Option<Fault>, seed: u64) -> ValidationReport {
    crate::par::sequential_linalg();
    let k = if strict { 0.1 } else { 1.0 };
    let mut suites = Vec::new();
    let mut push = |name: &str, bound: Bound, r: Result<(f64, String)>| {
        suites.push(match r {
            Ok((v, detail)) => SuiteResult::new(name, v, bound, detail),
            Err(e) => SuiteResult::errored(name, bound, e),
        });
    };
    let plain = |r: Result<f64>| r.map(|v| (v, String::new()));
    push(
        "spectral-round-trip",
        Bound::Max(1e-12 * k),
        plain(spectral_round_trip()),
    );
    push("frame-identities", Bound::Max(1e-8 * k), frame_identities());
    push("rate-oracle", Bound::Max(1e-12 * k), plain(rate_oracle()));
    push(
        "frame-covariance",
        Bound::Max(1e-10 * k),
        plain(frame_covariance(fault, seed)),
    );
    let slope = if strict {
        Bound::Range(3.9, 4.1)
    } else {
        Bound::Range(3.8, 4.2)
    };
    push("rk4-order", slope, plain(rk4_slope()));
    push(
        "integrator-agreement",
        Bound::Max(1e-7 * k),
        plain(integrator_agreement()),
    );
    push("conservation", Bound::Max(k), conservation());
    ValidationReport { strict, suites }
}
