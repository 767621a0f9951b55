use std::fmt;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::densecx::{DensityMatrix, Operator};
use crate::dissipator::build_rate_operators;
use crate::error::{Error, Result};
use crate::evolve::{
    integrate_rk4_with, propagate_spectral_with, suggest_dt, Diagnostics, Generator, Integrator,
    Recorder, Schedule, TimeSeries,
};
use crate::hilbert::{product_state, spin_state, thermal_state_with, SpinState};
use crate::metrics::{
    fidelity_tol, positive_intervals, positive_measure, sigma_noise, sigma_series, trace_distance,
    ComparisonSeries, SIGMA_MARGIN,
};
use crate::models::{
    lab_hamiltonian, target_hamiltonian, transfer_time, validity_duration, Hamiltonian, ModelSpec,
};
use crate::par;
use crate::tol::Tolerances;
use crate::transforms::FrameMap;

use super::config::Scenario;

/// Largest default RK4 step in the multiphoton frame.
pub const FRAMED_DT_MAX: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Method {
    Spectral,
    Rk4(f64),
}

impl Method {
    fn label(self) -> (String, Option<f64>) {
        match self {
            Method::Spectral => ("spectral".into(), None),
            Method::Rk4(dt) => ("rk4".into(), Some(dt)),
        }
    }
}

struct Setup {
    spec: ModelSpec,
    frame: FrameMap,
    lab: Generator,
    target: Generator,
    tau: f64,
    t_final: f64,
    records: usize,
    tol: Tolerances,
}

impl Setup {
    fn new(sc: &Scenario) -> Result<Self> {
        let spec = sc.check()?;
        let tau = transfer_time(&spec, spec.n_photon)?;
        let t_final = sc.t_final_for(&spec)?;
        let h = lab_hamiltonian(&spec);
        if spec.is_driven() {
            log::warn!("driven Hamiltonian: residual-bath rates are built from H(0)");
        }
        let h0 = h.at(0.0);
        let rates = (0..spec.n_rcs())
            .map(|i| build_rate_operators(&h0, &spec.layout, i, &spec.rc[i], spec.beta))
            .collect::<Result<Vec<_>>>()?;
        let frame = FrameMap::new(&spec)?;
        let framed = rates.iter().map(|r| frame.frame_rates(r)).collect();
        let target = Generator::framed(Hamiltonian::Static(target_hamiltonian(&spec)?), framed)?;
        let lab = Generator::new(h, rates)?;
        Ok(Self {
            spec,
            frame,
            lab,
            target,
            tau,
            t_final,
            records: sc.records,
            tol: sc.tolerances,
        })
    }

    fn initial_lab(&self, spin: SpinState) -> Result<Operator> {
        let mut parts = vec![spin_state(spin)];
        for (i, &n) in self.spec.layout.boson_dims().iter().enumerate() {
            parts.push(thermal_state_with(self.spec.beta_omega(i), n, self.tol.fock_tail)?.rho);
        }
        let refs: Vec<&DensityMatrix> = parts.iter().collect();
        Ok(product_state(&refs).into_operator())
    }

    /// Primary method and, for `both`, the cross-check.
    fn methods(
        &self,
        gen: &Generator,
        integrator: Integrator,
        dt: f64,
    ) -> (Method, Option<Method>) {
        match (integrator, gen.is_constant()) {
            (Integrator::Rk4, _) | (_, false) => (Method::Rk4(dt), None),
            (Integrator::Spectral, true) => (Method::Spectral, None),
            (Integrator::Both, true) => (Method::Spectral, Some(Method::Rk4(dt))),
        }
    }

    /// Returns the method that actually ran.
    fn propagate<F>(
        &self,
        gen: &Generator,
        rho0: &Operator,
        method: Method,
        observe: F,
    ) -> Result<Method>
    where
        F: FnMut(usize, f64, &Operator) -> Result<()>,
    {
        match method {
            Method::Spectral => {
                let s = Schedule::new(self.t_final, self.records, self.t_final)?;
                let (_, fallback) = propagate_spectral_with(gen, rho0, &s, &self.tol, observe)?;
                Ok(fallback.map_or(Method::Spectral, Method::Rk4))
            }
            Method::Rk4(dt) => {
                let s = Schedule::new(self.t_final, self.records, dt)?;
                integrate_rk4_with(gen, rho0, &s, &self.tol, observe)?;
                Ok(Method::Rk4(s.dt()))
            }
        }
    }

    /// Lab-frame run. Records lab observables and the `Phi`-mapped state.
    fn run_lab(&self, rho0: &Operator, method: Method, keep: Vec<usize>) -> Result<LabRun> {
        let layout = &self.spec.layout;
        let mut lab = Recorder::new(layout, &self.tol);
        let mut sim = Recorder::new(layout, &self.tol).keep_states(keep);
        let used = self.propagate(&self.lab, rho0, method, |_, t, rho| {
            lab.observe(t, rho)?;
            sim.observe(t, &self.frame.to_n(rho, t))
        })?;
        let (sim, states) = sim.finish();
        Ok(LabRun {
            lab: lab.finish().0,
            sim,
            states,
            used,
        })
    }

    fn run_target(&self, rho0: &Operator, method: Method, keep: Vec<usize>) -> Result<TargetRun> {
        let mut rec = Recorder::new(&self.spec.layout, &self.tol).keep_states(keep);
        let used = self.propagate(&self.target, rho0, method, |_, t, rho| rec.observe(t, rho))?;
        let (series, states) = rec.finish();
        Ok(TargetRun {
            series,
            states,
            used,
        })
    }
}

struct LabRun {
    lab: TimeSeries,
    sim: TimeSeries,
    states: Vec<Operator>,
    used: Method,
}

struct TargetRun {
    series: TimeSeries,
    states: Vec<Operator>,
    used: Method,
}

fn max_distance(a: &[Operator], b: &[Operator]) -> Result<f64> {
    let mut m: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        m = m.max(trace_distance(x, y)?);
    }
    Ok(m)
}

/// Diagnostics of the three recorded trajectories.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SideDiagnostics {
    pub lab: Diagnostics,
    pub simulator: Diagnostics,
    pub target: Diagnostics,
}

/// Non-Markovianity witness on the state with mode 2 traced out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub pair: [SpinState; 2],
    /// `[t_start, t_end]` of every detected `sigma > 0` interval.
    pub intervals_target: Vec<[f64; 2]>,
    pub intervals_simulator: Vec<[f64; 2]>,
    pub measure_target: f64,
    pub measure_simulator: f64,
    /// Same interval count, every endpoint within one record.
    pub intervals_agree: bool,
    pub max_infidelity: [f64; 2],
}

/// Witness trajectories: observables of the first state of the pair with
/// `tdist` and `sigma` between the pair.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessSeries {
    pub simulator: TimeSeries,
    pub target: TimeSeries,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub n_photon: usize,
    pub tau: f64,
    pub validity_k: Option<f64>,
    pub validity_time: Option<f64>,
    pub t_final: f64,
    pub records: usize,
    pub dt_record: f64,
    pub lab_integrator: String,
    pub lab_dt: Option<f64>,
    pub target_integrator: String,
    pub target_dt: Option<f64>,
    /// Max of `1 - fid` over `simulator.csv`.
    pub max_infidelity: f64,
    pub final_purity: f64,
    pub final_purity_target: f64,
    pub final_entropy_spin: f64,
    /// Positive part of the target witness `sigma`, zero without a witness.
    pub sigma_measure: f64,
    pub witness: Option<WitnessSummary>,
    /// Max trace distance between the two integrators under `both`.
    pub integrator_agreement: Option<f64>,
    pub diagnostics: SideDiagnostics,
    pub fock: Vec<usize>,
    pub max_tail: f64,
    pub warnings: Vec<String>,
    pub runtime_s: f64,
}

/// Everything one comparison run produces.
#[derive(Clone, Debug, PartialEq)]
pub struct RunArtifact {
    pub scenario: Scenario,
    pub summary: Summary,
    pub lab: TimeSeries,
    pub simulator: TimeSeries,
    pub target: TimeSeries,
    pub witness: Option<WitnessSeries>,
}

impl RunArtifact {
    pub fn config_json(&self) -> String {
        serde_json::to_string_pretty(&self.scenario).expect("scenario serialises")
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serialises")
    }

    /// Write `config.json`, `summary.json` and the CSV channels to `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("config.json"), self.config_json())?;
        std::fs::write(dir.join("summary.json"), self.summary_json())?;
        self.lab.write_csv(&dir.join("lab.csv"))?;
        self.simulator.write_csv(&dir.join("simulator.csv"))?;
        self.target.write_csv(&dir.join("target.csv"))?;
        if let Some(w) = &self.witness {
            w.simulator.write_csv(&dir.join("witness_simulator.csv"))?;
            w.target.write_csv(&dir.join("witness_target.csv"))?;
        }
        Ok(())
    }
}

/// A failed run with the resolved configuration attached.
#[derive(Clone, Debug, PartialEq)]
pub struct RunFailure {
    pub error: Error,
    pub config: Value,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [config: {}]", self.error, self.config)
    }
}

impl std::error::Error for RunFailure {}

/// `true` when both lists have the same length and matching endpoints
/// within `slack` records.
pub fn intervals_agree(a: &[(usize, usize)], b: &[(usize, usize)], slack: usize) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.0.abs_diff(y.0) <= slack && x.1.abs_diff(y.1) <= slack)
}

/// Propagate the lab model and the multiphoton target, map the former
/// through `Phi(t)` and compare.
pub fn run_comparison(sc: &Scenario) -> std::result::Result<RunArtifact, RunFailure> {
    par::sequential_linalg();
    run_inner(sc).map_err(|error| RunFailure {
        error,
        config: sc.to_value(),
    })
}

fn run_inner(sc: &Scenario) -> Result<RunArtifact> {
    let start = Instant::now();
    let st = Setup::new(sc)?;
    let lab_dt = match sc.dt {
        Some(dt) => dt,
        None => suggest_dt(&st.lab, Some(st.tau))?,
    };
    let target_dt = match sc.target_dt {
        Some(dt) => dt,
        None => suggest_dt(&st.target, Some(st.tau))?.min(FRAMED_DT_MAX),
    };
    let (lab_m, lab_check) = st.methods(&st.lab, sc.integrator, lab_dt);
    let (tgt_m, tgt_check) = st.methods(&st.target, sc.integrator, target_dt);

    let lab0 = st.initial_lab(sc.initial)?;
    let n0 = st.frame.to_n(&lab0, 0.0);
    let ((lab, lab_alt), (target, tgt_alt)) = par::join(
        || {
            par::join(
                || st.run_lab(&lab0, lab_m, Vec::new()),
                || {
                    lab_check
                        .map(|m| st.run_lab(&lab0, m, Vec::new()))
                        .transpose()
                },
            )
        },
        || {
            par::join(
                || st.run_target(&n0, tgt_m, Vec::new()),
                || {
                    tgt_check
                        .map(|m| st.run_target(&n0, m, Vec::new()))
                        .transpose()
                },
            )
        },
    );
    let (lab, target) = (lab?, target?);
    let mut warnings = st.spec.warnings.clone();
    for (side, asked, used) in [("lab", lab_m, lab.used), ("target", tgt_m, target.used)] {
        if let (Method::Spectral, Method::Rk4(dt)) = (asked, used) {
            warnings.push(format!("{side}: ill-conditioned Liouvillian, spectral propagation fell back to RK4 at dt = {dt:e}"));
        }
    }
    let mut agreement = None;
    for (side, primary, alt) in [
        (
            "lab",
            (&lab.states, lab.used),
            lab_alt?.map(|a| (a.states, a.used)),
        ),
        (
            "target",
            (&target.states, target.used),
            tgt_alt?.map(|a| (a.states, a.used)),
        ),
    ] {
        let Some((states, used)) = alt else { continue };
        if used == primary.1 {
            warnings.push(format!(
                "{side}: both integrators ran as RK4 with the same step; no cross-check"
            ));
            continue;
        }
        let d = max_distance(primary.0, &states)?;
        agreement = Some(agreement.map_or(d, |a: f64| a.max(d)));
    }

    let cmp = ComparisonSeries::from_pairs_tol(&lab.sim.t, &lab.states, &target.states, &st.tol)?;
    drop(lab.states);
    drop(target.states);
    let mut simulator = lab.sim;
    simulator.fid = Some(cmp.fidelity);
    simulator.tdist = Some(cmp.trace_distance);

    let witness = match sc.witness {
        Some(pair) => Some(run_witness(&st, pair, lab.used, target.used)?),
        None => None,
    };

    let max_infidelity = simulator
        .fid
        .as_deref()
        .unwrap_or(&[])
        .iter()
        .map(|f| 1.0 - f)
        .fold(0.0, f64::max);
    let (k, kt) = match validity_duration(&st.spec, st.spec.n_photon) {
        Ok((k, kt)) => (Some(k), Some(kt)),
        Err(_) => (None, None),
    };
    let (lab_integrator, lab_dt) = lab.used.label();
    let (target_integrator, target_dt) = target.used.label();
    let diagnostics = SideDiagnostics {
        lab: lab.lab.diagnostics,
        simulator: simulator.diagnostics,
        target: target.series.diagnostics,
    };
    let max_tail = [
        diagnostics.lab.max_tail,
        diagnostics.simulator.max_tail,
        diagnostics.target.max_tail,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let summary = Summary {
        name: sc.name.clone(),
        n_photon: st.spec.n_photon,
        tau: st.tau,
        validity_k: k,
        validity_time: kt,
        t_final: st.t_final,
        records: st.records,
        dt_record: st.t_final / st.records as f64,
        lab_integrator,
        lab_dt,
        target_integrator,
        target_dt,
        max_infidelity,
        final_purity: *simulator.purity_total.last().expect("records"),
        final_purity_target: *target.series.purity_total.last().expect("records"),
        final_entropy_spin: *simulator.entropy_spin.last().expect("records"),
        sigma_measure: witness.as_ref().map_or(0.0, |w| w.0.measure_target),
        witness: witness.as_ref().map(|w| w.0.clone()),
        integrator_agreement: agreement,
        diagnostics,
        fock: st.spec.layout.boson_dims().to_vec(),
        max_tail,
        warnings,
        runtime_s: start.elapsed().as_secs_f64(),
    };
    Ok(RunArtifact {
        scenario: sc.clone(),
        summary,
        lab: lab.lab,
        simulator,
        target: target.series,
        witness: witness.map(|w| w.1),
    })
}

fn run_witness(
    st: &Setup,
    pair: [SpinState; 2],
    lab_m: Method,
    tgt_m: Method,
) -> Result<(WitnessSummary, WitnessSeries)> {
    let keep = vec![0, 1];
    let lab0 = [st.initial_lab(pair[0])?, st.initial_lab(pair[1])?];
    let n0 = [st.frame.to_n(&lab0[0], 0.0), st.frame.to_n(&lab0[1], 0.0)];
    let ((sx, sy), (tx, ty)) = par::join(
        || {
            par::join(
                || st.run_lab(&lab0[0], lab_m, keep.clone()),
                || st.run_lab(&lab0[1], lab_m, keep.clone()),
            )
        },
        || {
            par::join(
                || st.run_target(&n0[0], tgt_m, keep.clone()),
                || st.run_target(&n0[1], tgt_m, keep.clone()),
            )
        },
    );
    let (sx, sy, tx, ty) = (sx?, sy?, tx?, ty?);
    let dt = st.t_final / st.records as f64;
    let t = &sx.sim.t;
    let fid = |a: &[Operator], b: &[Operator]| -> Result<Vec<f64>> {
        a.iter()
            .zip(b)
            .map(|(x, y)| fidelity_tol(x, y, &st.tol))
            .collect()
    };
    let dist = |a: &[Operator], b: &[Operator]| -> Result<Vec<f64>> {
        a.iter().zip(b).map(|(x, y)| trace_distance(x, y)).collect()
    };
    let d_sim = dist(&sx.states, &sy.states)?;
    let d_tgt = dist(&tx.states, &ty.states)?;
    let sig_sim = sigma_series(&d_sim, dt)?;
    let sig_tgt = sigma_series(&d_tgt, dt)?;
    let iv_sim = positive_intervals(&sig_sim, &sigma_noise(&d_sim, dt)?, SIGMA_MARGIN);
    let iv_tgt = positive_intervals(&sig_tgt, &sigma_noise(&d_tgt, dt)?, SIGMA_MARGIN);
    let fx = fid(&sx.states, &tx.states)?;
    let fy = fid(&sy.states, &ty.states)?;
    let worst = |f: &[f64]| f.iter().map(|v| 1.0 - v).fold(0.0, f64::max);
    let times = |iv: &[(usize, usize)]| iv.iter().map(|&(a, b)| [t[a], t[b]]).collect::<Vec<_>>();
    let summary = WitnessSummary {
        pair,
        intervals_target: times(&iv_tgt),
        intervals_simulator: times(&iv_sim),
        measure_target: positive_measure(&sig_tgt, dt),
        measure_simulator: positive_measure(&sig_sim, dt),
        intervals_agree: intervals_agree(&iv_sim, &iv_tgt, 1),
        max_infidelity: [worst(&fx), worst(&fy)],
    };
    let mut simulator = sx.sim;
    simulator.fid = Some(fx);
    simulator.tdist = Some(d_sim);
    simulator.sigma = Some(sig_sim);
    let mut target = tx.series;
    target.tdist = Some(d_tgt);
    target.sigma = Some(sig_tgt);
    Ok((summary, WitnessSeries { simulator, target }))
}
