//! Hamiltonians of every frame and the multiphoton scalar relations.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::densecx::{c64, cr, Operator};
use crate::error::{Error, Result};
use crate::hilbert::{beta_omega_from_nth, displacement, ladder, pauli, Pauli, SpaceLayout};
use crate::spectral::{map_to_rc, OhmicRcSD, RcParams, UnderdampedSD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sideband {
    #[default]
    Red,
    Blue,
}

impl Sideband {
    fn sign(self) -> f64 {
        match self {
            Sideband::Red => 1.0,
            Sideband::Blue => -1.0,
        }
    }
}

/// Extra spin driving with amplitude `epsilon` at frequency `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Driving {
    pub epsilon: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AutoKeyword {
    #[serde(rename = "auto")]
    Auto,
}

/// Spin splitting: a number or `"auto"` for the resonance rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Delta0 {
    Value(f64),
    Auto(AutoKeyword),
}

impl Default for Delta0 {
    fn default() -> Self {
        Delta0::Auto(AutoKeyword::Auto)
    }
}

/// Bath temperature, given relative to the first RC frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Temperature {
    /// Thermal occupation of RC 1; zero is the vacuum.
    NTh(f64),
    /// `beta * Omega_1`.
    BetaOmega(f64),
    Beta(f64),
    Zero,
}

/// One reaction coordinate given through its underdamped spin-boson density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RcInput {
    pub pi_alpha: f64,
    #[serde(rename = "Gamma", default)]
    pub width: f64,
    pub omega0: f64,
    #[serde(default)]
    pub cutoff: Option<f64>,
}

impl RcInput {
    pub fn to_params(&self) -> Result<RcParams> {
        let sd = UnderdampedSD::from_pi_alpha(self.pi_alpha, self.width, self.omega0)?;
        let mut rc = map_to_rc(&sd);
        rc.residual = OhmicRcSD::new(rc.residual.gamma, self.cutoff)?;
        Ok(rc)
    }
}

/// Scenario physics as written in a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n_photon: usize,
    #[serde(default)]
    pub sideband: Sideband,
    pub epsilon0: f64,
    #[serde(default)]
    pub delta0: Delta0,
    pub nu_tilde: f64,
    pub omega_tilde: f64,
    pub rcs: Vec<RcInput>,
    pub temperature: Temperature,
    pub fock: Vec<usize>,
    #[serde(default)]
    pub drivings: Vec<Driving>,
}

/// Validated scenario physics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    pub n_photon: usize,
    pub sideband: Sideband,
    pub epsilon0: f64,
    pub delta0: f64,
    pub nu_tilde: f64,
    pub omega_tilde: f64,
    pub rc: Vec<RcParams>,
    /// Inverse temperature; may be infinite.
    #[serde(serialize_with = "ser_beta")]
    pub beta: f64,
    pub layout: SpaceLayout,
    pub drivings: Vec<Driving>,
    /// `2 lambda_1 / Omega_1`.
    pub lamb_dicke: f64,
    /// `epsilon_0 / (2 |Omega_1 - nu|)`.
    pub rwa: f64,
    pub warnings: Vec<String>,
}

fn ser_beta<S: serde::Serializer>(b: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if b.is_finite() {
        s.serialize_f64(*b)
    } else {
        s.serialize_str("inf")
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<ModelSpec> {
        if self.n_photon == 0 {
            return Err(Error::InvalidParameter("photon order must be >= 1".into()));
        }
        if self.rcs.is_empty() || self.rcs.len() > 2 {
            return Err(Error::InvalidParameter(format!(
                "need 1 or 2 reaction coordinates, got {}",
                self.rcs.len()
            )));
        }
        if self.fock.len() != self.rcs.len() {
            return Err(Error::InvalidParameter(format!(
                "{} Fock truncations for {} reaction coordinates",
                self.fock.len(),
                self.rcs.len()
            )));
        }
        for (name, v) in [
            ("epsilon0", self.epsilon0),
            ("nu_tilde", self.nu_tilde),
            ("omega_tilde", self.omega_tilde),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        let rc = self
            .rcs
            .iter()
            .map(RcInput::to_params)
            .collect::<Result<Vec<_>>>()?;
        let layout = SpaceLayout::new(self.fock.clone())?;
        if self.n_photon >= self.fock[0] {
            return Err(Error::InvalidParameter(format!(
                "photon order {} needs a truncation above {}",
                self.n_photon, self.fock[0]
            )));
        }
        let omega1 = rc[0].omega;
        let beta = match self.temperature {
            Temperature::NTh(n) if n >= 0.0 => beta_omega_from_nth(n) / omega1,
            Temperature::BetaOmega(b) if b > 0.0 => b / omega1,
            Temperature::Beta(b) if b > 0.0 => b,
            Temperature::Zero => f64::INFINITY,
            t => {
                return Err(Error::InvalidParameter(format!(
                    "invalid temperature {t:?}"
                )))
            }
        };
        let auto = self.sideband.sign() * self.n_photon as f64 * (self.nu_tilde - omega1)
            - self.omega_tilde;
        let delta0 = match self.delta0 {
            Delta0::Value(v) => v,
            Delta0::Auto(_) => auto,
        };
        let lamb_dicke = rc[0].lamb_dicke();
        let rwa = self.epsilon0 / (2.0 * (omega1 - self.nu_tilde).abs());
        let mut warnings = Vec::new();
        if lamb_dicke > 0.3 {
            warnings.push(format!(
                "Lamb-Dicke parameter 2*lambda/Omega = {lamb_dicke:.3} exceeds 0.3"
            ));
        }
        if rwa > 0.1 {
            warnings.push(format!(
                "RWA indicator epsilon0/(2|Omega - nu|) = {rwa:.3} exceeds 0.1"
            ));
        }
        if (delta0 - auto).abs() > 1e-9 * auto.abs().max(1.0) {
            warnings.push(format!(
                "Delta0 = {delta0} is off the {}-photon resonance {auto}",
                self.n_photon
            ));
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(ModelSpec {
            n_photon: self.n_photon,
            sideband: self.sideband,
            epsilon0: self.epsilon0,
            delta0,
            nu_tilde: self.nu_tilde,
            omega_tilde: self.omega_tilde,
            rc,
            beta,
            layout,
            drivings: self.drivings.clone(),
            lamb_dicke,
            rwa,
            warnings,
        })
    }
}

impl ModelSpec {
    pub fn n_rcs(&self) -> usize {
        self.rc.len()
    }

    /// Displacement `alpha = -lambda_1 / Omega_1` of the frame map.
    pub fn alpha(&self) -> f64 {
        -self.rc[0].lambda / self.rc[0].omega
    }

    /// `beta * Omega_i`.
    pub fn beta_omega(&self, i: usize) -> f64 {
        self.beta * self.rc[i].omega
    }

    /// Every spin tone `(epsilon_j, Delta_j)` with `j = 0` the static bias.
    pub fn tones(&self) -> Vec<Driving> {
        let mut v = vec![Driving {
            epsilon: self.epsilon0,
            delta: self.delta0,
        }];
        v.extend(self.drivings.iter().copied());
        v
    }

    pub fn is_driven(&self) -> bool {
        self.drivings
            .iter()
            .any(|d| d.epsilon != 0.0 && d.delta != self.delta0)
    }

    /// Photon order and sideband for which `delta` is resonant, if any.
    pub fn resonance(&self, delta: f64) -> Option<(usize, Sideband)> {
        let detuning = self.nu_tilde - self.rc[0].omega;
        if detuning == 0.0 {
            return None;
        }
        let x = (delta + self.omega_tilde) / detuning;
        for (sb, val) in [(Sideband::Red, x), (Sideband::Blue, -x)] {
            let n = val.round();
            if n >= 1.0 && (val - n).abs() < 1e-6 {
                return Some((n as usize, sb));
            }
        }
        None
    }
}

pub type TimeDependent = Arc<dyn Fn(f64) -> Operator + Send + Sync>;

/// Static operator or a factory `t -> H(t)`.
#[derive(Clone)]
pub enum Hamiltonian {
    Static(Operator),
    Driven(TimeDependent),
}

impl fmt::Debug for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hamiltonian::Static(h) => f.debug_tuple("Static").field(&h.dims()).finish(),
            Hamiltonian::Driven(_) => f.write_str("Driven(..)"),
        }
    }
}

impl Hamiltonian {
    pub fn at(&self, t: f64) -> Operator {
        match self {
            Hamiltonian::Static(h) => h.clone(),
            Hamiltonian::Driven(f) => f(t),
        }
    }

    pub fn as_static(&self) -> Option<&Operator> {
        match self {
            Hamiltonian::Static(h) => Some(h),
            Hamiltonian::Driven(_) => None,
        }
    }
}

fn matrix_power(a: &Operator, n: usize) -> Operator {
    (0..n).fold(
        Operator::identity(&[a.dim()])
            .expect("dim >= 1")
            .with_dims(a.dims().to_vec())
            .unwrap(),
        |acc, _| acc.matmul(a),
    )
}

/// Spin part `(Delta0/2) sx + sum_j (eps_j/2)[cos((D_j - D0) t) sz + sin((D_j - D0) t) sy]`.
pub fn h_spin_drivings(spec: &ModelSpec, t: f64) -> Operator {
    let mut h = pauli(Pauli::X).scale_real(spec.delta0 / 2.0);
    let (sy, sz) = (pauli(Pauli::Y), pauli(Pauli::Z));
    for d in spec.tones() {
        let ph = (d.delta - spec.delta0) * t;
        h += &sz.scale_real(d.epsilon / 2.0 * ph.cos());
        h += &sy.scale_real(d.epsilon / 2.0 * ph.sin());
    }
    h
}

/// `sum_k Omega_k a_k^dagger a_k + lambda_k sx x_k` on the full layout.
fn rc_terms(spec: &ModelSpec) -> Operator {
    let l = &spec.layout;
    let sx = pauli(Pauli::X);
    let mut h = Operator::zeros(&l.dims()).unwrap();
    for (k, rc) in spec.rc.iter().enumerate() {
        h += &l.number(k).scale_real(rc.omega);
        h += &l.spin_op(&sx).matmul(&l.position(k)).scale_real(rc.lambda);
    }
    h
}

fn lab_hamiltonian_checked(spec: &ModelSpec) -> Hamiltonian {
    let l = spec.layout.clone();
    let bath = rc_terms(spec);
    if !spec.is_driven() {
        return Hamiltonian::Static(&l.spin_op(&h_spin_drivings(spec, 0.0)) + &bath);
    }
    let spec = spec.clone();
    Hamiltonian::Driven(Arc::new(move |t| {
        &l.spin_op(&h_spin_drivings(&spec, t)) + &bath
    }))
}

/// Spin plus one reaction coordinate.
pub fn h_s_rc(spec: &ModelSpec) -> Result<Hamiltonian> {
    if spec.n_rcs() != 1 {
        return Err(Error::InvalidParameter(
            "h_s_rc needs exactly one RC".into(),
        ));
    }
    Ok(lab_hamiltonian_checked(spec))
}

/// Spin plus two reaction coordinates.
pub fn h_s_prime(spec: &ModelSpec) -> Result<Hamiltonian> {
    if spec.n_rcs() != 2 {
        return Err(Error::InvalidParameter(
            "h_s_prime needs exactly two RCs".into(),
        ));
    }
    Ok(lab_hamiltonian_checked(spec))
}

/// Lab-frame Hamiltonian for either layout.
pub fn lab_hamiltonian(spec: &ModelSpec) -> Hamiltonian {
    lab_hamiltonian_checked(spec)
}

/// Rotating-frame Hamiltonian
/// `H_a(t) = sum_k [Omega_k n_k + lambda_k sx x_k] + sum_j (eps_j/2)[cos(D_j t) sz + sin(D_j t) sy]`.
pub fn h_a(spec: &ModelSpec, t: f64) -> Operator {
    let l = &spec.layout;
    let (sy, sz) = (pauli(Pauli::Y), pauli(Pauli::Z));
    let mut spin = Operator::zeros(&[2]).unwrap();
    for d in spec.tones() {
        spin += &sz.scale_real(d.epsilon / 2.0 * (d.delta * t).cos());
        spin += &sy.scale_real(d.epsilon / 2.0 * (d.delta * t).sin());
    }
    &l.spin_op(&spin) + &rc_terms(spec)
}

/// Closed form of `T^dagger H_a T` up to the constant `-lambda_1^2 / Omega_1`:
/// `Omega_1 n_1 + sum_j (eps_j/2)[s+ D(2 alpha) e^{-i D_j t} + h.c.]`, plus
/// `Omega_2 n_2 - lambda_2 sz x_2` with a second RC.
pub fn h_b(spec: &ModelSpec) -> Result<Hamiltonian> {
    let l = spec.layout.clone();
    let n1 = l.boson_dims()[0];
    let d2 = displacement(cr(2.0 * spec.alpha()), n1)?;
    let sp_d = l.spin_mode_op(&pauli(Pauli::Plus), 0, &d2);
    let mut free = l.number(0).scale_real(spec.rc[0].omega);
    if spec.n_rcs() == 2 {
        let rc2 = spec.rc[1];
        free += &l.number(1).scale_real(rc2.omega);
        free -= &l
            .spin_op(&pauli(Pauli::Z))
            .matmul(&l.position(1))
            .scale_real(rc2.lambda);
    }
    let tones = spec.tones();
    Ok(Hamiltonian::Driven(Arc::new(move |t| {
        let mut k = Operator::zeros(&l.dims()).unwrap();
        for d in &tones {
            k += &sp_d.scale(c64::from_polar(d.epsilon / 2.0, -d.delta * t));
        }
        &(&free + &k) + &k.adjoint()
    })))
}

/// `g_n = eps (2 lambda / Omega)^n / (2 n!)`.
pub fn multiphoton_coupling(epsilon: f64, lamb_dicke: f64, n: usize) -> f64 {
    epsilon * lamb_dicke.powi(n as i32) / (2.0 * factorial(n))
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub fn coupling_strength(spec: &ModelSpec, n: usize) -> f64 {
    multiphoton_coupling(spec.epsilon0, spec.lamb_dicke, n)
}

/// `tau_n = pi / (2 g_n sqrt(n!))`.
pub fn transfer_time(spec: &ModelSpec, n: usize) -> Result<f64> {
    let g = coupling_strength(spec, n);
    if !(g > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "coupling g_{n} = {g} must be positive"
        )));
    }
    Ok(std::f64::consts::PI / (2.0 * g * factorial(n).sqrt()))
}

/// Validity window `(k, k tau_n)` with `k = (2 lambda/Omega)^n n (Omega - nu) / (eps0 sqrt(n!))`.
pub fn validity_duration(spec: &ModelSpec, n: usize) -> Result<(f64, f64)> {
    let om = spec.rc[0].omega;
    if !(om > spec.nu_tilde) {
        return Err(Error::InvalidParameter(
            "validity estimate needs Omega > nu".into(),
        ));
    }
    let k = spec.lamb_dicke.powi(n as i32) * n as f64 * (om - spec.nu_tilde)
        / (spec.epsilon0 * factorial(n).sqrt());
    Ok((k, k * transfer_time(spec, n)?))
}

/// Spin-mode-1 part of the target model: free terms plus every resonant tone.
fn target_terms(spec: &ModelSpec) -> Result<Operator> {
    let l = &spec.layout;
    let n1 = l.boson_dims()[0];
    let (a, ad) = ladder(n1);
    let mut h = &l
        .spin_op(&pauli(Pauli::Z))
        .scale_real(spec.omega_tilde / 2.0)
        + &l.number(0).scale_real(spec.nu_tilde);
    let sp = pauli(Pauli::Plus);
    for (j, d) in spec.tones().iter().enumerate() {
        let (n, sb) = if j == 0 {
            (spec.n_photon, spec.sideband)
        } else {
            match spec.resonance(d.delta) {
                Some(r) => r,
                None => {
                    log::warn!(
                        "driving {j} at Delta = {} is off resonance and dropped",
                        d.delta
                    );
                    continue;
                }
            }
        };
        if n >= n1 {
            return Err(Error::InvalidParameter(format!(
                "photon order {n} needs a truncation above {n1}"
            )));
        }
        let g = multiphoton_coupling(d.epsilon, spec.lamb_dicke, n);
        let mode = match sb {
            Sideband::Red => matrix_power(&a, n),
            Sideband::Blue => matrix_power(&ad.scale_real(-1.0), n),
        };
        let term = l.spin_mode_op(&sp, 0, &mode).scale_real(g);
        h += &term;
        h += &term.adjoint();
    }
    Ok(h)
}

/// Multiphoton Jaynes-Cummings target with one RC.
pub fn h_n(spec: &ModelSpec) -> Result<Operator> {
    if spec.n_rcs() != 1 {
        return Err(Error::InvalidParameter("h_n needs exactly one RC".into()));
    }
    target_terms(spec)
}

/// Target with a second mode coupled through `-lambda_2 sz x_2`.
pub fn h_n2(spec: &ModelSpec) -> Result<Operator> {
    if spec.n_rcs() != 2 {
        return Err(Error::InvalidParameter("h_n2 needs exactly two RCs".into()));
    }
    let l = &spec.layout;
    let rc2 = spec.rc[1];
    let mut h = target_terms(spec)?;
    h += &l.number(1).scale_real(rc2.omega);
    h -= &l
        .spin_op(&pauli(Pauli::Z))
        .matmul(&l.position(1))
        .scale_real(rc2.lambda);
    Ok(h)
}

/// Target Hamiltonian for either layout.
pub fn target_hamiltonian(spec: &ModelSpec) -> Result<Operator> {
    match spec.n_rcs() {
        1 => h_n(spec),
        _ => h_n2(spec),
    }
}

/// `exp(-i H t) rho exp(i H t)` helper for tests and checks.
pub fn unitary_step(h: &Operator, t: f64) -> Result<Operator> {
    crate::densecx::unitary_exp(h, t)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::densecx::{hermitian_eigenvalues, kron, partial_trace};
    use crate::hilbert::{fock_ket, product_state, spin_state, SpinState};
    use approx::assert_abs_diff_eq;

    pub(crate) fn fig2a_config() -> ModelConfig {
        ModelConfig {
            n_photon: 2,
            sideband: Sideband::Red,
            epsilon0: 0.02,
            delta0: Delta0::default(),
            nu_tilde: 1e-3,
            omega_tilde: 2e-3,
            rcs: vec![RcInput {
                pi_alpha: 0.02,
                width: 0.0,
                omega0: 1.0,
                cutoff: None,
            }],
            temperature: Temperature::NTh(1e-3),
            fock: vec![10],
            drivings: vec![],
        }
    }

    pub(crate) fn fig3_config() -> ModelConfig {
        ModelConfig {
            n_photon: 2,
            sideband: Sideband::Red,
            epsilon0: 1e-2,
            delta0: Delta0::default(),
            nu_tilde: 5e-4,
            omega_tilde: 1e-3,
            rcs: vec![
                RcInput {
                    pi_alpha: 0.02,
                    width: 0.0,
                    omega0: 1.0,
                    cutoff: None,
                },
                RcInput {
                    pi_alpha: 0.02 * 5e-4,
                    width: 0.0,
                    omega0: 5e-4,
                    cutoff: None,
                },
            ],
            temperature: Temperature::Zero,
            fock: vec![6, 4],
            drivings: vec![],
        }
    }

    fn herm_ok(h: &Operator) -> bool {
        h.hermiticity_residue() < 1e-14
    }

    #[test]
    fn spec_validation() {
        let s = fig2a_config().validate().unwrap();
        assert_abs_diff_eq!(s.delta0, 2.0 * (1e-3 - 1.0) - 2e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(s.lamb_dicke, 0.2, epsilon = 1e-14);
        assert_abs_diff_eq!(s.beta, 1001f64.ln(), epsilon = 1e-12);
        assert!(s.warnings.is_empty());
        let mut c = fig2a_config();
        c.sideband = Sideband::Blue;
        assert_abs_diff_eq!(
            c.validate().unwrap().delta0,
            -2.0 * (1e-3 - 1.0) - 2e-3,
            epsilon = 1e-15
        );
        let mut c = fig2a_config();
        c.rcs[0].pi_alpha = 0.1;
        assert!(!c.validate().unwrap().warnings.is_empty());
        let mut c = fig2a_config();
        c.fock = vec![2];
        assert!(c.validate().is_err());
        let f3 = fig3_config().validate().unwrap();
        assert_abs_diff_eq!(f3.delta0, -2.0, epsilon = 1e-12);
        assert!(f3.beta.is_infinite());
    }

    #[test]
    fn config_json_round_trip() {
        let c = fig2a_config();
        let js = serde_json::to_string(&c).unwrap();
        assert!(js.contains("\"auto\""));
        let back: ModelConfig = serde_json::from_str(&js).unwrap();
        assert_eq!(back, c);
        let bad = js.replacen("\"n_photon\"", "\"bogus\":1,\"n_photon\"", 1);
        assert!(serde_json::from_str::<ModelConfig>(&bad).is_err());
        let explicit = js.replace("\"auto\"", "-1.5");
        let e: ModelConfig = serde_json::from_str(&explicit).unwrap();
        assert_eq!(e.delta0, Delta0::Value(-1.5));
    }

    #[test]
    fn spin_drivings() {
        let mut s = fig2a_config().validate().unwrap();
        let h = h_spin_drivings(&s, 0.0);
        assert_abs_diff_eq!(h.get(0, 0).re, 0.01, epsilon = 1e-16);
        assert_abs_diff_eq!(h.get(0, 1).re, s.delta0 / 2.0, epsilon = 1e-16);
        s.epsilon0 = 0.0;
        let h = h_spin_drivings(&s, 3.0);
        assert_eq!(
            (&h - &pauli(Pauli::X).scale_real(s.delta0 / 2.0)).max_abs(),
            0.0
        );
        s.drivings = vec![Driving {
            epsilon: 0.3,
            delta: s.delta0,
        }];
        assert!(!s.is_driven());
        let h1 = h_spin_drivings(&s, 0.0);
        let h2 = h_spin_drivings(&s, 17.0);
        assert!((&h1 - &h2).max_abs() < 1e-15);
        assert_abs_diff_eq!(h1.get(0, 0).re, 0.15, epsilon = 1e-16);
    }

    #[test]
    fn lab_hamiltonian_matches_index_builder() {
        let s = fig2a_config().validate().unwrap();
        let h = h_s_rc(&s).unwrap();
        let h = h.as_static().unwrap();
        assert!(herm_ok(h));
        let n = 10;
        let lam = s.rc[0].lambda;
        // Independent builder: index (spin, m) -> spin * n + m.
        for r in 0..2 * n {
            for c in 0..2 * n {
                let (s1, m1, s2, m2) = (r / n, r % n, c / n, c % n);
                let mut v = 0.0;
                if s1 == s2 && m1 == m2 {
                    v += if s1 == 0 { 0.01 } else { -0.01 } + m1 as f64;
                }
                if s1 != s2 {
                    if m1 == m2 {
                        v += s.delta0 / 2.0;
                    }
                    if m1 + 1 == m2 || m2 + 1 == m1 {
                        v += lam * (m1.max(m2) as f64).sqrt();
                    }
                }
                assert_abs_diff_eq!(h.get(r, c).re, v, epsilon = 1e-15);
                assert_eq!(h.get(r, c).im, 0.0);
            }
        }
    }

    #[test]
    fn decoupled_spectrum() {
        let mut c = fig2a_config();
        c.rcs[0].pi_alpha = 0.0;
        c.fock = vec![5];
        let s = c.validate().unwrap();
        let h = lab_hamiltonian(&s);
        let w = hermitian_eigenvalues(h.as_static().unwrap()).unwrap();
        let e = (s.epsilon0.powi(2) + s.delta0.powi(2)).sqrt() / 2.0;
        let mut expect: Vec<f64> = (0..5).flat_map(|m| [m as f64 - e, m as f64 + e]).collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in w.iter().zip(&expect) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn displaced_oscillator_spectrum_at_zero_splitting() {
        // Delta0 = 0 and eps = 0: H = Omega n + lambda sx x has levels m Omega - lambda^2 / Omega,
        // each doubly degenerate (sx = +-1). Truncation spoils the top levels only.
        let mut c = fig2a_config();
        c.delta0 = Delta0::Value(0.0);
        c.epsilon0 = 0.0;
        c.fock = vec![30];
        let s = c.validate().unwrap();
        let w = hermitian_eigenvalues(lab_hamiltonian(&s).as_static().unwrap()).unwrap();
        for m in 0..4 {
            let e = m as f64 - 0.01;
            assert_abs_diff_eq!(w[2 * m], e, epsilon = 1e-10);
            assert_abs_diff_eq!(w[2 * m + 1], e, epsilon = 1e-10);
        }
    }

    #[test]
    fn target_hamiltonian_elements() {
        let s = fig2a_config().validate().unwrap();
        let h = h_n(&s).unwrap();
        assert!(herm_ok(&h));
        let g2 = coupling_strength(&s, 2);
        assert_abs_diff_eq!(g2, 2e-4, epsilon = 1e-18);
        assert_abs_diff_eq!(g2, 0.2 * s.nu_tilde, epsilon = 1e-18);
        // <e,0| H |g,2> = g2 sqrt(2); |e,0> = 0, |g,2> = 10 + 2.
        assert_abs_diff_eq!(h.get(0, 12).re, g2 * 2f64.sqrt(), epsilon = 1e-18);
        assert_abs_diff_eq!(h.get(12, 0).re, g2 * 2f64.sqrt(), epsilon = 1e-18);

        let mut c = fig2a_config();
        c.n_photon = 1;
        c.sideband = Sideband::Blue;
        let s = c.validate().unwrap();
        let h = h_n(&s).unwrap();
        let g1 = coupling_strength(&s, 1);
        // sigma^+ (-a^dagger): <e,1| H |g,0> = -g1.
        assert_abs_diff_eq!(h.get(1, 10).re, -g1, epsilon = 1e-18);
        assert_abs_diff_eq!(
            g1,
            s.epsilon0 * s.rc[0].lambda / s.rc[0].omega,
            epsilon = 1e-18
        );

        let mut c = fig2a_config();
        c.epsilon0 = 0.0;
        let s = c.validate().unwrap();
        let h = h_n(&s).unwrap();
        let free = &s
            .layout
            .spin_op(&pauli(Pauli::Z))
            .scale_real(s.omega_tilde / 2.0)
            + &s.layout.number(0).scale_real(s.nu_tilde);
        assert_eq!((&h - &free).max_abs(), 0.0);
    }

    #[test]
    fn resonant_drivings_add_terms() {
        let mut s = fig2a_config().validate().unwrap();
        let blue1 = -(s.nu_tilde - 1.0) - s.omega_tilde;
        s.drivings = vec![
            Driving {
                epsilon: 0.01,
                delta: blue1,
            },
            Driving {
                epsilon: 0.01,
                delta: 0.123,
            },
        ];
        assert_eq!(s.resonance(blue1), Some((1, Sideband::Blue)));
        assert_eq!(s.resonance(0.123), None);
        let h = h_n(&s).unwrap();
        let g1 = multiphoton_coupling(0.01, 0.2, 1);
        assert_abs_diff_eq!(h.get(1, 10).re, -g1, epsilon = 1e-18);
        let hl = lab_hamiltonian(&s);
        assert!(hl.as_static().is_none());
        for t in [0.0, 1.3, 77.0] {
            assert!(herm_ok(&hl.at(t)));
        }
    }

    #[test]
    fn two_rc_constructors() {
        let s = fig3_config().validate().unwrap();
        let h = h_s_prime(&s).unwrap();
        let h = h.as_static().unwrap();
        assert!(herm_ok(h));
        assert!(h_s_rc(&s).is_err());
        let hn2 = h_n2(&s).unwrap();
        assert!(herm_ok(&hn2));
        let g2 = coupling_strength(&s, 2);
        assert_abs_diff_eq!(g2, 0.2 * s.nu_tilde, epsilon = 1e-16);
        // <e,0,1| H |e,0,0> = -lambda_2; <g,0,1| H |g,0,0> = +lambda_2.
        let lam2 = s.rc[1].lambda;
        assert_abs_diff_eq!(lam2, 5e-5, epsilon = 1e-16);
        assert_abs_diff_eq!(hn2.get(1, 0).re, -lam2, epsilon = 1e-18);
        assert_abs_diff_eq!(hn2.get(24 + 1, 24).re, lam2, epsilon = 1e-18);

        // lambda_2 = 0 reduces to the single-mode operators with a free mode 2.
        let mut c = fig3_config();
        c.rcs[1].pi_alpha = 0.0;
        let s2 = c.validate().unwrap();
        let mut c1 = fig3_config();
        c1.rcs.pop();
        c1.fock.pop();
        let s1 = c1.validate().unwrap();
        let free2 = crate::hilbert::number(4).scale_real(5e-4);
        let id2 = Operator::identity(&[4]).unwrap();
        let expect =
            &kron(&h_n(&s1).unwrap(), &id2) + &kron(&Operator::identity(&[2, 6]).unwrap(), &free2);
        assert!((&h_n2(&s2).unwrap() - &expect).max_abs() < 1e-16);
        let lab1 = lab_hamiltonian(&s1).as_static().unwrap().clone();
        let expect = &kron(&lab1, &id2) + &kron(&Operator::identity(&[2, 6]).unwrap(), &free2);
        assert!((h_s_prime(&s2).unwrap().as_static().unwrap() - &expect).max_abs() < 1e-15);
    }

    #[test]
    fn scalar_relations() {
        let s = fig2a_config().validate().unwrap();
        let tau = transfer_time(&s, 2).unwrap();
        assert_abs_diff_eq!(
            tau,
            std::f64::consts::PI / (4e-4 * 2f64.sqrt()),
            epsilon = 1e-9
        );
        assert!((tau - 5553.6).abs() < 0.05);
        let (k, t) = validity_duration(&s, 2).unwrap();
        assert_abs_diff_eq!(
            k,
            0.04 * 2.0 * (1.0 - 1e-3) / (0.02 * 2f64.sqrt()),
            epsilon = 1e-12
        );
        assert!((k - 2.83).abs() < 0.01);
        assert_abs_diff_eq!(t, k * tau, epsilon = 1e-9);
        let mut c = fig2a_config();
        c.epsilon0 = 0.04;
        let s2 = c.validate().unwrap();
        assert_abs_diff_eq!(transfer_time(&s2, 2).unwrap(), tau / 2.0, epsilon = 1e-9);
        assert!(validity_duration(&s2, 2).unwrap().0 < k);
        let mut c = fig2a_config();
        c.n_photon = 1;
        let s1 = c.validate().unwrap();
        assert_abs_diff_eq!(
            transfer_time(&s1, 1).unwrap(),
            std::f64::consts::PI / (2.0 * coupling_strength(&s1, 1)),
            epsilon = 1e-9
        );
        // Three photons at eps0 = 1e-2: k well below one.
        let mut c = fig2a_config();
        c.n_photon = 3;
        c.epsilon0 = 1e-2;
        let s3 = c.validate().unwrap();
        assert!(validity_duration(&s3, 3).unwrap().0 < 1.0);
    }

    #[test]
    fn factorizes_without_coupling() {
        let mut c = fig2a_config();
        c.rcs[0].pi_alpha = 0.0;
        c.fock = vec![4];
        let s = c.validate().unwrap();
        let u = unitary_step(lab_hamiltonian(&s).as_static().unwrap(), 3.7).unwrap();
        let rho0 = product_state(&[
            &spin_state(SpinState::Minus),
            &crate::hilbert::fock_state(1, 4).unwrap(),
        ]);
        let rho = u.conjugate(&rho0);
        let rs = partial_trace(&rho, &[0]).unwrap();
        let rb = partial_trace(&rho, &[1]).unwrap();
        assert!((&rho - &kron(&rs, &rb)).max_abs() < 1e-10);
        let _ = fock_ket(0, 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn constructors_hermitian(eps in 0.0f64..0.05, pa in 0.0f64..0.05, t in 0.0f64..1e3, two in any::<bool>()) {
                let mut c = if two { fig3_config() } else { fig2a_config() };
                c.epsilon0 = eps;
                c.rcs[0].pi_alpha = pa;
                let mut s = c.validate().unwrap();
                s.drivings = vec![Driving { epsilon: 0.01, delta: 0.37 }];
                prop_assert!(lab_hamiltonian(&s).at(t).hermiticity_residue() < 1e-14);
                prop_assert!(target_hamiltonian(&s).unwrap().hermiticity_residue() < 1e-14);
                prop_assert!(h_b(&s).unwrap().at(t).hermiticity_residue() < 1e-14);
                prop_assert!(h_a(&s, t).hermiticity_residue() < 1e-14);
            }
        }
    }
}
