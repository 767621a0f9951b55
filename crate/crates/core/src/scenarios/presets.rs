use crate::error::{Error, Result};
use crate::evolve::Integrator;
use crate::hilbert::SpinState;
use crate::models::{
    multiphoton_coupling, AutoKeyword, Delta0, ModelConfig, RcInput, Sideband, Temperature,
};
use crate::tol::Tolerances;

use super::config::{Scenario, Span};

/// Every preset name. `-scaled` variants multiply the slow scales by 10.
pub const PRESETS: [&str; 10] = [
    "fig2a",
    "fig2a-scaled",
    "fig2c",
    "fig2c-scaled",
    "fig2d",
    "fig2d-scaled",
    "fig3",
    "fig3-scaled",
    "fig4",
    "fig4-scaled",
];

const SCALE: f64 = 10.0;
const PI_ALPHA: f64 = 0.02;
const LAMB_DICKE: f64 = 0.2;

fn rc(pi_alpha: f64, width: f64, omega0: f64) -> RcInput {
    RcInput {
        pi_alpha,
        width,
        omega0,
        cutoff: None,
    }
}

fn base(name: &str, model: ModelConfig) -> Scenario {
    Scenario {
        name: name.to_string(),
        model,
        t_final: Span::Tau(2.0),
        records: 400,
        dt: None,
        target_dt: None,
        integrator: Integrator::Spectral,
        initial: SpinState::Minus,
        witness: None,
        tolerances: Tolerances::default(),
        seed: 0,
    }
}

fn two_photon(scale: f64, width_ratio: f64) -> ModelConfig {
    let nu = 1e-3 * scale;
    ModelConfig {
        n_photon: 2,
        sideband: Sideband::Red,
        epsilon0: 0.02 * scale,
        delta0: Delta0::Auto(AutoKeyword::Auto),
        nu_tilde: nu,
        omega_tilde: 2.0 * nu,
        rcs: vec![rc(PI_ALPHA, width_ratio * nu, 1.0)],
        temperature: Temperature::NTh(1e-3),
        fock: vec![15],
        drivings: Vec::new(),
    }
}

/// Three-photon model with `nu = 10 g_3` and `omega = 3 nu`.
fn three_photon(epsilon0: f64, scale: f64) -> ModelConfig {
    let eps = epsilon0 * scale;
    let nu = 10.0 * multiphoton_coupling(eps, LAMB_DICKE, 3);
    ModelConfig {
        n_photon: 3,
        sideband: Sideband::Red,
        epsilon0: eps,
        delta0: Delta0::Auto(AutoKeyword::Auto),
        nu_tilde: nu,
        omega_tilde: 3.0 * nu,
        rcs: vec![rc(PI_ALPHA, 0.0, 1.0)],
        temperature: Temperature::BetaOmega(100.0),
        fock: vec![12],
        drivings: Vec::new(),
    }
}

/// Two RCs with `nu = Omega_2` and `g_2 = 0.2 nu`.
fn two_mode(scale: f64) -> ModelConfig {
    let eps = 1e-2 * scale;
    let nu = 5.0 * multiphoton_coupling(eps, LAMB_DICKE, 2);
    ModelConfig {
        n_photon: 2,
        sideband: Sideband::Red,
        epsilon0: eps,
        delta0: Delta0::Value(-2.0),
        nu_tilde: nu,
        omega_tilde: 2.0 * nu,
        rcs: vec![rc(PI_ALPHA, 0.0, 1.0), rc(PI_ALPHA * nu, 0.0, nu)],
        temperature: Temperature::Zero,
        fock: vec![8, 6],
        drivings: Vec::new(),
    }
}

/// Look up a preset by name.
pub fn preset(name: &str) -> Result<Scenario> {
    let (stem, scale) = match name.strip_suffix("-scaled") {
        Some(s) => (s, SCALE),
        None => (name, 1.0),
    };
    let s = match stem {
        "fig2a" => base(name, two_photon(scale, 0.0)),
        "fig2c" => base(name, three_photon(2e-3, scale)),
        "fig2d" => base(name, three_photon(1e-2, scale)),
        "fig3" => Scenario {
            witness: Some([SpinState::E, SpinState::G]),
            ..base(name, two_mode(scale))
        },
        "fig4" => base(name, two_photon(scale, 0.2)),
        _ => {
            return Err(Error::Config(format!(
                "unknown preset `{name}`; known: {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(s)
}
