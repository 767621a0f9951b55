use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::evolve::Integrator;
use crate::hilbert::SpinState;
use crate::models::{transfer_time, ModelConfig, ModelSpec};
use crate::tol::Tolerances;

use super::presets::preset;

/// Only accepted value of the `schema` key.
pub const SCHEMA: u32 = 1;

/// Run length in units of the transfer time `tau_n` or in absolute time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Span {
    Tau(f64),
    Abs(f64),
}

fn default_initial() -> SpinState {
    SpinState::Minus
}

fn default_records() -> usize {
    400
}

/// A fully resolved scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub model: ModelConfig,
    pub t_final: Span,
    /// Recording intervals after `t = 0`.
    #[serde(default = "default_records")]
    pub records: usize,
    /// RK4 step of the lab-frame side.
    #[serde(default)]
    pub dt: Option<f64>,
    /// RK4 step of the multiphoton-frame side.
    #[serde(default)]
    pub target_dt: Option<f64>,
    #[serde(default)]
    pub integrator: Integrator,
    /// Lab-frame spin state; the RCs start thermal.
    #[serde(default = "default_initial")]
    pub initial: SpinState,
    /// Lab-frame spin pair for the trace-distance witness.
    #[serde(default)]
    pub witness: Option<[SpinState; 2]>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    pub fn spec(&self) -> Result<ModelSpec> {
        self.model.validate()
    }

    /// Final time for a validated spec.
    pub fn t_final_for(&self, spec: &ModelSpec) -> Result<f64> {
        let t = match self.t_final {
            Span::Tau(k) => k * transfer_time(spec, spec.n_photon)?,
            Span::Abs(t) => t,
        };
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Config(format!("t_final resolves to {t}")));
        }
        Ok(t)
    }

    /// Structural checks that need no propagation.
    pub fn check(&self) -> Result<ModelSpec> {
        if self.records < 2 {
            return Err(Error::Config(format!(
                "need at least 2 records, got {}",
                self.records
            )));
        }
        for (name, v) in [("dt", self.dt), ("target_dt", self.target_dt)] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if let Some([a, b]) = self.witness {
            if a == b {
                return Err(Error::Config(
                    "witness pair needs two different states".into(),
                ));
            }
        }
        let spec = self.spec()?;
        self.t_final_for(&spec)?;
        Ok(spec)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("scenario serialises")
    }

    pub fn from_value(v: Value) -> Result<Self> {
        Ok(serde_json::from_value(v)?)
    }

    /// Copy with every `(path, value)` applied.
    pub fn with_overrides<'a>(
        &self,
        sets: impl IntoIterator<Item = (&'a str, &'a Value)>,
    ) -> Result<Self> {
        let mut v = self.to_value();
        for (path, val) in sets {
            set_path(&mut v, path, val.clone())?;
        }
        Self::from_value(v)
    }
}

/// One sweep axis: a dotted path into the resolved scenario and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub path: String,
    pub values: Vec<Value>,
}

/// Configuration file contents.
///
/// Either `preset` or `model` + `t_final` must be present. Scalar keys
/// override the preset, then `set` applies dotted-path overrides in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: u32,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub t_final: Option<Span>,
    #[serde(default)]
    pub records: Option<usize>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub target_dt: Option<f64>,
    #[serde(default)]
    pub integrator: Option<Integrator>,
    #[serde(default)]
    pub initial: Option<SpinState>,
    #[serde(default)]
    pub witness: Option<[SpinState; 2]>,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub set: BTreeMap<String, Value>,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn for_preset(name: &str) -> Self {
        Self {
            schema: SCHEMA,
            preset: Some(name.to_string()),
            name: None,
            model: None,
            t_final: None,
            records: None,
            dt: None,
            target_dt: None,
            integrator: None,
            initial: None,
            witness: None,
            tolerances: None,
            seed: None,
            set: BTreeMap::new(),
            sweep: Vec::new(),
            out: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        if c.schema != SCHEMA {
            return Err(Error::Config(format!(
                "unsupported schema {}, expected {SCHEMA}",
                c.schema
            )));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Resolve against the preset table and validate.
    pub fn resolve(&self) -> Result<Scenario> {
        let mut s = match (&self.preset, &self.model, self.t_final) {
            (Some(p), _, _) => preset(p)?,
            (None, Some(m), Some(t)) => Scenario {
                name: "custom".into(),
                model: m.clone(),
                t_final: t,
                records: default_records(),
                dt: None,
                target_dt: None,
                integrator: Integrator::default(),
                initial: default_initial(),
                witness: None,
                tolerances: Tolerances::default(),
                seed: 0,
            },
            _ => {
                return Err(Error::Config(
                    "need either `preset` or both `model` and `t_final`".into(),
                ))
            }
        };
        if let Some(v) = &self.name {
            s.name = v.clone();
        }
        if let Some(m) = &self.model {
            s.model = m.clone();
        }
        if let Some(v) = self.t_final {
            s.t_final = v;
        }
        if let Some(v) = self.records {
            s.records = v;
        }
        if self.dt.is_some() {
            s.dt = self.dt;
        }
        if self.target_dt.is_some() {
            s.target_dt = self.target_dt;
        }
        if let Some(v) = self.integrator {
            s.integrator = v;
        }
        if let Some(v) = self.initial {
            s.initial = v;
        }
        if self.witness.is_some() {
            s.witness = self.witness;
        }
        if let Some(v) = self.tolerances {
            s.tolerances = v;
        }
        if let Some(v) = self.seed {
            s.seed = v;
        }
        let s = s.with_overrides(self.set.iter().map(|(k, v)| (k.as_str(), v)))?;
        s.check()?;
        Ok(s)
    }
}

/// Replace the value at a dotted path. Every segment must already exist;
/// numeric segments index arrays.
pub fn set_path(root: &mut Value, path: &str, new: Value) -> Result<()> {
    if path.is_empty() {
        return Err(Error::Config("empty parameter path".into()));
    }
    let mut cur = root;
    for seg in path.split('.') {
        cur = match cur {
            Value::Object(map) => map.get_mut(seg),
            Value::Array(arr) => seg.parse::<usize>().ok().and_then(|i| arr.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| {
            Error::Config(format!(
                "parameter path `{path}` does not exist (at `{seg}`)"
            ))
        })?;
    }
    *cur = new;
    Ok(())
}
