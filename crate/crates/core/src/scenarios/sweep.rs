use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::par;

use super::config::{Scenario, SweepAxis};
use super::run::{run_comparison, RunArtifact};

/// Error of one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointError {
    pub exit_code: i32,
    pub message: String,
}

/// One point of the cartesian product, in axis order.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub index: usize,
    pub values: Vec<Value>,
    pub outcome: std::result::Result<RunArtifact, PointError>,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub axes: Vec<String>,
    pub points: Vec<SweepPoint>,
}

/// Scenarios of the cartesian product, last axis varying fastest. Every path
/// is checked before anything runs.
pub fn sweep_points(base: &Scenario, axes: &[SweepAxis]) -> Result<Vec<(Vec<Value>, Scenario)>> {
    if axes.is_empty() {
        return Err(Error::Config("sweep needs at least one axis".into()));
    }
    for a in axes {
        if a.values.is_empty() {
            return Err(Error::Config(format!(
                "sweep axis `{}` has no values",
                a.path
            )));
        }
    }
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let mut out = Vec::with_capacity(total);
    for k in 0..total {
        let mut rest = k;
        let mut idx = vec![0; axes.len()];
        for (j, a) in axes.iter().enumerate().rev() {
            idx[j] = rest % a.values.len();
            rest /= a.values.len();
        }
        let values: Vec<Value> = axes
            .iter()
            .zip(&idx)
            .map(|(a, &i)| a.values[i].clone())
            .collect();
        let sc = base.with_overrides(axes.iter().map(|a| a.path.as_str()).zip(&values))?;
        sc.check()?;
        out.push((values, sc));
    }
    Ok(out)
}

/// Run every point with at most `jobs` workers. Failed points are kept with
/// their error and do not stop the sweep.
pub fn run_sweep(base: &Scenario, axes: &[SweepAxis], jobs: Option<usize>) -> Result<SweepResult> {
    let points = sweep_points(base, axes)?;
    let outcomes = par::map(&points, jobs, |(_, sc)| {
        run_comparison(sc).map_err(|f| PointError {
            exit_code: f.error.exit_code(),
            message: f.error.to_string(),
        })
    });
    let points = points
        .into_iter()
        .zip(outcomes)
        .enumerate()
        .map(|(index, ((values, _), outcome))| SweepPoint {
            index,
            values,
            outcome,
        })
        .collect();
    Ok(SweepResult {
        axes: axes.iter().map(|a| a.path.clone()).collect(),
        points,
    })
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Serialize)]
struct PointRecord<'a> {
    index: usize,
    values: &'a [Value],
    dir: String,
    max_infidelity: Option<f64>,
    final_purity: Option<f64>,
    sigma_measure: Option<f64>,
    error: Option<&'a PointError>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.outcome.is_err()).count()
    }

    /// Largest exit code among failed points, 0 if none failed.
    pub fn exit_code(&self) -> i32 {
        self.points
            .iter()
            .filter_map(|p| p.outcome.as_ref().err())
            .map(|e| e.exit_code)
            .max()
            .unwrap_or(0)
    }

    /// `index, <axes...>, status, max_infidelity, final_purity, sigma_measure, error`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index");
        for a in &self.axes {
            s.push(',');
            s.push_str(&csv_cell(a));
        }
        s.push_str(",status,max_infidelity,final_purity,sigma_measure,error\n");
        for p in &self.points {
            let _ = write!(s, "{}", p.index);
            for v in &p.values {
                s.push(',');
                s.push_str(&csv_cell(&v.to_string()));
            }
            match &p.outcome {
                Ok(a) => {
                    let m = &a.summary;
                    let _ = writeln!(
                        s,
                        ",ok,{},{},{},",
                        num(m.max_infidelity),
                        num(m.final_purity),
                        num(m.sigma_measure)
                    );
                }
                Err(e) => {
                    let _ = writeln!(s, ",error,,,,{}", csv_cell(&e.message));
                }
            }
        }
        s
    }

    fn point_dir(index: usize) -> String {
        format!("point_{index:04}")
    }

    pub fn to_json(&self) -> String {
        let recs: Vec<PointRecord> = self
            .points
            .iter()
            .map(|p| {
                let m = p.outcome.as_ref().ok().map(|a| &a.summary);
                PointRecord {
                    index: p.index,
                    values: &p.values,
                    dir: Self::point_dir(p.index),
                    max_infidelity: m.map(|m| m.max_infidelity),
                    final_purity: m.map(|m| m.final_purity),
                    sigma_measure: m.map(|m| m.sigma_measure),
                    error: p.outcome.as_ref().err(),
                }
            })
            .collect();
        let v = serde_json::json!({ "axes": self.axes, "points": recs });
        serde_json::to_string_pretty(&v).expect("sweep serialises")
    }

    /// `sweep.csv`, `sweep.json` and one artifact directory per point.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for p in &self.points {
            if let Ok(a) = &p.outcome {
                a.write(&dir.join(Self::point_dir(p.index)))?;
            }
        }
        std::fs::write(dir.join("sweep.csv"), self.to_csv())?;
        std::fs::write(dir.join("sweep.json"), self.to_json())?;
        Ok(())
    }
}
