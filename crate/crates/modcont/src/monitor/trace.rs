//! Recorded time series of a run and its CSV/JSON outputs.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::scan::Breakthrough;
use crate::error::Result;
use crate::spectral::Field;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTrace {
    pub kind: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundExceedance {
    pub t: f64,
    pub kind: String,
    pub lipschitz: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupEvent {
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub scenario: String,
    pub dim: usize,
    pub n: usize,
    pub times: Vec<f64>,
    pub lipschitz: Vec<f64>,
    pub sup_norm: Vec<f64>,
    /// `lipschitz / g(t)^γ` for the drift-diffusion scaling, when armed.
    pub normalized: Option<Vec<f64>>,
    pub bounds: Vec<BoundTrace>,
    /// Whether a scan ran at the row, and whether it found a violation.
    pub scanned: Vec<bool>,
    pub flagged: Vec<bool>,
    pub breakthrough: Option<Breakthrough>,
    pub bound_exceeded: Option<BoundExceedance>,
    pub blowup: Option<BlowupEvent>,
    pub constants: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub steps: usize,
    /// Last state that passed the blowup checks.
    #[serde(skip)]
    pub final_state: Option<(f64, Field)>,
}

impl SimulationTrace {
    pub fn passed(&self) -> bool {
        self.breakthrough.is_none() && self.bound_exceeded.is_none() && self.blowup.is_none()
    }

    pub fn bound(&self, kind: &str) -> Option<&[f64]> {
        self.bounds
            .iter()
            .find(|b| b.kind == kind)
            .map(|b| b.values.as_slice())
    }

    /// Wide CSV: `t, lipschitz, sup_norm, [normalized,] bound_<KIND>…, breakthrough_flag`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string(), "lipschitz".into(), "sup_norm".into()];
        if self.normalized.is_some() {
            header.push("normalized".into());
        }
        header.extend(self.bounds.iter().map(|b| format!("bound_{}", b.kind)));
        header.push("breakthrough_flag".into());
        out.write_record(&header)?;
        for i in 0..self.times.len() {
            let mut row = vec![
                fmt(self.times[i]),
                fmt(self.lipschitz[i]),
                fmt(self.sup_norm[i]),
            ];
            if let Some(v) = &self.normalized {
                row.push(fmt(v[i]));
            }
            row.extend(self.bounds.iter().map(|b| fmt(b.values[i])));
            row.push(u8::from(self.flagged[i]).to_string());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Long CSV: one `t, series, value` row per recorded quantity.
    pub fn write_long_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "series", "value"])?;
        for (i, &t) in self.times.iter().enumerate() {
            let t = fmt(t);
            out.write_record([t.as_str(), "lipschitz", &fmt(self.lipschitz[i])])?;
            out.write_record([t.as_str(), "sup_norm", &fmt(self.sup_norm[i])])?;
            if let Some(v) = &self.normalized {
                out.write_record([t.as_str(), "normalized", &fmt(v[i])])?;
            }
            for b in &self.bounds {
                out.write_record([t.as_str(), &format!("bound_{}", b.kind), &fmt(b.values[i])])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Run summary without the time series.
    pub fn manifest(&self) -> serde_json::Value {
        serde_json::json!({
            "scenario": self.scenario,
            "dim": self.dim,
            "n": self.n,
            "rows": self.times.len(),
            "steps": self.steps,
            "t_final": self.times.last(),
            "passed": self.passed(),
            "breakthrough": self.breakthrough,
            "bound_exceeded": self.bound_exceeded,
            "blowup": self.blowup,
            "bounds": self.bounds.iter().map(|b| &b.kind).collect::<Vec<_>>(),
            "constants": self.constants,
            "notes": self.notes,
        })
    }
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}
