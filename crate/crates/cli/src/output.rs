//! CSV and JSON artifacts. Every file is assembled in memory and written
//! atomically, so an interrupted run never leaves a truncated file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use dqs_core::io::{write_atomic, write_json_atomic};
use dqs_core::rewards::ObservableReport;
use dqs_core::statevec::{CircuitParams, StepAngles};

use crate::error::{RunnerError, RunnerResult};

/// Shortest decimal string that parses back to the same f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Table with a fixed header, written as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> RunnerResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        Ok(w.into_inner()?)
    }

    pub fn write(&self, path: &Path) -> RunnerResult<()> {
        Ok(write_atomic(path, &self.to_bytes()?)?)
    }
}

/// `tau,loschmidt,energy,mx,mz,nu,czz_mid`, then per-site `sx_j`, `sz_j`
/// and nearest-neighbour `czz_j` (bond j, j+1), sites counted from 0.
pub fn observable_header(n_qubits: usize) -> Vec<String> {
    let mut h: Vec<String> = ["tau", "loschmidt", "energy", "mx", "mz", "nu", "czz_mid"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((0..n_qubits).map(|j| format!("sx_{j}")));
    h.extend((0..n_qubits).map(|j| format!("sz_{j}")));
    h.extend((0..n_qubits.saturating_sub(1)).map(|j| format!("czz_{j}")));
    h
}

pub fn observable_row(tau: f64, r: &ObservableReport) -> Vec<String> {
    let mut row: Vec<String> = [tau, r.loschmidt, r.energy, r.mx, r.mz, r.nu, r.czz_mid]
        .iter()
        .map(|&x| fmt_f64(x))
        .collect();
    row.extend(r.sx.iter().chain(&r.sz).chain(&r.czz).map(|&x| fmt_f64(x)));
    row
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepFile {
    pub theta_xx: f64,
    pub theta_z: Vec<f64>,
    pub theta_x: Vec<f64>,
}

/// Circuit JSON: `{"n", "N", "alpha", "steps": [{"theta_xx", "theta_z", "theta_x"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitFile {
    pub n: usize,
    #[serde(rename = "N")]
    pub n_qubits: usize,
    pub alpha: f64,
    pub steps: Vec<StepFile>,
}

impl CircuitFile {
    pub fn from_circuit(c: &CircuitParams) -> Self {
        Self {
            n: c.n_steps(),
            n_qubits: c.n_qubits(),
            alpha: c.alpha(),
            steps: c
                .steps
                .iter()
                .map(|s| StepFile {
                    theta_xx: s.theta_xx,
                    theta_z: s.theta_z.clone(),
                    theta_x: s.theta_x.clone(),
                })
                .collect(),
        }
    }

    pub fn to_circuit(&self) -> dqs_core::Result<CircuitParams> {
        let c = CircuitParams::new(
            self.steps
                .iter()
                .map(|s| StepAngles {
                    theta_xx: s.theta_xx,
                    theta_z: s.theta_z.clone(),
                    theta_x: s.theta_x.clone(),
                    alpha: self.alpha,
                })
                .collect(),
        )?;
        if c.n_steps() != self.n || c.n_qubits() != self.n_qubits {
            return Err(dqs_core::DqsError::InvalidParameter(format!(
                "header says n={}, N={} but steps give n={}, N={}",
                self.n,
                self.n_qubits,
                c.n_steps(),
                c.n_qubits()
            )));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> RunnerResult<CircuitParams> {
        let text = std::fs::read_to_string(path).map_err(|e| RunnerError::Read {
            path: path.to_path_buf(),
            source: e,
        })?;
        let invalid = |reason: String| RunnerError::Circuit {
            path: path.to_path_buf(),
            reason,
        };
        let file: CircuitFile = serde_json::from_str(&text).map_err(|e| invalid(e.to_string()))?;
        file.to_circuit().map_err(|e| invalid(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> RunnerResult<()> {
        Ok(write_json_atomic(path, self)?)
    }
}
