//! Job configuration: one JSON document per experiment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use dqs_core::models::{EvolutionConfig, EvolutionMethod, HamiltonianSpec, Model};
use dqs_core::qlearn::{Hyperparameters, TrainConfig};
use dqs_core::rewards::{RewardKind, DEFAULT_ENTROPY_FLOOR};

use crate::error::{RunnerError, RunnerResult};

/// Exact-propagation settings (the evolution time comes from the job).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionOptions {
    pub method: EvolutionMethod,
    pub krylov_dim: usize,
    pub substep_tolerance: f64,
    pub dense_max_qubits: usize,
}

impl Default for EvolutionOptions {
    fn default() -> Self {
        let d = EvolutionConfig::default();
        Self {
            method: d.method,
            krylov_dim: d.krylov_dim,
            substep_tolerance: d.substep_tolerance,
            dense_max_qubits: d.dense_max_qubits,
        }
    }
}

impl EvolutionOptions {
    pub fn at(&self, tau: f64) -> EvolutionConfig {
        EvolutionConfig {
            tau,
            method: self.method,
            krylov_dim: self.krylov_dim,
            substep_tolerance: self.substep_tolerance,
            dense_max_qubits: self.dense_max_qubits,
        }
    }
}

/// Evenly spaced evolution times `start, …, stop` (`points` values).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauGrid {
    #[serde(default)]
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl TauGrid {
    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.start],
            p => (0..p)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (p - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    NQubits,
    Tau,
    N,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::NQubits => "n_qubits",
            SweepAxis::Tau => "tau",
            SweepAxis::N => "n",
        }
    }
}

/// Repeats the job once per value, each in its own `<axis>=<value>` subdirectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

fn default_n() -> usize {
    3
}

fn default_reward() -> RewardKind {
    RewardKind::Local
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("dqs-output")
}

fn default_floor() -> f64 {
    DEFAULT_ENTROPY_FLOOR
}

fn default_trotter_steps() -> Vec<usize> {
    vec![1, 2, 3, 4, 8, 16, 32, 64]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub model: Model,
    pub n_qubits: usize,
    pub tau: f64,
    /// Circuit layers (entangling gates) per episode.
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_reward")]
    pub reward: RewardKind,
    #[serde(default)]
    pub train: Hyperparameters,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Exponent of the entangling gate; defaults to the model's natural value.
    #[serde(default)]
    pub gate_alpha: Option<f64>,
    #[serde(default)]
    pub evolution: EvolutionOptions,
    #[serde(default = "default_floor")]
    pub entropy_floor: f64,
    /// Times reported by `evolve`; defaults to 21 points on [0, tau].
    #[serde(default)]
    pub tau_grid: Option<TauGrid>,
    /// Trotter step counts reported by `trotter` (n is always added).
    #[serde(default = "default_trotter_steps")]
    pub trotter_steps: Vec<usize>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
}

impl JobConfig {
    pub fn from_json(text: &str) -> RunnerResult<Self> {
        let cfg: JobConfig =
            serde_json::from_str(text).map_err(|e| RunnerError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> RunnerResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| RunnerError::Read {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> RunnerResult<()> {
        let bad = |m: String| Err(RunnerError::Config(m));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if !self.tau.is_finite() || self.tau < 0.0 {
            return bad(format!("tau must be finite and >= 0, got {}", self.tau));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return bad("sweep.values must not be empty".into());
            }
            for (_, job) in self.expand()? {
                job.validate_point()?;
            }
            return Ok(());
        }
        self.validate_point()
    }

    fn validate_point(&self) -> RunnerResult<()> {
        self.spec()?;
        self.train_config(0).validate()?;
        if let Some(grid) = &self.tau_grid {
            if !(grid.start.is_finite() && grid.stop.is_finite()) || grid.start < 0.0 {
                return Err(RunnerError::Config("tau_grid must be finite and >= 0".into()));
            }
        }
        if self.trotter_steps.contains(&0) {
            return Err(RunnerError::Config("trotter_steps must be >= 1".into()));
        }
        Ok(())
    }

    pub fn spec(&self) -> RunnerResult<HamiltonianSpec> {
        Ok(HamiltonianSpec::new(self.model, self.n_qubits)?)
    }

    pub fn gate_alpha(&self) -> RunnerResult<f64> {
        Ok(match self.gate_alpha {
            Some(a) => a,
            None => self.spec()?.default_gate_alpha(),
        })
    }

    pub fn evolution_at(&self, tau: f64) -> EvolutionConfig {
        self.evolution.at(tau)
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            hyper: self.train,
            n_steps: self.n,
            seed,
            reward_kind: self.reward,
            entropy_floor: self.entropy_floor,
        }
    }

    pub fn tau_values(&self) -> Vec<f64> {
        self.tau_grid
            .unwrap_or(TauGrid {
                start: 0.0,
                stop: self.tau,
                points: 21,
            })
            .values()
    }

    /// Sorted, deduplicated Trotter step counts including `n`.
    pub fn trotter_step_list(&self) -> Vec<usize> {
        let mut steps = self.trotter_steps.clone();
        steps.push(self.n);
        steps.sort_unstable();
        steps.dedup();
        steps
    }

    /// One concrete job per sweep point, paired with its subdirectory label;
    /// a config without a sweep yields itself with an empty label.
    pub fn expand(&self) -> RunnerResult<Vec<(String, JobConfig)>> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![(String::new(), self.clone())]);
        };
        sweep
            .values
            .iter()
            .map(|&v| {
                let mut job = self.clone();
                job.sweep = None;
                let as_count = || {
                    if v >= 0.0 && v.fract() == 0.0 {
                        Ok(v as usize)
                    } else {
                        Err(RunnerError::Config(format!(
                            "sweep over {} needs non-negative integers, got {v}",
                            sweep.axis.label()
                        )))
                    }
                };
                match sweep.axis {
                    SweepAxis::NQubits => job.n_qubits = as_count()?,
                    SweepAxis::N => job.n = as_count()?,
                    SweepAxis::Tau => job.tau = v,
                }
                Ok((format!("{}={}", sweep.axis.label(), v), job))
            })
            .collect()
    }

    /// SHA-256 of the canonical serialization (defaults filled in), so
    /// reformatting the file or spelling out a default keeps the hash.
    /// The output directory is where results go, not what they are, and is
    /// left out.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("output_dir");
        }
        let canonical = serde_json::to_vec(&value).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Parses `1,2,5-8` into `[1, 2, 5, 6, 7, 8]`.
pub fn parse_seed_list(text: &str) -> RunnerResult<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let parse = |s: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| RunnerError::Config(format!("invalid seed '{s}'")))
        };
        match part.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi) = (parse(lo)?, parse(hi)?);
                if hi < lo {
                    return Err(RunnerError::Config(format!("empty seed range '{part}'")));
                }
                seeds.extend(lo..=hi);
            }
            None => seeds.push(parse(part)?),
        }
    }
    if seeds.is_empty() {
        return Err(RunnerError::Config("seed list is empty".into()));
    }
    Ok(seeds)
}
