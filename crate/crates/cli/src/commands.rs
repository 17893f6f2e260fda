//! The four subcommands. Each expands sweeps, computes, and writes its
//! artifacts under the job's output directory.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use dqs_core::io::write_json_atomic;
use dqs_core::models::{exact_evolve, trotter_params, HamiltonianSpec, Model, Propagator};
use dqs_core::qlearn::{train, ActionVector, TraceRow, TrainOutcome};
use dqs_core::rewards::{
    fidelity_reward, local_reward_with_floor, observable_report_with, ObservableReport,
};
use dqs_core::statevec::{run_circuit, CircuitParams, StateVector};

use crate::config::JobConfig;
use crate::error::{RunnerError, RunnerResult};
use crate::output::{fmt_f64, observable_header, observable_row, CircuitFile, Table};

pub const OBSERVABLES_CSV: &str = "observables.csv";
pub const TROTTER_CSV: &str = "trotter.csv";
pub const TROTTER_CIRCUIT_JSON: &str = "trotter_circuit.json";
pub const EVALUATION_CSV: &str = "evaluation.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const AGGREGATE_CSV: &str = "trace_aggregate.csv";
pub const RUN_JSON: &str = "run.json";
pub const TRACE_CSV: &str = "trace.csv";
pub const CIRCUIT_JSON: &str = "circuit.json";
pub const NETWORK_JSON: &str = "network.json";
pub const BEST_ACTIONS_JSON: &str = "best_actions.json";

pub const SUMMARY_HEADER: [&str; 9] = [
    "sweep",
    "seed",
    "status",
    "best_reward",
    "seed_reward",
    "fidelity",
    "local_reward",
    "episodes",
    "config_hash",
];

fn job_dir(cfg: &JobConfig, label: &str) -> RunnerResult<PathBuf> {
    let dir = if label.is_empty() {
        cfg.output_dir.clone()
    } else {
        cfg.output_dir.join(label)
    };
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Exact target state and everything needed to score circuits against it.
struct Reference {
    spec: HamiltonianSpec,
    hamiltonian: dqs_core::Hamiltonian,
    psi0: StateVector,
    target: StateVector,
}

impl Reference {
    fn new(job: &JobConfig) -> RunnerResult<Self> {
        let spec = job.spec()?;
        let psi0 = spec.initial_state()?;
        let target = exact_evolve(&spec, &psi0, &job.evolution_at(job.tau))?;
        Ok(Self {
            hamiltonian: spec.build(),
            spec,
            psi0,
            target,
        })
    }

    fn check_shape(&self, job: &JobConfig, circuit: &CircuitParams) -> RunnerResult<()> {
        if circuit.n_qubits() != self.spec.n_qubits || circuit.n_steps() != job.n {
            return Err(RunnerError::Config(format!(
                "circuit has N={}, n={} but the job expects N={}, n={}",
                circuit.n_qubits(),
                circuit.n_steps(),
                self.spec.n_qubits,
                job.n
            )));
        }
        Ok(())
    }

    fn score(&self, job: &JobConfig, circuit: &CircuitParams) -> RunnerResult<Score> {
        let psi = run_circuit(&self.psi0, circuit)?;
        Ok(Score {
            n: circuit.n_steps(),
            tau: job.tau,
            fidelity: fidelity_reward(&psi, &self.target)?,
            local_reward: local_reward_with_floor(&psi, &self.target, job.entropy_floor)?,
            report: observable_report_with(&psi, &self.hamiltonian, &self.psi0)?,
        })
    }
}

/// Rewards and observables of one circuit's output state.
struct Score {
    n: usize,
    tau: f64,
    fidelity: f64,
    local_reward: f64,
    report: ObservableReport,
}

impl Score {
    /// `n, fidelity, local_reward` followed by the observable columns.
    fn row(&self) -> Vec<String> {
        let mut row = vec![
            self.n.to_string(),
            fmt_f64(self.fidelity),
            fmt_f64(self.local_reward),
        ];
        row.extend(observable_row(self.tau, &self.report));
        row
    }
}

fn score_header(n_qubits: usize) -> Vec<String> {
    let mut h = vec!["n".to_string(), "fidelity".into(), "local_reward".into()];
    h.extend(observable_header(n_qubits));
    h
}

/// Observables of the exact evolution over the τ grid.
pub fn cmd_evolve(cfg: &JobConfig) -> RunnerResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (label, job) in cfg.expand()? {
        let spec = job.spec()?;
        let psi0 = spec.initial_state()?;
        let h = spec.build();
        let propagator = Propagator::new(&spec, &job.evolution_at(job.tau))?;
        let mut table = Table::new(observable_header(spec.n_qubits));
        for tau in job.tau_values() {
            let psi = propagator.evolve(&psi0, tau)?;
            table.push(observable_row(tau, &observable_report_with(&psi, &h, &psi0)?));
        }
        let path = job_dir(&job, &label)?.join(OBSERVABLES_CSV);
        table.write(&path)?;
        log::info!("wrote {}", path.display());
        written.push(path);
    }
    Ok(written)
}

/// Trotter circuits for each step count, scored against the exact target.
pub fn cmd_trotter(cfg: &JobConfig) -> RunnerResult<Vec<PathBuf>> {
    if matches!(cfg.model, Model::Schwinger { .. }) {
        return Err(RunnerError::Unsupported("trotter"));
    }
    let mut written = Vec::new();
    for (label, job) in cfg.expand()? {
        let reference = Reference::new(&job)?;
        let dir = job_dir(&job, &label)?;
        let mut table = Table::new(score_header(job.n_qubits));
        for n in job.trotter_step_list() {
            let circuit = trotter_params(&reference.spec, job.tau, n)?;
            table.push(reference.score(&job, &circuit)?.row());
            if n == job.n {
                CircuitFile::from_circuit(&circuit).save(&dir.join(TROTTER_CIRCUIT_JSON))?;
            }
        }
        let path = dir.join(TROTTER_CSV);
        table.write(&path)?;
        log::info!("wrote {}", path.display());
        written.push(path);
    }
    Ok(written)
}

/// Scores a stored circuit against every (sweep point of the) job.
pub fn cmd_evaluate(cfg: &JobConfig, circuit_path: &Path) -> RunnerResult<Vec<PathBuf>> {
    let circuit = CircuitFile::load(circuit_path)?;
    let mut written = Vec::new();
    for (label, job) in cfg.expand()? {
        let reference = Reference::new(&job)?;
        reference.check_shape(&job, &circuit)?;
        let mut table = Table::new(score_header(job.n_qubits));
        table.push(reference.score(&job, &circuit)?.row());
        let path = job_dir(&job, &label)?.join(EVALUATION_CSV);
        table.write(&path)?;
        written.push(path);
    }
    Ok(written)
}

/// Outcome of one seed of one sweep point.
#[derive(Debug, Clone, Serialize)]
pub struct SeedRecord {
    pub sweep: String,
    pub seed: u64,
    pub best_reward: Option<f64>,
    pub seed_reward: Option<f64>,
    pub fidelity: Option<f64>,
    pub local_reward: Option<f64>,
    pub trace: Option<PathBuf>,
    pub circuit: Option<PathBuf>,
    pub error: Option<String>,
    #[serde(skip)]
    pub rows: Vec<TraceRow>,
}

impl SeedRecord {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

/// Everything `train` produced, in sweep-then-seed order.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub episodes: usize,
    pub seeds: Vec<SeedRecord>,
}

impl RunRecord {
    pub fn failed(&self) -> usize {
        self.seeds.iter().filter(|s| !s.succeeded()).count()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn train_seed(
    job: &JobConfig,
    reference: &Reference,
    dir: &Path,
    seed: u64,
) -> RunnerResult<(TrainOutcome, [f64; 2], PathBuf, PathBuf)> {
    let outcome = train(
        &reference.spec,
        job.tau,
        job.gate_alpha()?,
        &job.evolution_at(job.tau),
        &job.train_config(seed),
    )?;
    let seed_dir = dir.join(format!("seed_{seed}"));
    std::fs::create_dir_all(&seed_dir)?;

    let mut trace = Table::new(["episode", "reward", "best_reward"]);
    for r in &outcome.trace {
        trace.push(vec![
            r.episode.to_string(),
            fmt_f64(r.reward),
            fmt_f64(r.best_reward),
        ]);
    }
    let trace_path = seed_dir.join(TRACE_CSV);
    trace.write(&trace_path)?;

    let circuit_path = seed_dir.join(CIRCUIT_JSON);
    CircuitFile::from_circuit(&outcome.best_circuit).save(&circuit_path)?;
    let actions: Vec<&[f64]> = outcome.best_actions.iter().map(ActionVector::as_slice).collect();
    write_json_atomic(&seed_dir.join(BEST_ACTIONS_JSON), &actions)?;
    outcome.agent.checkpoint()?.save(&seed_dir.join(NETWORK_JSON))?;

    let mut eval = Table::new(score_header(job.n_qubits));
    let score = reference.score(job, &outcome.best_circuit)?;
    let rewards = [score.fidelity, score.local_reward];
    eval.push(score.row());
    eval.write(&seed_dir.join(EVALUATION_CSV))?;
    Ok((outcome, rewards, trace_path, circuit_path))
}

fn run_seed(job: &JobConfig, label: &str, reference: &Reference, dir: &Path, seed: u64) -> SeedRecord {
    let mut record = SeedRecord {
        sweep: label.to_string(),
        seed,
        best_reward: None,
        seed_reward: None,
        fidelity: None,
        local_reward: None,
        trace: None,
        circuit: None,
        error: None,
        rows: Vec::new(),
    };
    let result = catch_unwind(AssertUnwindSafe(|| train_seed(job, reference, dir, seed)));
    match result {
        Ok(Ok((outcome, [fidelity, local], trace, circuit))) => {
            log::info!(
                "{}seed {seed}: best {:.6} (seeded {:.6})",
                if label.is_empty() { String::new() } else { format!("{label} ") },
                outcome.best_reward,
                outcome.seed_reward
            );
            record.best_reward = Some(outcome.best_reward);
            record.seed_reward = Some(outcome.seed_reward);
            record.fidelity = Some(fidelity);
            record.local_reward = Some(local);
            record.trace = Some(trace);
            record.circuit = Some(circuit);
            record.rows = outcome.trace;
        }
        Ok(Err(e)) => record.error = Some(e.to_string()),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            record.error = Some(format!("panic: {msg}"));
        }
    }
    if let Some(e) = &record.error {
        log::error!("seed {seed} failed: {e}");
    }
    record
}

/// Mean and population standard deviation per episode over successful seeds.
fn aggregate(records: &[&SeedRecord]) -> Table {
    let mut table = Table::new([
        "episode",
        "mean_reward",
        "std_reward",
        "mean_best_reward",
        "std_best_reward",
    ]);
    let ok: Vec<&&SeedRecord> = records.iter().filter(|r| r.succeeded()).collect();
    let Some(len) = ok.iter().map(|r| r.rows.len()).min() else {
        return table;
    };
    let stats = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
        (m, v.sqrt())
    };
    for e in 0..len {
        let rewards: Vec<f64> = ok.iter().map(|r| r.rows[e].reward).collect();
        let bests: Vec<f64> = ok.iter().map(|r| r.rows[e].best_reward).collect();
        let (mr, sr) = stats(&rewards);
        let (mb, sb) = stats(&bests);
        table.push(vec![
            e.to_string(),
            fmt_f64(mr),
            fmt_f64(sr),
            fmt_f64(mb),
            fmt_f64(sb),
        ]);
    }
    table
}

/// Trains every seed of every sweep point on a pool of `jobs` workers.
///
/// Per-seed artifacts go to `<dir>/seed_<s>/`; the summary, aggregate trace
/// and run record are written after all workers finish. Failed seeds are
/// recorded and reported through [`RunnerError::SeedsFailed`] once all
/// outputs exist.
pub fn cmd_train(cfg: &JobConfig, jobs: usize) -> RunnerResult<RunRecord> {
    let hash = cfg.hash();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| RunnerError::Config(format!("thread pool: {e}")))?;

    let mut records = Vec::new();
    for (label, job) in cfg.expand()? {
        let reference = Reference::new(&job)?;
        let dir = job_dir(&job, &label)?;
        let point: Vec<SeedRecord> = pool.install(|| {
            job.seeds
                .par_iter()
                .map(|&seed| run_seed(&job, &label, &reference, &dir, seed))
                .collect()
        });
        let refs: Vec<&SeedRecord> = point.iter().collect();
        aggregate(&refs).write(&dir.join(AGGREGATE_CSV))?;
        records.extend(point);
    }

    let mut summary = Table::new(SUMMARY_HEADER);
    for r in &records {
        summary.push(vec![
            r.sweep.clone(),
            r.seed.to_string(),
            if r.succeeded() { "ok" } else { "failed" }.to_string(),
            opt(r.best_reward),
            opt(r.seed_reward),
            opt(r.fidelity),
            opt(r.local_reward),
            cfg.train.episodes.to_string(),
            hash.clone(),
        ]);
    }
    std::fs::create_dir_all(&cfg.output_dir)?;
    summary.write(&cfg.output_dir.join(SUMMARY_CSV))?;

    let record = RunRecord {
        config_hash: hash,
        episodes: cfg.train.episodes,
        seeds: records,
    };
    write_json_atomic(&cfg.output_dir.join(RUN_JSON), &record)?;
    match record.failed() {
        0 => Ok(record),
        failed => Err(RunnerError::SeedsFailed {
            failed,
            total: record.seeds.len(),
        }),
    }
}
