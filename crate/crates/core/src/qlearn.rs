//! Continuous-action deep Q-learning over circuit layers.
//!
//! An episode chooses one layer per step. The state fed to the network is a
//! one-hot step index followed by the previous action; the Q-network sees
//! that state concatenated with a candidate action, and the greedy action
//! is found by projected Nesterov ascent on the action inputs.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{DqsError, Result};
use crate::models::{exact_evolve, trotter_params, EvolutionConfig, HamiltonianSpec, Model};
use crate::neural_net::{adam_step, AdamConfig, AdamState, Checkpoint, Mlp};
use crate::rewards::{reward, RewardKind, DEFAULT_ENTROPY_FLOOR};
use crate::statevec::{CircuitParams, StateVector, StepAngles, XxSpectrum};

/// Learning hyperparameters; every field can be overridden from a job file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    pub episodes: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    pub ascent_restarts: usize,
    pub ascent_momentum: f64,
    pub ascent_lr: f64,
    pub ascent_iters: usize,
    /// Episodes between target-network synchronizations.
    pub target_sync_period: usize,
    /// Replay capacity in episodes.
    pub memory_episodes: usize,
    pub rescale_xx: f64,
    pub rescale_single: f64,
    pub adam: AdamConfig,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            episodes: 50_000,
            eps_start: 1.0,
            eps_end: 0.005,
            ascent_restarts: 15,
            ascent_momentum: 0.9,
            ascent_lr: 0.6,
            ascent_iters: 50,
            target_sync_period: 50,
            memory_episodes: 50,
            rescale_xx: 0.2,
            rescale_single: 0.4,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub hyper: Hyperparameters,
    /// Number of layers (entangling gates) per circuit.
    pub n_steps: usize,
    pub seed: u64,
    pub reward_kind: RewardKind,
    pub entropy_floor: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hyper: Hyperparameters::default(),
            n_steps: 3,
            seed: 0,
            reward_kind: RewardKind::Local,
            entropy_floor: DEFAULT_ENTROPY_FLOOR,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let h = &self.hyper;
        let bad = |what: &str| Err(DqsError::InvalidParameter(what.to_string()));
        if self.n_steps == 0 {
            return bad("n must be >= 1");
        }
        if !(h.eps_start > 0.0 && h.eps_end > 0.0 && h.eps_end < h.eps_start) {
            return bad("need 0 < eps_end < eps_start");
        }
        if h.ascent_restarts == 0 || h.target_sync_period == 0 || h.memory_episodes == 0 {
            return bad("ascent_restarts, target_sync_period and memory_episodes must be >= 1");
        }
        if !(h.ascent_lr > 0.0 && (0.0..1.0).contains(&h.ascent_momentum)) {
            return bad("need ascent_lr > 0 and 0 <= ascent_momentum < 1");
        }
        if !(h.rescale_xx > 0.0 && h.rescale_single > 0.0) {
            return bad("rescale factors must be > 0");
        }
        if !(h.adam.learning_rate > 0.0 && self.entropy_floor > 0.0) {
            return bad("learning rate and entropy floor must be > 0");
        }
        Ok(())
    }
}

/// ε(e) = eps_start · (eps_end/eps_start)^(e/episodes).
pub fn epsilon(episode: usize, hyper: &Hyperparameters) -> f64 {
    if hyper.episodes == 0 {
        return hyper.eps_end;
    }
    let frac = episode as f64 / hyper.episodes as f64;
    hyper.eps_start * (hyper.eps_end / hyper.eps_start).powf(frac)
}

/// Raw agent output: `[xx, z_1, x_1, …, z_N, x_N]`, each in [−1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionVector(Vec<f64>);

impl ActionVector {
    /// Clips every component into [−1, 1]; NaN maps to 0.
    pub fn clipped(mut components: Vec<f64>) -> Self {
        for c in &mut components {
            *c = if c.is_nan() { 0.0 } else { c.clamp(-1.0, 1.0) };
        }
        Self(components)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Inverse of [`rescale_action`], clipped to the action box.
    pub fn from_step(step: &StepAngles, hyper: &Hyperparameters) -> Self {
        let mut v = Vec::with_capacity(action_dim(step.n_qubits()));
        v.push(step.theta_xx / hyper.rescale_xx);
        for (z, x) in step.theta_z.iter().zip(&step.theta_x) {
            v.push(z / hyper.rescale_single);
            v.push(x / hyper.rescale_single);
        }
        Self::clipped(v)
    }
}

pub fn action_dim(n_qubits: usize) -> usize {
    2 * n_qubits + 1
}

/// Maps an action to physical angles: θˣˣ = 0.2·a₀ and the remaining pairs
/// to (θᶻ_j, θˣ_j), each scaled by 0.4 (factors from `hyper`).
pub fn rescale_action(
    action: &ActionVector,
    n_qubits: usize,
    alpha: f64,
    hyper: &Hyperparameters,
) -> Result<StepAngles> {
    if action.len() != action_dim(n_qubits) {
        return Err(DqsError::DimensionMismatch {
            expected: action_dim(n_qubits),
            actual: action.len(),
        });
    }
    let a = action.as_slice();
    Ok(StepAngles {
        theta_xx: a[0] * hyper.rescale_xx,
        theta_z: a[1..].iter().step_by(2).map(|v| v * hyper.rescale_single).collect(),
        theta_x: a[2..].iter().step_by(2).map(|v| v * hyper.rescale_single).collect(),
        alpha,
    })
}

/// `[onehot(t) over n slots, previous action]`. The terminal state (t = n)
/// has an all-zero step block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EncodedState(Vec<f64>);

impl EncodedState {
    pub fn initial(n_steps: usize, action_dim: usize) -> Self {
        Self::at_step(0, n_steps, &ActionVector::zeros(action_dim))
    }

    pub fn at_step(step: usize, n_steps: usize, previous: &ActionVector) -> Self {
        let mut v = vec![0.0; n_steps + previous.len()];
        if step < n_steps {
            v[step] = 1.0;
        }
        v[n_steps..].copy_from_slice(previous.as_slice());
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: EncodedState,
    pub action: ActionVector,
    pub reward: f64,
    pub next_state: EncodedState,
    pub terminal: bool,
}

#[derive(Debug, Clone)]
struct Stored {
    transition: Transition,
    /// max_a Q_target(s', a), valid until the next target sync.
    bootstrap: Option<f64>,
}

/// Ring buffer of whole episodes, oldest evicted first.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    capacity: usize,
    episodes: VecDeque<Vec<Stored>>,
}

impl ReplayMemory {
    pub fn new(capacity_episodes: usize) -> Self {
        Self {
            capacity: capacity_episodes,
            episodes: VecDeque::with_capacity(capacity_episodes + 1),
        }
    }

    pub fn push_episode(&mut self, transitions: Vec<Transition>) {
        if self.episodes.len() == self.capacity {
            self.episodes.pop_front();
        }
        self.episodes.push_back(
            transitions
                .into_iter()
                .map(|transition| Stored {
                    transition,
                    bootstrap: None,
                })
                .collect(),
        );
    }

    pub fn n_episodes(&self) -> usize {
        self.episodes.len()
    }

    /// Number of stored transitions.
    pub fn len(&self) -> usize {
        self.episodes.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.episodes.iter().flatten().map(|s| &s.transition)
    }

    fn invalidate_bootstrap(&mut self) {
        self.episodes
            .iter_mut()
            .flatten()
            .for_each(|s| s.bootstrap = None);
    }

    fn slot_mut(&mut self, index: usize) -> &mut Stored {
        let mut index = index;
        for ep in &mut self.episodes {
            if index < ep.len() {
                return &mut ep[index];
            }
            index -= ep.len();
        }
        unreachable!("replay index out of range")
    }
}

/// A differentiable action-value surface Q(s, ·).
pub trait ActionValue {
    /// Values and ∂Q/∂a for a batch of candidate actions, one per column.
    fn value_and_action_grad(
        &self,
        state: &[f64],
        actions: &DMatrix<f64>,
    ) -> Result<(Vec<f64>, DMatrix<f64>)>;
}

impl ActionValue for Mlp {
    fn value_and_action_grad(
        &self,
        state: &[f64],
        actions: &DMatrix<f64>,
    ) -> Result<(Vec<f64>, DMatrix<f64>)> {
        self.suffix_value_and_grad(state, actions)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentConfig {
    pub restarts: usize,
    pub iters: usize,
    pub lr: f64,
    pub momentum: f64,
}

impl From<&Hyperparameters> for AscentConfig {
    fn from(h: &Hyperparameters) -> Self {
        Self {
            restarts: h.ascent_restarts,
            iters: h.ascent_iters,
            lr: h.ascent_lr,
            momentum: h.ascent_momentum,
        }
    }
}

/// Approximates argmax_a Q(s, a) over [−1, 1]^d by projected Nesterov ascent
/// from `restarts` uniform starting points. Returns the best final iterate
/// and its value.
pub fn argmax_action<Q, R>(
    q: &Q,
    state: &[f64],
    dim: usize,
    cfg: &AscentConfig,
    rng: &mut R,
) -> Result<(ActionVector, f64)>
where
    Q: ActionValue + ?Sized,
    R: Rng + ?Sized,
{
    let restarts = cfg.restarts.max(1);
    let project = |m: &mut DMatrix<f64>| {
        m.apply(|v| *v = if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) })
    };
    let mut actions = DMatrix::from_fn(dim, restarts, |_, _| rng.gen_range(-1.0..=1.0));
    let mut velocity = DMatrix::<f64>::zeros(dim, restarts);
    for _ in 0..cfg.iters {
        let mut lookahead = &actions + &velocity * cfg.momentum;
        project(&mut lookahead);
        let (_, grad) = q.value_and_action_grad(state, &lookahead)?;
        velocity *= cfg.momentum;
        velocity += grad * cfg.lr;
        actions += &velocity;
        project(&mut actions);
    }
    let (values, _) = q.value_and_action_grad(state, &actions)?;
    let (best, value) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| {
            if v > acc.1 {
                (i, v)
            } else {
                acc
            }
        });
    Ok((
        ActionVector::clipped(actions.column(best).iter().copied().collect()),
        value,
    ))
}

/// Fixed initial and target states plus the reward used to score circuits.
#[derive(Debug, Clone)]
pub struct Environment {
    psi0: StateVector,
    target: StateVector,
    n_steps: usize,
    alpha: f64,
    reward_kind: RewardKind,
    entropy_floor: f64,
    hyper: Hyperparameters,
    spectrum: Option<XxSpectrum>,
}

impl Environment {
    pub fn new(
        psi0: StateVector,
        target: StateVector,
        alpha: f64,
        cfg: &TrainConfig,
    ) -> Result<Self> {
        psi0.check_same_size(&target)?;
        let spectrum = if psi0.n_qubits() >= 2 {
            Some(XxSpectrum::new(psi0.n_qubits(), alpha)?)
        } else {
            None
        };
        Ok(Self {
            psi0,
            target,
            n_steps: cfg.n_steps,
            alpha,
            reward_kind: cfg.reward_kind,
            entropy_floor: cfg.entropy_floor,
            hyper: cfg.hyper,
            spectrum,
        })
    }

    /// Evolves the model's initial state exactly to `tau` for the target.
    pub fn for_model(
        spec: &HamiltonianSpec,
        tau: f64,
        gate_alpha: f64,
        evolution: &EvolutionConfig,
        cfg: &TrainConfig,
    ) -> Result<Self> {
        let psi0 = spec.initial_state()?;
        let evo = EvolutionConfig { tau, ..*evolution };
        let target = exact_evolve(spec, &psi0, &evo)?;
        Self::new(psi0, target, gate_alpha, cfg)
    }

    pub fn n_qubits(&self) -> usize {
        self.psi0.n_qubits()
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn action_dim(&self) -> usize {
        action_dim(self.n_qubits())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.psi0
    }

    pub fn target_state(&self) -> &StateVector {
        &self.target
    }

    pub fn circuit(&self, actions: &[ActionVector]) -> Result<CircuitParams> {
        let steps = actions
            .iter()
            .map(|a| rescale_action(a, self.n_qubits(), self.alpha, &self.hyper))
            .collect::<Result<Vec<_>>>()?;
        CircuitParams::new(steps)
    }

    pub fn final_state(&self, circuit: &CircuitParams) -> Result<StateVector> {
        match &self.spectrum {
            Some(spectrum) => {
                let mut psi = self.psi0.clone();
                for step in &circuit.steps {
                    psi.apply_step_with(step, spectrum)?;
                }
                Ok(psi)
            }
            None => crate::statevec::run_circuit(&self.psi0, circuit),
        }
    }

    pub fn circuit_reward(&self, circuit: &CircuitParams) -> Result<f64> {
        let psi = self.final_state(circuit)?;
        reward(self.reward_kind, &psi, &self.target, self.entropy_floor)
    }

    /// Terminal reward of an action sequence.
    pub fn reward(&self, actions: &[ActionVector]) -> Result<f64> {
        self.circuit_reward(&self.circuit(actions)?)
    }
}

/// Behavior/target networks, optimizer, replay memory and RNG of one job.
#[derive(Debug, Clone)]
pub struct Agent {
    pub behavior: Mlp,
    pub target: Mlp,
    pub adam: AdamState,
    pub memory: ReplayMemory,
    pub rng: ChaCha8Rng,
    n_steps: usize,
    action_dim: usize,
    ascent: AscentConfig,
}

impl Agent {
    pub fn new(n_qubits: usize, cfg: &TrainConfig) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let d_a = action_dim(n_qubits);
        let behavior = Mlp::q_network(cfg.n_steps + 2 * d_a, &mut rng)?;
        Ok(Self {
            target: behavior.clone(),
            adam: AdamState::new(&behavior, cfg.hyper.adam),
            behavior,
            memory: ReplayMemory::new(cfg.hyper.memory_episodes),
            rng,
            n_steps: cfg.n_steps,
            action_dim: d_a,
            ascent: AscentConfig::from(&cfg.hyper),
        })
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    /// Greedy action of the behavior network.
    pub fn choose_action(&mut self, state: &EncodedState) -> Result<ActionVector> {
        let (a, _) = argmax_action(
            &self.behavior,
            state.as_slice(),
            self.action_dim,
            &self.ascent,
            &mut self.rng,
        )?;
        Ok(a)
    }

    /// Copies the behavior weights into the target network.
    pub fn sync_target(&mut self) {
        self.target = self.behavior.clone();
        self.memory.invalidate_bootstrap();
    }

    pub fn checkpoint(&self) -> Result<Checkpoint> {
        let rng_state = serde_json::to_value(&self.rng)?;
        Ok(Checkpoint::capture(&self.behavior, &self.adam, Some(rng_state)))
    }
}

/// y = r for terminal transitions, r + max_a Q_target(s', a) otherwise,
/// clamped to [0, 1].
pub fn training_target<Q, R>(
    transition: &Transition,
    target: &Q,
    action_dim: usize,
    ascent: &AscentConfig,
    rng: &mut R,
) -> Result<f64>
where
    Q: ActionValue + ?Sized,
    R: Rng + ?Sized,
{
    let y = if transition.terminal {
        transition.reward
    } else {
        let (_, best) = argmax_action(
            target,
            transition.next_state.as_slice(),
            action_dim,
            ascent,
            rng,
        )?;
        transition.reward + best
    };
    Ok(y.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub transitions: Vec<Transition>,
    pub reward: f64,
    pub actions: Vec<ActionVector>,
}

/// Plays one episode with the exploration noise scheduled for `episode`.
pub fn run_episode(
    env: &Environment,
    agent: &mut Agent,
    hyper: &Hyperparameters,
    episode: usize,
) -> Result<EpisodeOutcome> {
    run_episode_with_epsilon(env, agent, epsilon(episode, hyper))
}

/// Greedy actions perturbed by N(0, (ε/2)²) per component and clipped.
pub fn run_episode_with_epsilon(
    env: &Environment,
    agent: &mut Agent,
    eps: f64,
) -> Result<EpisodeOutcome> {
    let n = env.n_steps();
    let d_a = env.action_dim();
    if agent.action_dim != d_a || agent.n_steps != n {
        return Err(DqsError::DimensionMismatch {
            expected: d_a,
            actual: agent.action_dim,
        });
    }
    let noise = if eps > 0.0 {
        Some(Normal::new(0.0, eps / 2.0).map_err(|e| DqsError::InvalidParameter(e.to_string()))?)
    } else {
        None
    };
    let mut state = EncodedState::initial(n, d_a);
    let mut actions = Vec::with_capacity(n);
    let mut transitions = Vec::with_capacity(n);
    for t in 0..n {
        let greedy = agent.choose_action(&state)?;
        let action = match &noise {
            Some(dist) => ActionVector::clipped(
                greedy
                    .as_slice()
                    .iter()
                    .map(|a| a + dist.sample(&mut agent.rng))
                    .collect(),
            ),
            None => greedy,
        };
        let next_state = EncodedState::at_step(t + 1, n, &action);
        transitions.push(Transition {
            state: std::mem::replace(&mut state, next_state.clone()),
            action: action.clone(),
            reward: 0.0,
            next_state,
            terminal: t + 1 == n,
        });
        actions.push(action);
    }
    let reward = env.reward(&actions)?;
    transitions.last_mut().unwrap().reward = reward;
    Ok(EpisodeOutcome {
        transitions,
        reward,
        actions,
    })
}

/// Builds the transitions of a fixed action sequence scored by `env`.
pub fn scripted_episode(env: &Environment, actions: &[ActionVector]) -> Result<EpisodeOutcome> {
    let n = env.n_steps();
    if actions.len() != n {
        return Err(DqsError::DimensionMismatch {
            expected: n,
            actual: actions.len(),
        });
    }
    let reward = env.reward(actions)?;
    let mut state = EncodedState::initial(n, env.action_dim());
    let transitions = actions
        .iter()
        .enumerate()
        .map(|(t, a)| {
            let next_state = EncodedState::at_step(t + 1, n, a);
            Transition {
                state: std::mem::replace(&mut state, next_state.clone()),
                action: a.clone(),
                reward: if t + 1 == n { reward } else { 0.0 },
                next_state,
                terminal: t + 1 == n,
            }
        })
        .collect();
    Ok(EpisodeOutcome {
        transitions,
        reward,
        actions: actions.to_vec(),
    })
}

/// One pass over the replay memory in shuffled order, one Adam update per
/// transition. Returns the mean log-cosh loss (0 for an empty memory).
pub fn replay_sweep(agent: &mut Agent) -> Result<f64> {
    let len = agent.memory.len();
    if len == 0 {
        return Ok(0.0);
    }
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut agent.rng);
    let mut total_loss = 0.0;
    let mut input = Vec::with_capacity(agent.behavior.input_dim());
    for index in order {
        let slot = agent.memory.slot_mut(index);
        let y = if slot.transition.terminal {
            slot.transition.reward.clamp(0.0, 1.0)
        } else {
            let bootstrap = match slot.bootstrap {
                Some(b) => b,
                None => {
                    let (_, best) = argmax_action(
                        &agent.target,
                        slot.transition.next_state.as_slice(),
                        agent.action_dim,
                        &agent.ascent,
                        &mut agent.rng,
                    )?;
                    slot.bootstrap = Some(best);
                    best
                }
            };
            (slot.transition.reward + bootstrap).clamp(0.0, 1.0)
        };
        input.clear();
        input.extend_from_slice(slot.transition.state.as_slice());
        input.extend_from_slice(slot.transition.action.as_slice());
        let bp = agent.behavior.backward(&input, y)?;
        total_loss += bp.loss;
        adam_step(&mut agent.behavior, &mut agent.adam, &bp.gradients)?;
    }
    Ok(total_loss / len as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub episode: usize,
    pub reward: f64,
    pub best_reward: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best_actions: Vec<ActionVector>,
    pub best_circuit: CircuitParams,
    pub best_reward: f64,
    /// Reward of the seeded (Trotter or identity) episode.
    pub seed_reward: f64,
    pub trace: Vec<TraceRow>,
    pub agent: Agent,
}

/// Initial actions placed in memory before training: the Trotter circuit
/// mapped back to the action box for the Ising chain, zeros otherwise.
pub fn seed_actions(
    spec: &HamiltonianSpec,
    tau: f64,
    cfg: &TrainConfig,
) -> Result<Vec<ActionVector>> {
    match spec.model {
        Model::Lri { .. } => Ok(trotter_params(spec, tau, cfg.n_steps)?
            .steps
            .iter()
            .map(|s| ActionVector::from_step(s, &cfg.hyper))
            .collect()),
        Model::Schwinger { .. } => {
            Ok(vec![ActionVector::zeros(action_dim(spec.n_qubits)); cfg.n_steps])
        }
    }
}

/// Full training job for a model at time `tau`.
pub fn train(
    spec: &HamiltonianSpec,
    tau: f64,
    gate_alpha: f64,
    evolution: &EvolutionConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let env = Environment::for_model(spec, tau, gate_alpha, evolution, cfg)?;
    let seed = seed_actions(spec, tau, cfg)?;
    train_in(&env, &seed, cfg)
}

/// Training loop against a prepared environment, seeding memory with `seed`.
pub fn train_in(
    env: &Environment,
    seed: &[ActionVector],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let hyper = &cfg.hyper;
    let mut agent = Agent::new(env.n_qubits(), cfg)?;

    let seeded = scripted_episode(env, seed)?;
    let seed_reward = seeded.reward;
    let mut best_reward = seeded.reward;
    let mut best_actions = seeded.actions.clone();
    agent.memory.push_episode(seeded.transitions);

    let mut trace = Vec::with_capacity(hyper.episodes);
    for episode in 0..hyper.episodes {
        let outcome = run_episode(env, &mut agent, hyper, episode)?;
        if outcome.reward > best_reward {
            best_reward = outcome.reward;
            best_actions = outcome.actions.clone();
        }
        trace.push(TraceRow {
            episode,
            reward: outcome.reward,
            best_reward,
        });
        agent.memory.push_episode(outcome.transitions);
        let loss = replay_sweep(&mut agent)?;
        if (episode + 1) % hyper.target_sync_period == 0 {
            agent.sync_target();
        }
        if (episode + 1) % 500 == 0 {
            log::info!(
                "seed {} episode {}: reward {:.4}, best {:.4}, loss {:.3e}",
                cfg.seed,
                episode + 1,
                outcome.reward,
                best_reward,
                loss
            );
        }
    }
    Ok(TrainOutcome {
        best_circuit: env.circuit(&best_actions)?,
        best_actions,
        best_reward,
        seed_reward,
        trace,
        agent,
    })
}

/// Best reward over `count` circuits with uniformly random actions.
pub fn random_search<R: Rng + ?Sized>(env: &Environment, count: usize, rng: &mut R) -> Result<f64> {
    let d_a = env.action_dim();
    let mut best = f64::NEG_INFINITY;
    for _ in 0..count {
        let actions: Vec<ActionVector> = (0..env.n_steps())
            .map(|_| ActionVector::clipped((0..d_a).map(|_| rng.gen_range(-1.0..=1.0)).collect()))
            .collect();
        best = best.max(env.reward(&actions)?);
    }
    Ok(best)
}
