use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dqs_core::models::{exact_evolve, EvolutionConfig, HamiltonianSpec, Model};
use dqs_core::qlearn::{
    argmax_action, epsilon, replay_sweep, run_episode_with_epsilon, scripted_episode,
    seed_actions, train, train_in, training_target, ActionValue, ActionVector, Agent,
    AscentConfig, EncodedState, Environment, Hyperparameters, TrainConfig, Transition,
};
use dqs_core::rewards::{fidelity_reward, local_reward, RewardKind};
use dqs_core::statevec::run_circuit;
use dqs_core::Result;

/// Q(a) = offset − Σ w_i (a_i − c_i)²
struct Quadratic {
    center: Vec<f64>,
    weights: Vec<f64>,
    offset: f64,
}

impl ActionValue for Quadratic {
    fn value_and_action_grad(
        &self,
        _state: &[f64],
        actions: &DMatrix<f64>,
    ) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let values = actions
            .column_iter()
            .map(|a| {
                self.offset
                    - a.iter()
                        .zip(&self.center)
                        .zip(&self.weights)
                        .map(|((x, c), w)| w * (x - c).powi(2))
                        .sum::<f64>()
            })
            .collect();
        let grad = DMatrix::from_fn(actions.nrows(), actions.ncols(), |i, j| {
            -2.0 * self.weights[i] * (actions[(i, j)] - self.center[i])
        });
        Ok((values, grad))
    }
}

/// Q(a) = w·a
struct Linear(Vec<f64>);

impl ActionValue for Linear {
    fn value_and_action_grad(
        &self,
        _state: &[f64],
        actions: &DMatrix<f64>,
    ) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let values = actions
            .column_iter()
            .map(|a| a.iter().zip(&self.0).map(|(x, w)| x * w).sum())
            .collect();
        let grad = DMatrix::from_fn(actions.nrows(), actions.ncols(), |i, _| self.0[i]);
        Ok((values, grad))
    }
}

struct Constant(f64);

impl ActionValue for Constant {
    fn value_and_action_grad(
        &self,
        _state: &[f64],
        actions: &DMatrix<f64>,
    ) -> Result<(Vec<f64>, DMatrix<f64>)> {
        Ok((
            vec![self.0; actions.ncols()],
            DMatrix::zeros(actions.nrows(), actions.ncols()),
        ))
    }
}

fn ascent() -> AscentConfig {
    AscentConfig::from(&Hyperparameters::default())
}

#[test]
fn ascent_finds_interior_maximum_of_concave_surface() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let q = Quadratic {
        center: vec![0.3, -0.7, 0.05, 0.9, -0.2, 0.6, -0.95, 0.0, 0.4],
        weights: vec![0.1, 0.2, 0.15, 0.05, 0.3, 0.1, 0.25, 0.2, 0.12],
        offset: 0.8,
    };
    let (a, v) = argmax_action(&q, &[], 9, &ascent(), &mut rng).unwrap();
    for (x, c) in a.as_slice().iter().zip(&q.center) {
        assert!((x - c).abs() < 1e-3, "{x} vs {c}");
    }
    assert!((v - 0.8).abs() < 1e-5);
}

#[test]
fn ascent_pins_linear_surface_to_corner() {
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    let w = vec![0.5, -0.2, 0.01, -1.0, 0.3];
    let (a, v) = argmax_action(&Linear(w.clone()), &[], 5, &ascent(), &mut rng).unwrap();
    for (x, wi) in a.as_slice().iter().zip(&w) {
        assert!((x - wi.signum()).abs() < 1e-6);
    }
    assert!((v - w.iter().map(|x| x.abs()).sum::<f64>()).abs() < 1e-6);
}

#[test]
fn ascent_on_constant_surface_stays_in_box() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let (a, v) = argmax_action(&Constant(0.42), &[], 7, &ascent(), &mut rng).unwrap();
    assert_eq!(v, 0.42);
    assert!(a.as_slice().iter().all(|x| (-1.0..=1.0).contains(x)));
}

fn transition(reward: f64, terminal: bool) -> Transition {
    let prev = ActionVector::zeros(5);
    Transition {
        state: EncodedState::initial(3, 5),
        action: ActionVector::clipped(vec![0.1; 5]),
        reward,
        next_state: EncodedState::at_step(if terminal { 3 } else { 1 }, 3, &prev),
        terminal,
    }
}

#[test]
fn training_targets_bootstrap_only_nonterminal_transitions() {
    let mut rng = ChaCha8Rng::seed_from_u64(54);
    let cfg = ascent();
    let y = training_target(&transition(0.7, true), &Constant(0.9), 5, &cfg, &mut rng).unwrap();
    assert_eq!(y, 0.7);
    let y = training_target(&transition(0.0, false), &Constant(0.4), 5, &cfg, &mut rng).unwrap();
    assert_eq!(y, 0.4);
    let y = training_target(&transition(0.5, false), &Constant(0.9), 5, &cfg, &mut rng).unwrap();
    assert_eq!(y, 1.0);
    let y = training_target(&transition(-0.3, true), &Constant(0.9), 5, &cfg, &mut rng).unwrap();
    assert_eq!(y, 0.0);
}

fn small_config(seed: u64, episodes: usize) -> TrainConfig {
    TrainConfig {
        hyper: Hyperparameters {
            episodes,
            ..Hyperparameters::default()
        },
        n_steps: 3,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn sweep_over_empty_memory_changes_nothing() {
    let cfg = small_config(1, 10);
    let mut agent = Agent::new(2, &cfg).unwrap();
    let before = agent.behavior.clone();
    assert_eq!(replay_sweep(&mut agent).unwrap(), 0.0);
    assert_eq!(agent.behavior, before);
    assert_eq!(agent.adam.step, 0);
}

#[test]
fn repeated_sweeps_fit_a_fixed_terminal_reward() {
    let cfg = small_config(2, 10);
    let mut agent = Agent::new(2, &cfg).unwrap();
    let t = transition(0.6, true);
    agent.memory.push_episode(vec![t.clone()]);
    for _ in 0..500 {
        replay_sweep(&mut agent).unwrap();
    }
    let mut x = t.state.as_slice().to_vec();
    x.extend_from_slice(t.action.as_slice());
    let q = agent.behavior.forward(&x).unwrap();
    assert!((q - 0.6).abs() < 0.05, "Q = {q}");
}

fn lri_env(n_qubits: usize, tau: f64, cfg: &TrainConfig) -> (HamiltonianSpec, Environment) {
    let spec = HamiltonianSpec::new(Model::lri_default(), n_qubits).unwrap();
    let env = Environment::for_model(&spec, tau, 3.0, &EvolutionConfig::default(), cfg).unwrap();
    (spec, env)
}

#[test]
fn zero_actions_reproduce_target_at_time_zero() {
    for kind in [RewardKind::Local, RewardKind::Fidelity] {
        let cfg = TrainConfig {
            reward_kind: kind,
            ..small_config(3, 0)
        };
        let (_, env) = lri_env(3, 0.0, &cfg);
        let r = env.reward(&vec![ActionVector::zeros(7); 3]).unwrap();
        assert!((r - 1.0).abs() < 1e-12, "{kind:?}: {r}");
    }
}

#[test]
fn scripted_episode_reward_matches_direct_evaluation() {
    let cfg = small_config(4, 0);
    let (spec, env) = lri_env(4, 1.0, &cfg);
    let actions = seed_actions(&spec, 1.0, &cfg).unwrap();
    let outcome = scripted_episode(&env, &actions).unwrap();

    let psi0 = spec.initial_state().unwrap();
    let target = exact_evolve(&spec, &psi0, &EvolutionConfig::at(1.0)).unwrap();
    let psi = run_circuit(&psi0, &env.circuit(&actions).unwrap()).unwrap();
    let direct = local_reward(&psi, &target).unwrap();
    assert!((outcome.reward - direct).abs() < 1e-12);

    assert_eq!(outcome.transitions.len(), 3);
    for (t, tr) in outcome.transitions.iter().enumerate() {
        assert_eq!(tr.terminal, t == 2);
        assert_eq!(tr.reward, if t == 2 { outcome.reward } else { 0.0 });
        if t > 0 {
            assert_eq!(tr.state, outcome.transitions[t - 1].next_state);
        }
    }
}

#[test]
fn greedy_episodes_are_deterministic_per_seed() {
    let cfg = small_config(5, 10);
    let (_, env) = lri_env(3, 0.5, &cfg);
    let run = || {
        let mut agent = Agent::new(3, &cfg).unwrap();
        run_episode_with_epsilon(&env, &mut agent, 0.0).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a, b);
    let fid = fidelity_reward(
        &env.final_state(&env.circuit(&a.actions).unwrap()).unwrap(),
        env.target_state(),
    )
    .unwrap();
    assert!((0.0..=1.0).contains(&fid));
}

#[test]
fn zero_episodes_returns_the_seed_circuit() {
    let cfg = small_config(6, 0);
    let spec = HamiltonianSpec::new(Model::lri_default(), 3).unwrap();
    let out = train(&spec, 0.5, 3.0, &EvolutionConfig::default(), &cfg).unwrap();
    assert!(out.trace.is_empty());
    assert_eq!(out.best_reward, out.seed_reward);
    assert_eq!(out.best_actions, seed_actions(&spec, 0.5, &cfg).unwrap());
}

#[test]
fn training_is_reproducible_and_memory_is_bounded() {
    let cfg = TrainConfig {
        hyper: Hyperparameters {
            episodes: 70,
            memory_episodes: 20,
            target_sync_period: 10,
            ..Hyperparameters::default()
        },
        seed: 7,
        ..TrainConfig::default()
    };
    let (spec, env) = lri_env(3, 0.5, &cfg);
    let seed = seed_actions(&spec, 0.5, &cfg).unwrap();
    let a = train_in(&env, &seed, &cfg).unwrap();
    let b = train_in(&env, &seed, &cfg).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.best_actions, b.best_actions);
    assert_eq!(a.agent.behavior, b.agent.behavior);
    assert_eq!(
        serde_json::to_string(&a.agent.checkpoint().unwrap()).unwrap(),
        serde_json::to_string(&b.agent.checkpoint().unwrap()).unwrap()
    );

    assert_eq!(a.agent.memory.n_episodes(), 20);
    assert!(a.agent.memory.len() <= 20 * cfg.n_steps);
    assert!(a.trace.windows(2).all(|w| w[1].best_reward >= w[0].best_reward));
    assert!(a.trace.iter().all(|r| r.best_reward >= a.seed_reward));
    assert!((a.best_reward - env.reward(&a.best_actions).unwrap()).abs() < 1e-12);

    let other = train_in(&env, &seed, &TrainConfig { seed: 8, ..cfg }).unwrap();
    assert_ne!(a.agent.behavior, other.agent.behavior);
}

#[test]
fn checkpoint_restores_behavior_network() {
    let cfg = small_config(9, 5);
    let (spec, env) = lri_env(2, 0.3, &cfg);
    let out = train_in(&env, &seed_actions(&spec, 0.3, &cfg).unwrap(), &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.json");
    out.agent.checkpoint().unwrap().save(&path).unwrap();
    let (net, adam) = dqs_core::Checkpoint::load(&path).unwrap().restore().unwrap();
    assert_eq!(net, out.agent.behavior);
    assert_eq!(adam, out.agent.adam);
}

#[test]
fn invalid_configs_are_rejected() {
    let spec = HamiltonianSpec::new(Model::lri_default(), 3).unwrap();
    let evo = EvolutionConfig::default();
    let mut cfg = small_config(0, 1);
    cfg.n_steps = 0;
    assert!(train(&spec, 0.5, 3.0, &evo, &cfg).is_err());
    let mut cfg = small_config(0, 1);
    cfg.hyper.eps_end = 2.0;
    assert!(train(&spec, 0.5, 3.0, &evo, &cfg).is_err());
    let sch = HamiltonianSpec::new(Model::schwinger_default(), 4).unwrap();
    // Schwinger seeds with the identity circuit instead of Trotter
    let seed = seed_actions(&sch, 1.0, &small_config(0, 1)).unwrap();
    assert!(seed.iter().all(|a| a.as_slice().iter().all(|&x| x == 0.0)));
}

proptest! {
    #[test]
    fn epsilon_decays_monotonically(episodes in 1usize..100_000, a in 0usize..100_000, b in 0usize..100_000) {
        let h = Hyperparameters { episodes, ..Hyperparameters::default() };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(epsilon(hi, &h) <= epsilon(lo, &h));
        prop_assert!(epsilon(lo.min(episodes), &h) >= h.eps_end - 1e-15);
        prop_assert!(epsilon(lo, &h) <= h.eps_start);
    }

    #[test]
    fn clipped_actions_stay_in_box(v in proptest::collection::vec(-5.0f64..5.0, 1..20)) {
        let a = ActionVector::clipped(v.clone());
        prop_assert_eq!(a.len(), v.len());
        prop_assert!(a.as_slice().iter().all(|x| (-1.0..=1.0).contains(x)));
    }
}
