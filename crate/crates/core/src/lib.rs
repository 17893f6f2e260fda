//! Short-circuit digital quantum simulation.
//!
//! State-vector simulation of the trapped-ion gate set, long-range Ising and
//! lattice Schwinger Hamiltonians with exact propagation, fidelity and
//! pair-local relative-entropy rewards, and a continuous-action deep
//! Q-learning agent that searches for `n`-layer circuits reproducing
//! e^{−iHτ}|ψ₀⟩.

pub mod error;
pub mod io;
pub mod models;
pub mod neural_net;
pub mod qlearn;
pub mod rewards;
pub mod statevec;

pub use error::{DqsError, Result};
pub use models::{
    apply_hamiltonian, exact_evolve, trotter_params, EvolutionConfig, EvolutionMethod,
    Hamiltonian, HamiltonianSpec, Model, Propagator,
};
pub use neural_net::{adam_step, Activation, AdamConfig, AdamState, Checkpoint, Mlp};
pub use qlearn::{
    argmax_action, epsilon, rescale_action, train, ActionVector, Agent, EncodedState,
    Environment, Hyperparameters, TrainConfig, TrainOutcome, TraceRow,
};
pub use rewards::{
    check_observable_bound, fidelity_reward, local_reward, observable_report,
    partial_trace_pair, relative_entropy, ObservableReport, PairDensityMatrix, RewardKind,
};
pub use statevec::{run_circuit, CircuitParams, Spin, StateVector, StepAngles};
