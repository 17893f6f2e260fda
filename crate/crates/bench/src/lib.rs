//! Fixtures shared by the criterion benchmarks.

use dqs_core::{StateVector, StepAngles};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_state(n_qubits: usize, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..1usize << n_qubits)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut psi = StateVector::from_amplitudes(amps).expect("power-of-two length");
    psi.normalize();
    psi
}

pub fn random_step(n_qubits: usize, alpha: f64, seed: u64) -> StepAngles {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    StepAngles {
        theta_xx: rng.gen_range(-0.2..0.2),
        theta_z: (0..n_qubits).map(|_| rng.gen_range(-0.4..0.4)).collect(),
        theta_x: (0..n_qubits).map(|_| rng.gen_range(-0.4..0.4)).collect(),
        alpha,
    }
}
