//! Dense state vectors over `N` qubits and the trapped-ion gate set.
//!
//! Site `j` (0-based) is stored in bit `j` of the amplitude index; bit value
//! `0` is spin up (σᶻ = +1) and `1` is spin down. Chains are open.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DqsError, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    /// Eigenvalue of σᶻ.
    pub fn sz(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }
}

/// Normalized amplitude vector of length `2^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Product state with the given spin per site.
    pub fn basis_state(n_qubits: usize, pattern: &[Spin]) -> Result<Self> {
        if n_qubits == 0 {
            return Err(DqsError::TooFewQubits {
                required: 1,
                actual: 0,
            });
        }
        if pattern.len() != n_qubits {
            return Err(DqsError::DimensionMismatch {
                expected: n_qubits,
                actual: pattern.len(),
            });
        }
        let index = pattern
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Spin::Down)
            .fold(0usize, |acc, (j, _)| acc | (1 << j));
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[index] = ONE;
        Ok(Self { n_qubits, amps })
    }

    /// |↑…↑⟩
    pub fn all_up(n_qubits: usize) -> Result<Self> {
        Self::basis_state(n_qubits, &vec![Spin::Up; n_qubits])
    }

    /// Néel state (bare vacuum): physical site `j = 1..N` carries
    /// σᶻ = −(−1)^j, so the first site is up and spins alternate.
    pub fn neel(n_qubits: usize) -> Result<Self> {
        let pattern: Vec<Spin> = (0..n_qubits)
            .map(|i| if i % 2 == 0 { Spin::Up } else { Spin::Down })
            .collect();
        Self::basis_state(n_qubits, &pattern)
    }

    /// Wraps raw amplitudes without normalizing them.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(DqsError::InvalidParameter(format!(
                "amplitude length {len} is not 2^N with N >= 1"
            )));
        }
        Ok(Self {
            n_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let norm = self.norm();
        if norm > 0.0 {
            let inv = 1.0 / norm;
            self.amps.iter_mut().for_each(|a| *a *= inv);
        }
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn overlap(&self, other: &StateVector) -> Result<Complex64> {
        self.check_same_size(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub(crate) fn check_same_size(&self, other: &StateVector) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(DqsError::DimensionMismatch {
                expected: self.n_qubits,
                actual: other.n_qubits,
            });
        }
        Ok(())
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_qubits {
            return Err(DqsError::SiteOutOfRange {
                site,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    /// Applies e^{−iθσˣ_j}.
    pub fn apply_rx(&mut self, site: usize, theta: f64) -> Result<()> {
        self.check_site(site)?;
        let (s, c) = theta.sin_cos();
        let mis = Complex64::new(0.0, -s);
        let bit = 1usize << site;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let a = self.amps[i];
                let b = self.amps[i | bit];
                self.amps[i] = a * c + b * mis;
                self.amps[i | bit] = b * c + a * mis;
            }
        }
        Ok(())
    }

    /// Applies e^{−iθσᶻ_j}.
    pub fn apply_rz(&mut self, site: usize, theta: f64) -> Result<()> {
        self.check_site(site)?;
        let up = Complex64::from_polar(1.0, -theta);
        let down = up.conj();
        let bit = 1usize << site;
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= if i & bit == 0 { up } else { down };
        }
        Ok(())
    }

    /// Applies the all-to-all entangler e^{−iθ Σ_{j<k} σˣ_jσˣ_k / |k−j|^α}.
    pub fn apply_xx(&mut self, theta: f64, alpha: f64) -> Result<()> {
        let spectrum = XxSpectrum::new(self.n_qubits, alpha)?;
        spectrum.apply(self, theta)
    }

    /// One circuit layer: all σˣ rotations, then all σᶻ rotations, then the
    /// entangler (skipped for a single qubit).
    pub fn apply_step(&mut self, step: &StepAngles) -> Result<()> {
        if self.n_qubits >= 2 {
            let spectrum = XxSpectrum::new(self.n_qubits, step.alpha)?;
            self.apply_step_with(step, &spectrum)
        } else {
            step.check(self.n_qubits)?;
            self.apply_single_qubit_layer(step)
        }
    }

    /// Same as [`apply_step`](Self::apply_step) with a precomputed entangler spectrum.
    pub fn apply_step_with(&mut self, step: &StepAngles, spectrum: &XxSpectrum) -> Result<()> {
        step.check(self.n_qubits)?;
        if spectrum.n_qubits != self.n_qubits {
            return Err(DqsError::DimensionMismatch {
                expected: self.n_qubits,
                actual: spectrum.n_qubits,
            });
        }
        self.apply_single_qubit_layer(step)?;
        spectrum.apply(self, step.theta_xx)
    }

    fn apply_single_qubit_layer(&mut self, step: &StepAngles) -> Result<()> {
        for (site, &theta) in step.theta_x.iter().enumerate() {
            if theta != 0.0 {
                self.apply_rx(site, theta)?;
            }
        }
        for (site, &theta) in step.theta_z.iter().enumerate() {
            if theta != 0.0 {
                self.apply_rz(site, theta)?;
            }
        }
        Ok(())
    }
}

/// Angles of a single layer U_t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepAngles {
    pub theta_xx: f64,
    pub theta_z: Vec<f64>,
    pub theta_x: Vec<f64>,
    pub alpha: f64,
}

impl StepAngles {
    pub fn identity(n_qubits: usize, alpha: f64) -> Self {
        Self {
            theta_xx: 0.0,
            theta_z: vec![0.0; n_qubits],
            theta_x: vec![0.0; n_qubits],
            alpha,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.theta_z.len()
    }

    fn check(&self, n_qubits: usize) -> Result<()> {
        for len in [self.theta_z.len(), self.theta_x.len()] {
            if len != n_qubits {
                return Err(DqsError::DimensionMismatch {
                    expected: n_qubits,
                    actual: len,
                });
            }
        }
        if !(self.alpha >= 0.0) {
            return Err(DqsError::InvalidParameter(format!(
                "coupling exponent must be >= 0, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// A sequence of `n` layers, i.e. a circuit with `n` entangling gates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub steps: Vec<StepAngles>,
}

impl CircuitParams {
    pub fn new(steps: Vec<StepAngles>) -> Result<Self> {
        let first = steps
            .first()
            .ok_or_else(|| DqsError::InvalidParameter("circuit needs at least one step".into()))?;
        let (n_qubits, alpha) = (first.n_qubits(), first.alpha);
        for step in &steps {
            step.check(n_qubits)?;
            if step.alpha != alpha {
                return Err(DqsError::InvalidParameter(
                    "all steps must share the coupling exponent".into(),
                ));
            }
        }
        Ok(Self { steps })
    }

    pub fn identity(n_steps: usize, n_qubits: usize, alpha: f64) -> Result<Self> {
        Self::new(vec![StepAngles::identity(n_qubits, alpha); n_steps])
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.steps[0].n_qubits()
    }

    pub fn alpha(&self) -> f64 {
        self.steps[0].alpha
    }
}

/// |ψ_DQS⟩ = U_n ⋯ U_1 |ψ₀⟩.
pub fn run_circuit(psi0: &StateVector, params: &CircuitParams) -> Result<StateVector> {
    let mut psi = psi0.clone();
    if psi.n_qubits() >= 2 {
        let spectrum = XxSpectrum::new(psi.n_qubits(), params.alpha())?;
        for step in &params.steps {
            psi.apply_step_with(step, &spectrum)?;
        }
    } else {
        for step in &params.steps {
            psi.apply_step(step)?;
        }
    }
    Ok(psi)
}

/// Diagonal of Σ_{j<k} s_j s_k / |k−j|^α over all x-basis configurations.
///
/// The entangler's terms commute, so it is diagonal after a Walsh–Hadamard
/// transform; this table lets each application run in O(N·2^N).
#[derive(Debug, Clone)]
pub struct XxSpectrum {
    n_qubits: usize,
    alpha: f64,
    energies: Vec<f64>,
}

impl XxSpectrum {
    pub fn new(n_qubits: usize, alpha: f64) -> Result<Self> {
        if n_qubits < 2 {
            return Err(DqsError::TooFewQubits {
                required: 2,
                actual: n_qubits,
            });
        }
        if !(alpha >= 0.0) {
            return Err(DqsError::InvalidParameter(format!(
                "coupling exponent must be >= 0, got {alpha}"
            )));
        }
        let mut couplings = Vec::with_capacity(n_qubits * (n_qubits - 1) / 2);
        for j in 0..n_qubits {
            for k in j + 1..n_qubits {
                couplings.push((j, k, 1.0 / ((k - j) as f64).powf(alpha)));
            }
        }
        let energies = (0..1usize << n_qubits)
            .map(|x| {
                couplings
                    .iter()
                    .map(|&(j, k, c)| {
                        if ((x >> j) ^ (x >> k)) & 1 == 0 {
                            c
                        } else {
                            -c
                        }
                    })
                    .sum()
            })
            .collect();
        Ok(Self {
            n_qubits,
            alpha,
            energies,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn apply(&self, psi: &mut StateVector, theta: f64) -> Result<()> {
        if psi.n_qubits != self.n_qubits {
            return Err(DqsError::DimensionMismatch {
                expected: self.n_qubits,
                actual: psi.n_qubits,
            });
        }
        if theta == 0.0 {
            return Ok(());
        }
        walsh_hadamard(&mut psi.amps);
        let scale = 1.0 / psi.amps.len() as f64;
        for (a, &e) in psi.amps.iter_mut().zip(&self.energies) {
            *a *= Complex64::from_polar(scale, -theta * e);
        }
        walsh_hadamard(&mut psi.amps);
        Ok(())
    }
}

/// Unnormalized in-place Walsh–Hadamard transform.
fn walsh_hadamard(data: &mut [Complex64]) {
    let n = data.len();
    let mut half = 1;
    while half < n {
        for block in data.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half <<= 1;
    }
}
