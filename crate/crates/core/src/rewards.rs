//! Figures of merit comparing a circuit state against the exact target:
//! global fidelity, the pair-local relative-entropy reward, the observable
//! error bound it implies, and the physical observables tracked over time.

use nalgebra::{Matrix4, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DqsError, Result};
use crate::models::{staggered, Hamiltonian, HamiltonianSpec};
use crate::statevec::StateVector;

/// Default eigenvalue floor applied to the second argument of the relative entropy.
pub const DEFAULT_ENTROPY_FLOOR: f64 = 1e-12;

const VALIDATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    Fidelity,
    Local,
}

/// Reduced state of sites `(j, k)`, `j < k`. Row/column index is
/// `2·bit_j + bit_k`, i.e. ρ_j ⊗ ρ_k ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDensityMatrix {
    pub entries: Matrix4<Complex64>,
    pub sites: (usize, usize),
}

impl PairDensityMatrix {
    pub fn new(entries: Matrix4<Complex64>, sites: (usize, usize)) -> Result<Self> {
        let rho = Self { entries, sites };
        rho.validate()?;
        Ok(rho)
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.entries - self.entries.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let eig = SymmetricEigen::new(self.hermitian_part());
        let mut out = [0.0; 4];
        out.copy_from_slice(eig.eigenvalues.as_slice());
        out
    }

    fn hermitian_part(&self) -> Matrix4<Complex64> {
        (self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if !(herm <= VALIDATION_TOL) {
            return Err(DqsError::InvalidDensityMatrix(format!(
                "not Hermitian (max deviation {herm:e})"
            )));
        }
        let tr = self.trace();
        if !((tr - Complex64::new(1.0, 0.0)).norm() <= VALIDATION_TOL) {
            return Err(DqsError::InvalidDensityMatrix(format!(
                "trace {tr} differs from 1"
            )));
        }
        Ok(())
    }
}

/// ρ^{jk} = Tr_{others} |ψ⟩⟨ψ| for 0-based sites `j < k`.
pub fn partial_trace_pair(psi: &StateVector, j: usize, k: usize) -> Result<PairDensityMatrix> {
    let n = psi.n_qubits();
    if j >= k || k >= n {
        return Err(DqsError::InvalidPair(j, k));
    }
    let (bj, bk) = (1usize << j, 1usize << k);
    let offsets = [0, bk, bj, bj | bk];
    let amps = psi.amplitudes();
    let mut rho = Matrix4::<Complex64>::zeros();
    for base in (0..amps.len()).filter(|x| x & (bj | bk) == 0) {
        let v = offsets.map(|o| amps[base | o]);
        for a in 0..4 {
            if v[a] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..4 {
                rho[(a, b)] += v[a] * v[b].conj();
            }
        }
    }
    Ok(PairDensityMatrix {
        entries: rho,
        sites: (j, k),
    })
}

/// D(ρ‖σ) = Tr ρ(ln ρ − ln σ) in nats with the default floor.
pub fn relative_entropy(rho: &PairDensityMatrix, sigma: &PairDensityMatrix) -> Result<f64> {
    relative_entropy_with_floor(rho, sigma, DEFAULT_ENTROPY_FLOOR)
}

/// Relative entropy where eigenvalues of `sigma` below `floor` are raised to
/// `floor` before the logarithm, keeping D finite for rank-deficient σ.
///
/// The floored spectrum is not renormalized: renormalizing shifts D(ρ‖ρ) by
/// ln(1 + k·floor), which the square root in the local reward turns into an
/// O(√floor) offset.
pub fn relative_entropy_with_floor(
    rho: &PairDensityMatrix,
    sigma: &PairDensityMatrix,
    floor: f64,
) -> Result<f64> {
    rho.validate()?;
    sigma.validate()?;
    if rho.entries == sigma.entries {
        return Ok(0.0);
    }
    let rho_eig = SymmetricEigen::new(rho.hermitian_part());
    let neg_entropy: f64 = rho_eig
        .eigenvalues
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum();

    let sigma_eig = SymmetricEigen::new(sigma.hermitian_part());
    let spectrum = sigma_eig.eigenvalues.map(|p| p.max(floor));
    // Tr ρ ln σ = Σ_l ln μ_l ⟨v_l|ρ|v_l⟩
    let rho_h = rho.hermitian_part();
    let cross: f64 = (0..4)
        .map(|l| {
            let v = sigma_eig.eigenvectors.column(l);
            let weight = (v.adjoint() * rho_h * v)[(0, 0)].re;
            weight * spectrum[l].ln()
        })
        .sum();
    Ok((neg_entropy - cross).max(0.0))
}

/// |⟨ψ_dqs|ψ_target⟩|²
pub fn fidelity_reward(psi_dqs: &StateVector, psi_target: &StateVector) -> Result<f64> {
    Ok(psi_dqs.overlap(psi_target)?.norm_sqr().min(1.0))
}

/// 1 − 2/(N(N−1)) Σ_{j<k} √D(ρ^{jk}_target ‖ σ^{jk}_dqs), not clamped.
pub fn local_reward_raw(
    psi_dqs: &StateVector,
    psi_target: &StateVector,
    floor: f64,
) -> Result<f64> {
    psi_dqs.check_same_size(psi_target)?;
    let n = psi_dqs.n_qubits();
    if n < 2 {
        return Err(DqsError::TooFewQubits {
            required: 2,
            actual: n,
        });
    }
    let mut total = 0.0;
    for j in 0..n {
        for k in j + 1..n {
            let rho = partial_trace_pair(psi_target, j, k)?;
            let sigma = partial_trace_pair(psi_dqs, j, k)?;
            total += relative_entropy_with_floor(&rho, &sigma, floor)?.sqrt();
        }
    }
    Ok(1.0 - 2.0 * total / (n * (n - 1)) as f64)
}

/// Local reward clamped to [0, 1].
pub fn local_reward(psi_dqs: &StateVector, psi_target: &StateVector) -> Result<f64> {
    local_reward_with_floor(psi_dqs, psi_target, DEFAULT_ENTROPY_FLOOR)
}

pub fn local_reward_with_floor(
    psi_dqs: &StateVector,
    psi_target: &StateVector,
    floor: f64,
) -> Result<f64> {
    Ok(local_reward_raw(psi_dqs, psi_target, floor)?.clamp(0.0, 1.0))
}

pub fn reward(
    kind: RewardKind,
    psi_dqs: &StateVector,
    psi_target: &StateVector,
    floor: f64,
) -> Result<f64> {
    match kind {
        RewardKind::Fidelity => fidelity_reward(psi_dqs, psi_target),
        RewardKind::Local => local_reward_with_floor(psi_dqs, psi_target, floor),
    }
}

/// A two-body observable O = 2/(N(N−1)) Σ_{j<k} O^{jk}, one 4×4 block per
/// pair in lexicographic (j, k) order.
#[derive(Debug, Clone)]
pub struct PairObservable {
    pub n_qubits: usize,
    pub blocks: Vec<Matrix4<Complex64>>,
}

impl PairObservable {
    pub fn new(n_qubits: usize, blocks: Vec<Matrix4<Complex64>>) -> Result<Self> {
        let pairs = n_qubits * n_qubits.saturating_sub(1) / 2;
        if n_qubits < 2 || blocks.len() != pairs {
            return Err(DqsError::InvalidParameter(format!(
                "expected {pairs} observable blocks for {n_qubits} qubits, got {}",
                blocks.len()
            )));
        }
        if blocks.iter().any(|b| b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return Err(DqsError::InvalidParameter("non-finite observable entry".into()));
        }
        Ok(Self { n_qubits, blocks })
    }

    pub fn expectation(&self, psi: &StateVector) -> Result<Complex64> {
        if psi.n_qubits() != self.n_qubits {
            return Err(DqsError::DimensionMismatch {
                expected: self.n_qubits,
                actual: psi.n_qubits(),
            });
        }
        let n = self.n_qubits;
        let mut total = Complex64::new(0.0, 0.0);
        let mut blocks = self.blocks.iter();
        for j in 0..n {
            for k in j + 1..n {
                let rho = partial_trace_pair(psi, j, k)?;
                total += (rho.entries * blocks.next().unwrap()).trace();
            }
        }
        Ok(total * (2.0 / (n * (n - 1)) as f64))
    }

    /// max_{j,k} ‖O^{jk}‖_∞ (largest singular value).
    pub fn max_operator_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(operator_norm)
            .fold(0.0, f64::max)
    }
}

pub fn operator_norm(m: &Matrix4<Complex64>) -> f64 {
    m.singular_values().max()
}

pub fn trace_norm(m: &Matrix4<Complex64>) -> f64 {
    m.singular_values().sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates |⟨O⟩_target − ⟨O⟩_dqs| ≤ √2 max‖O^{jk}‖_∞ · ε with
/// ε = 1 − R_local (unclamped).
pub fn check_observable_bound(
    psi_dqs: &StateVector,
    psi_target: &StateVector,
    observable: &PairObservable,
    floor: f64,
) -> Result<BoundCheck> {
    let eps = 1.0 - local_reward_raw(psi_dqs, psi_target, floor)?;
    let lhs = (observable.expectation(psi_target)? - observable.expectation(psi_dqs)?).norm();
    let rhs = std::f64::consts::SQRT_2 * observable.max_operator_norm() * eps;
    Ok(BoundCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9,
    })
}

/// Single-site expectation values and derived observables of one state.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableReport {
    pub sx: Vec<f64>,
    pub sz: Vec<f64>,
    pub mx: f64,
    pub mz: f64,
    pub energy: f64,
    pub loschmidt: f64,
    /// Particle density (1/2N) Σ_j ⟨(−1)^j σᶻ_j + 1⟩.
    pub nu: f64,
    /// C_zz(j, j+1) for j = 1..N−1.
    pub czz: Vec<f64>,
    /// C_zz(N/2, N/2+1), NaN for a single site.
    pub czz_mid: f64,
}

pub fn observable_report(
    psi: &StateVector,
    spec: &HamiltonianSpec,
    psi0: &StateVector,
) -> Result<ObservableReport> {
    observable_report_with(psi, &spec.build(), psi0)
}

/// As [`observable_report`] with a prebuilt Hamiltonian.
pub fn observable_report_with(
    psi: &StateVector,
    hamiltonian: &Hamiltonian,
    psi0: &StateVector,
) -> Result<ObservableReport> {
    psi.check_same_size(psi0)?;
    let n = psi.n_qubits();
    let amps = psi.amplitudes();
    let probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
    let spin = |x: usize, j: usize| if (x >> j) & 1 == 0 { 1.0 } else { -1.0 };

    let sz: Vec<f64> = (0..n)
        .map(|j| probs.iter().enumerate().map(|(x, p)| p * spin(x, j)).sum())
        .collect();
    let sx: Vec<f64> = (0..n)
        .map(|j| {
            let bit = 1 << j;
            (0..amps.len())
                .filter(|x| x & bit == 0)
                .map(|x| 2.0 * (amps[x].conj() * amps[x | bit]).re)
                .sum()
        })
        .collect();
    let czz: Vec<f64> = (0..n.saturating_sub(1))
        .map(|j| {
            let zz: f64 = probs
                .iter()
                .enumerate()
                .map(|(x, p)| p * spin(x, j) * spin(x, j + 1))
                .sum();
            zz - sz[j] * sz[j + 1]
        })
        .collect();
    let czz_mid = if n >= 2 { czz[n / 2 - 1] } else { f64::NAN };
    let nu = (0..n).map(|j| staggered(j) * sz[j] + 1.0).sum::<f64>() / (2 * n) as f64;

    Ok(ObservableReport {
        mx: sx.iter().sum::<f64>() / n as f64,
        mz: sz.iter().sum::<f64>() / n as f64,
        energy: hamiltonian.expectation(psi)?,
        loschmidt: psi0.overlap(psi)?.norm_sqr(),
        nu,
        czz_mid,
        sx,
        sz,
        czz,
    })
}
