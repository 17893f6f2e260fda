//! Long-range Ising and lattice Schwinger Hamiltonians, exact propagation
//! and the first-order Trotter circuit for the Ising chain.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DqsError, Result};
use crate::statevec::{CircuitParams, StateVector, StepAngles};

/// Model parameters. Field names follow the usual physics notation in the
/// serialized form (`J`, `m_x`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Model {
    /// J Σ_{j<k} σˣ_jσˣ_k/|k−j|^α + m_x Σ σˣ_j + m_z Σ σᶻ_j
    Lri {
        #[serde(rename = "J", default = "one")]
        coupling: f64,
        #[serde(default = "two")]
        m_x: f64,
        #[serde(default = "two")]
        m_z: f64,
        #[serde(default = "three")]
        alpha: f64,
    },
    /// w Σ [σ⁺_jσ⁻_{j+1} + h.c.] + (m/2) Σ (−1)^j σᶻ_j
    ///   + (J/2) Σ_{j=1}^{N−1} [Σ_{m≤j} (σᶻ_m + (−1)^m)]²
    Schwinger {
        #[serde(default = "one")]
        w: f64,
        #[serde(rename = "J", default = "one")]
        coupling: f64,
        #[serde(default = "half")]
        m: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn three() -> f64 {
    3.0
}
fn half() -> f64 {
    0.5
}

impl Model {
    pub fn lri_default() -> Self {
        Model::Lri {
            coupling: 1.0,
            m_x: 2.0,
            m_z: 2.0,
            alpha: 3.0,
        }
    }

    pub fn schwinger_default() -> Self {
        Model::Schwinger {
            w: 1.0,
            coupling: 1.0,
            m: 0.5,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Lri { .. } => "lri",
            Model::Schwinger { .. } => "schwinger",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub model: Model,
    pub n_qubits: usize,
}

impl HamiltonianSpec {
    pub fn new(model: Model, n_qubits: usize) -> Result<Self> {
        let required = match model {
            Model::Lri { .. } => 1,
            Model::Schwinger { .. } => 2,
        };
        if n_qubits < required {
            return Err(DqsError::TooFewQubits {
                required,
                actual: n_qubits,
            });
        }
        Ok(Self { model, n_qubits })
    }

    /// |↑…↑⟩ for the Ising chain, the bare vacuum for Schwinger.
    pub fn initial_state(&self) -> Result<StateVector> {
        match self.model {
            Model::Lri { .. } => StateVector::all_up(self.n_qubits),
            Model::Schwinger { .. } => StateVector::neel(self.n_qubits),
        }
    }

    /// Exponent of the entangling gate used to simulate this model.
    pub fn default_gate_alpha(&self) -> f64 {
        match self.model {
            Model::Lri { alpha, .. } => alpha,
            Model::Schwinger { .. } => 1.0,
        }
    }

    pub fn build(&self) -> Hamiltonian {
        Hamiltonian::new(self)
    }
}

/// σᶻσᶻ expansion of a diagonal operator: Σ c_jk s_j s_k + Σ h_j s_j + c.
#[derive(Debug, Clone, PartialEq)]
pub struct ZzExpansion {
    pub pairs: Vec<(usize, usize, f64)>,
    pub fields: Vec<f64>,
    pub constant: f64,
}

impl ZzExpansion {
    /// Gauge-field energy (J/2) Σ_{j=1}^{N−1} L_j², with
    /// L_j = Σ_{m=1}^{j} (σᶻ_m + (−1)^m), expanded using (σᶻ)² = 1.
    pub fn schwinger_gauge(n_qubits: usize, coupling: f64) -> Self {
        let pref = coupling / 2.0;
        let mut pair_coeff = vec![vec![0.0; n_qubits]; n_qubits];
        let mut fields = vec![0.0; n_qubits];
        let mut constant = 0.0;
        let mut offset = 0.0;
        // `len` sites enter L_len (physical indices 1..=len).
        for len in 1..n_qubits {
            offset += staggered(len - 1);
            constant += pref * (len as f64 + offset * offset);
            for a in 0..len {
                fields[a] += pref * 2.0 * offset;
                for b in a + 1..len {
                    pair_coeff[a][b] += pref * 2.0;
                }
            }
        }
        let mut pairs = Vec::new();
        for (a, row) in pair_coeff.iter().enumerate() {
            for (b, &c) in row.iter().enumerate().skip(a + 1) {
                if c != 0.0 {
                    pairs.push((a, b, c));
                }
            }
        }
        Self {
            pairs,
            fields,
            constant,
        }
    }

    /// Value on the computational basis state `index`.
    pub fn evaluate(&self, index: usize) -> f64 {
        let s = |j: usize| if (index >> j) & 1 == 0 { 1.0 } else { -1.0 };
        self.constant
            + self
                .fields
                .iter()
                .enumerate()
                .map(|(j, h)| h * s(j))
                .sum::<f64>()
            + self
                .pairs
                .iter()
                .map(|&(j, k, c)| c * s(j) * s(k))
                .sum::<f64>()
    }
}

/// (−1)^j for the 0-based site `i` (physical index j = i + 1).
pub fn staggered(site: usize) -> f64 {
    if site % 2 == 0 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy)]
struct Flip {
    mask: usize,
    coeff: f64,
    /// Only acts when the two masked bits differ (σ⁺σ⁻ + h.c.).
    hopping: bool,
}

/// Matrix-free real Hamiltonian: a diagonal in the σᶻ basis plus bit-flip terms.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    n_qubits: usize,
    diagonal: Vec<f64>,
    flips: Vec<Flip>,
}

impl Hamiltonian {
    pub fn new(spec: &HamiltonianSpec) -> Self {
        let n = spec.n_qubits;
        let dim = 1usize << n;
        let s = |x: usize, j: usize| if (x >> j) & 1 == 0 { 1.0 } else { -1.0 };
        match spec.model {
            Model::Lri {
                coupling,
                m_x,
                m_z,
                alpha,
            } => {
                let diagonal = (0..dim)
                    .map(|x| m_z * (0..n).map(|j| s(x, j)).sum::<f64>())
                    .collect();
                let mut flips = Vec::new();
                for j in 0..n {
                    for k in j + 1..n {
                        flips.push(Flip {
                            mask: (1 << j) | (1 << k),
                            coeff: coupling / ((k - j) as f64).powf(alpha),
                            hopping: false,
                        });
                    }
                }
                if m_x != 0.0 {
                    flips.extend((0..n).map(|j| Flip {
                        mask: 1 << j,
                        coeff: m_x,
                        hopping: false,
                    }));
                }
                Self {
                    n_qubits: n,
                    diagonal,
                    flips,
                }
            }
            Model::Schwinger { w, coupling, m } => {
                let gauge = ZzExpansion::schwinger_gauge(n, coupling);
                let diagonal = (0..dim)
                    .map(|x| {
                        let mass: f64 = (0..n).map(|j| staggered(j) * s(x, j)).sum();
                        0.5 * m * mass + gauge.evaluate(x)
                    })
                    .collect();
                let flips = (0..n - 1)
                    .map(|j| Flip {
                        mask: 0b11 << j,
                        coeff: w,
                        hopping: true,
                    })
                    .collect();
                Self {
                    n_qubits: n,
                    diagonal,
                    flips,
                }
            }
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]) {
        for ((o, &d), &a) in out.iter_mut().zip(&self.diagonal).zip(input) {
            *o = a * d;
        }
        for flip in &self.flips {
            for (x, o) in out.iter_mut().enumerate() {
                if flip.hopping {
                    let bits = x & flip.mask;
                    if bits == 0 || bits == flip.mask {
                        continue;
                    }
                }
                *o += input[x ^ flip.mask] * flip.coeff;
            }
        }
    }

    /// H|ψ⟩
    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.check(psi)?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply_into(psi.amplitudes(), &mut out);
        StateVector::from_amplitudes(out)
    }

    /// ⟨ψ|H|ψ⟩
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        let h_psi = self.apply(psi)?;
        Ok(psi.overlap(&h_psi)?.re)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let mut m = DMatrix::from_diagonal(&DVector::from_column_slice(&self.diagonal));
        for flip in &self.flips {
            for x in 0..dim {
                if flip.hopping {
                    let bits = x & flip.mask;
                    if bits == 0 || bits == flip.mask {
                        continue;
                    }
                }
                m[(x, x ^ flip.mask)] += flip.coeff;
            }
        }
        m
    }

    fn check(&self, psi: &StateVector) -> Result<()> {
        if psi.n_qubits() != self.n_qubits {
            return Err(DqsError::DimensionMismatch {
                expected: self.n_qubits,
                actual: psi.n_qubits(),
            });
        }
        Ok(())
    }
}

/// H|ψ⟩ for a model specification.
pub fn apply_hamiltonian(spec: &HamiltonianSpec, psi: &StateVector) -> Result<StateVector> {
    spec.build().apply(psi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvolutionMethod {
    /// Dense up to `AUTO_DENSE_MAX_QUBITS`, Krylov above.
    Auto,
    DenseEigen,
    Krylov,
}

pub const AUTO_DENSE_MAX_QUBITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub tau: f64,
    pub method: EvolutionMethod,
    pub krylov_dim: usize,
    pub substep_tolerance: f64,
    /// Dense diagonalization is refused above this many qubits.
    pub dense_max_qubits: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            tau: 0.0,
            method: EvolutionMethod::Auto,
            krylov_dim: 30,
            substep_tolerance: 1e-10,
            dense_max_qubits: 12,
        }
    }
}

impl EvolutionConfig {
    pub fn at(tau: f64) -> Self {
        Self {
            tau,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0) {
            return Err(DqsError::InvalidParameter(format!(
                "evolution time must be >= 0, got {}",
                self.tau
            )));
        }
        if self.krylov_dim < 2 {
            return Err(DqsError::InvalidParameter("krylov_dim must be >= 2".into()));
        }
        if !(self.substep_tolerance > 0.0) {
            return Err(DqsError::InvalidParameter(
                "substep_tolerance must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// e^{−iHτ}|ψ₀⟩
pub fn exact_evolve(
    spec: &HamiltonianSpec,
    psi0: &StateVector,
    cfg: &EvolutionConfig,
) -> Result<StateVector> {
    cfg.validate()?;
    if cfg.tau == 0.0 {
        spec.build().check(psi0)?;
        return Ok(psi0.clone());
    }
    Propagator::new(spec, cfg)?.evolve(psi0, cfg.tau)
}

/// Reusable e^{−iHτ} for many times τ. The dense variant keeps the full
/// eigendecomposition of H.
#[derive(Debug, Clone)]
pub enum Propagator {
    Dense(DenseSpectrum),
    Krylov {
        hamiltonian: Hamiltonian,
        krylov_dim: usize,
        tolerance: f64,
    },
}

#[derive(Debug, Clone)]
pub struct DenseSpectrum {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl Propagator {
    pub fn new(spec: &HamiltonianSpec, cfg: &EvolutionConfig) -> Result<Self> {
        cfg.validate()?;
        let hamiltonian = spec.build();
        let method = match cfg.method {
            EvolutionMethod::Auto if spec.n_qubits <= AUTO_DENSE_MAX_QUBITS => {
                EvolutionMethod::DenseEigen
            }
            EvolutionMethod::Auto => EvolutionMethod::Krylov,
            m => m,
        };
        match method {
            EvolutionMethod::DenseEigen => {
                if spec.n_qubits > cfg.dense_max_qubits {
                    return Err(DqsError::DenseTooLarge {
                        n_qubits: spec.n_qubits,
                        cap: cfg.dense_max_qubits,
                    });
                }
                let eig = SymmetricEigen::new(hamiltonian.to_dense());
                Ok(Propagator::Dense(DenseSpectrum {
                    eigenvalues: eig.eigenvalues,
                    eigenvectors: eig.eigenvectors,
                }))
            }
            _ => Ok(Propagator::Krylov {
                hamiltonian,
                krylov_dim: cfg.krylov_dim,
                tolerance: cfg.substep_tolerance,
            }),
        }
    }

    /// Hilbert-space dimension the propagator acts on.
    pub fn dim(&self) -> usize {
        match self {
            Propagator::Dense(spec) => spec.eigenvalues.len(),
            Propagator::Krylov { hamiltonian, .. } => hamiltonian.dim(),
        }
    }

    /// e^{−iHτ}ψ₀; τ = 0 returns ψ₀ unchanged rather than V·Vᵀ·ψ₀.
    pub fn evolve(&self, psi0: &StateVector, tau: f64) -> Result<StateVector> {
        if !(tau >= 0.0) {
            return Err(DqsError::InvalidParameter(format!(
                "evolution time must be >= 0, got {tau}"
            )));
        }
        if tau == 0.0 {
            if psi0.dim() != self.dim() {
                return Err(DqsError::DimensionMismatch {
                    expected: self.dim(),
                    actual: psi0.dim(),
                });
            }
            return Ok(psi0.clone());
        }
        match self {
            Propagator::Dense(spec) => spec.evolve(psi0, tau),
            Propagator::Krylov {
                hamiltonian,
                krylov_dim,
                tolerance,
            } => {
                hamiltonian.check(psi0)?;
                krylov_evolve(hamiltonian, psi0, tau, *krylov_dim, *tolerance)
            }
        }
    }
}

impl DenseSpectrum {
    fn evolve(&self, psi0: &StateVector, tau: f64) -> Result<StateVector> {
        let dim = self.eigenvalues.len();
        if psi0.dim() != dim {
            return Err(DqsError::DimensionMismatch {
                expected: dim.trailing_zeros() as usize,
                actual: psi0.n_qubits(),
            });
        }
        let re = DVector::from_iterator(dim, psi0.amplitudes().iter().map(|a| a.re));
        let im = DVector::from_iterator(dim, psi0.amplitudes().iter().map(|a| a.im));
        let (mut cr, mut ci) = (
            self.eigenvectors.tr_mul(&re),
            self.eigenvectors.tr_mul(&im),
        );
        for k in 0..dim {
            let phase = Complex64::from_polar(1.0, -self.eigenvalues[k] * tau);
            let c = Complex64::new(cr[k], ci[k]) * phase;
            cr[k] = c.re;
            ci[k] = c.im;
        }
        let (out_re, out_im) = (&self.eigenvectors * cr, &self.eigenvectors * ci);
        StateVector::from_amplitudes(
            out_re
                .iter()
                .zip(out_im.iter())
                .map(|(&r, &i)| Complex64::new(r, i))
                .collect(),
        )
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Lanczos propagation with adaptive substeps. Each substep builds one
/// Krylov basis and shrinks the step until the a-posteriori error estimate
/// β_m |[e^{−iT dt} e₁]_m| meets `tolerance`.
fn krylov_evolve(
    h: &Hamiltonian,
    psi0: &StateVector,
    tau: f64,
    krylov_dim: usize,
    tolerance: f64,
) -> Result<StateVector> {
    let dim = h.dim();
    let m_max = krylov_dim.min(dim);
    let mut psi: Vec<Complex64> = psi0.amplitudes().to_vec();
    let mut t = 0.0;
    let mut dt = tau;
    let mut substeps = 0usize;

    while t < tau {
        let beta0 = norm(&psi);
        if beta0 == 0.0 {
            break;
        }
        let mut basis: Vec<Vec<Complex64>> = vec![psi.iter().map(|a| a / beta0).collect()];
        let mut alphas = Vec::with_capacity(m_max);
        let mut betas: Vec<f64> = Vec::with_capacity(m_max);
        let mut w = vec![Complex64::new(0.0, 0.0); dim];
        let mut exhausted = false;
        for j in 0..m_max {
            h.apply_into(&basis[j], &mut w);
            let alpha = dot(&basis[j], &w).re;
            alphas.push(alpha);
            // Full reorthogonalization, twice for stability.
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
                }
            }
            let beta = norm(&w);
            if !beta.is_finite() || !alpha.is_finite() {
                return Err(DqsError::Krylov(format!(
                    "non-finite Lanczos coefficient at iteration {j}"
                )));
            }
            betas.push(beta);
            if beta < 1e-13 * (1.0 + alpha.abs()) || basis.len() == dim {
                // Invariant subspace: the projection is exact for any dt.
                exhausted = true;
                break;
            }
            if j + 1 < m_max {
                basis.push(w.iter().map(|x| x / beta).collect());
            }
        }
        let k = alphas.len();
        let mut tri = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            tri[(i, i)] = alphas[i];
            if i + 1 < k {
                tri[(i, i + 1)] = betas[i];
                tri[(i + 1, i)] = betas[i];
            }
        }
        let eig = SymmetricEigen::new(tri);
        let propagate = |dt: f64| -> Vec<Complex64> {
            (0..k)
                .map(|i| {
                    (0..k)
                        .map(|l| {
                            let s = eig.eigenvectors[(0, l)];
                            eig.eigenvectors[(i, l)]
                                * s
                                * Complex64::from_polar(1.0, -eig.eigenvalues[l] * dt)
                        })
                        .sum::<Complex64>()
                })
                .collect()
        };

        dt = dt.min(tau - t);
        let mut coeffs;
        let mut halvings = 0;
        loop {
            coeffs = propagate(dt);
            let err = if exhausted {
                0.0
            } else {
                betas[k - 1] * coeffs[k - 1].norm()
            };
            if err <= tolerance {
                break;
            }
            halvings += 1;
            if halvings > 60 {
                return Err(DqsError::Krylov(format!(
                    "substep tolerance {tolerance:e} not reachable at t = {t}"
                )));
            }
            log::debug!("krylov substep rejected: dt = {dt:e}, err = {err:e}");
            dt *= 0.5;
        }

        psi.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        for (c, q) in coeffs.iter().zip(&basis) {
            let c = c * beta0;
            psi.iter_mut().zip(q).for_each(|(a, qi)| *a += c * qi);
        }
        t += dt;
        substeps += 1;
        if halvings == 0 {
            dt *= 2.0;
        }
    }
    log::trace!("krylov propagation to tau = {tau} took {substeps} substeps");
    StateVector::from_amplitudes(psi)
}

/// First-order Trotter circuit for the Ising chain: every layer carries
/// θˣˣ = Jτ/n, θᶻ = m_zτ/n, θˣ = m_xτ/n.
pub fn trotter_params(spec: &HamiltonianSpec, tau: f64, n_steps: usize) -> Result<CircuitParams> {
    let Model::Lri {
        coupling,
        m_x,
        m_z,
        alpha,
    } = spec.model
    else {
        return Err(DqsError::NoTrotterDecomposition(spec.model.name()));
    };
    if n_steps == 0 {
        return Err(DqsError::InvalidParameter(
            "Trotter circuit needs at least one step".into(),
        ));
    }
    let dt = tau / n_steps as f64;
    let step = StepAngles {
        theta_xx: coupling * dt,
        theta_z: vec![m_z * dt; spec.n_qubits],
        theta_x: vec![m_x * dt; spec.n_qubits],
        alpha,
    };
    CircuitParams::new(vec![step; n_steps])
}
