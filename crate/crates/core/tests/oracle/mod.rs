//! Dense-matrix reference implementations used only by the tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix4};
use num_complex::Complex64;
use rand::Rng;

use dqs_core::StateVector;

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_x() -> CMat {
    DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> CMat {
    DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> CMat {
    DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// σ⁺ = |↑⟩⟨↓| with ↑ = basis index 0.
pub fn sigma_plus() -> CMat {
    DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)])
}

pub fn sigma_minus() -> CMat {
    sigma_plus().adjoint()
}

pub fn identity(dim: usize) -> CMat {
    DMatrix::identity(dim, dim)
}

/// `op` on site `j` of an `n`-site chain; site j is bit j of the index, so
/// the highest site is the leftmost Kronecker factor.
pub fn site_op(op: &CMat, j: usize, n: usize) -> CMat {
    let mut m = identity(1);
    for site in (0..n).rev() {
        let factor = if site == j { op.clone() } else { identity(2) };
        m = m.kronecker(&factor);
    }
    m
}

/// Matrix exponential by scaling and squaring of a Taylor series.
pub fn expm(a: &CMat) -> CMat {
    let norm: f64 = a.iter().map(|z| z.norm()).sum::<f64>().max(1e-300);
    let squarings = (norm.log2().ceil().max(0.0) as u32) + 4;
    let scaled = a * c(1.0 / 2f64.powi(squarings as i32), 0.0);
    let dim = a.nrows();
    let mut term = identity(dim);
    let mut sum = identity(dim);
    for k in 1..30 {
        term = &term * &scaled * c(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// e^{−iθG}
pub fn unitary(generator: &CMat, theta: f64) -> CMat {
    expm(&(generator * c(0.0, -theta)))
}

pub fn xx_generator(n: usize, alpha: f64) -> CMat {
    let dim = 1 << n;
    let mut g = DMatrix::zeros(dim, dim);
    for j in 0..n {
        for k in j + 1..n {
            let w = 1.0 / ((k - j) as f64).powf(alpha);
            g += site_op(&pauli_x(), j, n) * site_op(&pauli_x(), k, n) * c(w, 0.0);
        }
    }
    g
}

pub fn to_vec(psi: &StateVector) -> DVector<Complex64> {
    DVector::from_column_slice(psi.amplitudes())
}

pub fn from_vec(v: &DVector<Complex64>) -> StateVector {
    StateVector::from_amplitudes(v.iter().copied().collect()).unwrap()
}

pub fn max_diff(a: &StateVector, b: &DVector<Complex64>) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn random_state<R: Rng>(n: usize, rng: &mut R) -> StateVector {
    let amps = (0..1usize << n)
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut psi = StateVector::from_amplitudes(amps).unwrap();
    psi.normalize();
    psi
}

pub fn random_hermitian4<R: Rng>(rng: &mut R) -> Matrix4<Complex64> {
    let a = Matrix4::from_fn(|_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    (a + a.adjoint()) * c(0.5, 0.0)
}

/// Random full-rank-ish density matrix: A A† / Tr(A A†).
pub fn random_density4<R: Rng>(rng: &mut R) -> Matrix4<Complex64> {
    let a = Matrix4::from_fn(|_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let m = a * a.adjoint();
    let tr = m.trace();
    m / tr
}

/// ρ^{jk} from the full outer product |ψ⟩⟨ψ| by explicit index summation.
pub fn dense_pair_marginal(psi: &StateVector, j: usize, k: usize) -> Matrix4<Complex64> {
    let v = to_vec(psi);
    let full = &v * v.adjoint();
    let n = psi.n_qubits();
    let dim = 1usize << n;
    let mut rho = Matrix4::zeros();
    for x in 0..dim {
        for y in 0..dim {
            let others = !((1usize << j) | (1usize << k));
            if x & others != y & others {
                continue;
            }
            let a = (((x >> j) & 1) << 1) | ((x >> k) & 1);
            let b = (((y >> j) & 1) << 1) | ((y >> k) & 1);
            rho[(a, b)] += full[(x, y)];
        }
    }
    rho
}
