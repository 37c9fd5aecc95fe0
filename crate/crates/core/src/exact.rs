//! Exact ground states: thick-restart Lanczos on the matrix-free operator,
//! and full dense diagonalization for small registers.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{dense_matrix, PauliSum, DENSE_MAX_QUBITS};
use crate::simulator::{inner, PauliOperator, StateVector};
use crate::DEFAULT_MAX_QUBITS;

/// Gap (in units of |J∥|) below which a ground state is flagged degenerate.
pub const NEAR_DEGENERATE_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LanczosConfig {
    /// Basis size at which the iteration thick-restarts.
    #[serde(default = "default_krylov")]
    pub max_krylov: usize,
    /// Absolute residual target; `None` means `1e−10 · max(1, |E|)`.
    #[serde(default)]
    pub residual_tol: Option<f64>,
    #[serde(default = "yes")]
    pub reorthogonalize: bool,
    #[serde(default)]
    pub rng_seed: u64,
    /// Budget of operator applications before giving up.
    #[serde(default = "default_max_matvecs")]
    pub max_matvecs: usize,
}

fn default_krylov() -> usize {
    40
}

fn default_max_matvecs() -> usize {
    5000
}

fn yes() -> bool {
    true
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            max_krylov: default_krylov(),
            residual_tol: None,
            reorthogonalize: true,
            rng_seed: 0,
            max_matvecs: default_max_matvecs(),
        }
    }
}

impl LanczosConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_krylov < 2 {
            return Err(Error::InvalidConfig("max_krylov must be >= 2".into()));
        }
        if let Some(t) = self.residual_tol {
            if !(t > 0.0) {
                return Err(Error::InvalidConfig("residual_tol must be > 0".into()));
            }
        }
        if self.max_matvecs == 0 {
            return Err(Error::InvalidConfig("max_matvecs must be >= 1".into()));
        }
        Ok(())
    }

    fn tolerance(&self, energy: f64) -> f64 {
        self.residual_tol.unwrap_or(1e-10 * energy.abs().max(1.0))
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub vector: StateVector,
    /// `‖H v − E v‖`, computed explicitly.
    pub residual: f64,
    /// Distance to the next Ritz value (or eigenvalue for the dense solver).
    pub gap_estimate: f64,
    pub near_degenerate: bool,
    /// Operator applications used (0 for the dense solver).
    pub matvecs: usize,
    /// Lowest Ritz value after each basis extension.
    pub ritz_trace: Vec<f64>,
    /// Largest |⟨q_i, q_j⟩|, i ≠ j, over the final stored basis.
    pub orthogonality_loss: f64,
}

/// Lowest eigenpair of `op` by thick-restart Lanczos.
///
/// The basis is extended with full Gram–Schmidt against every stored vector
/// (applied twice when `reorthogonalize` is set), so the projected matrix is
/// formed directly from the overlaps. When the basis reaches `max_krylov`
/// vectors the lowest third of the Ritz vectors is kept together with the
/// current residual direction.
pub fn lanczos_ground(op: &PauliSum, config: &LanczosConfig) -> Result<GroundState> {
    config.validate()?;
    if op.n_qubits() > DEFAULT_MAX_QUBITS {
        return Err(Error::TooManyQubits {
            requested: op.n_qubits(),
            cap: DEFAULT_MAX_QUBITS,
        });
    }
    let h = PauliOperator::new(op);
    let dim = h.dim();
    let m_max = config.max_krylov.min(dim);
    let keep = (m_max / 3).max(1).min(m_max - 1);

    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m_max + 1);
    basis.push(start_vector(dim, config.rng_seed));
    // projected matrix, row-major m_max × m_max
    let mut t = vec![0.0f64; m_max * m_max];
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut matvecs = 0usize;
    let mut trace = Vec::new();
    let mut best: Option<(f64, f64)> = None; // (residual, energy)

    loop {
        let j = basis.len() - 1;
        h.apply_into(&basis[j], &mut w)?;
        matvecs += 1;
        let mut coeffs = project_out(&basis, &mut w);
        if config.reorthogonalize {
            let again = project_out(&basis, &mut w);
            for (c, a) in coeffs.iter_mut().zip(again) {
                *c += a;
            }
        }
        for (i, c) in coeffs.iter().enumerate() {
            t[i * m_max + j] = c.re;
            t[j * m_max + i] = c.re;
        }
        let beta = crate::simulator::norm_sqr(&w).sqrt();
        let m = j + 1;

        let eig = projected_eigen(&t, m_max, m);
        let theta0 = eig.eigenvalues[0];
        trace.push(theta0);
        let s0 = eig.eigenvectors.column(0);
        let estimate = beta * s0[m - 1].abs();
        let tol = config.tolerance(theta0);
        let exhausted = beta <= 1e-13 * (1.0 + theta0.abs()) || m == dim;

        if estimate <= tol || exhausted {
            let coeffs: Vec<f64> = s0.iter().copied().collect();
            let mut v = combine(&basis, &coeffs, dim);
            normalize(&mut v);
            h.apply_into(&v, &mut w)?;
            matvecs += 1;
            let energy = inner(&v, &w).re;
            let residual = residual_norm(&w, &v, energy);
            if residual <= config.tolerance(energy) || exhausted {
                let gap = if m > 1 { eig.eigenvalues[1] - theta0 } else { f64::INFINITY };
                let orthogonality_loss = max_overlap(&basis);
                return Ok(GroundState {
                    energy,
                    vector: StateVector::from_amplitudes(v)?,
                    residual,
                    gap_estimate: gap,
                    near_degenerate: gap < NEAR_DEGENERATE_GAP,
                    matvecs,
                    ritz_trace: trace,
                    orthogonality_loss,
                });
            }
            if best.is_none_or(|(r, _)| residual < r) {
                best = Some((residual, energy));
            }
        }
        if matvecs >= config.max_matvecs {
            return Err(Error::NotConverged {
                matvecs,
                best_residual: best.map_or(estimate, |(r, _)| r.min(estimate)),
            });
        }

        let next: Vec<Complex64> = w.iter().map(|x| x / beta).collect();
        if m < m_max {
            basis.push(next);
            continue;
        }

        // Thick restart: keep the `keep` lowest Ritz vectors plus `next`.
        let mut kept = Vec::with_capacity(keep + 1);
        let mut t_new = vec![0.0f64; m_max * m_max];
        for k in 0..keep {
            let s: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            kept.push(combine(&basis, &s, dim));
            t_new[k * m_max + k] = eig.eigenvalues[k];
            let coupling = beta * s[m - 1];
            t_new[k * m_max + keep] = coupling;
            t_new[keep * m_max + k] = coupling;
        }
        kept.push(next);
        basis = kept;
        t = t_new;
    }
}

/// Normalized complex Gaussian start vector from `seed`.
fn start_vector(dim: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    normalize(&mut v);
    v
}

fn normalize(v: &mut [Complex64]) {
    let n = crate::simulator::norm_sqr(v).sqrt();
    v.par_iter_mut().for_each(|x| *x /= n);
}

/// Classical Gram–Schmidt pass; returns the removed overlaps `⟨q_i, w⟩`.
fn project_out(basis: &[Vec<Complex64>], w: &mut [Complex64]) -> Vec<Complex64> {
    let coeffs: Vec<Complex64> = basis.iter().map(|q| inner(q, w)).collect();
    w.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let (base, len) = (c * CHUNK, chunk.len());
        for (q, a) in basis.iter().zip(&coeffs) {
            for (x, y) in chunk.iter_mut().zip(&q[base..base + len]) {
                *x -= a * y;
            }
        }
    });
    coeffs
}

const CHUNK: usize = 1 << 12;

fn combine(basis: &[Vec<Complex64>], coeffs: &[f64], dim: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (q, &c) in basis.iter().zip(coeffs) {
        out.par_iter_mut().zip(q.par_iter()).for_each(|(x, y)| *x += c * y);
    }
    out
}

fn residual_norm(hv: &[Complex64], v: &[Complex64], energy: f64) -> f64 {
    hv.iter()
        .zip(v)
        .map(|(a, b)| (a - b * energy).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn max_overlap(basis: &[Vec<Complex64>]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..basis.len() {
        for j in 0..i {
            worst = worst.max(inner(&basis[i], &basis[j]).norm());
        }
    }
    worst
}

/// Eigen-decomposition of the leading `m × m` block, ascending eigenvalues.
fn projected_eigen(t: &[f64], stride: usize, m: usize) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let block = DMatrix::from_fn(m, m, |i, j| t[i * stride + j]);
    sort_eigen(block.symmetric_eigen())
}

fn sort_eigen<T: nalgebra::ComplexField<RealField = f64>>(
    eig: SymmetricEigen<T, nalgebra::Dyn>,
) -> SymmetricEigen<T, nalgebra::Dyn> {
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = nalgebra::DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])].clone());
    SymmetricEigen {
        eigenvalues,
        eigenvectors,
    }
}

/// Full spectrum of the dense matrix; returns the lowest eigenpair.
pub fn dense_ground(op: &PauliSum) -> Result<GroundState> {
    dense_spectrum(op).map(|(_, gs)| gs)
}

/// Sorted eigenvalues and the lowest eigenpair (`N ≤ 12`).
pub fn dense_spectrum(op: &PauliSum) -> Result<(Vec<f64>, GroundState)> {
    if op.n_qubits() > DENSE_MAX_QUBITS {
        return Err(Error::TooManyQubits {
            requested: op.n_qubits(),
            cap: DENSE_MAX_QUBITS,
        });
    }
    let m = dense_matrix(op)?;
    let eig = sort_eigen(m.clone().symmetric_eigen());
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let v: Vec<Complex64> = eig.eigenvectors.column(0).iter().copied().collect();
    let hv = &m * nalgebra::DVector::from_column_slice(&v);
    let energy = values[0];
    let residual = residual_norm(hv.as_slice(), &v, energy);
    let gap = values.get(1).map_or(f64::INFINITY, |e1| e1 - energy);
    let gs = GroundState {
        energy,
        vector: StateVector::from_amplitudes(v)?,
        residual,
        gap_estimate: gap,
        near_degenerate: gap < NEAR_DEGENERATE_GAP,
        matvecs: 0,
        ritz_trace: Vec::new(),
        orthogonality_loss: 0.0,
    };
    Ok((values, gs))
}
