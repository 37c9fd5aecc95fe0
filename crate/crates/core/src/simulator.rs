//! Exact statevector backend.
//!
//! Amplitudes are stored densely, qubit 0 in the least-significant bit. Gate
//! kernels update in place. Pauli strings are applied through their bit
//! masks: `P|b⟩ = c · i^{ny} (−1)^{popcount(b & z)} |b ⊕ x⟩`.
//!
//! Reductions are split into fixed-size chunks whose partial sums are added
//! in chunk order, so results do not depend on the rayon thread count.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::{Pauli, PauliString, PauliSum};
use crate::DEFAULT_MAX_QUBITS;

const CHUNK: usize = 1 << 12;

/// Imaginary parts of ⟨ψ|H|ψ⟩ above `IMAG_TOL · max(1, ‖H‖₁)` are rejected.
pub const IMAG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

/// `|0…0⟩` on `n` qubits, `1 ≤ n ≤ cap`.
pub fn zero_state_capped(n: usize, cap: usize) -> Result<StateVector> {
    if n == 0 || n > cap {
        return Err(Error::TooManyQubits {
            requested: n,
            cap,
        });
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    amps[0] = Complex64::new(1.0, 0.0);
    Ok(StateVector { n_qubits: n, amps })
}

/// `|0…0⟩` under the default qubit cap.
pub fn zero_state(n: usize) -> Result<StateVector> {
    zero_state_capped(n, DEFAULT_MAX_QUBITS)
}

impl StateVector {
    /// Wraps raw amplitudes; the length must be a power of two. The vector is
    /// taken as given, without normalization.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: len.next_power_of_two().max(2),
                got: len,
            });
        }
        Ok(Self {
            n_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
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
        norm_sqr(&self.amps).sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.amps.par_iter_mut().for_each(|a| *a *= inv);
        }
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::InvalidQubit {
                qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    /// Applies a 2×2 unitary `[[a, b], [c, d]]` to `qubit`.
    pub fn apply_single(&mut self, qubit: usize, u: [[Complex64; 2]; 2]) -> Result<()> {
        self.check_qubit(qubit)?;
        apply_single_unchecked(&mut self.amps, qubit, u);
        Ok(())
    }

    /// `exp(−iθX/2)`.
    pub fn apply_rx(&mut self, qubit: usize, theta: f64) -> Result<()> {
        self.apply_single(qubit, rx_matrix(theta))
    }

    /// `exp(−iθZ/2)`.
    pub fn apply_rz(&mut self, qubit: usize, theta: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        apply_rz_unchecked(&mut self.amps, qubit, theta);
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_pair(control, target)?;
        apply_cnot_unchecked(&mut self.amps, control, target);
        Ok(())
    }

    pub fn apply_cz(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_pair(control, target)?;
        apply_cz_unchecked(&mut self.amps, control, target);
        Ok(())
    }

    fn check_pair(&self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::SameControlTarget(control));
        }
        Ok(())
    }

    /// Probability that `qubit` reads 1.
    pub fn prob_one(&self, qubit: usize) -> f64 {
        let bit = 1usize << qubit;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

pub fn rx_matrix(theta: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (0.5 * theta).sin_cos();
    let c = Complex64::new(c, 0.0);
    let ms = Complex64::new(0.0, -s);
    [[c, ms], [ms, c]]
}

pub fn rz_matrix(theta: f64) -> [[Complex64; 2]; 2] {
    let zero = Complex64::new(0.0, 0.0);
    [
        [Complex64::from_polar(1.0, -0.5 * theta), zero],
        [zero, Complex64::from_polar(1.0, 0.5 * theta)],
    ]
}

/// Runs `f(lo, hi)` over every amplitude pair differing only in bit `qubit`.
#[inline]
fn for_each_pair<F>(amps: &mut [Complex64], qubit: usize, f: F)
where
    F: Fn(&mut Complex64, &mut Complex64) + Sync,
{
    let half = 1usize << qubit;
    let block = half << 1;
    let kernel = |chunk: &mut [Complex64]| {
        let (lo, hi) = chunk.split_at_mut(half);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            f(a, b);
        }
    };
    if amps.len() >= CHUNK && block <= CHUNK {
        amps.par_chunks_mut(CHUNK)
            .for_each(|c| c.chunks_mut(block).for_each(kernel));
    } else if amps.len() / block >= 2 {
        amps.par_chunks_mut(block).for_each(kernel);
    } else {
        let (lo, hi) = amps.split_at_mut(half);
        lo.par_iter_mut()
            .zip(hi.par_iter_mut())
            .with_min_len(CHUNK)
            .for_each(|(a, b)| f(a, b));
    }
}

pub(crate) fn apply_single_unchecked(amps: &mut [Complex64], qubit: usize, u: [[Complex64; 2]; 2]) {
    for_each_pair(amps, qubit, |a, b| {
        let (x, y) = (*a, *b);
        *a = u[0][0] * x + u[0][1] * y;
        *b = u[1][0] * x + u[1][1] * y;
    });
}

pub(crate) fn apply_rz_unchecked(amps: &mut [Complex64], qubit: usize, theta: f64) {
    let p0 = Complex64::from_polar(1.0, -0.5 * theta);
    let p1 = p0.conj();
    for_each_pair(amps, qubit, |a, b| {
        *a *= p0;
        *b *= p1;
    });
}

pub(crate) fn apply_cnot_unchecked(amps: &mut [Complex64], control: usize, target: usize) {
    let cbit = 1usize << control;
    let tbit = 1usize << target;
    // visit each swapped pair once: control set, target clear
    let swap = |base: usize, chunk: &mut [Complex64]| {
        for k in 0..chunk.len() {
            let i = base + k;
            if i & cbit != 0 && i & tbit == 0 {
                chunk.swap(k, k + tbit);
            }
        }
    };
    let block = (tbit << 1).max(CHUNK);
    if amps.len() <= block {
        swap(0, amps);
    } else {
        amps.par_chunks_mut(block)
            .enumerate()
            .for_each(|(c, chunk)| swap(c * block, chunk));
    }
}

pub(crate) fn apply_cz_unchecked(amps: &mut [Complex64], control: usize, target: usize) {
    let mask = (1usize << control) | (1usize << target);
    amps.par_iter_mut()
        .with_min_len(CHUNK)
        .enumerate()
        .for_each(|(i, a)| {
            if i & mask == mask {
                *a = -*a;
            }
        });
}

pub(crate) fn norm_sqr(v: &[Complex64]) -> f64 {
    let parts: Vec<f64> = v
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(|a| a.norm_sqr()).sum::<f64>())
        .collect();
    parts.iter().sum()
}

/// `⟨u, v⟩ = Σ conj(u_i) v_i`, deterministic reduction order.
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    let parts: Vec<Complex64> = u
        .par_chunks(CHUNK)
        .zip(v.par_chunks(CHUNK))
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>())
        .collect();
    parts.iter().sum()
}

/// A Pauli string compiled to bit masks with its phase folded into the weight.
#[derive(Debug, Clone, Copy)]
struct MaskTerm {
    x: usize,
    z: usize,
    /// `coeff · i^{ny}`
    weight: Complex64,
}

impl MaskTerm {
    fn new(s: &PauliString) -> Self {
        let (x, z, ny) = s.masks();
        let phase = match ny % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        Self {
            x: x as usize,
            z: z as usize,
            weight: phase * s.coeff,
        }
    }

    /// Signed weight for input basis index `b`.
    #[inline]
    fn at(&self, b: usize) -> Complex64 {
        if (b & self.z).count_ones() & 1 == 1 {
            -self.weight
        } else {
            self.weight
        }
    }
}

/// Groups whose strings touch at most this many distinct Z bits use a
/// lookup table of summed weights.
const TABLE_MAX_BITS: usize = 8;

/// The diagonal is cached as a dense vector up to this register size.
const DIAG_CACHE_MAX_QUBITS: usize = 22;

/// All strings sharing one flip mask `x`.
#[derive(Debug, Clone)]
enum Weights {
    /// Summed weight indexed by the bits of `b` at `positions`.
    Table { positions: Vec<u32>, table: Vec<Complex64> },
    Terms(Vec<MaskTerm>),
}

#[derive(Debug, Clone)]
struct Group {
    x: usize,
    weights: Weights,
}

impl Group {
    fn new(x: usize, terms: Vec<MaskTerm>) -> Self {
        let union = terms.iter().fold(0usize, |u, t| u | t.z);
        if union.count_ones() as usize > TABLE_MAX_BITS {
            return Self { x, weights: Weights::Terms(terms) };
        }
        let positions: Vec<u32> = (0..usize::BITS).filter(|&p| union >> p & 1 == 1).collect();
        let table = (0..1usize << positions.len())
            .map(|pattern| {
                let b = positions
                    .iter()
                    .enumerate()
                    .fold(0usize, |b, (k, &p)| b | ((pattern >> k & 1) << p));
                terms.iter().map(|t| t.at(b)).sum()
            })
            .collect();
        Self { x, weights: Weights::Table { positions, table } }
    }

    #[inline]
    fn at(&self, b: usize) -> Complex64 {
        match &self.weights {
            Weights::Table { positions, table } => {
                let mut k = 0;
                for (bit, &p) in positions.iter().enumerate() {
                    k |= (b >> p & 1) << bit;
                }
                table[k]
            }
            Weights::Terms(terms) => terms.iter().map(|t| t.at(b)).sum(),
        }
    }
}

/// Matrix-free form of a [`PauliSum`]: strings grouped by their flip mask.
///
/// Diagonal strings (no X/Y factors) form one group, cached as a dense
/// vector for moderate register sizes; the remaining strings are applied one
/// flip mask at a time.
#[derive(Debug, Clone)]
pub struct PauliOperator {
    n_qubits: usize,
    diagonal: Option<Group>,
    diag_cache: Option<Vec<f64>>,
    groups: Vec<Group>,
    one_norm: f64,
}

impl PauliOperator {
    pub fn new(op: &PauliSum) -> Self {
        let mut grouped: Vec<(usize, Vec<MaskTerm>)> = Vec::new();
        for t in op.terms() {
            let m = MaskTerm::new(t);
            match grouped.iter_mut().find(|(x, _)| *x == m.x) {
                Some((_, g)) => g.push(m),
                None => grouped.push((m.x, vec![m])),
            }
        }
        let mut diagonal = None;
        let mut groups = Vec::with_capacity(grouped.len());
        for (x, terms) in grouped {
            let g = Group::new(x, terms);
            if x == 0 {
                diagonal = Some(g);
            } else {
                groups.push(g);
            }
        }
        let n_qubits = op.n_qubits();
        let diag_cache = match &diagonal {
            Some(g) if n_qubits <= DIAG_CACHE_MAX_QUBITS => {
                Some((0..1usize << n_qubits).into_par_iter().map(|b| g.at(b).re).collect())
            }
            _ => None,
        };
        Self {
            n_qubits,
            diagonal,
            diag_cache,
            groups,
            one_norm: op.one_norm(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    /// `(H v)_j`.
    #[inline]
    fn row(&self, v: &[Complex64], j: usize) -> Complex64 {
        let mut acc = match (&self.diag_cache, &self.diagonal) {
            (Some(d), _) => v[j] * d[j],
            (None, Some(g)) => v[j] * g.at(j),
            (None, None) => Complex64::new(0.0, 0.0),
        };
        for g in &self.groups {
            let i = j ^ g.x;
            acc += g.at(i) * v[i];
        }
        acc
    }

    /// `out = H v`.
    pub fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        self.check_len(v.len())?;
        self.check_len(out.len())?;
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let base = c * CHUNK;
            match (&self.diag_cache, &self.diagonal) {
                (Some(d), _) => {
                    for (k, o) in chunk.iter_mut().enumerate() {
                        *o = v[base + k] * d[base + k];
                    }
                }
                (None, Some(g)) => {
                    for (k, o) in chunk.iter_mut().enumerate() {
                        *o = v[base + k] * g.at(base + k);
                    }
                }
                (None, None) => chunk.fill(Complex64::new(0.0, 0.0)),
            }
            for g in &self.groups {
                match &g.weights {
                    Weights::Table { positions, table } => {
                        for (k, o) in chunk.iter_mut().enumerate() {
                            let i = (base + k) ^ g.x;
                            let mut t = 0;
                            for (bit, &p) in positions.iter().enumerate() {
                                t |= (i >> p & 1) << bit;
                            }
                            *o += table[t] * v[i];
                        }
                    }
                    Weights::Terms(_) => {
                        for (k, o) in chunk.iter_mut().enumerate() {
                            let i = (base + k) ^ g.x;
                            *o += g.at(i) * v[i];
                        }
                    }
                }
            }
        });
        Ok(())
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    /// `⟨ψ|H|ψ⟩` without a scratch vector.
    pub fn expectation_complex(&self, psi: &[Complex64]) -> Result<Complex64> {
        self.check_len(psi.len())?;
        let parts: Vec<Complex64> = psi
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(c, chunk)| {
                let base = c * CHUNK;
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, a) in chunk.iter().enumerate() {
                    acc += a.conj() * self.row(psi, base + k);
                }
                acc
            })
            .collect();
        Ok(parts.iter().sum())
    }

    /// Real expectation value; rejects a significant imaginary residue.
    pub fn expectation(&self, psi: &[Complex64]) -> Result<f64> {
        let e = self.expectation_complex(psi)?;
        if e.im.abs() > IMAG_TOL * self.one_norm.max(1.0) {
            return Err(Error::NonHermitian(e.im));
        }
        Ok(e.re)
    }
}

/// `Σ coeff · ⟨ψ|P|ψ⟩` over the terms of `op`.
pub fn expectation(state: &StateVector, op: &PauliSum) -> Result<f64> {
    if op.n_qubits() != state.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: state.n_qubits(),
            got: op.n_qubits(),
        });
    }
    PauliOperator::new(op).expectation(state.amplitudes())
}

/// `H v` without materializing the matrix.
pub fn matvec(op: &PauliSum, v: &[Complex64]) -> Result<Vec<Complex64>> {
    PauliOperator::new(op).apply(v)
}

/// `⟨ψ|σ^α_q|ψ⟩` for a single-site Pauli.
pub fn single_site_expectation(state: &StateVector, qubit: usize, axis: Pauli) -> Result<f64> {
    state.check_qubit(qubit)?;
    let amps = state.amplitudes();
    let bit = 1usize << qubit;
    let parts: Vec<f64> = amps
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let base = c * CHUNK;
            let mut acc = 0.0;
            for (k, a) in chunk.iter().enumerate() {
                let i = base + k;
                match axis {
                    Pauli::Z => {
                        let p = a.norm_sqr();
                        acc += if i & bit == 0 { p } else { -p };
                    }
                    // pairs counted once from the bit-clear side, hence 2·Re
                    Pauli::X if i & bit == 0 => acc += 2.0 * (a.conj() * amps[i | bit]).re,
                    Pauli::Y if i & bit == 0 => {
                        // ⟨ψ|Y|ψ⟩ = 2 Im(conj(ψ0) ψ1)
                        acc += 2.0 * (a.conj() * amps[i | bit]).im
                    }
                    _ => {}
                }
            }
            acc
        })
        .collect();
    Ok(parts.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::dense_matrix;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
        let amps = (0..1 << n)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let mut s = StateVector::from_amplitudes(amps).unwrap();
        s.normalize();
        s
    }

    fn random_sum(n: usize, terms: usize, rng: &mut ChaCha8Rng) -> PauliSum {
        let mut out = Vec::new();
        for _ in 0..terms {
            let mut f = Vec::new();
            for q in 0..n {
                match rng.random_range(0..4) {
                    1 => f.push((q, Pauli::X)),
                    2 => f.push((q, Pauli::Y)),
                    3 => f.push((q, Pauli::Z)),
                    _ => {}
                }
            }
            out.push(PauliString::new(rng.random::<f64>() * 2.0 - 1.0, &f).unwrap());
        }
        PauliSum::new(n, out).unwrap()
    }

    fn z0(n: usize) -> PauliSum {
        PauliSum::new(n, vec![PauliString::new(1.0, &[(0, Pauli::Z)]).unwrap()]).unwrap()
    }

    #[test]
    fn zero_state_examples() {
        assert_eq!(zero_state(1).unwrap().amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(zero_state(2).unwrap().amplitudes().len(), 4);
        assert!(zero_state(0).is_err());
        assert!(matches!(zero_state(27), Err(Error::TooManyQubits { .. })));
        assert!(zero_state_capped(5, 4).is_err());
        let s = zero_state(3).unwrap();
        for q in 0..3 {
            assert_eq!(single_site_expectation(&s, q, Pauli::Z).unwrap(), 1.0);
        }
    }

    #[test]
    fn rx_pi_flips() {
        let mut s = zero_state(1).unwrap();
        s.apply_rx(0, PI).unwrap();
        let a = s.amplitudes();
        assert!(a[0].norm() < 1e-15);
        assert!((a[1] - c(0.0, -1.0)).norm() < 1e-15);
        assert!((expectation(&s, &z0(1)).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn rz_keeps_z_populations() {
        let mut s = zero_state(3).unwrap();
        s.apply_rx(1, PI).unwrap();
        let before: Vec<f64> = (0..3).map(|q| single_site_expectation(&s, q, Pauli::Z).unwrap()).collect();
        s.apply_rz(1, 0.7).unwrap();
        s.apply_rz(0, -2.1).unwrap();
        for q in 0..3 {
            assert!((single_site_expectation(&s, q, Pauli::Z).unwrap() - before[q]).abs() < 1e-15);
        }
    }

    #[test]
    fn rx_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let (t1, t2) = (rng.random::<f64>() * 7.0, rng.random::<f64>() * 7.0);
            let s0 = random_state(3, &mut rng);
            let q = rng.random_range(0..3);
            let mut a = s0.clone();
            a.apply_rx(q, t2).unwrap();
            a.apply_rx(q, t1).unwrap();
            let mut b = s0;
            b.apply_rx(q, t1 + t2).unwrap();
            for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rx_matches_dense_exponential() {
        // exp(−iθX/2) = cos(θ/2) I − i sin(θ/2) X
        let theta = 0.83;
        let m = rx_matrix(theta);
        assert!((m[0][0] - c((theta / 2.0).cos(), 0.0)).norm() < 1e-15);
        assert!((m[1][0] - c(0.0, -(theta / 2.0).sin())).norm() < 1e-15);
    }

    #[test]
    fn cnot_examples() {
        // |10⟩ in ket order (qubit 0 = 1) is index 1
        let mut s = StateVector::from_amplitudes(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(s.amplitudes()[3], c(1.0, 0.0));
        let mut z = zero_state(2).unwrap();
        z.apply_cnot(0, 1).unwrap();
        assert_eq!(z, zero_state(2).unwrap());
        assert!(matches!(z.apply_cnot(1, 1), Err(Error::SameControlTarget(1))));
        assert!(z.apply_cnot(0, 2).is_err());
    }

    #[test]
    fn cnot_involution_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s0 = random_state(14, &mut rng);
        for (ctl, tgt) in [(0, 13), (13, 0), (5, 6), (12, 2)] {
            let mut s = s0.clone();
            s.apply_cnot(ctl, tgt).unwrap();
            assert_ne!(s, s0);
            s.apply_cnot(ctl, tgt).unwrap();
            assert_eq!(s, s0);
        }
    }

    #[test]
    fn cnot_matches_permutation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s0 = random_state(13, &mut rng);
        for (ctl, tgt) in [(0, 12), (12, 0), (3, 4), (11, 1)] {
            let mut s = s0.clone();
            s.apply_cnot(ctl, tgt).unwrap();
            for i in 0..s0.amplitudes().len() {
                let src = if (i >> ctl) & 1 == 1 { i ^ (1 << tgt) } else { i };
                assert_eq!(s.amplitudes()[i], s0.amplitudes()[src]);
            }
        }
    }

    #[test]
    fn large_target_kernels_match_small_register_logic() {
        // exercises the chunked and split paths of for_each_pair
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s0 = random_state(14, &mut rng);
        for q in [0, 5, 11, 12, 13] {
            let mut s = s0.clone();
            s.apply_rx(q, 0.4).unwrap();
            let m = rx_matrix(0.4);
            for i in 0..s0.amplitudes().len() {
                let (lo, hi) = (i & !(1 << q), i | (1 << q));
                let bit = (i >> q) & 1;
                let want = m[bit][0] * s0.amplitudes()[lo] + m[bit][1] * s0.amplitudes()[hi];
                assert!((s.amplitudes()[i] - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn expectation_examples() {
        let s = zero_state(1).unwrap();
        assert_eq!(expectation(&s, &z0(1)).unwrap(), 1.0);
        let mut s = zero_state(1).unwrap();
        s.apply_rx(0, PI / 2.0).unwrap();
        let y = PauliSum::new(1, vec![PauliString::new(1.0, &[(0, Pauli::Y)]).unwrap()]).unwrap();
        assert!((expectation(&s, &y).unwrap() + 1.0).abs() < 1e-14);
        assert!((single_site_expectation(&s, 0, Pauli::Y).unwrap() + 1.0).abs() < 1e-14);
        assert!(expectation(&zero_state(2).unwrap(), &z0(1)).is_err());
    }

    fn dense_quadratic(op: &PauliSum, s: &StateVector) -> Complex64 {
        let m = dense_matrix(op).unwrap();
        let v = DVector::from_column_slice(s.amplitudes());
        (v.adjoint() * &m * &v)[(0, 0)]
    }

    #[test]
    fn expectation_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let s = random_state(6, &mut rng);
            let h = random_sum(6, 30, &mut rng);
            let want = dense_quadratic(&h, &s);
            assert!(want.im.abs() < 1e-12);
            assert!((expectation(&s, &h).unwrap() - want.re).abs() < 1e-10);
        }
    }

    #[test]
    fn matvec_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in [1, 3, 7, 10] {
            let h = random_sum(n, 25, &mut rng);
            let v = random_state(n, &mut rng);
            let got = matvec(&h, v.amplitudes()).unwrap();
            let want = dense_matrix(&h).unwrap() * DVector::from_column_slice(v.amplitudes());
            for (a, b) in got.iter().zip(want.iter()) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn matvec_basis_state() {
        let e0 = zero_state(2).unwrap();
        let out = matvec(&z0(2), e0.amplitudes()).unwrap();
        assert_eq!(out, e0.amplitudes());
        assert!(matches!(
            matvec(&z0(2), &[c(1.0, 0.0); 8]),
            Err(Error::DimensionMismatch { expected: 4, got: 8 })
        ));
    }

    #[test]
    fn matvec_linear_and_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_sum(8, 40, &mut rng);
        let u = random_state(8, &mut rng);
        let v = random_state(8, &mut rng);
        let (alpha, beta) = (c(0.3, -1.2), c(-0.7, 0.4));
        let comb: Vec<Complex64> = u
            .amplitudes()
            .iter()
            .zip(v.amplitudes())
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        let lhs = matvec(&h, &comb).unwrap();
        let hu = matvec(&h, u.amplitudes()).unwrap();
        let hv = matvec(&h, v.amplitudes()).unwrap();
        for k in 0..lhs.len() {
            assert!((lhs[k] - (alpha * hu[k] + beta * hv[k])).norm() < 1e-12);
        }
        let a = inner(u.amplitudes(), &hv);
        let b = inner(&hu, v.amplitudes());
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn global_phase_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = random_sum(5, 20, &mut rng);
        let s = random_state(5, &mut rng);
        let phase = Complex64::from_polar(1.0, 1.234);
        let t = StateVector::from_amplitudes(s.amplitudes().iter().map(|a| a * phase).collect()).unwrap();
        assert!((expectation(&s, &h).unwrap() - expectation(&t, &h).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn gate_locality() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut s = random_state(6, &mut rng);
        let before: Vec<f64> = (0..6).map(|q| s.prob_one(q)).collect();
        s.apply_rx(2, 1.1).unwrap();
        s.apply_rz(4, 0.3).unwrap();
        for q in [0, 1, 3, 4, 5] {
            assert!((s.prob_one(q) - before[q]).abs() < 1e-12);
        }
    }

    #[test]
    fn single_site_matches_pauli_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s = random_state(5, &mut rng);
        for q in 0..5 {
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                let op = PauliSum::new(5, vec![PauliString::new(1.0, &[(q, p)]).unwrap()]).unwrap();
                let a = single_site_expectation(&s, q, p).unwrap();
                let b = dense_quadratic(&op, &s).re;
                assert!((a - b).abs() < 1e-12, "{q} {p:?}");
            }
        }
    }

    #[test]
    fn cz_is_diagonal_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s0 = random_state(4, &mut rng);
        let mut s = s0.clone();
        s.apply_cz(1, 3).unwrap();
        for i in 0..16 {
            let sign = if i & 0b1010 == 0b1010 { -1.0 } else { 1.0 };
            assert_eq!(s.amplitudes()[i], s0.amplitudes()[i] * sign);
        }
    }
}
