//! XXZ + DMI + Zeeman Hamiltonian as a real-weighted sum of Pauli strings.
//!
//! Per bond `(i, j)` with DMI vector `d`:
//!
//! ```text
//! J∥ (XᵢXⱼ + YᵢYⱼ) + J⊥ ZᵢZⱼ
//!   + d_x (YᵢZⱼ − ZᵢYⱼ) + d_y (ZᵢXⱼ − XᵢZⱼ) + d_z (XᵢYⱼ − YᵢXⱼ)
//! ```
//!
//! and per site `B_z Zᵢ`.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{DmiMode, Lattice};

/// Strings whose |coefficient| is at or below this are dropped.
pub const ZERO_COEFF_TOL: f64 = 1e-15;

/// Largest register [`dense_matrix`] will materialize.
pub const DENSE_MAX_QUBITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// In-plane exchange, must be negative (ferromagnetic).
    pub j_par: f64,
    /// Out-of-plane exchange, must be positive.
    pub j_perp: f64,
    #[serde(default = "default_dmi_magnitude")]
    pub dmi_magnitude: f64,
    pub dmi_mode: DmiMode,
    #[serde(default)]
    pub b_z: f64,
}

fn default_dmi_magnitude() -> f64 {
    1.0
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.j_par < 0.0) {
            return Err(Error::InvalidConfig(format!("j_par must be < 0, got {}", self.j_par)));
        }
        if !(self.j_perp > 0.0) {
            return Err(Error::InvalidConfig(format!("j_perp must be > 0, got {}", self.j_perp)));
        }
        if !(self.dmi_magnitude >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "dmi_magnitude must be >= 0, got {}",
                self.dmi_magnitude
            )));
        }
        if !self.b_z.is_finite() {
            return Err(Error::InvalidConfig("b_z must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    fn symbol(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// The 2×2 matrix, row-major, in the basis (|0⟩, |1⟩).
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::X => [[o, one], [one, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[one, o], [o, -one]],
        }
    }
}

/// A real-weighted product of single-site Pauli factors on distinct sites.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    factors: Vec<(usize, Pauli)>,
    pub coeff: f64,
}

impl PauliString {
    /// Fails if a site appears twice or the coefficient is not finite.
    pub fn new(coeff: f64, factors: &[(usize, Pauli)]) -> Result<Self> {
        if !coeff.is_finite() {
            return Err(Error::InvalidConfig(format!("non-finite coefficient {coeff}")));
        }
        let mut f = factors.to_vec();
        f.sort_by_key(|&(q, _)| q);
        if f.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidConfig(format!(
                "Pauli string repeats a site: {factors:?}"
            )));
        }
        Ok(Self { factors: f, coeff })
    }

    pub fn identity(coeff: f64) -> Self {
        Self {
            factors: Vec::new(),
            coeff,
        }
    }

    /// Factors sorted by site.
    pub fn factors(&self) -> &[(usize, Pauli)] {
        &self.factors
    }

    pub fn max_site(&self) -> Option<usize> {
        self.factors.last().map(|&(q, _)| q)
    }

    /// Bit masks `(x, z)` and the power of `i` such that the string acts as
    /// `P|b⟩ = i^{ny} (−1)^{popcount(b & z)} |b ⊕ x⟩`.
    pub fn masks(&self) -> (u64, u64, u32) {
        let (mut x, mut z, mut ny) = (0u64, 0u64, 0u32);
        for &(q, p) in &self.factors {
            let bit = 1u64 << q;
            match p {
                Pauli::X => x |= bit,
                Pauli::Z => z |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit;
                    ny += 1;
                }
            }
        }
        (x, z, ny)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coeff)?;
        for &(q, p) in &self.factors {
            write!(f, " {}:{}", q, p.symbol())?;
        }
        Ok(())
    }
}

/// Hermitian operator: a list of Pauli strings with real weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<PauliString>,
}

impl PauliSum {
    pub fn new(n_qubits: usize, terms: Vec<PauliString>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 63 {
            return Err(Error::InvalidConfig(format!("unsupported qubit count {n_qubits}")));
        }
        for t in &terms {
            if let Some(q) = t.max_site() {
                if q >= n_qubits {
                    return Err(Error::InvalidQubit { qubit: q, n_qubits });
                }
            }
        }
        Ok(Self { n_qubits, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of |coefficients|, an upper bound on the spectral norm.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    /// Textual dump, one term per line: `coeff site:axis site:axis ...`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for t in &self.terms {
            s.push_str(&t.to_string());
            s.push('\n');
        }
        s
    }
}

fn push(terms: &mut Vec<PauliString>, coeff: f64, factors: [(usize, Pauli); 2]) {
    if coeff.abs() > ZERO_COEFF_TOL {
        terms.push(PauliString {
            factors: factors.to_vec(),
            coeff,
        });
    }
}

/// Assembles the model on `lattice`, whose DMI vectors must already be set
/// with the same mode as `params.dmi_mode`.
pub fn build_hamiltonian(lattice: &Lattice, params: &ModelParams) -> Result<PauliSum> {
    params.validate()?;
    match lattice.dmi() {
        Some((mode, _)) if mode == params.dmi_mode => {}
        other => {
            return Err(Error::DmiModeMismatch {
                lattice: other.map(|(m, _)| m),
                model: params.dmi_mode,
            })
        }
    }
    use Pauli::{X, Y, Z};
    let mut terms = Vec::with_capacity(lattice.bonds().len() * 7 + lattice.n_sites());
    for b in lattice.bonds() {
        let (i, j, d) = (b.i, b.j, b.d);
        push(&mut terms, params.j_par, [(i, X), (j, X)]);
        push(&mut terms, params.j_par, [(i, Y), (j, Y)]);
        push(&mut terms, params.j_perp, [(i, Z), (j, Z)]);
        push(&mut terms, d[0], [(i, Y), (j, Z)]);
        push(&mut terms, -d[0], [(i, Z), (j, Y)]);
        push(&mut terms, d[1], [(i, Z), (j, X)]);
        push(&mut terms, -d[1], [(i, X), (j, Z)]);
        push(&mut terms, d[2], [(i, X), (j, Y)]);
        push(&mut terms, -d[2], [(i, Y), (j, X)]);
    }
    if params.b_z.abs() > ZERO_COEFF_TOL {
        for site in lattice.sites() {
            terms.push(PauliString {
                factors: vec![(site.index, Z)],
                coeff: params.b_z,
            });
        }
    }
    PauliSum::new(lattice.n_sites(), terms)
}

/// Dense `2^N × 2^N` matrix of the operator, qubit 0 least significant.
///
/// Each string is expanded as a tensor product: for a basis column the
/// factors act bit by bit through their explicit 2×2 matrices.
pub fn dense_matrix(op: &PauliSum) -> Result<DMatrix<Complex64>> {
    let n = op.n_qubits();
    if n > DENSE_MAX_QUBITS {
        return Err(Error::TooManyQubits {
            requested: n,
            cap: DENSE_MAX_QUBITS,
        });
    }
    let dim = 1usize << n;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for term in op.terms() {
        let mats: Vec<(usize, [[Complex64; 2]; 2])> =
            term.factors().iter().map(|&(q, p)| (q, p.matrix())).collect();
        for col in 0..dim {
            let mut row = col;
            let mut amp = Complex64::new(term.coeff, 0.0);
            for &(q, mat) in &mats {
                let bit = (col >> q) & 1;
                // Pauli matrices have one non-zero per column.
                let out = if mat[0][bit] != Complex64::new(0.0, 0.0) { 0 } else { 1 };
                amp *= mat[out][bit];
                row = (row & !(1 << q)) | (out << q);
            }
            m[(row, col)] += amp;
        }
    }
    Ok(m)
}
