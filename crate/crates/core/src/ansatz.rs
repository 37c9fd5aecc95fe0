//! Hardware-efficient ansatz: per-qubit Euler rotations `Rz·Rx·Rz`
//! interleaved with a fixed entangling layer.
//!
//! With `layers = L` the circuit executed on `|0…0⟩` is
//!
//! ```text
//! E_0, U_ENT, E_1, U_ENT, …, U_ENT, E_L
//! ```
//!
//! where every Euler block `E_b` applies `Rz(θ₃) → Rx(θ₂) → Rz(θ₁)` on each
//! qubit. Block `b` owns `theta[3N·b .. 3N·(b+1)]`, ordered per qubit as
//! `(θ₁, θ₂, θ₃)`. `L = 1` gives the 6N-parameter ansatz.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::{
    apply_cnot_unchecked, apply_cz_unchecked, apply_rz_unchecked, apply_single_unchecked,
    rx_matrix, zero_state, PauliOperator, StateVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EntanglerKind {
    /// CNOT `q → q+1` for `q = 0..N−2`.
    #[default]
    CnotChain,
    /// CZ on the same pairs as the chain.
    CzChain,
    /// The chain closed by `N−1 → 0` (for `N > 2`).
    CnotRing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntanglerLayout {
    pub kind: EntanglerKind,
    /// Gate pairs `(control, target)` in execution order.
    pub pairs: Vec<(usize, usize)>,
}

impl EntanglerLayout {
    pub fn new(kind: EntanglerKind, n_qubits: usize) -> Self {
        let mut pairs: Vec<_> = (0..n_qubits.saturating_sub(1)).map(|q| (q, q + 1)).collect();
        if kind == EntanglerKind::CnotRing && n_qubits > 2 {
            pairs.push((n_qubits - 1, 0));
        }
        Self { kind, pairs }
    }

    fn apply(&self, amps: &mut [Complex64]) {
        for &(c, t) in &self.pairs {
            self.gate(amps, c, t);
        }
    }

    fn apply_inverse(&self, amps: &mut [Complex64]) {
        for &(c, t) in self.pairs.iter().rev() {
            self.gate(amps, c, t);
        }
    }

    fn gate(&self, amps: &mut [Complex64], c: usize, t: usize) {
        match self.kind {
            EntanglerKind::CnotChain | EntanglerKind::CnotRing => apply_cnot_unchecked(amps, c, t),
            EntanglerKind::CzChain => apply_cz_unchecked(amps, c, t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    #[serde(default)]
    pub entangler: EntanglerKind,
    /// Number of entangling layers; each adds another Euler block.
    #[serde(default = "one")]
    pub layers: usize,
}

fn one() -> usize {
    1
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        Self {
            entangler: EntanglerKind::CnotChain,
            layers: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    X,
    Z,
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Rot { qubit: usize, axis: Axis, param: usize },
    Entangle,
}

#[derive(Debug, Clone)]
pub struct Ansatz {
    n_qubits: usize,
    layout: EntanglerLayout,
    layers: usize,
    program: Vec<Op>,
}

impl Ansatz {
    pub fn new(n_qubits: usize, config: AnsatzConfig) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidConfig("ansatz needs at least one qubit".into()));
        }
        if config.layers == 0 {
            return Err(Error::InvalidConfig("ansatz layers must be >= 1".into()));
        }
        let layout = EntanglerLayout::new(config.entangler, n_qubits);
        let mut program = Vec::new();
        for block in 0..=config.layers {
            if block > 0 {
                program.push(Op::Entangle);
            }
            let base = 3 * n_qubits * block;
            for q in 0..n_qubits {
                let p = base + 3 * q;
                program.push(Op::Rot { qubit: q, axis: Axis::Z, param: p + 2 });
                program.push(Op::Rot { qubit: q, axis: Axis::X, param: p + 1 });
                program.push(Op::Rot { qubit: q, axis: Axis::Z, param: p });
            }
        }
        Ok(Self {
            n_qubits,
            layout,
            layers: config.layers,
            program,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn layout(&self) -> &EntanglerLayout {
        &self.layout
    }

    pub fn n_params(&self) -> usize {
        3 * self.n_qubits * (self.layers + 1)
    }

    fn check_len(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    pub fn prepare_state(&self, theta: &[f64]) -> Result<StateVector> {
        self.check_len(theta)?;
        let mut state = zero_state(self.n_qubits)?;
        self.run(theta, state.amplitudes_mut());
        Ok(state)
    }

    /// Overwrites `state` with the ansatz state, reusing its buffer.
    pub fn prepare_into(&self, theta: &[f64], state: &mut StateVector) -> Result<()> {
        self.check_len(theta)?;
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: state.n_qubits(),
            });
        }
        let amps = state.amplitudes_mut();
        amps.par_iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        amps[0] = Complex64::new(1.0, 0.0);
        self.run(theta, amps);
        Ok(())
    }

    fn run(&self, theta: &[f64], amps: &mut [Complex64]) {
        for op in &self.program {
            match *op {
                Op::Rot { qubit, axis: Axis::Z, param } => apply_rz_unchecked(amps, qubit, theta[param]),
                Op::Rot { qubit, axis: Axis::X, param } => {
                    apply_single_unchecked(amps, qubit, rx_matrix(theta[param]))
                }
                Op::Entangle => self.layout.apply(amps),
            }
        }
    }

    fn check_op(&self, op: &PauliOperator) -> Result<()> {
        if op.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: op.n_qubits(),
            });
        }
        Ok(())
    }

    pub fn energy(&self, theta: &[f64], op: &PauliOperator) -> Result<f64> {
        self.check_op(op)?;
        let state = self.prepare_state(theta)?;
        op.expectation(state.amplitudes())
    }

    /// `∂E/∂θ_k = [E(θ + π/2·e_k) − E(θ − π/2·e_k)] / 2`, exact for these gates.
    pub fn parameter_shift_gradient(&self, theta: &[f64], op: &PauliOperator) -> Result<Vec<f64>> {
        self.check_len(theta)?;
        self.check_op(op)?;
        let shift = std::f64::consts::FRAC_PI_2;
        let mut work = theta.to_vec();
        let mut state = zero_state(self.n_qubits)?;
        let mut grad = Vec::with_capacity(theta.len());
        for k in 0..theta.len() {
            work[k] = theta[k] + shift;
            self.prepare_into(&work, &mut state)?;
            let plus = op.expectation(state.amplitudes())?;
            work[k] = theta[k] - shift;
            self.prepare_into(&work, &mut state)?;
            let minus = op.expectation(state.amplitudes())?;
            work[k] = theta[k];
            grad.push(0.5 * (plus - minus));
        }
        Ok(grad)
    }

    /// Energy and exact gradient by reverse-mode (adjoint) differentiation.
    ///
    /// Costs one forward pass, one operator application and two backward
    /// passes, independent of the parameter count. Agrees with
    /// [`Ansatz::parameter_shift_gradient`] to rounding.
    pub fn energy_and_gradient(&self, theta: &[f64], op: &PauliOperator) -> Result<(f64, Vec<f64>)> {
        self.check_len(theta)?;
        self.check_op(op)?;
        let mut psi = self.prepare_state(theta)?.into_amplitudes();
        let mut lambda = op.apply(&psi)?;
        let energy = crate::simulator::inner(&psi, &lambda).re;
        let mut grad = vec![0.0; theta.len()];
        for step in self.program.iter().rev() {
            match *step {
                Op::Rot { qubit, axis, param } => {
                    grad[param] = generator_overlap(&lambda, &psi, qubit, axis).im;
                    let t = -theta[param];
                    match axis {
                        Axis::Z => {
                            apply_rz_unchecked(&mut psi, qubit, t);
                            apply_rz_unchecked(&mut lambda, qubit, t);
                        }
                        Axis::X => {
                            let u = rx_matrix(t);
                            apply_single_unchecked(&mut psi, qubit, u);
                            apply_single_unchecked(&mut lambda, qubit, u);
                        }
                    }
                }
                Op::Entangle => {
                    self.layout.apply_inverse(&mut psi);
                    self.layout.apply_inverse(&mut lambda);
                }
            }
        }
        Ok((energy, grad))
    }
}

/// `⟨λ|G_q|φ⟩` for `G ∈ {X, Z}`.
fn generator_overlap(lambda: &[Complex64], phi: &[Complex64], qubit: usize, axis: Axis) -> Complex64 {
    const CHUNK: usize = 1 << 12;
    let bit = 1usize << qubit;
    let parts: Vec<Complex64> = lambda
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let base = c * CHUNK;
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, l) in chunk.iter().enumerate() {
                let i = base + k;
                acc += match axis {
                    Axis::X => l.conj() * phi[i ^ bit],
                    Axis::Z if i & bit == 0 => l.conj() * phi[i],
                    Axis::Z => -(l.conj() * phi[i]),
                };
            }
            acc
        })
        .collect();
    parts.iter().sum()
}
