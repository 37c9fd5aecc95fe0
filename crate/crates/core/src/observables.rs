//! Magnetization field and the discrete topological charge.
//!
//! Inside each triangle `t` the field is interpolated linearly,
//! `m_t(x, y) = a_t x + b_t y + c_t`, and the charge is
//!
//! ```text
//! Q = (1/4π) Σ_t S_t (a_t × b_t) · c_t
//! ```
//!
//! `(a × b) · c` does not depend on the coordinate origin because
//! `a × b` is orthogonal to both `a` and `b`; each triangle is therefore
//! evaluated with its first vertex as the origin.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hamiltonian::Pauli;
use crate::lattice::{Lattice, Triangle};
use crate::simulator::{single_site_expectation, StateVector};

pub type Vec3 = [f64; 3];

/// Per-site `(⟨σˣ⟩, ⟨σʸ⟩, ⟨σᶻ⟩)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnetizationField {
    pub vectors: Vec<Vec3>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleCoefficients {
    pub a: Vec3,
    pub b: Vec3,
    pub c: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ChargeOptions {
    /// Rescale every site vector to unit length before interpolating.
    pub normalize: bool,
}

fn cross(u: Vec3, v: Vec3) -> Vec3 {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

fn dot(u: Vec3, v: Vec3) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

pub fn magnetization_field(state: &StateVector, lattice: &Lattice) -> Result<MagnetizationField> {
    if state.n_qubits() != lattice.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: lattice.n_sites(),
            got: state.n_qubits(),
        });
    }
    let vectors = (0..lattice.n_sites())
        .map(|q| {
            Ok([
                single_site_expectation(state, q, Pauli::X)?,
                single_site_expectation(state, q, Pauli::Y)?,
                single_site_expectation(state, q, Pauli::Z)?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MagnetizationField { vectors })
}

/// Componentwise sum over sites, `(M_x, M_y, M_z)`.
pub fn total_magnetization(field: &MagnetizationField) -> Vec3 {
    field.vectors.iter().fold([0.0; 3], |acc, m| {
        [acc[0] + m[0], acc[1] + m[1], acc[2] + m[2]]
    })
}

/// Solves for `a, b` in the frame of vertex 0; returns them with the local
/// offset `c₀ = m(vertex 0)`.
fn local_coefficients(
    triangle: &Triangle,
    field: &[Vec3],
    positions: &[[f64; 2]],
) -> Result<(Vec3, Vec3, Vec3)> {
    let [i, j, k] = triangle.vertices;
    let (p0, p1, p2) = (positions[i], positions[j], positions[k]);
    let (dx1, dy1) = (p1[0] - p0[0], p1[1] - p0[1]);
    let (dx2, dy2) = (p2[0] - p0[0], p2[1] - p0[1]);
    let det = dx1 * dy2 - dx2 * dy1;
    let scale = (dx1.abs() + dy1.abs()) * (dx2.abs() + dy2.abs());
    if !(det.abs() > 1e-12 * scale) {
        return Err(Error::DegenerateTriangle(i, j, k));
    }
    let (m0, m1, m2) = (field[i], field[j], field[k]);
    let mut a = [0.0; 3];
    let mut b = [0.0; 3];
    for c in 0..3 {
        let (u, v) = (m1[c] - m0[c], m2[c] - m0[c]);
        // [dx1 dy1; dx2 dy2] [a; b] = [u; v]
        a[c] = (u * dy2 - v * dy1) / det;
        b[c] = (dx1 * v - dx2 * u) / det;
    }
    Ok((a, b, m0))
}

/// Linear-interpolant coefficients of `field` on `triangle`, global frame.
pub fn triangle_coefficients(
    triangle: &Triangle,
    field: &MagnetizationField,
    positions: &[[f64; 2]],
) -> Result<TriangleCoefficients> {
    let (a, b, m0) = local_coefficients(triangle, &field.vectors, positions)?;
    let p0 = positions[triangle.vertices[0]];
    let c = [
        m0[0] - a[0] * p0[0] - b[0] * p0[1],
        m0[1] - a[1] * p0[0] - b[1] * p0[1],
        m0[2] - a[2] * p0[0] - b[2] * p0[1],
    ];
    Ok(TriangleCoefficients { a, b, c })
}

/// `(1/4π) S_t (a_t × b_t) · c_t` for one triangle.
pub fn triangle_charge(triangle: &Triangle, field: &[Vec3], positions: &[[f64; 2]]) -> Result<f64> {
    let (a, b, c) = local_coefficients(triangle, field, positions)?;
    Ok(triangle.signed_area * dot(cross(a, b), c) / (4.0 * PI))
}

/// Discrete topological charge over `triangles`, summed in order.
pub fn charge_over(
    triangles: &[Triangle],
    field: &MagnetizationField,
    positions: &[[f64; 2]],
    options: ChargeOptions,
) -> Result<f64> {
    let normalized;
    let vectors = if options.normalize {
        normalized = field
            .vectors
            .iter()
            .map(|m| {
                let n = dot(*m, *m).sqrt();
                if n > 0.0 {
                    [m[0] / n, m[1] / n, m[2] / n]
                } else {
                    *m
                }
            })
            .collect::<Vec<_>>();
        &normalized
    } else {
        &field.vectors
    };
    triangles
        .iter()
        .map(|t| triangle_charge(t, vectors, positions))
        .sum()
}

/// Topological charge of `field` on the lattice triangulation, raw vectors.
pub fn topological_charge(lattice: &Lattice, field: &MagnetizationField) -> Result<f64> {
    topological_charge_with(lattice, field, ChargeOptions::default())
}

pub fn topological_charge_with(
    lattice: &Lattice,
    field: &MagnetizationField,
    options: ChargeOptions,
) -> Result<f64> {
    if field.vectors.len() != lattice.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: lattice.n_sites(),
            got: field.vectors.len(),
        });
    }
    let triangles = lattice.triangulate()?;
    charge_over(&triangles, field, &lattice.positions(), options)
}

/// One line per site: `index x y mx my mz`.
pub fn field_dump(lattice: &Lattice, field: &MagnetizationField) -> String {
    let mut s = String::new();
    for (site, m) in lattice.sites().iter().zip(&field.vectors) {
        let _ = writeln!(s, "{} {} {} {} {} {}", site.index, site.x, site.y, m[0], m[1], m[2]);
    }
    s
}
