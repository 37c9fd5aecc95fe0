//! Site geometry, nearest-neighbor bonds, DMI vectors and the oriented
//! triangulation used for the topological charge.
//!
//! Lattice spacing is 1 and boundaries are open. Each bond is stored once
//! with `i < j`; `r` points from site `i` to site `j`. The DMI term is
//! antisymmetric under `i <-> j`, so the stored orientation fixes its sign.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatticeSpec {
    /// `nx × ny` rectangle of the square lattice.
    Square { nx: usize, ny: usize },
    /// Centered hexagonal cluster of the triangular lattice with the given
    /// number of shells around the central site.
    Triangular { shells: usize },
}

impl LatticeSpec {
    pub fn n_sites(&self) -> usize {
        match *self {
            LatticeSpec::Square { nx, ny } => nx * ny,
            LatticeSpec::Triangular { shells } => 3 * shells * (shells + 1) + 1,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            LatticeSpec::Square { nx, ny } => format!("square {nx}x{ny}"),
            LatticeSpec::Triangular { shells } => format!("triangular shells={shells}"),
        }
    }
}

/// Orientation of the DMI vector relative to the bond direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DmiMode {
    /// `D ∥ R` (Bloch-type textures).
    Parallel,
    /// `D = ẑ × R`, the bond direction rotated by +90° in-plane (Néel-type).
    Perpendicular,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub index: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    /// Unit vector from site `i` to site `j`.
    pub r: [f64; 2],
    /// DMI vector; zero until [`Lattice::with_dmi`] is applied.
    pub d: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub vertices: [usize; 3],
    pub signed_area: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    spec: LatticeSpec,
    sites: Vec<Site>,
    bonds: Vec<Bond>,
    dmi: Option<(DmiMode, f64)>,
}

/// Builds sites and open-boundary nearest-neighbor bonds, sorted by `(i, j)`.
pub fn build_lattice(spec: LatticeSpec, max_sites: usize) -> Result<Lattice> {
    let n = spec.n_sites();
    if n == 0 {
        return Err(Error::InvalidLattice("lattice has no sites".into()));
    }
    if n > max_sites {
        return Err(Error::TooManyQubits {
            requested: n,
            cap: max_sites,
        });
    }
    let (sites, mut bonds) = match spec {
        LatticeSpec::Square { nx, ny } => square(nx, ny),
        LatticeSpec::Triangular { shells } => triangular(shells as i64),
    };
    bonds.sort_by_key(|b| (b.i, b.j));
    Ok(Lattice {
        spec,
        sites,
        bonds,
        dmi: None,
    })
}

fn square(nx: usize, ny: usize) -> (Vec<Site>, Vec<Bond>) {
    let mut sites = Vec::with_capacity(nx * ny);
    let mut bonds = Vec::new();
    for iy in 0..ny {
        for ix in 0..nx {
            let i = ix + iy * nx;
            sites.push(Site {
                index: i,
                x: ix as f64,
                y: iy as f64,
            });
            if ix + 1 < nx {
                bonds.push(bond(i, i + 1, [1.0, 0.0]));
            }
            if iy + 1 < ny {
                bonds.push(bond(i, i + nx, [0.0, 1.0]));
            }
        }
    }
    (sites, bonds)
}

/// Axial coordinates `(q, r)` with position `(q + r/2, r·√3/2)`.
fn hex_cells(shells: i64) -> Vec<(i64, i64)> {
    let mut cells = Vec::new();
    for r in -shells..=shells {
        for q in -shells..=shells {
            if (q + r).abs() <= shells {
                cells.push((q, r));
            }
        }
    }
    // row-major: by y (r), then x
    cells
}

fn hex_position(q: i64, r: i64) -> (f64, f64) {
    (q as f64 + 0.5 * r as f64, SQRT3_2 * r as f64)
}

fn triangular(shells: i64) -> (Vec<Site>, Vec<Bond>) {
    let cells = hex_cells(shells);
    let lookup: HashMap<(i64, i64), usize> =
        cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let sites = cells
        .iter()
        .enumerate()
        .map(|(index, &(q, r))| {
            let (x, y) = hex_position(q, r);
            Site { index, x, y }
        })
        .collect();
    let mut bonds = Vec::new();
    // These three offsets always land on a larger row-major index.
    let offsets = [(1, 0, [1.0, 0.0]), (0, 1, [0.5, SQRT3_2]), (-1, 1, [-0.5, SQRT3_2])];
    for (i, &(q, r)) in cells.iter().enumerate() {
        for &(dq, dr, dir) in &offsets {
            if let Some(&j) = lookup.get(&(q + dq, r + dr)) {
                bonds.push(bond(i, j, dir));
            }
        }
    }
    (sites, bonds)
}

fn bond(i: usize, j: usize, r: [f64; 2]) -> Bond {
    Bond {
        i,
        j,
        r,
        d: [0.0; 3],
    }
}

/// DMI vector for a bond direction `r`.
pub fn dmi_vector(r: [f64; 2], mode: DmiMode, magnitude: f64) -> [f64; 3] {
    match mode {
        DmiMode::Parallel => [magnitude * r[0], magnitude * r[1], 0.0],
        DmiMode::Perpendicular => [-magnitude * r[1], magnitude * r[0], 0.0],
    }
}

impl Lattice {
    pub fn spec(&self) -> LatticeSpec {
        self.spec
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn dmi(&self) -> Option<(DmiMode, f64)> {
        self.dmi
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.sites.iter().map(|s| [s.x, s.y]).collect()
    }

    /// Assigns the DMI vector of every bond.
    pub fn with_dmi(mut self, mode: DmiMode, magnitude: f64) -> Result<Self> {
        if !(magnitude >= 0.0 && magnitude.is_finite()) {
            return Err(Error::InvalidLattice(format!(
                "DMI magnitude must be a finite non-negative number, got {magnitude}"
            )));
        }
        for b in &mut self.bonds {
            b.d = dmi_vector(b.r, mode, magnitude);
        }
        self.dmi = Some((mode, magnitude));
        Ok(self)
    }

    /// Counterclockwise triangulation of the mesh.
    ///
    /// Square cells are split along the lower-left to upper-right diagonal;
    /// the triangular lattice uses its elementary up and down triangles.
    pub fn triangulate(&self) -> Result<Vec<Triangle>> {
        if self.sites.len() < 3 {
            return Err(Error::InvalidLattice(format!(
                "triangulation needs at least 3 sites, lattice has {}",
                self.sites.len()
            )));
        }
        let mut out = Vec::new();
        match self.spec {
            LatticeSpec::Square { nx, ny } => {
                for iy in 0..ny.saturating_sub(1) {
                    for ix in 0..nx.saturating_sub(1) {
                        let a = ix + iy * nx;
                        let b = a + 1;
                        let c = a + nx;
                        let d = c + 1;
                        out.push(self.triangle([a, b, d]));
                        out.push(self.triangle([a, d, c]));
                    }
                }
            }
            LatticeSpec::Triangular { shells } => {
                let cells = hex_cells(shells as i64);
                let lookup: HashMap<(i64, i64), usize> =
                    cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
                let s = shells as i64;
                let anchors = (-s - 1..=s).flat_map(|r| (-s - 1..=s).map(move |q| (q, r)));
                for (q, r) in anchors {
                    let up = [(q, r), (q + 1, r), (q, r + 1)];
                    let down = [(q + 1, r), (q + 1, r + 1), (q, r + 1)];
                    for corners in [up, down] {
                        let idx: Option<Vec<usize>> =
                            corners.iter().map(|c| lookup.get(c).copied()).collect();
                        if let Some(v) = idx {
                            out.push(self.triangle([v[0], v[1], v[2]]));
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidLattice(format!(
                "{} has no two-dimensional cells to triangulate",
                self.spec.label()
            )));
        }
        Ok(out)
    }

    fn triangle(&self, vertices: [usize; 3]) -> Triangle {
        let p = |k: usize| self.sites[vertices[k]];
        let (a, b, c) = (p(0), p(1), p(2));
        let signed_area = 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
        Triangle {
            vertices,
            signed_area,
        }
    }

    /// Debug dump: `index x y` per site, then `i j dx dy dz` per bond.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for site in &self.sites {
            let _ = writeln!(s, "{} {} {}", site.index, site.x, site.y);
        }
        for b in &self.bonds {
            let _ = writeln!(s, "{} {} {} {} {}", b.i, b.j, b.d[0], b.d[1], b.d[2]);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(spec: LatticeSpec) -> Lattice {
        build_lattice(spec, 64).unwrap()
    }

    /// Brute force: all pairs at unit distance.
    fn unit_distance_pairs(l: &Lattice) -> Vec<(usize, usize)> {
        let s = l.sites();
        let mut out = Vec::new();
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                let d = ((s[i].x - s[j].x).powi(2) + (s[i].y - s[j].y).powi(2)).sqrt();
                if (d - 1.0).abs() < 1e-9 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    #[test]
    fn square_counts() {
        let l = lat(LatticeSpec::Square { nx: 2, ny: 2 });
        assert_eq!((l.n_sites(), l.bonds().len()), (4, 4));
        let l = lat(LatticeSpec::Square { nx: 4, ny: 4 });
        assert_eq!((l.n_sites(), l.bonds().len()), (16, 24));
    }

    #[test]
    fn bonds_match_brute_force() {
        for spec in [
            LatticeSpec::Square { nx: 4, ny: 4 },
            LatticeSpec::Square { nx: 5, ny: 3 },
            LatticeSpec::Square { nx: 1, ny: 4 },
            LatticeSpec::Triangular { shells: 1 },
            LatticeSpec::Triangular { shells: 2 },
        ] {
            let l = lat(spec);
            let stored: Vec<_> = l.bonds().iter().map(|b| (b.i, b.j)).collect();
            assert_eq!(stored, unit_distance_pairs(&l), "{spec:?}");
        }
    }

    #[test]
    fn triangular_counts() {
        let l = lat(LatticeSpec::Triangular { shells: 1 });
        assert_eq!((l.n_sites(), l.bonds().len()), (7, 12));
        let l = lat(LatticeSpec::Triangular { shells: 2 });
        assert_eq!((l.n_sites(), l.bonds().len()), (19, 42));
        assert_eq!(lat(LatticeSpec::Triangular { shells: 0 }).n_sites(), 1);
    }

    #[test]
    fn rejects_empty_and_oversized() {
        assert!(matches!(
            build_lattice(LatticeSpec::Square { nx: 0, ny: 3 }, 26),
            Err(Error::InvalidLattice(_))
        ));
        assert!(matches!(
            build_lattice(LatticeSpec::Square { nx: 6, ny: 5 }, 26),
            Err(Error::TooManyQubits { requested: 30, cap: 26 })
        ));
    }

    #[test]
    fn row_major_indexing() {
        let l = lat(LatticeSpec::Square { nx: 3, ny: 2 });
        let s = l.sites()[4];
        assert_eq!((s.x, s.y), (1.0, 1.0));
    }

    #[test]
    fn dmi_examples() {
        assert_eq!(dmi_vector([1.0, 0.0], DmiMode::Parallel, 1.0), [1.0, 0.0, 0.0]);
        assert_eq!(dmi_vector([1.0, 0.0], DmiMode::Perpendicular, 1.0), [0.0, 1.0, 0.0]);
        assert_eq!(
            dmi_vector([0.5, SQRT3_2], DmiMode::Parallel, 1.0),
            [0.5, SQRT3_2, 0.0]
        );
    }

    #[test]
    fn dmi_geometry_invariants() {
        for spec in [
            LatticeSpec::Square { nx: 4, ny: 3 },
            LatticeSpec::Triangular { shells: 2 },
        ] {
            for mode in [DmiMode::Parallel, DmiMode::Perpendicular] {
                let l = lat(spec).with_dmi(mode, 1.7).unwrap();
                for b in l.bonds() {
                    assert_eq!(b.d[2], 0.0);
                    let norm = (b.d[0].powi(2) + b.d[1].powi(2)).sqrt();
                    assert!((norm - 1.7).abs() < 1e-12);
                    let rnorm = (b.r[0].powi(2) + b.r[1].powi(2)).sqrt();
                    assert!((rnorm - 1.0).abs() < 1e-12);
                    let dot = b.d[0] * b.r[0] + b.d[1] * b.r[1];
                    let cross = b.d[0] * b.r[1] - b.d[1] * b.r[0];
                    match mode {
                        DmiMode::Parallel => assert!(cross.abs() < 1e-12),
                        DmiMode::Perpendicular => assert!(dot.abs() < 1e-12),
                    }
                }
            }
        }
        assert!(lat(LatticeSpec::Square { nx: 2, ny: 2 })
            .with_dmi(DmiMode::Parallel, -1.0)
            .is_err());
    }

    #[test]
    fn square_bonds_closed_under_rotation() {
        // 90° rotation about the center of an n×n square: (x, y) -> (n-1-y, x)
        let n = 4;
        let l = lat(LatticeSpec::Square { nx: n, ny: n });
        let rot = |i: usize| {
            let (x, y) = (i % n, i / n);
            (n - 1 - y) + x * n
        };
        let set: std::collections::HashSet<_> = l.bonds().iter().map(|b| (b.i, b.j)).collect();
        for b in l.bonds() {
            let (a, c) = (rot(b.i), rot(b.j));
            assert!(set.contains(&(a.min(c), a.max(c))));
        }
    }

    #[test]
    fn triangulation_examples() {
        let t = lat(LatticeSpec::Square { nx: 2, ny: 2 }).triangulate().unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.iter().all(|t| t.signed_area == 0.5));
        let t = lat(LatticeSpec::Square { nx: 4, ny: 4 }).triangulate().unwrap();
        assert_eq!(t.len(), 18);
        let l = lat(LatticeSpec::Triangular { shells: 1 });
        let t = l.triangulate().unwrap();
        assert_eq!(t.len(), 6);
        // every hexagon triangle touches the center
        assert!(t.iter().all(|t| t.vertices.contains(&3)));
        assert!(lat(LatticeSpec::Square { nx: 1, ny: 2 }).triangulate().is_err());
        assert!(lat(LatticeSpec::Square { nx: 3, ny: 1 }).triangulate().is_err());
    }

    /// Enumerates all triples of mutually adjacent sites (unit distance).
    fn elementary_triangles(l: &Lattice) -> usize {
        let pairs: std::collections::HashSet<_> = unit_distance_pairs(l).into_iter().collect();
        let n = l.n_sites();
        let adj = |a: usize, b: usize| pairs.contains(&(a.min(b), a.max(b)));
        let mut count = 0;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    if adj(i, j) && adj(j, k) && adj(i, k) {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    #[test]
    fn triangular_triangulation_matches_enumeration() {
        for shells in 1..=3 {
            let l = lat(LatticeSpec::Triangular { shells });
            assert_eq!(l.triangulate().unwrap().len(), elementary_triangles(&l));
        }
    }

    #[test]
    fn triangle_areas_cover_hull() {
        for (spec, hull) in [
            (LatticeSpec::Square { nx: 4, ny: 4 }, 9.0),
            (LatticeSpec::Square { nx: 5, ny: 3 }, 8.0),
            (LatticeSpec::Triangular { shells: 1 }, 1.5 * 3f64.sqrt()),
            (LatticeSpec::Triangular { shells: 2 }, 6.0 * 3f64.sqrt()),
        ] {
            let t = lat(spec).triangulate().unwrap();
            assert!(t.iter().all(|t| t.signed_area > 0.0));
            let total: f64 = t.iter().map(|t| t.signed_area).sum();
            assert!((total - hull).abs() < 1e-12, "{spec:?}: {total} vs {hull}");
        }
    }

    #[test]
    fn dump_format() {
        let l = lat(LatticeSpec::Square { nx: 2, ny: 1 })
            .with_dmi(DmiMode::Parallel, 1.0)
            .unwrap();
        assert_eq!(l.dump(), "0 0 0\n1 1 0\n0 1 1 0 0\n");
    }

    #[test]
    fn spec_serde_shape() {
        let s: LatticeSpec = serde_json::from_str(r#"{"kind":"square","nx":4,"ny":4}"#).unwrap();
        assert_eq!(s, LatticeSpec::Square { nx: 4, ny: 4 });
        let s: LatticeSpec = serde_json::from_str(r#"{"kind":"triangular","shells":2}"#).unwrap();
        assert_eq!(s.n_sites(), 19);
    }
}
