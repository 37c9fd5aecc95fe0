//! Scaling benchmark: median time-to-ground-state per solver and lattice size,
//! with a least-squares power-law fit `t ≈ C·N^p`.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{dense_ground, lanczos_ground, LanczosConfig};
use crate::hamiltonian::{build_hamiltonian, DENSE_MAX_QUBITS};
use crate::lattice::{build_lattice, LatticeSpec};
use crate::sweep::{ModelSection, SolverKind};
use crate::vqe::{minimize, VqeConfig};
use crate::DEFAULT_MAX_QUBITS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default = "default_sizes")]
    pub sizes: Vec<LatticeSpec>,
    #[serde(default = "default_solvers")]
    pub solvers: Vec<SolverKind>,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    pub model: ModelSection,
    #[serde(default)]
    pub b_z: f64,
    #[serde(default)]
    pub vqe: VqeConfig,
    #[serde(default)]
    pub exact: LanczosConfig,
    /// Cells whose repetition exceeds this many seconds are reported missing.
    #[serde(default)]
    pub timeout_s: Option<f64>,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_max_qubits")]
    pub max_qubits: usize,
}

/// N = 7, 9, 16, 19.
pub fn default_sizes() -> Vec<LatticeSpec> {
    vec![
        LatticeSpec::Triangular { shells: 1 },
        LatticeSpec::Square { nx: 3, ny: 3 },
        LatticeSpec::Square { nx: 4, ny: 4 },
        LatticeSpec::Triangular { shells: 2 },
    ]
}

fn default_solvers() -> Vec<SolverKind> {
    vec![SolverKind::Vqe, SolverKind::Lanczos]
}
fn default_reps() -> usize {
    3
}
fn default_max_qubits() -> usize {
    DEFAULT_MAX_QUBITS
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 3 {
            return Err(Error::InvalidConfig(format!(
                "benchmark repetitions must be >= 3, got {}",
                self.repetitions
            )));
        }
        if self.sizes.is_empty() || self.solvers.is_empty() {
            return Err(Error::InvalidConfig("benchmark needs at least one size and one solver".into()));
        }
        for s in &self.sizes {
            if s.n_sites() > self.max_qubits {
                return Err(Error::TooManyQubits { requested: s.n_sites(), cap: self.max_qubits });
            }
        }
        self.model.at(self.b_z).validate()?;
        self.vqe.validate()?;
        self.exact.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Timeout,
    /// Size above the solver's cap.
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub solver: SolverKind,
    pub lattice: String,
    pub n_sites: usize,
    pub times_s: Vec<f64>,
    pub median_s: Option<f64>,
    pub energy: Option<f64>,
    pub status: CellStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    /// `ln C`.
    pub log_prefactor: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverFit {
    pub solver: SolverKind,
    pub fit: Option<PowerFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub cells: Vec<BenchCell>,
    pub fits: Vec<SolverFit>,
}

/// Least-squares line through `(ln N, ln t)`. Needs two distinct sizes and
/// positive times.
pub fn fit_power_law(points: &[(f64, f64)]) -> Option<PowerFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, t)| *n > 0.0 && *t > 0.0 && t.is_finite())
        .map(|(n, t)| (n.ln(), t.ln()))
        .collect();
    let k = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = sxy / sxx;
    Some(PowerFit {
        exponent,
        log_prefactor: my - exponent * mx,
        points: pts.len(),
    })
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn run_cell(config: &BenchConfig, solver: SolverKind, spec: LatticeSpec) -> Result<BenchCell> {
    let n = spec.n_sites();
    let mut cell = BenchCell {
        solver,
        lattice: spec.label(),
        n_sites: n,
        times_s: Vec::new(),
        median_s: None,
        energy: None,
        status: CellStatus::Ok,
    };
    if solver == SolverKind::Dense && n > DENSE_MAX_QUBITS {
        cell.status = CellStatus::Skipped;
        return Ok(cell);
    }
    let lattice = build_lattice(spec, config.max_qubits)?.with_dmi(config.model.dmi_mode, config.model.dmi_magnitude)?;
    let h = build_hamiltonian(&lattice, &config.model.at(config.b_z))?;
    for rep in 0..config.repetitions {
        let seed = config.rng_seed.wrapping_add(rep as u64);
        let t0 = Instant::now();
        let energy = match solver {
            SolverKind::Lanczos => lanczos_ground(&h, &LanczosConfig { rng_seed: seed, ..config.exact }).map(|g| g.energy),
            SolverKind::Dense => dense_ground(&h).map(|g| g.energy),
            SolverKind::Vqe => minimize(&h, &VqeConfig { rng_seed: seed, ..config.vqe }).map(|r| r.energy),
        };
        let dt = t0.elapsed().as_secs_f64();
        match energy {
            Ok(e) => {
                cell.energy = Some(cell.energy.map_or(e, |x: f64| x.min(e)));
                cell.times_s.push(dt);
            }
            Err(Error::NotConverged { .. }) => {
                cell.status = CellStatus::Failed;
                return Ok(cell);
            }
            Err(e) => return Err(e),
        }
        if config.timeout_s.is_some_and(|limit| dt > limit) {
            cell.status = CellStatus::Timeout;
            return Ok(cell);
        }
    }
    cell.median_s = Some(median(&cell.times_s));
    Ok(cell)
}

pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let mut cells = Vec::new();
    for &solver in &config.solvers {
        for &spec in &config.sizes {
            cells.push(run_cell(config, solver, spec)?);
        }
    }
    Ok(BenchReport::from_cells(cells))
}

impl BenchReport {
    pub fn from_cells(cells: Vec<BenchCell>) -> Self {
        let mut solvers: Vec<SolverKind> = Vec::new();
        for c in &cells {
            if !solvers.contains(&c.solver) {
                solvers.push(c.solver);
            }
        }
        let fits = solvers
            .into_iter()
            .map(|solver| {
                let pts: Vec<(f64, f64)> = cells
                    .iter()
                    .filter(|c| c.solver == solver && c.status == CellStatus::Ok)
                    .filter_map(|c| c.median_s.map(|t| (c.n_sites as f64, t)))
                    .collect();
                SolverFit { solver, fit: fit_power_law(&pts) }
            })
            .collect();
        Self { cells, fits }
    }

    /// Medians of `solver` ordered by N are non-decreasing.
    pub fn monotone(&self, solver: SolverKind) -> bool {
        let mut pts: Vec<(usize, f64)> = self
            .cells
            .iter()
            .filter(|c| c.solver == solver)
            .filter_map(|c| c.median_s.map(|t| (c.n_sites, t)))
            .collect();
        pts.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        pts.windows(2).all(|w| w[1].1 >= w[0].1)
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<8} {:<16} {:>4} {:>12} {:>14} {:>8}",
            "solver", "lattice", "N", "median_s", "energy", "status"
        );
        for c in &self.cells {
            let med = c.median_s.map_or("-".to_string(), |t| format!("{t:.6}"));
            let e = c.energy.map_or("-".to_string(), |e| format!("{e:.8}"));
            let status = serde_json::to_value(c.status)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default();
            let _ = writeln!(
                s,
                "{:<8} {:<16} {:>4} {:>12} {:>14} {:>8}",
                c.solver.tag(),
                c.lattice,
                c.n_sites,
                med,
                e,
                status
            );
        }
        s.push('\n');
        for f in &self.fits {
            match f.fit {
                Some(p) => {
                    let _ = writeln!(s, "{:<8} exponent {:.4} over {} sizes", f.solver.tag(), p.exponent, p.points);
                }
                None => {
                    let _ = writeln!(s, "{:<8} exponent - (fewer than two usable sizes)", f.solver.tag());
                }
            }
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}
