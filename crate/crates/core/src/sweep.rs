//! Field sweeps: run configuration, per-point solves and transition detection.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::Ansatz;
use crate::error::{Error, Result};
use crate::exact::{dense_ground, lanczos_ground, LanczosConfig};
use crate::hamiltonian::{build_hamiltonian, ModelParams, DENSE_MAX_QUBITS};
use crate::lattice::{build_lattice, DmiMode, Lattice, LatticeSpec};
use crate::observables::{magnetization_field, topological_charge, total_magnetization, MagnetizationField};
use crate::vqe::{minimize_with_starts, VqeConfig};
use crate::DEFAULT_MAX_QUBITS;

/// Guard for `delta_q_rel` when the charge before the jump vanishes.
pub const DELTA_Q_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Vqe,
    Lanczos,
    Dense,
}

impl SolverKind {
    pub fn tag(self) -> &'static str {
        match self {
            SolverKind::Vqe => "vqe",
            SolverKind::Lanczos => "lanczos",
            SolverKind::Dense => "dense",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vqe" => Ok(SolverKind::Vqe),
            "lanczos" => Ok(SolverKind::Lanczos),
            "dense" => Ok(SolverKind::Dense),
            other => Err(Error::InvalidConfig(format!(
                "unknown solver {other:?} (expected vqe, lanczos or dense)"
            ))),
        }
    }
}

/// Model couplings; the field comes from the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub j_par: f64,
    pub j_perp: f64,
    #[serde(default = "one")]
    pub dmi_magnitude: f64,
    pub dmi_mode: DmiMode,
}

fn one() -> f64 {
    1.0
}

impl ModelSection {
    pub fn at(&self, b_z: f64) -> ModelParams {
        ModelParams {
            j_par: self.j_par,
            j_perp: self.j_perp,
            dmi_magnitude: self.dmi_magnitude,
            dmi_mode: self.dmi_mode,
            b_z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub kind: SolverKind,
    #[serde(default)]
    pub vqe: VqeConfig,
    #[serde(default)]
    pub exact: LanczosConfig,
}

/// Second pass around a detected transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineConfig {
    #[serde(default = "default_fine_step")]
    pub step: f64,
    /// Half-width of the refined window around the jump interval.
    #[serde(default = "default_window")]
    pub window: f64,
}

fn default_fine_step() -> f64 {
    0.01
}
fn default_window() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub start: f64,
    pub stop: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Fields at the grid points nearest to these values are dumped.
    #[serde(default)]
    pub dump_fields_at: Vec<f64>,
    #[serde(default)]
    pub refine: Option<RefineConfig>,
}

fn default_step() -> f64 {
    0.05
}

impl SweepSection {
    /// `start + k·step` up to `stop`; the grid always contains `start`.
    pub fn grid(&self) -> Vec<f64> {
        grid(self.start, self.stop, self.step)
    }
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionConfig {
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    5.0
}

impl Default for TransitionConfig {
    fn default() -> Self {
        Self { threshold: default_threshold() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default = "default_manifest")]
    pub manifest: String,
    /// Write each VQE restart's best-so-far trace next to the field dumps.
    #[serde(default)]
    pub vqe_traces: bool,
    /// Record per-point wall time; when off the column is written as 0 so
    /// repeated runs produce byte-identical CSV files.
    #[serde(default = "yes")]
    pub wall_time: bool,
}

fn yes() -> bool {
    true
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_csv() -> String {
    "sweep.csv".into()
}
fn default_manifest() -> String {
    "manifest.json".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            csv: default_csv(),
            manifest: default_manifest(),
            vqe_traces: false,
            wall_time: true,
        }
    }
}

/// A complete run description; `rng_seed` overrides the solver sub-config seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSpec,
    pub model: ModelSection,
    pub solver: SolverSection,
    pub sweep: SweepSection,
    #[serde(default)]
    pub transition: TransitionConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_max_qubits")]
    pub max_qubits: usize,
}

fn default_max_qubits() -> usize {
    DEFAULT_MAX_QUBITS
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.sweep;
        if !(s.step > 0.0) {
            return Err(Error::InvalidConfig(format!("sweep.step must be > 0, got {}", s.step)));
        }
        if !(s.start <= s.stop) {
            return Err(Error::InvalidConfig(format!(
                "sweep.start ({}) must not exceed sweep.stop ({})",
                s.start, s.stop
            )));
        }
        if let Some(r) = s.refine {
            if !(r.step > 0.0) || !(r.window >= 0.0) {
                return Err(Error::InvalidConfig("sweep.refine needs step > 0 and window >= 0".into()));
            }
        }
        if !(self.transition.threshold > 0.0) {
            return Err(Error::InvalidConfig("transition.threshold must be > 0".into()));
        }
        self.model.at(s.start).validate()?;
        let n = self.lattice.n_sites();
        let cap = match self.solver.kind {
            SolverKind::Dense => DENSE_MAX_QUBITS.min(self.max_qubits),
            _ => self.max_qubits,
        };
        if n > cap {
            return Err(Error::TooManyQubits { requested: n, cap });
        }
        self.solver.vqe.validate()?;
        self.solver.exact.validate()?;
        Ok(())
    }

    pub fn build_lattice(&self) -> Result<Lattice> {
        build_lattice(self.lattice, self.max_qubits)?.with_dmi(self.model.dmi_mode, self.model.dmi_magnitude)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub b_z: f64,
    pub energy: f64,
    pub q: f64,
    pub m: [f64; 3],
    /// Solver name, suffixed `-unconverged` or `-failed` for flagged points.
    pub solver: String,
    pub near_degenerate: bool,
    pub wall_time_s: f64,
}

impl SweepRecord {
    pub fn failed(&self) -> bool {
        self.solver.ends_with("-failed")
    }
}

/// Everything one grid point produced.
#[derive(Debug, Clone)]
pub struct PointSolution {
    pub record: SweepRecord,
    pub field: Option<MagnetizationField>,
    pub theta: Option<Vec<f64>>,
    /// Per-restart `eval energy` traces (VQE only).
    pub traces: Vec<String>,
}

/// Solves the ground state at one field value. Solver failures become a
/// flagged record with NaN observables instead of an error.
pub fn solve_point(
    lattice: &Lattice,
    config: &RunConfig,
    b_z: f64,
    seed: u64,
    warm: Option<&[f64]>,
) -> Result<PointSolution> {
    let t0 = Instant::now();
    let h = build_hamiltonian(lattice, &config.model.at(b_z))?;
    let kind = config.solver.kind;
    let solved = match kind {
        SolverKind::Lanczos => {
            let exact = LanczosConfig { rng_seed: seed, ..config.solver.exact };
            match lanczos_ground(&h, &exact) {
                Ok(g) => Ok((g.energy, g.vector, g.near_degenerate, true, None, Vec::new())),
                Err(e @ Error::NotConverged { .. }) => Err(e),
                Err(e) => return Err(e),
            }
        }
        SolverKind::Dense => {
            let g = dense_ground(&h)?;
            Ok((g.energy, g.vector, g.near_degenerate, true, None, Vec::new()))
        }
        SolverKind::Vqe => {
            let vqe = VqeConfig { rng_seed: seed, ..config.solver.vqe };
            let warm: Vec<Vec<f64>> = warm.map(|w| vec![w.to_vec()]).unwrap_or_default();
            let r = minimize_with_starts(&h, &vqe, &warm)?;
            let state = Ansatz::new(lattice.n_sites(), vqe.ansatz)?.prepare_state(&r.best_theta)?;
            let traces = if config.output.vqe_traces {
                (0..r.restarts.len()).map(|k| r.trace_dump(k)).collect()
            } else {
                Vec::new()
            };
            Ok((r.energy, state, false, r.converged, Some(r.best_theta), traces))
        }
    };
    match solved {
        Ok((energy, state, near_degenerate, converged, theta, traces)) => {
            let field = magnetization_field(&state, lattice)?;
            let q = topological_charge(lattice, &field)?;
            let solver = if converged {
                kind.tag().to_string()
            } else {
                format!("{}-unconverged", kind.tag())
            };
            Ok(PointSolution {
                record: SweepRecord {
                    b_z,
                    energy,
                    q,
                    m: total_magnetization(&field),
                    solver,
                    near_degenerate,
                    wall_time_s: t0.elapsed().as_secs_f64(),
                },
                field: Some(field),
                theta,
                traces,
            })
        }
        Err(_) => Ok(PointSolution {
            record: SweepRecord {
                b_z,
                energy: f64::NAN,
                q: f64::NAN,
                m: [f64::NAN; 3],
                solver: format!("{}-failed", kind.tag()),
                near_degenerate: false,
                wall_time_s: t0.elapsed().as_secs_f64(),
            },
            field: None,
            theta: None,
            traces: Vec::new(),
        }),
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    /// `(b_z, field)` for the grid points selected by `dump_fields_at`.
    pub fields: Vec<(f64, MagnetizationField)>,
    /// `(b_z, restart, trace)` when VQE traces are requested.
    pub traces: Vec<(f64, usize, String)>,
    pub transition: Option<TransitionReport>,
}

/// Solves every point of `points` in order. Exact solvers run the points in
/// parallel; VQE chains warm starts from the previous point.
fn solve_points(lattice: &Lattice, config: &RunConfig, points: &[f64]) -> Result<Vec<PointSolution>> {
    let seed = |k: usize| config.rng_seed.wrapping_add(k as u64);
    match config.solver.kind {
        SolverKind::Vqe => {
            let mut out: Vec<PointSolution> = Vec::with_capacity(points.len());
            for (k, &b) in points.iter().enumerate() {
                let warm = out.last().and_then(|p| p.theta.as_deref());
                let sol = solve_point(lattice, config, b, seed(k), warm)?;
                out.push(sol);
            }
            Ok(out)
        }
        _ => points
            .par_iter()
            .enumerate()
            .map(|(k, &b)| solve_point(lattice, config, b, seed(k), None))
            .collect(),
    }
}

/// Runs the configured sweep, including the optional refinement pass.
pub fn run_sweep(config: &RunConfig) -> Result<SweepOutput> {
    config.validate()?;
    let lattice = config.build_lattice()?;
    let mut solutions = solve_points(&lattice, config, &config.sweep.grid())?;
    let threshold = config.transition.threshold;

    let records_of = |s: &[PointSolution]| s.iter().map(|p| p.record.clone()).collect::<Vec<_>>();
    if let Some(refine) = config.sweep.refine {
        let usable = solutions.iter().filter(|p| p.field.is_some()).count();
        if usable >= 4 {
            if let Some(t) = detect_transition(&records_of(&solutions), threshold)? {
                let lo = (t.b_before - refine.window).max(config.sweep.start);
                let hi = (t.b_after + refine.window).min(config.sweep.stop);
                let fine: Vec<f64> = grid(lo, hi, refine.step)
                    .into_iter()
                    .filter(|b| solutions.iter().all(|p| (p.record.b_z - b).abs() > 1e-9))
                    .collect();
                solutions.extend(solve_points(&lattice, config, &fine)?);
                solutions.sort_by(|a, b| a.record.b_z.total_cmp(&b.record.b_z));
            }
        }
    }

    if !config.output.wall_time {
        for p in &mut solutions {
            p.record.wall_time_s = 0.0;
        }
    }
    let records = records_of(&solutions);
    let usable = records.iter().filter(|r| r.q.is_finite() && r.energy.is_finite()).count();
    let transition = if usable >= 4 {
        detect_transition(&records, threshold)?
    } else {
        None
    };
    let mut fields = Vec::new();
    for &target in &config.sweep.dump_fields_at {
        let nearest = solutions
            .iter()
            .filter(|p| p.field.is_some())
            .min_by(|a, b| (a.record.b_z - target).abs().total_cmp(&(b.record.b_z - target).abs()));
        if let Some(p) = nearest {
            if !fields.iter().any(|(b, _)| *b == p.record.b_z) {
                fields.push((p.record.b_z, p.field.clone().expect("filtered")));
            }
        }
    }
    let traces = solutions
        .iter()
        .flat_map(|p| p.traces.iter().enumerate().map(move |(k, t)| (p.record.b_z, k, t.clone())))
        .collect();
    Ok(SweepOutput {
        records,
        fields,
        traces,
        transition,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    /// Midpoint of the jump interval.
    pub b_star: f64,
    pub b_before: f64,
    pub b_after: f64,
    /// Index of the record just before the jump.
    pub index: usize,
    pub q_before: f64,
    pub q_after: f64,
    /// `|ΔQ| / max(|Q_before|, ε)`.
    pub delta_q_rel: f64,
    /// `m_after − m_before`, componentwise.
    pub delta_m: [f64; 3],
    pub delta_e: f64,
    /// `|ΔQ|` over the median of the other first differences.
    pub ratio: f64,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Flags the largest first difference of Q when it exceeds `threshold` times
/// the median of all other first differences. Failed records are skipped.
pub fn detect_transition(records: &[SweepRecord], threshold: f64) -> Result<Option<TransitionReport>> {
    let usable: Vec<(usize, &SweepRecord)> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.q.is_finite() && r.energy.is_finite())
        .collect();
    if usable.len() < 4 {
        return Err(Error::InvalidConfig(format!(
            "transition detection needs at least 4 records, got {}",
            usable.len()
        )));
    }
    let diffs: Vec<f64> = usable.windows(2).map(|w| (w[1].1.q - w[0].1.q).abs()).collect();
    let mut k = 0;
    for (i, d) in diffs.iter().enumerate() {
        if *d > diffs[k] {
            k = i;
        }
    }
    let mut others: Vec<f64> = diffs
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != k)
        .map(|(_, d)| *d)
        .collect();
    let med = median(&mut others);
    if !(diffs[k] > threshold * med) {
        return Ok(None);
    }
    let (ib, before) = usable[k];
    let (_, after) = usable[k + 1];
    let dq = after.q - before.q;
    Ok(Some(TransitionReport {
        b_star: 0.5 * (before.b_z + after.b_z),
        b_before: before.b_z,
        b_after: after.b_z,
        index: ib,
        q_before: before.q,
        q_after: after.q,
        delta_q_rel: dq.abs() / before.q.abs().max(DELTA_Q_EPS),
        delta_m: [
            after.m[0] - before.m[0],
            after.m[1] - before.m[1],
            after.m[2] - before.m[2],
        ],
        delta_e: after.energy - before.energy,
        ratio: if med > 0.0 { diffs[k] / med } else { f64::INFINITY },
    }))
}

/// Index `k` of the interval `[k, k+1]` with the largest change of slope of E,
/// `|(E[k+2] − E[k+1]) − (E[k] − E[k−1])|`; a level crossing shows up as a kink.
pub fn energy_kink_interval(records: &[SweepRecord]) -> Option<usize> {
    let e: Vec<f64> = records.iter().map(|r| r.energy).collect();
    if e.len() < 4 {
        return None;
    }
    (1..e.len() - 2)
        .map(|k| (k, ((e[k + 2] - e[k + 1]) - (e[k] - e[k - 1])).abs()))
        .filter(|(_, s)| s.is_finite())
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
}

/// Index `k` of the interval with the largest `|Δm_x|`.
pub fn mx_jump_interval(records: &[SweepRecord]) -> Option<usize> {
    records
        .windows(2)
        .enumerate()
        .map(|(k, w)| (k, (w[1].m[0] - w[0].m[0]).abs()))
        .filter(|(_, d)| d.is_finite())
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
}

/// Checks that E strictly decreases along the sweep, allowing at most one
/// interval that breaks the trend. Returns the offending interval count.
pub fn energy_monotone_breaks(records: &[SweepRecord]) -> usize {
    records.windows(2).filter(|w| !(w[1].energy < w[0].energy)).count()
}

/// The records between the previous above-threshold Q jump (exclusive) and
/// the transition interval (inclusive of its left end).
pub fn pre_transition_segment<'a>(
    records: &'a [SweepRecord],
    report: &TransitionReport,
    threshold: f64,
) -> &'a [SweepRecord] {
    let end = report.index + 1;
    let diffs: Vec<f64> = records.windows(2).map(|w| (w[1].q - w[0].q).abs()).collect();
    let mut others: Vec<f64> = diffs
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != report.index)
        .map(|(_, d)| *d)
        .collect();
    let med = median(&mut others);
    let mut start = 0;
    for i in (0..report.index).rev() {
        if diffs[i] > threshold * med {
            start = i + 1;
            break;
        }
    }
    &records[start..end]
}
