//! Variational ground-state search over the ansatz angles.
//!
//! Every restart is an independent local optimization; the result keeps the
//! lowest energy found (ties go to the lower restart index). Initial points
//! are drawn up front from a single seeded generator, so a fixed seed gives
//! bitwise-identical results.

use std::cell::RefCell;

use argmin::core::{CostFunction, Executor, Gradient, State, TerminationReason, TerminationStatus};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::neldermead::NelderMead;
use argmin::solver::quasinewton::LBFGS;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{Ansatz, AnsatzConfig};
use crate::error::{Error, Result};
use crate::hamiltonian::PauliSum;
use crate::simulator::PauliOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// Limited-memory BFGS with a More–Thuente line search on exact gradients.
    Lbfgs,
    /// Steepest descent on exact gradients with step halving on rejection.
    GradientDescentParameterShift,
    /// Nelder–Mead simplex, no gradients.
    DerivativeFreeSimplex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialStrategy {
    /// Restart 0 starts at θ = 0, the rest uniformly in [−π, π).
    ZerosPlusRandom,
    AllRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqeConfig {
    #[serde(default = "default_optimizer")]
    pub optimizer: Optimizer,
    /// Objective evaluations per restart (an energy+gradient call counts once).
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
    #[serde(default = "default_energy_tol")]
    pub energy_tol: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_initial")]
    pub initial_strategy: InitialStrategy,
    /// Iterations without an improvement of `energy_tol` before stopping.
    #[serde(default = "default_stall_window")]
    pub stall_window: usize,
    #[serde(default)]
    pub ansatz: AnsatzConfig,
}

fn default_optimizer() -> Optimizer {
    Optimizer::GradientDescentParameterShift
}
fn default_max_evals() -> usize {
    20_000
}
fn default_energy_tol() -> f64 {
    1e-8
}
fn default_restarts() -> usize {
    4
}
fn default_initial() -> InitialStrategy {
    InitialStrategy::ZerosPlusRandom
}
fn default_stall_window() -> usize {
    50
}

impl Default for VqeConfig {
    fn default() -> Self {
        Self {
            optimizer: default_optimizer(),
            max_evals: default_max_evals(),
            energy_tol: default_energy_tol(),
            restarts: default_restarts(),
            rng_seed: 0,
            initial_strategy: default_initial(),
            stall_window: default_stall_window(),
            ansatz: AnsatzConfig::default(),
        }
    }
}

impl VqeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_evals < 1 {
            return Err(Error::InvalidConfig("vqe.max_evals must be >= 1".into()));
        }
        if !(self.energy_tol > 0.0) {
            return Err(Error::InvalidConfig("vqe.energy_tol must be > 0".into()));
        }
        if self.restarts < 1 {
            return Err(Error::InvalidConfig("vqe.restarts must be >= 1".into()));
        }
        if self.stall_window < 1 {
            return Err(Error::InvalidConfig("vqe.stall_window must be >= 1".into()));
        }
        if self.ansatz.layers < 1 {
            return Err(Error::InvalidConfig("vqe.ansatz.layers must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartKind {
    Zeros,
    Random,
    Warm,
}

#[derive(Debug, Clone)]
pub struct RestartOutcome {
    pub start: StartKind,
    pub energy: f64,
    pub theta: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
    /// Best energy so far after each evaluation.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct VqeResult {
    pub best_theta: Vec<f64>,
    pub energy: f64,
    pub evaluations: usize,
    pub restart_energies: Vec<f64>,
    /// Whether the restart that produced `energy` met its stopping rule.
    pub converged: bool,
    pub best_restart: usize,
    pub restarts: Vec<RestartOutcome>,
}

impl VqeResult {
    /// `eval energy` lines of one restart's best-so-far trace.
    pub fn trace_dump(&self, restart: usize) -> String {
        let mut s = String::new();
        for (k, e) in self.restarts[restart].trace.iter().enumerate() {
            s.push_str(&format!("{} {}\n", k + 1, e));
        }
        s
    }
}

/// `⟨Φ(θ)|H|Φ(θ)⟩` for the ansatz configured by `config`.
pub fn energy(theta: &[f64], hamiltonian: &PauliSum, config: &AnsatzConfig) -> Result<f64> {
    let ansatz = Ansatz::new(hamiltonian.n_qubits(), *config)?;
    ansatz.energy(theta, &PauliOperator::new(hamiltonian))
}

pub fn minimize(hamiltonian: &PauliSum, config: &VqeConfig) -> Result<VqeResult> {
    minimize_with_starts(hamiltonian, config, &[])
}

/// Runs the configured cold restarts plus one restart from each warm start.
pub fn minimize_with_starts(
    hamiltonian: &PauliSum,
    config: &VqeConfig,
    warm_starts: &[Vec<f64>],
) -> Result<VqeResult> {
    config.validate()?;
    let ansatz = Ansatz::new(hamiltonian.n_qubits(), config.ansatz)?;
    let op = PauliOperator::new(hamiltonian);
    let p = ansatz.n_params();

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut starts: Vec<(StartKind, Vec<f64>)> = Vec::new();
    for r in 0..config.restarts {
        if r == 0 && config.initial_strategy == InitialStrategy::ZerosPlusRandom {
            starts.push((StartKind::Zeros, vec![0.0; p]));
        } else {
            let x = (0..p)
                .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect();
            starts.push((StartKind::Random, x));
        }
    }
    for w in warm_starts {
        if w.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: w.len(),
            });
        }
        starts.push((StartKind::Warm, w.clone()));
    }

    let outcomes = starts
        .into_par_iter()
        .map(|(kind, x0)| run_restart(&ansatz, &op, config, kind, x0))
        .collect::<Result<Vec<_>>>()?;

    let mut best = 0;
    for (k, o) in outcomes.iter().enumerate() {
        if o.energy < outcomes[best].energy {
            best = k;
        }
    }
    Ok(VqeResult {
        best_theta: outcomes[best].theta.clone(),
        energy: outcomes[best].energy,
        evaluations: outcomes.iter().map(|o| o.evaluations).sum(),
        restart_energies: outcomes.iter().map(|o| o.energy).collect(),
        converged: outcomes[best].converged,
        best_restart: best,
        restarts: outcomes,
    })
}

/// Counts evaluations and remembers the best point seen.
struct Tracker {
    evals: usize,
    best_energy: f64,
    best_theta: Vec<f64>,
    trace: Vec<f64>,
    cache: Option<(Vec<f64>, f64, Vec<f64>)>,
}

impl Tracker {
    fn record(&mut self, theta: &[f64], e: f64) {
        self.evals += 1;
        if e < self.best_energy {
            self.best_energy = e;
            self.best_theta = theta.to_vec();
        }
        self.trace.push(self.best_energy);
    }
}

struct Objective<'a> {
    ansatz: &'a Ansatz,
    op: &'a PauliOperator,
    max_evals: usize,
    tracker: &'a RefCell<Tracker>,
}

#[derive(Debug, thiserror::Error)]
#[error("evaluation budget exhausted")]
struct BudgetExhausted;

impl Objective<'_> {
    fn budget(&self) -> std::result::Result<(), argmin::core::Error> {
        if self.tracker.borrow().evals >= self.max_evals {
            return Err(BudgetExhausted.into());
        }
        Ok(())
    }

    fn value_and_gradient(&self, theta: &[f64]) -> std::result::Result<(f64, Vec<f64>), argmin::core::Error> {
        if let Some((x, e, g)) = &self.tracker.borrow().cache {
            if x.as_slice() == theta {
                return Ok((*e, g.clone()));
            }
        }
        self.budget()?;
        let (e, g) = self.ansatz.energy_and_gradient(theta, self.op)?;
        let mut t = self.tracker.borrow_mut();
        t.record(theta, e);
        t.cache = Some((theta.to_vec(), e, g.clone()));
        Ok((e, g))
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, theta: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        if let Some((x, e, _)) = &self.tracker.borrow().cache {
            if x == theta {
                return Ok(*e);
            }
        }
        self.budget()?;
        let e = self.ansatz.energy(theta, self.op)?;
        self.tracker.borrow_mut().record(theta, e);
        Ok(e)
    }
}

impl Gradient for Objective<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, theta: &Self::Param) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        Ok(self.value_and_gradient(theta)?.1)
    }
}

fn run_restart(
    ansatz: &Ansatz,
    op: &PauliOperator,
    config: &VqeConfig,
    start: StartKind,
    x0: Vec<f64>,
) -> Result<RestartOutcome> {
    let tracker = RefCell::new(Tracker {
        evals: 0,
        best_energy: f64::INFINITY,
        best_theta: x0.clone(),
        trace: Vec::new(),
        cache: None,
    });
    let objective = Objective {
        ansatz,
        op,
        max_evals: config.max_evals,
        tracker: &tracker,
    };
    let converged = match config.optimizer {
        Optimizer::Lbfgs => run_lbfgs(objective, config, x0)?,
        Optimizer::DerivativeFreeSimplex => run_simplex(objective, config, x0)?,
        Optimizer::GradientDescentParameterShift => run_descent(&objective, config, x0)?,
    };
    let t = tracker.into_inner();
    // Report the energy of the returned angles exactly as `energy` would.
    let energy = ansatz.energy(&t.best_theta, op)?;
    Ok(RestartOutcome {
        start,
        energy,
        theta: t.best_theta,
        evaluations: t.evals,
        converged,
        trace: t.trace,
    })
}

/// Maps argmin's outcome to "converged"; budget exhaustion and line-search
/// breakdowns end the restart with the best point seen so far.
fn finished<I: State>(res: std::result::Result<argmin::core::OptimizationResult<Objective<'_>, impl Sized, I>, argmin::core::Error>) -> Result<bool> {
    match res {
        Ok(r) => Ok(matches!(
            r.state().get_termination_status(),
            TerminationStatus::Terminated(TerminationReason::SolverConverged)
                | TerminationStatus::Terminated(TerminationReason::TargetCostReached)
        )),
        Err(e) if e.downcast_ref::<BudgetExhausted>().is_some() => Ok(false),
        Err(e) => {
            if let Some(inner) = e.downcast_ref::<Error>() {
                return Err(Error::Optimizer(inner.to_string()));
            }
            // line search could not make progress: a stationary point to
            // working precision
            Ok(true)
        }
    }
}

fn run_lbfgs(objective: Objective<'_>, config: &VqeConfig, x0: Vec<f64>) -> Result<bool> {
    let linesearch = MoreThuenteLineSearch::new();
    let solver = LBFGS::new(linesearch, 10)
        .with_tolerance_grad(1e-7)
        .map_err(|e| Error::Optimizer(e.to_string()))?
        .with_tolerance_cost(config.energy_tol * 1e-2)
        .map_err(|e| Error::Optimizer(e.to_string()))?;
    let res = Executor::new(objective, solver)
        .configure(|s| s.param(x0).max_iters(config.max_evals as u64))
        .run();
    finished(res)
}

fn run_simplex(objective: Objective<'_>, config: &VqeConfig, x0: Vec<f64>) -> Result<bool> {
    let mut simplex = vec![x0.clone()];
    for k in 0..x0.len() {
        let mut v = x0.clone();
        v[k] += 0.5;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(config.energy_tol)
        .map_err(|e| Error::Optimizer(e.to_string()))?;
    let res = Executor::new(objective, solver)
        .configure(|s| s.max_iters(config.max_evals as u64))
        .run();
    finished(res)
}

/// Steepest descent; the step grows by 1.2 on success and halves on failure.
/// Stops when the best energy improved by less than `energy_tol` over the
/// last `stall_window` iterations.
fn run_descent(objective: &Objective<'_>, config: &VqeConfig, x0: Vec<f64>) -> Result<bool> {
    let mut x = x0;
    let mut step = 0.1;
    let eval = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        objective.value_and_gradient(x).map_err(|_| Error::Optimizer("budget".into()))
    };
    let (mut e, mut g) = match eval(&x) {
        Ok(v) => v,
        Err(_) => return Ok(false),
    };
    let mut history = vec![e];
    loop {
        if objective.tracker.borrow().evals >= config.max_evals {
            return Ok(false);
        }
        let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        let (et, gt) = match eval(&trial) {
            Ok(v) => v,
            Err(_) => return Ok(false),
        };
        if et < e {
            x = trial;
            e = et;
            g = gt;
            step *= 1.2;
        } else {
            step *= 0.5;
            if step < 1e-14 {
                return Ok(true);
            }
        }
        history.push(e);
        let w = config.stall_window;
        if history.len() > w && history[history.len() - 1 - w] - e < config.energy_tol {
            return Ok(true);
        }
    }
}
