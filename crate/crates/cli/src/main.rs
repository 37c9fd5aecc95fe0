use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use skyrmion_core::bench::{run_benchmark, BenchConfig};
use skyrmion_core::io::{field_file_name, write_file, write_outputs};
use skyrmion_core::observables::field_dump;
use skyrmion_core::sweep::{run_sweep, solve_point, RunConfig, SolverKind};
use skyrmion_core::Error;

/// Ground-state sweeps of the 2D XXZ model with DMI: VQE or exact Lanczos.
#[derive(Parser)]
#[command(name = "skyrmion", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the field, write the CSV, field dumps and manifest.
    Sweep(Common),
    /// Time solvers across lattice sizes and fit scaling exponents.
    Bench(BenchArgs),
    /// Solve a single field value and dump the magnetization pattern.
    Pattern(PatternArgs),
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solver, overrides solver.kind.
    #[arg(long, value_parser = parse_solver)]
    solver: Option<SolverKind>,
    /// Seed, overrides rng_seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PatternArgs {
    #[command(flatten)]
    common: Common,
    /// Field value; defaults to sweep.start.
    #[arg(long)]
    bz: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
    /// Restrict to these solvers (repeatable).
    #[arg(long, value_parser = parse_solver)]
    solver: Vec<SolverKind>,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_solver(s: &str) -> std::result::Result<SolverKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(args) => sweep(args),
        Command::Bench(args) => bench(args),
        Command::Pattern(args) => pattern(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Io { .. } => 3,
                Error::NotConverged { .. } | Error::Optimizer(_) => 2,
                _ => 1,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 3;
        }
    }
    1
}

fn load_run_config(args: &Common) -> Result<RunConfig> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Io { path: args.config.clone(), source: e })?;
    let mut cfg: RunConfig = serde_json::from_str(&text)
        .map_err(Error::from)
        .with_context(|| format!("parsing {}", args.config.display()))?;
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    if let Some(kind) = args.solver {
        cfg.solver.kind = kind;
    }
    if let Some(seed) = args.seed {
        cfg.rng_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sweep(args: Common) -> Result<ExitCode> {
    let cfg = load_run_config(&args)?;
    let lattice = cfg.build_lattice()?;
    let out = run_sweep(&cfg)?;
    let written = write_outputs(&cfg, &lattice, &out)?;
    for r in &out.records {
        println!(
            "bz={:.4} E={:.10} Q={:.6} M=({:.4}, {:.4}, {:.4}) {}",
            r.b_z, r.energy, r.q, r.m[0], r.m[1], r.m[2], r.solver
        );
    }
    match &out.transition {
        Some(t) => println!(
            "transition at bz*={:.4} (interval {}..{}), dQ_rel={:.3}, dE={:.3e}, dM=({:.3e}, {:.3e}, {:.3e})",
            t.b_star, t.b_before, t.b_after, t.delta_q_rel, t.delta_e, t.delta_m[0], t.delta_m[1], t.delta_m[2]
        ),
        None => println!("no transition detected"),
    }
    for p in &written {
        println!("wrote {}", p.display());
    }
    if out.records.iter().all(|r| r.failed()) {
        eprintln!("error: the solver failed at every grid point");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn pattern(args: PatternArgs) -> Result<ExitCode> {
    let cfg = load_run_config(&args.common)?;
    let bz = args.bz.unwrap_or(cfg.sweep.start);
    let lattice = cfg.build_lattice()?;
    let sol = solve_point(&lattice, &cfg, bz, cfg.rng_seed, None)?;
    let r = &sol.record;
    println!(
        "bz={} E={} Q={} M=({}, {}, {}) {}",
        r.b_z, r.energy, r.q, r.m[0], r.m[1], r.m[2], r.solver
    );
    let Some(field) = &sol.field else {
        eprintln!("error: solver failed at bz={bz}");
        return Ok(ExitCode::from(2));
    };
    let path = cfg.output.dir.join(field_file_name(bz));
    write_file(&path, &field_dump(&lattice, field))?;
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Io { path: args.config.clone(), source: e })?;
    let mut cfg: BenchConfig = serde_json::from_str(&text)
        .map_err(Error::from)
        .with_context(|| format!("parsing {}", args.config.display()))?;
    if !args.solver.is_empty() {
        cfg.solvers = args.solver.clone();
    }
    if let Some(seed) = args.seed {
        cfg.rng_seed = seed;
    }
    let report = run_benchmark(&cfg)?;
    let table = report.table();
    print!("{table}");
    write_report(&args.out, "bench.txt", &table)?;
    write_report(&args.out, "bench.json", &report.to_json()?)?;
    Ok(ExitCode::SUCCESS)
}

fn write_report(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    write_file(&path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}
