//! `fdlm`: uniform and adaptive studies of the circle benchmark.

mod check;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use fdlm_core::adaptivity::{adaptive_loop, AdaptConfig};
use fdlm_core::benchmark;
use fdlm_core::coupling::{AssemblyMode, CouplingForm};
use fdlm_core::mesh::{build_disk_mesh, build_rect_mesh};
use fdlm_core::report::{results_csv, write_level_vtk, write_run, EocTable, RunMetadata, Summary};
use fdlm_core::solver::{
    CouplingConfig, Discretization, ElementFamily, GmresParams, InnerA, PrecondConfig, PrecondVariant,
};
use fdlm_core::study::{solve_level, uniform_meshes, uniform_study, LevelRecord, PartialRun, SolverConfig, UniformConfig};

#[derive(Debug, Parser)]
#[command(name = "fdlm", version, about = "Fictitious-domain interface problems on unfitted meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve on a single uniform mesh pair.
    Solve {
        #[command(flatten)]
        disc: DiscArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        meshes: UniformArgs,
        /// Refinement level of the mesh pair.
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Uniform refinement study.
    Converge {
        #[command(flatten)]
        disc: DiscArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        meshes: UniformArgs,
        #[arg(long, default_value_t = 5)]
        levels: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Adaptive refinement with Dörfler marking on both meshes.
    Adapt {
        #[command(flatten)]
        disc: DiscArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Bulk fraction of the squared estimator.
        #[arg(long, default_value_t = 0.6)]
        alpha1: f64,
        /// Stop once eta + eta2 is below this value.
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
        #[arg(long, default_value_t = 10)]
        max_loops: usize,
        /// Subdivisions per axis of the initial background mesh.
        #[arg(long, default_value_t = 4)]
        coarse_n: usize,
        /// Refinement depth of the initial immersed mesh.
        #[arg(long, default_value_t = 0)]
        immersed_level: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the invariant suite on the first uniform mesh pairs.
    Check {
        #[command(flatten)]
        disc: DiscArgs,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args)]
struct DiscArgs {
    /// p1p1p1 or p1bubble-p0
    #[arg(long, default_value = "p1bubble-p0")]
    element: ElementFamily,
    /// l2 or h1
    #[arg(long, default_value = "l2")]
    coupling: CouplingForm,
    /// exact, inexact or inexact:<degree>
    #[arg(long, default_value = "exact")]
    assembly: AssemblyMode,
}

impl DiscArgs {
    fn config(&self) -> anyhow::Result<CouplingConfig> {
        Ok(CouplingConfig::new(self.element, self.coupling, self.assembly)?)
    }
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// none, diag or tri
    #[arg(long, default_value = "tri")]
    precond: PrecondVariant,
    /// dd (direct/direct) or md (multigrid/direct)
    #[arg(long, default_value = "dd")]
    inner: String,
    #[arg(long, default_value_t = 1e-12)]
    gmres_tol: f64,
}

impl SolverArgs {
    fn config(&self) -> anyhow::Result<SolverConfig> {
        let inner = PrecondConfig::parse_inner(&self.inner)?;
        if !(self.gmres_tol > 0.0 && self.gmres_tol < 1.0) {
            bail!("--gmres-tol must lie in (0, 1), got {}", self.gmres_tol);
        }
        Ok(SolverConfig {
            precond: PrecondConfig::new(self.precond, inner),
            gmres: GmresParams {
                tol: self.gmres_tol,
                ..GmresParams::default()
            },
        })
    }
}

#[derive(Debug, Args)]
struct UniformArgs {
    /// Subdivisions per axis of the coarsest background mesh.
    #[arg(long, default_value_t = 4)]
    coarse_n: usize,
    /// Refinement depth of the coarsest immersed mesh.
    #[arg(long, default_value_t = 1)]
    immersed_level: usize,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Flat `key = value` file with defaults for the flags of the subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single thread and zero timings: output depends only on the configuration.
    #[arg(long)]
    serial: bool,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, default_value = "fdlm-out")]
    out: PathBuf,
    /// Skip the per-level VTK files.
    #[arg(long)]
    no_vtk: bool,
    #[command(flatten)]
    common: CommonArgs,
}

/// Echoed into `summary.json`.
#[derive(Debug, Serialize)]
struct RunConfig<'a> {
    command: &'static str,
    geometry: &'static str,
    coupling: CouplingConfig,
    solver: SolverConfig,
    refinement: Refinement,
    out: &'a Path,
}

#[derive(Debug, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
enum Refinement {
    Single { level: usize, coarse_n: usize, immersed_level: usize },
    Uniform { levels: usize, coarse_n: usize, immersed_level: usize },
    Adaptive { alpha1: f64, tol: f64, max_loops: usize, coarse_n: usize, immersed_level: usize },
}

/// Configuration problems detected before any work is done.
#[derive(Debug)]
struct UsageError(anyhow::Error);

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = match config::parse_with_file(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => match e.downcast::<UsageError>() {
            Ok(UsageError(u)) => {
                eprintln!("error: {u:#}\n\nFor more information, try '--help'.");
                ExitCode::from(2)
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
    }
}

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(r: anyhow::Result<T>) -> anyhow::Result<T> {
    r.map_err(|e| UsageError(e).into())
}

fn init_threads(serial: bool) -> anyhow::Result<()> {
    if serial {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn reduced_accuracy(c: &CouplingConfig) -> bool {
    let reduced = c.form == CouplingForm::H1 && matches!(c.mode, AssemblyMode::Inexact(_));
    if reduced {
        log::warn!("H1 coupling with inexact assembly converges at a reduced rate");
    }
    reduced
}

/// Returns `Ok(false)` when the command ran but reported a failure.
fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Solve { disc, solver, meshes, level, output } => {
            let coupling = usage(disc.config())?;
            let solver = usage(solver.config())?;
            init_threads(output.common.serial)?;
            let cfg = UniformConfig {
                coarse_n: meshes.coarse_n,
                immersed_level: meshes.immersed_level,
                ..UniformConfig::new(coupling, solver, level + 1)
            };
            let refinement = Refinement::Single {
                level,
                coarse_n: cfg.coarse_n,
                immersed_level: cfg.immersed_level,
            };
            let result = solve_single(&cfg, level, &output);
            finish("solve", coupling, solver, refinement, &output, result, false)
        }
        Command::Converge { disc, solver, meshes, levels, output } => {
            let coupling = usage(disc.config())?;
            let solver = usage(solver.config())?;
            if levels == 0 {
                return usage(Err(anyhow::anyhow!("--levels must be at least 1")));
            }
            init_threads(output.common.serial)?;
            let cfg = UniformConfig {
                coarse_n: meshes.coarse_n,
                immersed_level: meshes.immersed_level,
                ..UniformConfig::new(coupling, solver, levels)
            };
            let refinement = Refinement::Uniform {
                levels,
                coarse_n: cfg.coarse_n,
                immersed_level: cfg.immersed_level,
            };
            let result = uniform_study(&cfg, &benchmark::benchmark_problem(), |out, rec| {
                vtk(&output, rec.level, out)
            });
            finish("converge", coupling, solver, refinement, &output, result, false)
        }
        Command::Adapt { disc, solver, alpha1, tol, max_loops, coarse_n, immersed_level, output } => {
            let coupling = usage(disc.config())?;
            let solver = usage(solver.config())?;
            if matches!(solver.precond.inner_a, InnerA::Multigrid(_)) {
                return usage(Err(anyhow::anyhow!(
                    "--inner md needs a uniform mesh hierarchy; adaptive runs support --inner dd only"
                )));
            }
            let cfg = AdaptConfig {
                alpha1,
                tol,
                max_loops,
                ..AdaptConfig::new(coupling, solver)
            };
            usage(cfg.validate().map_err(Into::into))?;
            init_threads(output.common.serial)?;
            let bg = build_rect_mesh(benchmark::background_box(), coarse_n).map_err(|e| UsageError(e.into()))?;
            let im = build_disk_mesh(benchmark::disk(), immersed_level).map_err(|e| UsageError(e.into()))?;
            let refinement = Refinement::Adaptive {
                alpha1,
                tol,
                max_loops,
                coarse_n,
                immersed_level,
            };
            let result = adaptive_loop(&cfg, &benchmark::benchmark_problem(), Arc::new(bg), Arc::new(im), |out, rec| {
                vtk(&output, rec.level, out)
            });
            finish("adapt", coupling, solver, refinement, &output, result, true)
        }
        Command::Check { disc, levels, common } => {
            let coupling = usage(disc.config())?;
            if levels == 0 {
                return usage(Err(anyhow::anyhow!("--levels must be at least 1")));
            }
            init_threads(common.serial)?;
            check::run(coupling, levels)
        }
    }
}

fn vtk(output: &OutputArgs, level: usize, out: &fdlm_core::study::LevelOutcome) -> fdlm_core::Result<()> {
    if output.no_vtk {
        return Ok(());
    }
    write_level_vtk(&output.out, level, out)
}

fn solve_single(cfg: &UniformConfig, level: usize, output: &OutputArgs) -> Result<Vec<LevelRecord>, PartialRun> {
    let t0 = std::time::Instant::now();
    let step = || -> fdlm_core::Result<LevelRecord> {
        let (h, im) = uniform_meshes(cfg)?;
        let disc = Discretization::new(h.meshes[level].clone(), im[level].clone(), cfg.coupling)?;
        let out = solve_level(disc, &benchmark::benchmark_problem(), &cfg.solver, Some(&h))?;
        let rec = LevelRecord::from_outcome(level, &out, t0.elapsed().as_secs_f64());
        vtk(output, level, &out)?;
        Ok(rec)
    };
    step().map(|r| vec![r]).map_err(|error| PartialRun { records: Vec::new(), error })
}

fn finish(
    command: &'static str,
    coupling: CouplingConfig,
    solver: SolverConfig,
    refinement: Refinement,
    output: &OutputArgs,
    result: Result<Vec<LevelRecord>, PartialRun>,
    adaptive: bool,
) -> anyhow::Result<bool> {
    let serial = output.common.serial;
    let (mut records, error) = match result {
        Ok(r) => (r, None),
        Err(p) => (p.records, Some(p.error.to_string())),
    };
    if serial {
        for r in &mut records {
            r.time_s = 0.0;
            r.report.timings = Default::default();
        }
    }
    let h = EocTable::h_based(&records);
    let d = EocTable::dof_based(&records);
    let eoc = if adaptive { vec![d, h] } else { vec![h, d] };
    let config = RunConfig {
        command,
        geometry: "circle",
        coupling,
        solver,
        refinement,
        out: &output.out,
    };
    let summary = Summary {
        config: &config,
        metadata: RunMetadata::new(command, reduced_accuracy(&coupling), serial),
        levels: &records,
        eoc,
        error: error.clone(),
    };
    write_run(&output.out, &summary, serial).with_context(|| format!("writing to {}", output.out.display()))?;
    print!("{}", results_csv(&records, serial));
    println!("wrote {}", output.out.display());
    if let Some(e) = error {
        eprintln!("error: {e}");
        return Ok(false);
    }
    Ok(true)
}
