use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use netbt::balance::{balance, check_balanced, BalancedRealization, GramianSet};
use netbt::bounds::{error_bounds, OmegaSet};
use netbt::fmt::f64_17;
use netbt::lmi::default_margin;
use netbt::pipeline::{
    analyze, balanced_stage, gramians, load_system, run_pipeline, standard_forms, PipelineConfig, SystemSource, Threshold,
};
use netbt::sdp::{export_sdpa, SolveOptions};
use netbt::sim::{gain_lower_bound, l2_norm, random_excitation, simulate, ErrorSystem, IoOperator, Signal};
use netbt::sysmodel::{dimension_counts, DistributedSystem};
use netbt::truncate::{select_plan, truncate, verify_reduced};
use netbt::{Error, Result};

/// Structure-preserving balanced truncation of interconnected time-varying
/// systems.
#[derive(Parser)]
#[command(name = "netbt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
struct Source {
    /// System description file.
    #[arg(long, value_name = "PATH")]
    system: Option<PathBuf>,
    /// The built-in five-agent reference system.
    #[arg(long)]
    reference: bool,
}

impl Source {
    fn get(&self) -> SystemSource {
        match &self.system {
            Some(p) => SystemSource::File(p.clone()),
            None => SystemSource::Reference,
        }
    }
}

#[derive(Args, Clone)]
struct Solver {
    /// Inequality margin (default: 1e-6 times the largest squared norm of A).
    #[arg(long)]
    beta: Option<f64>,
    /// Solver duality-gap and feasibility tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

impl Solver {
    fn options(&self) -> SolveOptions {
        SolveOptions { tolerance: self.tol, feasibility_tolerance: self.tol, ..SolveOptions::default() }
    }

    fn beta(&self, system: &DistributedSystem) -> f64 {
        self.beta.unwrap_or_else(|| default_margin(system))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a system description for consistency.
    Validate {
        #[command(flatten)]
        source: Source,
    },
    /// Print the problem-size counts of the performance and gramian programs.
    Counts {
        #[command(flatten)]
        source: Source,
    },
    /// Minimize the performance level.
    Analyze {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        solver: Solver,
    },
    /// Solve for minimal-trace controllability and observability gramians.
    Gramians {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        solver: Solver,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Balance a system from gramian files; optionally re-solve for a
    /// diagonal sigma with a common floor.
    Balance {
        #[arg(long, value_name = "PATH")]
        system: PathBuf,
        #[arg(long, value_name = "FILE")]
        ctrl: PathBuf,
        #[arg(long, value_name = "FILE")]
        obs: PathBuf,
        /// Floor weight of the diagonal re-solve.
        #[arg(long)]
        a1: Option<f64>,
        #[command(flatten)]
        solver: Solver,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Truncate a balanced system at a threshold on sigma.
    Reduce {
        #[arg(long, value_name = "PATH")]
        system: PathBuf,
        #[arg(long, value_name = "FILE")]
        sigma: PathBuf,
        /// Entries strictly greater than this are kept.
        #[arg(long)]
        tau: f64,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Error bounds from a file of truncated entries.
    Bound {
        #[arg(long, value_name = "FILE")]
        omega: PathBuf,
    },
    /// Simulate a system, or the error against a reduced system.
    Simulate {
        #[command(flatten)]
        source: Source,
        /// Reduced system; outputs become the error.
        #[arg(long, value_name = "PATH")]
        reduced: Option<PathBuf>,
        /// Input signal (default: seeded random excitation).
        #[arg(long, value_name = "CSV")]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Horizon of the generated excitation (default: four windows).
        #[arg(long)]
        horizon: Option<usize>,
        /// Power iterations of the gain estimate; 0 skips it.
        #[arg(long, default_value_t = 50)]
        iterations: usize,
        /// Output signal file.
        #[arg(long, value_name = "CSV")]
        out: Option<PathBuf>,
    },
    /// Write the performance and gramian programs in SDPA sparse format.
    ExportSdpa {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        solver: Solver,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Run the full pipeline (reference system by default).
    Reproduce {
        #[arg(long, value_name = "PATH")]
        system: Option<PathBuf>,
        #[command(flatten)]
        solver: Solver,
        #[arg(long, default_value_t = 750.0)]
        a1: f64,
        /// Explicit threshold instead of the floor of the diagonal re-solve.
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        horizon: Option<usize>,
        /// Random starts of the error-gain estimate.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long)]
        export_sdpa: bool,
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
    },
}

fn line(key: &str, value: f64) {
    println!("{key}: {}", f64_17(value));
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { source } => {
            let system = match source.get() {
                SystemSource::Reference => netbt::pipeline::generate_reference()?,
                SystemSource::File(p) => netbt::sysmodel::load(p)?,
            };
            let report = system.validate();
            if !report.is_valid() {
                return Err(Error::InvalidSystem(report));
            }
            println!("valid: {} vertices, {} edges", system.vertex_count(), system.graph().edge_count());
        }
        Command::Counts { source } => {
            let c = dimension_counts(&load_system(&source.get())?);
            println!("p1_variable_dim: {}", c.p1_variable_dim);
            println!("p23_variable_dim: {}", c.p2_variable_dim);
            println!("block_count: {}", c.block_count);
            println!("p1_constraints: {}", c.p1_constraints);
            println!("p23_constraints: {}", c.p23_constraints);
        }
        Command::Analyze { source, solver } => {
            let system = load_system(&source.get())?;
            let beta = solver.beta(&system);
            let p = analyze(&system, beta, &solver.options())?;
            line("beta", beta);
            line("gamma", p.gamma);
            line("gamma_squared", p.gamma_squared);
            println!("iterations: {}", p.iterations);
        }
        Command::Gramians { source, solver, out } => {
            let system = load_system(&source.get())?;
            let (x, y, s) = gramians(&system, solver.beta(&system), &solver.options())?;
            create_dir(&out)?;
            x.save(out.join("ctrl_gramians.json"))?;
            y.save(out.join("obs_gramians.json"))?;
            line("ctrl_trace", s.ctrl_trace);
            line("obs_trace", s.obs_trace);
        }
        Command::Balance { system, ctrl, obs, a1, solver, out } => {
            let system = load_system(&SystemSource::File(system))?;
            let bal = balance(&system, &GramianSet::load(ctrl)?, &GramianSet::load(obs)?)?;
            let check = check_balanced(&bal)?;
            create_dir(&out)?;
            netbt::sysmodel::save(&bal.system, out.join("balanced_system.json"))?;
            bal.sigma.save(out.join("balanced_sigma.json"))?;
            line("balanced_margin", bal.sigma.beta);
            line("max_off_diagonal", check.max_off_diagonal);
            if let Some(a1) = a1 {
                let (staged, s) = balanced_stage(&bal.system, solver.beta(&system), a1, &solver.options())?;
                netbt::sysmodel::save(&staged.system, out.join("stage_system.json"))?;
                staged.sigma.save(out.join("stage_sigma.json"))?;
                line("epsilon", s.epsilon);
            }
        }
        Command::Reduce { system, sigma, tau, out } => {
            let system = load_system(&SystemSource::File(system))?;
            let sigma = GramianSet::load(sigma)?;
            let realization = BalancedRealization::from_diagonal(&system, &sigma)?;
            let plan = select_plan(&realization, tau)?;
            let (reduced, split) = truncate(&realization, &plan)?;
            let check = verify_reduced(&reduced, &split, sigma.beta)?;
            create_dir(&out)?;
            netbt::sysmodel::save(&reduced, out.join("reduced_system.json"))?;
            split.gamma.save(out.join("gamma.json"))?;
            split.omega.save(out.join("omega.json"))?;
            println!("removed_edges: {}", system.graph().edge_count() - reduced.graph().edge_count());
            println!("truncated_per_time: {:?}", plan.truncated_counts(&system));
            println!("reduced_inequalities_hold: {}", check.all_satisfied());
            if !check.all_satisfied() {
                return Err(Error::Numerical(format!("reduced inequalities violated (worst slack {:e})", check.min_slack())));
            }
        }
        Command::Bound { omega } => {
            let r = error_bounds(&OmegaSet::load(omega)?)?;
            line("bound_distinct", r.distinct);
            line("bound_monotone", r.bound);
            line("staged", r.staged);
        }
        Command::Simulate { source, reduced, input, seed, horizon, iterations, out } => {
            let system = load_system(&source.get())?;
            let reduced = reduced.map(|p| load_system(&SystemSource::File(p))).transpose()?;
            let error = reduced.as_ref().map(|r| ErrorSystem::new(&system, r)).transpose()?;
            let op: &dyn IoOperator = match &error {
                Some(e) => e,
                None => &system,
            };
            let input = match input {
                Some(p) => Signal::load_csv(p)?,
                None => {
                    let t = horizon.unwrap_or(4 * system.schedule().len());
                    random_excitation(op, t, 100, 10.0, seed)
                }
            };
            let output = op.apply(&input)?;
            let (_, state) = simulate(&system, &input)?;
            let final_norm: f64 = state.temporal.iter().chain(&state.spatial).map(|v| v.norm_squared()).sum::<f64>().sqrt();
            line("input_norm", l2_norm(&input));
            line("output_norm", l2_norm(&output));
            line("final_state_norm", final_norm);
            if iterations > 0 {
                let est = gain_lower_bound(op, input.horizon().max(1), iterations, seed)?;
                line("gain_lower_bound", est.last().copied().unwrap_or(0.0));
            }
            if let Some(p) = out {
                output.save_csv(p)?;
            }
        }
        Command::ExportSdpa { source, solver, out } => {
            let system = load_system(&source.get())?;
            create_dir(&out)?;
            for (name, form) in standard_forms(&system, solver.beta(&system), &solver.options())? {
                let path = out.join(format!("{name}.dat-s"));
                export_sdpa(&form, &path)?;
                println!("{name}: {} variables, {} blocks", form.variable_count(), form.blocks.len());
            }
        }
        Command::Reproduce { system, solver, a1, tau, seed, horizon, trials, export_sdpa, out } => {
            let config = PipelineConfig {
                system: system.map_or(SystemSource::Reference, SystemSource::File),
                beta: solver.beta,
                solver: solver.options(),
                a1,
                threshold: tau.map_or(Threshold::Heuristic, Threshold::Explicit),
                seed,
                horizon,
                gain_trials: trials,
                export_sdpa,
                out: out.clone(),
                ..PipelineConfig::default()
            };
            let r = run_pipeline(&config)?;
            line("beta", r.beta);
            line("gamma", r.performance.gamma);
            line("epsilon", r.balanced_stage.epsilon);
            line("threshold", r.truncation.threshold);
            line("bound_distinct", r.bounds.distinct);
            line("bound", r.bounds.bound);
            line("error_ratio", r.simulation.error_ratio);
            line("gain_estimate", r.simulation.gain_estimate);
            println!("bound_holds: {}", r.simulation.bound_holds);
            println!("report: {}", out.join("report.json").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
