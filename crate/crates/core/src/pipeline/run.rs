use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::reference::generate_reference;
use crate::balance::{balance, balanced_stage_problem, balancing_margin_factor, check_balanced, BalancedRealization, GramianSet};
use crate::bounds::{error_bounds, ErrorBoundReport, SlotName, DEFAULT_EQUALITY_TOLERANCE};
use crate::lmi::{
    assemble_ctrl_gramian, assemble_obs_gramian, assemble_performance, default_margin, GammaMode, LmiProblem,
    ScalarVariable,
};
use crate::sdp::{objective_trace, solve, to_standard_form, write_sdpa, SdpStandardForm, SolveOptions};
use crate::sim::{error_response, gain_lower_bound, l2_norm, random_excitation, simulate, ErrorSystem};
use crate::sysmodel::{dimension_counts, DistributedSystem, Slot};
use crate::truncate::{retained_dimensions, select_plan, truncate, verify_reduced, RetainedDimensions};
use crate::{Error, Result};

/// Where the system comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemSource {
    Reference,
    File(PathBuf),
}

/// How the truncation threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    /// The balanced-stage floor times `1 + 1e-6`.
    Heuristic,
    Explicit(f64),
}

/// Relative slack above the floor under which entries count as pinned.
pub const FLOOR_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub system: SystemSource,
    /// Inequality margin; the default is [`default_margin`].
    pub beta: Option<f64>,
    pub solver: SolveOptions,
    /// Weight of the floor in the balanced-stage objective.
    pub a1: f64,
    /// Relative equality tolerance for the bounds.
    pub equality_tolerance: f64,
    pub threshold: Threshold,
    pub seed: u64,
    /// Simulation horizon; the default is four windows.
    pub horizon: Option<usize>,
    /// Steps of nonzero excitation.
    pub excited_steps: usize,
    pub amplitude: f64,
    /// Random starts of the gain estimate.
    pub gain_trials: usize,
    pub power_iterations: usize,
    pub export_sdpa: bool,
    pub out: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            system: SystemSource::Reference,
            beta: None,
            solver: SolveOptions::default(),
            a1: 750.0,
            equality_tolerance: DEFAULT_EQUALITY_TOLERANCE,
            threshold: Threshold::Heuristic,
            seed: 42,
            horizon: None,
            excited_steps: 100,
            amplitude: 10.0,
            gain_trials: 200,
            power_iterations: 50,
            export_sdpa: false,
            out: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    pub fn check(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.a1) {
            return Err(Error::Precondition(format!("a1 = {} must be positive", self.a1)));
        }
        if !positive(self.solver.tolerance) || !positive(self.solver.feasibility_tolerance) {
            return Err(Error::Precondition("solver tolerances must be positive".into()));
        }
        if !positive(self.equality_tolerance) {
            return Err(Error::Precondition("equality tolerance must be positive".into()));
        }
        if self.beta.is_some_and(|b| !positive(b)) {
            return Err(Error::Precondition("beta must be positive".into()));
        }
        if let Threshold::Explicit(t) = self.threshold {
            if !(t >= 0.0) {
                return Err(Error::Precondition(format!("threshold {t} must be nonnegative")));
            }
        }
        if self.gain_trials == 0 || self.power_iterations == 0 || self.horizon == Some(0) {
            return Err(Error::Precondition("simulation horizon, trials and iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Loads or builds the configured system and checks it.
pub fn load_system(source: &SystemSource) -> Result<DistributedSystem> {
    let system = match source {
        SystemSource::Reference => generate_reference()?,
        SystemSource::File(path) => crate::sysmodel::load(path)?,
    };
    system.ensure_valid()?;
    Ok(system)
}

/// Note attached to every report on the reference corpus.
pub const RECONSTRUCTION_NOTE: &str = "reference graph: vertex 1 neighborhoods are fixed; edges (2,4),(4,2),(3,5),(5,3),(4,5),(5,2) are a reconstruction";

fn solved(problem: &LmiProblem, options: &SolveOptions, what: &str) -> Result<(crate::lmi::Assignment, f64, usize)> {
    let r = solve(problem, options).map_err(|e| e.context(what))?;
    let (objective, iterations) = (r.objective, r.iterations);
    Ok((r.into_optimal(what).map_err(|e| e.context("solve"))?, objective, iterations))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerformanceSummary {
    pub gamma: f64,
    pub gamma_squared: f64,
    pub iterations: usize,
}

/// Minimizes the performance level; infeasibility means the system is not
/// strongly stable at this margin.
pub fn analyze(system: &DistributedSystem, beta: f64, options: &SolveOptions) -> Result<PerformanceSummary> {
    let p = assemble_performance(system, GammaMode::Minimize, beta)?;
    let (a, _, iterations) = solved(&p, options, "performance").map_err(|e| match e {
        Error::Infeasible(_) => Error::Infeasible(format!("not strongly stable at this beta ({beta:e})")),
        other => other,
    })?;
    let gamma_squared = a.scalar(&p.variables, ScalarVariable::GammaSquared).expect("gamma^2 declared");
    Ok(PerformanceSummary { gamma: gamma_squared.max(0.0).sqrt(), gamma_squared, iterations })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GramianSummary {
    pub ctrl_trace: f64,
    pub obs_trace: f64,
    pub ctrl_iterations: usize,
    pub obs_iterations: usize,
}

/// Minimal-trace controllability and observability gramians.
pub fn gramians(system: &DistributedSystem, beta: f64, options: &SolveOptions) -> Result<(GramianSet, GramianSet, GramianSummary)> {
    let p2 = objective_trace(&assemble_ctrl_gramian(system, beta)?);
    let (x, ctrl_trace, ctrl_iterations) = solved(&p2, options, "controllability gramians")?;
    let p3 = objective_trace(&assemble_obs_gramian(system, beta)?);
    let (y, obs_trace, obs_iterations) = solved(&p3, options, "observability gramians")?;
    Ok((
        GramianSet::from_assignment(system, &p2, &x),
        GramianSet::from_assignment(system, &p3, &y),
        GramianSummary { ctrl_trace, obs_trace, ctrl_iterations, obs_iterations },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageSummary {
    pub a1: f64,
    pub epsilon: f64,
    pub objective: f64,
    pub iterations: usize,
}

/// Diagonal re-solve on a balanced system: the returned realization is
/// sorted per slot and its sigma carries margin `beta`.
pub fn balanced_stage(
    system: &DistributedSystem,
    beta: f64,
    a1: f64,
    options: &SolveOptions,
) -> Result<(BalancedRealization, StageSummary)> {
    let p = balanced_stage_problem(system, beta, a1)?;
    let (a, objective, iterations) = solved(&p, options, "balanced stage")?;
    let epsilon = a.scalar(&p.variables, ScalarVariable::Epsilon).expect("epsilon declared");
    let sigma = GramianSet::from_assignment(system, &p, &a);
    Ok((BalancedRealization::from_diagonal(system, &sigma)?, StageSummary { a1, epsilon, objective, iterations }))
}

/// Standard forms of the performance and both gramian programs.
pub fn standard_forms(system: &DistributedSystem, beta: f64, options: &SolveOptions) -> Result<[(&'static str, SdpStandardForm); 3]> {
    Ok([
        ("p1", to_standard_form(&assemble_performance(system, GammaMode::Minimize, beta)?, options)),
        ("p2", to_standard_form(&objective_trace(&assemble_ctrl_gramian(system, beta)?), options)),
        ("p3", to_standard_form(&objective_trace(&assemble_obs_gramian(system, beta)?), options)),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemSummary {
    pub source: SystemSource,
    pub note: Option<String>,
    pub vertex_count: usize,
    /// 1-based.
    pub edges: Vec<[usize; 2]>,
    pub horizon: usize,
    pub period: usize,
    /// P1 dim, P2/P3 dim, blocks, P1 constraints, P2/P3 constraints.
    pub counts: [usize; 5],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BalanceSummary {
    /// Margin of the balanced sigma, `beta * min(1, f)`.
    pub balanced_margin: f64,
    pub margin_factor: f64,
    pub max_off_diagonal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationSummary {
    pub threshold: f64,
    pub truncated_per_time: Vec<usize>,
    pub retained: Vec<RetainedDimensions>,
    pub removed_edges: Vec<[usize; 2]>,
    pub reduced_inequalities_hold: bool,
    pub reduced_min_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub seed: u64,
    pub horizon: usize,
    pub excited_steps: usize,
    pub amplitude: f64,
    pub input_norm: f64,
    pub output_norm: f64,
    pub error_norm: f64,
    /// `error_norm / input_norm`.
    pub error_ratio: f64,
    pub gain_trials: usize,
    pub power_iterations: usize,
    /// Largest lower estimate of the error system's norm over all trials.
    pub gain_estimate: f64,
    /// The bound dominates the ratio and every gain estimate.
    pub bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub system: SystemSummary,
    pub beta: f64,
    pub solver: SolveOptions,
    pub stages: Vec<String>,
    pub performance: PerformanceSummary,
    pub gramians: GramianSummary,
    pub balance: BalanceSummary,
    pub balanced_stage: StageSummary,
    pub truncation: TruncationSummary,
    pub bounds: ErrorBoundReport,
    pub simulation: SimulationSummary,
    /// Files written to the output directory.
    pub artifacts: Vec<String>,
}

/// Wall-clock seconds per stage; kept out of the report so reports are
/// reproducible byte for byte.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub stages: Vec<(String, f64)>,
}

struct Run<'a> {
    out: &'a Path,
    artifacts: Vec<String>,
    stages: Vec<String>,
    timings: Timings,
    clock: Instant,
}

impl Run<'_> {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        std::fs::write(self.out.join(name), contents).map_err(|e| Error::Io(e).context(name))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn done(&mut self, stage: &str) {
        self.stages.push(stage.to_string());
        self.timings.stages.push((stage.to_string(), self.clock.elapsed().as_secs_f64()));
        self.clock = Instant::now();
    }
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.context(name))
}

/// Diagonal entries of every slot's sigma, one row per entry.
pub fn sigma_table(realization: &BalancedRealization) -> String {
    let g = realization.system.graph();
    let mut out = String::from("slot,t,index,value\n");
    for (slot, t, m) in realization.sigma.matrices.iter() {
        for (i, v) in m.diagonal().iter().enumerate() {
            out.push_str(&format!("{},{t},{},{}\n", slot_key(slot, g), i + 1, crate::fmt::f64_17(*v)));
        }
    }
    out
}

fn slot_key(slot: Slot, g: &crate::sysmodel::DirectedGraph) -> String {
    match SlotName::of(slot, g) {
        SlotName::Vertex(k) => format!("x{k}"),
        SlotName::Edge(i, j) => format!("x{i}{j}"),
    }
}

/// Runs every stage and writes artifacts and `report.json` into
/// `config.out`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunReport> {
    config.check()?;
    std::fs::create_dir_all(&config.out)?;
    let mut run = Run { out: &config.out, artifacts: Vec::new(), stages: Vec::new(), timings: Timings::default(), clock: Instant::now() };
    let opts = &config.solver;

    let system = stage("load", load_system(&config.system))?;
    let sched = system.schedule();
    let beta = config.beta.unwrap_or_else(|| default_margin(&system));
    let summary = SystemSummary {
        source: config.system.clone(),
        note: matches!(config.system, SystemSource::Reference).then(|| RECONSTRUCTION_NOTE.to_string()),
        vertex_count: system.vertex_count(),
        edges: system.graph().edges().iter().map(|e| [e.from + 1, e.to + 1]).collect(),
        horizon: sched.horizon(),
        period: sched.period(),
        counts: dimension_counts(&system).table(),
    };
    run.write("system.json", &crate::sysmodel::to_json(&system)?)?;
    if config.export_sdpa {
        for (name, form) in standard_forms(&system, beta, opts)? {
            run.write(&format!("{name}.dat-s"), &write_sdpa(&form))?;
        }
    }
    run.done("load");

    let performance = stage("analyze", analyze(&system, beta, opts))?;
    run.done("analyze");

    let (x, y, gramian_summary) = stage("gramians", gramians(&system, beta, opts))?;
    run.write("ctrl_gramians.json", &x.to_json()?)?;
    run.write("obs_gramians.json", &y.to_json()?)?;
    run.done("gramians");

    let balanced = stage("balance", balance(&system, &x, &y))?;
    let check = stage("balance", check_balanced(&balanced))?;
    let balance_summary = BalanceSummary {
        balanced_margin: balanced.sigma.beta,
        margin_factor: balancing_margin_factor(&balanced.transforms),
        max_off_diagonal: check.max_off_diagonal,
    };
    run.write("balanced_system.json", &crate::sysmodel::to_json(&balanced.system)?)?;
    run.write("balanced_sigma.json", &balanced.sigma.to_json()?)?;
    run.done("balance");

    let (staged, stage_summary) = stage("balanced stage", balanced_stage(&balanced.system, beta, config.a1, opts))?;
    run.write("stage_system.json", &crate::sysmodel::to_json(&staged.system)?)?;
    run.write("stage_sigma.json", &staged.sigma.to_json()?)?;
    run.write("sigma_diagonals.csv", &sigma_table(&staged))?;
    run.done("balanced stage");

    let threshold = match config.threshold {
        Threshold::Heuristic => stage_summary.epsilon * (1.0 + FLOOR_SLACK),
        Threshold::Explicit(t) => t,
    };
    let plan = stage("reduce", select_plan(&staged, threshold))?;
    let (reduced, mut split) = stage("reduce", truncate(&staged, &plan))?;
    split.omega.tolerance = config.equality_tolerance;
    let reduced_check = stage("reduce", verify_reduced(&reduced, &split, beta))?;
    let truncated_per_time = plan.truncated_counts(&staged.system);
    let truncation = TruncationSummary {
        threshold,
        retained: retained_dimensions(&staged.system, &plan),
        removed_edges: staged
            .system
            .graph()
            .edges()
            .iter()
            .filter(|e| reduced.graph().edge_index(e.from, e.to).is_none())
            .map(|e| [e.from + 1, e.to + 1])
            .collect(),
        reduced_inequalities_hold: reduced_check.all_satisfied(),
        reduced_min_slack: reduced_check.min_slack(),
        truncated_per_time: truncated_per_time.clone(),
    };
    run.write("reduced_system.json", &crate::sysmodel::to_json(&reduced)?)?;
    run.write("gamma.json", &split.gamma.to_json()?)?;
    run.write("omega.json", &split.omega.to_json()?)?;
    let counts_csv: String = std::iter::once("t,truncated\n".to_string())
        .chain(truncated_per_time.iter().enumerate().map(|(t, c)| format!("{t},{c}\n")))
        .collect();
    run.write("truncated_counts.csv", &counts_csv)?;
    if !reduced_check.all_satisfied() {
        return Err(Error::Numerical(format!(
            "reduce: retained gramians violate the reduced inequalities (worst slack {:e})",
            reduced_check.min_slack()
        )));
    }
    run.done("reduce");

    let bounds = stage("bound", error_bounds(&split.omega))?;
    run.done("bound");

    let horizon = config.horizon.unwrap_or(4 * sched.len());
    let input = random_excitation(&system, horizon, config.excited_steps, config.amplitude, config.seed);
    let full_out = stage("simulate", simulate(&system, &input))?.0;
    let reduced_out = stage("simulate", simulate(&reduced, &input))?.0;
    let error = stage("simulate", error_response(&system, &reduced, &input))?;
    let error_system = stage("simulate", ErrorSystem::new(&system, &reduced))?;
    let mut gain_estimate: f64 = 0.0;
    for trial in 0..config.gain_trials {
        let seed = config.seed.wrapping_add(trial as u64);
        let est = stage("simulate", gain_lower_bound(&error_system, horizon, config.power_iterations, seed))?;
        gain_estimate = gain_estimate.max(est.last().copied().unwrap_or(0.0));
    }
    let input_norm = l2_norm(&input);
    let error_norm = l2_norm(&error);
    let error_ratio = if input_norm > 0.0 { error_norm / input_norm } else { 0.0 };
    let simulation = SimulationSummary {
        seed: config.seed,
        horizon,
        excited_steps: config.excited_steps,
        amplitude: config.amplitude,
        input_norm,
        output_norm: l2_norm(&full_out),
        error_norm,
        error_ratio,
        gain_trials: config.gain_trials,
        power_iterations: config.power_iterations,
        gain_estimate,
        bound_holds: bounds.bound >= gain_estimate && bounds.bound >= error_ratio,
    };
    run.write("input.csv", &input.to_csv()?)?;
    run.write("output_full.csv", &full_out.to_csv()?)?;
    run.write("output_reduced.csv", &reduced_out.to_csv()?)?;
    run.write("error.csv", &error.to_csv()?)?;
    run.done("simulate");

    run.write("timings.json", &crate::fmt::to_json_string(&run.timings)?)?;
    let mut artifacts = run.artifacts.clone();
    artifacts.push("report.json".into());
    let report = RunReport {
        system: summary,
        beta,
        solver: *opts,
        stages: run.stages.clone(),
        performance,
        gramians: gramian_summary,
        balance: balance_summary,
        balanced_stage: stage_summary,
        truncation,
        bounds,
        simulation,
        artifacts,
    };
    std::fs::write(config.out.join("report.json"), crate::fmt::to_json_string(&report)?)?;
    Ok(report)
}
