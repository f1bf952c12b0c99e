//! Semidefinite programs: standard form, embedded interior-point solver,
//! objective builders and SDPA sparse-format exchange.
//!
//! The standard form follows the SDPA primal convention
//!
//! ```text
//! minimize  c^T y   subject to   sum_i y_i F_i - F_0 >= 0
//! ```
//!
//! with one cone block per LMI constraint. A `<= -margin` constraint
//! `C + sum y_i G_i` becomes `F_i = -G_i`, `F_0 = C + (margin + delta) I`;
//! a `>= margin` constraint becomes `F_i = G_i`, `F_0 = -C + (margin + delta) I`.
//! The small inflation `delta` keeps the returned point strictly inside the
//! margin after rounding.

mod ipm;
mod schur;
mod sdpa;

use serde::{Deserialize, Serialize};

pub use ipm::EmbeddedSolver;
pub use sdpa::{export_sdpa, import_sdpa, parse_sdpa, write_sdpa};

use crate::lmi::{
    verify_solution, Assignment, BlockShape, LmiProblem, ResidualReport, ScalarVariable, Sense, Term,
};
use crate::{Error, Matrix, Result};

/// Upper-triangle entries `(row, col, value)`, 0-based, sorted, nonzero.
pub type SparseEntries = Vec<(usize, usize, f64)>;

/// One cone block of the standard form.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeBlock {
    pub dim: usize,
    /// Linear-programming block: only diagonal entries are allowed.
    pub diagonal: bool,
    /// Entries of `F_0`.
    pub constant: SparseEntries,
    /// `(variable, entries of F_i)` for every variable touching the block,
    /// by increasing variable.
    pub coefficients: Vec<(usize, SparseEntries)>,
}

/// SDPA-convention standard form.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpStandardForm {
    pub objective: Vec<f64>,
    pub blocks: Vec<ConeBlock>,
}

impl SdpStandardForm {
    pub fn variable_count(&self) -> usize {
        self.objective.len()
    }

    /// Checks index ranges, ordering, symmetry storage and diagonal flags.
    pub fn validate(&self) -> Result<()> {
        let m = self.variable_count();
        for (b, blk) in self.blocks.iter().enumerate() {
            let check = |entries: &SparseEntries, what: &str| -> Result<()> {
                let mut prev = None;
                for &(i, j, v) in entries {
                    if i > j || j >= blk.dim || (blk.diagonal && i != j) || !v.is_finite() {
                        return Err(Error::Precondition(format!("block {}: bad {what} entry ({i},{j})", b + 1)));
                    }
                    if prev.is_some_and(|p| p >= (i, j)) {
                        return Err(Error::Precondition(format!("block {}: {what} entries not sorted", b + 1)));
                    }
                    prev = Some((i, j));
                }
                Ok(())
            };
            check(&blk.constant, "constant")?;
            let mut prev = None;
            for (var, entries) in &blk.coefficients {
                if *var >= m || prev.is_some_and(|p| p >= *var) {
                    return Err(Error::Precondition(format!("block {}: bad variable index {var}", b + 1)));
                }
                prev = Some(*var);
                check(entries, "coefficient")?;
            }
        }
        Ok(())
    }
}

fn sparse_upper(m: &Matrix, diagonal: bool) -> SparseEntries {
    let n = m.nrows();
    let mut out = Vec::new();
    for i in 0..n {
        let cols = if diagonal { i..i + 1 } else { i..n };
        for j in cols {
            let v = m[(i, j)];
            if v != 0.0 {
                out.push((i, j, v));
            }
        }
    }
    out
}

/// Converts an LMI problem with the margin inflation of `options` (see the
/// module docs). Zero-dimensional constraints are dropped.
pub fn to_standard_form(problem: &LmiProblem, options: &SolveOptions) -> SdpStandardForm {
    let vars = &problem.variables;
    let mut blocks = Vec::new();
    for c in problem.constraints.iter().filter(|c| c.dim() > 0) {
        let d = c.dim();
        let sign = match c.sense {
            Sense::NegativeDefinite => -1.0,
            Sense::PositiveDefinite => 1.0,
        };
        let shift = c.margin + options.inflation(c.margin);
        let f0 = &c.constant * (-sign) + Matrix::identity(d, d) * shift;
        let mut coefficients: Vec<(usize, Matrix)> = Vec::new();
        let mut add = |var: usize, m: Matrix| match coefficients.iter_mut().find(|(v, _)| *v == var) {
            Some((_, acc)) => *acc += m,
            None => coefficients.push((var, m)),
        };
        for term in &c.terms {
            match term {
                Term::Congruence { block, factor, sign: s } => {
                    let off = vars.block_offset(*block);
                    for (idx, (a, b)) in vars.entry_positions(*block).into_iter().enumerate() {
                        let la = factor.column(a);
                        let lb = factor.column(b);
                        let g = if a == b { la * la.transpose() } else { la * lb.transpose() + lb * la.transpose() };
                        add(off + idx, g * (sign * s));
                    }
                }
                Term::Scalar { scalar, matrix } => add(vars.scalar_offset(*scalar), matrix * sign),
            }
        }
        coefficients.sort_by_key(|(v, _)| *v);
        blocks.push(ConeBlock {
            dim: d,
            diagonal: c.diagonal,
            constant: sparse_upper(&f0, c.diagonal),
            coefficients: coefficients
                .into_iter()
                .map(|(v, m)| (v, sparse_upper(&m, c.diagonal)))
                .filter(|(_, e)| !e.is_empty())
                .collect(),
        });
    }
    SdpStandardForm { objective: problem.objective.clone(), blocks }
}

/// Per-block certification shifts matching [`to_standard_form`]: the
/// returned point must satisfy `S(y) + shift I > 0`, which is the original
/// constraint with its margin.
fn certification_shifts(problem: &LmiProblem, options: &SolveOptions) -> Vec<f64> {
    problem.constraints.iter().filter(|c| c.dim() > 0).map(|c| options.inflation(c.margin)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    /// Absolute and relative duality-gap tolerance.
    pub tolerance: f64,
    /// Relative primal/dual residual and infeasibility-certificate threshold.
    pub feasibility_tolerance: f64,
    pub max_iter: usize,
    /// Inflation of each margin, relative to the margin.
    pub margin_inflation: f64,
    /// Inflation added to every margin, including zero ones.
    pub absolute_inflation: f64,
}

impl SolveOptions {
    /// Amount by which the solver tightens a constraint with `margin`.
    pub fn inflation(&self, margin: f64) -> f64 {
        self.margin_inflation * margin + self.absolute_inflation
    }
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            feasibility_tolerance: 1e-8,
            max_iter: 200,
            margin_inflation: 1e-2,
            absolute_inflation: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
    NumericalFailure,
}

/// Raw output of a backend on a standard form.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardSolution {
    pub status: SolveStatus,
    pub y: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// A solver for SDPA-convention standard forms.
pub trait Backend {
    /// `shifts`, when given, holds one value per block; optimality then also
    /// requires `S(y) + shift I` to be positive definite.
    fn solve_standard(
        &self,
        form: &SdpStandardForm,
        shifts: Option<&[f64]>,
        options: &SolveOptions,
    ) -> Result<StandardSolution>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub assignment: Assignment,
    pub objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub iterations: usize,
    /// Eigenvalue check of every constraint at `assignment`.
    pub residuals: ResidualReport,
}

impl SolveResult {
    /// The assignment, or the status mapped to an error.
    pub fn into_optimal(self, what: &str) -> Result<Assignment> {
        match self.status {
            SolveStatus::Optimal => Ok(self.assignment),
            SolveStatus::Infeasible => Err(Error::Infeasible(format!("{what}: primal infeasibility certificate"))),
            SolveStatus::Unbounded => Err(Error::Numerical(format!("{what}: objective unbounded below"))),
            SolveStatus::MaxIterations => Err(Error::MaxIterations(self.iterations)),
            SolveStatus::NumericalFailure => {
                let worst = self.residuals.min_slack();
                Err(Error::Numerical(format!("{what}: solver failed (worst constraint slack {worst:e})")))
            }
        }
    }
}

/// Solves with the embedded interior-point method.
pub fn solve(problem: &LmiProblem, options: &SolveOptions) -> Result<SolveResult> {
    solve_with(&EmbeddedSolver, problem, options)
}

/// Solves with any backend. An `Optimal` status is kept only if every
/// constraint passes [`verify_solution`]; otherwise it becomes
/// `NumericalFailure`.
pub fn solve_with(backend: &dyn Backend, problem: &LmiProblem, options: &SolveOptions) -> Result<SolveResult> {
    let form = to_standard_form(problem, options);
    let shifts = certification_shifts(problem, options);
    let raw = backend.solve_standard(&form, Some(&shifts), options)?;
    let assignment = problem.variables.unpack(&raw.y)?;
    let residuals = verify_solution(problem, &assignment)?;
    let mut status = raw.status;
    if status == SolveStatus::Optimal && !residuals.all_satisfied() {
        status = SolveStatus::NumericalFailure;
    }
    Ok(SolveResult {
        status,
        objective: problem.objective_value(&assignment)?,
        assignment,
        dual_objective: raw.dual_objective,
        gap: raw.gap,
        iterations: raw.iterations,
        residuals,
    })
}

/// Objective: sum of the traces of every matrix unknown.
pub fn objective_trace(problem: &LmiProblem) -> LmiProblem {
    let mut out = problem.clone();
    let vars = &out.variables;
    let mut c = vec![0.0; vars.unknown_count()];
    for b in 0..vars.blocks().len() {
        let off = vars.block_offset(b);
        for (idx, (i, j)) in vars.entry_positions(b).into_iter().enumerate() {
            if i == j {
                c[off + idx] = 1.0;
            }
        }
    }
    out.objective = c;
    out
}

/// Objective of the balanced-stage heuristic:
/// `sum over blocks (sum of diagonal entries - eps * dim) + a1 * eps`.
pub fn objective_balanced_stage(problem: &LmiProblem, a1: f64) -> Result<LmiProblem> {
    let vars = &problem.variables;
    if vars.blocks().iter().any(|b| b.shape != BlockShape::Diagonal) {
        return Err(Error::Precondition("balanced-stage objective needs diagonal unknowns".into()));
    }
    let eps = vars
        .scalar_index(ScalarVariable::Epsilon)
        .ok_or_else(|| Error::Precondition("balanced-stage objective needs an epsilon unknown".into()))?;
    let mut out = objective_trace(problem);
    let total: usize = vars.blocks().iter().map(|b| b.dim).sum();
    out.objective[vars.scalar_offset(eps)] = a1 - total as f64;
    Ok(out)
}

#[cfg(test)]
mod tests;
