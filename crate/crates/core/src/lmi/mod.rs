//! Linear matrix inequalities over the finite ETP window.
//!
//! Every problem is a list of symmetric matrix expressions that are affine in
//! the unknowns. Matrix unknowns enter through congruence terms
//! `sign * L V L^T`, scalar unknowns through `s * M`. Each expression must be
//! `<= -margin * I` or `>= margin * I`.

mod assemble;

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

pub use assemble::{
    assemble_balanced_stage, assemble_ctrl_gramian, assemble_inequality, assemble_obs_gramian,
    assemble_performance, assemble_stability, default_margin, GammaMode,
};

use crate::sysmodel::{DirectedGraph, Slot};
use crate::{Error, Matrix, Result};

/// A matrix unknown: one slot at one representative time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BlockTag {
    pub slot: Slot,
    pub t: usize,
}

impl BlockTag {
    pub fn new(slot: Slot, t: usize) -> Self {
        Self { slot, t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlockShape {
    Symmetric,
    Diagonal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VariableBlock {
    pub tag: BlockTag,
    pub dim: usize,
    pub shape: BlockShape,
}

impl VariableBlock {
    /// Number of scalar unknowns: packed upper triangle or diagonal.
    pub fn unknowns(&self) -> usize {
        match self.shape {
            BlockShape::Symmetric => self.dim * (self.dim + 1) / 2,
            BlockShape::Diagonal => self.dim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ScalarVariable {
    GammaSquared,
    Epsilon,
}

/// Ordered matrix and scalar unknowns of a problem.
///
/// The flat unknown vector lists each block's entries (upper triangle,
/// row-major, or the diagonal) in block order, followed by the scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableStructure {
    blocks: Vec<VariableBlock>,
    scalars: Vec<ScalarVariable>,
    offsets: Vec<usize>,
    lookup: HashMap<BlockTag, usize>,
}

impl VariableStructure {
    pub fn new(blocks: Vec<VariableBlock>, scalars: Vec<ScalarVariable>) -> Result<Self> {
        let mut lookup = HashMap::with_capacity(blocks.len());
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut acc = 0;
        for (i, b) in blocks.iter().enumerate() {
            if lookup.insert(b.tag, i).is_some() {
                return Err(Error::Precondition(format!("duplicate variable block {:?}", b.tag)));
            }
            offsets.push(acc);
            acc += b.unknowns();
        }
        offsets.push(acc);
        Ok(Self { blocks, scalars, offsets, lookup })
    }

    pub fn blocks(&self) -> &[VariableBlock] {
        &self.blocks
    }

    pub fn scalars(&self) -> &[ScalarVariable] {
        &self.scalars
    }

    pub fn block_index(&self, tag: BlockTag) -> Option<usize> {
        self.lookup.get(&tag).copied()
    }

    pub fn scalar_index(&self, var: ScalarVariable) -> Option<usize> {
        self.scalars.iter().position(|&s| s == var)
    }

    /// Position of a block's first entry in the flat unknown vector.
    pub fn block_offset(&self, b: usize) -> usize {
        self.offsets[b]
    }

    /// Position of scalar `s` in the flat unknown vector.
    pub fn scalar_offset(&self, s: usize) -> usize {
        self.offsets[self.blocks.len()] + s
    }

    pub fn unknown_count(&self) -> usize {
        self.offsets[self.blocks.len()] + self.scalars.len()
    }

    /// Matrix positions `(a, b)`, `a <= b`, of a block's unknowns in order.
    pub fn entry_positions(&self, b: usize) -> Vec<(usize, usize)> {
        let blk = &self.blocks[b];
        match blk.shape {
            BlockShape::Symmetric => (0..blk.dim).flat_map(|i| (i..blk.dim).map(move |j| (i, j))).collect(),
            BlockShape::Diagonal => (0..blk.dim).map(|i| (i, i)).collect(),
        }
    }

    pub fn pack(&self, assignment: &Assignment) -> Result<Vec<f64>> {
        self.check(assignment)?;
        let mut y = Vec::with_capacity(self.unknown_count());
        for (b, m) in assignment.blocks.iter().enumerate() {
            y.extend(self.entry_positions(b).into_iter().map(|(i, j)| 0.5 * (m[(i, j)] + m[(j, i)])));
        }
        y.extend_from_slice(&assignment.scalars);
        Ok(y)
    }

    pub fn unpack(&self, y: &[f64]) -> Result<Assignment> {
        if y.len() != self.unknown_count() {
            return Err(Error::Dimension(format!("{} unknowns, expected {}", y.len(), self.unknown_count())));
        }
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (b, blk) in self.blocks.iter().enumerate() {
            let mut m = Matrix::zeros(blk.dim, blk.dim);
            for ((i, j), v) in self.entry_positions(b).into_iter().zip(&y[self.offsets[b]..]) {
                m[(i, j)] = *v;
                m[(j, i)] = *v;
            }
            blocks.push(m);
        }
        let scalars = y[self.offsets[self.blocks.len()]..].to_vec();
        Ok(Assignment { blocks, scalars })
    }

    fn check(&self, assignment: &Assignment) -> Result<()> {
        if assignment.blocks.len() != self.blocks.len() || assignment.scalars.len() != self.scalars.len() {
            return Err(Error::Dimension(format!(
                "assignment has {} blocks and {} scalars, structure has {} and {}",
                assignment.blocks.len(),
                assignment.scalars.len(),
                self.blocks.len(),
                self.scalars.len()
            )));
        }
        for (blk, m) in self.blocks.iter().zip(&assignment.blocks) {
            if m.shape() != (blk.dim, blk.dim) {
                return Err(Error::Dimension(format!(
                    "block {:?} is {:?}, expected {}x{}",
                    blk.tag,
                    m.shape(),
                    blk.dim,
                    blk.dim
                )));
            }
        }
        Ok(())
    }
}

/// Values for every unknown of a [`VariableStructure`], in its order.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub blocks: Vec<Matrix>,
    pub scalars: Vec<f64>,
}

impl Assignment {
    pub fn block(&self, vars: &VariableStructure, tag: BlockTag) -> Option<&Matrix> {
        vars.block_index(tag).map(|i| &self.blocks[i])
    }

    pub fn scalar(&self, vars: &VariableStructure, var: ScalarVariable) -> Option<f64> {
        vars.scalar_index(var).map(|i| self.scalars[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Family {
    Stability,
    Performance,
    Controllability,
    Observability,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Stability => "stability",
            Family::Performance => "performance",
            Family::Controllability => "controllability",
            Family::Observability => "observability",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConstraintTag {
    /// Per-(vertex, time) inequality of a family.
    Inequality { family: Family, vertex: usize, t: usize },
    /// `V >= margin * I` on a matrix unknown.
    Positivity(BlockTag),
    /// `V - eps * I >= 0` on a diagonal unknown.
    Floor(BlockTag),
    /// `s >= margin` on a scalar unknown.
    ScalarBound(ScalarVariable),
}

impl ConstraintTag {
    pub fn describe(&self, graph: &DirectedGraph) -> String {
        match self {
            ConstraintTag::Inequality { family, vertex, t } => {
                format!("{} inequality at (k={}, t={t})", family.name(), vertex + 1)
            }
            ConstraintTag::Positivity(tag) => format!("positivity of {}(t={})", tag.slot.label(graph), tag.t),
            ConstraintTag::Floor(tag) => format!("floor of {}(t={})", tag.slot.label(graph), tag.t),
            ConstraintTag::ScalarBound(s) => format!("lower bound on {s:?}"),
        }
    }
}

impl fmt::Display for ConstraintTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintTag::Inequality { family, vertex, t } => {
                write!(f, "{} inequality at (k={}, t={t})", family.name(), vertex + 1)
            }
            ConstraintTag::Positivity(tag) => write!(f, "positivity of {:?} at t={}", tag.slot, tag.t),
            ConstraintTag::Floor(tag) => write!(f, "floor of {:?} at t={}", tag.slot, tag.t),
            ConstraintTag::ScalarBound(s) => write!(f, "lower bound on {s:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    /// expression `<= -margin * I`
    NegativeDefinite,
    /// expression `>= margin * I`
    PositiveDefinite,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// `sign * factor * V * factor^T` for matrix unknown `block`.
    Congruence { block: usize, factor: Matrix, sign: f64 },
    /// `s * matrix` for scalar unknown `scalar`.
    Scalar { scalar: usize, matrix: Matrix },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub tag: ConstraintTag,
    pub constant: Matrix,
    pub terms: Vec<Term>,
    pub sense: Sense,
    pub margin: f64,
    /// The expression is diagonal for every assignment.
    pub diagonal: bool,
}

impl Constraint {
    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    /// The expression's value at an assignment.
    pub fn evaluate(&self, assignment: &Assignment) -> Matrix {
        let mut value = self.constant.clone();
        for term in &self.terms {
            match term {
                Term::Congruence { block, factor, sign } => {
                    let v = &assignment.blocks[*block];
                    value += (factor * v * factor.transpose()) * *sign;
                }
                Term::Scalar { scalar, matrix } => value += matrix * assignment.scalars[*scalar],
            }
        }
        (&value + value.transpose()) * 0.5
    }

    /// The extreme eigenvalue that the sense constrains: largest for
    /// `NegativeDefinite`, smallest for `PositiveDefinite`.
    pub fn extreme_eigenvalue(&self, assignment: &Assignment) -> f64 {
        let value = self.evaluate(assignment);
        let eig = if self.diagonal { value.diagonal() } else { value.symmetric_eigenvalues() };
        match self.sense {
            Sense::NegativeDefinite => eig.max(),
            Sense::PositiveDefinite => eig.min(),
        }
    }

    /// Matrix unknowns this constraint references.
    pub fn blocks(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.iter().filter_map(|t| match t {
            Term::Congruence { block, .. } => Some(*block),
            Term::Scalar { .. } => None,
        })
    }
}

/// A complete problem: unknowns, constraints, margin and linear objective.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiProblem {
    pub variables: VariableStructure,
    pub constraints: Vec<Constraint>,
    pub beta: f64,
    /// Coefficients over the flat unknown vector; minimized.
    pub objective: Vec<f64>,
}

impl LmiProblem {
    pub fn objective_value(&self, assignment: &Assignment) -> Result<f64> {
        let y = self.variables.pack(assignment)?;
        Ok(self.objective.iter().zip(&y).map(|(c, v)| c * v).sum())
    }

    /// Human-readable listing of every constraint and the unknowns it touches.
    pub fn audit(&self, graph: &DirectedGraph) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let vars = &self.variables;
        let _ = writeln!(
            out,
            "{} matrix unknowns, {} scalar unknowns, {} scalars total, beta = {}",
            vars.blocks().len(),
            vars.scalars().len(),
            vars.unknown_count(),
            crate::fmt::f64_17(self.beta)
        );
        for c in &self.constraints {
            let sense = match c.sense {
                Sense::NegativeDefinite => "<= -margin",
                Sense::PositiveDefinite => ">= margin",
            };
            let _ = write!(out, "{} [{}x{}] {sense} ({}):", c.tag.describe(graph), c.dim(), c.dim(), crate::fmt::f64_17(c.margin));
            for term in &c.terms {
                match term {
                    Term::Congruence { block, sign, .. } => {
                        let tag = vars.blocks()[*block].tag;
                        let s = if *sign < 0.0 { '-' } else { '+' };
                        let _ = write!(out, " {s}{}(t={})", tag.slot.label(graph), tag.t);
                    }
                    Term::Scalar { scalar, .. } => {
                        let _ = write!(out, " +{:?}", vars.scalars()[*scalar]);
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Residual of one constraint at an assignment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub tag: ConstraintTag,
    /// Largest eigenvalue for `<=` constraints, smallest for `>=`.
    pub extreme: f64,
    pub margin: f64,
    pub sense: Sense,
    pub satisfied: bool,
}

impl Residual {
    /// Distance to the bound; positive when satisfied.
    pub fn slack(&self) -> f64 {
        match self.sense {
            Sense::NegativeDefinite => -self.margin - self.extreme,
            Sense::PositiveDefinite => self.extreme - self.margin,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResidualReport {
    pub residuals: Vec<Residual>,
}

impl ResidualReport {
    pub fn all_satisfied(&self) -> bool {
        self.residuals.iter().all(|r| r.satisfied)
    }

    pub fn violations(&self) -> impl Iterator<Item = &Residual> {
        self.residuals.iter().filter(|r| !r.satisfied)
    }

    /// Smallest slack over all constraints (infinite when empty).
    pub fn min_slack(&self) -> f64 {
        self.residuals.iter().map(Residual::slack).fold(f64::INFINITY, f64::min)
    }

    pub fn find(&self, tag: ConstraintTag) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.tag == tag)
    }
}

/// Eigenvalue check of every constraint at an assignment.
///
/// Each constraint is satisfied iff its extreme eigenvalue respects the sign
/// with the constraint's margin. Zero-dimensional constraints are vacuous.
pub fn verify_solution(problem: &LmiProblem, assignment: &Assignment) -> Result<ResidualReport> {
    problem.variables.check(assignment)?;
    let residuals = problem
        .constraints
        .iter()
        .filter(|c| c.dim() > 0)
        .map(|c| {
            let extreme = c.extreme_eigenvalue(assignment);
            let satisfied = match c.sense {
                Sense::NegativeDefinite => extreme <= -c.margin,
                Sense::PositiveDefinite => extreme >= c.margin,
            };
            Residual { tag: c.tag, extreme, margin: c.margin, sense: c.sense, satisfied }
        })
        .collect();
    Ok(ResidualReport { residuals })
}
