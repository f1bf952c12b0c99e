use super::{
    BlockShape, BlockTag, Constraint, ConstraintTag, Family, LmiProblem, ScalarVariable, Sense, Term, VariableBlock,
    VariableStructure,
};
use crate::sysmodel::{DistributedSystem, Slot};
use crate::{Matrix, Result};

/// How the performance level enters the performance inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaMode {
    Fixed(f64),
    /// `gamma^2` is a scalar unknown and the objective.
    Minimize,
}

/// `1e-6` times the largest squared spectral norm of any `A` (at least `1e-12`).
pub fn default_margin(system: &DistributedSystem) -> f64 {
    let a = system.max_a_norm();
    (1e-6 * a * a).max(1e-12)
}

/// One matrix unknown per nonempty slot and representative time; vertices
/// first (by vertex, then time), then edges.
fn declare_blocks(system: &DistributedSystem, shape: BlockShape) -> Vec<VariableBlock> {
    let len = system.schedule().len();
    system
        .slots()
        .flat_map(|slot| (0..len).map(move |t| BlockTag::new(slot, t)))
        .filter_map(|tag| {
            let dim = system.dims().slot_dim(tag.slot, tag.t);
            (dim > 0).then_some(VariableBlock { tag, dim, shape })
        })
        .collect()
}

/// Row slots at `t+1` and column slots at `t` of vertex `k`, both canonical.
fn partition_slots(system: &DistributedSystem, k: usize, t: usize) -> (Vec<BlockTag>, Vec<BlockTag>) {
    let sched = system.schedule();
    let (t, next) = (sched.index(t), sched.next(t));
    let g = system.graph();
    let rows = std::iter::once(Slot::Temporal(k))
        .chain(g.out_edges(k).iter().map(|&e| Slot::Spatial(e)))
        .map(|s| BlockTag::new(s, next))
        .collect();
    let cols = std::iter::once(Slot::Temporal(k))
        .chain(g.in_edges(k).iter().map(|&e| Slot::Spatial(e)))
        .map(|s| BlockTag::new(s, t))
        .collect();
    (rows, cols)
}

/// `n x width` selector embedding a block at `offset`.
fn selector(n: usize, offset: usize, width: usize) -> Matrix {
    let mut s = Matrix::zeros(n, width);
    for i in 0..width {
        s[(offset + i, i)] = 1.0;
    }
    s
}

fn push_term(terms: &mut Vec<Term>, vars: &VariableStructure, tag: BlockTag, factor: Matrix, sign: f64) {
    if factor.ncols() == 0 {
        return;
    }
    if let Some(block) = vars.block_index(tag) {
        terms.push(Term::Congruence { block, factor, sign });
    }
}

/// The `family` inequality of vertex `k` at time `t`.
///
/// `t` may be any nonnegative time; both `t` and `t+1` resolve through the
/// canonical index map, so `t >= h+q` reproduces the window inequality of
/// its representative. The tag records `t` as given.
pub fn assemble_inequality(
    system: &DistributedSystem,
    vars: &VariableStructure,
    family: Family,
    k: usize,
    t: usize,
    gamma: GammaMode,
    margin: f64,
) -> Constraint {
    let m = system.at(k, t);
    let (rows, cols) = partition_slots(system, k, t);
    let nr = m.a.nrows();
    let nc = m.a.ncols();
    let nu = m.d.ncols();
    let mut terms = Vec::new();
    let tag = ConstraintTag::Inequality { family, vertex: k, t };

    let constant = match family {
        Family::Stability | Family::Observability => {
            for (r, &slot) in rows.iter().enumerate() {
                let rr = m.row_range(r);
                let ar = m.a.rows(rr.start, rr.len()).transpose();
                push_term(&mut terms, vars, slot, ar, 1.0);
            }
            for (c, &slot) in cols.iter().enumerate() {
                let cr = m.col_range(c);
                push_term(&mut terms, vars, slot, selector(nc, cr.start, cr.len()), -1.0);
            }
            if family == Family::Observability {
                m.c.transpose() * &m.c
            } else {
                Matrix::zeros(nc, nc)
            }
        }
        Family::Controllability => {
            for (c, &slot) in cols.iter().enumerate() {
                let cr = m.col_range(c);
                push_term(&mut terms, vars, slot, m.a.columns(cr.start, cr.len()).into_owned(), 1.0);
            }
            for (r, &slot) in rows.iter().enumerate() {
                let rr = m.row_range(r);
                push_term(&mut terms, vars, slot, selector(nr, rr.start, rr.len()), -1.0);
            }
            &m.b * m.b.transpose()
        }
        Family::Performance => {
            let n = nc + nu;
            let mut ab = Matrix::zeros(nr, n);
            ab.view_mut((0, 0), (nr, nc)).copy_from(&m.a);
            ab.view_mut((0, nc), (nr, nu)).copy_from(&m.b);
            let mut cd = Matrix::zeros(m.d.nrows(), n);
            cd.view_mut((0, 0), m.c.shape()).copy_from(&m.c);
            cd.view_mut((0, nc), m.d.shape()).copy_from(&m.d);
            for (r, &slot) in rows.iter().enumerate() {
                let rr = m.row_range(r);
                push_term(&mut terms, vars, slot, ab.rows(rr.start, rr.len()).transpose(), 1.0);
            }
            for (c, &slot) in cols.iter().enumerate() {
                let cr = m.col_range(c);
                push_term(&mut terms, vars, slot, selector(n, cr.start, cr.len()), -1.0);
            }
            let mut input_weight = Matrix::zeros(n, n);
            for i in nc..n {
                input_weight[(i, i)] = -1.0;
            }
            let mut constant = cd.transpose() * &cd;
            match gamma {
                GammaMode::Fixed(g) => constant += &input_weight * (g * g),
                GammaMode::Minimize => {
                    if nu > 0 {
                        let scalar = vars.scalar_index(ScalarVariable::GammaSquared).expect("gamma^2 declared");
                        terms.push(Term::Scalar { scalar, matrix: input_weight });
                    }
                }
            }
            constant
        }
    };
    Constraint { tag, constant, terms, sense: Sense::NegativeDefinite, margin, diagonal: false }
}

fn positivity(vars: &VariableStructure, margin: f64) -> Vec<Constraint> {
    vars.blocks()
        .iter()
        .enumerate()
        .map(|(b, blk)| Constraint {
            tag: ConstraintTag::Positivity(blk.tag),
            constant: Matrix::zeros(blk.dim, blk.dim),
            terms: vec![Term::Congruence { block: b, factor: Matrix::identity(blk.dim, blk.dim), sign: 1.0 }],
            sense: Sense::PositiveDefinite,
            margin,
            diagonal: blk.shape == BlockShape::Diagonal,
        })
        .collect()
}

fn family_constraints(
    system: &DistributedSystem,
    vars: &VariableStructure,
    family: Family,
    gamma: GammaMode,
    beta: f64,
) -> Vec<Constraint> {
    let len = system.schedule().len();
    (0..system.vertex_count())
        .flat_map(|k| (0..len).map(move |t| (k, t)))
        .map(|(k, t)| assemble_inequality(system, vars, family, k, t, gamma, beta))
        .filter(|c| c.dim() > 0)
        .collect()
}

fn single_family(system: &DistributedSystem, family: Family, gamma: GammaMode, beta: f64) -> Result<LmiProblem> {
    system.ensure_valid()?;
    let scalars = if gamma == GammaMode::Minimize && family == Family::Performance {
        vec![ScalarVariable::GammaSquared]
    } else {
        Vec::new()
    };
    let vars = VariableStructure::new(declare_blocks(system, BlockShape::Symmetric), scalars)?;
    let mut constraints = family_constraints(system, &vars, family, gamma, beta);
    constraints.extend(positivity(&vars, beta));
    let mut objective = vec![0.0; vars.unknown_count()];
    if let Some(s) = vars.scalar_index(ScalarVariable::GammaSquared) {
        objective[vars.scalar_offset(s)] = 1.0;
    }
    Ok(LmiProblem { variables: vars, constraints, beta, objective })
}

/// Strong-stability inequalities plus `X >= beta I` on every unknown.
pub fn assemble_stability(system: &DistributedSystem, beta: f64) -> Result<LmiProblem> {
    single_family(system, Family::Stability, GammaMode::Minimize, beta)
}

/// Performance inequalities; in `Minimize` mode the objective is `gamma^2`.
pub fn assemble_performance(system: &DistributedSystem, gamma: GammaMode, beta: f64) -> Result<LmiProblem> {
    single_family(system, Family::Performance, gamma, beta)
}

/// Generalized controllability Lyapunov inequalities.
pub fn assemble_ctrl_gramian(system: &DistributedSystem, beta: f64) -> Result<LmiProblem> {
    single_family(system, Family::Controllability, GammaMode::Minimize, beta)
}

/// Generalized observability Lyapunov inequalities.
pub fn assemble_obs_gramian(system: &DistributedSystem, beta: f64) -> Result<LmiProblem> {
    single_family(system, Family::Observability, GammaMode::Minimize, beta)
}

/// Both generalized Lyapunov inequalities on one shared set of diagonal
/// unknowns, with `Sigma - eps I >= 0` on every block and `eps >= beta`.
/// The objective is left zero; see [`crate::sdp::objective_balanced_stage`].
pub fn assemble_balanced_stage(system: &DistributedSystem, beta: f64) -> Result<LmiProblem> {
    system.ensure_valid()?;
    let vars = VariableStructure::new(declare_blocks(system, BlockShape::Diagonal), vec![ScalarVariable::Epsilon])?;
    let eps = vars.scalar_index(ScalarVariable::Epsilon).expect("epsilon declared");
    let mut constraints = family_constraints(system, &vars, Family::Controllability, GammaMode::Minimize, beta);
    constraints.extend(family_constraints(system, &vars, Family::Observability, GammaMode::Minimize, beta));
    for (b, blk) in vars.blocks().iter().enumerate() {
        constraints.push(Constraint {
            tag: ConstraintTag::Floor(blk.tag),
            constant: Matrix::zeros(blk.dim, blk.dim),
            terms: vec![
                Term::Congruence { block: b, factor: Matrix::identity(blk.dim, blk.dim), sign: 1.0 },
                Term::Scalar { scalar: eps, matrix: -Matrix::identity(blk.dim, blk.dim) },
            ],
            sense: Sense::PositiveDefinite,
            margin: 0.0,
            diagonal: true,
        });
    }
    constraints.push(Constraint {
        tag: ConstraintTag::ScalarBound(ScalarVariable::Epsilon),
        constant: Matrix::zeros(1, 1),
        terms: vec![Term::Scalar { scalar: eps, matrix: Matrix::identity(1, 1) }],
        sense: Sense::PositiveDefinite,
        margin: beta,
        diagonal: true,
    });
    let objective = vec![0.0; vars.unknown_count()];
    Ok(LmiProblem { variables: vars, constraints, beta, objective })
}
