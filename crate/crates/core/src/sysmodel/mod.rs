//! Interconnection graph, ETP schedules and the partitioned realization.
//!
//! Vertices are 0-based in the API and 1-based in files and messages. For a
//! vertex `k` at representative time `t`, the rows of `A`/`B` are partitioned
//! as `[x_k(t+1); x_out(t+1)]` and the columns of `A`/`C` as
//! `[x_k(t); x_in(t)]`, with neighbor channels in increasing vertex order.

mod graph;
mod io;
mod schedule;
mod slots;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use graph::{DirectedGraph, Edge};
pub use io::{from_json, load, save, to_json, SCHEMA_VERSION};
pub use schedule::EtpSchedule;
pub use slots::SlotMap;

pub(crate) use io::BlockFile;

use crate::{Error, Matrix, Result};

/// A state slot: the temporal state of a vertex or the spatial state of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Slot {
    Temporal(usize),
    Spatial(usize),
}

impl Slot {
    /// Label using 1-based vertex numbers, e.g. `x1` or `x(2,1)`.
    pub fn label(&self, graph: &DirectedGraph) -> String {
        match *self {
            Slot::Temporal(k) => format!("x{}", k + 1),
            Slot::Spatial(e) => {
                let edge = graph.edge(e);
                format!("x({},{})", edge.from + 1, edge.to + 1)
            }
        }
    }
}

/// State, input and output dimensions over the representative window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionSchedule {
    pub schedule: EtpSchedule,
    /// `temporal[k][t]` = n^(k)(t)
    pub temporal: Vec<Vec<usize>>,
    /// `spatial[e][t]` = n^(ij)(t) for edge index `e`
    pub spatial: Vec<Vec<usize>>,
    pub inputs: Vec<Vec<usize>>,
    pub outputs: Vec<Vec<usize>>,
}

impl DimensionSchedule {
    /// Dimension of a slot at an arbitrary time (canonical index applied).
    pub fn slot_dim(&self, slot: Slot, t: usize) -> usize {
        let t = self.schedule.index(t);
        match slot {
            Slot::Temporal(k) => self.temporal[k][t],
            Slot::Spatial(e) => self.spatial[e][t],
        }
    }
}

/// State-space data of one vertex at one representative time.
///
/// Dense matrices plus explicit block offset tables. `row_offsets` has one
/// entry per row block plus a terminating total; likewise `col_offsets`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemMatrices {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
    pub row_offsets: Vec<usize>,
    pub col_offsets: Vec<usize>,
}

impl SubsystemMatrices {
    /// Builds the dense matrices from their blocks.
    ///
    /// `a[r][c]` is the block mapping column block `c` to row block `r`; block
    /// 0 is temporal in both directions. `b[r]` and `c[col]` follow the same
    /// partitions.
    pub fn from_blocks(a: &[Vec<Matrix>], b: &[Matrix], c: &[Matrix], d: Matrix) -> Result<Self> {
        let row_blocks = a.len();
        if row_blocks == 0 || b.len() != row_blocks {
            return Err(Error::Dimension(format!(
                "expected {row_blocks} row blocks in A and B, got {} in B",
                b.len()
            )));
        }
        let col_blocks = a[0].len();
        if col_blocks == 0 || c.len() != col_blocks || a.iter().any(|row| row.len() != col_blocks) {
            return Err(Error::Dimension("inconsistent column block count in A/C".into()));
        }
        let heights: Vec<usize> = a.iter().map(|row| row[0].nrows()).collect();
        let widths: Vec<usize> = a[0].iter().map(|blk| blk.ncols()).collect();
        for (r, row) in a.iter().enumerate() {
            for (cb, blk) in row.iter().enumerate() {
                if blk.nrows() != heights[r] || blk.ncols() != widths[cb] {
                    return Err(Error::Dimension(format!(
                        "A block ({r},{cb}) is {}x{}, expected {}x{}",
                        blk.nrows(),
                        blk.ncols(),
                        heights[r],
                        widths[cb]
                    )));
                }
            }
        }
        let row_offsets = offsets(&heights);
        let col_offsets = offsets(&widths);
        let (nr, nc) = (*row_offsets.last().unwrap(), *col_offsets.last().unwrap());
        let (ny, nu) = d.shape();

        let mut am = Matrix::zeros(nr, nc);
        for (r, row) in a.iter().enumerate() {
            for (cb, blk) in row.iter().enumerate() {
                am.view_mut((row_offsets[r], col_offsets[cb]), blk.shape()).copy_from(blk);
            }
        }
        let mut bm = Matrix::zeros(nr, nu);
        for (r, blk) in b.iter().enumerate() {
            if blk.shape() != (heights[r], nu) {
                return Err(Error::Dimension(format!("B block {r} has shape {:?}", blk.shape())));
            }
            bm.view_mut((row_offsets[r], 0), blk.shape()).copy_from(blk);
        }
        let mut cm = Matrix::zeros(ny, nc);
        for (cb, blk) in c.iter().enumerate() {
            if blk.shape() != (ny, widths[cb]) {
                return Err(Error::Dimension(format!("C block {cb} has shape {:?}", blk.shape())));
            }
            cm.view_mut((0, col_offsets[cb]), blk.shape()).copy_from(blk);
        }
        Ok(Self { a: am, b: bm, c: cm, d, row_offsets, col_offsets })
    }

    pub fn row_block_count(&self) -> usize {
        self.row_offsets.len() - 1
    }

    pub fn col_block_count(&self) -> usize {
        self.col_offsets.len() - 1
    }

    pub fn row_range(&self, r: usize) -> std::ops::Range<usize> {
        self.row_offsets[r]..self.row_offsets[r + 1]
    }

    pub fn col_range(&self, c: usize) -> std::ops::Range<usize> {
        self.col_offsets[c]..self.col_offsets[c + 1]
    }

    pub fn a_block(&self, r: usize, c: usize) -> Matrix {
        let (rr, cr) = (self.row_range(r), self.col_range(c));
        self.a.view((rr.start, cr.start), (rr.len(), cr.len())).into_owned()
    }

    pub fn b_block(&self, r: usize) -> Matrix {
        let rr = self.row_range(r);
        self.b.view((rr.start, 0), (rr.len(), self.b.ncols())).into_owned()
    }

    pub fn c_block(&self, c: usize) -> Matrix {
        let cr = self.col_range(c);
        self.c.view((0, cr.start), (self.c.nrows(), cr.len())).into_owned()
    }
}

pub(crate) fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(sizes.len() + 1);
    let mut acc = 0;
    out.push(0);
    for s in sizes {
        acc += s;
        out.push(acc);
    }
    out
}

/// One invariant violation found by [`DistributedSystem::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// 0-based vertex, when the violation is local to one subsystem.
    pub vertex: Option<usize>,
    pub t: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.vertex, self.t) {
            (Some(k), Some(t)) => write!(f, "{} at (k={}, t={})", self.message, k + 1, t),
            _ => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// A distributed system: graph, ETP schedule and per-(vertex, time) data.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributedSystem {
    graph: DirectedGraph,
    dims: DimensionSchedule,
    /// `slices[k][t]` for representative `t`.
    slices: Vec<Vec<SubsystemMatrices>>,
}

impl DistributedSystem {
    /// Assembles a system, deriving the dimension schedule from the column
    /// partitions and `D`. Consistency of the row partitions, `B` and `C` is
    /// left to [`validate`](Self::validate).
    pub fn new(
        graph: DirectedGraph,
        schedule: EtpSchedule,
        slices: Vec<Vec<SubsystemMatrices>>,
    ) -> Result<Self> {
        let n = graph.vertex_count();
        let len = schedule.len();
        if slices.len() != n || slices.iter().any(|s| s.len() != len) {
            return Err(Error::Dimension(format!(
                "expected {n} vertices x {len} representative times of matrices"
            )));
        }
        let mut temporal = vec![vec![0; len]; n];
        let mut spatial = vec![vec![0; len]; graph.edge_count()];
        let mut inputs = vec![vec![0; len]; n];
        let mut outputs = vec![vec![0; len]; n];
        for k in 0..n {
            let in_edges = graph.in_edges(k);
            for t in 0..len {
                let m = &slices[k][t];
                if m.col_block_count() != 1 + in_edges.len() {
                    return Err(Error::Dimension(format!(
                        "vertex {} at t={t}: {} column blocks, expected {}",
                        k + 1,
                        m.col_block_count(),
                        1 + in_edges.len()
                    )));
                }
                temporal[k][t] = m.col_range(0).len();
                for (c, &e) in in_edges.iter().enumerate() {
                    spatial[e][t] = m.col_range(c + 1).len();
                }
                outputs[k][t] = m.d.nrows();
                inputs[k][t] = m.d.ncols();
            }
        }
        let dims = DimensionSchedule { schedule, temporal, spatial, inputs, outputs };
        Ok(Self { graph, dims, slices })
    }

    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    pub fn dims(&self) -> &DimensionSchedule {
        &self.dims
    }

    pub fn schedule(&self) -> EtpSchedule {
        self.dims.schedule
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    /// Matrices at a representative time.
    pub fn slice(&self, k: usize, t: usize) -> &SubsystemMatrices {
        &self.slices[k][t]
    }

    /// Matrices at an arbitrary time, through the canonical index map.
    pub fn at(&self, k: usize, t: usize) -> &SubsystemMatrices {
        &self.slices[k][self.dims.schedule.index(t)]
    }

    pub fn slices(&self) -> &[Vec<SubsystemMatrices>] {
        &self.slices
    }

    /// All slots in canonical order: vertices, then edges.
    pub fn slots(&self) -> impl Iterator<Item = Slot> + '_ {
        (0..self.vertex_count())
            .map(Slot::Temporal)
            .chain((0..self.graph.edge_count()).map(Slot::Spatial))
    }

    /// Largest spectral norm of any `A^(k)(t)` over the window.
    pub fn max_a_norm(&self) -> f64 {
        self.slices
            .iter()
            .flatten()
            .map(|m| if m.a.is_empty() { 0.0 } else { m.a.clone().svd(false, false).singular_values.max() })
            .fold(0.0, f64::max)
    }

    /// Checks every structural invariant; never fails, violations are data.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let g = &self.graph;
        let sched = self.dims.schedule;
        let mut push = |k: usize, t: usize, message: String| {
            violations.push(Violation { vertex: Some(k), t: Some(t), message });
        };
        for k in 0..g.vertex_count() {
            let out_edges = g.out_edges(k);
            for t in 0..sched.len() {
                let m = &self.slices[k][t];
                let next = sched.next(t);
                let nu = self.dims.inputs[k][t];
                let ny = self.dims.outputs[k][t];

                if m.row_block_count() != 1 + out_edges.len() {
                    push(k, t, format!(
                        "row block count {} does not match 1 + out-degree {}",
                        m.row_block_count(),
                        out_edges.len()
                    ));
                    continue;
                }
                let expected_heights: Vec<usize> = std::iter::once(self.dims.temporal[k][next])
                    .chain(out_edges.iter().map(|&e| self.dims.spatial[e][next]))
                    .collect();
                let heights: Vec<usize> = (0..m.row_block_count()).map(|r| m.row_range(r).len()).collect();
                if heights != expected_heights {
                    push(k, t, format!(
                        "row partition {heights:?} does not match next-step dimensions {expected_heights:?}"
                    ));
                }
                let nr = *m.row_offsets.last().unwrap();
                let nc = *m.col_offsets.last().unwrap();
                if m.a.shape() != (nr, nc) {
                    push(k, t, format!("A is {:?}, partition implies {:?}", m.a.shape(), (nr, nc)));
                }
                if m.b.nrows() != nr {
                    push(k, t, "row block height mismatch".to_string());
                }
                if m.b.ncols() != nu {
                    push(k, t, format!("B has {} columns, D has {nu}", m.b.ncols()));
                }
                if m.c.ncols() != nc {
                    push(k, t, "column block width mismatch".to_string());
                }
                if m.c.nrows() != ny {
                    push(k, t, format!("C has {} rows, D has {ny}", m.c.nrows()));
                }
                let finite = m.a.iter().chain(m.b.iter()).chain(m.c.iter()).chain(m.d.iter()).all(|v| v.is_finite());
                if !finite {
                    push(k, t, "non-finite matrix entry".to_string());
                }
            }
        }
        ValidationReport { violations }
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidSystem(report))
        }
    }
}

/// Problem-size counts of the performance (P1) and gramian (P2/P3) programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CountReport {
    pub p1_variable_dim: usize,
    pub p2_variable_dim: usize,
    pub p3_variable_dim: usize,
    pub block_count: usize,
    pub p1_constraints: usize,
    pub p23_constraints: usize,
}

impl CountReport {
    /// The five figures in table order: P1 dim, P2/P3 dim, blocks,
    /// P1 constraints, P2/P3 constraints.
    pub fn table(&self) -> [usize; 5] {
        [self.p1_variable_dim, self.p2_variable_dim, self.block_count, self.p1_constraints, self.p23_constraints]
    }
}

/// Sizes of the SDPs, summed per vertex, edge and representative time.
///
/// Matches the closed-form table for constant dimensions; blocks of zero
/// dimension are not counted.
pub fn dimension_counts(system: &DistributedSystem) -> CountReport {
    let g = system.graph();
    let dims = system.dims();
    let sched = system.schedule();
    let mut p1 = 0;
    let mut p2 = 0;
    let mut p3 = 0;
    let mut blocks = 0;
    let mut scalars = 0;
    let tri = |n: usize| n * (n + 1) / 2;
    for t in 0..sched.len() {
        let next = sched.next(t);
        for k in 0..g.vertex_count() {
            let cols = dims.temporal[k][t] + g.in_edges(k).iter().map(|&e| dims.spatial[e][t]).sum::<usize>();
            let rows = dims.temporal[k][next] + g.out_edges(k).iter().map(|&e| dims.spatial[e][next]).sum::<usize>();
            let perf = cols + dims.inputs[k][t];
            p1 += perf;
            p2 += rows;
            p3 += cols;
            blocks += usize::from(perf > 0);
        }
        for slot in system.slots() {
            let n = dims.slot_dim(slot, t);
            p1 += n;
            p2 += n;
            p3 += n;
            blocks += usize::from(n > 0);
            scalars += tri(n);
        }
    }
    CountReport {
        p1_variable_dim: p1,
        p2_variable_dim: p2,
        p3_variable_dim: p3,
        block_count: blocks,
        p1_constraints: scalars + 1,
        p23_constraints: scalars,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn scalar_system(a: f64, b: f64, c: f64, d: f64) -> DistributedSystem {
        let graph = DirectedGraph::new(1, []).unwrap();
        let m = SubsystemMatrices::from_blocks(
            &[vec![Matrix::from_element(1, 1, a)]],
            &[Matrix::from_element(1, 1, b)],
            &[Matrix::from_element(1, 1, c)],
            Matrix::from_element(1, 1, d),
        )
        .unwrap();
        DistributedSystem::new(graph, EtpSchedule::new(0, 1).unwrap(), vec![vec![m]]).unwrap()
    }

    #[test]
    fn scalar_system_is_valid() {
        assert!(scalar_system(0.5, 1.0, 1.0, 0.0).validate().is_valid());
    }

    #[test]
    fn oversized_b_is_reported() {
        let mut sys = scalar_system(0.5, 1.0, 1.0, 0.0);
        sys.slices[0][0].b = Matrix::from_element(2, 1, 1.0);
        let report = sys.validate();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].to_string(), "row block height mismatch at (k=1, t=0)");
        assert!(sys.ensure_valid().is_err());
    }

    #[test]
    fn scalar_counts_by_hand() {
        let c = dimension_counts(&scalar_system(0.5, 1.0, 1.0, 0.0));
        assert_eq!(c.p1_variable_dim, 3);
        assert_eq!(c.block_count, 2);
        assert_eq!(c.p1_constraints, 2);
        assert_eq!(c.p2_variable_dim, 2);
        assert_eq!(c.p23_constraints, 1);
    }

    #[test]
    fn edgeless_pair_counts_only_vertices() {
        let graph = DirectedGraph::new(2, []).unwrap();
        let mk = || {
            SubsystemMatrices::from_blocks(
                &[vec![Matrix::identity(2, 2) * 0.3]],
                &[Matrix::zeros(2, 1)],
                &[Matrix::zeros(1, 2)],
                Matrix::zeros(1, 1),
            )
            .unwrap()
        };
        let sys = DistributedSystem::new(graph, EtpSchedule::new(0, 1).unwrap(), vec![vec![mk()], vec![mk()]]).unwrap();
        let c = dimension_counts(&sys);
        // N(2 n_T + n_u) with N_I = 0
        assert_eq!(c.p1_variable_dim, 2 * (2 * 2 + 1));
        assert_eq!(c.p2_variable_dim, 2 * 2 * 2);
        assert_eq!(c.block_count, 4);
        assert_eq!(c.p23_constraints, 2 * 3);
    }
}
