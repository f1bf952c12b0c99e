//! The five-agent reference corpus.
//!
//! Two families of constant building blocks, one for odd-numbered and one
//! for even-numbered agents. Only the temporal block `A_00` varies: it is
//! conjugated by a signed permutation once every seven steps over a period
//! of 28.

use crate::sysmodel::{DirectedGraph, DistributedSystem, EtpSchedule, SubsystemMatrices};
use crate::{Matrix, Result};

/// Vertex count of the reference graph.
pub const REFERENCE_VERTICES: usize = 5;

/// Reference edges, 1-based. The first six fix vertex 1's neighborhoods;
/// the remaining six are a reconstruction that brings the total to 12.
pub const REFERENCE_EDGES: [(usize, usize); 12] = [
    (2, 1),
    (3, 1),
    (4, 1),
    (1, 2),
    (1, 3),
    (1, 5),
    (2, 4),
    (4, 2),
    (3, 5),
    (5, 3),
    (4, 5),
    (5, 2),
];

pub const REFERENCE_PERIOD: usize = 28;
const PHASE_LENGTH: usize = 7;

struct BuildingBlocks {
    a_tt: Matrix,
    a_ts: Matrix,
    a_st: Matrix,
    b_t: Matrix,
    b_s: Matrix,
    c_t: Matrix,
    c_s: Matrix,
    rotation: Matrix,
}

fn rows(data: &[&[f64]]) -> Matrix {
    Matrix::from_row_slice(data.len(), data[0].len(), &data.concat())
}

fn diag(values: &[f64]) -> Matrix {
    Matrix::from_diagonal(&crate::Vector::from_row_slice(values))
}

fn signed_permutation(entries: &[(usize, usize, f64)]) -> Matrix {
    let mut m = Matrix::zeros(6, 6);
    for &(i, j, v) in entries {
        m[(i, j)] = v;
    }
    m
}

fn odd_blocks() -> BuildingBlocks {
    let mut a_tt = Matrix::zeros(6, 6);
    a_tt.view_mut((0, 0), (2, 2)).copy_from(&rows(&[&[-9.0, -7.0], &[-5.0, -5.0]]));
    a_tt.view_mut((0, 2), (2, 4)).copy_from(&rows(&[&[0.1, 0.3, -0.1, 0.2], &[0.3, 0.2, 0.1, -0.2]]));
    a_tt.view_mut((2, 0), (2, 2)).copy_from(&diag(&[1.0, -2.0]));
    a_tt.view_mut((4, 0), (2, 2)).copy_from(&(-Matrix::identity(2, 2)));
    a_tt.view_mut((2, 2), (4, 4)).copy_from(&(diag(&[-5.0, 1.0, -3.0, 2.0]) * 0.01));
    a_tt *= 0.1;

    let mut a_ts = Matrix::zeros(6, 3);
    a_ts.view_mut((0, 0), (2, 3)).copy_from(&rows(&[&[-0.5, 0.5, 0.01], &[0.5, -0.5, -0.02]]));
    a_ts *= 0.1;

    let mut a_st = Matrix::zeros(3, 6);
    a_st.view_mut((0, 0), (3, 3)).copy_from(&diag(&[1.0, -2.0, 0.1]));
    a_st.view_mut((0, 3), (3, 3)).copy_from(&diag(&[0.5, 0.4, 0.2]));
    a_st *= 0.1;

    let mut b_t = Matrix::zeros(6, 2);
    b_t.view_mut((0, 0), (2, 2)).fill_with_identity();
    b_t *= 0.2;
    let mut b_s = Matrix::zeros(3, 2);
    b_s.view_mut((0, 0), (2, 2)).fill_with_identity();
    b_s *= 0.1;
    let mut c_t = Matrix::zeros(2, 6);
    c_t.view_mut((0, 0), (2, 2)).fill_with_identity();

    BuildingBlocks {
        a_tt,
        a_ts,
        a_st,
        b_t,
        b_s,
        c_t,
        c_s: Matrix::zeros(2, 3),
        rotation: signed_permutation(&[(0, 4, 1.0), (1, 2, 1.0), (2, 0, 1.0), (3, 5, 1.0), (4, 3, 1.0), (5, 1, 1.0)]),
    }
}

fn even_blocks() -> BuildingBlocks {
    let a_tt = rows(&[
        &[1.0, -4.0, -0.3, 0.1, 0.5, 0.3],
        &[3.0, -5.0, 0.2, 0.1, -0.2, 0.3],
        &[0.1, -0.3, -0.5, 0.2, 0.1, 0.1],
        &[-0.2, 0.0, 0.0, -0.1, 0.0, 0.0],
        &[0.0, 0.1, 0.0, 0.0, 0.15, 0.0],
        &[0.0, 0.0, 0.3, 0.0, 0.0, -0.1],
    ]) * 0.1;

    let mut a_ts = Matrix::zeros(6, 3);
    a_ts.view_mut((0, 0), (3, 3)).copy_from(&diag(&[-0.5, 0.1, -0.1]));
    a_ts.view_mut((3, 0), (3, 3)).copy_from(&diag(&[-0.5, -0.2, 0.3]));
    a_ts *= 0.1;

    let mut a_st = Matrix::zeros(3, 6);
    a_st.view_mut((0, 0), (3, 3)).copy_from(&(Matrix::identity(3, 3) * 0.2));
    a_st.view_mut((0, 3), (3, 3)).copy_from(&(Matrix::identity(3, 3) * -0.03));

    let mut b_t = Matrix::zeros(6, 2);
    b_t[(0, 0)] = 0.1;
    b_t[(2, 1)] = 0.1;
    let mut c_t = Matrix::zeros(2, 6);
    c_t[(0, 1)] = 1.0;
    c_t[(1, 3)] = 1.0;
    let mut c_s = Matrix::zeros(2, 3);
    c_s.view_mut((0, 0), (2, 2)).copy_from(&(-Matrix::identity(2, 2)));

    BuildingBlocks {
        a_tt,
        a_ts,
        a_st,
        b_t,
        b_s: Matrix::zeros(3, 2),
        c_t,
        c_s,
        rotation: signed_permutation(&[(0, 3, 1.0), (1, 4, -1.0), (2, 1, 1.0), (3, 0, -1.0), (4, 5, 1.0), (5, 2, 1.0)]),
    }
}

/// The temporal block `A_00` at representative time `t` for the given family.
fn temporal_block(blocks: &BuildingBlocks, t: usize) -> Matrix {
    let phase = (t / PHASE_LENGTH) as u32;
    let mut r = Matrix::identity(6, 6);
    for _ in 0..phase {
        r = &blocks.rotation * r;
    }
    &r * &blocks.a_tt * r.transpose()
}

pub fn reference_graph() -> DirectedGraph {
    DirectedGraph::new(REFERENCE_VERTICES, REFERENCE_EDGES.iter().map(|&(i, j)| (i - 1, j - 1)))
        .expect("reference graph is well formed")
}

/// Builds the (0, 28)-ETP five-agent reference system.
pub fn generate_reference() -> Result<DistributedSystem> {
    let graph = reference_graph();
    let schedule = EtpSchedule::new(0, REFERENCE_PERIOD)?;
    let (odd, even) = (odd_blocks(), even_blocks());
    let mut slices = Vec::with_capacity(REFERENCE_VERTICES);
    for k in 0..REFERENCE_VERTICES {
        // 0-based even index is a 1-based odd agent
        let blk = if k % 2 == 0 { &odd } else { &even };
        let p = graph.out_edges(k).len();
        let m = graph.in_edges(k).len();
        let mut per_t = Vec::with_capacity(REFERENCE_PERIOD);
        for t in 0..REFERENCE_PERIOD {
            let mut a = Vec::with_capacity(1 + p);
            let mut first = vec![temporal_block(blk, t)];
            first.extend((0..m).map(|_| blk.a_ts.clone()));
            a.push(first);
            for _ in 0..p {
                let mut row = vec![blk.a_st.clone()];
                row.extend((0..m).map(|_| Matrix::zeros(3, 3)));
                a.push(row);
            }
            let b: Vec<Matrix> = std::iter::once(blk.b_t.clone()).chain((0..p).map(|_| blk.b_s.clone())).collect();
            let c: Vec<Matrix> = std::iter::once(blk.c_t.clone()).chain((0..m).map(|_| blk.c_s.clone())).collect();
            per_t.push(SubsystemMatrices::from_blocks(&a, &b, &c, Matrix::zeros(2, 2))?);
        }
        slices.push(per_t);
    }
    DistributedSystem::new(graph, schedule, slices)
}
