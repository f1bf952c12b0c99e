//! JSON system description files.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "vertex_count": 2,
//!   "edges": [[1, 2]],
//!   "horizon": 0,
//!   "period": 1,
//!   "subsystems": [
//!     { "vertex": 1, "slices": [ { "t": 0,
//!         "a": { "0,0": {"rows": 1, "cols": 1, "data": [0.5]}, "2,0": ... },
//!         "b": { "0": ..., "2": ... },
//!         "c": { "0": ... },
//!         "d": ... } ] }
//!   ]
//! }
//! ```
//!
//! Block keys name 1-based neighbor vertices, with `0` for the temporal
//! block. `a` keys are `"dst,src"`: the row block is `0` or an out-neighbor,
//! the column block `0` or an in-neighbor.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DirectedGraph, DistributedSystem, EtpSchedule, SubsystemMatrices};
use crate::{Error, Matrix, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct BlockFile {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl BlockFile {
    pub(crate) fn from_matrix(m: &Matrix) -> Self {
        let data = (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| (r, c))).map(|(r, c)| m[(r, c)]).collect();
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }

    pub(crate) fn to_matrix(&self, what: &str) -> Result<Matrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Schema(format!(
                "{what}: {} values for a {}x{} block",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(Matrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SliceFile {
    t: usize,
    a: BTreeMap<String, BlockFile>,
    b: BTreeMap<String, BlockFile>,
    c: BTreeMap<String, BlockFile>,
    d: BlockFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubsystemFile {
    vertex: usize,
    slices: Vec<SliceFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    schema_version: u32,
    vertex_count: usize,
    edges: Vec<[usize; 2]>,
    horizon: usize,
    period: usize,
    subsystems: Vec<SubsystemFile>,
}

/// Serializes a system to the canonical JSON text.
pub fn to_json(system: &DistributedSystem) -> Result<String> {
    let g = system.graph();
    let file = SystemFile {
        schema_version: SCHEMA_VERSION,
        vertex_count: g.vertex_count(),
        edges: g.edges().iter().map(|e| [e.from + 1, e.to + 1]).collect(),
        horizon: system.schedule().horizon(),
        period: system.schedule().period(),
        subsystems: (0..g.vertex_count())
            .map(|k| {
                let rows = block_keys(&g.out_neighbors(k));
                let cols = block_keys(&g.in_neighbors(k));
                let slices = system.slices()[k]
                    .iter()
                    .enumerate()
                    .map(|(t, m)| SliceFile {
                        t,
                        a: rows
                            .iter()
                            .enumerate()
                            .flat_map(|(r, rk)| cols.iter().enumerate().map(move |(c, ck)| (r, c, rk, ck)))
                            .map(|(r, c, rk, ck)| (format!("{rk},{ck}"), BlockFile::from_matrix(&m.a_block(r, c))))
                            .collect(),
                        b: rows.iter().enumerate().map(|(r, rk)| (rk.to_string(), BlockFile::from_matrix(&m.b_block(r)))).collect(),
                        c: cols.iter().enumerate().map(|(c, ck)| (ck.to_string(), BlockFile::from_matrix(&m.c_block(c)))).collect(),
                        d: BlockFile::from_matrix(&m.d),
                    })
                    .collect();
                SubsystemFile { vertex: k + 1, slices }
            })
            .collect(),
    };
    Ok(crate::fmt::to_json_string(&file)?)
}

/// Parses the canonical JSON text.
pub fn from_json(text: &str) -> Result<DistributedSystem> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => Error::Schema(e.to_string()),
        _ => Error::Parse(e.to_string()),
    })?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "schema_version {} is not supported (expected {SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    let n = file.vertex_count;
    let mut edges = Vec::with_capacity(file.edges.len());
    for [i, j] in &file.edges {
        if *i == 0 || *j == 0 {
            return Err(Error::Schema(format!("edges: vertex numbers are 1-based, got [{i},{j}]")));
        }
        edges.push((i - 1, j - 1));
    }
    let graph = DirectedGraph::new(n, edges)?;
    let schedule = EtpSchedule::new(file.horizon, file.period).map_err(|_| Error::Schema("period must be positive".into()))?;

    if file.subsystems.len() != n {
        return Err(Error::Schema(format!("subsystems: {} entries for {n} vertices", file.subsystems.len())));
    }
    let mut slices = Vec::with_capacity(n);
    for (k, sub) in file.subsystems.into_iter().enumerate() {
        if sub.vertex != k + 1 {
            return Err(Error::Schema(format!("subsystems[{k}].vertex is {}, expected {}", sub.vertex, k + 1)));
        }
        if sub.slices.len() != schedule.len() {
            return Err(Error::Schema(format!(
                "vertex {}: {} slices, expected h+q = {}",
                k + 1,
                sub.slices.len(),
                schedule.len()
            )));
        }
        let rows = block_keys(&graph.out_neighbors(k));
        let cols = block_keys(&graph.in_neighbors(k));
        let mut per_vertex = Vec::with_capacity(schedule.len());
        for (t, s) in sub.slices.into_iter().enumerate() {
            let at = |field: &str, key: &str| format!("vertex {} t={t} {field}[{key}]", k + 1);
            if s.t != t {
                return Err(Error::Schema(format!("vertex {}: slice {t} has t={}", k + 1, s.t)));
            }
            let take = |map: &BTreeMap<String, BlockFile>, field: &str, key: String| -> Result<Matrix> {
                map.get(&key).ok_or_else(|| Error::Schema(format!("missing block {}", at(field, &key))))?.to_matrix(&at(field, &key))
            };
            let expected = rows.len() * cols.len();
            if s.a.len() != expected || s.b.len() != rows.len() || s.c.len() != cols.len() {
                return Err(Error::Schema(format!(
                    "vertex {} t={t}: block keys do not match the graph neighborhoods",
                    k + 1
                )));
            }
            let mut a = Vec::with_capacity(rows.len());
            for rk in &rows {
                let mut row = Vec::with_capacity(cols.len());
                for ck in &cols {
                    row.push(take(&s.a, "a", format!("{rk},{ck}"))?);
                }
                a.push(row);
            }
            let b = rows.iter().map(|rk| take(&s.b, "b", rk.to_string())).collect::<Result<Vec<_>>>()?;
            let c = cols.iter().map(|ck| take(&s.c, "c", ck.to_string())).collect::<Result<Vec<_>>>()?;
            let d = s.d.to_matrix(&format!("vertex {} t={t} d", k + 1))?;
            per_vertex.push(SubsystemMatrices::from_blocks(&a, &b, &c, d)?);
        }
        slices.push(per_vertex);
    }
    DistributedSystem::new(graph, schedule, slices)
}

fn block_keys(neighbors: &[usize]) -> Vec<usize> {
    std::iter::once(0).chain(neighbors.iter().map(|v| v + 1)).collect()
}

pub fn save(system: &DistributedSystem, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_json(system)?)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<DistributedSystem> {
    from_json(&std::fs::read_to_string(path)?)
}
