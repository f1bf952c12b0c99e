use crate::{Error, Result};

/// Directed edge `from -> to` (0-based vertices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
}

/// Finite directed graph with edges kept in lexicographic order.
///
/// Edge indices are positions in that order. Neighbor lists are sorted by
/// vertex, which fixes the channel order of `x_in` and `x_out`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
    in_edges: Vec<Vec<usize>>,
    out_edges: Vec<Vec<usize>>,
}

impl DirectedGraph {
    pub fn new(vertex_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::Graph("graph needs at least one vertex".into()));
        }
        let mut list: Vec<Edge> = edges.into_iter().map(|(from, to)| Edge { from, to }).collect();
        if let Some(e) = list.iter().find(|e| e.from >= vertex_count || e.to >= vertex_count) {
            return Err(Error::Graph(format!(
                "edge ({},{}) references a vertex outside 1..={vertex_count}",
                e.from + 1,
                e.to + 1
            )));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Graph(format!("duplicate edge ({},{})", w[0].from + 1, w[0].to + 1)));
        }
        let mut in_edges = vec![Vec::new(); vertex_count];
        let mut out_edges = vec![Vec::new(); vertex_count];
        for (idx, e) in list.iter().enumerate() {
            out_edges[e.from].push(idx);
            in_edges[e.to].push(idx);
        }
        // out lists are already ordered by destination; in lists need sorting by source
        for l in &mut in_edges {
            l.sort_by_key(|&i| list[i].from);
        }
        Ok(Self { vertex_count, edges: list, in_edges, out_edges })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> Edge {
        self.edges[idx]
    }

    pub fn edge_index(&self, from: usize, to: usize) -> Option<usize> {
        self.edges.binary_search(&Edge { from, to }).ok()
    }

    /// Edge indices entering `k`, ordered by source vertex.
    pub fn in_edges(&self, k: usize) -> &[usize] {
        &self.in_edges[k]
    }

    /// Edge indices leaving `k`, ordered by destination vertex.
    pub fn out_edges(&self, k: usize) -> &[usize] {
        &self.out_edges[k]
    }

    /// E_in(k) as vertices.
    pub fn in_neighbors(&self, k: usize) -> Vec<usize> {
        self.in_edges[k].iter().map(|&e| self.edges[e].from).collect()
    }

    /// E_out(k) as vertices.
    pub fn out_neighbors(&self, k: usize) -> Vec<usize> {
        self.out_edges[k].iter().map(|&e| self.edges[e].to).collect()
    }
}
