//! Sparse symmetric positive-definite solves for the Schur complement.
//!
//! The pattern is fixed for a whole solve, so the ordering (reverse
//! Cuthill-McKee with dense rows moved last) and the envelope layout are
//! computed once. Factorization replaces tiny pivots by a huge value, which
//! removes the corresponding direction from the step; iterative refinement
//! against the unfactored matrix recovers accuracy.

use std::collections::VecDeque;

const HUGE_PIVOT: f64 = 1e64;
/// A pivot is dropped when it falls below this fraction of its diagonal entry.
const PIVOT_TOLERANCE: f64 = 1e-14;

/// Envelope (profile) storage of the lower triangle under a fixed ordering.
#[derive(Debug, Clone)]
pub struct EnvelopeMatrix {
    n: usize,
    /// `perm[old] = new`
    perm: Vec<usize>,
    /// `first[new]`: first stored column of row `new`
    first: Vec<usize>,
    start: Vec<usize>,
    values: Vec<f64>,
    factor: Vec<f64>,
    dropped: usize,
}

impl EnvelopeMatrix {
    /// Builds the layout from the adjacency lists of the pattern (`old`
    /// indices; self loops are implicit).
    pub fn new(adjacency: &[Vec<usize>]) -> Self {
        let n = adjacency.len();
        let perm = ordering(adjacency);
        let mut first: Vec<usize> = (0..n).collect();
        for (i, nbrs) in adjacency.iter().enumerate() {
            let pi = perm[i];
            for &j in nbrs {
                let pj = perm[j];
                if pj < pi {
                    first[pi] = first[pi].min(pj);
                }
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut acc = 0;
        for (i, f) in first.iter().enumerate() {
            start.push(acc);
            acc += i - f + 1;
        }
        start.push(acc);
        Self { n, perm, first, start, values: vec![0.0; acc], factor: vec![0.0; acc], dropped: 0 }
    }

    /// Storage slot of entry `(i, j)` given in original indices.
    ///
    /// Panics when the entry lies outside the pattern.
    pub fn position(&self, i: usize, j: usize) -> usize {
        let (mut a, mut b) = (self.perm[i], self.perm[j]);
        if a < b {
            std::mem::swap(&mut a, &mut b);
        }
        assert!(b >= self.first[a], "entry outside the envelope");
        self.start[a] + b - self.first[a]
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn add_at(&mut self, pos: usize, v: f64) {
        self.values[pos] += v;
    }

    /// Pivots replaced during the last factorization.
    #[cfg(test)]
    pub fn dropped_pivots(&self) -> usize {
        self.dropped
    }

    /// Cholesky factorization `P M P^T = L L^T` within the envelope.
    pub fn factorize(&mut self) {
        self.factor.copy_from_slice(&self.values);
        self.dropped = 0;
        let (first, start) = (&self.first, &self.start);
        let l = &mut self.factor;
        for i in 0..self.n {
            let fi = first[i];
            let si = start[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let (row_i, row_j) = (si + k0 - fi, start[j] + k0 - fj);
                let len = j - k0;
                let dot = dot(&l[row_i..row_i + len], &l[row_j..row_j + len]);
                let diag_j = l[start[j] + j - fj];
                let idx = si + j - fi;
                l[idx] = (l[idx] - dot) / diag_j;
            }
            let idx = si + i - fi;
            let row = &l[si..idx];
            let d = l[idx] - dot(row, row);
            l[idx] = if d > PIVOT_TOLERANCE * self.values[idx] {
                d.sqrt()
            } else {
                self.dropped += 1;
                HUGE_PIVOT
            };
        }
    }

    fn solve_factored(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for (old, &new) in self.perm.iter().enumerate() {
            y[new] = b[old];
        }
        let l = &self.factor;
        for i in 0..n {
            let (fi, si) = (self.first[i], self.start[i]);
            let s = dot(&l[si..si + i - fi], &y[fi..i]);
            y[i] = (y[i] - s) / l[si + i - fi];
        }
        for i in (0..n).rev() {
            let (fi, si) = (self.first[i], self.start[i]);
            y[i] /= l[si + i - fi];
            let yi = y[i];
            for (k, lv) in l[si..si + i - fi].iter().enumerate() {
                y[fi + k] -= lv * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (old, &new) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// `M x` with the unfactored values.
    pub fn multiply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut xp = vec![0.0; n];
        for (old, &new) in self.perm.iter().enumerate() {
            xp[new] = x[old];
        }
        let mut yp = vec![0.0; n];
        for i in 0..n {
            let (fi, si) = (self.first[i], self.start[i]);
            let row = &self.values[si..si + i - fi + 1];
            let mut acc = 0.0;
            for (k, v) in row.iter().enumerate() {
                let j = fi + k;
                acc += v * xp[j];
                if j != i {
                    yp[j] += v * xp[i];
                }
            }
            yp[i] += acc;
        }
        let mut y = vec![0.0; n];
        for (old, &new) in self.perm.iter().enumerate() {
            y[old] = yp[new];
        }
        y
    }

    /// Solves `M x = b` with the current factorization and `refine` steps of
    /// iterative refinement.
    pub fn solve(&self, b: &[f64], refine: usize) -> Vec<f64> {
        let mut x = self.solve_factored(b);
        for _ in 0..refine {
            let mx = self.multiply(&x);
            let r: Vec<f64> = b.iter().zip(&mx).map(|(bi, mi)| bi - mi).collect();
            let dx = self.solve_factored(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
        }
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for k in 0..4 {
            s[k] += a[4 * c + k] * b[4 * c + k];
        }
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (s[0] + s[1]) + (s[2] + s[3]) + tail
}

/// Reverse Cuthill-McKee over the sparse part; rows whose degree exceeds
/// `max(64, n/4)` are placed last in their original order. Returns
/// `perm[old] = new`.
fn ordering(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let threshold = 64.max(n / 4);
    let dense: Vec<bool> = adjacency.iter().map(|a| a.len() > threshold).collect();
    let degree: Vec<usize> = adjacency.iter().map(|a| a.iter().filter(|&&j| !dense[j]).count()).collect();
    let mut visited = dense.clone();
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).filter(|&i| !dense[i]).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let root = peripheral(adjacency, &dense, &degree, seed);
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adjacency[v].iter().copied().filter(|&j| !visited[j]).collect();
            next.sort_by_key(|&j| (degree[j], j));
            next.dedup();
            for j in next {
                if !visited[j] {
                    visited[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    order.reverse();
    order.extend((0..n).filter(|&i| dense[i]));
    let mut perm = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        perm[old] = new;
    }
    perm
}

/// Pseudo-peripheral node of `seed`'s component by repeated BFS.
fn peripheral(adjacency: &[Vec<usize>], dense: &[bool], degree: &[usize], seed: usize) -> usize {
    let mut root = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let levels = bfs_levels(adjacency, dense, root);
        let far = levels.iter().copied().filter(|&l| l != usize::MAX).max().unwrap_or(0);
        if far <= ecc && root != seed {
            break;
        }
        ecc = far;
        let candidate = (0..adjacency.len())
            .filter(|&i| levels[i] == far)
            .min_by_key(|&i| (degree[i], i));
        match candidate {
            Some(c) if c != root => root = c,
            _ => break,
        }
    }
    root
}

/// BFS depth from `root`; `usize::MAX` marks unreached vertices.
fn bfs_levels(adjacency: &[Vec<usize>], dense: &[bool], root: usize) -> Vec<usize> {
    let mut level = vec![usize::MAX; adjacency.len()];
    level[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &j in &adjacency[v] {
            if !dense[j] && level[j] == usize::MAX {
                level[j] = level[v] + 1;
                queue.push_back(j);
            }
        }
    }
    level
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_system(n: usize, density: f64, seed: u64) -> (Vec<Vec<usize>>, nalgebra::DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..i {
                if rng.random::<f64>() < density {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
        }
        // one dense row
        for j in 0..n - 1 {
            m[(n - 1, j)] = 0.1;
            m[(j, n - 1)] = 0.1;
        }
        for i in 0..n {
            let s: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
            m[(i, i)] = s + 1.0;
        }
        let adjacency = (0..n).map(|i| (0..n).filter(|&j| j != i && m[(i, j)] != 0.0).collect()).collect();
        (adjacency, m)
    }

    #[test]
    fn matches_dense_solve() {
        let n = 300;
        let (adj, m) = dense_system(n, 0.01, 3);
        let mut env = EnvelopeMatrix::new(&adj);
        for i in 0..n {
            for j in 0..=i {
                if m[(i, j)] != 0.0 {
                    let pos = env.position(i, j);
                    env.add_at(pos, m[(i, j)]);
                }
            }
        }
        env.factorize();
        assert_eq!(env.dropped_pivots(), 0);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = env.solve(&b, 1);
        let expected = m.clone().cholesky().unwrap().solve(&nalgebra::DVector::from_vec(b.clone()));
        for i in 0..n {
            assert!((x[i] - expected[i]).abs() < 1e-10);
        }
        let mx = env.multiply(&x);
        for i in 0..n {
            assert!((mx[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn chain_keeps_narrow_envelope() {
        let n = 500;
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut v = Vec::new();
                if i > 0 {
                    v.push(i - 1);
                }
                if i + 1 < n {
                    v.push(i + 1);
                }
                v
            })
            .collect();
        let env = EnvelopeMatrix::new(&adj);
        assert!(env.values.len() <= 2 * n);
    }

    #[test]
    fn singular_direction_is_dropped() {
        let adj = vec![vec![1], vec![0]];
        let mut env = EnvelopeMatrix::new(&adj);
        for (i, j, v) in [(0, 0, 1.0), (1, 0, 1.0), (1, 1, 1.0)] {
            let p = env.position(i, j);
            env.add_at(p, v);
        }
        env.factorize();
        assert_eq!(env.dropped_pivots(), 1);
        let x = env.solve(&[2.0, 2.0], 0);
        assert!((x[0] + x[1] - 2.0).abs() < 1e-12);
    }
}
