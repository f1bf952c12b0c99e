//! Simulation with one-step interconnection latency, signal norms, and
//! lower estimates of the l2-induced norm.
//!
//! At each step every vertex reads its temporal state and the spatial
//! states on its in-edges, emits an output, and writes its next temporal
//! state and the spatial states on its out-edges. A spatial state written
//! at `t` is read by the edge's destination at `t+1`. Initial states are
//! zero.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sysmodel::{DistributedSystem, Slot};
use crate::{Error, Result, Vector};

/// Per-vertex vectors over times `0..horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    /// `values[k][t]`.
    pub values: Vec<Vec<Vector>>,
}

impl Signal {
    /// Zero signal with the given per-vertex, per-time lengths.
    pub fn zeros(vertices: usize, horizon: usize, len: impl Fn(usize, usize) -> usize) -> Self {
        Self { values: (0..vertices).map(|k| (0..horizon).map(|t| Vector::zeros(len(k, t))).collect()).collect() }
    }

    pub fn horizon(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn vertex_count(&self) -> usize {
        self.values.len()
    }

    pub fn at(&self, k: usize, t: usize) -> &Vector {
        &self.values[k][t]
    }

    pub fn dot(&self, other: &Signal) -> f64 {
        self.values.iter().flatten().zip(other.values.iter().flatten()).map(|(a, b)| a.dot(b)).sum()
    }

    /// Pointwise `self - other`; shapes must agree.
    pub fn sub(&self, other: &Signal) -> Result<Signal> {
        if !self.same_shape(other) {
            return Err(Error::Dimension("signals differ in shape".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Ok(Signal { values })
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.values.iter_mut().flatten() {
            *v *= factor;
        }
    }

    pub fn same_shape(&self, other: &Signal) -> bool {
        self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.len() == y.len())
            })
    }

    /// Copy with every value after time `t` set to zero.
    pub fn truncated_after(&self, t: usize) -> Signal {
        let mut out = self.clone();
        for per_t in &mut out.values {
            for v in per_t.iter_mut().skip(t + 1) {
                v.fill(0.0);
            }
        }
        out
    }

    /// All entries, vertex-major then time then channel.
    pub fn flatten(&self) -> Vector {
        Vector::from_iterator(
            self.values.iter().flatten().map(|v| v.len()).sum(),
            self.values.iter().flatten().flat_map(|v| v.iter().copied()),
        )
    }

    /// Inverse of [`flatten`](Self::flatten) with `self` giving the shape.
    pub fn unflatten(&self, flat: &Vector) -> Signal {
        let mut out = self.clone();
        let mut off = 0;
        for v in out.values.iter_mut().flatten() {
            let n = v.len();
            v.copy_from(&flat.rows(off, n));
            off += n;
        }
        out
    }

    /// Comma-separated table: one row per time step, a `t` column, then
    /// columns `v<k>.<c>` grouped by vertex (both 1-based). Cells past a
    /// vertex's length at that time are empty.
    pub fn to_csv(&self) -> Result<String> {
        let widths: Vec<usize> =
            self.values.iter().map(|per_t| per_t.iter().map(|v| v.len()).max().unwrap_or(0)).collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["t".to_string()];
        for (k, &n) in widths.iter().enumerate() {
            header.extend((0..n).map(|c| format!("v{}.{}", k + 1, c + 1)));
        }
        w.write_record(&header)?;
        for t in 0..self.horizon() {
            let mut row = vec![t.to_string()];
            for (k, &n) in widths.iter().enumerate() {
                let v = &self.values[k][t];
                row.extend((0..n).map(|c| if c < v.len() { crate::fmt::f64_17(v[c]) } else { String::new() }));
            }
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Signal> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers()?.clone();
        if header.get(0) != Some("t") {
            return Err(Error::Parse("signal header must start with column t".into()));
        }
        let mut columns = Vec::new();
        for (i, name) in header.iter().enumerate().skip(1) {
            let parsed = name
                .strip_prefix('v')
                .and_then(|s| s.split_once('.'))
                .and_then(|(k, c)| Some((k.parse::<usize>().ok()?, c.parse::<usize>().ok()?)))
                .filter(|&(k, c)| k >= 1 && c >= 1);
            let (k, c) = parsed.ok_or_else(|| Error::Parse(format!("column {}: bad channel name {name:?}", i + 1)))?;
            columns.push((k - 1, c - 1));
        }
        let vertices = columns.iter().map(|&(k, _)| k + 1).max().unwrap_or(0);
        let mut values: Vec<Vec<Vector>> = vec![Vec::new(); vertices];
        for (row_idx, record) in r.records().enumerate() {
            let record = record?;
            let line = row_idx + 2;
            let t: usize = record
                .get(0)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("line {line}: bad time index")))?;
            if t != row_idx {
                return Err(Error::Parse(format!("line {line}: expected time {row_idx}, found {t}")));
            }
            let mut cells: Vec<Vec<f64>> = vec![Vec::new(); vertices];
            for (&(k, c), cell) in columns.iter().zip(record.iter().skip(1)) {
                let cell = cell.trim();
                if cell.is_empty() {
                    continue;
                }
                if c != cells[k].len() {
                    return Err(Error::Parse(format!("line {line}: vertex {} has a gap before channel {}", k + 1, c + 1)));
                }
                let v: f64 = cell.parse().map_err(|_| Error::Parse(format!("line {line}: bad number {cell:?}")))?;
                cells[k].push(v);
            }
            for (k, c) in cells.into_iter().enumerate() {
                values[k].push(Vector::from_vec(c));
            }
        }
        Ok(Signal { values })
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Signal> {
        Signal::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Square root of the sum of all squared entries.
pub fn l2_norm(signal: &Signal) -> f64 {
    signal.dot(signal).sqrt()
}

/// States after the last simulated step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryState {
    pub temporal: Vec<Vector>,
    pub spatial: Vec<Vector>,
}

fn check_input(system: &DistributedSystem, input: &Signal, inputs: bool) -> Result<()> {
    let what = if inputs { "input" } else { "output" };
    if input.vertex_count() != system.vertex_count() {
        return Err(Error::Dimension(format!(
            "{what} signal has {} vertices, system has {}",
            input.vertex_count(),
            system.vertex_count()
        )));
    }
    let dims = system.dims();
    let sched = system.schedule();
    for (k, per_t) in input.values.iter().enumerate() {
        if per_t.len() != input.horizon() {
            return Err(Error::Dimension(format!("{what} signal of vertex {} has a different horizon", k + 1)));
        }
        for (t, v) in per_t.iter().enumerate() {
            let i = sched.index(t);
            let n = if inputs { dims.inputs[k][i] } else { dims.outputs[k][i] };
            if v.len() != n {
                return Err(Error::Dimension(format!(
                    "{what} of vertex {} at t={t} has length {}, expected {n}",
                    k + 1,
                    v.len()
                )));
            }
        }
    }
    Ok(())
}

fn stack(parts: &[&Vector]) -> Vector {
    let n = parts.iter().map(|p| p.len()).sum();
    let mut out = Vector::zeros(n);
    let mut off = 0;
    for p in parts {
        out.rows_mut(off, p.len()).copy_from(p);
        off += p.len();
    }
    out
}

/// Runs the system from zero initial states over the input's horizon.
pub fn simulate(system: &DistributedSystem, input: &Signal) -> Result<(Signal, TrajectoryState)> {
    check_input(system, input, true)?;
    let g = system.graph();
    let dims = system.dims();
    let n = system.vertex_count();
    let mut temporal: Vec<Vector> = (0..n).map(|k| Vector::zeros(dims.slot_dim(Slot::Temporal(k), 0))).collect();
    let mut spatial: Vec<Vector> = (0..g.edge_count()).map(|e| Vector::zeros(dims.slot_dim(Slot::Spatial(e), 0))).collect();
    let mut output = vec![Vec::with_capacity(input.horizon()); n];
    for t in 0..input.horizon() {
        let mut next_temporal = Vec::with_capacity(n);
        let mut next_spatial = vec![Vector::zeros(0); g.edge_count()];
        for k in 0..n {
            let m = system.at(k, t);
            let mut parts = vec![&temporal[k]];
            parts.extend(g.in_edges(k).iter().map(|&e| &spatial[e]));
            let x = stack(&parts);
            let u = &input.values[k][t];
            output[k].push(&m.c * &x + &m.d * u);
            let next = &m.a * &x + &m.b * u;
            let r = m.row_range(0);
            next_temporal.push(next.rows(r.start, r.len()).into_owned());
            for (i, &e) in g.out_edges(k).iter().enumerate() {
                let r = m.row_range(i + 1);
                next_spatial[e] = next.rows(r.start, r.len()).into_owned();
            }
        }
        temporal = next_temporal;
        spatial = next_spatial;
    }
    Ok((Signal { values: output }, TrajectoryState { temporal, spatial }))
}

/// Adjoint of the input-output map over the horizon of `output`: runs the
/// transposed matrices backward in time from zero terminal costates.
pub fn adjoint(system: &DistributedSystem, output: &Signal) -> Result<Signal> {
    check_input(system, output, false)?;
    let g = system.graph();
    let dims = system.dims();
    let n = system.vertex_count();
    let horizon = output.horizon();
    let mut temporal: Vec<Vector> = (0..n).map(|k| Vector::zeros(dims.slot_dim(Slot::Temporal(k), horizon))).collect();
    let mut spatial: Vec<Vector> =
        (0..g.edge_count()).map(|e| Vector::zeros(dims.slot_dim(Slot::Spatial(e), horizon))).collect();
    let mut input: Vec<Vec<Vector>> = vec![vec![Vector::zeros(0); horizon]; n];
    for t in (0..horizon).rev() {
        let mut prev_temporal = Vec::with_capacity(n);
        let mut prev_spatial = vec![Vector::zeros(0); g.edge_count()];
        for k in 0..n {
            let m = system.at(k, t);
            let mut parts = vec![&temporal[k]];
            parts.extend(g.out_edges(k).iter().map(|&e| &spatial[e]));
            let p = stack(&parts);
            let v = &output.values[k][t];
            input[k][t] = m.b.tr_mul(&p) + m.d.tr_mul(v);
            let prev = m.a.tr_mul(&p) + m.c.tr_mul(v);
            let c = m.col_range(0);
            prev_temporal.push(prev.rows(c.start, c.len()).into_owned());
            for (i, &e) in g.in_edges(k).iter().enumerate() {
                let c = m.col_range(i + 1);
                prev_spatial[e] = prev.rows(c.start, c.len()).into_owned();
            }
        }
        temporal = prev_temporal;
        spatial = prev_spatial;
    }
    Ok(Signal { values: input })
}

/// A finite-horizon linear input-output map with a computable adjoint.
pub trait IoOperator {
    fn vertex_count(&self) -> usize;
    fn input_len(&self, k: usize, t: usize) -> usize;
    fn apply(&self, input: &Signal) -> Result<Signal>;
    fn apply_adjoint(&self, output: &Signal) -> Result<Signal>;
}

impl IoOperator for DistributedSystem {
    fn vertex_count(&self) -> usize {
        DistributedSystem::vertex_count(self)
    }

    fn input_len(&self, k: usize, t: usize) -> usize {
        self.dims().inputs[k][self.schedule().index(t)]
    }

    fn apply(&self, input: &Signal) -> Result<Signal> {
        Ok(simulate(self, input)?.0)
    }

    fn apply_adjoint(&self, output: &Signal) -> Result<Signal> {
        adjoint(self, output)
    }
}

/// The difference `full - reduced` of two systems with equal signal
/// dimensions.
#[derive(Debug, Clone, Copy)]
pub struct ErrorSystem<'a> {
    pub full: &'a DistributedSystem,
    pub reduced: &'a DistributedSystem,
}

impl<'a> ErrorSystem<'a> {
    pub fn new(full: &'a DistributedSystem, reduced: &'a DistributedSystem) -> Result<Self> {
        let (a, b) = (full.dims(), reduced.dims());
        if full.schedule() != reduced.schedule() || a.inputs != b.inputs || a.outputs != b.outputs {
            return Err(Error::Dimension("systems differ in signal dimensions or schedule".into()));
        }
        Ok(Self { full, reduced })
    }
}

impl IoOperator for ErrorSystem<'_> {
    fn vertex_count(&self) -> usize {
        self.full.vertex_count()
    }

    fn input_len(&self, k: usize, t: usize) -> usize {
        self.full.input_len(k, t)
    }

    fn apply(&self, input: &Signal) -> Result<Signal> {
        self.full.apply(input)?.sub(&self.reduced.apply(input)?)
    }

    fn apply_adjoint(&self, output: &Signal) -> Result<Signal> {
        self.full.apply_adjoint(output)?.sub(&self.reduced.apply_adjoint(output)?)
    }
}

/// Output difference of two systems driven by the same input.
pub fn error_response(full: &DistributedSystem, reduced: &DistributedSystem, input: &Signal) -> Result<Signal> {
    ErrorSystem::new(full, reduced)?.apply(input)
}

/// Input signal drawn uniformly from `[-amplitude, amplitude]` per channel
/// for the first `active` steps, zero afterwards.
pub fn random_excitation(
    op: &dyn IoOperator,
    horizon: usize,
    active: usize,
    amplitude: f64,
    seed: u64,
) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Signal::zeros(op.vertex_count(), horizon, |k, t| op.input_len(k, t));
    for t in 0..horizon.min(active) {
        for k in 0..op.vertex_count() {
            for v in s.values[k][t].iter_mut() {
                *v = rng.random_range(-amplitude..=amplitude);
            }
        }
    }
    s
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off`, by bisection on Sturm counts.
fn largest_tridiagonal_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    let radius = |i: usize| {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { off[i].abs() } else { 0.0 };
        left + right
    };
    let mut lo = (0..n).map(|i| diag[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..n).map(|i| diag[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    // number of eigenvalues strictly below x
    let count_below = |x: f64| {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..n {
            let b2 = if i > 0 { off[i - 1] * off[i - 1] } else { 0.0 };
            d = diag[i] - x - b2 / d;
            if d == 0.0 {
                d = -f64::EPSILON * (x.abs() + 1.0);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(mid) < n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Lower estimates of the l2-induced norm over `0..horizon`.
///
/// Power iteration on `G* G` from a seeded random input, with the
/// Rayleigh quotient maximized over every iterate so far (Lanczos with full
/// reorthogonalization). Entry `i` is the largest `||G u||` over unit inputs
/// in the span of the first `i+1` iterates, so the sequence is nondecreasing
/// and each entry is a lower bound on the norm. A zero operator gives zeros.
pub fn gain_lower_bound(op: &dyn IoOperator, horizon: usize, iterations: usize, seed: u64) -> Result<Vec<f64>> {
    if horizon == 0 || iterations == 0 {
        return Err(Error::Precondition("gain estimation needs a positive horizon and iteration count".into()));
    }
    let start = random_excitation(op, horizon, horizon, 1.0, seed);
    let template = start.clone();
    let mut q = start.flatten();
    let norm = q.norm();
    if norm == 0.0 {
        return Ok(vec![0.0; iterations]);
    }
    q /= norm;
    let mut basis: Vec<Vector> = Vec::with_capacity(iterations);
    let mut alpha: Vec<f64> = Vec::with_capacity(iterations);
    let mut beta: Vec<f64> = Vec::with_capacity(iterations);
    let mut out = Vec::with_capacity(iterations);
    let mut best: f64 = 0.0;
    for _ in 0..iterations {
        let y = op.apply(&template.unflatten(&q))?;
        let mut w = op.apply_adjoint(&y)?.flatten();
        alpha.push(q.dot(&w));
        basis.push(q.clone());
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let top = largest_tridiagonal_eigenvalue(&alpha, &beta);
        best = best.max(top.max(0.0).sqrt());
        out.push(best);
        let b = w.norm();
        if b <= 1e-14 * top.abs().max(f64::MIN_POSITIVE) {
            out.resize(iterations, best);
            break;
        }
        beta.push(b);
        q = w / b;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysmodel::tests::scalar_system;
    use crate::sysmodel::{DirectedGraph, EtpSchedule, SubsystemMatrices};
    use crate::Matrix;
    use proptest::prelude::*;
    use rand::Rng;

    fn impulse(horizon: usize, at: usize) -> Signal {
        let mut s = Signal::zeros(1, horizon, |_, _| 1);
        s.values[0][at][0] = 1.0;
        s
    }

    #[test]
    fn scalar_impulse_response() {
        let sys = scalar_system(0.5, 1.0, 1.0, 0.0);
        let (y, state) = simulate(&sys, &impulse(5, 0)).unwrap();
        let got: Vec<f64> = y.values[0].iter().map(|v| v[0]).collect();
        assert_eq!(got, vec![0.0, 1.0, 0.5, 0.25, 0.125]);
        assert_eq!(state.temporal[0][0], 0.0625);
    }

    /// Vertex 1 sends its input over edge (1,2); vertex 2 only reads the
    /// spatial state.
    fn relay() -> DistributedSystem {
        let graph = DirectedGraph::new(2, [(0, 1)]).unwrap();
        let sender = SubsystemMatrices::from_blocks(
            &[vec![Matrix::zeros(0, 0)], vec![Matrix::zeros(1, 0)]],
            &[Matrix::zeros(0, 1), Matrix::from_element(1, 1, 1.0)],
            &[Matrix::zeros(1, 0)],
            Matrix::zeros(1, 1),
        )
        .unwrap();
        let receiver = SubsystemMatrices::from_blocks(
            &[vec![Matrix::zeros(0, 0), Matrix::zeros(0, 1)]],
            &[Matrix::zeros(0, 1)],
            &[Matrix::zeros(1, 0), Matrix::from_element(1, 1, 1.0)],
            Matrix::zeros(1, 1),
        )
        .unwrap();
        DistributedSystem::new(graph, EtpSchedule::new(0, 1).unwrap(), vec![vec![sender], vec![receiver]]).unwrap()
    }

    #[test]
    fn edge_delivers_after_one_step() {
        let sys = relay();
        let mut u = Signal::zeros(2, 4, |_, _| 1);
        u.values[0][1][0] = 3.0;
        let (y, _) = simulate(&sys, &u).unwrap();
        let recv: Vec<f64> = y.values[1].iter().map(|v| v[0]).collect();
        assert_eq!(recv, vec![0.0, 0.0, 3.0, 0.0]);
    }

    #[test]
    fn zero_input_zero_output() {
        let sys = relay();
        let (y, state) = simulate(&sys, &Signal::zeros(2, 6, |_, _| 1)).unwrap();
        assert_eq!(l2_norm(&y), 0.0);
        assert!(state.spatial.iter().all(|v| v.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn wrong_input_length_is_rejected() {
        let sys = scalar_system(0.5, 1.0, 1.0, 0.0);
        assert!(simulate(&sys, &Signal::zeros(1, 3, |_, _| 2)).is_err());
    }

    #[test]
    fn norms_of_impulses() {
        assert_eq!(l2_norm(&impulse(3, 1)), 1.0);
        let mut s = impulse(3, 1);
        s.values[0][2][0] = 1.0;
        assert_eq!(l2_norm(&s), 2f64.sqrt());
    }

    #[test]
    fn scalar_gain_approaches_two() {
        let sys = scalar_system(0.5, 1.0, 1.0, 0.0);
        let est = gain_lower_bound(&sys, 200, 60, 42).unwrap();
        assert!(est.windows(2).all(|w| w[1] >= w[0]));
        let last = *est.last().unwrap();
        assert!(last <= 2.0 && last > 2.0 - 1e-3, "{last}");
        assert_eq!(est, gain_lower_bound(&sys, 200, 60, 42).unwrap());
    }

    #[test]
    fn tridiagonal_top_eigenvalue_matches_dense() {
        let diag = [2.0, -1.0, 0.5, 3.0, 1.0];
        let off = [0.3, -1.2, 0.7, 0.05];
        let mut m = Matrix::zeros(5, 5);
        for i in 0..5 {
            m[(i, i)] = diag[i];
            if i < 4 {
                m[(i, i + 1)] = off[i];
                m[(i + 1, i)] = off[i];
            }
        }
        let dense = m.symmetric_eigenvalues().max();
        assert!((largest_tridiagonal_eigenvalue(&diag, &off) - dense).abs() < 1e-13);
        assert_eq!(largest_tridiagonal_eigenvalue(&[4.0], &[]), 4.0);
    }

    #[test]
    fn zero_system_has_zero_gain() {
        let sys = scalar_system(0.5, 0.0, 1.0, 0.0);
        assert_eq!(gain_lower_bound(&sys, 20, 5, 1).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn identical_systems_give_zero_error() {
        let sys = relay();
        let u = random_excitation(&sys, 10, 5, 10.0, 42);
        assert_eq!(l2_norm(&error_response(&sys, &sys, &u).unwrap()), 0.0);
    }

    #[test]
    fn excitation_is_seeded_and_bounded() {
        let sys = scalar_system(0.5, 1.0, 1.0, 0.0);
        let a = random_excitation(&sys, 120, 100, 10.0, 42);
        assert_eq!(a, random_excitation(&sys, 120, 100, 10.0, 42));
        assert_ne!(a, random_excitation(&sys, 120, 100, 10.0, 43));
        assert!(a.values[0][..100].iter().all(|v| v[0].abs() <= 10.0));
        assert!(a.values[0][100..].iter().all(|v| v[0] == 0.0));
        let by_hand: f64 = a.values[0].iter().map(|v| v[0] * v[0]).sum::<f64>().sqrt();
        assert!((l2_norm(&a) - by_hand).abs() <= 1e-12 * by_hand);
    }

    #[test]
    fn csv_round_trip() {
        let sys = relay();
        let u = random_excitation(&sys, 7, 7, 10.0, 3);
        let text = u.to_csv().unwrap();
        assert!(text.starts_with("t,v1.1,v2.1\n"));
        assert_eq!(Signal::from_csv(&text).unwrap(), u);
        assert!(Signal::from_csv("t,v1.1\n0,1.0\n2,1.0\n").is_err());
        assert!(Signal::from_csv("t,x\n0,1.0\n").is_err());
    }

    fn random_system(seed: u64) -> DistributedSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = DirectedGraph::new(3, [(0, 1), (1, 2), (2, 0), (1, 0)]).unwrap();
        let sched = EtpSchedule::new(1, 2).unwrap();
        let mut m = |r: usize, c: usize| Matrix::from_fn(r, c, |_, _| rng.random_range(-0.5..0.5));
        let slices = (0..3)
            .map(|k| {
                (0..3)
                    .map(|_| {
                        let p = graph.out_edges(k).len();
                        let q = graph.in_edges(k).len();
                        let a: Vec<Vec<Matrix>> = (0..=p)
                            .map(|r| (0..=q).map(|c| m(if r == 0 { 2 } else { 1 }, if c == 0 { 2 } else { 1 })).collect())
                            .collect();
                        let b: Vec<Matrix> = (0..=p).map(|r| m(if r == 0 { 2 } else { 1 }, 1)).collect();
                        let c: Vec<Matrix> = (0..=q).map(|c| m(2, if c == 0 { 2 } else { 1 })).collect();
                        SubsystemMatrices::from_blocks(&a, &b, &c, m(2, 1)).unwrap()
                    })
                    .collect()
            })
            .collect();
        DistributedSystem::new(graph, sched, slices).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn adjoint_matches_inner_products(seed in any::<u64>()) {
            let sys = random_system(seed);
            let u = random_excitation(&sys, 9, 9, 1.0, seed ^ 1);
            let mut v = Signal::zeros(3, 9, |_, _| 2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
            for x in v.values.iter_mut().flatten() {
                x.iter_mut().for_each(|e| *e = rng.random_range(-1.0..1.0));
            }
            let lhs = simulate(&sys, &u).unwrap().0.dot(&v);
            let rhs = u.dot(&adjoint(&sys, &v).unwrap());
            prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1.0));
        }

        #[test]
        fn simulation_is_linear(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let sys = random_system(seed);
            let u1 = random_excitation(&sys, 8, 8, 1.0, seed ^ 3);
            let u2 = random_excitation(&sys, 8, 8, 1.0, seed ^ 4);
            let mut a = u1.clone();
            a.scale(alpha);
            let mut b = u2.clone();
            b.scale(-beta);
            let combo = a.sub(&b).unwrap();
            let mut y1 = simulate(&sys, &u1).unwrap().0;
            y1.scale(alpha);
            let mut y2 = simulate(&sys, &u2).unwrap().0;
            y2.scale(-beta);
            let expected = y1.sub(&y2).unwrap();
            let got = simulate(&sys, &combo).unwrap().0;
            let diff = l2_norm(&got.sub(&expected).unwrap());
            prop_assert!(diff <= 1e-10 * l2_norm(&expected).max(1.0));
        }

        #[test]
        fn outputs_are_causal(seed in any::<u64>(), cut in 0usize..8) {
            let sys = random_system(seed);
            let u = random_excitation(&sys, 8, 8, 1.0, seed);
            let full = simulate(&sys, &u).unwrap().0;
            let cut_out = simulate(&sys, &u.truncated_after(cut)).unwrap().0;
            for k in 0..3 {
                prop_assert_eq!(&full.values[k][..=cut], &cut_out.values[k][..=cut]);
            }
        }
    }
}
