//! Balanced realizations from pairs of generalized gramians.
//!
//! Per slot and representative time, with `X = R^T R` and `Y = H^T H`, the
//! singular value decomposition `H R^T = U S V^T` gives the transformation
//! `T = S^(-1/2) U^T H` with inverse `R^T V S^(-1/2)`. Under `T` both
//! gramians become the diagonal `S`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lmi::{
    assemble_balanced_stage, assemble_ctrl_gramian, assemble_obs_gramian, verify_solution, Assignment, LmiProblem,
    ResidualReport,
};
use crate::sysmodel::{BlockFile, DistributedSystem, EtpSchedule, Slot, SlotMap, SubsystemMatrices};
use crate::{Error, Matrix, Result, Vector};

/// Singular values below this fraction of the largest in their block abort
/// balancing.
pub const SINGULAR_VALUE_FLOOR: f64 = 1e-12;

/// Symmetric positive-definite matrices per slot and representative time,
/// together with the margin they were certified with.
#[derive(Debug, Clone, PartialEq)]
pub struct GramianSet {
    pub matrices: SlotMap<Matrix>,
    pub beta: f64,
}

impl GramianSet {
    /// Reads the matrix unknowns of a solved problem; slots without an
    /// unknown (zero dimension) get empty matrices.
    pub fn from_assignment(system: &DistributedSystem, problem: &LmiProblem, assignment: &Assignment) -> Self {
        let vars = &problem.variables;
        let matrices = SlotMap::build(system, |slot, t| {
            assignment
                .block(vars, crate::lmi::BlockTag::new(slot, t))
                .cloned()
                .unwrap_or_else(|| Matrix::zeros(0, 0))
        });
        Self { matrices, beta: problem.beta }
    }

    /// Diagonal matrices from per-slot entry lists.
    pub fn from_diagonals(diagonals: &SlotMap<Vec<f64>>, beta: f64) -> Self {
        Self { matrices: diagonals.map(|_, _, d| Matrix::from_diagonal(&Vector::from_column_slice(d))), beta }
    }

    pub fn get(&self, slot: Slot, t: usize) -> &Matrix {
        self.matrices.get(slot, t)
    }

    pub fn schedule(&self) -> EtpSchedule {
        self.matrices.schedule()
    }

    /// Values for every matrix unknown of `problem`; scalars are zero.
    pub fn assignment(&self, problem: &LmiProblem) -> Assignment {
        let vars = &problem.variables;
        Assignment {
            blocks: vars.blocks().iter().map(|b| self.get(b.tag.slot, b.tag.t).clone()).collect(),
            scalars: vec![0.0; vars.scalars().len()],
        }
    }

    /// Diagonal entries of one block.
    pub fn diagonal(&self, slot: Slot, t: usize) -> Vec<f64> {
        self.get(slot, t).diagonal().iter().copied().collect()
    }

    /// Multiplies every matrix and the margin by `factor >= 1`. Both
    /// generalized Lyapunov inequalities then hold with the scaled margin.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor >= 1.0) {
            return Err(Error::Precondition(format!("gramian scale factor {factor} is below 1")));
        }
        Ok(Self { matrices: self.matrices.map(|_, _, m| m * factor), beta: self.beta * factor })
    }

    /// Checks that every block matches the system's dimension schedule.
    pub fn check_shape(&self, system: &DistributedSystem) -> Result<()> {
        if self.schedule() != system.schedule()
            || self.matrices.vertex_count() != system.vertex_count()
            || self.matrices.edge_count() != system.graph().edge_count()
        {
            return Err(Error::Dimension("gramian set does not match the system's graph or schedule".into()));
        }
        for (slot, t, m) in self.matrices.iter() {
            let n = system.dims().slot_dim(slot, t);
            if m.shape() != (n, n) {
                return Err(Error::Dimension(format!(
                    "gramian of {} at t={t} is {:?}, expected {n}x{n}",
                    slot.label(system.graph()),
                    m.shape()
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let sched = self.schedule();
        let to_file = |slot| -> Vec<BlockFile> {
            (0..sched.len()).map(|t| BlockFile::from_matrix(self.get(slot, t))).collect()
        };
        let file = GramianFile {
            beta: self.beta,
            horizon: sched.horizon(),
            period: sched.period(),
            temporal: (0..self.matrices.vertex_count()).map(|k| to_file(Slot::Temporal(k))).collect(),
            spatial: (0..self.matrices.edge_count()).map(|e| to_file(Slot::Spatial(e))).collect(),
        };
        Ok(crate::fmt::to_json_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GramianFile = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        let schedule = EtpSchedule::new(file.horizon, file.period)?;
        let convert = |blocks: Vec<Vec<BlockFile>>, what: &str| -> Result<Vec<Vec<Matrix>>> {
            blocks
                .into_iter()
                .map(|per_t| {
                    if per_t.len() != schedule.len() {
                        return Err(Error::Schema(format!("{what}: expected {} time slices", schedule.len())));
                    }
                    per_t.iter().map(|b| b.to_matrix(what)).collect()
                })
                .collect()
        };
        let temporal = convert(file.temporal, "temporal gramian")?;
        let spatial = convert(file.spatial, "spatial gramian")?;
        Ok(Self { matrices: SlotMap::new(schedule, temporal, spatial), beta: file.beta })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GramianFile {
    beta: f64,
    horizon: usize,
    period: usize,
    temporal: Vec<Vec<BlockFile>>,
    spatial: Vec<Vec<BlockFile>>,
}

/// A state transformation of one slot and its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotTransform {
    pub forward: Matrix,
    pub inverse: Matrix,
}

impl SlotTransform {
    pub fn identity(n: usize) -> Self {
        Self { forward: Matrix::identity(n, n), inverse: Matrix::identity(n, n) }
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &SlotTransform) -> Self {
        Self { forward: &self.forward * &first.forward, inverse: &first.inverse * &self.inverse }
    }
}

/// A realization whose gramians coincide and are diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedRealization {
    /// The transformed system.
    pub system: DistributedSystem,
    /// Diagonal with positive, nonincreasing entries per block.
    pub sigma: GramianSet,
    /// Maps original states to balanced states, per slot.
    pub transforms: SlotMap<SlotTransform>,
}

impl BalancedRealization {
    /// Wraps a system that is already balanced by a diagonal `sigma`,
    /// permuting each slot's states so that the entries are nonincreasing.
    /// Ties keep their original order.
    pub fn from_diagonal(system: &DistributedSystem, sigma: &GramianSet) -> Result<Self> {
        sigma.check_shape(system)?;
        let perms = sigma.matrices.map(|_, _, m| {
            let d = m.diagonal();
            let mut order: Vec<usize> = (0..d.len()).collect();
            order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
            order
        });
        let transforms = perms.map(|_, _, order| {
            let n = order.len();
            let mut p = Matrix::zeros(n, n);
            for (new, &old) in order.iter().enumerate() {
                p[(new, old)] = 1.0;
            }
            SlotTransform { inverse: p.transpose(), forward: p }
        });
        let sorted = GramianSet {
            matrices: sigma.matrices.map(|slot, t, m| {
                let order = perms.get(slot, t);
                Matrix::from_diagonal(&Vector::from_iterator(order.len(), order.iter().map(|&i| m[(i, i)])))
            }),
            beta: sigma.beta,
        };
        let sorted_already = perms.iter().all(|(_, _, order)| order.iter().enumerate().all(|(i, &j)| i == j));
        let system = if sorted_already { system.clone() } else { transform_system(system, &transforms)? };
        Ok(Self { system, sigma: sorted, transforms })
    }

    /// Diagonal of `sigma` for one slot.
    pub fn sigma_diagonal(&self, slot: Slot, t: usize) -> Vec<f64> {
        self.sigma.diagonal(slot, t)
    }
}

/// Applies per-slot state transformations:
/// `A -> T_rows(t+1) A T_cols(t)^-1`, `B -> T_rows(t+1) B`, `C -> C T_cols(t)^-1`.
pub fn transform_system(system: &DistributedSystem, transforms: &SlotMap<SlotTransform>) -> Result<DistributedSystem> {
    let g = system.graph();
    let sched = system.schedule();
    let mut slices = Vec::with_capacity(system.vertex_count());
    for k in 0..system.vertex_count() {
        let rows: Vec<Slot> = std::iter::once(Slot::Temporal(k)).chain(g.out_edges(k).iter().map(|&e| Slot::Spatial(e))).collect();
        let cols: Vec<Slot> = std::iter::once(Slot::Temporal(k)).chain(g.in_edges(k).iter().map(|&e| Slot::Spatial(e))).collect();
        let mut per_t = Vec::with_capacity(sched.len());
        for t in 0..sched.len() {
            let m = system.slice(k, t);
            let next = sched.next(t);
            let pre: Vec<&Matrix> = rows.iter().map(|&s| &transforms.get(s, next).forward).collect();
            let post: Vec<&Matrix> = cols.iter().map(|&s| &transforms.get(s, t).inverse).collect();
            let a: Vec<Vec<Matrix>> = (0..rows.len())
                .map(|r| (0..cols.len()).map(|c| pre[r] * m.a_block(r, c) * post[c]).collect())
                .collect();
            let b: Vec<Matrix> = (0..rows.len()).map(|r| pre[r] * m.b_block(r)).collect();
            let c: Vec<Matrix> = (0..cols.len()).map(|c| m.c_block(c) * post[c]).collect();
            per_t.push(SubsystemMatrices::from_blocks(&a, &b, &c, m.d.clone())?);
        }
        slices.push(per_t);
    }
    DistributedSystem::new(g.clone(), sched, slices)
}

/// Residuals of the controllability inequalities at `x`, with `x.beta`.
pub fn check_ctrl_gramian(system: &DistributedSystem, x: &GramianSet) -> Result<ResidualReport> {
    x.check_shape(system)?;
    let problem = assemble_ctrl_gramian(system, x.beta)?;
    verify_solution(&problem, &x.assignment(&problem))
}

/// Residuals of the observability inequalities at `y`, with `y.beta`.
pub fn check_obs_gramian(system: &DistributedSystem, y: &GramianSet) -> Result<ResidualReport> {
    y.check_shape(system)?;
    let problem = assemble_obs_gramian(system, y.beta)?;
    verify_solution(&problem, &y.assignment(&problem))
}

/// Balancing transformation of one slot from `X` and `Y`.
///
/// Returns the nonincreasing singular values and the transformation. Each
/// pair of singular vectors is oriented so that the first nonzero entry of
/// the left vector is positive.
pub fn balance_slot(x: &Matrix, y: &Matrix) -> Result<(Vec<f64>, SlotTransform)> {
    let n = x.nrows();
    if n == 0 {
        return Ok((Vec::new(), SlotTransform::identity(0)));
    }
    let r = x
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("controllability gramian is not positive definite".into()))?
        .l()
        .transpose();
    let h = y
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("observability gramian is not positive definite".into()))?
        .l()
        .transpose();
    let svd = (&h * r.transpose()).svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v = svd.v_t.expect("right singular vectors requested").transpose();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    if !(s[n - 1] > SINGULAR_VALUE_FLOOR * s[0]) {
        return Err(Error::Numerical(format!(
            "singular value {:e} below the floor relative to {:e}",
            s[n - 1],
            s[0]
        )));
    }
    let mut us = Matrix::zeros(n, n);
    let mut vs = Matrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        let mut uc = u.column(old).into_owned();
        let mut vc = v.column(old).into_owned();
        let scale = uc.amax();
        if let Some(first) = uc.iter().find(|x| x.abs() > 1e-12 * scale) {
            if *first < 0.0 {
                uc.neg_mut();
                vc.neg_mut();
            }
        }
        us.set_column(new, &uc);
        vs.set_column(new, &vc);
    }
    let inv_sqrt = Matrix::from_diagonal(&Vector::from_iterator(n, s.iter().map(|v| 1.0 / v.sqrt())));
    let forward = &inv_sqrt * us.transpose() * &h;
    let inverse = r.transpose() * vs * &inv_sqrt;
    Ok((s, SlotTransform { forward, inverse }))
}

/// Factor by which a transformation scales the margins of both inequalities:
/// `min(sigma_min(T)^2, 1 / sigma_max(T)^2)`.
fn margin_factor(t: &SlotTransform) -> f64 {
    if t.forward.is_empty() {
        return f64::INFINITY;
    }
    let sv = t.forward.clone().svd(false, false).singular_values;
    let (lo, hi) = (sv.min(), sv.max());
    (lo * lo).min(1.0 / (hi * hi))
}

/// Balances `system` from a controllability set `x` and an observability
/// set `y`, both of which must satisfy their inequalities.
///
/// The balanced `sigma` satisfies both inequalities of the transformed
/// system with margin `beta * min(1, f)`, where `f` is the smallest
/// [`balancing_margin_factor`] over all slots.
pub fn balance(system: &DistributedSystem, x: &GramianSet, y: &GramianSet) -> Result<BalancedRealization> {
    system.ensure_valid()?;
    for (report, what) in [(check_ctrl_gramian(system, x)?, "controllability"), (check_obs_gramian(system, y)?, "observability")] {
        if let Some(v) = report.violations().next() {
            return Err(Error::Precondition(format!(
                "{what} gramians violate {} (extreme eigenvalue {:e})",
                v.tag.describe(system.graph()),
                v.extreme
            )));
        }
    }
    let pieces = SlotMap::try_build(system, |slot, t| balance_slot(x.get(slot, t), y.get(slot, t)))?;
    let transforms = pieces.map(|_, _, p| p.1.clone());
    let factor = balancing_margin_factor(&transforms);
    let beta = x.beta.min(y.beta) * factor.min(1.0);
    let sigma = GramianSet::from_diagonals(&pieces.map(|_, _, p| p.0.clone()), beta);
    Ok(BalancedRealization { system: transform_system(system, &transforms)?, sigma, transforms })
}

/// Smallest margin factor over all slots (infinite when every slot is empty).
pub fn balancing_margin_factor(transforms: &SlotMap<SlotTransform>) -> f64 {
    transforms.iter().map(|(_, _, t)| margin_factor(t)).fold(f64::INFINITY, f64::min)
}

/// Outcome of [`check_balanced`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    pub ctrl: ResidualReport,
    pub obs: ResidualReport,
    /// Largest off-diagonal magnitude of any sigma block relative to its
    /// largest diagonal entry.
    pub max_off_diagonal: f64,
    /// Every block has positive, nonincreasing diagonal entries.
    pub ordered: bool,
}

impl BalanceReport {
    pub fn is_balanced(&self, off_diagonal_tolerance: f64) -> bool {
        self.ctrl.all_satisfied() && self.obs.all_satisfied() && self.ordered && self.max_off_diagonal <= off_diagonal_tolerance
    }
}

/// Evaluates both inequalities at `sigma` for the transformed system.
/// Empty slots are skipped.
pub fn check_balanced(realization: &BalancedRealization) -> Result<BalanceReport> {
    let sys = &realization.system;
    let sigma = &realization.sigma;
    let ctrl = check_ctrl_gramian(sys, sigma)?;
    let obs = check_obs_gramian(sys, sigma)?;
    let mut max_off: f64 = 0.0;
    let mut ordered = true;
    for (_, _, m) in sigma.matrices.iter() {
        let n = m.nrows();
        if n == 0 {
            continue;
        }
        let d = m.diagonal();
        let scale = d.amax();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    max_off = max_off.max(m[(i, j)].abs() / scale);
                }
            }
        }
        ordered &= d[n - 1] > 0.0 && (1..n).all(|i| d[i] <= d[i - 1]);
    }
    Ok(BalanceReport { ctrl, obs, max_off_diagonal: max_off, ordered })
}

/// The diagonal re-solve of both inequalities on a balanced system: the
/// problem whose optimum, under the weighted objective, pins many entries
/// to a common floor.
pub fn balanced_stage_problem(system: &DistributedSystem, beta: f64, weight: f64) -> Result<LmiProblem> {
    crate::sdp::objective_balanced_stage(&assemble_balanced_stage(system, beta)?, weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysmodel::tests::scalar_system;
    use crate::sysmodel::DirectedGraph;

    fn scalar_set(system: &DistributedSystem, v: f64, beta: f64) -> GramianSet {
        GramianSet { matrices: SlotMap::build(system, |_, _| Matrix::from_element(1, 1, v)), beta }
    }

    #[test]
    fn scalar_slot_by_hand() {
        let (s, t) = balance_slot(&Matrix::from_element(1, 1, 4.0), &Matrix::from_element(1, 1, 1.0)).unwrap();
        assert!((s[0] - 2.0).abs() < 1e-15);
        assert!((t.forward[(0, 0)] - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((t.inverse[(0, 0)] - 2f64.sqrt()).abs() < 1e-15);
        // T X T^T and T^-T Y T^-1 both equal 2
        let tx = &t.forward * Matrix::from_element(1, 1, 4.0) * t.forward.transpose();
        let ty = t.inverse.transpose() * Matrix::from_element(1, 1, 1.0) * &t.inverse;
        assert!((tx[(0, 0)] - 2.0).abs() < 1e-14 && (ty[(0, 0)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn identity_gramians_give_orthogonal_transform() {
        let (s, t) = balance_slot(&Matrix::identity(3, 3), &Matrix::identity(3, 3)).unwrap();
        assert_eq!(s, vec![1.0; 3]);
        let q = &t.forward * t.forward.transpose();
        assert!((q - Matrix::identity(3, 3)).norm() < 1e-14);
    }

    #[test]
    fn scalar_system_with_equal_gramians_is_unchanged() {
        let sys = scalar_system(0.5, 1.0, 1.0, 0.0);
        let g = scalar_set(&sys, 4.0 / 3.0 + 1e-3, 1e-4);
        let bal = balance(&sys, &g, &g).unwrap();
        assert!((bal.sigma_diagonal(Slot::Temporal(0), 0)[0] - (4.0 / 3.0 + 1e-3)).abs() < 1e-14);
        assert!((bal.system.slice(0, 0).a[(0, 0)] - 0.5).abs() < 1e-14);
        let report = check_balanced(&bal).unwrap();
        assert!(report.is_balanced(1e-12), "{report:?}");
    }

    #[test]
    fn sigma_matches_square_roots_of_xy_eigenvalues() {
        let x = Matrix::from_row_slice(2, 2, &[3.0, 0.4, 0.4, 1.0]);
        let y = Matrix::from_row_slice(2, 2, &[2.0, -0.3, -0.3, 0.5]);
        let (s, t) = balance_slot(&x, &y).unwrap();
        // independent oracle: eigenvalues of L^T Y L with X = L L^T
        let l = x.clone().cholesky().unwrap().l();
        let mut eig: Vec<f64> = (l.transpose() * &y * &l).symmetric_eigenvalues().iter().map(|v| v.sqrt()).collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in s.iter().zip(&eig) {
            assert!((a - b).abs() < 1e-12 * b);
        }
        assert!((&t.forward * &t.inverse - Matrix::identity(2, 2)).norm() < 1e-12);
        let sx = &t.forward * &x * t.forward.transpose();
        let sy = t.inverse.transpose() * &y * &t.inverse;
        assert!((sx[(0, 1)]).abs() < 1e-12 && (sy[(0, 1)]).abs() < 1e-12);
        assert!((sx[(0, 0)] - s[0]).abs() < 1e-12 && (sy[(1, 1)] - s[1]).abs() < 1e-12);
    }

    #[test]
    fn indefinite_gramian_is_rejected() {
        let x = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(balance_slot(&x, &Matrix::identity(2, 2)).is_err());
    }

    #[test]
    fn halved_sigma_entry_breaks_balance() {
        let sys = scalar_system(0.5, 1.0, 1.0, 0.0);
        let g = scalar_set(&sys, 1.5, 1e-4);
        let mut bal = balance(&sys, &g, &g).unwrap();
        assert!(check_balanced(&bal).unwrap().is_balanced(1e-12));
        *bal.sigma.matrices.get_mut(Slot::Temporal(0), 0) *= 0.5;
        let report = check_balanced(&bal).unwrap();
        assert!(!report.ctrl.all_satisfied() || !report.obs.all_satisfied());
    }

    #[test]
    fn sorting_a_diagonal_sigma_permutes_states() {
        let graph = DirectedGraph::new(1, []).unwrap();
        let a = Matrix::from_row_slice(2, 2, &[0.1, 0.2, 0.0, 0.3]);
        let m = SubsystemMatrices::from_blocks(
            &[vec![a]],
            &[Matrix::from_row_slice(2, 1, &[1.0, 2.0])],
            &[Matrix::from_row_slice(1, 2, &[3.0, 4.0])],
            Matrix::zeros(1, 1),
        )
        .unwrap();
        let sys = DistributedSystem::new(graph, EtpSchedule::new(0, 1).unwrap(), vec![vec![m]]).unwrap();
        let sigma = GramianSet::from_diagonals(&SlotMap::build(&sys, |_, _| vec![1.0, 5.0]), 1e-6);
        let bal = BalancedRealization::from_diagonal(&sys, &sigma).unwrap();
        assert_eq!(bal.sigma_diagonal(Slot::Temporal(0), 0), vec![5.0, 1.0]);
        let s = bal.system.slice(0, 0);
        assert_eq!(s.a, Matrix::from_row_slice(2, 2, &[0.3, 0.0, 0.2, 0.1]));
        assert_eq!(s.b, Matrix::from_row_slice(2, 1, &[2.0, 1.0]));
        assert_eq!(s.c, Matrix::from_row_slice(1, 2, &[4.0, 3.0]));
    }

    #[test]
    fn gramian_file_round_trip() {
        let sys = scalar_system(0.5, 1.0, 1.0, 0.0);
        let g = scalar_set(&sys, 0.1 + 0.2, 3e-7);
        let back = GramianSet::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(back, g);
        back.check_shape(&sys).unwrap();
    }

    #[test]
    fn scaling_below_one_is_rejected() {
        let sys = scalar_system(0.5, 1.0, 1.0, 0.0);
        assert!(scalar_set(&sys, 2.0, 1e-3).scaled(0.5).is_err());
        let s = scalar_set(&sys, 2.0, 1e-3).scaled(3.0).unwrap();
        assert_eq!(s.beta, 3e-3);
        assert!(check_ctrl_gramian(&sys, &s).unwrap().all_satisfied());
    }
}
