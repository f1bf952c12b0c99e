//! Truncation of balanced realizations.
//!
//! Each slot keeps the leading `r` states of its balanced coordinates.
//! Every block of `A`, `B`, `C` is cut to its leading rows (retained states
//! at `t+1`) and columns (retained states at `t`). Edges that keep no state
//! at any representative time are removed from the graph.

use serde::Serialize;

use crate::balance::{check_ctrl_gramian, check_obs_gramian, BalancedRealization, GramianSet};
use crate::bounds::{OmegaSet, OmegaSlot, SlotName, DEFAULT_EQUALITY_TOLERANCE};
use crate::lmi::ResidualReport;
use crate::sysmodel::{DirectedGraph, DistributedSystem, Slot, SlotMap, SubsystemMatrices};
use crate::{Error, Matrix, Result};

/// Retained state counts per slot and representative time.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationPlan {
    pub retained: SlotMap<usize>,
}

impl TruncationPlan {
    /// Keeps everything.
    pub fn full(system: &DistributedSystem) -> Self {
        Self { retained: SlotMap::build(system, |slot, t| system.dims().slot_dim(slot, t)) }
    }

    pub fn retained(&self, slot: Slot, t: usize) -> usize {
        *self.retained.get(slot, t)
    }

    /// Representative times at which `slot` loses states.
    pub fn truncation_times(&self, system: &DistributedSystem, slot: Slot) -> Vec<usize> {
        (0..system.schedule().len()).filter(|&t| self.retained(slot, t) != system.dims().slot_dim(slot, t)).collect()
    }

    /// Number of removed states per representative time.
    pub fn truncated_counts(&self, system: &DistributedSystem) -> Vec<usize> {
        (0..system.schedule().len())
            .map(|t| self.retained.slots().map(|s| system.dims().slot_dim(s, t) - self.retained(s, t)).sum())
            .collect()
    }

    /// Slot-wise minimum of two plans.
    pub fn intersect(&self, other: &TruncationPlan) -> Self {
        Self { retained: self.retained.map(|slot, t, &r| r.min(other.retained(slot, t))) }
    }

    fn check(&self, system: &DistributedSystem) -> Result<()> {
        if self.retained.schedule() != system.schedule()
            || self.retained.vertex_count() != system.vertex_count()
            || self.retained.edge_count() != system.graph().edge_count()
        {
            return Err(Error::Dimension("truncation plan does not match the system's graph or schedule".into()));
        }
        for (slot, t, &r) in self.retained.iter() {
            let n = system.dims().slot_dim(slot, t);
            if r > n {
                return Err(Error::Dimension(format!(
                    "plan keeps {r} of {n} states of {} at t={t}",
                    slot.label(system.graph())
                )));
            }
        }
        Ok(())
    }
}

/// Keeps, per slot, the entries of sigma strictly greater than `threshold`.
pub fn select_plan(realization: &BalancedRealization, threshold: f64) -> Result<TruncationPlan> {
    if !(threshold >= 0.0) {
        return Err(Error::Precondition(format!("truncation threshold {threshold} must be nonnegative")));
    }
    let retained = realization.sigma.matrices.map(|_, _, m| m.diagonal().iter().filter(|&&v| v > threshold).count());
    Ok(TruncationPlan { retained })
}

/// Retained (`gamma`) and truncated (`omega`) parts of sigma.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationSplit {
    /// Leading diagonal blocks, indexed by the reduced system's slots.
    pub gamma: GramianSet,
    pub omega: OmegaSet,
}

/// Cuts a balanced realization down to `plan`.
pub fn truncate(realization: &BalancedRealization, plan: &TruncationPlan) -> Result<(DistributedSystem, TruncationSplit)> {
    let system = &realization.system;
    plan.check(system)?;
    let g = system.graph();
    let sched = system.schedule();
    let len = sched.len();

    let kept: Vec<bool> = (0..g.edge_count()).map(|e| (0..len).any(|t| plan.retained(Slot::Spatial(e), t) > 0)).collect();
    let reduced_graph = DirectedGraph::new(
        g.vertex_count(),
        g.edges().iter().zip(&kept).filter(|(_, &k)| k).map(|(e, _)| (e.from, e.to)),
    )?;

    let mut slices = Vec::with_capacity(g.vertex_count());
    for k in 0..g.vertex_count() {
        let rows: Vec<(usize, Slot)> = std::iter::once((0, Slot::Temporal(k)))
            .chain(g.out_edges(k).iter().enumerate().map(|(i, &e)| (i + 1, Slot::Spatial(e))))
            .filter(|(_, s)| !matches!(s, Slot::Spatial(e) if !kept[*e]))
            .collect();
        let cols: Vec<(usize, Slot)> = std::iter::once((0, Slot::Temporal(k)))
            .chain(g.in_edges(k).iter().enumerate().map(|(i, &e)| (i + 1, Slot::Spatial(e))))
            .filter(|(_, s)| !matches!(s, Slot::Spatial(e) if !kept[*e]))
            .collect();
        let mut per_t = Vec::with_capacity(len);
        for t in 0..len {
            let m = system.slice(k, t);
            let next = sched.next(t);
            let nr: Vec<usize> = rows.iter().map(|&(_, s)| plan.retained(s, next)).collect();
            let nc: Vec<usize> = cols.iter().map(|&(_, s)| plan.retained(s, t)).collect();
            let cut = |block: Matrix, r: usize, c: usize| block.view((0, 0), (r, c)).into_owned();
            let a: Vec<Vec<Matrix>> = rows
                .iter()
                .zip(&nr)
                .map(|(&(ri, _), &r)| cols.iter().zip(&nc).map(|(&(ci, _), &c)| cut(m.a_block(ri, ci), r, c)).collect())
                .collect();
            let b: Vec<Matrix> = rows.iter().zip(&nr).map(|(&(ri, _), &r)| cut(m.b_block(ri), r, m.b.ncols())).collect();
            let c: Vec<Matrix> = cols.iter().zip(&nc).map(|(&(ci, _), &c)| cut(m.c_block(ci), m.c.nrows(), c)).collect();
            per_t.push(SubsystemMatrices::from_blocks(&a, &b, &c, m.d.clone())?);
        }
        slices.push(per_t);
    }
    let reduced = DistributedSystem::new(reduced_graph, sched, slices)?;

    let original_slot = |slot: Slot| match slot {
        Slot::Temporal(k) => Slot::Temporal(k),
        Slot::Spatial(e) => {
            let edge = reduced.graph().edge(e);
            Slot::Spatial(g.edge_index(edge.from, edge.to).expect("reduced edges come from the original graph"))
        }
    };
    let sigma = &realization.sigma;
    let gamma = GramianSet {
        matrices: SlotMap::build(&reduced, |slot, t| {
            let r = plan.retained(original_slot(slot), t);
            sigma.get(original_slot(slot), t).view((0, 0), (r, r)).into_owned()
        }),
        beta: sigma.beta,
    };
    let omega_slots = plan
        .retained
        .slots()
        .map(|slot| OmegaSlot {
            slot: SlotName::of(slot, g),
            entries: (0..len)
                .map(|t| sigma.diagonal(slot, t)[plan.retained(slot, t)..].to_vec())
                .collect(),
        })
        .collect();
    let omega = OmegaSet::new(sched, DEFAULT_EQUALITY_TOLERANCE, omega_slots)?;
    Ok((reduced, TruncationSplit { gamma, omega }))
}

/// Both generalized Lyapunov inequalities of the reduced system at `gamma`
/// with margin `beta`.
pub fn verify_reduced(reduced: &DistributedSystem, split: &TruncationSplit, beta: f64) -> Result<ResidualReport> {
    let gamma = GramianSet { matrices: split.gamma.matrices.clone(), beta };
    let mut report = check_ctrl_gramian(reduced, &gamma)?;
    report.residuals.extend(check_obs_gramian(reduced, &gamma)?.residuals);
    Ok(report)
}

/// Per-slot dimension summary of a reduced system, for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetainedDimensions {
    pub slot: SlotName,
    pub retained: Vec<usize>,
    pub full: Vec<usize>,
}

pub fn retained_dimensions(system: &DistributedSystem, plan: &TruncationPlan) -> Vec<RetainedDimensions> {
    let len = system.schedule().len();
    plan.retained
        .slots()
        .map(|slot| RetainedDimensions {
            slot: SlotName::of(slot, system.graph()),
            retained: (0..len).map(|t| plan.retained(slot, t)).collect(),
            full: (0..len).map(|t| system.dims().slot_dim(slot, t)).collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balance::{check_balanced, GramianSet};
    use crate::sysmodel::tests::scalar_system;
    use crate::sysmodel::EtpSchedule;
    use crate::Vector;

    fn diag(values: &[f64]) -> Matrix {
        Matrix::from_diagonal(&Vector::from_row_slice(values))
    }

    /// Two vertices, edge 1 -> 2, two temporal and one spatial state each,
    /// balanced by a hand-picked diagonal sigma that satisfies both
    /// inequalities with margin.
    fn two_vertex() -> BalancedRealization {
        let graph = DirectedGraph::new(2, [(0, 1)]).unwrap();
        let a0 = Matrix::from_row_slice(2, 2, &[0.3, 0.1, 0.0, 0.2]);
        let sender = SubsystemMatrices::from_blocks(
            &[vec![a0.clone()], vec![Matrix::from_row_slice(1, 2, &[0.2, 0.05])]],
            &[Matrix::from_row_slice(2, 1, &[0.5, 0.1]), Matrix::from_element(1, 1, 0.2)],
            &[Matrix::from_row_slice(1, 2, &[0.4, 0.1])],
            Matrix::zeros(1, 1),
        )
        .unwrap();
        let receiver = SubsystemMatrices::from_blocks(
            &[vec![a0, Matrix::from_row_slice(2, 1, &[0.1, 0.05])]],
            &[Matrix::from_row_slice(2, 1, &[0.3, 0.2])],
            &[Matrix::from_row_slice(1, 2, &[0.5, 0.2]), Matrix::from_element(1, 1, 0.3)],
            Matrix::zeros(1, 1),
        )
        .unwrap();
        let sys = DistributedSystem::new(graph, EtpSchedule::new(0, 1).unwrap(), vec![vec![sender], vec![receiver]])
            .unwrap();
        let sigma = GramianSet {
            matrices: SlotMap::build(&sys, |slot, _| match slot {
                Slot::Temporal(_) => diag(&[1.0, 0.5]),
                Slot::Spatial(_) => diag(&[0.6]),
            }),
            beta: 1e-3,
        };
        BalancedRealization::from_diagonal(&sys, &sigma).unwrap()
    }

    #[test]
    fn two_vertex_sigma_is_a_valid_gramian_pair() {
        let r = two_vertex();
        let report = check_balanced(&r).unwrap();
        assert!(report.ctrl.all_satisfied() && report.obs.all_satisfied(), "{report:?}");
    }

    #[test]
    fn threshold_counts_strictly_greater_entries() {
        let r = two_vertex();
        let plan = select_plan(&r, 0.5).unwrap();
        assert_eq!(plan.retained(Slot::Temporal(0), 0), 1);
        assert_eq!(plan.retained(Slot::Spatial(0), 0), 1);
        assert_eq!(select_plan(&r, 0.0).unwrap(), TruncationPlan::full(&r.system));
        assert!(select_plan(&r, -1.0).is_err());
    }

    #[test]
    fn full_plan_is_identity() {
        let r = two_vertex();
        let (reduced, split) = truncate(&r, &TruncationPlan::full(&r.system)).unwrap();
        assert_eq!(reduced, r.system);
        assert!(split.omega.is_empty());
        assert_eq!(split.gamma.matrices, r.sigma.matrices);
    }

    #[test]
    fn dropping_the_edge_removes_it_from_the_graph() {
        let r = two_vertex();
        let plan = select_plan(&r, 0.7).unwrap();
        let (reduced, split) = truncate(&r, &plan).unwrap();
        assert_eq!(reduced.graph().edge_count(), 0);
        assert_eq!(reduced.slice(0, 0).a.shape(), (1, 1));
        assert_eq!(reduced.slice(1, 0).a.shape(), (1, 1));
        assert_eq!(reduced.slice(1, 0).a[(0, 0)], 0.3);
        assert_eq!(split.omega.counts_per_time(), vec![3]);
        assert!(verify_reduced(&reduced, &split, 1e-3).unwrap().all_satisfied());
    }

    #[test]
    fn perturbed_reduced_system_fails_verification() {
        let r = two_vertex();
        let plan = select_plan(&r, 0.55).unwrap();
        let (reduced, split) = truncate(&r, &plan).unwrap();
        assert!(verify_reduced(&reduced, &split, 1e-3).unwrap().all_satisfied());
        let mut slices = reduced.slices().to_vec();
        slices[0][0].a[(0, 0)] += 1.0;
        let broken = DistributedSystem::new(reduced.graph().clone(), reduced.schedule(), slices).unwrap();
        assert!(!verify_reduced(&broken, &split, 1e-3).unwrap().all_satisfied());
    }

    #[test]
    fn total_truncation_leaves_feedthrough_only() {
        let sys = scalar_system(0.5, 1.0, 1.0, 0.25);
        let sigma = GramianSet { matrices: SlotMap::build(&sys, |_, _| diag(&[4.0 / 3.0])), beta: 1e-6 };
        let r = BalancedRealization::from_diagonal(&sys, &sigma).unwrap();
        let (reduced, split) = truncate(&r, &select_plan(&r, 2.0).unwrap()).unwrap();
        assert_eq!(reduced.slice(0, 0).a.shape(), (0, 0));
        assert_eq!(reduced.slice(0, 0).d[(0, 0)], 0.25);
        assert_eq!(split.omega.values().collect::<Vec<_>>(), vec![4.0 / 3.0]);
    }

    #[test]
    fn two_step_truncation_equals_one_step() {
        let r = two_vertex();
        let coarse = select_plan(&r, 0.55).unwrap();
        let fine = select_plan(&r, 0.8).unwrap();
        let (once, _) = truncate(&r, &fine).unwrap();
        let (mid, split) = truncate(&r, &coarse).unwrap();
        let mid_r = BalancedRealization::from_diagonal(&mid, &split.gamma).unwrap();
        let (twice, _) = truncate(&mid_r, &select_plan(&mid_r, 0.8).unwrap()).unwrap();
        assert_eq!(once, twice);
        assert_eq!(fine.intersect(&coarse), fine);
    }

    #[test]
    fn mismatched_plan_is_rejected() {
        let r = two_vertex();
        let mut plan = TruncationPlan::full(&r.system);
        *plan.retained.get_mut(Slot::Temporal(0), 0) = 3;
        assert!(truncate(&r, &plan).is_err());
    }
}
