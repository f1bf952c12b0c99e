//! A priori bounds on the l2-induced norm of the truncation error.
//!
//! All bounds work on the truncated diagonal entries of a balanced
//! realization over the representative window:
//!
//! - [`bound_distinct`]: twice the sum of the distinct entries.
//! - [`bound_monotone`]: per slot, entries are peeled into stages whose
//!   weights are monotone in time after the hold rule; a monotone stage
//!   costs twice its supremum.
//! - [`bound_unit`]: the all-ones case.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::sysmodel::{DirectedGraph, EtpSchedule, Slot};
use crate::{Error, Result};

/// Default relative tolerance under which two entries count as equal.
pub const DEFAULT_EQUALITY_TOLERANCE: f64 = 1e-6;

/// A slot named by 1-based vertices, independent of any edge numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotName {
    Vertex(usize),
    Edge(usize, usize),
}

impl SlotName {
    pub fn of(slot: Slot, graph: &DirectedGraph) -> Self {
        match slot {
            Slot::Temporal(k) => SlotName::Vertex(k + 1),
            Slot::Spatial(e) => {
                let edge = graph.edge(e);
                SlotName::Edge(edge.from + 1, edge.to + 1)
            }
        }
    }
}

impl std::fmt::Display for SlotName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SlotName::Vertex(k) => write!(f, "vertex {k}"),
            SlotName::Edge(i, j) => write!(f, "edge ({i},{j})"),
        }
    }
}

/// Truncated entries of one slot, per representative time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaSlot {
    pub slot: SlotName,
    pub entries: Vec<Vec<f64>>,
}

/// Truncated diagonal entries of every slot over the representative window.
///
/// Slots are listed vertices first, then edges in lexicographic order.
/// Slots without any truncated entry are omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaSet {
    pub horizon: usize,
    pub period: usize,
    /// Relative tolerance for equality of entries.
    pub tolerance: f64,
    pub slots: Vec<OmegaSlot>,
}

impl OmegaSet {
    /// Validates lengths and positivity, and drops slots without entries.
    pub fn new(schedule: EtpSchedule, tolerance: f64, slots: Vec<OmegaSlot>) -> Result<Self> {
        if !(tolerance >= 0.0 && tolerance.is_finite()) {
            return Err(Error::Precondition(format!("equality tolerance {tolerance} must be finite and nonnegative")));
        }
        for s in &slots {
            if s.entries.len() != schedule.len() {
                return Err(Error::Dimension(format!(
                    "{}: {} time slices, expected {}",
                    s.slot,
                    s.entries.len(),
                    schedule.len()
                )));
            }
            if let Some(v) = s.entries.iter().flatten().find(|v| !(**v > 0.0 && v.is_finite())) {
                return Err(Error::Precondition(format!("{}: truncated entry {v} is not positive", s.slot)));
            }
        }
        let slots = slots.into_iter().filter(|s| s.entries.iter().any(|e| !e.is_empty())).collect();
        Ok(Self { horizon: schedule.horizon(), period: schedule.period(), tolerance, slots })
    }

    pub fn schedule(&self) -> Result<EtpSchedule> {
        EtpSchedule::new(self.horizon, self.period)
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Every truncated entry over the window.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.slots.iter().flat_map(|s| s.entries.iter().flatten().copied())
    }

    /// Number of truncated entries per representative time.
    pub fn counts_per_time(&self) -> Vec<usize> {
        (0..self.horizon + self.period).map(|t| self.slots.iter().map(|s| s.entries[t].len()).sum()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(crate::fmt::to_json_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: OmegaSet = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        Self::new(raw.schedule()?, raw.tolerance, raw.slots)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// `a` and `b` agree within `tolerance` relative to the larger magnitude.
pub fn nearly_equal(a: f64, b: f64, tolerance: f64) -> bool {
    (a - b).abs() <= tolerance * a.abs().max(b.abs())
}

/// Sum of the distinct values, where values within `tolerance` of the
/// smallest member of a class join that class. Each class contributes its
/// largest member.
pub fn zeta_of(values: impl IntoIterator<Item = f64>, tolerance: f64) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    let mut sum = 0.0;
    let mut i = 0;
    while i < v.len() {
        let start = v[i];
        let mut j = i + 1;
        while j < v.len() && nearly_equal(start, v[j], tolerance) {
            j += 1;
        }
        sum += v[j - 1];
        i = j;
    }
    sum
}

/// Sum of distinct truncated entries.
pub fn zeta(omega: &OmegaSet) -> f64 {
    zeta_of(omega.values(), omega.tolerance)
}

/// Twice the sum of distinct truncated entries over the window. Entries
/// repeat with the period, so the window covers every entry of the
/// infinite sequence.
pub fn bound_distinct(omega: &OmegaSet) -> f64 {
    2.0 * zeta(omega)
}

/// Extends values known on a set of times to `0..=last`: before the
/// earliest known time the earliest value holds; afterwards the most recent
/// known value holds.
pub fn extend_hold_rule(values: &BTreeMap<usize, f64>, last: usize) -> Result<Vec<f64>> {
    let (_, &first) = values.first_key_value().ok_or_else(|| Error::Precondition("hold rule needs at least one value".into()))?;
    let mut current = first;
    Ok((0..=last)
        .map(|t| {
            if let Some(&v) = values.get(&t) {
                current = v;
            }
            current
        })
        .collect())
}

/// Weight of one stage at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StagePoint {
    pub t: usize,
    pub weight: f64,
    /// Number of entries consumed at `t`.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage {
    pub points: Vec<StagePoint>,
    /// The hold-rule extension is monotone over the transient and two
    /// periods.
    pub monotone: bool,
    /// Supremum of the weights if monotone, else the sum of their distinct
    /// values.
    pub contribution: f64,
}

/// Peeled stages of one slot, smallest first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageDecomposition {
    pub slot: SlotName,
    pub stages: Vec<Stage>,
}

fn is_monotone(seq: &[f64], tolerance: f64) -> bool {
    let up = seq.windows(2).all(|w| w[1] >= w[0] || nearly_equal(w[0], w[1], tolerance));
    let down = seq.windows(2).all(|w| w[1] <= w[0] || nearly_equal(w[0], w[1], tolerance));
    up || down
}

/// Repeatedly takes, at every time that still has entries, the smallest
/// remaining entry together with its duplicates.
pub fn peel_stages(slot: &OmegaSlot, schedule: EtpSchedule, tolerance: f64) -> StageDecomposition {
    let mut remaining: Vec<Vec<f64>> = slot
        .entries
        .iter()
        .map(|e| {
            let mut e = e.clone();
            e.sort_by(|a, b| b.total_cmp(a));
            e
        })
        .collect();
    let last = schedule.horizon() + 2 * schedule.period() - 1;
    let mut stages = Vec::new();
    while remaining.iter().any(|r| !r.is_empty()) {
        let mut points = Vec::new();
        for (t, r) in remaining.iter_mut().enumerate() {
            let Some(&smallest) = r.last() else { continue };
            let mut weight = smallest;
            let mut count = 0;
            while let Some(&v) = r.last() {
                if !nearly_equal(smallest, v, tolerance) {
                    break;
                }
                weight = weight.max(v);
                count += 1;
                r.pop();
            }
            points.push(StagePoint { t, weight, count });
        }
        let by_rep: BTreeMap<usize, f64> = points.iter().map(|p| (p.t, p.weight)).collect();
        let known: BTreeMap<usize, f64> =
            (0..=last).filter_map(|t| by_rep.get(&schedule.index(t)).map(|&w| (t, w))).collect();
        let extended = extend_hold_rule(&known, last).expect("every stage has a point");
        let monotone = is_monotone(&extended, tolerance);
        let contribution = if monotone {
            points.iter().map(|p| p.weight).fold(0.0, f64::max)
        } else {
            zeta_of(points.iter().map(|p| p.weight), tolerance)
        };
        stages.push(Stage { points, monotone, contribution });
    }
    StageDecomposition { slot: slot.slot, stages }
}

/// Twice the summed stage contributions over all slots, capped by
/// [`bound_distinct`], together with the decompositions.
pub fn bound_monotone(omega: &OmegaSet) -> Result<(f64, Vec<StageDecomposition>)> {
    let report = error_bounds(omega)?;
    Ok((report.bound, report.stages))
}

/// Both bounds and the stage decompositions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBoundReport {
    pub distinct: f64,
    /// Staged total before capping.
    pub staged: f64,
    /// `min(distinct, staged)`.
    pub bound: f64,
    pub stages: Vec<StageDecomposition>,
}

pub fn error_bounds(omega: &OmegaSet) -> Result<ErrorBoundReport> {
    let schedule = omega.schedule()?;
    let stages: Vec<StageDecomposition> =
        omega.slots.iter().map(|s| peel_stages(s, schedule, omega.tolerance)).collect();
    let staged = 2.0 * stages.iter().flat_map(|d| &d.stages).map(|s| s.contribution).fold(0.0, |a, b| a + b);
    let distinct = bound_distinct(omega);
    Ok(ErrorBoundReport { distinct, staged, bound: distinct.min(staged), stages })
}

/// Bound 2 when every truncated entry is one; 0 when nothing is truncated.
pub fn bound_unit(omega: &OmegaSet) -> Result<f64> {
    if omega.is_empty() {
        return Ok(0.0);
    }
    match omega.values().find(|&v| !nearly_equal(v, 1.0, omega.tolerance)) {
        Some(v) => Err(Error::Precondition(format!("truncated entry {v} is not one"))),
        None => Ok(2.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Three times with no periodic repetition: the last holds forever.
    fn three_steps() -> EtpSchedule {
        EtpSchedule::new(2, 1).unwrap()
    }

    fn worked_example() -> OmegaSet {
        OmegaSet::new(
            three_steps(),
            DEFAULT_EQUALITY_TOLERANCE,
            vec![OmegaSlot {
                slot: SlotName::Vertex(1),
                entries: vec![vec![7.0, 3.0, 2.0], vec![4.0, 2.0, 2.0], vec![6.0, 5.0, 2.0]],
            }],
        )
        .unwrap()
    }

    fn single(entries: Vec<Vec<f64>>, schedule: EtpSchedule) -> OmegaSet {
        OmegaSet::new(schedule, DEFAULT_EQUALITY_TOLERANCE, vec![OmegaSlot { slot: SlotName::Vertex(1), entries }])
            .unwrap()
    }

    #[test]
    fn worked_example_bounds() {
        let omega = worked_example();
        assert_eq!(zeta(&omega), 27.0);
        assert_eq!(bound_distinct(&omega), 54.0);
        let (bound, stages) = bound_monotone(&omega).unwrap();
        assert_eq!(bound, 28.0);
        let weights: Vec<Vec<(usize, f64, usize)>> = stages[0]
            .stages
            .iter()
            .map(|s| s.points.iter().map(|p| (p.t, p.weight, p.count)).collect())
            .collect();
        assert_eq!(
            weights,
            vec![
                vec![(0, 2.0, 1), (1, 2.0, 2), (2, 2.0, 1)],
                vec![(0, 3.0, 1), (1, 4.0, 1), (2, 5.0, 1)],
                vec![(0, 7.0, 1), (2, 6.0, 1)],
            ]
        );
        assert!(stages[0].stages.iter().all(|s| s.monotone));
    }

    #[test]
    fn near_duplicates_collapse() {
        assert_eq!(zeta_of([2.0, 2.0 + 1e-12, 5.0], 1e-9), 2.0 + 1e-12 + 5.0);
        assert_eq!(zeta_of([], 1e-9), 0.0);
    }

    #[test]
    fn empty_omega_gives_zero() {
        let omega = OmegaSet::new(three_steps(), 1e-6, vec![]).unwrap();
        assert_eq!(bound_distinct(&omega), 0.0);
        assert_eq!(bound_monotone(&omega).unwrap().0, 0.0);
        assert_eq!(bound_unit(&omega).unwrap(), 0.0);
    }

    #[test]
    fn constant_entry_gives_twice_it() {
        let omega = single(vec![vec![0.25]; 3], three_steps());
        assert_eq!(bound_distinct(&omega), 0.5);
        assert_eq!(bound_monotone(&omega).unwrap().0, 0.5);
    }

    #[test]
    fn floor_everywhere_collapses() {
        let eps = 0.034;
        let slots = (1..=4)
            .map(|k| OmegaSlot { slot: SlotName::Vertex(k), entries: vec![vec![eps * (1.0 + 1e-9 * k as f64)]; 3] })
            .collect();
        let omega = OmegaSet::new(three_steps(), 1e-6, slots).unwrap();
        assert!((bound_distinct(&omega) - 2.0 * eps).abs() < 1e-9);
        assert!((bound_monotone(&omega).unwrap().0 - 2.0 * eps).abs() < 1e-9);
    }

    #[test]
    fn non_monotone_stage_falls_back() {
        let omega = single(vec![vec![3.0], vec![1.0], vec![3.0]], three_steps());
        let report = error_bounds(&omega).unwrap();
        let stage = &report.stages[0].stages[0];
        assert!(!stage.monotone);
        assert_eq!(stage.contribution, 4.0);
        assert_eq!(report.bound, 8.0);
        assert!(report.bound <= report.distinct);
    }

    #[test]
    fn periodic_stage_must_be_constant() {
        // 1, 2 repeating is not monotone; a single point per period is
        let periodic = EtpSchedule::new(0, 2).unwrap();
        let omega = single(vec![vec![1.0], vec![2.0]], periodic);
        assert!(!error_bounds(&omega).unwrap().stages[0].stages[0].monotone);
        let omega = single(vec![vec![], vec![2.0]], periodic);
        assert!(error_bounds(&omega).unwrap().stages[0].stages[0].monotone);
    }

    #[test]
    fn greedy_staging_can_tighten_when_entries_are_added() {
        let schedule = EtpSchedule::new(1, 1).unwrap();
        let before = single(vec![vec![3.0], vec![1.0, 0.5]], schedule);
        let after = single(vec![vec![3.0, 0.1], vec![1.0, 0.5]], schedule);
        assert_eq!(error_bounds(&before).unwrap().bound, 8.0);
        assert_eq!(error_bounds(&after).unwrap().bound, 7.0);
        assert!(bound_distinct(&after) > bound_distinct(&before));
    }

    #[test]
    fn hold_rule_examples() {
        let w: BTreeMap<usize, f64> = [(3, 1.0), (5, 2.0)].into();
        assert_eq!(extend_hold_rule(&w, 7).unwrap(), vec![1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
        let w: BTreeMap<usize, f64> = [(0, 4.5)].into();
        assert_eq!(extend_hold_rule(&w, 5).unwrap(), vec![4.5; 6]);
        let w: BTreeMap<usize, f64> = [(2, 1.0), (4, 2.0), (9, 3.0)].into();
        assert_eq!(extend_hold_rule(&w, 8).unwrap()[8], 2.0);
        assert!(extend_hold_rule(&BTreeMap::new(), 3).is_err());
    }

    #[test]
    fn unit_bound() {
        let ones = single(vec![vec![1.0, 1.0]; 3], three_steps());
        assert_eq!(bound_unit(&ones).unwrap(), 2.0);
        let not = single(vec![vec![1.0], vec![1.5], vec![1.0]], three_steps());
        assert!(bound_unit(&not).is_err());
    }

    #[test]
    fn file_round_trip_and_validation() {
        let omega = worked_example();
        assert_eq!(OmegaSet::from_json(&omega.to_json().unwrap()).unwrap(), omega);
        assert!(OmegaSet::from_json(r#"{"horizon":0,"period":1,"tolerance":1e-6,"slots":[{"slot":{"vertex":1},"entries":[[-1.0]]}]}"#).is_err());
        assert!(OmegaSet::from_json(r#"{"horizon":0,"period":2,"tolerance":1e-6,"slots":[{"slot":{"edge":[1,2]},"entries":[[1.0]]}]}"#).is_err());
    }

    fn omega_strategy() -> impl Strategy<Value = OmegaSet> {
        (0usize..3, 1usize..4).prop_flat_map(|(h, q)| {
            let len = h + q;
            prop::collection::vec(
                prop::collection::vec(prop::collection::vec(prop::sample::select(vec![0.5, 1.0, 2.0, 3.0, 7.0]), 0..4), len),
                1..4,
            )
            .prop_map(move |slots| {
                let slots = slots
                    .into_iter()
                    .enumerate()
                    .map(|(k, entries)| OmegaSlot { slot: SlotName::Vertex(k + 1), entries })
                    .collect();
                OmegaSet::new(EtpSchedule::new(h, q).unwrap(), DEFAULT_EQUALITY_TOLERANCE, slots).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn capped_bound_never_exceeds_distinct(omega in omega_strategy()) {
            let r = error_bounds(&omega).unwrap();
            prop_assert!(r.bound <= r.distinct);
            prop_assert!(r.bound >= 0.0);
        }

        #[test]
        fn bounds_scale_linearly(omega in omega_strategy(), lambda in 0.1f64..10.0) {
            let mut scaled = omega.clone();
            for s in &mut scaled.slots {
                for v in s.entries.iter_mut().flatten() {
                    *v *= lambda;
                }
            }
            let (a, b) = (error_bounds(&omega).unwrap(), error_bounds(&scaled).unwrap());
            prop_assert!((b.distinct - lambda * a.distinct).abs() <= 1e-12 * b.distinct.max(1.0));
            prop_assert!((b.bound - lambda * a.bound).abs() <= 1e-12 * b.bound.max(1.0));
        }

        #[test]
        fn permuting_within_a_slice_is_harmless(omega in omega_strategy()) {
            let mut rev = omega.clone();
            for s in &mut rev.slots {
                for e in &mut s.entries {
                    e.reverse();
                }
            }
            prop_assert_eq!(error_bounds(&omega).unwrap().bound, error_bounds(&rev).unwrap().bound);
        }

        #[test]
        fn adding_an_entry_never_lowers_distinct(omega in omega_strategy(), extra in 0.1f64..9.0) {
            let mut more = omega.clone();
            if more.slots.is_empty() {
                more.slots.push(OmegaSlot { slot: SlotName::Vertex(1), entries: vec![vec![]; omega.horizon + omega.period] });
            }
            more.slots[0].entries[0].push(extra);
            prop_assert!(bound_distinct(&more) >= bound_distinct(&omega));
        }
    }
}
