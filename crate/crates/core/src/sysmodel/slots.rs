use super::{DistributedSystem, EtpSchedule, Slot};

/// One value per slot and representative time.
///
/// Lookups at arbitrary times go through the canonical index map, so the
/// map describes an ETP sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotMap<V> {
    schedule: EtpSchedule,
    temporal: Vec<Vec<V>>,
    spatial: Vec<Vec<V>>,
}

impl<V> SlotMap<V> {
    /// `temporal[k][t]` and `spatial[e][t]` over the representative window.
    pub fn new(schedule: EtpSchedule, temporal: Vec<Vec<V>>, spatial: Vec<Vec<V>>) -> Self {
        debug_assert!(temporal.iter().chain(&spatial).all(|v| v.len() == schedule.len()));
        Self { schedule, temporal, spatial }
    }

    /// Fills every slot of `system` with `f(slot, t)`.
    pub fn build(system: &DistributedSystem, mut f: impl FnMut(Slot, usize) -> V) -> Self {
        let schedule = system.schedule();
        let len = schedule.len();
        let temporal = (0..system.vertex_count()).map(|k| (0..len).map(|t| f(Slot::Temporal(k), t)).collect()).collect();
        let spatial =
            (0..system.graph().edge_count()).map(|e| (0..len).map(|t| f(Slot::Spatial(e), t)).collect()).collect();
        Self { schedule, temporal, spatial }
    }

    /// Fallible variant of [`build`](Self::build).
    pub fn try_build<E>(
        system: &DistributedSystem,
        mut f: impl FnMut(Slot, usize) -> Result<V, E>,
    ) -> Result<Self, E> {
        let schedule = system.schedule();
        let len = schedule.len();
        let mut temporal = Vec::with_capacity(system.vertex_count());
        for k in 0..system.vertex_count() {
            temporal.push((0..len).map(|t| f(Slot::Temporal(k), t)).collect::<Result<Vec<_>, E>>()?);
        }
        let mut spatial = Vec::with_capacity(system.graph().edge_count());
        for e in 0..system.graph().edge_count() {
            spatial.push((0..len).map(|t| f(Slot::Spatial(e), t)).collect::<Result<Vec<_>, E>>()?);
        }
        Ok(Self { schedule, temporal, spatial })
    }

    pub fn schedule(&self) -> EtpSchedule {
        self.schedule
    }

    pub fn vertex_count(&self) -> usize {
        self.temporal.len()
    }

    pub fn edge_count(&self) -> usize {
        self.spatial.len()
    }

    /// Value at an arbitrary time.
    pub fn get(&self, slot: Slot, t: usize) -> &V {
        let t = self.schedule.index(t);
        match slot {
            Slot::Temporal(k) => &self.temporal[k][t],
            Slot::Spatial(e) => &self.spatial[e][t],
        }
    }

    pub fn get_mut(&mut self, slot: Slot, t: usize) -> &mut V {
        let t = self.schedule.index(t);
        match slot {
            Slot::Temporal(k) => &mut self.temporal[k][t],
            Slot::Spatial(e) => &mut self.spatial[e][t],
        }
    }

    /// Slots in canonical order: vertices, then edges.
    pub fn slots(&self) -> impl Iterator<Item = Slot> {
        (0..self.temporal.len()).map(Slot::Temporal).chain((0..self.spatial.len()).map(Slot::Spatial))
    }

    /// `(slot, t, value)` over the representative window, slot-major.
    pub fn iter(&self) -> impl Iterator<Item = (Slot, usize, &V)> {
        let temporal =
            self.temporal.iter().enumerate().flat_map(|(k, v)| v.iter().enumerate().map(move |(t, x)| (Slot::Temporal(k), t, x)));
        let spatial =
            self.spatial.iter().enumerate().flat_map(|(e, v)| v.iter().enumerate().map(move |(t, x)| (Slot::Spatial(e), t, x)));
        temporal.chain(spatial)
    }

    pub fn map<W>(&self, mut f: impl FnMut(Slot, usize, &V) -> W) -> SlotMap<W> {
        let temporal = self
            .temporal
            .iter()
            .enumerate()
            .map(|(k, v)| v.iter().enumerate().map(|(t, x)| f(Slot::Temporal(k), t, x)).collect())
            .collect();
        let spatial = self
            .spatial
            .iter()
            .enumerate()
            .map(|(e, v)| v.iter().enumerate().map(|(t, x)| f(Slot::Spatial(e), t, x)).collect())
            .collect();
        SlotMap { schedule: self.schedule, temporal, spatial }
    }
}
