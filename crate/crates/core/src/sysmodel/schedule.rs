use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Eventually time-periodic schedule: arbitrary on `[0, h)`, `q`-periodic after.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EtpSchedule {
    horizon: usize,
    period: usize,
}

impl EtpSchedule {
    pub fn new(horizon: usize, period: usize) -> Result<Self> {
        if period == 0 {
            return Err(Error::Precondition("ETP period must be positive".into()));
        }
        Ok(Self { horizon, period })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn period(&self) -> usize {
        self.period
    }

    /// Number of representative time indices, `h + q`.
    pub fn len(&self) -> usize {
        self.horizon + self.period
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Canonical index of time `t`.
    pub fn index(&self, t: usize) -> usize {
        if t < self.len() {
            t
        } else {
            self.horizon + (t - self.horizon) % self.period
        }
    }

    /// Representative index of `t + 1`; wraps from `h + q - 1` to `h`.
    pub fn next(&self, t: usize) -> usize {
        self.index(t + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wraparound_lands_on_horizon() {
        let s = EtpSchedule::new(3, 4).unwrap();
        assert_eq!(s.next(6), 3);
        assert_eq!(s.index(7), 3);
        assert_eq!(s.index(12), 4);
        assert_eq!(EtpSchedule::new(0, 28).unwrap().next(27), 0);
    }

    proptest! {
        #[test]
        fn canonical_index_is_idempotent(h in 0usize..10, q in 1usize..10, t in 0usize..1000) {
            let s = EtpSchedule::new(h, q).unwrap();
            let i = s.index(t);
            prop_assert!(i < s.len());
            prop_assert_eq!(s.index(i), i);
            if t < h + q { prop_assert_eq!(i, t); }
            if t >= h { prop_assert_eq!(s.index(t + q), i); }
        }
    }
}
