//! Zone-of-tolerance satisfaction model.
//!
//! QoS is a scalar rate in Mb/s. A [`ZoTProfile`] holds the demanded rate of
//! the requested service and the five adequate rates `q_a1..=q_a5`; level `i`
//! is reached as soon as the provided rate is at least `q_ai`. The level-`i`
//! zone of tolerance is the half-open interval `[q_ai, q_a(i+1))` for `i < 5`
//! and the closed interval `[q_a5, demand]` for level 5.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_LEVELS: usize = 5;

/// Discrete satisfaction on the 1..=5 scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct SatisfactionLevel(u8);

impl SatisfactionLevel {
    pub const MIN: SatisfactionLevel = SatisfactionLevel(1);
    pub const MAX: SatisfactionLevel = SatisfactionLevel(5);

    pub fn new(value: u8) -> Result<Self> {
        if (1..=NUM_LEVELS as u8).contains(&value) {
            Ok(SatisfactionLevel(value))
        } else {
            Err(Error::InvalidLevel(value))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Zero-based position in threshold arrays.
    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }

    pub fn all() -> impl Iterator<Item = SatisfactionLevel> {
        (1..=NUM_LEVELS as u8).map(SatisfactionLevel)
    }

    pub(crate) fn from_index(index: usize) -> Self {
        debug_assert!(index < NUM_LEVELS);
        SatisfactionLevel(index as u8 + 1)
    }
}

impl TryFrom<u8> for SatisfactionLevel {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        SatisfactionLevel::new(value)
    }
}

impl From<SatisfactionLevel> for u8 {
    fn from(level: SatisfactionLevel) -> u8 {
        level.0
    }
}

impl fmt::Display for SatisfactionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Demanded rate plus the adequate rate of every satisfaction level, in Mb/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoTProfile {
    qos_demand: f64,
    adequate: [f64; NUM_LEVELS],
}

impl ZoTProfile {
    /// Builds a profile, rejecting anything that violates the invariants:
    /// `q_a1 = 0`, non-decreasing thresholds, `q_a5 <= demand`, finite and
    /// non-negative rates.
    pub fn new(qos_demand: f64, adequate: [f64; NUM_LEVELS]) -> Result<Self> {
        if !qos_demand.is_finite() || qos_demand < 0.0 {
            return Err(Error::InvalidProfile(format!("demand {qos_demand} must be finite and >= 0")));
        }
        if adequate.iter().any(|q| !q.is_finite() || *q < 0.0) {
            return Err(Error::InvalidProfile(format!("thresholds {adequate:?} must be finite and >= 0")));
        }
        if adequate[0] != 0.0 {
            return Err(Error::InvalidProfile(format!("q_a1 must be 0, got {}", adequate[0])));
        }
        if adequate.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidProfile(format!("thresholds {adequate:?} must be non-decreasing")));
        }
        if adequate[NUM_LEVELS - 1] > qos_demand {
            return Err(Error::InvalidProfile(format!(
                "q_a5 {} exceeds demand {qos_demand}",
                adequate[NUM_LEVELS - 1]
            )));
        }
        Ok(ZoTProfile { qos_demand, adequate })
    }

    /// Maps an arbitrary threshold vector onto the invariant set: sorted
    /// ascending, clamped to `[0, demand]`, with the level-1 floor at zero.
    pub fn project(qos_demand: f64, raw: [f64; NUM_LEVELS]) -> Self {
        let demand = if qos_demand.is_finite() { qos_demand.max(0.0) } else { 0.0 };
        let mut adequate = raw.map(|q| if q.is_nan() { 0.0 } else { q.clamp(0.0, demand) });
        adequate.sort_by(f64::total_cmp);
        adequate[0] = 0.0;
        ZoTProfile {
            qos_demand: demand,
            adequate,
        }
    }

    pub fn qos_demand(&self) -> f64 {
        self.qos_demand
    }

    pub fn adequate(&self) -> &[f64; NUM_LEVELS] {
        &self.adequate
    }

    pub fn threshold(&self, level: SatisfactionLevel) -> f64 {
        self.adequate[level.index()]
    }

    pub fn satisfaction_of(&self, qos_p: f64) -> SatisfactionLevel {
        satisfaction_of(self, qos_p)
    }
}

/// Gap between demanded and provided rate, never negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Delta(f64);

impl Delta {
    pub fn mbps(self) -> f64 {
        self.0
    }
}

/// Largest level whose adequate rate is reached by `qos_p`.
pub fn satisfaction_of(profile: &ZoTProfile, qos_p: f64) -> SatisfactionLevel {
    let level = profile.adequate.iter().rposition(|&q| qos_p >= q).unwrap_or(0);
    SatisfactionLevel::from_index(level)
}

pub fn zot_bounds(profile: &ZoTProfile, level: SatisfactionLevel) -> (f64, f64) {
    let i = level.index();
    let lo = profile.adequate[i];
    let hi = if i + 1 < NUM_LEVELS {
        profile.adequate[i + 1]
    } else {
        profile.qos_demand
    };
    (lo, hi)
}

pub fn delta_of(profile: &ZoTProfile, qos_p: f64) -> Delta {
    Delta((profile.qos_demand - qos_p).max(0.0))
}

/// Smallest provided rate that reaches `target`.
pub fn min_qos_for(profile: &ZoTProfile, target: SatisfactionLevel) -> f64 {
    profile.threshold(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lvl(v: u8) -> SatisfactionLevel {
        SatisfactionLevel::new(v).unwrap()
    }

    fn c1() -> ZoTProfile {
        ZoTProfile::new(5.0, [0.0, 0.5, 1.0, 1.5, 2.0]).unwrap()
    }

    fn c2() -> ZoTProfile {
        ZoTProfile::new(5.0, [0.0, 3.2, 3.5, 3.8, 4.0]).unwrap()
    }

    // Oracle: scan levels top-down and return the first reached one.
    fn scan_oracle(profile: &ZoTProfile, qos_p: f64) -> u8 {
        for i in (1..=5u8).rev() {
            if qos_p >= profile.adequate()[(i - 1) as usize] {
                return i;
            }
        }
        1
    }

    prop_compose! {
        fn arb_profile()(demand in 0.01f64..50.0, fracs in prop::array::uniform4(0.0f64..1.0)) -> ZoTProfile {
            let mut f = fracs;
            f.sort_by(f64::total_cmp);
            ZoTProfile::new(demand, [0.0, f[0] * demand, f[1] * demand, f[2] * demand, f[3] * demand]).unwrap()
        }
    }

    #[test]
    fn level_bounds() {
        assert!(SatisfactionLevel::new(0).is_err());
        assert!(SatisfactionLevel::new(6).is_err());
        assert_eq!(SatisfactionLevel::all().count(), 5);
    }

    #[test]
    fn profile_invariants_are_enforced() {
        assert!(ZoTProfile::new(5.0, [0.1, 1.0, 2.0, 3.0, 4.0]).is_err());
        assert!(ZoTProfile::new(5.0, [0.0, 2.0, 1.0, 3.0, 4.0]).is_err());
        assert!(ZoTProfile::new(5.0, [0.0, 1.0, 2.0, 3.0, 5.5]).is_err());
        assert!(ZoTProfile::new(-1.0, [0.0; 5]).is_err());
        assert!(ZoTProfile::new(5.0, [0.0, 1.0, f64::NAN, 3.0, 4.0]).is_err());
        assert!(ZoTProfile::new(5.0, [0.0, 0.0, 0.0, 5.0, 5.0]).is_ok());
    }

    #[test]
    fn context_c1_two_mbps_is_enough() {
        assert_eq!(satisfaction_of(&c1(), 2.0), lvl(5));
        assert_eq!(zot_bounds(&c1(), lvl(5)), (2.0, 5.0));
        assert_eq!(delta_of(&c1(), 2.0).mbps(), 3.0);
    }

    #[test]
    fn context_c2_needs_four_mbps() {
        assert_eq!(satisfaction_of(&c2(), 3.0), lvl(1));
        assert_eq!(satisfaction_of(&c2(), 4.0), lvl(5));
        assert_eq!(min_qos_for(&c2(), lvl(5)), 4.0);
    }

    #[test]
    fn delta_edges() {
        assert_eq!(delta_of(&c1(), 5.0).mbps(), 0.0);
        assert_eq!(delta_of(&c1(), 7.0).mbps(), 0.0);
    }

    #[test]
    fn level_one_floor() {
        assert_eq!(zot_bounds(&c2(), lvl(1)), (0.0, 3.2));
        assert_eq!(min_qos_for(&c2(), lvl(1)), 0.0);
        assert_eq!(satisfaction_of(&c2(), 0.0), lvl(1));
    }

    #[test]
    fn projection_repairs_raw_vectors() {
        let p = ZoTProfile::project(5.0, [0.3, 6.0, 2.0, -1.0, 3.0]);
        assert_eq!(p.adequate(), &[0.0, 0.3, 2.0, 3.0, 5.0]);
        assert!(ZoTProfile::new(p.qos_demand(), *p.adequate()).is_ok());
    }

    proptest! {
        #[test]
        fn matches_linear_scan(p in arb_profile(), x in 0.0f64..1.2) {
            let q = x * p.qos_demand();
            prop_assert_eq!(satisfaction_of(&p, q).value(), scan_oracle(&p, q));
        }

        #[test]
        fn demand_is_always_level_five(p in arb_profile()) {
            prop_assert_eq!(satisfaction_of(&p, p.qos_demand()), SatisfactionLevel::MAX);
        }

        #[test]
        fn delta_never_negative_and_bounded(p in arb_profile(), x in 0.0f64..2.0) {
            let d = delta_of(&p, x * p.qos_demand()).mbps();
            prop_assert!(d >= 0.0 && d <= p.qos_demand());
        }

        #[test]
        fn projection_is_total(demand in 0.0f64..20.0, raw in prop::array::uniform5(-10.0f64..30.0)) {
            let p = ZoTProfile::project(demand, raw);
            prop_assert!(ZoTProfile::new(p.qos_demand(), *p.adequate()).is_ok());
        }
    }
}
