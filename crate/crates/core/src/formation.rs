//! Utilities, the counter-clockwise ring of active robots, angular gaps and
//! the formation guidelines that turn utilities into desired spacing.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::reduce_angle;

/// Index of a robot in its scenario, zero-based. Displayed one-based (`r1`, `r2`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct RobotId(pub usize);

impl RobotId {
    pub fn label(self) -> usize {
        self.0 + 1
    }
}

impl fmt::Display for RobotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.label())
    }
}

/// Non-negative weight of a robot in the formation. Zero means the robot has
/// left the formation.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Utility(f64);

impl Utility {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidScenario(format!(
                "utility must be finite and non-negative, got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_active(self) -> bool {
        self.0 > 0.0
    }
}

/// Rule mapping the utilities around the ring to desired angular gaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Guideline {
    /// Equal capture time at every best fleeing point: gap `i` proportional to `mu_i + mu_{i+}`.
    Fg1,
    /// Gap `i` proportional to `mu_i`.
    Fg2,
}

impl Guideline {
    pub const ALL: [Guideline; 2] = [Guideline::Fg1, Guideline::Fg2];

    /// Unnormalised desired gap of ring slot `k` given ring-ordered utilities.
    pub fn gap_weight(self, mu: &[f64], k: usize) -> f64 {
        match self {
            Guideline::Fg1 => mu[k] + mu[(k + 1) % mu.len()],
            Guideline::Fg2 => mu[k],
        }
    }

    pub fn gap_weights(self, mu: &[f64]) -> Vec<f64> {
        (0..mu.len()).map(|k| self.gap_weight(mu, k)).collect()
    }

    /// The f-function: desired gap for every ring slot, summing to 2pi.
    pub fn desired_spacing(self, mu: &[f64]) -> SpacingVector {
        let weights = self.gap_weights(mu);
        let total: f64 = weights.iter().sum();
        SpacingVector(weights.iter().map(|w| TAU * w / total).collect())
    }

    /// Fraction of the span between a robot's two neighbours at which its
    /// desired angle sits, measured from the clockwise neighbour.
    ///
    /// Only the three utilities a robot can observe locally enter.
    pub fn forward_weight(self, mu_minus: f64, mu_self: f64, mu_plus: f64) -> f64 {
        match self {
            Guideline::Fg1 => (mu_minus + mu_self) / (mu_plus + 2.0 * mu_self + mu_minus),
            Guideline::Fg2 => mu_minus / (mu_minus + mu_self),
        }
    }
}

impl fmt::Display for Guideline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guideline::Fg1 => f.write_str("fg1"),
            Guideline::Fg2 => f.write_str("fg2"),
        }
    }
}

pub fn desired_spacing_fg1(mu: &[f64]) -> SpacingVector {
    Guideline::Fg1.desired_spacing(mu)
}

pub fn desired_spacing_fg2(mu: &[f64]) -> SpacingVector {
    Guideline::Fg2.desired_spacing(mu)
}

/// Angular gaps, one per ring slot, in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacingVector(pub Vec<f64>);

impl SpacingVector {
    pub fn deltas(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn degrees(&self) -> Vec<f64> {
        self.0.iter().map(|d| d.to_degrees()).collect()
    }
}

/// Active robots in counter-clockwise order.
///
/// Each member carries a sheet offset (a multiple of 2pi) fixed when the ring
/// is built. Adding it to the member's continuous angle places the ring on a
/// single sheet where `first < second < ... < last < first + 2pi`, so gaps are
/// plain differences for as long as the order is preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct RingTopology {
    order: Vec<RobotId>,
    sheet: Vec<f64>,
}

impl RingTopology {
    pub fn order(&self) -> &[RobotId] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn slot_of(&self, id: RobotId) -> Option<usize> {
        self.order.iter().position(|&r| r == id)
    }

    pub fn contains(&self, id: RobotId) -> bool {
        self.slot_of(id).is_some()
    }

    /// Counter-clockwise neighbour slot.
    pub fn next(&self, slot: usize) -> usize {
        (slot + 1) % self.order.len()
    }

    /// Clockwise neighbour slot.
    pub fn prev(&self, slot: usize) -> usize {
        (slot + self.order.len() - 1) % self.order.len()
    }

    /// Angle of the member in `slot` on the ring's sheet, given per-robot angles.
    pub fn sheet_angle(&self, angles: &[f64], slot: usize) -> f64 {
        angles[self.order[slot].0] + self.sheet[slot]
    }

    /// Ring-ordered values picked out of a per-robot slice.
    pub fn gather(&self, per_robot: &[f64]) -> Vec<f64> {
        self.order.iter().map(|id| per_robot[id.0]).collect()
    }

    /// Gaps between consecutive members, without checking positivity.
    pub fn raw_gaps(&self, angles: &[f64]) -> Vec<f64> {
        let n = self.len();
        let sheet: Vec<f64> = (0..n).map(|k| self.sheet_angle(angles, k)).collect();
        (0..n)
            .map(|k| {
                if k + 1 < n {
                    sheet[k + 1] - sheet[k]
                } else {
                    sheet[0] - sheet[k] + TAU
                }
            })
            .collect()
    }
}

/// Builds the ring from per-robot angles (any sheet) and utilities.
///
/// Robots with zero utility are left out. Ties are broken by robot index.
pub fn build_ring(angles: &[f64], utilities: &[Utility]) -> Result<RingTopology> {
    assert_eq!(angles.len(), utilities.len());
    let mut active: Vec<(f64, RobotId)> = utilities
        .iter()
        .enumerate()
        .filter(|(_, u)| u.is_active())
        .map(|(i, _)| (reduce_angle(angles[i]), RobotId(i)))
        .collect();
    if active.len() < 2 {
        return Err(Error::TooFewActive {
            active: active.len(),
        });
    }
    active.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let sheet = active
        .iter()
        .map(|&(reduced, id)| reduced - angles[id.0])
        .collect();
    Ok(RingTopology {
        order: active.into_iter().map(|(_, id)| id).collect(),
        sheet,
    })
}

/// Gaps from each ring member to its counter-clockwise neighbour.
pub fn angular_gaps(ring: &RingTopology, angles: &[f64]) -> Result<SpacingVector> {
    let gaps = ring.raw_gaps(angles);
    for (k, &gap) in gaps.iter().enumerate() {
        if !(gap > 1e-12) {
            return Err(Error::DegenerateGap {
                first: ring.order[k].label(),
                second: ring.order[ring.next(k)].label(),
                gap,
            });
        }
    }
    Ok(SpacingVector(gaps))
}

/// Best fleeing point in every gap, as an angle in `[0, 2pi)`.
///
/// The point in gap `k` is where members `k` and `k+1`, moving along the
/// circle at speeds proportional to their utilities, arrive at the same time:
/// it lies `gap * mu_k / (mu_k + mu_{k+1})` counter-clockwise of member `k`.
pub fn best_fleeing_points(ring: &RingTopology, utilities: &[Utility], angles: &[f64]) -> Vec<f64> {
    let gaps = ring.raw_gaps(angles);
    let mu: Vec<f64> = ring.order.iter().map(|id| utilities[id.0].value()).collect();
    (0..ring.len())
        .map(|k| {
            let next = ring.next(k);
            let offset = gaps[k] * mu[k] / (mu[k] + mu[next]);
            reduce_angle(ring.sheet_angle(angles, k) + offset)
        })
        .collect()
}

/// Time for ring member `k` and for its counter-clockwise neighbour to reach
/// the fleeing point in gap `k`, at speeds equal to their utilities (radians
/// per unit time on the unit circle).
pub fn capture_times(gaps: &[f64], mu: &[f64]) -> Vec<(f64, f64)> {
    let n = gaps.len();
    (0..n)
        .map(|k| {
            let next = (k + 1) % n;
            let share = mu[k] + mu[next];
            let from_self = gaps[k] * mu[k] / share;
            let from_next = gaps[k] * mu[next] / share;
            (from_self / mu[k], from_next / mu[next])
        })
        .collect()
}

/// Piecewise-constant utility of one robot over time.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilitySchedule {
    pub initial: f64,
    /// `(switch time, new value)` pairs.
    pub switches: Vec<(f64, f64)>,
}

impl UtilitySchedule {
    pub fn constant(value: f64) -> Self {
        Self {
            initial: value,
            switches: Vec::new(),
        }
    }

    /// True when the schedule settles on a final value, i.e. every switch
    /// happens at a finite time and every value is a valid utility.
    pub fn limit_exists(&self) -> bool {
        self.initial.is_finite()
            && self.initial >= 0.0
            && self
                .switches
                .iter()
                .all(|&(t, v)| t.is_finite() && t >= 0.0 && v.is_finite() && v >= 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.limit_exists() {
            return Err(Error::InvalidScenario(
                "utility schedule needs finite switch times and finite non-negative values".into(),
            ));
        }
        if self.switches.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidScenario(
                "utility switch times must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.switches
            .iter()
            .take_while(|(ts, _)| *ts <= t)
            .last()
            .map_or(self.initial, |&(_, v)| v)
    }
}

/// Whether every robot's desired-spacing limit exists under the schedules.
pub fn f_limit_exists_check(schedules: &[UtilitySchedule]) -> bool {
    schedules.iter().all(UtilitySchedule::limit_exists)
}

/// Gap of an `n`-robot equally spaced ring.
pub fn equal_gap(n: usize) -> f64 {
    TAU / n as f64
}

/// Gap both robots settle on when only two remain.
pub const ANTIPODAL_GAP: f64 = PI;
