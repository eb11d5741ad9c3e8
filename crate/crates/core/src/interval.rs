//! Closed real intervals and intervals tagged with the assumptions that make
//! them valid.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Panics if `lo > hi` or either endpoint is NaN; use [`Interval::try_new`]
    /// for untrusted endpoints.
    pub fn new(lo: f64, hi: f64) -> Self {
        Self::try_new(lo, hi).expect("interval endpoints out of order")
    }

    pub fn try_new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidArgument(format!(
                "interval endpoints out of order: [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Containment with an absolute slack on both ends.
    pub fn contains_within(&self, x: f64, slack: f64) -> bool {
        self.lo - slack <= x && x <= self.hi + slack
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn scale(self, a: f64) -> Interval {
        if a >= 0.0 {
            Interval {
                lo: a * self.lo,
                hi: a * self.hi,
            }
        } else {
            Interval {
                lo: a * self.hi,
                hi: a * self.lo,
            }
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo + rhs.lo,
            hi: self.hi + rhs.hi,
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo - rhs.hi,
            hi: self.hi - rhs.lo,
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Add<f64> for Interval {
    type Output = Interval;
    fn add(self, rhs: f64) -> Interval {
        Interval {
            lo: self.lo + rhs,
            hi: self.hi + rhs,
        }
    }
}

impl Mul<Interval> for f64 {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        rhs.scale(self)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => write!(f, "[{:.*}, {:.*}]", p, self.lo, p, self.hi),
            None => write!(f, "[{}, {}]", self.lo, self.hi),
        }
    }
}

/// Named assumptions an interval can rely on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Assumption {
    /// Potential outcomes lie in `[0, K]`.
    BoundedOutcomes,
    /// `Y(10) >= Y(00)` and `Y(01) >= Y(00)` for every pair.
    MonotoneResponse,
    /// No pair has a cross-defier as member A.
    NoCrossDefiersA,
    /// No pair has a joint complier as member B.
    NoJointCompliersB,
    /// `Y(11) >= Y(00)` for every pair.
    Y11GeY00,
    /// `Y(11) >= max(Y(10), Y(01))` for every pair.
    Y11GeMax,
    /// Value of the joint-complier share of member B was supplied, not estimated.
    AssumedJointComplierShareB,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        f.write_str(&s)
    }
}

/// An interval valid under a stated set of assumptions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumedInterval {
    pub lo: f64,
    pub hi: f64,
    pub assumptions: BTreeSet<Assumption>,
    /// Whether the interval was intersected with the trivial range `[0, K]`.
    pub clipped: bool,
}

impl AssumedInterval {
    pub fn new(interval: Interval, assumptions: impl IntoIterator<Item = Assumption>) -> Self {
        Self {
            lo: interval.lo,
            hi: interval.hi,
            assumptions: assumptions.into_iter().collect(),
            clipped: false,
        }
    }

    pub fn interval(&self) -> Interval {
        Interval {
            lo: self.lo,
            hi: self.hi,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.interval().contains(x)
    }

    /// Intersects with `[0, k]`; errors if the intersection is empty.
    pub fn clip(&self, k: f64) -> Result<Self> {
        let trivial = Interval { lo: 0.0, hi: k };
        let iv = self.interval().intersect(&trivial).ok_or_else(|| {
            Error::EmptyIdentifiedSet(format!(
                "interval {} does not meet [0, {k}]",
                self.interval()
            ))
        })?;
        Ok(Self {
            lo: iv.lo,
            hi: iv.hi,
            assumptions: self.assumptions.clone(),
            clipped: true,
        })
    }

    /// Intersection of two intervals; the result relies on both assumption sets.
    pub fn intersect(&self, other: &AssumedInterval) -> Result<Self> {
        let iv = self
            .interval()
            .intersect(&other.interval())
            .ok_or_else(|| {
                Error::EmptyIdentifiedSet(format!(
                    "intervals {} and {} are disjoint",
                    self.interval(),
                    other.interval()
                ))
            })?;
        Ok(Self {
            lo: iv.lo,
            hi: iv.hi,
            assumptions: self
                .assumptions
                .union(&other.assumptions)
                .copied()
                .collect(),
            clipped: self.clipped || other.clipped,
        })
    }
}
