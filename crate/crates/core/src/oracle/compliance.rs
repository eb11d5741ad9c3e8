use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Compliance types of one member; `c` in the text is `s ∪ j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TypeLabel {
    /// Takes the treatment whenever the own instrument is on.
    SelfComplier,
    /// Takes it only when both instruments are on.
    JointComplier,
    NeverTaker,
    /// Takes it when only the own instrument is on.
    CrossDefier,
    AlwaysTaker,
    /// Takes it when either instrument is on.
    CrossComplier,
    /// Takes it unless only the partner instrument is on.
    CrossDefier2,
    /// Takes it unless the partner instrument is on.
    CrossDefier3,
}

impl TypeLabel {
    pub const BASIC: [TypeLabel; 4] = [
        TypeLabel::SelfComplier,
        TypeLabel::JointComplier,
        TypeLabel::NeverTaker,
        TypeLabel::CrossDefier,
    ];

    pub const MONOTONE: [TypeLabel; 8] = [
        TypeLabel::SelfComplier,
        TypeLabel::JointComplier,
        TypeLabel::NeverTaker,
        TypeLabel::CrossDefier,
        TypeLabel::AlwaysTaker,
        TypeLabel::CrossComplier,
        TypeLabel::CrossDefier2,
        TypeLabel::CrossDefier3,
    ];

    pub fn map(self) -> ComplianceMap {
        // Takeup under (own, partner) = (0,0), (0,1), (1,0), (1,1).
        let t = match self {
            TypeLabel::SelfComplier => [0, 0, 1, 1],
            TypeLabel::JointComplier => [0, 0, 0, 1],
            TypeLabel::NeverTaker => [0, 0, 0, 0],
            TypeLabel::CrossDefier => [0, 0, 1, 0],
            TypeLabel::AlwaysTaker => [1, 1, 1, 1],
            TypeLabel::CrossComplier => [0, 1, 1, 1],
            TypeLabel::CrossDefier2 => [1, 0, 1, 1],
            TypeLabel::CrossDefier3 => [1, 0, 1, 0],
        };
        ComplianceMap::from_takeup(t.map(|v| v == 1))
    }

    pub fn short(self) -> &'static str {
        match self {
            TypeLabel::SelfComplier => "s",
            TypeLabel::JointComplier => "j",
            TypeLabel::NeverTaker => "n",
            TypeLabel::CrossDefier => "d",
            TypeLabel::AlwaysTaker => "at",
            TypeLabel::CrossComplier => "xc",
            TypeLabel::CrossDefier2 => "xd2",
            TypeLabel::CrossDefier3 => "xd3",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TypeLabel::SelfComplier => "self-complier",
            TypeLabel::JointComplier => "joint complier",
            TypeLabel::NeverTaker => "never-taker",
            TypeLabel::CrossDefier => "cross-defier",
            TypeLabel::AlwaysTaker => "always-taker",
            TypeLabel::CrossComplier => "cross-complier",
            TypeLabel::CrossDefier2 => "cross-defier type 2",
            TypeLabel::CrossDefier3 => "cross-defier type 3",
        }
    }
}

/// A member's takeup as a function of (own instrument, partner instrument).
///
/// Bit `2·own + partner` holds the takeup. Member B's map is stored in the
/// same own-first orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ComplianceMap(u8);

impl ComplianceMap {
    pub fn from_bits(bits: u8) -> Result<Self> {
        if bits < 16 {
            Ok(Self(bits))
        } else {
            Err(Error::Spec(format!(
                "compliance map bits must be below 16, found {bits}"
            )))
        }
    }

    /// From takeup under (own, partner) = (0,0), (0,1), (1,0), (1,1).
    pub fn from_takeup(takeup: [bool; 4]) -> Self {
        Self(
            takeup
                .iter()
                .enumerate()
                .map(|(i, &t)| (t as u8) << i)
                .sum(),
        )
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn takes(self, own: u8, partner: u8) -> bool {
        (self.0 >> (own * 2 + partner)) & 1 == 1
    }

    pub fn all() -> impl Iterator<Item = ComplianceMap> {
        (0..16).map(ComplianceMap)
    }

    pub fn label(self) -> Option<TypeLabel> {
        TypeLabel::MONOTONE.into_iter().find(|l| l.map() == self)
    }

    /// Never treated without the own instrument.
    pub fn is_one_sided(self) -> bool {
        !self.takes(0, 0) && !self.takes(0, 1)
    }

    /// Own instrument weakly raises takeup, and the own instrument alone
    /// induces takeup at least as much as the partner instrument alone.
    pub fn is_monotone(self) -> bool {
        let t = |o, p| self.takes(o, p) as u8;
        t(0, 0) <= t(1, 0) && t(0, 1) <= t(1, 1) && t(0, 1) <= t(1, 0)
    }
}

impl From<TypeLabel> for ComplianceMap {
    fn from(l: TypeLabel) -> Self {
        l.map()
    }
}

impl fmt::Display for ComplianceMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.label() {
            Some(l) => f.write_str(l.short()),
            None => {
                let t = |o, p| self.takes(o, p) as u8;
                write!(f, "m{}{}{}{}", t(0, 0), t(0, 1), t(1, 0), t(1, 1))
            }
        }
    }
}

impl FromStr for ComplianceMap {
    type Err = Error;

    /// Accepts a short label (`s`, `j`, `n`, `d`, `at`, `xc`, `xd2`, `xd3`)
    /// or `m` followed by the four takeup digits in (0,0), (0,1), (1,0), (1,1) order.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(l) = TypeLabel::MONOTONE.into_iter().find(|l| l.short() == s) {
            return Ok(l.map());
        }
        let digits = s.strip_prefix('m').unwrap_or("");
        if digits.len() == 4 && digits.chars().all(|c| c == '0' || c == '1') {
            let mut t = [false; 4];
            for (i, c) in digits.chars().enumerate() {
                t[i] = c == '1';
            }
            return Ok(Self::from_takeup(t));
        }
        Err(Error::Spec(format!("unknown compliance map `{s}`")))
    }
}

impl TryFrom<String> for ComplianceMap {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ComplianceMap> for String {
    fn from(m: ComplianceMap) -> String {
        m.to_string()
    }
}

/// A set of compliance maps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct MapSet(u16);

impl MapSet {
    pub const ALL: MapSet = MapSet(u16::MAX);
    pub const EMPTY: MapSet = MapSet(0);

    pub fn of(labels: &[TypeLabel]) -> Self {
        labels.iter().fold(Self::EMPTY, |acc, l| acc.with(l.map()))
    }

    pub fn from_maps(maps: impl IntoIterator<Item = ComplianceMap>) -> Self {
        maps.into_iter().fold(Self::EMPTY, |acc, m| acc.with(m))
    }

    pub fn from_predicate(pred: impl Fn(ComplianceMap) -> bool) -> Self {
        Self::from_maps(ComplianceMap::all().filter(|m| pred(*m)))
    }

    pub fn with(self, m: ComplianceMap) -> Self {
        MapSet(self.0 | 1 << m.bits())
    }

    pub fn contains(self, m: ComplianceMap) -> bool {
        self.0 >> m.bits() & 1 == 1
    }

    pub fn iter(self) -> impl Iterator<Item = ComplianceMap> {
        ComplianceMap::all().filter(move |m| self.contains(*m))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

/// A set of (map of A, map of B) profiles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct PairSet([u64; 4]);

fn slot(a: ComplianceMap, b: ComplianceMap) -> (usize, u32) {
    let i = a.bits() as usize * 16 + b.bits() as usize;
    (i / 64, (i % 64) as u32)
}

impl PairSet {
    pub const EMPTY: PairSet = PairSet([0; 4]);
    pub const ALL: PairSet = PairSet([u64::MAX; 4]);

    pub fn from_predicate(pred: impl Fn(ComplianceMap, ComplianceMap) -> bool) -> Self {
        let mut out = Self::EMPTY;
        for a in ComplianceMap::all() {
            for b in ComplianceMap::all() {
                if pred(a, b) {
                    out.insert(a, b);
                }
            }
        }
        out
    }

    pub fn product(a: MapSet, b: MapSet) -> Self {
        Self::from_predicate(|x, y| a.contains(x) && b.contains(y))
    }

    /// Pairs whose A member has one of `labels`.
    pub fn a_in(labels: &[TypeLabel]) -> Self {
        Self::product(MapSet::of(labels), MapSet::ALL)
    }

    /// Pairs whose B member has one of `labels`.
    pub fn b_in(labels: &[TypeLabel]) -> Self {
        Self::product(MapSet::ALL, MapSet::of(labels))
    }

    pub fn both(a: &[TypeLabel], b: &[TypeLabel]) -> Self {
        Self::product(MapSet::of(a), MapSet::of(b))
    }

    pub fn insert(&mut self, a: ComplianceMap, b: ComplianceMap) {
        let (w, bit) = slot(a, b);
        self.0[w] |= 1 << bit;
    }

    pub fn contains(&self, a: ComplianceMap, b: ComplianceMap) -> bool {
        let (w, bit) = slot(a, b);
        self.0[w] >> bit & 1 == 1
    }

    pub fn union(&self, other: &PairSet) -> PairSet {
        PairSet(std::array::from_fn(|i| self.0[i] | other.0[i]))
    }

    pub fn intersection(&self, other: &PairSet) -> PairSet {
        PairSet(std::array::from_fn(|i| self.0[i] & other.0[i]))
    }

    pub fn difference(&self, other: &PairSet) -> PairSet {
        PairSet(std::array::from_fn(|i| self.0[i] & !other.0[i]))
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|w| *w == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_eight_maps_are_monotone_and_all_are_labelled() {
        let monotone: Vec<_> = ComplianceMap::all().filter(|m| m.is_monotone()).collect();
        assert_eq!(monotone.len(), 8);
        assert!(monotone.iter().all(|m| m.label().is_some()));
        for l in TypeLabel::MONOTONE {
            assert!(l.map().is_monotone());
        }
    }

    #[test]
    fn one_sided_monotone_maps_are_the_basic_types() {
        let one_sided: Vec<_> = ComplianceMap::all()
            .filter(|m| m.is_one_sided() && m.is_monotone())
            .collect();
        let mut basic: Vec<_> = TypeLabel::BASIC.iter().map(|l| l.map()).collect();
        basic.sort();
        assert_eq!(one_sided, basic);
        assert_eq!(ComplianceMap::all().filter(|m| m.is_one_sided()).count(), 4);
    }

    #[test]
    fn labels_round_trip_through_strings() {
        for m in ComplianceMap::all() {
            assert_eq!(m.to_string().parse::<ComplianceMap>().unwrap(), m);
        }
        assert_eq!(
            "m0011".parse::<ComplianceMap>().unwrap(),
            TypeLabel::SelfComplier.map()
        );
        assert!("q".parse::<ComplianceMap>().is_err());
    }

    #[test]
    fn pair_set_algebra() {
        let c = PairSet::a_in(&[TypeLabel::SelfComplier, TypeLabel::JointComplier]);
        assert_eq!(c.len(), 2 * 16);
        let cc = c.intersection(&PairSet::b_in(&[
            TypeLabel::SelfComplier,
            TypeLabel::JointComplier,
        ]));
        assert_eq!(cc.len(), 4);
        assert!(cc.contains(
            TypeLabel::JointComplier.map(),
            TypeLabel::SelfComplier.map()
        ));
        assert_eq!(c.difference(&cc).union(&cc), c);
        assert_eq!(PairSet::ALL.len(), 256);
    }
}
