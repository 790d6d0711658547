//! Sets described interval by interval over an [`IntervalPartition`].

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::bits::BitBuf;
use crate::error::{Error, Result};
use crate::omega::OmegaSet;
use crate::partition::IntervalPartition;
use crate::rational::{ceil_u, qu, ratio, Q};

/// A subset of a single interval `I_n`.
#[derive(Clone, Debug)]
pub enum PartKind {
    Full,
    Empty,
    /// The first `s` elements of the interval.
    First(BigUint),
    /// The last `s` elements of the interval.
    Last(BigUint),
    /// `A ∩ I_n`.
    Trace(OmegaSet),
    /// `I_n` minus the inner subset.
    Complement(Box<PartKind>),
    /// Explicit membership bits, one per element of the interval.
    Explicit(Arc<BitBuf>),
}

impl PartKind {
    pub fn singleton() -> Self {
        PartKind::First(BigUint::from(1u32))
    }

    pub fn trace(a: &OmegaSet) -> Self {
        PartKind::Trace(a.clone())
    }

    pub fn complement_of(k: PartKind) -> Self {
        match k {
            PartKind::Full => PartKind::Empty,
            PartKind::Empty => PartKind::Full,
            PartKind::Complement(inner) => *inner,
            k => PartKind::Complement(Box::new(k)),
        }
    }

    /// The subset as a global set, meaningful only inside `[lo, hi)`.
    pub fn as_set(&self, lo: &BigUint, hi: &BigUint) -> OmegaSet {
        match self {
            PartKind::Full => OmegaSet::full(),
            PartKind::Empty => OmegaSet::empty(),
            PartKind::First(s) => OmegaSet::range(lo.clone(), (lo + s).min(hi.clone())),
            PartKind::Last(s) => {
                let start = if s > &(hi - lo) { lo.clone() } else { hi - s };
                OmegaSet::range(start, hi.clone())
            }
            PartKind::Trace(a) => a.clone(),
            PartKind::Complement(k) => k.as_set(lo, hi).complement(),
            PartKind::Explicit(bits) => OmegaSet::window(lo.clone(), (**bits).clone()),
        }
    }

    /// Checks that the descriptor fits inside an interval of the given size.
    pub fn validate(&self, size: &BigUint) -> Result<()> {
        match self {
            PartKind::First(s) | PartKind::Last(s) if s > size => Err(Error::Precondition(
                format!("descriptor takes {s} elements of an interval of size {size}"),
            )),
            PartKind::Explicit(b) if &BigUint::from(b.len()) != size => {
                Err(Error::Precondition(format!(
                    "explicit descriptor has {} bits for an interval of size {size}",
                    b.len()
                )))
            }
            PartKind::Complement(k) => k.validate(size),
            _ => Ok(()),
        }
    }
}

/// Default descriptor for intervals without an explicit override.
#[derive(Clone, Debug)]
pub enum PartRule {
    Kind(PartKind),
    /// First `⌈r·|I_n|⌉` elements.
    FirstFraction(Q),
    /// Last `⌈r·|I_n|⌉` elements.
    LastFraction(Q),
    /// The least element of each interval.
    Singleton,
    /// First rule on even indices, second on odd ones.
    Alternate(Box<PartRule>, Box<PartRule>),
    /// `I_n` minus whatever the inner rule picks.
    Complement(Box<PartRule>),
}

impl PartRule {
    pub fn kind_at(&self, n: usize, size: &BigUint) -> PartKind {
        match self {
            PartRule::Kind(k) => k.clone(),
            PartRule::FirstFraction(r) => {
                PartKind::First(ceil_u(&(r * qu(size))).min(size.clone()))
            }
            PartRule::LastFraction(r) => PartKind::Last(ceil_u(&(r * qu(size))).min(size.clone())),
            PartRule::Singleton => PartKind::singleton(),
            PartRule::Alternate(a, b) => {
                if n.is_multiple_of(2) {
                    a.kind_at(n, size)
                } else {
                    b.kind_at(n, size)
                }
            }
            PartRule::Complement(r) => PartKind::complement_of(r.kind_at(n, size)),
        }
    }

    fn is_finite(&self) -> Option<bool> {
        match self {
            PartRule::Kind(PartKind::Empty) => Some(true),
            PartRule::Kind(PartKind::Full) => Some(false),
            PartRule::Kind(PartKind::First(s) | PartKind::Last(s)) => Some(s.is_zero()),
            PartRule::Kind(PartKind::Trace(a)) => a.is_finite(),
            PartRule::Kind(_) => None,
            PartRule::FirstFraction(r) | PartRule::LastFraction(r) => Some(r <= &Q::zero()),
            PartRule::Singleton => Some(false),
            PartRule::Alternate(a, b) => match (a.is_finite(), b.is_finite()) {
                (Some(true), Some(true)) => Some(true),
                (Some(false), _) | (_, Some(false)) => Some(false),
                _ => None,
            },
            PartRule::Complement(r) => match **r {
                PartRule::Kind(PartKind::Empty) => Some(false),
                PartRule::Kind(PartKind::Full) => Some(true),
                _ => None,
            },
        }
    }
}

/// A set given by one descriptor per interval: explicit overrides on finitely
/// many indices and a rule everywhere else.
#[derive(Clone, Debug)]
pub struct SymbolicSet {
    partition: Arc<IntervalPartition>,
    overrides: BTreeMap<usize, PartKind>,
    rule: PartRule,
}

impl SymbolicSet {
    pub fn new(partition: Arc<IntervalPartition>, rule: PartRule) -> Self {
        SymbolicSet {
            partition,
            overrides: BTreeMap::new(),
            rule,
        }
    }

    pub fn with_override(mut self, n: usize, kind: PartKind) -> Result<Self> {
        kind.validate(&self.partition.size(n))?;
        self.overrides.insert(n, kind);
        Ok(self)
    }

    pub fn partition(&self) -> &Arc<IntervalPartition> {
        &self.partition
    }

    pub fn rule(&self) -> &PartRule {
        &self.rule
    }

    pub fn overrides(&self) -> impl Iterator<Item = (&usize, &PartKind)> {
        self.overrides.iter()
    }

    pub fn kind_at(&self, n: usize) -> PartKind {
        match self.overrides.get(&n) {
            Some(k) => k.clone(),
            None => self.rule.kind_at(n, &self.partition.size(n)),
        }
    }

    /// `|X ∩ I_n|`.
    pub fn card(&self, n: usize) -> Result<BigUint> {
        kind_card(&self.partition, n, &self.kind_at(n))
    }

    pub fn subset(&self, n: usize) -> Result<IntervalSubset> {
        IntervalSubset::new(&self.partition, n, self.kind_at(n))
    }

    pub fn is_finite(&self) -> Option<bool> {
        self.rule.is_finite()
    }

    pub fn into_set(self) -> OmegaSet {
        OmegaSet::symbolic(self)
    }
}

/// `|K ∩ I_n|` for a descriptor `K`.
pub fn kind_card(p: &IntervalPartition, n: usize, kind: &PartKind) -> Result<BigUint> {
    let (lo, hi) = (p.boundary(n), p.boundary(n + 1));
    match kind {
        PartKind::Full => Ok(&hi - &lo),
        PartKind::Empty => Ok(BigUint::zero()),
        PartKind::First(s) | PartKind::Last(s) => Ok(s.clone().min(&hi - &lo)),
        PartKind::Explicit(b) => Ok(BigUint::from(b.count_ones())),
        PartKind::Complement(k) => Ok(&hi - &lo - kind_card(p, n, k)?),
        PartKind::Trace(a) => a.count_range(&lo, &hi),
    }
}

/// `|K₁ ∩ K₂ ∩ I_n|` for two descriptors of the same interval.
pub fn kind_inter_card(
    p: &IntervalPartition,
    n: usize,
    a: &PartKind,
    b: &PartKind,
) -> Result<BigUint> {
    let (lo, hi) = (p.boundary(n), p.boundary(n + 1));
    match (a, b) {
        (PartKind::Full, k) | (k, PartKind::Full) => kind_card(p, n, k),
        (PartKind::Empty, _) | (_, PartKind::Empty) => Ok(BigUint::zero()),
        _ => a
            .as_set(&lo, &hi)
            .intersect(&b.as_set(&lo, &hi))
            .count_range(&lo, &hi),
    }
}

/// `|A ∩ K ∩ I_n|` for a global set `A`.
pub fn set_inter_card(
    p: &IntervalPartition,
    n: usize,
    a: &OmegaSet,
    k: &PartKind,
) -> Result<BigUint> {
    let (lo, hi) = (p.boundary(n), p.boundary(n + 1));
    a.intersect(&k.as_set(&lo, &hi)).count_range(&lo, &hi)
}

/// A descriptor of a subset of `I_n` with its exact cardinality.
#[derive(Clone, Debug)]
pub struct IntervalSubset {
    pub index: usize,
    pub kind: PartKind,
    pub cardinality: BigUint,
}

impl IntervalSubset {
    pub fn new(p: &IntervalPartition, index: usize, kind: PartKind) -> Result<Self> {
        kind.validate(&p.size(index))?;
        let cardinality = kind_card(p, index, &kind)?;
        Ok(IntervalSubset {
            index,
            kind,
            cardinality,
        })
    }

    /// `|K| / |I_n|`.
    pub fn density(&self, p: &IntervalPartition) -> Q {
        ratio(&self.cardinality, &p.size(self.index))
    }
}

#[derive(Serialize, Deserialize)]
struct SubsetWire {
    index: usize,
    descriptor: String,
    #[serde(with = "crate::rational::serde_big")]
    cardinality: BigUint,
}

impl Serialize for IntervalSubset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SubsetWire {
            index: self.index,
            descriptor: self.kind.to_string(),
            cardinality: self.cardinality.clone(),
        }
        .serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn part() -> Arc<IntervalPartition> {
        Arc::new(IntervalPartition::minimal(6))
    }

    #[test]
    fn per_interval_cardinalities() {
        let p = part();
        let half = SymbolicSet::new(p.clone(), PartRule::FirstFraction(q(1, 2)));
        assert_eq!(half.card(1).unwrap(), BigUint::from(3u32));
        assert_eq!(half.card(2).unwrap(), BigUint::from(15u32));
        let evens = SymbolicSet::new(
            p.clone(),
            PartRule::Kind(PartKind::trace(&OmegaSet::evens())),
        );
        assert_eq!(evens.card(2).unwrap(), BigUint::from(14u32));
        let c = PartKind::complement_of(PartKind::trace(&OmegaSet::evens()));
        assert_eq!(kind_card(&p, 2, &c).unwrap(), BigUint::from(15u32));
    }

    #[test]
    fn intersections_inside_an_interval() {
        let p = part();
        let first = PartKind::First(BigUint::from(10u32));
        let last = PartKind::Last(BigUint::from(25u32));
        assert_eq!(
            kind_inter_card(&p, 2, &first, &last).unwrap(),
            BigUint::from(6u32)
        );
        let ev = PartKind::trace(&OmegaSet::evens());
        assert_eq!(
            kind_inter_card(&p, 2, &first, &ev).unwrap(),
            BigUint::from(5u32)
        );
    }

    #[test]
    fn symbolic_set_counts_match_brute_force() {
        let p = part();
        let s = SymbolicSet::new(
            p.clone(),
            PartRule::Alternate(
                Box::new(PartRule::FirstFraction(q(1, 3))),
                Box::new(PartRule::Singleton),
            ),
        )
        .with_override(3, PartKind::trace(&OmegaSet::multiples(3).unwrap()))
        .unwrap()
        .into_set();
        let n = 400u64;
        let prefix = s.materialize_prefix(n).unwrap();
        let mut expected = 0u64;
        for x in 0..n {
            let k = p.interval_of(&BigUint::from(x));
            let lo: u64 = p.boundary(k).try_into().unwrap();
            let size: u64 = p.size(k).try_into().unwrap();
            let member = match k {
                3 => x % 3 == 0,
                k if k % 2 == 0 => x - lo < size.div_ceil(3),
                _ => x == lo,
            };
            assert_eq!(prefix.contains(x), member, "x = {x}");
            expected += member as u64;
        }
        assert_eq!(prefix.count(), expected);
    }

    #[test]
    fn rejects_oversized_descriptors() {
        let p = part();
        let s = SymbolicSet::new(p, PartRule::Singleton);
        assert!(s
            .with_override(1, PartKind::First(BigUint::from(6u32)))
            .is_err());
    }
}
