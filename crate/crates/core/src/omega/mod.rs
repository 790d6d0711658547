//! Infinite subsets of ω with exact counting at finite horizon.

mod parse;
pub(crate) mod segment;

use std::sync::{Arc, OnceLock};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bits::{BitBuf, Rle};
use crate::error::{Error, Result};
use crate::rational::{floor_u, pow2, Q};
use crate::symbolic::SymbolicSet;

pub use segment::MAX_PERIOD;

/// Default cap on explicitly materialized bits.
pub const DEFAULT_HORIZON_CAP: u64 = 1 << 27;

/// Cap on explicit materialization, overridable through `SPLITLAB_HORIZON_CAP`.
pub fn horizon_cap() -> u64 {
    static CAP: OnceLock<u64> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var("SPLITLAB_HORIZON_CAP")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .filter(|&c| c > 0)
            .unwrap_or(DEFAULT_HORIZON_CAP)
    })
}

#[derive(Debug)]
pub(crate) enum Node {
    Full,
    Empty,
    Progression {
        start: BigUint,
        step: u64,
    },
    Explicit {
        prefix: Arc<BitBuf>,
        tail: Arc<BitBuf>,
    },
    Window {
        start: BigUint,
        bits: Arc<BitBuf>,
    },
    Range {
        lo: BigUint,
        hi: BigUint,
    },
    Bernoulli {
        p: Q,
        seed: u64,
        threshold: u64,
    },
    Powers {
        base: BigUint,
    },
    Tower {
        base: BigUint,
    },
    Osc {
        base: BigUint,
    },
    Alternate {
        inner: OmegaSet,
        phase: u8,
    },
    Inter(OmegaSet, OmegaSet),
    Union(OmegaSet, OmegaSet),
    Diff(OmegaSet, OmegaSet),
    Compl(OmegaSet),
    Symbolic(Arc<SymbolicSet>),
}

/// A subset of ω given by a descriptor tree. Cloning is cheap.
#[derive(Clone, Debug)]
pub struct OmegaSet(Arc<Node>);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetOp {
    Intersect,
    Union,
    Difference,
    Complement,
}

/// Exact truncation of a set to `[0, horizon)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prefix {
    pub horizon: u64,
    pub bits: BitBuf,
}

impl Prefix {
    pub fn count(&self) -> u64 {
        self.bits.count_ones()
    }

    pub fn count_below(&self, n: u64) -> u64 {
        self.bits.rank(n as usize)
    }

    pub fn contains(&self, k: u64) -> bool {
        k < self.horizon && self.bits.get(k as usize)
    }

    pub fn to_rle(&self) -> Rle {
        self.bits.to_rle()
    }
}

impl Serialize for Prefix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.bits.to_rle().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Prefix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rle = Rle::deserialize(d)?;
        let bits = BitBuf::from_rle(&rle)
            .ok_or_else(|| serde::de::Error::custom("run lengths do not sum to horizon"))?;
        Ok(Prefix {
            horizon: rle.horizon,
            bits,
        })
    }
}

fn is_zero_pattern(b: &BitBuf) -> bool {
    b.count_ones() == 0
}

impl OmegaSet {
    fn new(node: Node) -> Self {
        OmegaSet(Arc::new(node))
    }

    pub(crate) fn node(&self) -> &Node {
        &self.0
    }

    pub fn full() -> Self {
        Self::new(Node::Full)
    }

    pub fn empty() -> Self {
        Self::new(Node::Empty)
    }

    /// `{start + step·k : k ≥ 0}`.
    pub fn progression(start: impl Into<BigUint>, step: u64) -> Result<Self> {
        if step == 0 {
            return Err(Error::Precondition(
                "progression step must be positive".into(),
            ));
        }
        Ok(Self::new(Node::Progression {
            start: start.into(),
            step,
        }))
    }

    pub fn evens() -> Self {
        Self::progression(0u32, 2).expect("step 2")
    }

    pub fn odds() -> Self {
        Self::progression(1u32, 2).expect("step 2")
    }

    pub fn multiples(d: u64) -> Result<Self> {
        Self::progression(0u32, d)
    }

    /// Explicit prefix followed by a repeating tail pattern.
    pub fn explicit(prefix: BitBuf, tail: BitBuf) -> Result<Self> {
        if tail.is_empty() {
            return Err(Error::Precondition("tail pattern must be non-empty".into()));
        }
        if tail.len() as u64 > MAX_PERIOD {
            return Err(Error::PeriodTooLarge(tail.len() as u64));
        }
        Ok(Self::new(Node::Explicit {
            prefix: Arc::new(prefix),
            tail: Arc::new(tail),
        }))
    }

    /// The finite set `{start + i : bits[i]}`.
    pub fn window(start: BigUint, bits: BitBuf) -> Self {
        Self::new(Node::Window {
            start,
            bits: Arc::new(bits),
        })
    }

    /// The finite interval `[lo, hi)`.
    pub fn range(lo: BigUint, hi: BigUint) -> Self {
        if hi <= lo {
            return Self::empty();
        }
        Self::new(Node::Range { lo, hi })
    }

    /// Pseudo-random set: `k` is a member iff word `k` of the seeded keystream is below `⌊p·2³²⌋`.
    pub fn bernoulli(p: Q, seed: u64) -> Result<Self> {
        if p < Q::zero() || p > Q::one() {
            return Err(Error::Precondition(format!(
                "Bernoulli parameter {p} outside [0, 1]"
            )));
        }
        let threshold = floor_u(&(&p * pow2(32))).to_u64().unwrap_or(1 << 32);
        Ok(Self::new(Node::Bernoulli { p, seed, threshold }))
    }

    /// `{b^k : k ≥ 0}`.
    pub fn powers(base: u64) -> Result<Self> {
        if base < 2 {
            return Err(Error::Precondition("base must be at least 2".into()));
        }
        Ok(Self::new(Node::Powers { base: base.into() }))
    }

    /// `{b^(2^k) : k ≥ 0}`.
    pub fn tower(base: u64) -> Result<Self> {
        if base < 2 {
            return Err(Error::Precondition("base must be at least 2".into()));
        }
        Ok(Self::new(Node::Tower { base: base.into() }))
    }

    /// `{x ≥ 1 : ⌊log_b x⌋ even}`: full on `[b^(2k), b^(2k+1))`, empty on the next block.
    pub fn oscillating(base: u64) -> Result<Self> {
        if base < 2 {
            return Err(Error::Precondition("base must be at least 2".into()));
        }
        Ok(Self::new(Node::Osc { base: base.into() }))
    }

    /// Every second element of `inner`, starting with the element of index `phase`.
    pub fn alternate(inner: &OmegaSet, phase: u8) -> Self {
        Self::new(Node::Alternate {
            inner: inner.clone(),
            phase: phase % 2,
        })
    }

    pub fn symbolic(sym: SymbolicSet) -> Self {
        Self::new(Node::Symbolic(Arc::new(sym)))
    }

    pub fn as_symbolic(&self) -> Option<&SymbolicSet> {
        match self.node() {
            Node::Symbolic(s) => Some(s),
            _ => None,
        }
    }

    pub fn intersect(&self, other: &OmegaSet) -> Self {
        match (self.node(), other.node()) {
            (Node::Full, _) => other.clone(),
            (_, Node::Full) => self.clone(),
            (Node::Empty, _) | (_, Node::Empty) => Self::empty(),
            _ => Self::new(Node::Inter(self.clone(), other.clone())),
        }
    }

    pub fn union(&self, other: &OmegaSet) -> Self {
        match (self.node(), other.node()) {
            (Node::Empty, _) => other.clone(),
            (_, Node::Empty) => self.clone(),
            (Node::Full, _) | (_, Node::Full) => Self::full(),
            _ => Self::new(Node::Union(self.clone(), other.clone())),
        }
    }

    pub fn difference(&self, other: &OmegaSet) -> Self {
        match (self.node(), other.node()) {
            (Node::Empty, _) | (_, Node::Full) => Self::empty(),
            (_, Node::Empty) => self.clone(),
            _ => Self::new(Node::Diff(self.clone(), other.clone())),
        }
    }

    pub fn complement(&self) -> Self {
        match self.node() {
            Node::Full => Self::empty(),
            Node::Empty => Self::full(),
            Node::Compl(a) => a.clone(),
            _ => Self::new(Node::Compl(self.clone())),
        }
    }

    pub fn contains(&self, k: &BigUint) -> Result<bool> {
        Ok(!self.count_range(k, &(k + 1u32))?.is_zero())
    }

    /// `|s ∩ [lo, hi)|`.
    pub fn count_range(&self, lo: &BigUint, hi: &BigUint) -> Result<BigUint> {
        Ok(segment::total(&segment::pieces(self, lo, hi)?))
    }

    /// `|s ∩ [0, n)|`.
    pub fn count_below(&self, n: &BigUint) -> Result<BigUint> {
        self.count_range(&BigUint::zero(), n)
    }

    pub fn count_below_u64(&self, n: u64) -> Result<u64> {
        Ok(self
            .count_below(&BigUint::from(n))?
            .to_u64()
            .expect("count below a u64 fits"))
    }

    pub fn materialize_prefix(&self, n: u64) -> Result<Prefix> {
        if n > horizon_cap() {
            return Err(Error::HorizonOverflow {
                requested: n.into(),
                cap: horizon_cap(),
            });
        }
        let mut bits = BitBuf::zeros(n as usize);
        let mut at = 0usize;
        for p in segment::pieces(self, &BigUint::zero(), &BigUint::from(n))? {
            p.write_into(&mut bits, at);
            at += p.len.to_usize().expect("piece below cap");
        }
        Ok(Prefix { horizon: n, bits })
    }

    /// The `k`-th element (0-indexed) of the increasing enumeration.
    pub fn kth_element(&self, k: &BigUint) -> Result<BigUint> {
        match self.node() {
            Node::Full => return Ok(k.clone()),
            Node::Progression { start, step } => return Ok(start + k * step),
            Node::Powers { base } => {
                let e = k
                    .to_u32()
                    .ok_or_else(|| Error::SearchExhausted(k.to_u64().unwrap_or(u64::MAX)))?;
                return Ok(num_traits::pow(base.clone(), e as usize));
            }
            Node::Tower { base } => {
                let e = k
                    .to_u32()
                    .filter(|&e| e < 32)
                    .ok_or_else(|| Error::SearchExhausted(k.to_u64().unwrap_or(u64::MAX)))?;
                return Ok(num_traits::pow(base.clone(), 1usize << e));
            }
            _ => {}
        }
        let finite = self.is_finite() == Some(true);
        let limit: usize = if finite { 256 } else { 4096 };
        let exceeds =
            |e: usize| -> Result<bool> { Ok(&self.count_below(&(BigUint::one() << e))? > k) };
        // Gallop on the exponent, then bisect.
        let (mut lo, mut hi) = (0usize, 6usize);
        while !exceeds(hi)? {
            if hi >= limit {
                let index = k.to_u64().unwrap_or(u64::MAX);
                return Err(if finite {
                    Error::IndexOutOfRange {
                        index,
                        size: self.count_below(&(BigUint::one() << hi))?,
                    }
                } else {
                    Error::SearchExhausted(index)
                });
            }
            lo = hi;
            hi = (hi * 2).min(limit);
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if exceeds(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let hi = BigUint::one() << hi;
        let mut seen = BigUint::zero();
        let mut pos = BigUint::zero();
        for p in segment::pieces(self, &BigUint::zero(), &hi)? {
            let c = p.count();
            if &seen + &c > *k {
                return Ok(pos + p.select(&(k - &seen)));
            }
            seen += c;
            pos += &p.len;
        }
        unreachable!("count exceeded k but no piece contained it")
    }

    pub fn kth_element_u64(&self, k: u64) -> Result<BigUint> {
        self.kth_element(&BigUint::from(k))
    }

    /// Pattern `p` with `k ∈ A ⇔ p[k mod |p|]` for all large `k`.
    fn tail_pattern(&self) -> Option<BitBuf> {
        match self.node() {
            Node::Full => Some(BitBuf::ones(1)),
            Node::Empty | Node::Window { .. } | Node::Range { .. } => Some(BitBuf::zeros(1)),
            Node::Progression { start, step } => {
                let mut b = BitBuf::zeros(*step as usize);
                b.set((start % *step).try_into().expect("below step"), true);
                Some(b)
            }
            Node::Explicit { prefix, tail } => {
                let (t, shift) = (tail.len(), prefix.len() % tail.len());
                Some(BitBuf::from_bools(
                    (0..t).map(|i| tail.get((i + t - shift) % t)),
                ))
            }
            Node::Bernoulli { threshold, .. } if *threshold == 0 => Some(BitBuf::zeros(1)),
            Node::Bernoulli { threshold, .. } if *threshold >= 1 << 32 => Some(BitBuf::ones(1)),
            Node::Compl(a) => a.tail_pattern().map(|mut b| {
                b.not_assign();
                b
            }),
            Node::Inter(a, b) => {
                combine_patterns(&a.tail_pattern()?, &b.tail_pattern()?, |x, y| x && y)
            }
            Node::Union(a, b) => {
                combine_patterns(&a.tail_pattern()?, &b.tail_pattern()?, |x, y| x || y)
            }
            Node::Diff(a, b) => {
                combine_patterns(&a.tail_pattern()?, &b.tail_pattern()?, |x, y| x && !y)
            }
            _ => None,
        }
    }

    /// `Some(true)` when the set is provably finite, `Some(false)` when provably infinite.
    pub fn is_finite(&self) -> Option<bool> {
        if let Some(p) = self.tail_pattern() {
            return Some(is_zero_pattern(&p));
        }
        match self.node() {
            Node::Bernoulli { .. }
            | Node::Powers { .. }
            | Node::Tower { .. }
            | Node::Osc { .. } => Some(false),
            Node::Alternate { inner, .. } => inner.is_finite(),
            Node::Symbolic(s) => s.is_finite(),
            Node::Inter(a, b) => match (a.is_finite(), b.is_finite()) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                _ => None,
            },
            Node::Union(a, b) => match (a.is_finite(), b.is_finite()) {
                (Some(true), Some(true)) => Some(true),
                (Some(false), _) | (_, Some(false)) => Some(false),
                _ => None,
            },
            Node::Diff(a, b) => match (a.is_finite(), b.is_finite()) {
                (Some(true), _) => Some(true),
                (Some(false), Some(true)) => Some(false),
                _ => None,
            },
            Node::Compl(a) => match a.is_finite() {
                Some(true) => Some(false),
                _ => None,
            },
            _ => None,
        }
    }

    /// Provably co-finite (the complement is finite).
    pub fn is_cofinite(&self) -> Option<bool> {
        self.complement().is_finite()
    }

    /// Rejects provably finite sets; used by operations that need an infinite set.
    pub fn require_infinite(&self, what: &str) -> Result<()> {
        if self.is_finite() == Some(true) {
            return Err(Error::FiniteSet(format!("{what} = {self}")));
        }
        Ok(())
    }
}

fn combine_patterns(a: &BitBuf, b: &BitBuf, f: impl Fn(bool, bool) -> bool) -> Option<BitBuf> {
    let p =
        crate::rational::lcm_u64(a.len() as u64, b.len() as u64).filter(|&p| p <= MAX_PERIOD)?;
    Some(BitBuf::from_bools(
        (0..p as usize).map(|i| f(a.get(i % a.len()), b.get(i % b.len()))),
    ))
}

/// Boolean combination of descriptors; `complement` takes exactly one argument.
pub fn combine(op: SetOp, a: &OmegaSet, b: Option<&OmegaSet>) -> Result<OmegaSet> {
    match (op, b) {
        (SetOp::Complement, None) => Ok(a.complement()),
        (SetOp::Complement, Some(_)) => {
            Err(Error::Precondition("complement takes one argument".into()))
        }
        (_, None) => Err(Error::Precondition(format!("{op:?} takes two arguments"))),
        (SetOp::Intersect, Some(b)) => Ok(a.intersect(b)),
        (SetOp::Union, Some(b)) => Ok(a.union(b)),
        (SetOp::Difference, Some(b)) => Ok(a.difference(b)),
    }
}

impl PartialEq for OmegaSet {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.to_string() == other.to_string()
    }
}

impl Serialize for OmegaSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

pub use parse::{parse_rule, parse_set};

impl std::str::FromStr for OmegaSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_set(s, None)
    }
}
