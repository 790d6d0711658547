//! Adversarial constructions against would-be bisectors.
//!
//! Each construction assembles an interval-symbolic set `X` and issues
//! [`Certificate`]s showing that a ratio `|B ∩ X ∩ I_{≤n}| / |X ∩ I_{≤n}|`
//! leaves the band `(1/2 − ε, 1/2 + ε)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::certificate::{Certificate, ChainKind, Raw};
use crate::error::{Error, Result};
use crate::omega::{horizon_cap, OmegaSet};
use crate::partition::{GrowthVerdict, IntervalPartition};
use crate::rational::{fmt_q, half, pow2, ratio, Q};
use crate::symbolic::{kind_card, set_inter_card, IntervalSubset, PartKind, PartRule, SymbolicSet};

/// Search bound for the threshold loops; every valid input terminates far earlier.
const THRESHOLD_LIMIT: usize = 4096;

/// A finite partial assignment `n ↦ p(n) ⊆ I_n`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Condition {
    values: BTreeMap<usize, IntervalSubset>,
}

impl Condition {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.keys().copied()
    }

    pub fn get(&self, n: usize) -> Option<&IntervalSubset> {
        self.values.get(&n)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// A stronger condition defined at one more index.
    pub fn extend(&self, p: &IntervalPartition, n: usize, kind: PartKind) -> Result<Condition> {
        if self.values.contains_key(&n) {
            return Err(Error::Precondition(format!(
                "condition already decides interval {n}"
            )));
        }
        let mut q = self.clone();
        q.values.insert(n, IntervalSubset::new(p, n, kind)?);
        Ok(q)
    }

    /// `self ≤ other`: every decision of `other` is kept by `self`.
    pub fn extends(&self, other: &Condition) -> bool {
        other.values.iter().all(|(n, v)| {
            self.values.get(n).is_some_and(|w| {
                w.kind.to_string() == v.kind.to_string() && w.cardinality == v.cardinality
            })
        })
    }
}

fn check_eps(eps: &Q) -> Result<()> {
    if eps <= &Q::zero() || eps >= &half() {
        return Err(Error::Precondition(format!(
            "epsilon {} must lie in (0, 1/2)",
            fmt_q(eps)
        )));
    }
    Ok(())
}

/// Least `n` with `2^{1−n} ≤ 1/2 − ε`.
pub fn min_index_for_eps(eps: &Q) -> Result<usize> {
    check_eps(eps)?;
    let gap = half() - eps;
    (0..THRESHOLD_LIMIT)
        .find(|&n| pow2(1 - n as i64) <= gap)
        .ok_or_else(|| {
            Error::Threshold(format!(
                "no index below {THRESHOLD_LIMIT} for epsilon {}",
                fmt_q(eps)
            ))
        })
}

/// Exact `|S ∩ I_n|`, with overflow turned into a request for a structured descriptor.
fn interval_hits(s: &OmegaSet, p: &IntervalPartition, n: usize) -> Result<BigUint> {
    s.count_range(&p.boundary(n), &p.boundary(n + 1)).map_err(|e| match e {
        Error::HorizonOverflow { .. } | Error::PeriodTooLarge(_) => Error::Precondition(format!(
            "S = {s} has no exact cardinality on interval {n} ({e}); supply a structured or interval-symbolic descriptor"
        )),
        e => e,
    })
}

/// Outcome of one interval chosen by [`defeat_bisector`].
#[derive(Clone, Debug, Serialize)]
pub struct Round {
    pub index: usize,
    pub chain: ChainKind,
    #[serde(with = "crate::rational::serde_big")]
    pub hits: BigUint,
    #[serde(with = "crate::rational::serde_big")]
    pub size: BigUint,
}

#[derive(Clone, Debug, Serialize)]
pub struct Defeat {
    pub x: OmegaSet,
    pub condition: Condition,
    pub rounds: Vec<Round>,
    pub certificates: Vec<Certificate>,
}

/// Exact `(|S ∩ X ∩ I_{≤n}|, |X ∩ I_{≤n}|)` for an interval-symbolic `X`.
pub fn prefix_counts(s: &OmegaSet, x: &SymbolicSet, n: usize) -> Result<(BigUint, BigUint)> {
    let p = x.partition();
    let (mut num, mut den) = (BigUint::zero(), BigUint::zero());
    for k in 0..=n {
        let kind = x.kind_at(k);
        den += kind_card(p, k, &kind)?;
        num += set_inter_card(p, k, s, &kind)?;
    }
    Ok((num, den))
}

/// Builds `X` interval by interval so that the ratio of `S` in `X` escapes the
/// `ε`-band at `rounds` chosen intervals, starting from the condition `start`.
///
/// At each chosen `n`, `X ∩ I_n` is `S ∩ I_n` when `S` holds a strict majority of
/// `I_n` and `I_n \ S` otherwise. Intervals outside the condition get their least
/// element so that `X` stays infinite.
pub fn defeat_bisector(
    s: &OmegaSet,
    eps: &Q,
    partition: &Arc<IntervalPartition>,
    start: &Condition,
    rounds: usize,
) -> Result<Defeat> {
    if rounds == 0 {
        return Err(Error::Precondition("rounds must be at least 1".into()));
    }
    s.require_infinite("S")?;
    let n0 = min_index_for_eps(eps)?;
    let mut cond = start.clone();
    let mut chosen = Vec::with_capacity(rounds);
    let mut n = n0;
    while chosen.len() < rounds {
        while cond.get(n).is_some() {
            n += 1;
        }
        let size = partition.size(n);
        let hits = interval_hits(s, partition, n)?;
        let (chain, kind) = if &hits * 2u32 > size {
            (ChainKind::Majority, PartKind::trace(s))
        } else {
            (
                ChainKind::Minority,
                PartKind::complement_of(PartKind::trace(s)),
            )
        };
        cond = cond.extend(partition, n, kind)?;
        chosen.push(Round {
            index: n,
            chain,
            hits,
            size,
        });
        n += 1;
    }
    if let GrowthVerdict::Violation { index } = partition.verify_growth() {
        return Err(Error::Precondition(format!(
            "partition violates the growth law at interval {index}"
        )));
    }
    let mut x = SymbolicSet::new(partition.clone(), PartRule::Singleton);
    for (k, v) in &cond.values {
        x = x.with_override(*k, v.kind.clone())?;
    }
    let mut certificates = Vec::with_capacity(rounds);
    for r in &chosen {
        let (num, den) = prefix_counts(s, &x, r.index)?;
        let raw = Raw {
            below: partition.boundary(r.index),
            size: r.size.clone(),
            hit: r.hits.clone(),
            num,
            den,
        };
        certificates.push(Certificate::issue(
            r.chain,
            r.index,
            None,
            eps.clone(),
            None,
            raw,
        )?);
    }
    Ok(Defeat {
        x: x.into_set(),
        condition: cond,
        rounds: chosen,
        certificates,
    })
}

/// `S` restricted interval by interval: `bern(p, seed)` on every interval that fits
/// under the materialization cap, the first half of each larger interval.
pub fn per_interval_bernoulli(
    partition: &Arc<IntervalPartition>,
    p: Q,
    seed: u64,
) -> Result<OmegaSet> {
    let b = OmegaSet::bernoulli(p, seed)?;
    let cap = BigUint::from(horizon_cap());
    let mut s = SymbolicSet::new(partition.clone(), PartRule::FirstFraction(half()));
    let mut n = 0;
    while partition.size(n) <= cap {
        s = s.with_override(n, PartKind::trace(&b))?;
        n += 1;
    }
    Ok(s.into_set())
}

fn check_gap(eps: &Q, eps_prime: &Q) -> Result<()> {
    check_eps(eps)?;
    if eps_prime <= eps || eps_prime >= &half() {
        return Err(Error::Precondition(format!(
            "need 0 < epsilon < epsilon' < 1/2, got {} and {}",
            fmt_q(eps),
            fmt_q(eps_prime)
        )));
    }
    Ok(())
}

/// `(n₀, k₀)`: `n₀` is least with `(1 + 2^{−n})(1/2 + ε) < 1/2 + ε′` and
/// `1/2 − ε − 2^{−n} > 1/2 − ε′`; `k₀` is least with
/// `2^{−k}/(1/2 − ε′) + 1 ≤ 1/(1/2 + ε)`.
pub fn centred_thresholds(eps: &Q, eps_prime: &Q) -> Result<(usize, usize)> {
    check_gap(eps, eps_prime)?;
    let (up, up_p, low_p) = (half() + eps, half() + eps_prime, half() - eps_prime);
    let n0 = (0..THRESHOLD_LIMIT).find(|&n| {
        let t = pow2(-(n as i64));
        (Q::one() + &t) * &up < up_p && half() - eps - &t > low_p
    });
    let bound = up.recip();
    let k0 = (0..THRESHOLD_LIMIT).find(|&k| pow2(-(k as i64)) / &low_p + Q::one() <= bound);
    match (n0, k0) {
        (Some(n0), Some(k0)) => Ok((n0, k0)),
        _ => Err(Error::Threshold(
            "thresholds exceed the search limit".into(),
        )),
    }
}

fn band_check(p: &IntervalPartition, k: usize, kind: &PartKind, eps_prime: &Q) -> Result<BigUint> {
    let card = kind_card(p, k, kind)?;
    let r = ratio(&card, &p.size(k));
    if card.is_zero() || r <= half() - eps_prime || r >= half() + eps_prime {
        return Err(Error::Band {
            index: k,
            detail: format!(
                "|E_k|/|I_k| = {} is outside ({}, {})",
                fmt_q(&r),
                fmt_q(&(half() - eps_prime)),
                fmt_q(&(half() + eps_prime))
            ),
        });
    }
    Ok(card)
}

/// Certifies that for `X = ⋃ E_k` every `B` agreeing with `E_n` on `I_n` has
/// `|B ∩ X ∩ I_{≤n}| / |X ∩ I_{≤n}| ≥ 1/2 + ε`.
pub fn centred_escape(e: &SymbolicSet, eps: &Q, eps_prime: &Q, n: usize) -> Result<Certificate> {
    let (_, k0) = centred_thresholds(eps, eps_prime)?;
    if n < k0 {
        return Err(Error::Threshold(format!("n = {n} is below k0 = {k0}")));
    }
    let p = e.partition();
    let mut den = BigUint::zero();
    let mut hit = BigUint::zero();
    for k in 0..=n {
        hit = band_check(p, k, &e.kind_at(k), eps_prime)?;
        den += &hit;
    }
    let raw = Raw {
        below: p.boundary(n),
        size: p.size(n),
        hit: hit.clone(),
        num: hit,
        den,
    };
    Certificate::issue(
        ChainKind::Centred,
        n,
        None,
        eps.clone(),
        Some(eps_prime.clone()),
        raw,
    )
}

/// `(first, count)` of the intervals forming block `Q_m = ⋃_{m′<2^m} I_{2^m+m′}`.
pub fn laver_blocks(m: u32) -> (usize, usize) {
    (1usize << m, 1usize << m)
}

/// Per-block candidate families: `blocks[m][m′][j]` describes `S^m_{m′} ∩ I_{2^m+j}`,
/// and `branch[m]` picks the member that traps the hidden set in block `m`.
#[derive(Clone, Debug)]
pub struct Slalom {
    pub blocks: Vec<Vec<Vec<PartKind>>>,
    pub branch: Vec<usize>,
}

impl Slalom {
    /// Builds `depth` blocks from `f(m, m′, n)`, `n` being the absolute interval index.
    pub fn from_fn(
        depth: u32,
        branch: Vec<usize>,
        f: impl Fn(u32, usize, usize) -> PartKind,
    ) -> Self {
        let blocks = (0..depth)
            .map(|m| {
                let (first, count) = laver_blocks(m);
                (0..count)
                    .map(|mp| (0..count).map(|j| f(m, mp, first + j)).collect())
                    .collect()
            })
            .collect();
        Slalom { blocks, branch }
    }

    pub fn validate(&self) -> Result<()> {
        for (m, block) in self.blocks.iter().enumerate() {
            let want = 1usize << m;
            if block.len() != want {
                return Err(Error::Precondition(format!(
                    "block {m} holds {} candidates, expected {want}",
                    block.len()
                )));
            }
            if let Some(mp) = block.iter().position(|s| s.len() != want) {
                return Err(Error::Precondition(format!(
                    "candidate {mp} of block {m} covers {} intervals, expected {want}",
                    block[mp].len()
                )));
            }
            match self.branch.get(m) {
                Some(&b) if b < want => {}
                Some(&b) => {
                    return Err(Error::Precondition(format!(
                        "branch {b} at block {m} is not below {want}"
                    )))
                }
                None => return Err(Error::Precondition(format!("no branch for block {m}"))),
            }
        }
        Ok(())
    }

    /// `X = ⋃_m ⋃_{m′} S^m_{m′} ∩ I_{2^m+m′}`: empty on `I_0`, one point per
    /// interval beyond the supplied blocks.
    pub fn assemble(&self, partition: &Arc<IntervalPartition>) -> Result<SymbolicSet> {
        self.validate()?;
        let mut x = SymbolicSet::new(partition.clone(), PartRule::Singleton)
            .with_override(0, PartKind::Empty)?;
        for (m, block) in self.blocks.iter().enumerate() {
            let first = 1usize << m;
            for (mp, cand) in block.iter().enumerate() {
                x = x.with_override(first + mp, cand[mp].clone())?;
            }
        }
        Ok(x)
    }
}

/// Assembles `X` from the slalom and certifies the escape at `k = 2^m + b(m)`.
pub fn laver_escape(
    partition: &Arc<IntervalPartition>,
    slalom: &Slalom,
    eps: &Q,
    eps_prime: &Q,
    m: u32,
) -> Result<(OmegaSet, Certificate)> {
    check_gap(eps, eps_prime)?;
    slalom.validate()?;
    if slalom.blocks.len() <= m as usize {
        return Err(Error::Precondition(format!(
            "slalom has {} blocks, block {m} is missing",
            slalom.blocks.len()
        )));
    }
    if m >= 30 {
        return Err(Error::Precondition(format!("block {m} is out of reach")));
    }
    let low = half() - eps_prime;
    if pow2(-(1i64 << m)) / &low + Q::one() > (half() + eps).recip() {
        return Err(Error::Threshold(format!(
            "2^(-2^{m})/(1/2 - epsilon') + 1 exceeds 1/(1/2 + epsilon)"
        )));
    }
    for (mm, block) in slalom.blocks.iter().enumerate() {
        let first = 1usize << mm;
        for (mp, cand) in block.iter().enumerate() {
            for (j, kind) in cand.iter().enumerate() {
                kind.validate(&partition.size(first + j))?;
            }
            band_check(partition, first + mp, &cand[mp], eps_prime)?;
        }
    }
    let x = slalom.assemble(partition)?;
    let b = slalom.branch[m as usize];
    let k = (1usize << m) + b;
    let mut den = BigUint::zero();
    for j in 0..=k {
        den += x.card(j)?;
    }
    let hit = kind_card(partition, k, &slalom.blocks[m as usize][b][b])?;
    let raw = Raw {
        below: partition.boundary(k),
        size: partition.size(k),
        hit: hit.clone(),
        num: hit,
        den,
    };
    let cert = Certificate::issue(
        ChainKind::Slalom,
        k,
        Some(m),
        eps.clone(),
        Some(eps_prime.clone()),
        raw,
    )?;
    Ok((x.into_set(), cert))
}

/// First `⌈|I_n|/2⌉` elements of every interval.
pub fn first_half(partition: &Arc<IntervalPartition>) -> SymbolicSet {
    SymbolicSet::new(partition.clone(), PartRule::FirstFraction(half()))
}

/// Ratio `|B ∩ X ∩ I_{≤n}| / |X ∩ I_{≤n}|` recounted from scratch through the set engine.
pub fn recount_ratio(
    b: &OmegaSet,
    x: &OmegaSet,
    partition: &IntervalPartition,
    n: usize,
) -> Result<Q> {
    let end = partition.boundary(n + 1);
    let den = x.count_below(&end)?;
    if den.is_zero() {
        return Err(Error::Precondition(format!(
            "X is empty below interval {}",
            n + 1
        )));
    }
    Ok(ratio(&b.intersect(x).count_below(&end)?, &den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn minimal() -> Arc<IntervalPartition> {
        Arc::new(IntervalPartition::minimal(8))
    }

    #[test]
    fn thresholds_for_epsilon() {
        assert_eq!(min_index_for_eps(&q(1, 4)).unwrap(), 3);
        assert_eq!(min_index_for_eps(&q(2, 5)).unwrap(), 5);
        assert_eq!(min_index_for_eps(&q(1, 100)).unwrap(), 3);
        assert!(min_index_for_eps(&half()).is_err());
    }

    #[test]
    fn centred_threshold_values() {
        assert_eq!(centred_thresholds(&q(1, 10), &q(1, 5)).unwrap(), (4, 3));
        assert_eq!(centred_thresholds(&q(1, 5), &q(21, 100)).unwrap(), (7, 4));
        assert!(centred_thresholds(&q(1, 5), &q(1, 10)).is_err());
    }

    #[test]
    fn conditions_extend() {
        let p = minimal();
        let a = Condition::new().extend(&p, 2, PartKind::Full).unwrap();
        let b = a.extend(&p, 4, PartKind::singleton()).unwrap();
        assert!(b.extends(&a) && !a.extends(&b));
        assert!(b.extend(&p, 2, PartKind::Empty).is_err());
        assert!(a
            .extend(&p, 1, PartKind::First(BigUint::from(9u32)))
            .is_err());
    }

    #[test]
    fn full_splitter_triggers_majority() {
        let p = minimal();
        let d = defeat_bisector(&OmegaSet::full(), &q(1, 4), &p, &Condition::new(), 2).unwrap();
        assert!(d.rounds.iter().all(|r| r.chain == ChainKind::Majority));
        assert_eq!(d.rounds[0].index, 3);
        for c in &d.certificates {
            c.verify().unwrap();
            assert!(c.ratio() >= q(3, 4));
        }
    }

    #[test]
    fn evens_follow_exact_parity() {
        let p = minimal();
        let d = defeat_bisector(&OmegaSet::evens(), &q(1, 4), &p, &Condition::new(), 2).unwrap();
        let kinds: Vec<_> = d.rounds.iter().map(|r| r.chain).collect();
        assert_eq!(kinds, vec![ChainKind::Majority, ChainKind::Minority]);
        let even = Arc::new(IntervalPartition::new(
            crate::partition::Growth::Minimal,
            8,
            true,
        ));
        let d = defeat_bisector(&OmegaSet::evens(), &q(1, 4), &even, &Condition::new(), 3).unwrap();
        assert!(d.rounds.iter().all(|r| r.chain == ChainKind::Minority));
    }

    #[test]
    fn certified_ratio_matches_recount() {
        let p = minimal();
        let s = OmegaSet::progression(1u32, 3).unwrap();
        let d = defeat_bisector(&s, &q(1, 10), &p, &Condition::new(), 3).unwrap();
        for c in &d.certificates {
            assert_eq!(recount_ratio(&s, &d.x, &p, c.index).unwrap(), c.ratio());
        }
    }

    #[test]
    fn finite_splitters_are_rejected() {
        let p = minimal();
        let empty = SymbolicSet::new(p.clone(), PartRule::Kind(PartKind::Empty)).into_set();
        assert!(matches!(
            defeat_bisector(&empty, &q(1, 4), &p, &Condition::new(), 1),
            Err(Error::FiniteSet(_))
        ));
    }

    #[test]
    fn existing_conditions_are_skipped() {
        let p = minimal();
        let start = Condition::new().extend(&p, 3, PartKind::Full).unwrap();
        let d = defeat_bisector(&OmegaSet::evens(), &q(1, 4), &p, &start, 1).unwrap();
        assert_eq!(d.rounds[0].index, 4);
        assert!(d.condition.extends(&start));
    }

    #[test]
    fn centred_escape_on_first_halves() {
        let p = minimal();
        let c = centred_escape(&first_half(&p), &q(1, 10), &q(1, 5), 4).unwrap();
        assert!(c.ratio() >= q(3, 5));
        let quarter = SymbolicSet::new(p.clone(), PartRule::FirstFraction(q(1, 2)))
            .with_override(4, PartKind::First(BigUint::from(1300u32)))
            .unwrap();
        assert!(matches!(
            centred_escape(&quarter, &q(1, 10), &q(1, 5), 4),
            Err(Error::Band { index: 4, .. })
        ));
        assert!(matches!(
            centred_escape(&first_half(&p), &q(1, 10), &q(1, 5), 1),
            Err(Error::Threshold(_))
        ));
    }

    #[test]
    fn block_layout() {
        assert_eq!(laver_blocks(0), (1, 1));
        assert_eq!(laver_blocks(1), (2, 2));
        assert_eq!(laver_blocks(3), (8, 8));
    }

    #[test]
    fn slalom_escape() {
        let p = minimal();
        let s = Slalom::from_fn(4, vec![0; 4], |_, _, _| PartKind::Full);
        let halves = Slalom {
            blocks: s
                .blocks
                .iter()
                .enumerate()
                .map(|(m, b)| {
                    b.iter()
                        .map(|c| {
                            (0..c.len())
                                .map(|j| {
                                    let n = (1usize << m) + j;
                                    PartKind::First((p.size(n) + 1u32) / 2u32)
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect(),
            branch: vec![0; 4],
        };
        let (_, cert) = laver_escape(&p, &halves, &q(1, 10), &q(1, 5), 3).unwrap();
        assert_eq!(cert.index, 8);
        assert!(matches!(
            laver_escape(&p, &halves, &q(1, 10), &q(1, 5), 0),
            Err(Error::Threshold(_))
        ));
        let mut broken = halves.clone();
        broken.blocks[2].pop();
        assert!(laver_escape(&p, &broken, &q(1, 10), &q(1, 5), 3).is_err());
        assert!(
            laver_escape(&p, &s, &q(1, 10), &q(1, 5), 3).is_err(),
            "full intervals leave the band"
        );
    }
}
