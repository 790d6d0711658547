//! The relation `X ⊏_n (H, E)`: for every `k ∈ H` with `k ≥ n`,
//! `|X ∩ E_k| < (1/2 + ε)(|X ∩ I_k| + |I_{<k}|)`.
//!
//! Everything is checked exactly, interval by interval, up to an index horizon.
//! Index sets `H` are explicit below the horizon and contain every index beyond it.

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::Serialize;

use crate::bits::BitBuf;
use crate::error::{Error, Result};
use crate::omega::OmegaSet;
use crate::partition::IntervalPartition;
use crate::rational::{ceil_u, fmt_q, half, pow2, q, qu, ratio, Q};
use crate::symbolic::{kind_card, set_inter_card, IntervalSubset, PartKind, PartRule, SymbolicSet};

/// A pair `(H, (E_k))` together with the ambient `ε`.
#[derive(Clone, Debug)]
pub struct GoodPair {
    /// Interval indices.
    pub h: OmegaSet,
    /// `E_k ⊆ I_k`, one descriptor per interval.
    pub e: SymbolicSet,
    pub epsilon: Q,
}

fn overflow(e: Error) -> Error {
    match e {
        Error::HorizonOverflow { .. } | Error::PeriodTooLarge(_) => {
            Error::Precondition(format!("missing exact intersection cardinalities ({e})"))
        }
        e => e,
    }
}

/// Index set equal to `bits` below its length and containing everything beyond.
pub fn index_set(bits: impl IntoIterator<Item = bool>) -> OmegaSet {
    OmegaSet::explicit(BitBuf::from_bools(bits), BitBuf::ones(1)).expect("non-empty tail")
}

impl GoodPair {
    pub fn new(h: OmegaSet, e: SymbolicSet, epsilon: Q) -> Result<Self> {
        if epsilon <= Q::zero() || epsilon >= half() {
            return Err(Error::Precondition(format!(
                "epsilon {} must lie in (0, 1/2)",
                fmt_q(&epsilon)
            )));
        }
        Ok(GoodPair { h, e, epsilon })
    }

    pub fn partition(&self) -> &Arc<IntervalPartition> {
        self.e.partition()
    }

    pub fn in_h(&self, k: usize) -> Result<bool> {
        self.h.contains(&BigUint::from(k))
    }

    /// Checks `|E_k|/|I_k| > 1/4` for every `k < horizon_k`.
    pub fn validate(&self, horizon_k: usize) -> Result<()> {
        for k in 0..horizon_k {
            let s = self.e.subset(k)?;
            if s.density(self.partition()) <= q(1, 4) {
                return Err(Error::Band {
                    index: k,
                    detail: format!(
                        "|E_k|/|I_k| = {} is not above 1/4",
                        fmt_q(&s.density(self.partition()))
                    ),
                });
            }
        }
        Ok(())
    }

    /// Plain view: indices of `H` and the descriptors of `E` below the horizon.
    pub fn summary(&self, horizon_k: usize) -> Result<PairSummary> {
        let mut h = Vec::new();
        let mut e = Vec::with_capacity(horizon_k);
        for k in 0..horizon_k {
            if self.in_h(k)? {
                h.push(k);
            }
            e.push(self.e.subset(k)?);
        }
        Ok(PairSummary {
            epsilon: self.epsilon.clone(),
            horizon_k,
            h,
            e,
            e_rule: self.e.rule().to_string(),
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PairSummary {
    #[serde(with = "crate::rational::serde_q")]
    pub epsilon: Q,
    pub horizon_k: usize,
    pub h: Vec<usize>,
    pub e: Vec<IntervalSubset>,
    /// Rule used for `E_k` beyond the explicit overrides.
    pub e_rule: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum RelVerdict {
    Holds,
    Fails {
        index: usize,
        #[serde(with = "crate::rational::serde_big")]
        lhs: BigUint,
        #[serde(with = "crate::rational::serde_q")]
        rhs: Q,
    },
}

impl RelVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, RelVerdict::Holds)
    }
}

/// Both sides of the defining inequality at interval `k`.
pub fn relation_sides(x: &OmegaSet, pair: &GoodPair, k: usize) -> Result<(BigUint, Q)> {
    let p = pair.partition();
    let lhs = set_inter_card(p, k, x, &pair.e.kind_at(k)).map_err(overflow)?;
    let xk = x
        .count_range(&p.boundary(k), &p.boundary(k + 1))
        .map_err(overflow)?;
    let rhs = (half() + &pair.epsilon) * qu(&(xk + p.boundary(k)));
    Ok((lhs, rhs))
}

/// Checks `X ⊏_n (H, E)` on every `k ∈ H ∩ [n, horizon_k)`; reports the least failure.
pub fn sq_rel_holds(
    x: &OmegaSet,
    pair: &GoodPair,
    n: usize,
    horizon_k: usize,
) -> Result<RelVerdict> {
    for k in n..horizon_k {
        if !pair.in_h(k)? {
            continue;
        }
        let (lhs, rhs) = relation_sides(x, pair, k)?;
        if qu(&lhs) >= rhs {
            return Ok(RelVerdict::Fails { index: k, lhs, rhs });
        }
    }
    Ok(RelVerdict::Holds)
}

/// Which side of a dichotomy a witness came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `X` is thin (below 3/4) on at least half the intervals.
    Thin,
    /// `X` is thick (at least 3/4) from some index on.
    Thick,
    /// `ω \ ⋃_{k∈H} E_k` meets at least half the intervals.
    Complement,
    /// One point per interval.
    Singletons,
}

#[derive(Clone, Debug)]
pub struct AboveWitness {
    pub pair: GoodPair,
    pub branch: Branch,
    /// The `n` for which `X ⊏_n` the pair.
    pub n: usize,
}

/// `⌈5s/16⌉` when it lies strictly between `s/4` and `3s/8`.
fn inner_count(s: &BigUint) -> Option<BigUint> {
    let c = ceil_u(&(q(5, 16) * qu(s)));
    (&c * 4u32 > *s && &c * 8u32 < s * 3u32).then_some(c)
}

/// Finds a pair that `X` is related to.
///
/// If `X ∩ I_k` covers less than 3/4 of `I_k` on at least half the intervals below
/// the horizon, `H` collects those intervals and `E_k = I_k \ X`. Otherwise `X` is
/// thick from some `K` on, and `E_k` is the first `⌈5|I_k|/16⌉` elements for `k ≥ K`.
pub fn witness_above(
    x: &OmegaSet,
    partition: &Arc<IntervalPartition>,
    eps: &Q,
    horizon_k: usize,
) -> Result<AboveWitness> {
    x.require_infinite("X")?;
    let thin: Vec<bool> = (0..horizon_k)
        .map(|k| {
            let c = x
                .count_range(&partition.boundary(k), &partition.boundary(k + 1))
                .map_err(overflow)?;
            Ok(ratio(&c, &partition.size(k)) < q(3, 4))
        })
        .collect::<Result<_>>()?;
    let thin_count = thin.iter().filter(|&&t| t).count();
    if 2 * thin_count >= horizon_k {
        let mut e = SymbolicSet::new(
            partition.clone(),
            PartRule::Kind(PartKind::complement_of(PartKind::trace(x))),
        );
        for (k, _) in thin.iter().enumerate().filter(|(_, &t)| !t) {
            e = e.with_override(k, PartKind::Full)?;
        }
        let pair = GoodPair::new(index_set(thin), e, eps.clone())?;
        return Ok(AboveWitness {
            pair,
            branch: Branch::Thin,
            n: 1,
        });
    }
    let start = thin.iter().rposition(|&t| t).map_or(0, |k| k + 1);
    let mut e = SymbolicSet::new(partition.clone(), PartRule::FirstFraction(q(5, 16)));
    let mut h = Vec::with_capacity(horizon_k);
    for k in 0..horizon_k {
        let member = k >= start && inner_count(&partition.size(k)).is_some();
        if !member {
            e = e.with_override(k, PartKind::Full)?;
        }
        h.push(member);
    }
    let pair = GoodPair::new(index_set(h), e, eps.clone())?;
    Ok(AboveWitness {
        pair,
        branch: Branch::Thick,
        n: 0,
    })
}

#[derive(Clone, Debug)]
pub struct BelowWitness {
    pub x: OmegaSet,
    pub branch: Branch,
}

/// Finds a set related to the pair at `n = 1`: `ω \ ⋃_{k∈H} E_k` when that meets at
/// least half the intervals below the horizon, otherwise one point per interval.
pub fn witness_below(pair: &GoodPair, horizon_k: usize) -> Result<BelowWitness> {
    let p = pair.partition();
    let mut x = SymbolicSet::new(
        p.clone(),
        PartRule::Complement(Box::new(pair.e.rule().clone())),
    );
    let mut met = 0usize;
    for k in 0..horizon_k {
        let kind = if pair.in_h(k)? {
            PartKind::complement_of(pair.e.kind_at(k))
        } else {
            PartKind::Full
        };
        if !kind_card(p, k, &kind)?.is_zero() {
            met += 1;
        }
        x = x.with_override(k, kind)?;
    }
    if 2 * met >= horizon_k {
        return Ok(BelowWitness {
            x: x.into_set(),
            branch: Branch::Complement,
        });
    }
    Ok(BelowWitness {
        x: SymbolicSet::new(p.clone(), PartRule::Singleton).into_set(),
        branch: Branch::Singletons,
    })
}

#[derive(Clone, Debug)]
pub struct Escape {
    pub y: OmegaSet,
    /// Interval where `Y` breaks the relation.
    pub index: usize,
}

/// Replaces `X ∩ I_k` by `E_k` at the least large enough `k ∈ H` with `min I_k ≥ m`,
/// producing `Y` with `Y ∩ m = X ∩ m` that is no longer related to the pair.
pub fn nwd_escape(
    x: &OmegaSet,
    pair: &GoodPair,
    n: usize,
    m: &BigUint,
    horizon_k: usize,
) -> Result<Escape> {
    if !sq_rel_holds(x, pair, n, horizon_k)?.holds() {
        return Err(Error::Precondition(format!(
            "X is not related to the pair at n = {n}"
        )));
    }
    let p = pair.partition();
    let up = half() + &pair.epsilon;
    for k in n..horizon_k {
        if !pair.in_h(k)? || &p.boundary(k) < m {
            continue;
        }
        let ek = pair.e.kind_at(k);
        let r = ratio(&kind_card(p, k, &ek)?, &p.size(k));
        if r > &up * (&r + pow2(-(k as i64))) {
            let (lo, hi) = (p.boundary(k), p.boundary(k + 1));
            let block = OmegaSet::range(lo.clone(), hi.clone());
            let y = x
                .difference(&block)
                .union(&ek.as_set(&lo, &hi).intersect(&block));
            return Ok(Escape { y, index: k });
        }
    }
    Err(Error::NoEscape(format!(
        "no k in H with min I_k >= {m} below index horizon {horizon_k} satisfies the largeness condition"
    )))
}

#[derive(Clone, Debug)]
pub struct ReapMap {
    pub pair: GoodPair,
    /// Whether `S′ = ω \ S`.
    pub complemented: bool,
}

/// Maps `S` to `(H_S, E^S)` with `H_S = {k : |S′ ∩ I_k|/|I_k| > 1/4}` and
/// `E^S_k = S′ ∩ I_k` on `H_S`, `I_k` elsewhere.
pub fn reap_tukey_map(
    s: &OmegaSet,
    partition: &Arc<IntervalPartition>,
    eps: &Q,
    horizon_k: usize,
) -> Result<ReapMap> {
    s.require_infinite("S")?;
    let quarter = q(1, 4);
    let dense = |set: &OmegaSet| -> Result<Vec<bool>> {
        (0..horizon_k)
            .map(|k| {
                let c = set
                    .count_range(&partition.boundary(k), &partition.boundary(k + 1))
                    .map_err(overflow)?;
                Ok(ratio(&c, &partition.size(k)) > quarter)
            })
            .collect()
    };
    let direct = dense(s)?;
    let complemented = 2 * direct.iter().filter(|&&d| d).count() < horizon_k;
    let (sp, h) = if complemented {
        let c = s.complement();
        let h = dense(&c)?;
        (c, h)
    } else {
        (s.clone(), direct)
    };
    let mut e = SymbolicSet::new(partition.clone(), PartRule::Kind(PartKind::trace(&sp)));
    for (k, _) in h.iter().enumerate().filter(|(_, &m)| !m) {
        e = e.with_override(k, PartKind::Full)?;
    }
    Ok(ReapMap {
        pair: GoodPair::new(index_set(h), e, eps.clone())?,
        complemented,
    })
}

/// Finite check of the map's contract against one `X`.
#[derive(Clone, Debug, Serialize)]
pub struct ContractReport {
    /// Least index from which `|S′ ∩ X ∩ I_{≤k}| / |X ∩ I_{≤k}| < 1/2 + ε` up to the horizon.
    pub k0: Option<usize>,
    /// Indices where `X ∩ I_{≤k}` is empty (the ratio is undefined there).
    pub empty_prefixes: Vec<usize>,
    /// `|X ∩ E_k|/(|X ∩ I_k| + |I_{<k}|) ≤ |S′ ∩ X ∩ I_{≤k}|/|X ∩ I_{≤k}|` at every non-empty `k ∈ H`.
    pub chain_ok: bool,
    /// `X ⊏_{k0} (H_S, E^S)` up to the horizon.
    pub related: bool,
}

/// Checks that `X` is related to `reap_tukey_map(S)` from the first index where
/// the prefix ratio of `S′` in `X` stays below `1/2 + ε`.
pub fn reap_contract(
    map: &ReapMap,
    s: &OmegaSet,
    x: &OmegaSet,
    horizon_k: usize,
) -> Result<ContractReport> {
    let pair = &map.pair;
    let p = pair.partition();
    let sp = if map.complemented {
        s.complement()
    } else {
        s.clone()
    };
    let sx = sp.intersect(x);
    let up = half() + &pair.epsilon;
    let mut empty_prefixes = Vec::new();
    let mut chain_ok = true;
    let mut k0 = Some(0);
    for k in 0..horizon_k {
        let end = p.boundary(k + 1);
        let den = x.count_below(&end).map_err(overflow)?;
        if den.is_zero() {
            empty_prefixes.push(k);
            k0 = Some(k + 1);
            continue;
        }
        let r = ratio(&sx.count_below(&end).map_err(overflow)?, &den);
        if r >= up {
            k0 = Some(k + 1);
        }
        if pair.in_h(k)? {
            let (lhs, rhs) = relation_sides(x, pair, k)?;
            let scaled = &rhs / &up;
            if !scaled.is_zero() && qu(&lhs) / scaled > r {
                chain_ok = false;
            }
        }
    }
    let k0 = k0.filter(|&k| k < horizon_k);
    let related = match k0 {
        Some(k) => sq_rel_holds(x, pair, k, horizon_k)?.holds(),
        None => false,
    };
    Ok(ContractReport {
        k0,
        empty_prefixes,
        chain_ok,
        related,
    })
}
