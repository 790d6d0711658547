//! Interval partitions `I_0, I_1, ...` of ω with `|I_0| ≥ 2` and `|I_n| > 2ⁿ·b_n`,
//! where `b_n = min I_n = |I_{<n}|`.

use std::sync::{Arc, RwLock};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{ceil_u, fmt_q, parse_q, qu, ratio, Q};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Growth {
    /// Smallest sizes obeying the strict growth law.
    Minimal,
    /// Minimal size times `f ≥ 1`, rounded up.
    Factor(Q),
}

impl std::str::FromStr for Growth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "minimal" => Ok(Growth::Minimal),
            other => {
                let f = other.strip_prefix("factor:").ok_or_else(|| {
                    Error::Parse(format!("expected minimal or factor:<f>, got {other:?}"))
                })?;
                let f = parse_q(f)?;
                if f < Q::one() {
                    return Err(Error::Precondition(format!("growth factor {f} below 1")));
                }
                Ok(Growth::Factor(f))
            }
        }
    }
}

impl std::fmt::Display for Growth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Growth::Minimal => write!(f, "minimal"),
            Growth::Factor(x) => write!(f, "factor:{}", fmt_q(x)),
        }
    }
}

/// Lazily extended boundary sequence `b_0 = 0 < b_1 < ...`.
#[derive(Debug)]
pub struct IntervalPartition {
    growth: Growth,
    even_sizes: bool,
    /// Boundaries supplied verbatim; growth applies only beyond them.
    raw_len: usize,
    bounds: RwLock<Vec<BigUint>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum GrowthVerdict {
    Ok,
    Violation { index: usize },
}

#[derive(Serialize, Deserialize)]
struct Wire {
    growth: String,
    even_sizes: bool,
    #[serde(with = "crate::rational::serde_big::vec")]
    boundaries: Vec<BigUint>,
}

impl Clone for IntervalPartition {
    fn clone(&self) -> Self {
        IntervalPartition {
            growth: self.growth.clone(),
            even_sizes: self.even_sizes,
            raw_len: self.raw_len,
            bounds: RwLock::new(self.bounds.read().expect("poisoned").clone()),
        }
    }
}

/// Least size allowed for interval `n` whose left end is `b`.
pub fn minimal_size(n: usize, b: &BigUint, even: bool) -> BigUint {
    let mut s = if n == 0 {
        BigUint::from(2u32)
    } else {
        (b << n) + 1u32
    };
    if even && s.is_odd() {
        s += 1u32;
    }
    s
}

impl IntervalPartition {
    pub fn new(growth: Growth, count: usize, even_sizes: bool) -> Self {
        let p = IntervalPartition {
            growth,
            even_sizes,
            raw_len: 0,
            bounds: RwLock::new(vec![BigUint::zero()]),
        };
        p.ensure(count);
        p
    }

    pub fn minimal(count: usize) -> Self {
        Self::new(Growth::Minimal, count, false)
    }

    /// A partition with verbatim boundaries (which may violate the growth law),
    /// extended minimally beyond them.
    pub fn from_boundaries(bounds: Vec<BigUint>) -> Result<Self> {
        if bounds.first().is_none_or(|b| !b.is_zero()) {
            return Err(Error::Precondition("boundaries must start at 0".into()));
        }
        if bounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition(
                "boundaries must be strictly increasing".into(),
            ));
        }
        Ok(IntervalPartition {
            growth: Growth::Minimal,
            even_sizes: false,
            raw_len: bounds.len(),
            bounds: RwLock::new(bounds),
        })
    }

    pub fn growth(&self) -> &Growth {
        &self.growth
    }

    pub fn even_sizes(&self) -> bool {
        self.even_sizes
    }

    fn next_size(&self, n: usize, b: &BigUint) -> BigUint {
        let min = minimal_size(n, b, self.even_sizes);
        match &self.growth {
            Growth::Minimal => min,
            Growth::Factor(f) => {
                let mut s = ceil_u(&(f * qu(&min)));
                if self.even_sizes && s.is_odd() {
                    s += 1u32;
                }
                s
            }
        }
    }

    /// Materializes boundaries `b_0, ..., b_count`.
    fn ensure(&self, count: usize) {
        if self.bounds.read().expect("poisoned").len() > count {
            return;
        }
        let mut w = self.bounds.write().expect("poisoned");
        while w.len() <= count {
            let n = w.len() - 1;
            let b = w[n].clone();
            let s = self.next_size(n, &b);
            w.push(b + s);
        }
    }

    /// `b_n = min I_n = |I_{<n}|`.
    pub fn boundary(&self, n: usize) -> BigUint {
        self.ensure(n);
        self.bounds.read().expect("poisoned")[n].clone()
    }

    pub fn size(&self, n: usize) -> BigUint {
        self.ensure(n + 1);
        let r = self.bounds.read().expect("poisoned");
        &r[n + 1] - &r[n]
    }

    /// Number of intervals materialized so far.
    pub fn count(&self) -> usize {
        self.bounds.read().expect("poisoned").len() - 1
    }

    pub fn boundaries(&self) -> Vec<BigUint> {
        self.bounds.read().expect("poisoned").clone()
    }

    pub fn sizes(&self) -> Vec<BigUint> {
        let b = self.boundaries();
        b.windows(2).map(|w| &w[1] - &w[0]).collect()
    }

    /// The `n` with `b_n ≤ x < b_{n+1}`, extending boundaries as needed.
    pub fn interval_of(&self, x: &BigUint) -> usize {
        loop {
            {
                let r = self.bounds.read().expect("poisoned");
                if r.last().expect("non-empty") > x {
                    return r.partition_point(|b| b <= x) - 1;
                }
            }
            let c = self.count();
            self.ensure(c + 1);
        }
    }

    /// Number of intervals lying entirely below `x`.
    pub fn intervals_below(&self, x: &BigUint) -> usize {
        self.interval_of(x)
    }

    /// Least index violating the growth law among materialized intervals.
    pub fn verify_growth(&self) -> GrowthVerdict {
        let b = self.boundaries();
        for n in 0..b.len().saturating_sub(1) {
            let size = &b[n + 1] - &b[n];
            let ok = if n == 0 {
                size >= BigUint::from(2u32)
            } else {
                size > (&b[n] << n)
            };
            let parity = !self.even_sizes || size.is_even();
            if !ok || !parity {
                return GrowthVerdict::Violation { index: n };
            }
        }
        GrowthVerdict::Ok
    }

    /// `|I_{<n}| / |I_n|` as an exact rational.
    pub fn tail_ratio(&self, n: usize) -> Q {
        ratio(&self.boundary(n), &self.size(n))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(Wire {
            growth: self.growth.to_string(),
            even_sizes: self.even_sizes,
            boundaries: self.boundaries(),
        })
        .expect("serializable")
    }

    pub fn same_as(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other)
            || (self.growth == other.growth
                && self.even_sizes == other.even_sizes
                && self.raw_len == other.raw_len
                && {
                    let n = self.count().min(other.count());
                    self.boundaries()[..=n] == other.boundaries()[..=n]
                })
    }
}

impl Serialize for IntervalPartition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Wire {
            growth: self.growth.to_string(),
            even_sizes: self.even_sizes,
            boundaries: self.boundaries(),
        }
        .serialize(s)
    }
}

/// Builds a partition with `count ≥ 1` materialized intervals.
pub fn build_partition(
    growth: Growth,
    count: usize,
    even_sizes: bool,
) -> Result<IntervalPartition> {
    if count == 0 {
        return Err(Error::Precondition("count must be at least 1".into()));
    }
    Ok(IntervalPartition::new(growth, count, even_sizes))
}

pub fn interval_of(p: &IntervalPartition, x: &BigUint) -> usize {
    p.interval_of(x)
}

pub fn verify_growth(p: &IntervalPartition) -> GrowthVerdict {
    p.verify_growth()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn minimal_sizes() {
        let p = IntervalPartition::minimal(3);
        assert_eq!(p.sizes(), u(&[2, 5, 29]));
        assert_eq!(p.boundaries(), u(&[0, 2, 7, 36]));
        let e = IntervalPartition::new(Growth::Minimal, 3, true);
        assert_eq!(e.sizes(), u(&[2, 6, 34]));
        let one = build_partition(Growth::Minimal, 1, false).unwrap();
        assert_eq!(one.boundaries(), u(&[0, 2]));
        assert!(build_partition(Growth::Minimal, 0, false).is_err());
    }

    #[test]
    fn lookups() {
        let p = IntervalPartition::minimal(3);
        assert_eq!(p.interval_of(&0u32.into()), 0);
        assert_eq!(p.interval_of(&6u32.into()), 1);
        assert_eq!(p.interval_of(&7u32.into()), 2);
        assert_eq!(p.interval_of(&36u32.into()), 3);
        assert_eq!(p.count(), 4);
    }

    #[test]
    fn raw_violations() {
        let p = IntervalPartition::from_boundaries(u(&[0, 2, 6])).unwrap();
        assert_eq!(p.verify_growth(), GrowthVerdict::Violation { index: 1 });
        let p = IntervalPartition::from_boundaries(u(&[0, 1])).unwrap();
        assert_eq!(p.verify_growth(), GrowthVerdict::Violation { index: 0 });
        assert_eq!(
            IntervalPartition::minimal(16).verify_growth(),
            GrowthVerdict::Ok
        );
    }

    #[test]
    fn factor_growth() {
        let g: Growth = "factor:3/2".parse().unwrap();
        let p = IntervalPartition::new(g, 4, true);
        assert_eq!(p.verify_growth(), GrowthVerdict::Ok);
        assert_eq!(p.size(0), BigUint::from(4u32));
        assert!("factor:1/2".parse::<Growth>().is_err());
    }
}
