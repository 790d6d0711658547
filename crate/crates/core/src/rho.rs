//! Exact digit expansions and level selection used to trade one splitting ratio for another.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{floor_u, fmt_q, pow2, q, qpow, qu, Q};

fn check_open_unit(p: &Q, what: &str) -> Result<()> {
    if p <= &Q::zero() || p >= &Q::one() {
        return Err(Error::Precondition(format!(
            "{what} = {} must lie in (0, 1)",
            fmt_q(p)
        )));
    }
    Ok(())
}

/// Positions `m ∈ 1..=k` of the binary digits of `rho` that are 1, and the residual
/// `rho − Σ 2^{−m}`, which lies in `[0, 2^{−k})`. Dyadic inputs terminate.
pub fn binary_digits(rho: &Q, k: u32) -> Result<(Vec<u32>, Q)> {
    check_open_unit(rho, "rho")?;
    let mut r = rho.clone();
    let mut digits = Vec::new();
    for m in 1..=k {
        let w = pow2(-(m as i64));
        if w <= r {
            r -= w;
            digits.push(m);
        }
        if r.is_zero() {
            break;
        }
    }
    Ok((digits, r))
}

/// Greedy expansion `x = Σ c_n bⁿ + residual`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Expansion {
    /// Greatest `n` with `bⁿ ≤ x`.
    pub top: i64,
    /// Non-zero digits, exponents descending.
    pub digits: Vec<(i64, BigUint)>,
    #[serde(with = "crate::rational::serde_q")]
    pub residual: Q,
}

impl Expansion {
    /// `Σ c_n bⁿ`.
    pub fn value(&self, b: &Q) -> Q {
        self.digits.iter().map(|(n, c)| qu(c) * qpow(b, *n)).sum()
    }
}

/// Greedy digits of `x` in base `b > 1` over `k` positions from the top exponent down.
/// Every digit satisfies `0 ≤ c < b` and the residual lies in `[0, b^{top−k+1})`.
pub fn greedy_base_digits(x: &Q, b: &Q, k: u32) -> Result<Expansion> {
    if x <= &Q::zero() {
        return Err(Error::Precondition(format!(
            "x = {} must be positive",
            fmt_q(x)
        )));
    }
    if b <= &Q::one() {
        return Err(Error::Precondition(format!(
            "base {} must exceed 1",
            fmt_q(b)
        )));
    }
    if k == 0 {
        return Err(Error::Precondition(
            "need at least one digit position".into(),
        ));
    }
    let mut top = 0i64;
    let mut p = Q::one();
    if &p <= x {
        while &(&p * b) <= x {
            p *= b;
            top += 1;
        }
    } else {
        while &p > x {
            p /= b;
            top -= 1;
        }
    }
    let cap = b.ceil().to_integer().to_biguint().expect("positive") - 1u32;
    let mut r = x.clone();
    let mut digits = Vec::new();
    for i in 0..k as i64 {
        let c = floor_u(&(&r / &p)).min(cap.clone());
        if !c.is_zero() {
            r -= qu(&c) * &p;
            digits.push((top - i, c));
        }
        p /= b;
    }
    Ok(Expansion {
        top,
        digits,
        residual: r,
    })
}

/// Level weights `w_m` for `m ≥ 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Weights {
    /// `w_m = ρ^{m−1}(1 − ρ)`.
    Geometric {
        #[serde(with = "crate::rational::serde_q")]
        rho: Q,
    },
    /// `w_m = 2^{−m}`.
    Dyadic,
}

impl Weights {
    pub fn weight(&self, m: u32) -> Q {
        match self {
            Weights::Geometric { rho } => qpow(rho, m as i64 - 1) * (Q::one() - rho),
            Weights::Dyadic => pow2(-(m as i64)),
        }
    }

    /// `Σ_{m ≥ 1} w_m`.
    pub fn total(&self) -> Q {
        Q::one()
    }
}

/// Greedy selection: take `m` in ascending order whenever `w_m` fits in what remains.
pub fn select_levels(weights: &Weights, target: &Q, k: u32) -> Result<(Vec<u32>, Q)> {
    if let Weights::Geometric { rho } = weights {
        check_open_unit(rho, "rho")?;
    }
    if target <= &Q::zero() || target >= &weights.total() {
        return Err(Error::Precondition(format!(
            "target {} outside (0, 1)",
            fmt_q(target)
        )));
    }
    let mut r = target.clone();
    let mut chosen = Vec::new();
    for m in 1..=k {
        let w = weights.weight(m);
        if w <= r {
            r -= w;
            chosen.push(m);
        }
    }
    Ok((chosen, r))
}

/// One move towards `(1/3, 2/3)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainOp {
    Square,
    Complement,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SquaringChain {
    pub ops: Vec<ChainOp>,
    #[serde(with = "crate::rational::serde_q::vec")]
    pub values: Vec<Q>,
}

impl SquaringChain {
    pub fn result(&self) -> &Q {
        self.values.last().expect("starts with the input")
    }

    pub fn squarings(&self) -> usize {
        self.ops.iter().filter(|o| **o == ChainOp::Square).count()
    }
}

pub const SQUARING_LIMIT: usize = 64;

/// Squares while at or above 2/3 and complements while at or below 1/3 until the value
/// lands in `(1/3, 2/3)`.
pub fn squaring_chain(rho: &Q) -> Result<SquaringChain> {
    check_open_unit(rho, "rho")?;
    let (lo, hi) = (q(1, 3), q(2, 3));
    let mut ops = Vec::new();
    let mut values = vec![rho.clone()];
    let mut v = rho.clone();
    while v <= lo || v >= hi {
        if ops.len() == SQUARING_LIMIT {
            return Err(Error::SearchExhausted(SQUARING_LIMIT as u64));
        }
        let op = if v <= lo {
            ChainOp::Complement
        } else {
            ChainOp::Square
        };
        // Both operations keep a reduced fraction reduced, so skip the gcd.
        let (n, d) = (v.numer(), v.denom());
        v = match op {
            ChainOp::Complement => Q::new_raw(d - n, d.clone()),
            ChainOp::Square => Q::new_raw(n * n, d * d),
        };
        ops.push(op);
        values.push(v.clone());
    }
    Ok(SquaringChain { ops, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::half;

    fn big(n: u32) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn binary_examples() {
        assert_eq!(binary_digits(&q(1, 2), 10).unwrap(), (vec![1], Q::zero()));
        assert_eq!(binary_digits(&q(11, 16), 10).unwrap().0, vec![1, 3, 4]);
        assert_eq!(binary_digits(&q(7, 16), 8).unwrap().0, vec![2, 3, 4]);
        let (d, r) = binary_digits(&q(1, 3), 8).unwrap();
        assert_eq!(d, vec![2, 4, 6, 8]);
        assert_eq!(r, q(1, 3 * 256));
        assert!(binary_digits(&Q::one(), 4).is_err());
    }

    #[test]
    fn base_examples() {
        let e = greedy_base_digits(&Q::one(), &q(3, 2), 5).unwrap();
        assert_eq!((e.digits, e.residual), (vec![(0, big(1))], Q::zero()));
        let e = greedy_base_digits(&q(1, 2), &q(2, 1), 4).unwrap();
        assert_eq!((e.top, e.digits), (-1, vec![(-1, big(1))]));
        let e = greedy_base_digits(&q(5, 2), &q(3, 2), 8).unwrap();
        assert_eq!(e.top, 2);
        assert_eq!(e.digits, vec![(2, big(1)), (-4, big(1))]);
        assert_eq!(e.residual, q(17, 324));
        let e = greedy_base_digits(&q(23, 1), &q(5, 2), 3).unwrap();
        assert_eq!(e.digits, vec![(3, big(1)), (2, big(1))]);
        assert_eq!(e.residual, q(9, 8));
        assert_eq!(e.value(&q(5, 2)) + &e.residual, q(23, 1));
    }

    #[test]
    fn level_examples() {
        let (p, r) = select_levels(&Weights::Geometric { rho: q(3, 5) }, &half(), 12).unwrap();
        assert_eq!(&p[..2], &[1, 4]);
        assert!(r >= Q::zero());
        for rho in [q(7, 16), q(3, 5), q(1, 3)] {
            assert_eq!(
                select_levels(&Weights::Dyadic, &rho, 9).unwrap(),
                binary_digits(&rho, 9).unwrap()
            );
        }
        let w = Weights::Geometric { rho: q(1, 2) };
        let all: Q = (1..=5).map(|m| w.weight(m)).sum();
        assert_eq!(
            select_levels(&w, &all, 5).unwrap(),
            (vec![1, 2, 3, 4, 5], Q::zero())
        );
    }

    #[test]
    fn squaring_examples() {
        let c = squaring_chain(&q(3, 4)).unwrap();
        assert_eq!(
            (c.ops.clone(), c.result().clone()),
            (vec![ChainOp::Square], q(9, 16))
        );
        assert!(squaring_chain(&half()).unwrap().ops.is_empty());
        let c = squaring_chain(&q(1, 10)).unwrap();
        assert_eq!(c.ops[0], ChainOp::Complement);
        assert_eq!(c.squarings(), 2);
        assert_eq!(c.result(), &q(6561, 10000));
        assert!(squaring_chain(&q(6561, 10000)).unwrap().result() < &q(2, 3));
    }
}
