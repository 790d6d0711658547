//! Exact-rational inequality transcripts and their independent verifier.
//!
//! A certificate stores the raw cardinalities it was derived from together with
//! every step of the chain. Verification recomputes each step from the raw
//! values alone and rejects any mismatch, so editing a single number anywhere
//! in a serialized certificate is caught.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{fmt_q, half, pow2, qu, ratio, Q};

/// Which chain a certificate carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainKind {
    /// `|S ∩ I_n| > |I_n|/2`; `X ∩ I_n = S ∩ I_n` pushes the ratio up.
    Majority,
    /// `|S ∩ I_n| ≤ |I_n|/2`; `X ∩ I_n = I_n \ S` pushes the ratio down.
    Minority,
    /// `X = ⋃ E_k` with every `E_k` near half of `I_k`.
    Centred,
    /// `X` assembled from a slalom, escaping at `k = 2^m + b(m)`.
    Slalom,
}

impl fmt::Display for ChainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ChainKind::Majority => "majority",
            ChainKind::Minority => "minority",
            ChainKind::Centred => "centred",
            ChainKind::Slalom => "slalom",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rel {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl Rel {
    pub fn holds(self, a: &Q, b: &Q) -> bool {
        match self {
            Rel::Lt => a < b,
            Rel::Le => a <= b,
            Rel::Eq => a == b,
            Rel::Ge => a >= b,
            Rel::Gt => a > b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    #[serde(with = "crate::rational::serde_q")]
    pub lhs: Q,
    pub rel: Rel,
    #[serde(with = "crate::rational::serde_q")]
    pub rhs: Q,
}

impl Step {
    fn new(lhs: Q, rel: Rel, rhs: Q) -> Self {
        Step { lhs, rel, rhs }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}",
            fmt_q(&self.lhs),
            self.rel.symbol(),
            fmt_q(&self.rhs)
        )
    }
}

/// Cardinalities a chain is computed from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Raw {
    /// `|I_{<n}|`.
    #[serde(with = "crate::rational::serde_big")]
    pub below: BigUint,
    /// `|I_n|`.
    #[serde(with = "crate::rational::serde_big")]
    pub size: BigUint,
    /// `|S ∩ I_n|`, or `|E_n|` for centred and slalom chains.
    #[serde(with = "crate::rational::serde_big")]
    pub hit: BigUint,
    /// `|S ∩ X ∩ I_{≤n}|`.
    #[serde(with = "crate::rational::serde_big")]
    pub num: BigUint,
    /// `|X ∩ I_{≤n}|`.
    #[serde(with = "crate::rational::serde_big")]
    pub den: BigUint,
}

/// The claimed bound on `num / den`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conclusion {
    pub rel: Rel,
    #[serde(with = "crate::rational::serde_q")]
    pub bound: Q,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub chain: ChainKind,
    /// Interval index `n` (or `k` for slalom chains).
    pub index: usize,
    /// Slalom block `m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<u32>,
    #[serde(with = "crate::rational::serde_q")]
    pub epsilon: Q,
    #[serde(
        default,
        with = "crate::rational::serde_q::opt",
        skip_serializing_if = "Option::is_none"
    )]
    pub epsilon_prime: Option<Q>,
    pub raw: Raw,
    pub steps: Vec<Step>,
    pub conclusion: Conclusion,
}

fn reject(msg: impl Into<String>) -> Error {
    Error::Certificate(msg.into())
}

/// `1 / (a + 1)`.
fn inv1(a: Q) -> Q {
    (a + Q::one()).recip()
}

fn nonzero(x: &BigUint, what: &str) -> Result<Q> {
    if x.is_zero() {
        return Err(reject(format!("{what} is zero")));
    }
    Ok(qu(x))
}

/// Recomputes the full chain from the raw data.
fn derive(
    chain: ChainKind,
    index: usize,
    block: Option<u32>,
    eps: &Q,
    eps_prime: Option<&Q>,
    raw: &Raw,
) -> Result<(Vec<Step>, Conclusion)> {
    let n = i64::try_from(index).map_err(|_| reject("index too large"))?;
    let (b, s, h, num, den) = (
        qu(&raw.below),
        qu(&raw.size),
        qu(&raw.hit),
        qu(&raw.num),
        qu(&raw.den),
    );
    let den_q = nonzero(&raw.den, "denominator")?;
    let observed = &num / &den_q;
    let up = || Conclusion {
        rel: Rel::Ge,
        bound: half() + eps,
    };
    match chain {
        ChainKind::Majority => {
            let hq = nonzero(&raw.hit, "|S ∩ I_n|")?;
            let sq = nonzero(&raw.size, "|I_n|")?;
            let t = pow2(1 - n);
            let steps = vec![
                Step::new(h.clone(), Rel::Gt, &s / Q::from_integer(2.into())),
                Step::new(num.clone(), Rel::Ge, h.clone()),
                Step::new(den.clone(), Rel::Le, &b + &h),
                Step::new(observed, Rel::Ge, inv1(&b / &hq)),
                Step::new(
                    inv1(&b / &hq),
                    Rel::Gt,
                    inv1(Q::from_integer(2.into()) * &b / &sq),
                ),
                Step::new(
                    inv1(Q::from_integer(2.into()) * &b / &sq),
                    Rel::Gt,
                    inv1(t.clone()),
                ),
                Step::new(inv1(t.clone()), Rel::Ge, half() + eps),
                Step::new(t, Rel::Le, half() - eps),
            ];
            Ok((steps, up()))
        }
        ChainKind::Minority => {
            let sq = nonzero(&raw.size, "|I_n|")?;
            let miss = if raw.hit > raw.size {
                return Err(reject("|S ∩ I_n| exceeds |I_n|"));
            } else {
                &raw.size - &raw.hit
            };
            let mq = nonzero(&miss, "|I_n \\ S|")?;
            let t = pow2(1 - n);
            let steps = vec![
                Step::new(h.clone(), Rel::Le, &s / Q::from_integer(2.into())),
                Step::new(num.clone(), Rel::Le, b.clone()),
                Step::new(den.clone(), Rel::Ge, mq.clone()),
                Step::new(observed, Rel::Le, &b / &mq),
                Step::new(&b / &mq, Rel::Le, Q::from_integer(2.into()) * &b / &sq),
                Step::new(Q::from_integer(2.into()) * &b / &sq, Rel::Lt, t.clone()),
                Step::new(t, Rel::Le, half() - eps),
            ];
            Ok((
                steps,
                Conclusion {
                    rel: Rel::Le,
                    bound: half() - eps,
                },
            ))
        }
        ChainKind::Centred | ChainKind::Slalom => {
            let ep = eps_prime.ok_or_else(|| reject("chain needs epsilon_prime"))?;
            let hq = nonzero(&raw.hit, "|E_n|")?;
            let low = half() - ep;
            if low <= Q::zero() {
                return Err(reject("epsilon_prime must be below 1/2"));
            }
            let a = inv1(&b / &hq);
            let c = inv1(&b / (&low * &s));
            let d = inv1(pow2(-n) / &low);
            let mut steps = vec![
                Step::new(h.clone(), Rel::Gt, &low * &s),
                Step::new(h.clone(), Rel::Lt, (half() + ep) * &s),
                Step::new(num.clone(), Rel::Ge, h.clone()),
                Step::new(den.clone(), Rel::Le, &b + &h),
                Step::new(observed, Rel::Ge, a.clone()),
                Step::new(a, Rel::Gt, c.clone()),
                Step::new(c, Rel::Gt, d.clone()),
            ];
            if chain == ChainKind::Slalom {
                let m = block.ok_or_else(|| reject("slalom chain needs a block"))?;
                if m >= 62 {
                    return Err(reject("block too large"));
                }
                let first = 1usize << m;
                if index < first || index >= 2 * first {
                    return Err(reject(format!("index {index} is not in block {m}")));
                }
                let e = inv1(pow2(-(first as i64)) / &low);
                steps.push(Step::new(d, Rel::Ge, e.clone()));
                steps.push(Step::new(e, Rel::Ge, half() + eps));
            } else {
                steps.push(Step::new(d, Rel::Ge, half() + eps));
            }
            Ok((steps, up()))
        }
    }
}

impl Certificate {
    /// Builds a certificate, failing if any step of the chain does not hold.
    pub fn issue(
        chain: ChainKind,
        index: usize,
        block: Option<u32>,
        epsilon: Q,
        epsilon_prime: Option<Q>,
        raw: Raw,
    ) -> Result<Self> {
        let (steps, conclusion) =
            derive(chain, index, block, &epsilon, epsilon_prime.as_ref(), &raw)?;
        let c = Certificate {
            chain,
            index,
            block,
            epsilon,
            epsilon_prime,
            raw,
            steps,
            conclusion,
        };
        c.verify()?;
        Ok(c)
    }

    /// `num / den`.
    pub fn ratio(&self) -> Q {
        ratio(&self.raw.num, &self.raw.den)
    }

    /// Recomputes every step from the raw cardinalities and checks it.
    pub fn verify(&self) -> Result<()> {
        if self.epsilon <= Q::zero() || self.epsilon >= half() {
            return Err(reject("epsilon must lie in (0, 1/2)"));
        }
        if let Some(ep) = &self.epsilon_prime {
            if ep <= &self.epsilon {
                return Err(reject("epsilon_prime must exceed epsilon"));
            }
        }
        if self.raw.num > self.raw.den {
            return Err(reject("numerator exceeds denominator"));
        }
        let (steps, conclusion) = derive(
            self.chain,
            self.index,
            self.block,
            &self.epsilon,
            self.epsilon_prime.as_ref(),
            &self.raw,
        )?;
        if steps.len() != self.steps.len() {
            return Err(reject(format!(
                "expected {} steps, found {}",
                steps.len(),
                self.steps.len()
            )));
        }
        for (i, (want, got)) in steps.iter().zip(&self.steps).enumerate() {
            if want != got {
                return Err(reject(format!(
                    "step {i} reads `{got}` but the raw data give `{want}`"
                )));
            }
            if !got.rel.holds(&got.lhs, &got.rhs) {
                return Err(reject(format!("step {i} is false: {got}")));
            }
        }
        if conclusion != self.conclusion {
            return Err(reject("conclusion does not match the chain"));
        }
        if !conclusion.rel.holds(&self.ratio(), &conclusion.bound) {
            return Err(reject(format!(
                "ratio {} does not satisfy {} {}",
                fmt_q(&self.ratio()),
                conclusion.rel.symbol(),
                fmt_q(&conclusion.bound)
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Verifies a certificate given as JSON text.
pub fn verify_certificate(json: &str) -> Result<Certificate> {
    let c = Certificate::from_json(json)?;
    c.verify()?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn raw(below: u64, size: u64, hit: u64, num: u64, den: u64) -> Raw {
        Raw {
            below: below.into(),
            size: size.into(),
            hit: hit.into(),
            num: num.into(),
            den: den.into(),
        }
    }

    #[test]
    fn majority_chain_on_a_full_interval() {
        // Minimal partition: I_3 = [36, 325), X is a singleton on each earlier interval.
        let c = Certificate::issue(
            ChainKind::Majority,
            3,
            None,
            q(1, 4),
            None,
            raw(36, 289, 289, 289, 292),
        )
        .unwrap();
        assert_eq!(c.steps.len(), 8);
        assert!(c.ratio() >= q(3, 4));
        let json = c.to_json();
        assert!(json.contains(r#""rel":">=""#));
        assert_eq!(verify_certificate(&json).unwrap(), c);
    }

    #[test]
    fn minority_chain() {
        let c = Certificate::issue(
            ChainKind::Minority,
            4,
            None,
            q(1, 4),
            None,
            raw(325, 5201, 2600, 1, 2604),
        )
        .unwrap();
        assert_eq!(c.conclusion.bound, q(1, 4));
    }

    #[test]
    fn false_chains_are_not_issued() {
        // n = 2 is below the threshold for epsilon = 1/4.
        assert!(Certificate::issue(
            ChainKind::Majority,
            2,
            None,
            q(1, 4),
            None,
            raw(7, 29, 29, 29, 31)
        )
        .is_err());
        // Not a majority.
        assert!(Certificate::issue(
            ChainKind::Majority,
            3,
            None,
            q(1, 4),
            None,
            raw(36, 289, 100, 100, 103)
        )
        .is_err());
    }

    #[test]
    fn tampering_is_detected() {
        let c = Certificate::issue(
            ChainKind::Majority,
            3,
            None,
            q(1, 4),
            None,
            raw(36, 289, 289, 289, 292),
        )
        .unwrap();
        let mut t = c.clone();
        t.raw.den += 1u32;
        assert!(t.verify().is_err());
        let mut t = c.clone();
        t.steps[2].rhs += Q::one();
        assert!(t.verify().is_err());
        let mut t = c;
        t.index = 4;
        assert!(t.verify().is_err());
    }

    #[test]
    fn slalom_block_must_contain_index() {
        let r = raw(100, 10_000, 5001, 5001, 5003);
        assert!(
            Certificate::issue(ChainKind::Slalom, 8, Some(2), q(1, 10), Some(q(1, 5)), r).is_err()
        );
    }
}
