//! Textual descriptors: `prog(0,2)`, `bern(1/2,7)`, `inter(A,B)`, `compl(A)`, ...

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;

use super::{Node, OmegaSet};
use crate::bits::BitBuf;
use crate::error::{Error, Result};
use crate::partition::IntervalPartition;
use crate::rational::{fmt_q, parse_q};
use crate::symbolic::{PartKind, PartRule, SymbolicSet};

fn bad(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Splits `name(a,b,...)` into the name and its top-level arguments.
pub(crate) fn call(s: &str) -> Result<(&str, Vec<&str>)> {
    let s = s.trim();
    let Some(open) = s.find('(') else {
        return Ok((s, Vec::new()));
    };
    if !s.ends_with(')') {
        return Err(bad(format!("unbalanced parentheses in {s:?}")));
    }
    let name = s[..open].trim();
    let inner = &s[open + 1..s.len() - 1];
    let mut args = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in inner.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(bad(format!("unbalanced parentheses in {s:?}")));
                }
            }
            ',' if depth == 0 => {
                args.push(inner[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(bad(format!("unbalanced parentheses in {s:?}")));
    }
    if !inner.trim().is_empty() || !args.is_empty() {
        args.push(inner[start..].trim());
    }
    Ok((name, args))
}

fn arity(name: &str, args: &[&str], n: usize) -> Result<()> {
    if args.len() != n {
        return Err(bad(format!(
            "{name} takes {n} argument(s), got {}",
            args.len()
        )));
    }
    Ok(())
}

fn nat(s: &str) -> Result<BigUint> {
    s.trim()
        .parse()
        .map_err(|_| bad(format!("not a natural number: {s:?}")))
}

fn small(s: &str) -> Result<u64> {
    s.trim()
        .parse()
        .map_err(|_| bad(format!("not a machine-size natural: {s:?}")))
}

fn bitstring(s: &str) -> Result<BitBuf> {
    let s = s.trim();
    if !s.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(bad(format!("not a bit string: {s:?}")));
    }
    Ok(BitBuf::from_bools(s.bytes().map(|b| b == b'1')))
}

fn render_bits(b: &BitBuf) -> String {
    (0..b.len())
        .map(|i| if b.get(i) { '1' } else { '0' })
        .collect()
}

/// Parses a set descriptor. `sym(...)` descriptors need a partition.
pub fn parse_set(s: &str, partition: Option<&Arc<IntervalPartition>>) -> Result<OmegaSet> {
    let (name, args) = call(s)?;
    let set = |i: usize| parse_set(args[i], partition);
    Ok(match name {
        "omega" | "full" => {
            arity(name, &args, 0)?;
            OmegaSet::full()
        }
        "empty" => {
            arity(name, &args, 0)?;
            OmegaSet::empty()
        }
        "evens" => OmegaSet::evens(),
        "odds" => OmegaSet::odds(),
        "prog" => {
            arity(name, &args, 2)?;
            OmegaSet::progression(nat(args[0])?, small(args[1])?)?
        }
        "bern" => {
            arity(name, &args, 2)?;
            OmegaSet::bernoulli(parse_q(args[0])?, small(args[1])?)?
        }
        "pow" => {
            arity(name, &args, 1)?;
            OmegaSet::powers(small(args[0])?)?
        }
        "tower" => {
            arity(name, &args, 1)?;
            OmegaSet::tower(small(args[0])?)?
        }
        "osc" => {
            arity(name, &args, 1)?;
            OmegaSet::oscillating(small(args[0])?)?
        }
        "bits" => {
            arity(name, &args, 2)?;
            OmegaSet::explicit(bitstring(args[0])?, bitstring(args[1])?)?
        }
        "window" => {
            arity(name, &args, 2)?;
            OmegaSet::window(nat(args[0])?, bitstring(args[1])?)
        }
        "range" => {
            arity(name, &args, 2)?;
            OmegaSet::range(nat(args[0])?, nat(args[1])?)
        }
        "alt" => {
            if args.is_empty() || args.len() > 2 {
                return Err(bad("alt takes one or two arguments"));
            }
            let phase = if args.len() == 2 {
                small(args[1])? as u8
            } else {
                0
            };
            OmegaSet::alternate(&set(0)?, phase)
        }
        "inter" | "union" | "diff" => {
            arity(name, &args, 2)?;
            let (a, b) = (set(0)?, set(1)?);
            match name {
                "inter" => a.intersect(&b),
                "union" => a.union(&b),
                _ => a.difference(&b),
            }
        }
        "compl" => {
            arity(name, &args, 1)?;
            set(0)?.complement()
        }
        "sym" => {
            arity(name, &args, 1)?;
            let part = partition.ok_or_else(|| bad("sym(...) needs a partition"))?;
            OmegaSet::symbolic(SymbolicSet::new(
                part.clone(),
                parse_rule(args[0], Some(part))?,
            ))
        }
        _ => return Err(bad(format!("unknown set descriptor {name:?}"))),
    })
}

/// Parses a per-interval rule: `full`, `empty`, `singletons`, `first(r)`, `last(r)`,
/// `alt(R,R)`, `not(R)`, `trace(SET)`, `ctrace(SET)`.
pub fn parse_rule(s: &str, partition: Option<&Arc<IntervalPartition>>) -> Result<PartRule> {
    let (name, args) = call(s)?;
    Ok(match name {
        "full" => PartRule::Kind(PartKind::Full),
        "empty" => PartRule::Kind(PartKind::Empty),
        "singletons" => PartRule::Singleton,
        "first" => {
            arity(name, &args, 1)?;
            PartRule::FirstFraction(parse_q(args[0])?)
        }
        "last" => {
            arity(name, &args, 1)?;
            PartRule::LastFraction(parse_q(args[0])?)
        }
        "alt" => {
            arity(name, &args, 2)?;
            PartRule::Alternate(
                Box::new(parse_rule(args[0], partition)?),
                Box::new(parse_rule(args[1], partition)?),
            )
        }
        "not" => {
            arity(name, &args, 1)?;
            PartRule::Complement(Box::new(parse_rule(args[0], partition)?))
        }
        "trace" => {
            arity(name, &args, 1)?;
            PartRule::Kind(PartKind::Trace(parse_set(args[0], partition)?))
        }
        "ctrace" => {
            arity(name, &args, 1)?;
            PartRule::Kind(PartKind::Complement(Box::new(PartKind::Trace(parse_set(
                args[0], partition,
            )?))))
        }
        _ => return Err(bad(format!("unknown interval rule {name:?}"))),
    })
}

impl fmt::Display for OmegaSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Full => write!(f, "omega"),
            Node::Empty => write!(f, "empty"),
            Node::Progression { start, step } => write!(f, "prog({start},{step})"),
            Node::Explicit { prefix, tail } => {
                write!(f, "bits({},{})", render_bits(prefix), render_bits(tail))
            }
            Node::Window { start, bits } => write!(f, "window({start},{})", render_bits(bits)),
            Node::Range { lo, hi } => write!(f, "range({lo},{hi})"),
            Node::Bernoulli { p, seed, .. } => write!(f, "bern({},{seed})", fmt_q(p)),
            Node::Powers { base } => write!(f, "pow({base})"),
            Node::Tower { base } => write!(f, "tower({base})"),
            Node::Osc { base } => write!(f, "osc({base})"),
            Node::Alternate { inner, phase } => write!(f, "alt({inner},{phase})"),
            Node::Inter(a, b) => write!(f, "inter({a},{b})"),
            Node::Union(a, b) => write!(f, "union({a},{b})"),
            Node::Diff(a, b) => write!(f, "diff({a},{b})"),
            Node::Compl(a) => write!(f, "compl({a})"),
            Node::Symbolic(s) => write!(f, "{s}"),
        }
    }
}

impl fmt::Display for PartRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartRule::Kind(PartKind::Full) => write!(f, "full"),
            PartRule::Kind(PartKind::Empty) => write!(f, "empty"),
            PartRule::Kind(PartKind::Trace(a)) => write!(f, "trace({a})"),
            PartRule::Kind(PartKind::Complement(k)) if matches!(**k, PartKind::Trace(_)) => {
                let PartKind::Trace(a) = &**k else {
                    unreachable!()
                };
                write!(f, "ctrace({a})")
            }
            PartRule::Kind(k) => write!(f, "{k}"),
            PartRule::Singleton => write!(f, "singletons"),
            PartRule::FirstFraction(r) => write!(f, "first({})", fmt_q(r)),
            PartRule::LastFraction(r) => write!(f, "last({})", fmt_q(r)),
            PartRule::Alternate(a, b) => write!(f, "alt({a},{b})"),
            PartRule::Complement(r) => write!(f, "not({r})"),
        }
    }
}

impl fmt::Display for PartKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartKind::Full => write!(f, "full"),
            PartKind::Empty => write!(f, "empty"),
            PartKind::First(s) => write!(f, "first:{s}"),
            PartKind::Last(s) => write!(f, "last:{s}"),
            PartKind::Trace(a) => write!(f, "trace({a})"),
            PartKind::Complement(k) => write!(f, "compl({k})"),
            PartKind::Explicit(b) => write!(f, "bits({})", render_bits(b)),
        }
    }
}

impl fmt::Display for SymbolicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sym({}", self.rule())?;
        for (n, k) in self.overrides() {
            write!(f, ";{n}:{k}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_nested_arguments() {
        let (name, args) = call("inter(prog(0,2), compl(prog(0,3)))").unwrap();
        assert_eq!(name, "inter");
        assert_eq!(args, vec!["prog(0,2)", "compl(prog(0,3))"]);
        assert_eq!(call("omega").unwrap(), ("omega", vec![]));
        assert!(call("inter(a,b").is_err());
    }

    #[test]
    fn display_round_trips() {
        for d in [
            "omega",
            "prog(3,7)",
            "bern(1/2,7)",
            "inter(prog(0,2),compl(prog(0,3)))",
            "union(pow(2),tower(3))",
            "bits(0110,10)",
            "window(5,101)",
            "alt(prog(0,2),1)",
            "diff(osc(2),range(0,10))",
        ] {
            let s: OmegaSet = d.parse().unwrap();
            assert_eq!(s.to_string(), d);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!("prog(0)".parse::<OmegaSet>().is_err());
        assert!("bern(2,1)".parse::<OmegaSet>().is_err());
        assert!("foo(1)".parse::<OmegaSet>().is_err());
        assert!("sym(full)".parse::<OmegaSet>().is_err());
    }
}
