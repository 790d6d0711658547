//! Piecewise evaluation of set descriptors over a half-open range.
//!
//! A range `[lo, hi)` is covered by consecutive pieces, each constant, periodic
//! or explicit. Boolean nodes merge piece lists; counting never touches bits
//! outside explicit pieces, so ranges with astronomically large endpoints stay
//! cheap as long as every explicit piece is below the materialization cap.

use std::sync::Arc;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Node, OmegaSet};
use crate::bits::BitBuf;
use crate::error::{Error, Result};
use crate::rational::lcm_u64;
use crate::symbolic::PartKind;

/// Longest period kept in symbolic form when periodic pieces are combined.
pub const MAX_PERIOD: u64 = 1 << 16;

#[derive(Clone, Debug)]
pub(crate) enum Kind {
    Zero,
    One,
    /// Bit `i` of the piece is `pat[(phase + i) % pat.len()]`.
    Periodic {
        pat: Arc<BitBuf>,
        phase: usize,
    },
    /// Bit `i` of the piece is `bits[off + i]`.
    Bits {
        bits: Arc<BitBuf>,
        off: usize,
    },
}

#[derive(Clone, Debug)]
pub(crate) struct Piece {
    pub len: BigUint,
    pub kind: Kind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Op {
    And,
    Or,
    AndNot,
}

impl Op {
    fn apply(self, a: bool, b: bool) -> bool {
        match self {
            Op::And => a && b,
            Op::Or => a || b,
            Op::AndNot => a && !b,
        }
    }
}

fn small(len: &BigUint) -> Option<usize> {
    len.to_usize()
}

fn check_cap(len: &BigUint) -> Result<usize> {
    let cap = super::horizon_cap();
    match len.to_u64() {
        Some(l) if l <= cap => Ok(l as usize),
        _ => Err(Error::HorizonOverflow {
            requested: len.clone(),
            cap,
        }),
    }
}

impl Piece {
    fn zero(len: BigUint) -> Piece {
        Piece {
            len,
            kind: Kind::Zero,
        }
    }

    fn one(len: BigUint) -> Piece {
        Piece {
            len,
            kind: Kind::One,
        }
    }

    fn periodic(len: BigUint, pat: BitBuf, phase: usize) -> Piece {
        let ones = pat.count_ones();
        if ones == 0 {
            Piece::zero(len)
        } else if ones == pat.len() as u64 {
            Piece::one(len)
        } else {
            let phase = phase % pat.len();
            Piece {
                len,
                kind: Kind::Periodic {
                    pat: Arc::new(pat),
                    phase,
                },
            }
        }
    }

    fn bits(bits: BitBuf) -> Piece {
        Piece {
            len: BigUint::from(bits.len()),
            kind: Kind::Bits {
                bits: Arc::new(bits),
                off: 0,
            },
        }
    }

    pub fn count(&self) -> BigUint {
        match &self.kind {
            Kind::Zero => BigUint::zero(),
            Kind::One => self.len.clone(),
            Kind::Periodic { pat, phase } => {
                let p = pat.len() as u64;
                let (full, rem) = self.len.div_rem(&BigUint::from(p));
                let rem = rem.to_u64().unwrap_or(0);
                full * pat.count_ones() + cyclic_rank(pat, *phase as u64, rem)
            }
            Kind::Bits { bits, off } => {
                let l = small(&self.len).unwrap_or(0);
                BigUint::from(bits.rank(off + l) - bits.rank(*off))
            }
        }
    }

    /// Sub-piece `[off, off + len)` of this piece.
    fn sub(&self, off: &BigUint, len: BigUint) -> Piece {
        let kind = match &self.kind {
            Kind::Zero => Kind::Zero,
            Kind::One => Kind::One,
            Kind::Periodic { pat, phase } => {
                let p = pat.len() as u64;
                let shift = (off % BigUint::from(p)).to_u64().unwrap_or(0);
                Kind::Periodic {
                    pat: pat.clone(),
                    phase: ((*phase as u64 + shift) % p) as usize,
                }
            }
            Kind::Bits { bits, off: o } => Kind::Bits {
                bits: bits.clone(),
                off: o + small(off).unwrap_or(0),
            },
        };
        Piece { len, kind }
    }

    fn flip(self) -> Piece {
        match self.kind {
            Kind::Zero => Piece::one(self.len),
            Kind::One => Piece::zero(self.len),
            Kind::Periodic { pat, phase } => {
                let mut p = (*pat).clone();
                p.not_assign();
                Piece::periodic(self.len, p, phase)
            }
            Kind::Bits { bits, off } => {
                let l = small(&self.len).unwrap_or(0);
                let mut b = bits.slice(off, l);
                b.not_assign();
                Piece::bits(b)
            }
        }
    }

    /// Writes the piece's bits into `out` starting at `at`.
    pub fn write_into(&self, out: &mut BitBuf, at: usize) {
        let l = small(&self.len).expect("piece longer than buffer");
        match &self.kind {
            Kind::Zero => {}
            Kind::One => out.fill_range(at, at + l),
            Kind::Periodic { pat, phase } => {
                let p = pat.len();
                let mut j = *phase;
                for i in 0..l {
                    if pat.get(j) {
                        out.set(at + i, true);
                    }
                    j += 1;
                    if j == p {
                        j = 0;
                    }
                }
            }
            Kind::Bits { bits, off } => {
                for i in bits.slice(*off, l).iter_ones() {
                    out.set(at + i, true);
                }
            }
        }
    }

    fn materialize(&self) -> Result<BitBuf> {
        let l = check_cap(&self.len)?;
        Ok(match &self.kind {
            Kind::Zero => BitBuf::zeros(l),
            Kind::One => BitBuf::ones(l),
            Kind::Bits { bits, off } => bits.slice(*off, l),
            Kind::Periodic { .. } => {
                let mut b = BitBuf::zeros(l);
                self.write_into(&mut b, 0);
                b
            }
        })
    }

    /// Offset (within the piece) of the `k`-th member, `k < self.count()`.
    pub fn select(&self, k: &BigUint) -> BigUint {
        match &self.kind {
            Kind::Zero => unreachable!("select in empty piece"),
            Kind::One => k.clone(),
            Kind::Periodic { pat, phase } => {
                let p = pat.len();
                let ones = pat.count_ones();
                let (full, rem) = k.div_rem(&BigUint::from(ones));
                let mut rem = rem.to_u64().unwrap_or(0);
                let mut j = 0usize;
                loop {
                    if pat.get((phase + j) % p) {
                        if rem == 0 {
                            break;
                        }
                        rem -= 1;
                    }
                    j += 1;
                }
                full * BigUint::from(p) + BigUint::from(j)
            }
            Kind::Bits { bits, off } => {
                let base = bits.rank(*off);
                let pos = bits
                    .select(base + k.to_u64().unwrap_or(u64::MAX))
                    .expect("select beyond piece");
                BigUint::from(pos - off)
            }
        }
    }
}

/// Number of ones among `len` consecutive pattern positions starting at `phase`.
fn cyclic_rank(pat: &BitBuf, phase: u64, len: u64) -> u64 {
    let p = pat.len() as u64;
    let end = phase + len;
    if end <= p {
        pat.rank(end as usize) - pat.rank(phase as usize)
    } else {
        pat.count_ones() - pat.rank(phase as usize) + pat.rank((end - p) as usize)
    }
}

pub(crate) fn total(pieces: &[Piece]) -> BigUint {
    pieces.iter().map(Piece::count).sum()
}

/// Appends a piece, fusing it with a preceding constant piece of the same kind.
fn push(out: &mut Vec<Piece>, p: Piece) {
    if p.len.is_zero() {
        return;
    }
    if let Some(last) = out.last_mut() {
        match (&last.kind, &p.kind) {
            (Kind::Zero, Kind::Zero) | (Kind::One, Kind::One) => {
                last.len += p.len;
                return;
            }
            _ => {}
        }
    }
    out.push(p);
}

/// Pieces for a sorted list of member runs `[s, e)` inside `[lo, hi)`.
fn from_runs(lo: &BigUint, hi: &BigUint, runs: Vec<(BigUint, BigUint)>) -> Vec<Piece> {
    let mut out = Vec::new();
    let mut cur = lo.clone();
    for (s, e) in runs {
        let s = s.max(cur.clone());
        let e = e.min(hi.clone());
        if s >= e {
            continue;
        }
        push(&mut out, Piece::zero(&s - &cur));
        push(&mut out, Piece::one(&e - &s));
        cur = e;
    }
    if &cur < hi {
        push(&mut out, Piece::zero(hi - &cur));
    }
    out
}

fn combine_kinds(a: &Piece, b: &Piece, op: Op) -> Result<Piece> {
    let len = a.len.clone();
    use Kind::*;
    let res = match (op, &a.kind, &b.kind) {
        (Op::And, Zero, _) | (Op::And, _, Zero) => Piece::zero(len),
        (Op::And, One, _) => b.clone(),
        (Op::And, _, One) => a.clone(),
        (Op::Or, One, _) | (Op::Or, _, One) => Piece::one(len),
        (Op::Or, Zero, _) => b.clone(),
        (Op::Or, _, Zero) => a.clone(),
        (Op::AndNot, Zero, _) | (Op::AndNot, _, One) => Piece::zero(len),
        (Op::AndNot, _, Zero) => a.clone(),
        (Op::AndNot, One, _) => b.clone().flip(),
        (_, Periodic { pat: pa, phase: fa }, Periodic { pat: pb, phase: fb }) => {
            let (la, lb) = (pa.len() as u64, pb.len() as u64);
            match lcm_u64(la, lb).filter(|&p| p <= MAX_PERIOD) {
                Some(p) => {
                    let pat = BitBuf::from_bools((0..p).map(|i| {
                        op.apply(
                            pa.get(((*fa as u64 + i) % la) as usize),
                            pb.get(((*fb as u64 + i) % lb) as usize),
                        )
                    }));
                    Piece::periodic(len, pat, 0)
                }
                None => {
                    let p = lcm_u64(la, lb).unwrap_or(u64::MAX);
                    if check_cap(&len).is_err() {
                        return Err(Error::PeriodTooLarge(p));
                    }
                    bits_op(a, b, op)?
                }
            }
        }
        _ => bits_op(a, b, op)?,
    };
    Ok(res)
}

fn bits_op(a: &Piece, b: &Piece, op: Op) -> Result<Piece> {
    let mut x = a.materialize()?;
    let y = b.materialize()?;
    match op {
        Op::And => x.and_assign(&y),
        Op::Or => x.or_assign(&y),
        Op::AndNot => x.and_not_assign(&y),
    }
    Ok(Piece::bits(x))
}

/// Pointwise combination of two piece lists covering the same range.
fn merge(a: &[Piece], b: &[Piece], op: Op) -> Result<Vec<Piece>> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    let (mut oa, mut ob) = (BigUint::zero(), BigUint::zero());
    while i < a.len() && j < b.len() {
        let ra = &a[i].len - &oa;
        let rb = &b[j].len - &ob;
        let step = ra.clone().min(rb.clone());
        let pa = a[i].sub(&oa, step.clone());
        let pb = b[j].sub(&ob, step.clone());
        push(&mut out, combine_kinds(&pa, &pb, op)?);
        oa += &step;
        ob += &step;
        if oa == a[i].len {
            i += 1;
            oa = BigUint::zero();
        }
        if ob == b[j].len {
            j += 1;
            ob = BigUint::zero();
        }
    }
    Ok(out)
}

/// Evaluates `b` only where `a` leaves the result undetermined.
fn lazy_binary(
    a: &OmegaSet,
    b: &OmegaSet,
    lo: &BigUint,
    hi: &BigUint,
    op: Op,
    swap_ok: bool,
) -> Result<Vec<Piece>> {
    let first = match pieces(a, lo, hi) {
        Ok(p) => p,
        Err(e @ (Error::HorizonOverflow { .. } | Error::PeriodTooLarge(_))) if swap_ok => {
            return lazy_binary(b, a, lo, hi, op, false).map_err(|_| e);
        }
        Err(e) => return Err(e),
    };
    let decided = |k: &Kind| match op {
        Op::And | Op::AndNot => matches!(k, Kind::Zero),
        Op::Or => matches!(k, Kind::One),
    };
    let mut out = Vec::new();
    let mut pos = lo.clone();
    let mut span: Vec<Piece> = Vec::new();
    let mut span_start = lo.clone();
    let flush = |span: &mut Vec<Piece>,
                 start: &BigUint,
                 end: &BigUint,
                 out: &mut Vec<Piece>|
     -> Result<()> {
        if span.is_empty() {
            return Ok(());
        }
        let other = pieces(b, start, end)?;
        for p in merge(span, &other, op)? {
            push(out, p);
        }
        span.clear();
        Ok(())
    };
    for p in first {
        let end = &pos + &p.len;
        if decided(&p.kind) {
            flush(&mut span, &span_start, &pos, &mut out)?;
            let res = if matches!(op, Op::AndNot) || op == Op::And {
                Piece::zero(p.len)
            } else {
                Piece::one(p.len)
            };
            push(&mut out, res);
            span_start = end.clone();
        } else {
            if span.is_empty() {
                span_start = pos.clone();
            }
            span.push(p);
        }
        pos = end;
    }
    flush(&mut span, &span_start, &pos, &mut out)?;
    Ok(out)
}

fn bernoulli_bits(seed: u64, threshold: u64, lo: &BigUint, len: usize) -> Result<BitBuf> {
    let start = lo.to_u128().ok_or_else(|| Error::HorizonOverflow {
        requested: lo.clone(),
        cap: super::horizon_cap(),
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(start);
    let mut out = BitBuf::zeros(len);
    for i in 0..len {
        if (rng.next_u32() as u64) < threshold {
            out.set(i, true);
        }
    }
    Ok(out)
}

/// Piece decomposition of `s ∩ [lo, hi)`.
pub(crate) fn pieces(s: &OmegaSet, lo: &BigUint, hi: &BigUint) -> Result<Vec<Piece>> {
    if hi <= lo {
        return Ok(Vec::new());
    }
    let len = hi - lo;
    Ok(match s.node() {
        Node::Full => vec![Piece::one(len)],
        Node::Empty => vec![Piece::zero(len)],
        Node::Range { lo: a, hi: b } => from_runs(lo, hi, vec![(a.clone(), b.clone())]),
        Node::Progression { start, step } => {
            let mut out = Vec::new();
            let from = lo.max(start).clone();
            if &from >= hi {
                return Ok(vec![Piece::zero(len)]);
            }
            push(&mut out, Piece::zero(&from - lo));
            let rest = hi - &from;
            if *step == 1 {
                push(&mut out, Piece::one(rest));
            } else {
                let off = ((&from - start) % BigUint::from(*step))
                    .to_u64()
                    .unwrap_or(0);
                let mut pat = BitBuf::zeros(*step as usize);
                pat.set(0, true);
                push(&mut out, Piece::periodic(rest, pat, off as usize));
            }
            out
        }
        Node::Explicit { prefix, tail } => {
            let mut out = Vec::new();
            let plen = BigUint::from(prefix.len());
            if lo < &plen {
                let end = hi.min(&plen).clone();
                let a = lo.to_usize().unwrap_or(0);
                let b = end.to_usize().unwrap_or(0);
                push(
                    &mut out,
                    Piece {
                        len: BigUint::from(b - a),
                        kind: Kind::Bits {
                            bits: prefix.clone(),
                            off: a,
                        },
                    },
                );
            }
            let from = lo.max(&plen).clone();
            if &from < hi {
                let t = tail.len() as u64;
                let off = ((&from - &plen) % BigUint::from(t)).to_u64().unwrap_or(0);
                push(
                    &mut out,
                    Piece::periodic(hi - &from, (**tail).clone(), off as usize),
                );
            }
            out
        }
        Node::Window { start, bits } => {
            let end = start + BigUint::from(bits.len());
            let a = lo.max(start).clone();
            let b = hi.min(&end).clone();
            if a >= b {
                return Ok(vec![Piece::zero(len)]);
            }
            let mut out = Vec::new();
            push(&mut out, Piece::zero(&a - lo));
            let off = (&a - start).to_usize().unwrap_or(0);
            push(
                &mut out,
                Piece {
                    len: &b - &a,
                    kind: Kind::Bits {
                        bits: bits.clone(),
                        off,
                    },
                },
            );
            push(&mut out, Piece::zero(hi - &b));
            out
        }
        Node::Bernoulli {
            seed, threshold, ..
        } => {
            if *threshold == 0 {
                return Ok(vec![Piece::zero(len)]);
            }
            if *threshold >= 1u64 << 32 {
                return Ok(vec![Piece::one(len)]);
            }
            let l = check_cap(&len)?;
            vec![Piece::bits(bernoulli_bits(*seed, *threshold, lo, l)?)]
        }
        Node::Powers { base } => {
            let mut runs = Vec::new();
            let mut p = BigUint::one();
            while &p < hi {
                let next = &p + 1u32;
                runs.push((p.clone(), next));
                p *= base;
            }
            from_runs(lo, hi, runs)
        }
        Node::Tower { base } => {
            let mut runs = Vec::new();
            let mut p = base.clone();
            while &p < hi {
                let next = &p + 1u32;
                runs.push((p.clone(), next));
                p = &p * &p;
            }
            from_runs(lo, hi, runs)
        }
        Node::Osc { base } => {
            let mut runs = Vec::new();
            let mut p = BigUint::one();
            while &p < hi {
                let q = &p * base;
                runs.push((p.clone(), q.clone()));
                p = &q * base;
            }
            from_runs(lo, hi, runs)
        }
        Node::Alternate { inner, phase } => alternate(inner, *phase, lo, hi)?,
        Node::Inter(a, b) => lazy_binary(a, b, lo, hi, Op::And, true)?,
        Node::Union(a, b) => lazy_binary(a, b, lo, hi, Op::Or, true)?,
        Node::Diff(a, b) => lazy_binary(a, b, lo, hi, Op::AndNot, false)?,
        Node::Compl(a) => pieces(a, lo, hi)?.into_iter().map(Piece::flip).collect(),
        Node::Symbolic(sym) => {
            let part = sym.partition();
            let first = part.interval_of(lo);
            let last = part.interval_of(&(hi - 1u32));
            let mut out = Vec::new();
            for n in first..=last {
                let a = part.boundary(n).max(lo.clone());
                let b = part.boundary(n + 1).min(hi.clone());
                for p in kind_pieces(
                    &sym.kind_at(n),
                    &part.boundary(n),
                    &part.boundary(n + 1),
                    &a,
                    &b,
                )? {
                    push(&mut out, p);
                }
            }
            out
        }
    })
}

/// Pieces of an interval-scoped descriptor on `[ilo, ihi)`, restricted to `[lo, hi)`.
pub(crate) fn kind_pieces(
    kind: &PartKind,
    ilo: &BigUint,
    ihi: &BigUint,
    lo: &BigUint,
    hi: &BigUint,
) -> Result<Vec<Piece>> {
    if hi <= lo {
        return Ok(Vec::new());
    }
    Ok(match kind {
        PartKind::Full => vec![Piece::one(hi - lo)],
        PartKind::Empty => vec![Piece::zero(hi - lo)],
        PartKind::First(s) => from_runs(lo, hi, vec![(ilo.clone(), ilo + s)]),
        PartKind::Last(s) => {
            let start = if s > &(ihi - ilo) {
                ilo.clone()
            } else {
                ihi - s
            };
            from_runs(lo, hi, vec![(start, ihi.clone())])
        }
        PartKind::Trace(a) => pieces(a, lo, hi)?,
        PartKind::Complement(k) => kind_pieces(k, ilo, ihi, lo, hi)?
            .into_iter()
            .map(Piece::flip)
            .collect(),
        PartKind::Explicit(bits) => {
            let window = OmegaSet::window(ilo.clone(), (**bits).clone());
            pieces(&window, lo, hi)?
        }
    })
}

fn alternate(inner: &OmegaSet, phase: u8, lo: &BigUint, hi: &BigUint) -> Result<Vec<Piece>> {
    let before = total(&pieces(inner, &BigUint::zero(), lo)?);
    let mut parity = before.is_odd();
    let want = phase % 2 == 1;
    let mut out = Vec::new();
    for p in pieces(inner, lo, hi)? {
        let c = p.count();
        let next = parity ^ c.is_odd();
        let mapped = match &p.kind {
            Kind::Zero => p,
            Kind::One => {
                let pat = BitBuf::from_bools([parity == want, parity != want]);
                Piece::periodic(p.len, pat, 0)
            }
            Kind::Periodic { pat, phase: ph } => {
                let per = pat.len();
                let ones = pat.count_ones();
                let reps = if ones % 2 == 0 { 1 } else { 2 };
                let mut par = parity;
                let new = BitBuf::from_bools((0..per * reps).map(|i| {
                    if pat.get((ph + i) % per) {
                        let keep = par == want;
                        par = !par;
                        keep
                    } else {
                        false
                    }
                }));
                Piece::periodic(p.len, new, 0)
            }
            Kind::Bits { bits, off } => {
                let l = p.len.to_usize().unwrap_or(0);
                let mut par = parity;
                let mut b = bits.slice(*off, l);
                for i in bits.slice(*off, l).iter_ones() {
                    if par != want {
                        b.set(i, false);
                    }
                    par = !par;
                }
                Piece::bits(b)
            }
        };
        push(&mut out, mapped);
        parity = next;
    }
    Ok(out)
}
