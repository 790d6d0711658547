//! Nested splitting chains `S_1, S_2, …` with `I_m = ⋂_{n≤m} S_n` and
//! `D_m = I_{m−1} \ I_m`, and the transformations between bisecting and
//! `ρ`-splitting sets built from them.
//!
//! Chains are exact descriptor trees; validation runs on materialized prefixes.

use num_traits::{One, ToPrimitive, Zero};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bits::BitBuf;
use crate::density::{report_from_bits, Checkpoints, DensityReport};
use crate::error::{Error, Result};
use crate::omega::{horizon_cap, OmegaSet};
use crate::rational::{fmt_q, half, pow2, q, qpow, Q};
use crate::rho::{binary_digits, select_levels, squaring_chain, ChainOp, SquaringChain, Weights};

/// Source of splitters for a chain stage.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitterOracle {
    /// Independent Bernoulli sets, re-drawn with fresh seeds until they pass validation.
    Bernoulli {
        #[serde(with = "crate::rational::serde_q")]
        p: Q,
        seed: u64,
    },
    /// Every second element of the single target.
    RoundRobin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleKind {
    Bernoulli,
    RoundRobin,
}

pub fn make_oracle(kind: OracleKind, p: &Q, seed: u64) -> Result<SplitterOracle> {
    match kind {
        OracleKind::Bernoulli => {
            if p <= &Q::zero() || p >= &Q::one() {
                return Err(Error::Precondition(format!(
                    "Bernoulli parameter {} must lie in (0, 1)",
                    fmt_q(p)
                )));
            }
            Ok(SplitterOracle::Bernoulli { p: p.clone(), seed })
        }
        OracleKind::RoundRobin => Ok(SplitterOracle::RoundRobin),
    }
}

impl SplitterOracle {
    /// The ratio each draw aims at.
    pub fn ratio(&self) -> Q {
        match self {
            SplitterOracle::Bernoulli { p, .. } => p.clone(),
            SplitterOracle::RoundRobin => half(),
        }
    }
}

/// Seed for draw `draw` of stage `stage`, attempt `attempt`.
fn derive_seed(seed: u64, stage: usize, draw: usize, attempt: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stage as u64) << 40) | ((draw as u64) << 20) | attempt as u64);
    rng.next_u64()
}

/// Horizon, sampling and acceptance band for chain construction.
#[derive(Clone, Debug)]
pub struct ChainConfig {
    pub horizon: u64,
    pub checkpoints: Checkpoints,
    pub tail_window: Q,
    /// Absolute band half-width; widened to five standard deviations on sparse targets.
    pub tolerance: Q,
    pub max_attempts: usize,
}

impl ChainConfig {
    pub fn new(horizon: u64, tolerance: Q) -> Self {
        ChainConfig {
            horizon,
            checkpoints: Checkpoints::stride((horizon / 100).max(1)),
            tail_window: half(),
            tolerance,
            max_attempts: 32,
        }
    }

    /// Whether `dev` is inside the band for ratio `p` over a support of `support` points.
    fn accepts(&self, dev: &Q, p: &Q, support: u64) -> bool {
        let noise = q(25, 1) * p * (Q::one() - p) / Q::from_integer(support.max(1).into());
        let tol2 = &self.tolerance * &self.tolerance;
        dev * dev <= if noise > tol2 { noise } else { tol2 }
    }

    fn report(&self, sx: &BitBuf, x: &BitBuf, target: &Q) -> Result<DensityReport> {
        report_from_bits(
            sx,
            x,
            &self.checkpoints,
            &self.tail_window,
            Some(target.clone()),
        )
    }

    /// Band check of `s` against every target; the first failure is described.
    fn validate(
        &self,
        s: &BitBuf,
        targets: &[BitBuf],
        p: &Q,
    ) -> Result<std::result::Result<(), String>> {
        for (i, x) in targets.iter().enumerate() {
            let mut sx = s.clone();
            sx.and_assign(x);
            let r = self.report(&sx, x, p)?;
            let support = r.denominators[r.tail_start].to_u64().unwrap_or(u64::MAX);
            if !self.accepts(&r.max_tail_deviation, p, support) {
                return Ok(Err(format!(
                    "member {i}: tail deviation {:.5} from {}",
                    crate::rational::to_f64(&r.max_tail_deviation),
                    fmt_q(p)
                )));
            }
        }
        Ok(Ok(()))
    }
}

/// What each stage of a chain splits with.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ChainMode {
    Half,
    Rho {
        #[serde(with = "crate::rational::serde_q")]
        rho: Q,
    },
    /// Stages are built from `base`-splitters by squaring (intersecting with a splitter
    /// of the intersection) and complementing.
    Composed {
        #[serde(with = "crate::rational::serde_q")]
        base: Q,
        ops: Vec<ChainOp>,
    },
}

impl ChainMode {
    /// Ratio of a single stage.
    pub fn stage_ratio(&self) -> Q {
        match self {
            ChainMode::Half => half(),
            ChainMode::Rho { rho } => rho.clone(),
            ChainMode::Composed { base, ops } => ops.iter().fold(base.clone(), |v, op| match op {
                ChainOp::Square => &v * &v,
                ChainOp::Complement => Q::one() - v,
            }),
        }
    }

    fn base_ratio(&self) -> Q {
        match self {
            ChainMode::Composed { base, .. } => base.clone(),
            m => m.stage_ratio(),
        }
    }

    fn ops(&self) -> &[ChainOp] {
        match self {
            ChainMode::Composed { ops, .. } => ops,
            _ => &[],
        }
    }
}

/// Per-stage, per-member deviations of `I_m` and `D_m` from their targets.
#[derive(Clone, Debug, Serialize)]
pub struct StageDiagnostics {
    pub stage: usize,
    pub member: usize,
    #[serde(with = "crate::rational::serde_q")]
    pub nested_target: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub nested_deviation: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub difference_target: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub difference_deviation: Q,
    pub within_tolerance: bool,
}

#[derive(Clone, Debug)]
pub struct SplitChain {
    pub mode: ChainMode,
    pub family: Vec<OmegaSet>,
    /// `S_1 … S_M`.
    pub stages: Vec<OmegaSet>,
    /// `I_0 = ω, I_1 … I_M`.
    pub nested: Vec<OmegaSet>,
    /// `D_1 … D_M`.
    pub differences: Vec<OmegaSet>,
    /// Draws consumed per stage, rejected ones included.
    pub attempts: Vec<usize>,
    pub diagnostics: Vec<StageDiagnostics>,
    pub horizon: u64,
    family_bits: Vec<BitBuf>,
    nested_bits: Vec<BitBuf>,
    difference_bits: Vec<BitBuf>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainSummary {
    #[serde(flatten)]
    pub mode: ChainMode,
    pub depth: usize,
    pub horizon: u64,
    pub attempts: Vec<usize>,
    pub partition_law: bool,
    pub invariants_hold: bool,
    pub diagnostics: Vec<StageDiagnostics>,
}

struct Drawer<'a> {
    oracle: &'a SplitterOracle,
    cfg: &'a ChainConfig,
    stage: usize,
    draws: usize,
    attempts: usize,
}

impl Drawer<'_> {
    /// One validated splitter of every target at the oracle's ratio.
    fn base(
        &mut self,
        targets: &[BitBuf],
        nested: &OmegaSet,
        family: &[OmegaSet],
    ) -> Result<(OmegaSet, BitBuf)> {
        let p = self.oracle.ratio();
        let draw = self.draws;
        self.draws += 1;
        let mut last = String::new();
        for attempt in 0..self.cfg.max_attempts {
            self.attempts += 1;
            let s = match self.oracle {
                SplitterOracle::Bernoulli { p, seed } => {
                    OmegaSet::bernoulli(p.clone(), derive_seed(*seed, self.stage, draw, attempt))?
                }
                SplitterOracle::RoundRobin => {
                    let [x] = family else {
                        return Err(Error::Precondition(
                            "the round-robin oracle needs a single target".into(),
                        ));
                    };
                    OmegaSet::alternate(&nested.intersect(x), 0)
                }
            };
            let bits = s.materialize_prefix(self.cfg.horizon)?.bits;
            match self.cfg.validate(&bits, targets, &p)? {
                Ok(()) => return Ok((s, bits)),
                Err(why) => last = why,
            }
            if matches!(self.oracle, SplitterOracle::RoundRobin) {
                break;
            }
        }
        Err(Error::OracleExhausted {
            stage: self.stage,
            attempts: self.attempts,
            detail: last,
        })
    }

    /// Applies `ops` on top of base splitters, validating every intermediate result.
    fn composed(
        &mut self,
        ops: &[ChainOp],
        base: &Q,
        targets: &[BitBuf],
        nested: &OmegaSet,
        family: &[OmegaSet],
    ) -> Result<(OmegaSet, BitBuf)> {
        let Some((op, rest)) = ops.split_last() else {
            return self.base(targets, nested, family);
        };
        let (s, bits) = match op {
            ChainOp::Complement => {
                let (a, mut bits) = self.composed(rest, base, targets, nested, family)?;
                bits.not_assign();
                (a.complement(), bits)
            }
            ChainOp::Square => {
                let (a, abits) = self.composed(rest, base, targets, nested, family)?;
                let inner: Vec<BitBuf> = targets
                    .iter()
                    .map(|t| {
                        let mut t = t.clone();
                        t.and_assign(&abits);
                        t
                    })
                    .collect();
                let inner_nested = nested.intersect(&a);
                let (b, bbits) = self.composed(rest, base, &inner, &inner_nested, family)?;
                let mut bits = abits;
                bits.and_assign(&bbits);
                (a.intersect(&b), bits)
            }
        };
        let p = ChainMode::Composed {
            base: base.clone(),
            ops: ops.to_vec(),
        }
        .stage_ratio();
        if let Err(why) = self.cfg.validate(&bits, targets, &p)? {
            return Err(Error::OracleExhausted {
                stage: self.stage,
                attempts: self.attempts,
                detail: why,
            });
        }
        Ok((s, bits))
    }
}

/// Builds `depth` stages, each splitting `I_n ∩ X` for every family member `X`.
pub fn build_chain(
    family: &[OmegaSet],
    oracle: &SplitterOracle,
    depth: usize,
    mode: ChainMode,
    cfg: &ChainConfig,
) -> Result<SplitChain> {
    if family.is_empty() {
        return Err(Error::Precondition("empty family".into()));
    }
    if depth == 0 {
        return Err(Error::Precondition("depth must be at least 1".into()));
    }
    if cfg.horizon > horizon_cap() {
        return Err(Error::HorizonOverflow {
            requested: cfg.horizon.into(),
            cap: horizon_cap(),
        });
    }
    for x in family {
        x.require_infinite("family member")?;
    }
    if oracle.ratio() != mode.base_ratio() {
        return Err(Error::Precondition(format!(
            "oracle ratio {} does not match chain ratio {}",
            fmt_q(&oracle.ratio()),
            fmt_q(&mode.base_ratio())
        )));
    }
    let family_bits: Vec<BitBuf> = family
        .iter()
        .map(|x| Ok(x.materialize_prefix(cfg.horizon)?.bits))
        .collect::<Result<_>>()?;
    let mut chain = SplitChain {
        mode,
        family: family.to_vec(),
        stages: Vec::with_capacity(depth),
        nested: vec![OmegaSet::full()],
        differences: Vec::with_capacity(depth),
        attempts: Vec::with_capacity(depth),
        diagnostics: Vec::new(),
        horizon: cfg.horizon,
        nested_bits: vec![BitBuf::ones(cfg.horizon as usize)],
        difference_bits: Vec::with_capacity(depth),
        family_bits,
    };
    let base = chain.mode.base_ratio();
    let ops = chain.mode.ops().to_vec();
    for stage in 1..=depth {
        let prev = chain.nested.last().expect("I_0").clone();
        let prev_bits = chain.nested_bits.last().expect("I_0").clone();
        let targets: Vec<BitBuf> = chain
            .family_bits
            .iter()
            .map(|x| {
                let mut t = x.clone();
                t.and_assign(&prev_bits);
                t
            })
            .collect();
        let mut drawer = Drawer {
            oracle,
            cfg,
            stage,
            draws: 0,
            attempts: 0,
        };
        let (s, sbits) = drawer.composed(&ops, &base, &targets, &prev, family)?;
        let mut ibits = prev_bits.clone();
        ibits.and_assign(&sbits);
        let mut dbits = prev_bits;
        dbits.and_not_assign(&sbits);
        chain.nested.push(prev.intersect(&s));
        chain.differences.push(prev.difference(&s));
        chain.stages.push(s);
        chain.nested_bits.push(ibits);
        chain.difference_bits.push(dbits);
        chain.attempts.push(drawer.attempts);
    }
    chain.diagnostics = chain.compute_diagnostics(cfg)?;
    Ok(chain)
}

impl SplitChain {
    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    pub fn family_bits(&self) -> &[BitBuf] {
        &self.family_bits
    }

    /// Prefix of `I_m`.
    pub fn nested_bits(&self, m: usize) -> &BitBuf {
        &self.nested_bits[m]
    }

    /// Prefix of `D_m` for `m ≥ 1`.
    pub fn difference_bits(&self, m: usize) -> &BitBuf {
        &self.difference_bits[m - 1]
    }

    /// Targets for `I_m` and `D_m`: `pᵐ` and `p^{m−1}(1 − p)`.
    pub fn targets(&self, m: usize) -> (Q, Q) {
        let p = self.mode.stage_ratio();
        (qpow(&p, m as i64), qpow(&p, m as i64 - 1) * (Q::one() - &p))
    }

    fn compute_diagnostics(&self, cfg: &ChainConfig) -> Result<Vec<StageDiagnostics>> {
        let mut out = Vec::new();
        for m in 1..=self.depth() {
            let (it, dt) = self.targets(m);
            for (i, x) in self.family_bits.iter().enumerate() {
                let mut ix = x.clone();
                ix.and_assign(&self.nested_bits[m]);
                let mut dx = x.clone();
                dx.and_assign(&self.difference_bits[m - 1]);
                let ir = cfg.report(&ix, x, &it)?;
                let dr = cfg.report(&dx, x, &dt)?;
                let within = ir.max_tail_deviation <= cfg.tolerance
                    && dr.max_tail_deviation <= cfg.tolerance;
                out.push(StageDiagnostics {
                    stage: m,
                    member: i,
                    nested_target: it.clone(),
                    nested_deviation: ir.max_tail_deviation,
                    difference_target: dt.clone(),
                    difference_deviation: dr.max_tail_deviation,
                    within_tolerance: within,
                });
            }
        }
        Ok(out)
    }

    /// `D_m` and `I_m` are disjoint and their union is `I_{m−1}`, for every `m`,
    /// both as prefixes and as counts inside each family member.
    pub fn partition_law(&self) -> bool {
        (1..=self.depth()).all(|m| {
            let (prev, i, d) = (
                &self.nested_bits[m - 1],
                &self.nested_bits[m],
                &self.difference_bits[m - 1],
            );
            let mut both = i.clone();
            both.and_assign(d);
            let mut union = i.clone();
            union.or_assign(d);
            both.count_ones() == 0
                && union == *prev
                && self.family_bits.iter().all(|x| {
                    let count = |b: &BitBuf| {
                        let mut b = b.clone();
                        b.and_assign(x);
                        b.count_ones()
                    };
                    count(prev) == count(i) + count(d)
                })
        })
    }

    pub fn invariants_hold(&self) -> bool {
        self.diagnostics.iter().all(|d| d.within_tolerance)
    }

    /// `⋃_{m ∈ levels} D_m` with its prefix.
    pub fn union_of_differences(&self, levels: &[u32]) -> (OmegaSet, BitBuf) {
        let mut s = OmegaSet::empty();
        let mut bits = BitBuf::zeros(self.horizon as usize);
        for &m in levels {
            s = s.union(&self.differences[m as usize - 1]);
            bits.or_assign(&self.difference_bits[m as usize - 1]);
        }
        (s, bits)
    }

    pub fn summary(&self) -> ChainSummary {
        ChainSummary {
            mode: self.mode.clone(),
            depth: self.depth(),
            horizon: self.horizon,
            attempts: self.attempts.clone(),
            partition_law: self.partition_law(),
            invariants_hold: self.invariants_hold(),
            diagnostics: self.diagnostics.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    HalfToRho,
    RhoToHalf,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half-to-rho" => Ok(Direction::HalfToRho),
            "rho-to-half" => Ok(Direction::RhoToHalf),
            _ => Err(Error::Parse(format!(
                "expected half-to-rho or rho-to-half, got {s:?}"
            ))),
        }
    }
}

/// Which construction produced the final set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformPath {
    /// Union of `D_m` over the binary digits of `ρ`.
    Binary,
    /// Greedy level selection directly on the `ρ` chain.
    Direct,
    /// Squaring and complementing first, then level selection.
    Squared,
}

#[derive(Clone, Debug)]
pub struct TransformConfig {
    pub depth: u32,
    pub seed: u64,
    pub chain: ChainConfig,
    /// Largest acceptable level-selection residual on the direct path.
    pub residual_tolerance: Q,
}

impl TransformConfig {
    pub fn new(depth: u32, horizon: u64, seed: u64) -> Self {
        TransformConfig {
            depth,
            seed,
            chain: ChainConfig::new(horizon, q(2, 100)),
            residual_tolerance: q(1, 100),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MemberVerdict {
    pub member: String,
    #[serde(with = "crate::rational::serde_q")]
    pub target: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub max_tail_deviation: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub last_ratio: Q,
    pub holds: bool,
}

/// Residual left after each selection step.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualStep {
    pub level: u32,
    #[serde(with = "crate::rational::serde_q")]
    pub weight: Q,
    pub taken: bool,
    #[serde(with = "crate::rational::serde_q")]
    pub residual: Q,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransformReport {
    pub direction: Direction,
    #[serde(with = "crate::rational::serde_q")]
    pub rho: Q,
    pub path: TransformPath,
    /// Whether the direct path was tried and rejected first.
    pub direct_rejected: bool,
    pub squaring: Option<SquaringChain>,
    /// Stage ratio of the chain the set was cut from.
    #[serde(with = "crate::rational::serde_q")]
    pub chain_ratio: Q,
    pub levels: Vec<u32>,
    #[serde(with = "crate::rational::serde_q")]
    pub residual: Q,
    pub residual_trace: Vec<ResidualStep>,
    /// Band half-width used for the verdicts: chain tolerance plus residual bound.
    #[serde(with = "crate::rational::serde_q")]
    pub tolerance: Q,
    pub verdicts: Vec<MemberVerdict>,
    pub chain: ChainSummary,
}

impl TransformReport {
    pub fn all_hold(&self) -> bool {
        self.verdicts.iter().all(|v| v.holds)
    }
}

fn residual_trace(weights: &Weights, target: &Q, k: u32) -> Vec<ResidualStep> {
    let mut r = target.clone();
    (1..=k)
        .map(|m| {
            let w = weights.weight(m);
            let taken = w <= r;
            if taken {
                r -= &w;
            }
            ResidualStep {
                level: m,
                weight: w,
                taken,
                residual: r.clone(),
            }
        })
        .collect()
}

/// Turns a splitter family of one ratio into one of another.
///
/// `HalfToRho` cuts `⋃_{m∈P} D_m` from a bisecting chain, `P` the binary digits of `ρ`.
/// `RhoToHalf` cuts from a `ρ` chain with levels chosen greedily against the weights
/// `ρ^{m−1}(1 − ρ)`; if that leaves too much residual, or `ρ ≥ 2/3`, stages are first
/// squared and complemented into `(1/3, 2/3)`.
pub fn transform_splitter(
    family: &[(String, OmegaSet)],
    direction: Direction,
    rho: &Q,
    cfg: &TransformConfig,
) -> Result<(OmegaSet, TransformReport)> {
    if rho <= &Q::zero() || rho >= &Q::one() {
        return Err(Error::Precondition(format!(
            "rho = {} must lie in (0, 1)",
            fmt_q(rho)
        )));
    }
    let sets: Vec<OmegaSet> = family.iter().map(|(_, s)| s.clone()).collect();
    let depth = cfg.depth;
    let (mode, levels, residual, trace, target, squaring, direct_rejected, path) = match direction {
        Direction::HalfToRho => {
            let (levels, residual) = binary_digits(rho, depth)?;
            let trace = residual_trace(&Weights::Dyadic, rho, depth);
            (
                ChainMode::Half,
                levels,
                residual,
                trace,
                rho.clone(),
                None,
                false,
                TransformPath::Binary,
            )
        }
        Direction::RhoToHalf => {
            let direct = select_levels(&Weights::Geometric { rho: rho.clone() }, &half(), depth)?;
            if rho < &q(2, 3) && direct.1 <= cfg.residual_tolerance {
                let trace =
                    residual_trace(&Weights::Geometric { rho: rho.clone() }, &half(), depth);
                let mode = ChainMode::Rho { rho: rho.clone() };
                (
                    mode,
                    direct.0,
                    direct.1,
                    trace,
                    half(),
                    None,
                    false,
                    TransformPath::Direct,
                )
            } else {
                let sq = squaring_chain(rho)?;
                let mode = ChainMode::Composed {
                    base: rho.clone(),
                    ops: sq.ops.clone(),
                };
                let w = Weights::Geometric {
                    rho: sq.result().clone(),
                };
                let (levels, residual) = select_levels(&w, &half(), depth)?;
                let trace = residual_trace(&w, &half(), depth);
                if residual > cfg.residual_tolerance {
                    return Err(Error::Residual {
                        residual: fmt_q(&residual),
                        tolerance: fmt_q(&cfg.residual_tolerance),
                        trace: trace
                            .iter()
                            .map(|s| fmt_q(&s.residual))
                            .collect::<Vec<_>>()
                            .join(", "),
                    });
                }
                let rejected = rho < &q(2, 3);
                (
                    mode,
                    levels,
                    residual,
                    trace,
                    half(),
                    Some(sq),
                    rejected,
                    TransformPath::Squared,
                )
            }
        }
    };
    let oracle = make_oracle(OracleKind::Bernoulli, &mode.base_ratio(), cfg.seed)?;
    let chain = build_chain(&sets, &oracle, depth as usize, mode, &cfg.chain)?;
    let (s, sbits) = chain.union_of_differences(&levels);
    let bound = match direction {
        Direction::HalfToRho => pow2(-(depth as i64)),
        Direction::RhoToHalf => residual.clone(),
    };
    let tolerance = &cfg.chain.tolerance + &bound;
    let mut verdicts = Vec::with_capacity(family.len());
    for ((name, _), x) in family.iter().zip(chain.family_bits()) {
        let mut sx = sbits.clone();
        sx.and_assign(x);
        let r = cfg.chain.report(&sx, x, &target)?;
        verdicts.push(MemberVerdict {
            member: name.clone(),
            target: target.clone(),
            holds: r.max_tail_deviation <= tolerance,
            last_ratio: r.last_ratio().clone(),
            max_tail_deviation: r.max_tail_deviation,
        });
    }
    let report = TransformReport {
        direction,
        rho: rho.clone(),
        path,
        direct_rejected,
        squaring,
        chain_ratio: chain.mode.stage_ratio(),
        levels,
        residual,
        residual_trace: trace,
        tolerance,
        verdicts,
        chain: chain.summary(),
    };
    Ok((s, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::to_f64;

    #[test]
    fn round_robin_on_evens_gives_multiples_of_four() {
        let cfg = ChainConfig::new(4096, q(1, 100));
        let chain = build_chain(
            &[OmegaSet::evens()],
            &SplitterOracle::RoundRobin,
            2,
            ChainMode::Half,
            &cfg,
        )
        .unwrap();
        let want = OmegaSet::multiples(4)
            .unwrap()
            .materialize_prefix(4096)
            .unwrap()
            .bits;
        assert_eq!(chain.nested_bits(1), &want);
        assert!(chain.partition_law());
        assert!(chain.invariants_hold());
    }

    #[test]
    fn round_robin_needs_one_target() {
        let cfg = ChainConfig::new(4096, q(1, 100));
        let fam = [OmegaSet::evens(), OmegaSet::odds()];
        let e =
            build_chain(&fam, &SplitterOracle::RoundRobin, 2, ChainMode::Half, &cfg).unwrap_err();
        assert!(matches!(e, Error::Precondition(_)));
    }

    #[test]
    fn rejects_finite_members_and_bad_oracles() {
        let cfg = ChainConfig::new(4096, q(1, 100));
        let o = make_oracle(OracleKind::Bernoulli, &half(), 1).unwrap();
        let fin = OmegaSet::range(0u32.into(), 10u32.into());
        assert!(matches!(
            build_chain(&[fin], &o, 2, ChainMode::Half, &cfg),
            Err(Error::FiniteSet(_) | Error::Precondition(_))
        ));
        assert!(make_oracle(OracleKind::Bernoulli, &Q::one(), 1).is_err());
        assert!(build_chain(
            &[OmegaSet::full()],
            &o,
            2,
            ChainMode::Rho { rho: q(3, 5) },
            &cfg
        )
        .is_err());
    }

    #[test]
    fn bernoulli_chain_tracks_powers_of_half() {
        let cfg = ChainConfig::new(200_000, q(2, 100));
        let o = make_oracle(OracleKind::Bernoulli, &half(), 7).unwrap();
        let chain = build_chain(&[OmegaSet::full()], &o, 4, ChainMode::Half, &cfg).unwrap();
        assert!(chain.partition_law());
        assert!(chain.invariants_hold(), "{:?}", chain.diagnostics);
    }

    #[test]
    fn squared_stage_ratio() {
        let m = ChainMode::Composed {
            base: q(3, 4),
            ops: vec![ChainOp::Square],
        };
        assert_eq!(m.stage_ratio(), q(9, 16));
        let cfg = ChainConfig::new(100_000, q(2, 100));
        let o = make_oracle(OracleKind::Bernoulli, &q(3, 4), 3).unwrap();
        let chain = build_chain(&[OmegaSet::full(), OmegaSet::evens()], &o, 2, m, &cfg).unwrap();
        assert!(chain.invariants_hold(), "{:?}", chain.diagnostics);
        let d = &chain.diagnostics[0];
        assert!(to_f64(&d.nested_deviation) < 0.02);
    }
}
