//! Relative densities `|S ∩ X ∩ n| / |X ∩ n|` at finite horizon.
//!
//! Limits cannot be decided from a prefix, so every predicate here reports band
//! membership over a tail window of checkpoints together with the exact ratios.

use num_bigint::BigUint;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bits::BitBuf;
use crate::error::{Error, Result};
use crate::omega::{horizon_cap, OmegaSet};
use crate::rational::{ceil_u, fmt_q, half, parse_q, qu, ratio, Q};

/// Fewest elements of `X` below the horizon for a report to be meaningful.
pub const MIN_SUPPORT: u64 = 10;

/// Upper bound on the number of checkpoints in one report.
const MAX_CHECKPOINTS: usize = 1 << 20;

/// Where ratios are sampled. The horizon itself is always a checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub enum Checkpoints {
    /// Every multiple of the stride.
    Stride(BigUint),
    /// `1, ⌈f⌉, ⌈f²⌉, ...` for a factor `f > 1`.
    Geometric(Q),
    /// Explicit points; those beyond the horizon are dropped.
    List(Vec<BigUint>),
}

impl Checkpoints {
    pub fn stride(s: u64) -> Self {
        Checkpoints::Stride(BigUint::from(s))
    }

    /// Sorted, deduplicated points in `[1, horizon]` ending at the horizon.
    pub fn points(&self, horizon: &BigUint) -> Result<Vec<BigUint>> {
        if horizon.is_zero() {
            return Err(Error::Precondition("horizon must be positive".into()));
        }
        let too_many =
            || Error::Precondition(format!("more than {MAX_CHECKPOINTS} checkpoints requested"));
        let mut out = Vec::new();
        match self {
            Checkpoints::Stride(s) => {
                if s.is_zero() {
                    return Err(Error::Precondition(
                        "checkpoint stride must be positive".into(),
                    ));
                }
                if (horizon / s).to_usize().is_none_or(|n| n > MAX_CHECKPOINTS) {
                    return Err(too_many());
                }
                let mut c = s.clone();
                while &c <= horizon {
                    out.push(c.clone());
                    c += s;
                }
            }
            Checkpoints::Geometric(f) => {
                if f <= &Q::one() {
                    return Err(Error::Precondition(format!(
                        "geometric factor {f} must exceed 1"
                    )));
                }
                let mut c = BigUint::one();
                while &c <= horizon {
                    out.push(c.clone());
                    let next = ceil_u(&(f * qu(&c)));
                    c = next.max(&c + 1u32);
                    if out.len() > MAX_CHECKPOINTS {
                        return Err(too_many());
                    }
                }
            }
            Checkpoints::List(v) => {
                out.extend(v.iter().filter(|c| !c.is_zero() && *c <= horizon).cloned());
                out.sort();
                out.dedup();
            }
        }
        if out.last() != Some(horizon) {
            out.push(horizon.clone());
        }
        Ok(out)
    }
}

impl std::str::FromStr for Checkpoints {
    type Err = Error;

    /// `stride:<n>`, `geometric:<f>` or `list:<a>,<b>,...`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Parse(format!(
                "expected stride:<n>, geometric:<f> or list:<n,...>, got {s:?}"
            ))
        };
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "stride" => Ok(Checkpoints::Stride(arg.trim().parse().map_err(|_| bad())?)),
            "geometric" => Ok(Checkpoints::Geometric(parse_q(arg)?)),
            "list" => arg
                .split(',')
                .map(|x| x.trim().parse().map_err(|_| bad()))
                .collect::<Result<_>>()
                .map(Checkpoints::List),
            _ => Err(bad()),
        }
    }
}

/// Checkpointed exact ratios with tail-window estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    #[serde(with = "crate::rational::serde_big")]
    pub horizon: BigUint,
    #[serde(with = "crate::rational::serde_big::vec")]
    pub checkpoints: Vec<BigUint>,
    /// `|S ∩ X ∩ c|` per checkpoint.
    #[serde(with = "crate::rational::serde_big::vec")]
    pub numerators: Vec<BigUint>,
    /// `|X ∩ c|` per checkpoint.
    #[serde(with = "crate::rational::serde_big::vec")]
    pub denominators: Vec<BigUint>,
    #[serde(with = "crate::rational::serde_q::vec")]
    pub ratios: Vec<Q>,
    #[serde(with = "crate::rational::serde_q")]
    pub tail_window: Q,
    /// Index of the first checkpoint at or beyond `w·horizon`.
    pub tail_start: usize,
    #[serde(with = "crate::rational::serde_q")]
    pub upper_est: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub lower_est: Q,
    #[serde(with = "crate::rational::serde_q::opt")]
    pub target: Option<Q>,
    /// Largest `|ratio − target|` over the tail; without a target, half the tail spread.
    #[serde(with = "crate::rational::serde_q")]
    pub max_tail_deviation: Q,
    /// Checkpoints dropped because `X ∩ c` was empty.
    pub skipped: usize,
}

impl DensityReport {
    /// Builds a report from exact counts. Checkpoints with an empty denominator are dropped.
    pub fn from_counts(
        horizon: &BigUint,
        checkpoints: &[BigUint],
        numerators: &[BigUint],
        denominators: &[BigUint],
        tail_window: &Q,
        target: Option<Q>,
    ) -> Result<Self> {
        check_window(tail_window)?;
        let have = denominators
            .last()
            .and_then(|d| d.to_u64())
            .unwrap_or(u64::MAX);
        if have < MIN_SUPPORT {
            return Err(Error::TooSparse {
                have,
                need: MIN_SUPPORT,
            });
        }
        let mut r = DensityReport {
            horizon: horizon.clone(),
            checkpoints: Vec::new(),
            numerators: Vec::new(),
            denominators: Vec::new(),
            ratios: Vec::new(),
            tail_window: tail_window.clone(),
            tail_start: 0,
            upper_est: Q::zero(),
            lower_est: Q::zero(),
            target: None,
            max_tail_deviation: Q::zero(),
            skipped: 0,
        };
        for ((c, n), d) in checkpoints.iter().zip(numerators).zip(denominators) {
            if d.is_zero() {
                r.skipped += 1;
                continue;
            }
            r.ratios.push(ratio(n, d));
            r.checkpoints.push(c.clone());
            r.numerators.push(n.clone());
            r.denominators.push(d.clone());
        }
        let cut = tail_window * qu(horizon);
        r.tail_start = r.checkpoints.partition_point(|c| qu(c) < cut);
        let tail = &r.ratios[r.tail_start..];
        r.upper_est = tail.iter().max().cloned().expect("horizon is a checkpoint");
        r.lower_est = tail.iter().min().cloned().expect("horizon is a checkpoint");
        r.set_target(target);
        Ok(r)
    }

    /// Sets the target ratio and recomputes the tail deviation.
    pub fn set_target(&mut self, target: Option<Q>) {
        self.max_tail_deviation = match &target {
            Some(t) => self
                .tail()
                .iter()
                .map(|r| (r - t).abs())
                .max()
                .unwrap_or_default(),
            None => (&self.upper_est - &self.lower_est) / Q::from_integer(2.into()),
        };
        self.target = target;
    }

    pub fn with_target(mut self, target: Q) -> Self {
        self.set_target(Some(target));
        self
    }

    /// Ratios at checkpoints inside the tail window.
    pub fn tail(&self) -> &[Q] {
        &self.ratios[self.tail_start..]
    }

    pub fn last_ratio(&self) -> &Q {
        self.ratios.last().expect("non-empty")
    }
}

fn check_window(w: &Q) -> Result<()> {
    if w <= &Q::zero() || w >= &Q::one() {
        return Err(Error::Precondition(format!(
            "tail window {} must lie in (0, 1)",
            fmt_q(w)
        )));
    }
    Ok(())
}

/// Rank of `bits` at each (sorted) checkpoint in one pass.
pub(crate) fn ranks(bits: &BitBuf, checkpoints: &[u64]) -> Vec<BigUint> {
    let words = bits.words();
    let mut out = Vec::with_capacity(checkpoints.len());
    let (mut acc, mut word) = (0u64, 0usize);
    for &c in checkpoints {
        let c = (c as usize).min(bits.len());
        while (word + 1) * 64 <= c {
            acc += words[word].count_ones() as u64;
            word += 1;
        }
        let r = c - word * 64;
        let part = if r == 0 {
            0
        } else {
            (words[word] & ((1u64 << r) - 1)).count_ones() as u64
        };
        out.push(BigUint::from(acc + part));
    }
    out
}

/// Report from materialized prefixes of `S ∩ X` and `X` (both of the same length).
pub fn report_from_bits(
    s_and_x: &BitBuf,
    x: &BitBuf,
    checkpoints: &Checkpoints,
    tail_window: &Q,
    target: Option<Q>,
) -> Result<DensityReport> {
    let horizon = BigUint::from(x.len());
    let cps = checkpoints.points(&horizon)?;
    let small: Vec<u64> = cps
        .iter()
        .map(|c| c.to_u64().expect("below prefix length"))
        .collect();
    DensityReport::from_counts(
        &horizon,
        &cps,
        &ranks(s_and_x, &small),
        &ranks(x, &small),
        tail_window,
        target,
    )
}

/// Exact `(|S ∩ X ∩ c|, |X ∩ c|)` at every checkpoint.
fn counts(s: &OmegaSet, x: &OmegaSet, cps: &[BigUint]) -> Result<(Vec<BigUint>, Vec<BigUint>)> {
    let horizon = cps.last().expect("non-empty");
    let sx = s.intersect(x);
    match horizon.to_u64().filter(|&h| h <= horizon_cap()) {
        Some(h) => {
            let xp = x.materialize_prefix(h)?;
            let sxp = sx.materialize_prefix(h)?;
            let small: Vec<u64> = cps
                .iter()
                .map(|c| c.to_u64().expect("below horizon"))
                .collect();
            Ok((ranks(&sxp.bits, &small), ranks(&xp.bits, &small)))
        }
        None => {
            let mut nums = Vec::with_capacity(cps.len());
            let mut dens = Vec::with_capacity(cps.len());
            for c in cps {
                nums.push(sx.count_below(c)?);
                dens.push(x.count_below(c)?);
            }
            Ok((nums, dens))
        }
    }
}

/// Tabulates `|S ∩ X ∩ c| / |X ∩ c|` at the checkpoints.
pub fn density_report(
    s: &OmegaSet,
    x: &OmegaSet,
    horizon: &BigUint,
    checkpoints: &Checkpoints,
    tail_window: &Q,
) -> Result<DensityReport> {
    x.require_infinite("X")?;
    check_window(tail_window)?;
    let cps = checkpoints.points(horizon)?;
    let (nums, dens) = counts(s, x, &cps)?;
    DensityReport::from_counts(horizon, &cps, &nums, &dens, tail_window, None)
}

/// `(upper_est, lower_est)`: max and min of the tail-window ratios.
pub fn upper_lower_density(
    s: &OmegaSet,
    x: &OmegaSet,
    horizon: &BigUint,
    checkpoints: &Checkpoints,
    tail_window: &Q,
) -> Result<(Q, Q)> {
    let r = density_report(s, x, horizon, checkpoints, tail_window)?;
    Ok((r.upper_est, r.lower_est))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitKind {
    /// Both `S ∩ X` and `X \ S` large.
    Classical,
    /// Ratio tends to `rho`.
    Rho {
        #[serde(with = "crate::rational::serde_q")]
        rho: Q,
    },
    /// Ratio eventually inside `(1/2 − ε, 1/2 + ε)`.
    EpsBand {
        #[serde(with = "crate::rational::serde_q")]
        epsilon: Q,
    },
    Zero,
    One,
}

impl std::str::FromStr for SplitKind {
    type Err = Error;

    /// `classical`, `rho:<p>`, `eps:<e>`, `zero` or `one`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None => match s {
                "classical" => Ok(SplitKind::Classical),
                "zero" => Ok(SplitKind::Zero),
                "one" => Ok(SplitKind::One),
                _ => Err(Error::Parse(format!("unknown split kind {s:?}"))),
            },
            Some(("rho", p)) => Ok(SplitKind::Rho { rho: parse_q(p)? }),
            Some(("eps", e)) => Ok(SplitKind::EpsBand {
                epsilon: parse_q(e)?,
            }),
            _ => Err(Error::Parse(format!("unknown split kind {s:?}"))),
        }
    }
}

/// Horizon, sampling and tolerance shared by every verdict.
#[derive(Clone, Debug)]
pub struct VerdictParams {
    pub horizon: BigUint,
    pub checkpoints: Checkpoints,
    pub tail_window: Q,
    /// Band half-width for `rho`, `zero` and `one`.
    pub tolerance: Q,
}

impl VerdictParams {
    pub fn new(horizon: impl Into<BigUint>, checkpoints: Checkpoints, tolerance: Q) -> Self {
        VerdictParams {
            horizon: horizon.into(),
            checkpoints,
            tail_window: half(),
            tolerance,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitVerdict {
    pub kind: SplitKind,
    pub holds_numerically: bool,
    /// `|S ∩ X ∩ N|`.
    #[serde(with = "crate::rational::serde_big")]
    pub inside: BigUint,
    /// `|(X ∩ N) \ S|`.
    #[serde(with = "crate::rational::serde_big")]
    pub outside: BigUint,
    pub diagnostics: DensityReport,
}

/// Growth floor for the classical verdict: `⌊log₂ |X ∩ N|⌋`.
pub fn classical_floor(support: &BigUint) -> BigUint {
    BigUint::from(support.bits().saturating_sub(1))
}

/// Decides one splitting predicate numerically over the tail window.
pub fn split_verdict(
    kind: SplitKind,
    s: &OmegaSet,
    x: &OmegaSet,
    params: &VerdictParams,
) -> Result<SplitVerdict> {
    if matches!(kind, SplitKind::Zero | SplitKind::One) {
        s.require_infinite("S")?;
        if s.is_cofinite() == Some(true) {
            return Err(Error::Precondition(format!("S = {s} is co-finite")));
        }
    }
    let report = density_report(
        s,
        x,
        &params.horizon,
        &params.checkpoints,
        &params.tail_window,
    )?;
    verdict_from_report(kind, report, &params.tolerance)
}

/// Applies the band test of `kind` to an existing report.
pub fn verdict_from_report(
    kind: SplitKind,
    mut report: DensityReport,
    tolerance: &Q,
) -> Result<SplitVerdict> {
    let inside = report.numerators.last().cloned().expect("non-empty");
    let outside = report.denominators.last().expect("non-empty") - &inside;
    let holds = match &kind {
        SplitKind::Classical => {
            let floor = classical_floor(report.denominators.last().expect("non-empty"));
            inside > floor && outside > floor
        }
        SplitKind::Rho { rho } => {
            check_unit(rho, "rho")?;
            report.set_target(Some(rho.clone()));
            &report.max_tail_deviation <= tolerance
        }
        SplitKind::EpsBand { epsilon } => {
            if epsilon <= &Q::zero() || epsilon >= &half() {
                return Err(Error::Precondition(format!(
                    "epsilon {} must lie in (0, 1/2)",
                    fmt_q(epsilon)
                )));
            }
            report.set_target(Some(half()));
            let (lo, hi) = (half() - epsilon, half() + epsilon);
            report.tail().iter().all(|r| &lo < r && r < &hi)
        }
        SplitKind::Zero => {
            report.set_target(Some(Q::zero()));
            &report.max_tail_deviation <= tolerance
        }
        SplitKind::One => {
            report.set_target(Some(Q::one()));
            &report.max_tail_deviation <= tolerance
        }
    };
    Ok(SplitVerdict {
        kind,
        holds_numerically: holds,
        inside,
        outside,
        diagnostics: report,
    })
}

fn check_unit(p: &Q, what: &str) -> Result<()> {
    if p < &Q::zero() || p > &Q::one() {
        return Err(Error::Precondition(format!(
            "{what} = {} outside [0, 1]",
            fmt_q(p)
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComposeMode {
    Intersect,
    Union,
}

impl std::str::FromStr for ComposeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intersect" => Ok(ComposeMode::Intersect),
            "union" => Ok(ComposeMode::Union),
            _ => Err(Error::Parse(format!(
                "expected intersect or union, got {s:?}"
            ))),
        }
    }
}

/// Density of `A ∩ B` (or `A ∪ B`) when `A` has density `r0` in `X` and `B` has
/// density `r1` inside `A ∩ X` (respectively `X \ A`).
pub fn compose_densities(mode: ComposeMode, r0: &Q, r1: &Q) -> Result<Q> {
    check_unit(r0, "rho0")?;
    check_unit(r1, "rho1")?;
    Ok(match mode {
        ComposeMode::Intersect => r0 * r1,
        ComposeMode::Union => r0 + r1 - r0 * r1,
    })
}
