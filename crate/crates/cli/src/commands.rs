use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde::Serialize;
use serde_json::{json, Value};
use splitlab_core::adversary::recount_ratio;
use splitlab_core::preservation::{index_set, relation_sides};
use splitlab_core::rational::{fmt_q, half, Q};
use splitlab_core::relsys::thinness_sequence;
use splitlab_core::{
    bounding_number, build_partition, centred_escape, centred_thresholds, check_tukey,
    defeat_bisector, dominating_number, dual, gallery, laver_escape, nwd_escape, parse_rule,
    parse_set, reap_contract, reap_tukey_map, split_verdict, sq_rel_holds, thinness_check,
    transform_splitter, verify_growth, witness_above, witness_below, Certificate, Checkpoints,
    Condition, Direction, Error, FiniteRelSys, Gallery, GoodPair, Growth, GrowthVerdict,
    IntervalPartition, OmegaSet, PartKind, Result, Slalom, SplitKind, SymbolicSet, TransformConfig,
    TukeyPair, VerdictParams,
};

use crate::report::Report;
use crate::{rational, small_rational, unit_rational, PartitionOpts};

fn to_json(v: &impl Serialize) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn build(opts: &PartitionOpts) -> Result<Arc<IntervalPartition>> {
    let p = match opts.partition.strip_prefix("boundaries:") {
        Some(list) => {
            let b = list
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<BigUint>()
                        .map_err(|_| Error::Parse(format!("bad boundary {t:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            IntervalPartition::from_boundaries(b)?
        }
        None => build_partition(
            Growth::from_str(&opts.partition)?,
            opts.intervals,
            opts.even_sizes,
        )?,
    };
    Ok(Arc::new(p))
}

fn set(s: &str, p: &Arc<IntervalPartition>) -> Result<OmegaSet> {
    parse_set(s, Some(p))
}

// ---------------------------------------------------------------- density

#[derive(Args)]
pub struct DensityArgs {
    /// Candidate splitter.
    #[arg(long = "S")]
    s: String,
    /// Set being split.
    #[arg(long = "X", default_value = "omega")]
    x: String,
    #[arg(long, default_value_t = 1_000_000)]
    horizon: u64,
    /// Checkpoint spacing; defaults to a hundredth of the horizon.
    #[arg(long)]
    stride: Option<u64>,
    #[arg(long, value_parser = unit_rational, default_value = "1/2")]
    tail_window: Q,
    #[arg(long, value_parser = small_rational, default_value = "1/100")]
    tolerance: Q,
    /// Shorthand for `--split rho:<p>`.
    #[arg(long, value_parser = unit_rational, conflicts_with = "split")]
    rho: Option<Q>,
    /// `classical`, `rho:<p>`, `eps:<e>`, `zero` or `one`.
    #[arg(long)]
    split: Option<String>,
    #[command(flatten)]
    part: PartitionOpts,
}

pub fn density(a: &DensityArgs) -> Result<Report> {
    if a.horizon == 0 {
        return Err(Error::Precondition("horizon must be positive".into()));
    }
    let p = build(&a.part)?;
    let (s, x) = (set(&a.s, &p)?, set(&a.x, &p)?);
    let kind = match (&a.rho, &a.split) {
        (Some(r), _) => SplitKind::Rho { rho: r.clone() },
        (None, Some(k)) => SplitKind::from_str(k)?,
        (None, None) => SplitKind::Classical,
    };
    let stride = a.stride.unwrap_or((a.horizon / 100).max(1));
    if stride == 0 {
        return Err(Error::Precondition("stride must be positive".into()));
    }
    let params = VerdictParams {
        horizon: BigUint::from(a.horizon),
        checkpoints: Checkpoints::stride(stride),
        tail_window: a.tail_window.clone(),
        tolerance: a.tolerance.clone(),
    };
    let v = split_verdict(kind, &s, &x, &params)?;
    let d = &v.diagnostics;
    let rows = d
        .checkpoints
        .iter()
        .zip(&d.numerators)
        .zip(&d.denominators)
        .zip(&d.ratios)
        .map(|(((c, n), dd), r)| vec![c.to_string(), n.to_string(), dd.to_string(), fmt_q(r)])
        .collect();
    let json = json!({
        "command": "density",
        "S": a.s,
        "X": a.x,
        "verdict": to_json(&v)?,
    });
    Ok(Report::new(json, v.holds_numerically)
        .table(
            vec!["checkpoint", "numerator", "denominator", "ratio"],
            rows,
        )
        .line("S", &a.s)
        .line("X", &a.x)
        .line("holds", v.holds_numerically)
        .line("last ratio", fmt_q(d.last_ratio()))
        .line("max tail deviation", fmt_q(&d.max_tail_deviation))
        .line(
            "upper / lower",
            format!("{} / {}", fmt_q(&d.upper_est), fmt_q(&d.lower_est)),
        ))
}

// ---------------------------------------------------------------- adversary

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AdversaryMode {
    /// Defeat the splitter given by `--S`.
    Bisector,
    /// Certify escapes of `X = ⋃ E_n` built from `--E`.
    Centred,
    /// Certify the escape in one slalom block built from `--E`.
    Laver,
}

#[derive(Args)]
pub struct AdversaryArgs {
    #[arg(long, value_enum, default_value = "bisector")]
    mode: AdversaryMode,
    /// Candidate splitter (bisector mode).
    #[arg(long = "S")]
    s: Option<String>,
    #[arg(long, value_parser = small_rational, default_value = "1/4")]
    epsilon: Q,
    /// Outer band for the centred and laver modes; defaults halfway to 1/2.
    #[arg(long, value_parser = small_rational)]
    epsilon_prime: Option<Q>,
    /// Certificates to emit.
    #[arg(long, default_value_t = 3)]
    rounds: usize,
    /// Interval rule for `E_n` (centred and laver modes).
    #[arg(long = "E", default_value = "first(1/2)")]
    e: String,
    /// First certified interval in centred mode; defaults to the least admissible one.
    #[arg(long)]
    index: Option<usize>,
    /// Slalom block in laver mode.
    #[arg(long, default_value_t = 3)]
    block: u32,
    /// Trapping member per block, comma separated; defaults to 0 everywhere.
    #[arg(long, value_delimiter = ',')]
    branch: Vec<usize>,
    #[command(flatten)]
    part: PartitionOpts,
}

fn cert_rows(certs: &[Certificate]) -> Vec<Vec<String>> {
    certs
        .iter()
        .map(|c| {
            vec![
                c.index.to_string(),
                json!(c.chain).as_str().unwrap_or_default().to_string(),
                c.raw.hit.to_string(),
                c.raw.size.to_string(),
                c.raw.num.to_string(),
                c.raw.den.to_string(),
                fmt_q(&c.ratio()),
                format!(
                    "{} {}",
                    json!(c.conclusion.rel).as_str().unwrap_or_default(),
                    fmt_q(&c.conclusion.bound)
                ),
            ]
        })
        .collect()
}

const CERT_HEADERS: [&str; 8] = [
    "index",
    "chain",
    "hit",
    "size",
    "num",
    "den",
    "ratio",
    "conclusion",
];

pub fn adversary(a: &AdversaryArgs) -> Result<Report> {
    let p = build(&a.part)?;
    let eps_prime = a
        .epsilon_prime
        .clone()
        .unwrap_or_else(|| (&a.epsilon + half()) / Q::from_integer(2.into()));
    let (json, certs) = match a.mode {
        AdversaryMode::Bisector => {
            let s_text =
                a.s.as_deref()
                    .ok_or_else(|| Error::Precondition("bisector mode needs --S".into()))?;
            let s = set(s_text, &p)?;
            let d = defeat_bisector(&s, &a.epsilon, &p, &Condition::new(), a.rounds)?;
            // Recount every certified ratio through the set engine as a cross-check.
            let mut recounts = Vec::new();
            for c in &d.certificates {
                let r = recount_ratio(&s, &d.x, &p, c.index)?;
                if r != c.ratio() {
                    return Err(Error::Certificate(format!(
                        "recount at interval {} disagrees",
                        c.index
                    )));
                }
                recounts.push(fmt_q(&r));
            }
            let json = json!({
                "command": "adversary",
                "mode": "bisector",
                "S": s_text,
                "epsilon": fmt_q(&a.epsilon),
                "partition": p.to_json(),
                "rounds": to_json(&d.rounds)?,
                "condition": to_json(&d.condition)?,
                "recounted_ratios": recounts,
                "certificates": to_json(&d.certificates)?,
            });
            (json, d.certificates)
        }
        AdversaryMode::Centred => {
            let e = SymbolicSet::new(p.clone(), parse_rule(&a.e, Some(&p))?);
            let (n0, k0) = centred_thresholds(&a.epsilon, &eps_prime)?;
            let start = a.index.unwrap_or(n0.max(k0));
            let certs = (start..start + a.rounds)
                .map(|n| centred_escape(&e, &a.epsilon, &eps_prime, n))
                .collect::<Result<Vec<_>>>()?;
            let json = json!({
                "command": "adversary",
                "mode": "centred",
                "E": a.e,
                "epsilon": fmt_q(&a.epsilon),
                "epsilon_prime": fmt_q(&eps_prime),
                "thresholds": [n0, k0],
                "partition": p.to_json(),
                "certificates": to_json(&certs)?,
            });
            (json, certs)
        }
        AdversaryMode::Laver => {
            let e = SymbolicSet::new(p.clone(), parse_rule(&a.e, Some(&p))?);
            let depth = a.block + 1;
            let branch = if a.branch.is_empty() {
                vec![0; depth as usize]
            } else {
                a.branch.clone()
            };
            let slalom = Slalom::from_fn(depth, branch.clone(), |_, _, n| e.kind_at(n));
            let (_, cert) = laver_escape(&p, &slalom, &a.epsilon, &eps_prime, a.block)?;
            let json = json!({
                "command": "adversary",
                "mode": "laver",
                "E": a.e,
                "epsilon": fmt_q(&a.epsilon),
                "epsilon_prime": fmt_q(&eps_prime),
                "block": a.block,
                "branch": branch,
                "partition": p.to_json(),
                "certificates": [to_json(&cert)?],
            });
            (json, vec![cert])
        }
    };
    let ok = certs.iter().all(|c| c.verify().is_ok());
    Ok(Report::new(json, ok)
        .table(CERT_HEADERS.to_vec(), cert_rows(&certs))
        .line("certificates", certs.len())
        .line("all verify", ok))
}

// ---------------------------------------------------------------- verify-cert

#[derive(Args)]
pub struct VerifyArgs {
    /// Certificate file: one certificate, an array, or an `adversary` report. `-` reads stdin.
    #[arg(default_value = "-")]
    file: PathBuf,
}

fn read_input(path: &PathBuf) -> Result<String> {
    let text = if path.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin())
    } else {
        std::fs::read_to_string(path)
    };
    text.map_err(|e| Error::Precondition(format!("cannot read {}: {e}", path.display())))
}

pub fn verify_cert(a: &VerifyArgs) -> Result<Report> {
    let v: Value = serde_json::from_str(&read_input(&a.file)?)?;
    let items = match v {
        Value::Object(ref m) if m.contains_key("certificates") => match &m["certificates"] {
            Value::Array(xs) => xs.clone(),
            _ => return Err(Error::Parse("`certificates` must be an array".into())),
        },
        Value::Array(xs) => xs,
        other => vec![other],
    };
    if items.is_empty() {
        return Err(Error::Precondition("no certificates found".into()));
    }
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for item in items {
        let c = Certificate::from_json(&item.to_string())?;
        let (ok, reason) = match c.verify() {
            Ok(()) => (true, String::new()),
            Err(e) => (false, e.to_string()),
        };
        rows.push(vec![c.index.to_string(), ok.to_string(), reason.clone()]);
        verdicts.push(json!({"index": c.index, "valid": ok, "reason": reason}));
    }
    let ok = verdicts.iter().all(|v| v["valid"] == true);
    let n = verdicts.len();
    Ok(Report::new(
        json!({"command": "verify-cert", "valid": ok, "verdicts": verdicts}),
        ok,
    )
    .table(vec!["index", "valid", "reason"], rows)
    .line("certificates", n)
    .line("valid", ok))
}

// ---------------------------------------------------------------- preserve

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PreserveMode {
    /// Find a pair each `--X` is related to.
    Above,
    /// Find a set related to the pair given by `--H` and `--E`.
    Below,
    /// Break the relation of each `--X` with the pair above `--m`.
    Escape,
    /// Check the reaping map of `--S` against each `--X`.
    Reap,
}

#[derive(Args)]
pub struct PreserveArgs {
    #[arg(long, value_enum)]
    mode: PreserveMode,
    /// Sets to test; repeat the flag for several.
    #[arg(long = "X")]
    x: Vec<String>,
    /// Splitter for reap mode.
    #[arg(long = "S")]
    s: Option<String>,
    #[arg(long, value_parser = small_rational, default_value = "1/10")]
    epsilon: Q,
    /// Intervals checked; defaults to those lying below `--horizon`.
    #[arg(long)]
    horizon_k: Option<usize>,
    #[arg(long, default_value_t = 1_000_000)]
    horizon: u64,
    /// Interval rule for the pair's `E_k`.
    #[arg(long = "E", default_value = "first(5/16)")]
    e: String,
    /// Indices of the pair's `H`: `all` or a comma list.
    #[arg(long = "H", default_value = "all")]
    h: String,
    /// Starting index of the relation.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Escape mode keeps `Y ∩ m = X ∩ m`.
    #[arg(long, default_value = "0")]
    m: BigUint,
    #[command(flatten)]
    part: PartitionOpts,
}

fn pair_from_args(a: &PreserveArgs, p: &Arc<IntervalPartition>, hk: usize) -> Result<GoodPair> {
    let h: Vec<bool> = if a.h == "all" {
        vec![true; hk]
    } else {
        let idx =
            a.h.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad index {t:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
        (0..hk).map(|k| idx.contains(&k)).collect()
    };
    let mut e = SymbolicSet::new(p.clone(), parse_rule(&a.e, Some(p))?);
    for (k, _) in h.iter().enumerate().filter(|(_, &b)| !b) {
        e = e.with_override(k, PartKind::Full)?;
    }
    let pair = GoodPair::new(index_set(h), e, a.epsilon.clone())?;
    pair.validate(hk)?;
    Ok(pair)
}

pub fn preserve(a: &PreserveArgs) -> Result<Report> {
    let p = build(&a.part)?;
    let hk = a
        .horizon_k
        .unwrap_or_else(|| p.intervals_below(&BigUint::from(a.horizon)));
    if hk == 0 {
        return Err(Error::Precondition(
            "no interval lies below the horizon".into(),
        ));
    }
    let need_x = || -> Result<()> {
        if a.x.is_empty() {
            return Err(Error::Precondition("give at least one --X".into()));
        }
        Ok(())
    };
    let mut rows = Vec::new();
    let mut items = Vec::new();
    let mut ok = true;
    let mode;
    match a.mode {
        PreserveMode::Above => {
            mode = "above";
            need_x()?;
            for name in &a.x {
                let x = set(name, &p)?;
                let w = witness_above(&x, &p, &a.epsilon, hk)?;
                let v = sq_rel_holds(&x, &w.pair, w.n, hk)?;
                ok &= v.holds();
                rows.push(vec![
                    name.clone(),
                    json!(w.branch).as_str().unwrap_or_default().into(),
                    w.n.to_string(),
                    v.holds().to_string(),
                ]);
                items.push(json!({
                    "X": name,
                    "branch": to_json(&w.branch)?,
                    "n": w.n,
                    "pair": to_json(&w.pair.summary(hk)?)?,
                    "verdict": to_json(&v)?,
                }));
            }
        }
        PreserveMode::Below => {
            mode = "below";
            let pair = pair_from_args(a, &p, hk)?;
            let w = witness_below(&pair, hk)?;
            let v = sq_rel_holds(&w.x, &pair, 1, hk)?;
            ok = v.holds();
            rows.push(vec![
                w.x.to_string(),
                json!(w.branch).as_str().unwrap_or_default().into(),
                "1".into(),
                ok.to_string(),
            ]);
            items.push(json!({
                "X": w.x.to_string(),
                "branch": to_json(&w.branch)?,
                "n": 1,
                "pair": to_json(&pair.summary(hk)?)?,
                "verdict": to_json(&v)?,
            }));
        }
        PreserveMode::Escape => {
            mode = "escape";
            need_x()?;
            let pair = pair_from_args(a, &p, hk)?;
            for name in &a.x {
                let x = set(name, &p)?;
                let esc = nwd_escape(&x, &pair, a.n, &a.m, hk)?;
                let v = sq_rel_holds(&esc.y, &pair, a.n, hk)?;
                let m: u64 = (&a.m)
                    .try_into()
                    .map_err(|_| Error::Precondition("m is too large to compare".into()))?;
                let kept = esc.y.materialize_prefix(m)? == x.materialize_prefix(m)?;
                let (lhs, rhs) = relation_sides(&esc.y, &pair, esc.index)?;
                ok &= !v.holds() && kept;
                rows.push(vec![
                    name.clone(),
                    esc.index.to_string(),
                    (!v.holds()).to_string(),
                    kept.to_string(),
                ]);
                items.push(json!({
                    "X": name,
                    "index": esc.index,
                    "flipped": !v.holds(),
                    "prefix_kept": kept,
                    "lhs": lhs.to_string(),
                    "rhs": fmt_q(&rhs),
                    "verdict": to_json(&v)?,
                }));
            }
        }
        PreserveMode::Reap => {
            mode = "reap";
            need_x()?;
            let s_text =
                a.s.as_deref()
                    .ok_or_else(|| Error::Precondition("reap mode needs --S".into()))?;
            let s = set(s_text, &p)?;
            let map = reap_tukey_map(&s, &p, &a.epsilon, hk)?;
            for name in &a.x {
                let x = set(name, &p)?;
                let r = reap_contract(&map, &s, &x, hk)?;
                ok &= r.related && r.chain_ok;
                let k0 = r.k0.map_or("none".to_string(), |k| k.to_string());
                rows.push(vec![
                    name.clone(),
                    k0,
                    r.chain_ok.to_string(),
                    r.related.to_string(),
                ]);
                items.push(json!({"X": name, "contract": to_json(&r)?}));
            }
            items.insert(
                0,
                json!({"S": s_text, "complemented": map.complemented, "pair": to_json(&map.pair.summary(hk)?)?}),
            );
        }
    }
    let headers = match a.mode {
        PreserveMode::Escape => vec!["X", "index", "flipped", "prefix_kept"],
        PreserveMode::Reap => vec!["X", "k0", "chain_ok", "related"],
        _ => vec!["X", "branch", "n", "holds"],
    };
    let json = json!({
        "command": "preserve",
        "mode": mode,
        "epsilon": fmt_q(&a.epsilon),
        "horizon_k": hk,
        "partition": p.to_json(),
        "results": items,
        "ok": ok,
    });
    Ok(Report::new(json, ok)
        .table(headers, rows)
        .line("mode", mode)
        .line("horizon_k", hk)
        .line("ok", ok))
}

// ---------------------------------------------------------------- transform

const DEFAULT_FAMILY: [&str; 5] = ["omega", "evens", "prog(1,3)", "osc(2)", "alt(prog(0,5))"];

#[derive(Args)]
pub struct TransformArgs {
    /// `half-to-rho` or `rho-to-half`.
    #[arg(long, default_value = "half-to-rho", value_parser = |s: &str| Direction::from_str(s).map_err(|e| e.to_string()))]
    direction: Direction,
    #[arg(long, value_parser = unit_rational)]
    rho: Q,
    #[arg(long, default_value_t = 8)]
    depth: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    horizon: u64,
    /// Band half-width for every chain stage.
    #[arg(long, value_parser = small_rational)]
    tolerance: Option<Q>,
    /// Largest accepted level-selection residual.
    #[arg(long, value_parser = rational)]
    residual_tolerance: Option<Q>,
    /// Family members; repeat the flag. Defaults to five structured sets.
    #[arg(long)]
    family: Vec<String>,
}

pub fn transform(a: &TransformArgs) -> Result<Report> {
    if a.depth == 0 || a.horizon == 0 {
        return Err(Error::Precondition(
            "depth and horizon must be positive".into(),
        ));
    }
    let names: Vec<String> = if a.family.is_empty() {
        DEFAULT_FAMILY.iter().map(|s| s.to_string()).collect()
    } else {
        a.family.clone()
    };
    let family = names
        .iter()
        .map(|n| Ok((n.clone(), parse_set(n, None)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut cfg = TransformConfig::new(a.depth, a.horizon, a.seed);
    if let Some(t) = &a.tolerance {
        cfg.chain.tolerance = t.clone();
    }
    if let Some(t) = &a.residual_tolerance {
        cfg.residual_tolerance = t.clone();
    }
    let (_, report) = transform_splitter(&family, a.direction, &a.rho, &cfg)?;
    let ok = report.all_hold();
    let rows = report
        .verdicts
        .iter()
        .map(|v| {
            vec![
                v.member.clone(),
                fmt_q(&v.target),
                format!(
                    "{:.6}",
                    splitlab_core::rational::to_f64(&v.max_tail_deviation)
                ),
                format!("{:.6}", splitlab_core::rational::to_f64(&v.last_ratio)),
                v.holds.to_string(),
            ]
        })
        .collect();
    let levels = report
        .levels
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(",");
    let json = json!({
        "command": "transform",
        "seed": a.seed,
        "depth": a.depth,
        "horizon": a.horizon,
        "family": names,
        "report": to_json(&report)?,
    });
    Ok(Report::new(json, ok)
        .table(
            vec![
                "member",
                "target",
                "max_tail_deviation",
                "last_ratio",
                "holds",
            ],
            rows,
        )
        .line("path", json!(report.path).as_str().unwrap_or_default())
        .line("levels", levels)
        .line("residual", fmt_q(&report.residual))
        .line("all hold", ok))
}

// ---------------------------------------------------------------- relsys

#[derive(Args)]
pub struct RelsysArgs {
    #[command(subcommand)]
    command: RelsysCommand,
}

#[derive(Subcommand)]
enum RelsysCommand {
    /// Validity, bounding and dominating numbers of a system and its dual.
    Analyze {
        /// System as `{"X": [...], "Y": [...], "rel": ["10", ...]}`.
        file: PathBuf,
    },
    /// A finite truncation of a standard system: `reap:<n>`, `reap-rho:<n>:<rho>:<tol>` or `dom:<n>:<m>:<cut>`.
    Gallery { kind: String },
    /// Check a pair of maps between two systems, and the reversed pair between the duals.
    Tukey {
        r0: PathBuf,
        r1: PathBuf,
        /// `F: X0 → X1` as indices.
        #[arg(long, value_delimiter = ',', required = true)]
        f: Vec<usize>,
        /// `G: Y1 → Y0` as indices.
        #[arg(long, value_delimiter = ',', required = true)]
        g: Vec<usize>,
    },
    /// Thinness bound for the range of a sequence dominating the enumeration of `--R` at powers of two.
    Thinness {
        #[arg(long = "R", default_value = "pow(2)")]
        r: String,
        #[arg(long, default_value_t = 1)]
        threshold: u32,
        #[arg(long, default_value_t = 10)]
        nmax: u32,
        /// Added to every term of the sequence.
        #[arg(long, default_value_t = 0)]
        shift: u64,
    },
}

fn read_system(path: &PathBuf) -> Result<FiniteRelSys> {
    Ok(serde_json::from_str(&read_input(path)?)?)
}

fn parse_gallery(kind: &str) -> Result<Gallery> {
    let parts: Vec<&str> = kind.split(':').collect();
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad number {s:?}")))
    };
    match parts.as_slice() {
        ["reap", n] => Ok(Gallery::Reap { n: num(n)? }),
        ["reap-rho", n, rho, tol] => Ok(Gallery::ReapRho {
            n: num(n)?,
            rho: splitlab_core::parse_q(rho)?,
            tol: splitlab_core::parse_q(tol)?,
        }),
        ["dom", n, m, cut] => Ok(Gallery::Dom {
            n: num(n)?,
            m: num(m)?,
            cut: num(cut)?,
        }),
        _ => Err(Error::Parse(format!("unknown gallery entry {kind:?}"))),
    }
}

fn labels(names: &[String], idx: &[usize]) -> String {
    idx.iter()
        .map(|&i| names[i].as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn relsys(a: &RelsysArgs) -> Result<Report> {
    match &a.command {
        RelsysCommand::Analyze { file } => {
            let r = read_system(file)?;
            let validity = r.validity();
            if !validity.ok() {
                let json = json!({"command": "relsys analyze", "validity": to_json(&validity)?});
                return Ok(Report::new(json, false)
                    .line("total", validity.total)
                    .line("unbounded", validity.unbounded));
            }
            let (b, d) = (bounding_number(&r)?, dominating_number(&r)?);
            let dr = dual(&r)?;
            let (db, dd) = (bounding_number(&dr)?, dominating_number(&dr)?);
            let ok = db.size == d.size && dd.size == b.size;
            let rows = vec![
                vec![
                    "bounding".into(),
                    b.size.to_string(),
                    labels(&r.x, &b.witness),
                ],
                vec![
                    "dominating".into(),
                    d.size.to_string(),
                    labels(&r.y, &d.witness),
                ],
                vec![
                    "dual bounding".into(),
                    db.size.to_string(),
                    labels(&dr.x, &db.witness),
                ],
                vec![
                    "dual dominating".into(),
                    dd.size.to_string(),
                    labels(&dr.y, &dd.witness),
                ],
            ];
            let json = json!({
                "command": "relsys analyze",
                "validity": to_json(&validity)?,
                "bounding": to_json(&b)?,
                "dominating": to_json(&d)?,
                "dual": {"bounding": to_json(&db)?, "dominating": to_json(&dd)?},
                "duality_holds": ok,
            });
            Ok(Report::new(json, ok)
                .table(vec!["quantity", "size", "witness"], rows)
                .line("bounding", b.size)
                .line("dominating", d.size)
                .line("duality holds", ok))
        }
        RelsysCommand::Gallery { kind } => {
            let entry = gallery(&parse_gallery(kind)?)?;
            let show = |v: Option<usize>| v.map_or("undefined".to_string(), |n| n.to_string());
            let ok = entry.validity.ok();
            let rows = vec![
                vec!["bounding".into(), show(entry.bounding)],
                vec!["dominating".into(), show(entry.dominating)],
            ];
            Ok(Report::new(
                json!({"command": "relsys gallery", "entry": to_json(&entry)?}),
                ok,
            )
            .table(vec!["quantity", "size"], rows)
            .line("name", &entry.name)
            .line("note", &entry.note)
            .line(
                "size",
                format!("{} x {}", entry.system.x.len(), entry.system.y.len()),
            )
            .line("valid", ok))
        }
        RelsysCommand::Tukey { r0, r1, f, g } => {
            let (r0, r1) = (read_system(r0)?, read_system(r1)?);
            let pair = TukeyPair {
                f: f.clone(),
                g: g.clone(),
            };
            let forward = check_tukey(&r0, &r1, &pair)?;
            let reversed = if r0.validity().ok() && r1.validity().ok() {
                Some(check_tukey(&dual(&r1)?, &dual(&r0)?, &pair.reversed())?)
            } else {
                None
            };
            let ok = forward.holds();
            let json = json!({
                "command": "relsys tukey",
                "forward": to_json(&forward)?,
                "reversed_on_duals": to_json(&reversed)?,
            });
            Ok(Report::new(json, ok).line("forward", ok).line(
                "reversed on duals",
                reversed.map_or("n/a".into(), |v| v.holds().to_string()),
            ))
        }
        RelsysCommand::Thinness {
            r,
            threshold,
            nmax,
            shift,
        } => {
            let rs = parse_set(r, None)?;
            let x = thinness_sequence(&rs, nmax + 2, *shift)?;
            let rep = thinness_check(&rs, &x, *threshold, *nmax)?;
            let rows = rep
                .rows
                .iter()
                .map(|row| {
                    vec![
                        row.n.to_string(),
                        fmt_q(&row.max_ratio),
                        fmt_q(&row.bound),
                        row.holds.to_string(),
                    ]
                })
                .collect();
            let ok = rep.holds;
            Ok(Report::new(
                json!({"command": "relsys thinness", "R": r, "report": to_json(&rep)?}),
                ok,
            )
            .table(vec!["n", "max_ratio", "bound", "holds"], rows)
            .line("holds", ok)
            .line("zero split", rep.zero_split_numerically))
        }
    }
}

// ---------------------------------------------------------------- partition

#[derive(Args)]
pub struct PartitionArgs {
    #[command(flatten)]
    part: PartitionOpts,
}

pub fn partition(a: &PartitionArgs) -> Result<Report> {
    let p = build(&a.part)?;
    let count = p.count().max(a.part.intervals);
    let verdict = verify_growth(&p);
    let mut rows = Vec::with_capacity(count);
    let mut tail = Vec::with_capacity(count);
    for n in 0..count {
        let t = p.tail_ratio(n);
        let below = n == 0 || t < splitlab_core::rational::pow2(-(n as i64));
        rows.push(vec![
            n.to_string(),
            p.boundary(n).to_string(),
            p.size(n).to_string(),
            fmt_q(&t),
            below.to_string(),
        ]);
        tail.push(fmt_q(&t));
    }
    let ok = verdict == GrowthVerdict::Ok;
    let sizes: Vec<String> = (0..count).map(|n| p.size(n).to_string()).collect();
    let json = json!({
        "command": "partition",
        "partition": p.to_json(),
        "sizes": sizes,
        "tail_ratios": tail,
        "verdict": to_json(&verdict)?,
    });
    Ok(Report::new(json, ok)
        .table(
            vec!["n", "boundary", "size", "tail_ratio", "below_2^-n"],
            rows,
        )
        .line("growth", a.part.partition.as_str())
        .line("intervals", count)
        .line(
            "verdict",
            if ok {
                "ok".to_string()
            } else {
                format!("{verdict:?}")
            },
        ))
}
