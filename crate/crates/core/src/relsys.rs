//! Finite relational systems `(X, ⊏, Y)`: unbounding and dominating numbers,
//! duals, Tukey connections, and finite truncations of a few infinite systems.

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::omega::OmegaSet;
use crate::rational::{fmt_q, pow2, q, ratio, Q};

/// Largest side handled; both sides are stored as 64-bit masks.
pub const MAX_SIDE: usize = 64;
/// Largest `|Y|` for which the dominating number uses plain enumeration.
pub const EXHAUSTIVE_LIMIT: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteRelSys {
    pub x: Vec<String>,
    pub y: Vec<String>,
    /// `rel[i][j]` is `x_i ⊏ y_j`.
    pub rel: Vec<Vec<bool>>,
}

/// Which of the two non-degeneracy conditions hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Validity {
    /// Every `x` is below some `y`.
    pub total: bool,
    /// No single `y` is above every `x`.
    pub unbounded: bool,
}

impl Validity {
    pub fn ok(&self) -> bool {
        self.total && self.unbounded
    }
}

fn labels(n: usize, prefix: &str) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

impl FiniteRelSys {
    /// Builds a system and checks both conditions.
    pub fn new(x: Vec<String>, y: Vec<String>, rel: Vec<Vec<bool>>) -> Result<Self> {
        let s = Self::unchecked(x, y, rel)?;
        s.check()?;
        Ok(s)
    }

    /// Builds a system checking only its shape.
    pub fn unchecked(x: Vec<String>, y: Vec<String>, rel: Vec<Vec<bool>>) -> Result<Self> {
        if x.is_empty() || y.is_empty() {
            return Err(Error::InvalidSystem("both sides must be non-empty".into()));
        }
        if x.len() > MAX_SIDE || y.len() > MAX_SIDE {
            return Err(Error::InvalidSystem(format!(
                "sides are limited to {MAX_SIDE} points"
            )));
        }
        if rel.len() != x.len() || rel.iter().any(|r| r.len() != y.len()) {
            return Err(Error::InvalidSystem(format!(
                "relation must be {} x {}",
                x.len(),
                y.len()
            )));
        }
        Ok(FiniteRelSys { x, y, rel })
    }

    /// System with labels `x0…`, `y0…`.
    pub fn from_matrix(rel: Vec<Vec<bool>>) -> Result<Self> {
        let cols = rel.first().map_or(0, Vec::len);
        Self::new(labels(rel.len(), "x"), labels(cols, "y"), rel)
    }

    pub fn validity(&self) -> Validity {
        Validity {
            total: self.rel.iter().all(|r| r.iter().any(|&b| b)),
            unbounded: (0..self.y.len()).all(|j| self.rel.iter().any(|r| !r[j])),
        }
    }

    pub fn check(&self) -> Result<()> {
        if let Some(i) = self.rel.iter().position(|r| !r.iter().any(|&b| b)) {
            return Err(Error::InvalidSystem(format!(
                "{} is below no point of Y",
                self.x[i]
            )));
        }
        if let Some(j) = (0..self.y.len()).find(|&j| self.rel.iter().all(|r| r[j])) {
            return Err(Error::InvalidSystem(format!(
                "{} is above every point of X",
                self.y[j]
            )));
        }
        Ok(())
    }

    /// `col[j]`: mask of the `x` below `y_j`.
    fn columns(&self) -> Vec<u64> {
        (0..self.y.len())
            .map(|j| {
                self.rel
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| r[j])
                    .fold(0u64, |m, (i, _)| m | 1 << i)
            })
            .collect()
    }

    /// `row[i]`: mask of the `y` above `x_i`.
    fn rows(&self) -> Vec<u64> {
        self.rel
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &b)| b)
                    .fold(0u64, |m, (j, _)| m | 1 << j)
            })
            .collect()
    }

    pub fn transpose_negated(&self) -> Vec<Vec<bool>> {
        (0..self.y.len())
            .map(|j| self.rel.iter().map(|r| !r[j]).collect())
            .collect()
    }
}

/// A minimum-size witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Extremal {
    pub size: usize,
    /// Indices of the witness, least in size-then-lexicographic order.
    pub witness: Vec<usize>,
}

/// Least `|U|` with `U ⊆ X` bounded by no single `y`.
pub fn bounding_number(r: &FiniteRelSys) -> Result<Extremal> {
    r.check()?;
    let cols = r.columns();
    for k in 1..=r.x.len() {
        for u in (0..r.x.len()).combinations(k) {
            let mask = u.iter().fold(0u64, |m, &i| m | 1 << i);
            if cols.iter().all(|c| c & mask != mask) {
                return Ok(Extremal {
                    size: k,
                    witness: u,
                });
            }
        }
    }
    unreachable!("a checked system is unbounded as a whole")
}

/// Least `|D|` with `D ⊆ Y` such that every `x` is below some member of `D`.
pub fn dominating_number(r: &FiniteRelSys) -> Result<Extremal> {
    r.check()?;
    let cols = r.columns();
    let all = if r.x.len() == 64 {
        u64::MAX
    } else {
        (1u64 << r.x.len()) - 1
    };
    if r.y.len() <= EXHAUSTIVE_LIMIT {
        for k in 1..=r.y.len() {
            for d in (0..r.y.len()).combinations(k) {
                if d.iter().fold(0u64, |m, &j| m | cols[j]) == all {
                    return Ok(Extremal {
                        size: k,
                        witness: d,
                    });
                }
            }
        }
        unreachable!("every x is below some y");
    }
    let rows = r.rows();
    let mut best: Option<Vec<usize>> = None;
    let mut chosen = Vec::new();
    cover(&cols, &rows, all, 0, &mut chosen, &mut best);
    let mut witness = best.expect("every x is below some y");
    witness.sort_unstable();
    // Branch and bound finds the size; an ordered search then finds the least witness of that size.
    let size = witness.len();
    let mut least = Vec::with_capacity(size);
    if !least_cover(&cols, &rows, all, 0, 0, size, &mut least) {
        least = witness;
    }
    Ok(Extremal {
        size,
        witness: least,
    })
}

/// Extends `chosen` in increasing column order to a cover using exactly `left` more columns.
fn least_cover(
    cols: &[u64],
    rows: &[u64],
    all: u64,
    start: usize,
    covered: u64,
    left: usize,
    chosen: &mut Vec<usize>,
) -> bool {
    if covered == all {
        return left == 0;
    }
    if left == 0 {
        return false;
    }
    // The first uncovered row needs a column at or after `start`.
    let row = (0..rows.len())
        .find(|&i| covered & (1 << i) == 0)
        .expect("something is uncovered");
    let reachable = rows[row] >> start.min(63);
    if start >= 64 || reachable == 0 {
        return false;
    }
    for j in start..cols.len() {
        if cols.len() - j < left {
            break;
        }
        chosen.push(j);
        if least_cover(cols, rows, all, j + 1, covered | cols[j], left - 1, chosen) {
            return true;
        }
        chosen.pop();
    }
    false
}

fn cover(
    cols: &[u64],
    rows: &[u64],
    all: u64,
    covered: u64,
    chosen: &mut Vec<usize>,
    best: &mut Option<Vec<usize>>,
) {
    if covered == all {
        if best.as_ref().is_none_or(|b| chosen.len() < b.len()) {
            *best = Some(chosen.clone());
        }
        return;
    }
    if best.as_ref().is_some_and(|b| chosen.len() + 1 >= b.len()) {
        return;
    }
    // Branch on the uncovered row with the fewest options.
    let row = (0..rows.len())
        .filter(|&i| covered & (1 << i) == 0)
        .min_by_key(|&i| rows[i].count_ones())
        .expect("something is uncovered");
    let mut options: Vec<usize> = (0..cols.len())
        .filter(|&j| rows[row] & (1 << j) != 0)
        .collect();
    options.sort_by_key(|&j| std::cmp::Reverse((cols[j] & !covered).count_ones()));
    for j in options {
        chosen.push(j);
        cover(cols, rows, all, covered | cols[j], chosen, best);
        chosen.pop();
    }
}

/// `(Y, ⊄, X)`: the negated transpose.
pub fn dual(r: &FiniteRelSys) -> Result<FiniteRelSys> {
    r.check()?;
    let d = FiniteRelSys::unchecked(r.y.clone(), r.x.clone(), r.transpose_negated())?;
    debug_assert!(d.validity().ok(), "the dual of a valid system is valid");
    d.check()?;
    Ok(d)
}

/// `F: X₀ → X₁` and `G: Y₁ → Y₀`, as index maps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TukeyPair {
    pub f: Vec<usize>,
    pub g: Vec<usize>,
}

impl TukeyPair {
    pub fn identity(r: &FiniteRelSys) -> Self {
        TukeyPair {
            f: (0..r.x.len()).collect(),
            g: (0..r.y.len()).collect(),
        }
    }

    /// `(G, F)`, a candidate between the duals in the opposite direction.
    pub fn reversed(&self) -> Self {
        TukeyPair {
            f: self.g.clone(),
            g: self.f.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum TukeyVerdict {
    Holds,
    /// `F(x₀) ⊏₁ y₁` but not `x₀ ⊏₀ G(y₁)`.
    Fails {
        x0: usize,
        y1: usize,
    },
}

impl TukeyVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, TukeyVerdict::Holds)
    }
}

fn check_maps(r0: &FiniteRelSys, r1: &FiniteRelSys, p: &TukeyPair) -> Result<()> {
    if p.f.len() != r0.x.len() || p.f.iter().any(|&i| i >= r1.x.len()) {
        return Err(Error::InvalidSystem(
            "F must map every point of X0 into X1".into(),
        ));
    }
    if p.g.len() != r1.y.len() || p.g.iter().any(|&j| j >= r0.y.len()) {
        return Err(Error::InvalidSystem(
            "G must map every point of Y1 into Y0".into(),
        ));
    }
    Ok(())
}

/// Checks `F(x₀) ⊏₁ y₁ ⟹ x₀ ⊏₀ G(y₁)` everywhere; reports the least failure.
pub fn check_tukey(r0: &FiniteRelSys, r1: &FiniteRelSys, p: &TukeyPair) -> Result<TukeyVerdict> {
    check_maps(r0, r1, p)?;
    for x0 in 0..r0.x.len() {
        for y1 in 0..r1.y.len() {
            if r1.rel[p.f[x0]][y1] && !r0.rel[x0][p.g[y1]] {
                return Ok(TukeyVerdict::Fails { x0, y1 });
            }
        }
    }
    Ok(TukeyVerdict::Holds)
}

/// `(F₁ ∘ F₀, G₀ ∘ G₁)` for `R₀ → R₁ → R₂`.
pub fn compose(p01: &TukeyPair, p12: &TukeyPair) -> TukeyPair {
    TukeyPair {
        f: p01.f.iter().map(|&i| p12.f[i]).collect(),
        g: p12.g.iter().map(|&j| p01.g[j]).collect(),
    }
}

/// The least relation on `X₀ × Y₀` making `(f, g)` a connection into `r1`:
/// `x₀ ⊏₀ y₀` iff `F(x₀) ⊏₁ y₁` for some `y₁` with `G(y₁) = y₀`.
pub fn pullback(
    r1: &FiniteRelSys,
    f: &[usize],
    g: &[usize],
    y0_len: usize,
) -> Result<FiniteRelSys> {
    if f.iter().any(|&i| i >= r1.x.len()) || g.len() != r1.y.len() || g.iter().any(|&j| j >= y0_len)
    {
        return Err(Error::InvalidSystem(
            "maps do not fit the target system".into(),
        ));
    }
    let mut rel = vec![vec![false; y0_len]; f.len()];
    for (x0, &x1) in f.iter().enumerate() {
        for (y1, &y0) in g.iter().enumerate() {
            if r1.rel[x1][y1] {
                rel[x0][y0] = true;
            }
        }
    }
    FiniteRelSys::unchecked(labels(f.len(), "x"), labels(y0_len, "y"), rel)
}

/// Bit rows on the wire: `{"X": [...], "Y": [...], "rel": ["101", ...]}`.
#[derive(Serialize, Deserialize)]
struct Wire {
    #[serde(rename = "X")]
    x: Vec<String>,
    #[serde(rename = "Y")]
    y: Vec<String>,
    rel: Vec<String>,
}

impl Serialize for FiniteRelSys {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Wire {
            x: self.x.clone(),
            y: self.y.clone(),
            rel: self
                .rel
                .iter()
                .map(|r| r.iter().map(|&b| if b { '1' } else { '0' }).collect())
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteRelSys {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = Wire::deserialize(d)?;
        let rel = w
            .rel
            .iter()
            .map(|r| {
                r.chars()
                    .map(|c| match c {
                        '1' => Ok(true),
                        '0' => Ok(false),
                        _ => Err(D::Error::custom(format!("bad relation bit {c:?}"))),
                    })
                    .collect::<std::result::Result<Vec<_>, _>>()
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        FiniteRelSys::unchecked(w.x, w.y, rel).map_err(D::Error::custom)
    }
}

/// Finite stand-ins for the infinite systems, with their validity flags.
#[derive(Clone, Debug, PartialEq)]
pub enum Gallery {
    /// Functions `n → m`, `f ⊏ g` iff `f(i) ≤ g(i)` for every `i ≥ cut`.
    Dom { n: usize, m: usize, cut: usize },
    /// Subsets of `n`: `A ⊏ S` iff `S` splits `A` (both `S ∩ A` and `A \ S` non-empty).
    /// Rows are the subsets with at least two points.
    Reap { n: usize },
    /// As `Reap`, but `S` must cut `A` in ratio within `tol` of `rho`.
    ReapRho { n: usize, rho: Q, tol: Q },
}

#[derive(Clone, Debug, Serialize)]
pub struct GalleryEntry {
    pub name: String,
    /// How the truncation approximates the infinite relation.
    pub note: String,
    pub validity: Validity,
    pub bounding: Option<usize>,
    pub dominating: Option<usize>,
    pub system: FiniteRelSys,
}

fn subset_label(mask: u64, n: usize) -> String {
    format!("{{{}}}", (0..n).filter(|i| mask & (1 << i) != 0).join(","))
}

/// Membership test for a gallery entry, by row and column code.
type Related = Box<dyn Fn(u64, u64) -> bool>;

pub fn gallery(kind: &Gallery) -> Result<GalleryEntry> {
    let (name, note, x, y, rel) = match kind {
        Gallery::Dom { n, m, cut } => {
            let count = (*m as u64)
                .checked_pow(*n as u32)
                .filter(|&c| c as usize <= MAX_SIDE && *m > 0);
            let count = count.ok_or_else(|| {
                Error::InvalidSystem(format!("{m}^{n} functions exceed {MAX_SIDE}"))
            })?;
            let funcs: Vec<Vec<usize>> = (0..count)
                .map(|mut c| {
                    (0..*n)
                        .map(|_| {
                            let d = (c % *m as u64) as usize;
                            c /= *m as u64;
                            d
                        })
                        .collect()
                })
                .collect();
            let names: Vec<String> = funcs
                .iter()
                .map(|f| format!("({})", f.iter().join(",")))
                .collect();
            let rel = funcs
                .iter()
                .map(|f| {
                    funcs
                        .iter()
                        .map(|g| (*cut..*n).all(|i| f[i] <= g[i]))
                        .collect()
                })
                .collect();
            (
                format!("dom(n={n}, m={m}, cut={cut})"),
                format!("eventual domination read as pointwise domination on [{cut}, {n})"),
                names.clone(),
                names,
                rel,
            )
        }
        Gallery::Reap { n } | Gallery::ReapRho { n, .. } => {
            if *n > 6 {
                return Err(Error::InvalidSystem(
                    "subset universes are limited to n <= 6".into(),
                ));
            }
            let all: Vec<u64> = (0..1u64 << n).collect();
            let rows: Vec<u64> = all
                .iter()
                .copied()
                .filter(|a| a.count_ones() >= 2)
                .collect();
            let (name, note, related): (String, String, Related) = match kind {
                Gallery::ReapRho { rho, tol, .. } => {
                    let (rho, tol) = (rho.clone(), tol.clone());
                    (
                        format!("reap_rho(n={n}, rho={}, tol={})", fmt_q(&rho), fmt_q(&tol)),
                        format!(
                            "convergence to rho read as |S∩A|/|A| within {} of rho at the truncation",
                            fmt_q(&tol)
                        ),
                        Box::new(move |a, s| {
                            let r = ratio(&BigUint::from((a & s).count_ones()), &BigUint::from(a.count_ones()));
                            (r - &rho).abs() <= tol
                        }),
                    )
                }
                _ => (
                    format!("reap(n={n})"),
                    "infinite pieces read as non-empty pieces".to_string(),
                    Box::new(|a, s| a & s != 0 && a & !s != 0),
                ),
            };
            let rel = rows
                .iter()
                .map(|&a| all.iter().map(|&s| related(a, s)).collect())
                .collect();
            (
                name,
                note,
                rows.iter().map(|&a| subset_label(a, *n)).collect(),
                all.iter().map(|&s| subset_label(s, *n)).collect(),
                rel,
            )
        }
    };
    let system = FiniteRelSys::unchecked(x, y, rel)?;
    let validity = system.validity();
    let (bounding, dominating) = if validity.ok() {
        (
            Some(bounding_number(&system)?.size),
            Some(dominating_number(&system)?.size),
        )
    } else {
        (None, None)
    };
    Ok(GalleryEntry {
        name,
        note,
        validity,
        bounding,
        dominating,
        system,
    })
}

/// Ratio bound on one segment `r_{2ⁿ} < k ≤ r_{2ⁿ⁺¹}`.
#[derive(Clone, Debug, Serialize)]
pub struct ThinnessRow {
    pub n: u32,
    /// Largest `|ran(x) ∩ R ∩ k| / |R ∩ k|` over the segment.
    #[serde(with = "crate::rational::serde_q")]
    pub max_ratio: Q,
    /// `(N + n) / 2ⁿ`.
    #[serde(with = "crate::rational::serde_q")]
    pub bound: Q,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThinnessReport {
    pub threshold: u32,
    pub rows: Vec<ThinnessRow>,
    pub holds: bool,
    /// Bound holds everywhere and the last segment's ratios are at most 1/4.
    pub zero_split_numerically: bool,
}

/// Checks that `ran(x)` is thin inside `R` when `x` eventually dominates `n ↦ r_{2ⁿ}`.
///
/// For every `n ∈ [threshold, nmax]` and every `k` with `r_{2ⁿ} < k ≤ r_{2ⁿ⁺¹}`
/// the ratio `|ran(x) ∩ R ∩ k| / |R ∩ k|` must be at most `(threshold + n)/2ⁿ`.
pub fn thinness_check(
    r: &OmegaSet,
    x: &[BigUint],
    threshold: u32,
    nmax: u32,
) -> Result<ThinnessReport> {
    r.require_infinite("R")?;
    if threshold > nmax {
        return Err(Error::Precondition("threshold exceeds nmax".into()));
    }
    if x.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("x must be strictly increasing".into()));
    }
    let top = 1usize << (nmax + 1);
    let elems: Vec<BigUint> = (0..=top)
        .map(|j| r.kth_element_u64(j as u64))
        .collect::<Result<_>>()?;
    if x.last().is_none_or(|l| l <= &elems[top]) {
        return Err(Error::Precondition(format!(
            "x must run past r_{top} = {} to settle every segment",
            elems[top]
        )));
    }
    for n in threshold..=nmax + 1 {
        if let Some(xn) = x.get(n as usize) {
            if xn < &elems[1 << n] {
                return Err(Error::Hypothesis(n as u64));
            }
        }
    }
    // Members of ran(x) ∩ R, as indices into R.
    let mut hits = Vec::new();
    for v in x.iter().filter(|v| **v <= elems[top]) {
        if r.contains(v)? {
            hits.push(elems.partition_point(|e| e < v));
        }
    }
    let mut rows = Vec::new();
    for n in threshold..=nmax {
        let bound = q(threshold as i64 + n as i64, 1) * pow2(-(n as i64));
        let mut max_ratio = Q::zero();
        // The ratio only changes right after an element of R: k = r_j + 1.
        for j in (1usize << n)..(1usize << (n + 1)) {
            let a = hits.iter().filter(|&&h| h <= j).count();
            let rj = ratio(&BigUint::from(a), &BigUint::from(j + 1));
            if rj > max_ratio {
                max_ratio = rj;
            }
        }
        rows.push(ThinnessRow {
            n,
            holds: max_ratio <= bound,
            max_ratio,
            bound,
        });
    }
    let holds = rows.iter().all(|r| r.holds);
    let zero = holds && rows.last().is_some_and(|r| r.max_ratio <= q(1, 4));
    Ok(ThinnessReport {
        threshold,
        rows,
        holds,
        zero_split_numerically: zero,
    })
}

/// `x(n) = r_{2ⁿ} + shift` for `n ≤ len`.
pub fn thinness_sequence(r: &OmegaSet, len: u32, shift: u64) -> Result<Vec<BigUint>> {
    (0..=len)
        .map(|n| Ok(r.kth_element(&(BigUint::one() << n as usize))? + shift))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&str]) -> Vec<Vec<bool>> {
        rows.iter()
            .map(|r| r.chars().map(|c| c == '1').collect())
            .collect()
    }

    #[test]
    fn small_examples() {
        let id = FiniteRelSys::from_matrix(m(&["100", "010", "001"])).unwrap();
        assert_eq!(bounding_number(&id).unwrap().size, 2);
        assert_eq!(dominating_number(&id).unwrap().size, 3);
        assert_eq!(dual(&id).unwrap().rel, m(&["011", "101", "110"]));
        assert_eq!(dual(&dual(&id).unwrap()).unwrap(), id);
        let two = FiniteRelSys::from_matrix(m(&["10", "01"])).unwrap();
        assert_eq!(
            (
                bounding_number(&two).unwrap().size,
                dominating_number(&two).unwrap().size
            ),
            (2, 2)
        );
        let cover = FiniteRelSys::from_matrix(m(&["100", "100", "010", "001"])).unwrap();
        assert_eq!(dominating_number(&cover).unwrap().size, 3);
        let almost = FiniteRelSys::from_matrix(m(&["10", "10", "01"])).unwrap();
        assert_eq!(dominating_number(&almost).unwrap().size, 2);
        let le = m(&["11", "01", "00"]);
        assert!(matches!(
            FiniteRelSys::from_matrix(le),
            Err(Error::InvalidSystem(_))
        ));
    }

    #[test]
    fn branch_and_bound_matches_enumeration() {
        // 24 columns: pairs (i, i+1 mod 24) over 24 rows need 12 columns.
        let rel: Vec<Vec<bool>> = (0..24)
            .map(|i| (0..24).map(|j| j == i || (j + 1) % 24 == i).collect())
            .collect();
        let r = FiniteRelSys::from_matrix(rel).unwrap();
        let d = dominating_number(&r).unwrap();
        assert_eq!(d.size, 12);
        assert_eq!(d.witness, (0..24).step_by(2).collect::<Vec<_>>());
    }

    #[test]
    fn tukey_basics() {
        let id = FiniteRelSys::from_matrix(m(&["100", "010", "001"])).unwrap();
        assert!(check_tukey(&id, &id, &TukeyPair::identity(&id))
            .unwrap()
            .holds());
        let p = TukeyPair {
            f: vec![0, 1, 2],
            g: vec![1, 1, 1],
        };
        assert_eq!(
            check_tukey(&id, &id, &p).unwrap(),
            TukeyVerdict::Fails { x0: 0, y1: 0 }
        );
        let pb = pullback(&id, &[0, 0, 1], &[0, 1, 1], 2).unwrap();
        assert_eq!(pb.rel, m(&["10", "10", "01"]));
    }

    #[test]
    fn gallery_flags() {
        let dom = gallery(&Gallery::Dom { n: 2, m: 3, cut: 0 }).unwrap();
        assert!(dom.validity.total && !dom.validity.unbounded);
        assert_eq!(dom.bounding, None);
        let reap = gallery(&Gallery::Reap { n: 4 }).unwrap();
        assert!(reap.validity.ok());
        // A triangle of pairs cannot be 2-coloured.
        assert_eq!(reap.bounding, Some(3));
        let rr = gallery(&Gallery::ReapRho {
            n: 4,
            rho: q(1, 2),
            tol: q(1, 10),
        })
        .unwrap();
        assert!(!rr.validity.total);
    }

    #[test]
    fn wire_round_trip() {
        let r = FiniteRelSys::from_matrix(m(&["10", "01"])).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"X":["x0","x1"],"Y":["y0","y1"],"rel":["10","01"]}"#);
        assert_eq!(serde_json::from_str::<FiniteRelSys>(&s).unwrap(), r);
    }

    #[test]
    fn thinness_powers_of_two() {
        let r = OmegaSet::powers(2).unwrap();
        let x = thinness_sequence(&r, 12, 0).unwrap();
        let rep = thinness_check(&r, &x, 1, 10).unwrap();
        assert!(rep.holds && rep.zero_split_numerically);
        // In segment n the largest ratio is (n + 1)/(2ⁿ + 1).
        for row in &rep.rows {
            assert_eq!(row.max_ratio, q(row.n as i64 + 1, (1 << row.n) + 1));
        }
        let rep0 = thinness_check(&r, &x, 0, 5).unwrap();
        assert!(!rep0.holds);
        let mut bad = x.clone();
        bad[3] = &x[3] - 1u32;
        assert!(matches!(
            thinness_check(&r, &bad, 1, 10),
            Err(Error::Hypothesis(3))
        ));
    }
}
