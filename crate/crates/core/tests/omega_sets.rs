use num_bigint::BigUint;
use proptest::prelude::*;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splitlab_core::rational::q;
use splitlab_core::{combine, BitBuf, OmegaSet, Prefix, SetOp};

/// Reference descriptors with membership decided point by point.
#[derive(Clone, Debug)]
enum Desc {
    Prog(u64, u64),
    Bits(Vec<bool>, Vec<bool>),
    Window(u64, Vec<bool>),
    Range(u64, u64),
    Pow(u64),
    Tower(u64),
    Osc(u64),
    Bern(u64),
    Alt(Box<Desc>, u8),
    Inter(Box<Desc>, Box<Desc>),
    Union(Box<Desc>, Box<Desc>),
    Diff(Box<Desc>, Box<Desc>),
    Compl(Box<Desc>),
}

fn bern_member(seed: u64, k: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(k as u128);
    (rng.next_u32() as u64) < (1u64 << 31)
}

impl Desc {
    /// Membership of every `k < n`, evaluated bottom-up.
    fn eval(&self, n: u64) -> Vec<bool> {
        let n = n as usize;
        match self {
            Desc::Prog(a, d) => (0..n as u64).map(|k| k >= *a && (k - a) % d == 0).collect(),
            Desc::Bits(p, t) => (0..n)
                .map(|k| {
                    if k < p.len() {
                        p[k]
                    } else {
                        t[(k - p.len()) % t.len()]
                    }
                })
                .collect(),
            Desc::Window(s, b) => (0..n as u64)
                .map(|k| k >= *s && ((k - s) as usize) < b.len() && b[(k - s) as usize])
                .collect(),
            Desc::Range(a, b) => (0..n as u64).map(|k| *a <= k && k < *b).collect(),
            Desc::Pow(b) => {
                let mut v = vec![false; n];
                let mut p = 1u64;
                while (p as usize) < n {
                    v[p as usize] = true;
                    p *= b;
                }
                v
            }
            Desc::Tower(b) => {
                let mut v = vec![false; n];
                let mut p = *b;
                while (p as usize) < n {
                    v[p as usize] = true;
                    p = p.saturating_mul(p);
                }
                v
            }
            Desc::Osc(b) => (0..n as u64)
                .map(|k| {
                    if k == 0 {
                        return false;
                    }
                    let (mut e, mut p) = (0u32, 1u64);
                    while p * b <= k {
                        p *= b;
                        e += 1;
                    }
                    e % 2 == 0
                })
                .collect(),
            Desc::Bern(seed) => (0..n as u64).map(|k| bern_member(*seed, k)).collect(),
            Desc::Alt(inner, phase) => {
                let mut seen = 0usize;
                inner
                    .eval(n as u64)
                    .into_iter()
                    .map(|m| {
                        let keep = m && seen % 2 == *phase as usize;
                        seen += m as usize;
                        keep
                    })
                    .collect()
            }
            Desc::Inter(a, b) => zip(a.eval(n as u64), b.eval(n as u64), |x, y| x && y),
            Desc::Union(a, b) => zip(a.eval(n as u64), b.eval(n as u64), |x, y| x || y),
            Desc::Diff(a, b) => zip(a.eval(n as u64), b.eval(n as u64), |x, y| x && !y),
            Desc::Compl(a) => a.eval(n as u64).into_iter().map(|x| !x).collect(),
        }
    }

    fn build(&self) -> OmegaSet {
        match self {
            Desc::Prog(a, d) => OmegaSet::progression(*a, *d).unwrap(),
            Desc::Bits(p, t) => {
                OmegaSet::explicit(BitBuf::from_bools(p.clone()), BitBuf::from_bools(t.clone()))
                    .unwrap()
            }
            Desc::Window(s, b) => OmegaSet::window((*s).into(), BitBuf::from_bools(b.clone())),
            Desc::Range(a, b) => OmegaSet::range((*a).into(), (*b).into()),
            Desc::Pow(b) => OmegaSet::powers(*b).unwrap(),
            Desc::Tower(b) => OmegaSet::tower(*b).unwrap(),
            Desc::Osc(b) => OmegaSet::oscillating(*b).unwrap(),
            Desc::Bern(seed) => OmegaSet::bernoulli(q(1, 2), *seed).unwrap(),
            Desc::Alt(a, ph) => OmegaSet::alternate(&a.build(), *ph),
            Desc::Inter(a, b) => a.build().intersect(&b.build()),
            Desc::Union(a, b) => a.build().union(&b.build()),
            Desc::Diff(a, b) => a.build().difference(&b.build()),
            Desc::Compl(a) => a.build().complement(),
        }
    }
}

fn leaf() -> impl Strategy<Value = Desc> {
    prop_oneof![
        (0u64..20, 1u64..12).prop_map(|(a, d)| Desc::Prog(a, d)),
        (
            prop::collection::vec(any::<bool>(), 0..40),
            prop::collection::vec(any::<bool>(), 1..9)
        )
            .prop_map(|(p, t)| Desc::Bits(p, t)),
        (0u64..200, prop::collection::vec(any::<bool>(), 0..80))
            .prop_map(|(s, b)| Desc::Window(s, b)),
        (0u64..300, 0u64..300).prop_map(|(a, b)| Desc::Range(a, b)),
        (2u64..5).prop_map(Desc::Pow),
        (2u64..4).prop_map(Desc::Tower),
        (2u64..4).prop_map(Desc::Osc),
        (0u64..1000).prop_map(Desc::Bern),
    ]
}

fn desc() -> impl Strategy<Value = Desc> {
    leaf().prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), 0u8..2).prop_map(|(a, p)| Desc::Alt(Box::new(a), p)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Desc::Inter(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Desc::Union(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Desc::Diff(Box::new(a), Box::new(b))),
            inner.prop_map(|a| Desc::Compl(Box::new(a))),
        ]
    })
}

fn zip(a: Vec<bool>, b: Vec<bool>, f: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

fn members(p: &Prefix) -> Vec<u64> {
    p.bits.iter_ones().map(|i| i as u64).collect()
}

const N: u64 = 600;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn prefix_matches_pointwise_oracle(d in desc()) {
        let s = d.build();
        let p = s.materialize_prefix(N).unwrap();
        for (k, m) in d.eval(N).into_iter().enumerate() {
            prop_assert_eq!(p.contains(k as u64), m, "k = {} in {}", k, s);
        }
        prop_assert_eq!(s.count_below_u64(N).unwrap(), p.count());
    }

    #[test]
    fn range_counts_agree_with_prefix(d in desc(), a in 0u64..N, b in 0u64..N) {
        let (lo, hi) = (a.min(b), a.max(b));
        let s = d.build();
        let p = s.materialize_prefix(N).unwrap();
        let c = s.count_range(&lo.into(), &hi.into()).unwrap();
        prop_assert_eq!(c, BigUint::from(p.count_below(hi) - p.count_below(lo)));
    }

    #[test]
    fn counts_are_monotone_and_lipschitz(d in desc(), a in 0u64..N, b in 0u64..N) {
        let (n, m) = (a.min(b), a.max(b));
        let s = d.build();
        let cn = s.count_below_u64(n).unwrap();
        let cm = s.count_below_u64(m).unwrap();
        prop_assert!(cn <= cm && cm <= cn + (m - n));
    }

    #[test]
    fn de_morgan(a in desc(), b in desc()) {
        let (x, y) = (a.build(), b.build());
        let lhs = x.union(&y).complement().materialize_prefix(N).unwrap();
        let rhs = x.complement().intersect(&y.complement()).materialize_prefix(N).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn kth_element_is_next_element(d in desc(), n in 0u64..N) {
        let s = d.build();
        if s.is_finite() == Some(true) {
            return Ok(());
        }
        let c = s.count_below_u64(n).unwrap();
        if let Ok(x) = s.kth_element_u64(c) {
            prop_assert!(x >= BigUint::from(n));
            prop_assert!(s.contains(&x).unwrap());
            prop_assert_eq!(s.count_below(&x).unwrap(), BigUint::from(c));
        }
    }

    #[test]
    fn finite_flag_is_sound(d in desc()) {
        let s = d.build();
        if s.is_finite() == Some(true) {
            // Every finite leaf lives below 400, so nothing may appear far out.
            let far = BigUint::from(1u64 << 40);
            prop_assert_eq!(s.count_range(&far, &(&far + 5000u32)).unwrap(), BigUint::from(0u32));
        }
        if s.is_finite() == Some(false) {
            prop_assert!(s.count_below_u64(1 << 20).unwrap() > 0);
        }
    }
}

#[test]
fn progression_examples() {
    let evens = OmegaSet::evens();
    assert_eq!(
        members(&evens.materialize_prefix(10).unwrap()),
        vec![0, 2, 4, 6, 8]
    );
    let odds = combine(SetOp::Complement, &evens, None).unwrap();
    assert_eq!(
        members(&odds.materialize_prefix(10).unwrap()),
        vec![1, 3, 5, 7, 9]
    );
    assert_eq!(evens.count_below_u64(10).unwrap(), 5);
    let six = combine(
        SetOp::Intersect,
        &evens,
        Some(&OmegaSet::multiples(3).unwrap()),
    )
    .unwrap();
    assert_eq!(six.count_below_u64(36).unwrap(), 6);
    assert_eq!(six.count_below_u64(0).unwrap(), 0);
    assert_eq!(evens.kth_element_u64(3).unwrap(), BigUint::from(6u32));
}

#[test]
fn combinations_flag_finiteness() {
    let (e, o) = (OmegaSet::evens(), OmegaSet::odds());
    let none = combine(SetOp::Intersect, &e, Some(&o)).unwrap();
    assert_eq!(none.is_finite(), Some(true));
    assert_eq!(none.count_below_u64(1000).unwrap(), 0);
    let all = combine(SetOp::Union, &e, Some(&o)).unwrap();
    assert_eq!(all.count_below_u64(1000).unwrap(), 1000);
    assert_eq!(all.is_cofinite(), Some(true));
    let diff = combine(SetOp::Difference, &OmegaSet::full(), Some(&e)).unwrap();
    assert_eq!(
        diff.materialize_prefix(100).unwrap(),
        o.materialize_prefix(100).unwrap()
    );
    assert!(combine(SetOp::Union, &e, None).is_err());
    assert!(combine(SetOp::Complement, &e, Some(&o)).is_err());
    assert!(none.require_infinite("S").is_err());
    let err = none.kth_element_u64(0).unwrap_err();
    assert!(
        matches!(err, splitlab_core::Error::IndexOutOfRange { .. }),
        "{err}"
    );
}

#[test]
fn powers_and_towers() {
    let pow2 = OmegaSet::powers(2).unwrap();
    assert_eq!(pow2.kth_element_u64(5).unwrap(), BigUint::from(32u32));
    let far = BigUint::from(1u32) << 1000usize;
    assert_eq!(pow2.count_below(&far).unwrap(), BigUint::from(1000u32));
    let tower = OmegaSet::tower(2).unwrap();
    assert_eq!(
        tower
            .count_below(&(BigUint::from(1u32) << 32usize))
            .unwrap(),
        BigUint::from(5u32)
    );
    let both = tower.intersect(&pow2);
    assert_eq!(both.kth_element_u64(3).unwrap(), BigUint::from(256u32));
}

#[test]
fn bernoulli_regression_values() {
    let b = OmegaSet::bernoulli(q(1, 2), 7).unwrap();
    let p = b.materialize_prefix(1_000_000).unwrap();
    let c = p.count();
    assert!((490_000..=510_000).contains(&c));
    assert_eq!(c, 499_387);
    assert_eq!(b.kth_element_u64(0).unwrap(), BigUint::from(0u32));
    let again = OmegaSet::bernoulli(q(1, 2), 7)
        .unwrap()
        .materialize_prefix(1_000_000)
        .unwrap();
    assert_eq!(p, again);
}

#[test]
fn bernoulli_counts_far_out_without_a_prefix() {
    let b = OmegaSet::bernoulli(q(1, 2), 3).unwrap();
    let lo = BigUint::from(1u64 << 50);
    let hi = &lo + 4096u32;
    let direct = (0..4096u64)
        .filter(|&i| bern_member(3, (1u64 << 50) + i))
        .count();
    assert_eq!(b.count_range(&lo, &hi).unwrap(), BigUint::from(direct));
    let huge = BigUint::from(1u64 << 40);
    assert!(matches!(
        b.count_below(&huge),
        Err(splitlab_core::Error::HorizonOverflow { .. })
    ));
    // Intersections with small windows stay countable at any position.
    let window = OmegaSet::range(lo.clone(), hi.clone());
    assert_eq!(
        b.intersect(&window).count_below(&(&lo << 1usize)).unwrap(),
        BigUint::from(direct)
    );
}

#[test]
fn prefix_serializes_as_runs() {
    let p = OmegaSet::progression(1u32, 3)
        .unwrap()
        .materialize_prefix(8)
        .unwrap();
    let json = serde_json::to_string(&p).unwrap();
    assert_eq!(json, r#"{"horizon":8,"first":false,"runs":[1,1,2,1,2,1]}"#);
    let back: Prefix = serde_json::from_str(&json).unwrap();
    assert_eq!(back, p);
}

#[test]
fn periodic_combinations_stay_symbolic_at_scale() {
    let s = OmegaSet::multiples(6)
        .unwrap()
        .union(&OmegaSet::multiples(10).unwrap());
    let n = BigUint::from(1u32) << 200usize;
    let direct = (&n - 1u32) / 6u32 + (&n - 1u32) / 10u32 - (&n - 1u32) / 30u32 + 1u32;
    assert_eq!(s.count_below(&n).unwrap(), direct);
    let big_period = OmegaSet::multiples(65521)
        .unwrap()
        .intersect(&OmegaSet::multiples(65519).unwrap());
    assert!(matches!(
        big_period.count_below(&n),
        Err(splitlab_core::Error::PeriodTooLarge(_))
    ));
    assert_eq!(big_period.count_below_u64(1 << 20).unwrap(), 1);
}
