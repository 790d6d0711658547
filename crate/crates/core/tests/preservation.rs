use std::sync::Arc;

use num_bigint::BigUint;
use proptest::prelude::*;
use splitlab_core::preservation::{index_set, Branch};
use splitlab_core::rational::{q, Q};
use splitlab_core::{
    interval_of, nwd_escape, parse_set, reap_contract, reap_tukey_map, sq_rel_holds, witness_above,
    witness_below, BitBuf, GoodPair, IntervalPartition, OmegaSet, PartKind, PartRule, RelVerdict,
    SymbolicSet,
};

const H: usize = 6;

fn part() -> Arc<IntervalPartition> {
    Arc::new(IntervalPartition::minimal(10))
}

fn set(s: &str, p: &Arc<IntervalPartition>) -> OmegaSet {
    parse_set(s, Some(p)).unwrap()
}

fn bits(s: &OmegaSet, p: &IntervalPartition, horizon_k: usize) -> BitBuf {
    let end: u64 = p.boundary(horizon_k).try_into().unwrap();
    s.materialize_prefix(end).unwrap().bits
}

/// Direct evaluation of the relation on materialized bits.
fn brute_related(x: &OmegaSet, pair: &GoodPair, n: usize, horizon_k: usize) -> bool {
    let p = pair.partition();
    let xb = bits(x, p, horizon_k);
    let eb = bits(&pair.e.clone().into_set(), p, horizon_k);
    let up = q(1, 2) + &pair.epsilon;
    (n..horizon_k).filter(|&k| pair.in_h(k).unwrap()).all(|k| {
        let lo: usize = p.boundary(k).try_into().unwrap();
        let hi: usize = p.boundary(k + 1).try_into().unwrap();
        let both = (lo..hi).filter(|&i| xb.get(i) && eb.get(i)).count() as i64;
        let xk = (lo..hi).filter(|&i| xb.get(i)).count() as i64;
        Q::from_integer(both.into()) < &up * Q::from_integer((xk + lo as i64).into())
    })
}

const BATTERY: [&str; 10] = [
    "omega",
    "evens",
    "odds",
    "prog(0,3)",
    "sym(singletons)",
    "sym(first(1/2))",
    "sym(last(1/4))",
    "sym(alt(full,empty))",
    "bern(1/2,3)",
    "compl(sym(singletons))",
];

#[test]
fn battery_witnesses_hold_both_ways() {
    let p = part();
    let eps = q(1, 10);
    let mut branches = Vec::new();
    for name in BATTERY {
        let x = set(name, &p);
        let w = witness_above(&x, &p, &eps, H).unwrap();
        w.pair.validate(H).unwrap();
        assert!(sq_rel_holds(&x, &w.pair, w.n, H).unwrap().holds(), "{name}");
        assert!(brute_related(&x, &w.pair, w.n, H), "{name}");
        branches.push(w.branch);
        let below = witness_below(&w.pair, H).unwrap();
        assert!(
            sq_rel_holds(&below.x, &w.pair, 1, H).unwrap().holds(),
            "{name} below"
        );
        assert!(brute_related(&below.x, &w.pair, 1, H), "{name} below");
    }
    assert!(branches.contains(&Branch::Thin));
    assert!(branches.contains(&Branch::Thick));
}

#[test]
fn escape_breaks_the_relation_above_m() {
    let p = part();
    let e = SymbolicSet::new(p.clone(), PartRule::FirstFraction(q(5, 16)));
    let pair = GoodPair::new(index_set([]), e, q(1, 10)).unwrap();
    let mut checked = 0;
    for name in ["sym(singletons)", "sym(last(1/2))", "prog(1,7)"] {
        let x = set(name, &p);
        if !sq_rel_holds(&x, &pair, 1, 8).unwrap().holds() {
            continue;
        }
        checked += 1;
        for m in [0u64, 40, 400, 6000] {
            let esc = nwd_escape(&x, &pair, 1, &BigUint::from(m), 8).unwrap();
            assert!(p.boundary(esc.index) >= BigUint::from(m));
            let v = sq_rel_holds(&esc.y, &pair, 1, 8).unwrap();
            assert!(!v.holds(), "{name}, m = {m}");
            assert_eq!(
                esc.y.materialize_prefix(m).unwrap(),
                x.materialize_prefix(m).unwrap()
            );
        }
    }
    assert!(checked >= 2);
}

#[test]
fn reap_contract_on_a_random_splitter() {
    let p = part();
    let horizon_k = interval_of(&p, &BigUint::from(1_000_000u32));
    assert_eq!(horizon_k, 6);
    let s = set("bern(1/2,5)", &p);
    let map = reap_tukey_map(&s, &p, &q(1, 10), horizon_k).unwrap();
    for name in [
        "evens",
        "odds",
        "prog(0,3)",
        "sym(first(1/2))",
        "sym(alt(full,singletons))",
    ] {
        let x = set(name, &p);
        let r = reap_contract(&map, &s, &x, horizon_k).unwrap();
        assert!(r.k0.is_some(), "{name}: {r:?}");
        assert!(r.chain_ok, "{name}: {r:?}");
        assert!(r.related, "{name}: {r:?}");
    }
}

fn arb_rule() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("full".to_string()),
        Just("singletons".to_string()),
        (1u32..8).prop_map(|a| format!("first({a}/8)")),
        (1u32..8).prop_map(|a| format!("last({a}/8)")),
        Just("alt(full,singletons)".to_string()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Membership is decided by finite prefixes: a failure survives any change beyond
    /// the failing interval, and a success at `n` persists at `n + 1`.
    #[test]
    fn relation_is_closed(rule in arb_rule(), tail in arb_rule(), h in proptest::collection::vec(any::<bool>(), H), e_frac in 1u32..8, n in 0usize..3) {
        let p = part();
        let mut e = SymbolicSet::new(p.clone(), PartRule::FirstFraction(q(e_frac.into(), 8)));
        for (k, &inside) in h.iter().enumerate() {
            if !inside {
                e = e.with_override(k, PartKind::Full).unwrap();
            }
        }
        let pair = GoodPair::new(index_set(h), e, q(1, 10)).unwrap();
        let x = set(&format!("sym({rule})"), &p);
        let v = sq_rel_holds(&x, &pair, n, H).unwrap();
        prop_assert_eq!(v.holds(), brute_related(&x, &pair, n, H));
        match v {
            RelVerdict::Fails { index, .. } => {
                let b = p.boundary(index + 1);
                let y = set(&format!("union(inter(sym({rule}),range(0,{b})),diff(sym({tail}),range(0,{b})))"), &p);
                let w = sq_rel_holds(&y, &pair, n, H).unwrap();
                let same = matches!(w, RelVerdict::Fails { index: j, .. } if j == index);
                prop_assert!(same);
            }
            RelVerdict::Holds => {
                prop_assert!(sq_rel_holds(&x, &pair, n + 1, H).unwrap().holds());
            }
        }
    }
}
