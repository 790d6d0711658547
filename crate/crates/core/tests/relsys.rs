use proptest::prelude::*;
use splitlab_core::rational::q;
use splitlab_core::{
    bounding_number, check_tukey, compose, dominating_number, dual, gallery, pullback,
    FiniteRelSys, Gallery, TukeyPair,
};

fn valid(rel: &[Vec<bool>]) -> bool {
    let cols = rel[0].len();
    rel.iter().all(|r| r.iter().any(|&b| b)) && (0..cols).all(|j| rel.iter().any(|r| !r[j]))
}

fn arb_system(max: usize) -> impl Strategy<Value = FiniteRelSys> {
    (2..=max, 2..=max)
        .prop_flat_map(|(n, m)| {
            proptest::collection::vec(proptest::collection::vec(any::<bool>(), m), n)
        })
        .prop_filter("both conditions", |rel| valid(rel))
        .prop_map(|rel| FiniteRelSys::from_matrix(rel).unwrap())
}

/// Least unbounded subset size by scanning every mask.
fn brute_bounding(r: &FiniteRelSys) -> usize {
    let (n, m) = (r.x.len(), r.y.len());
    (1u32..1 << n)
        .filter(|u| (0..m).all(|j| (0..n).any(|i| u & (1 << i) != 0 && !r.rel[i][j])))
        .map(u32::count_ones)
        .min()
        .unwrap() as usize
}

/// Least dominating subset size by scanning every mask.
fn brute_dominating(r: &FiniteRelSys) -> usize {
    let (n, m) = (r.x.len(), r.y.len());
    (1u32..1 << m)
        .filter(|d| (0..n).all(|i| (0..m).any(|j| d & (1 << j) != 0 && r.rel[i][j])))
        .map(u32::count_ones)
        .min()
        .unwrap() as usize
}

#[test]
fn gallery_values() {
    let reap = gallery(&Gallery::Reap { n: 4 }).unwrap();
    assert!(reap.validity.ok());
    assert_eq!(reap.bounding, Some(brute_bounding(&reap.system)));
    assert_eq!(reap.dominating, Some(brute_dominating(&reap.system)));
    // A finite domination order has a top function, so it is never unbounded.
    let dom = gallery(&Gallery::Dom { n: 3, m: 3, cut: 1 }).unwrap();
    assert!(dom.validity.total && !dom.validity.unbounded);
    assert_eq!(dom.bounding, None);
    let rr = gallery(&Gallery::ReapRho {
        n: 4,
        rho: q(1, 2),
        tol: q(1, 6),
    })
    .unwrap();
    assert!(rr.validity.ok());
    assert_eq!(rr.bounding, Some(brute_bounding(&rr.system)));
    assert_eq!(rr.dominating, Some(brute_dominating(&rr.system)));
}

#[test]
fn wide_cover_uses_the_search() {
    // Each x is below exactly two consecutive ys on a cycle of 24.
    let n = 24;
    let rel: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| j == i || j == (i + 1) % n).collect())
        .collect();
    let r = FiniteRelSys::from_matrix(rel).unwrap();
    let d = dominating_number(&r).unwrap();
    assert_eq!(d.size, 12);
    assert_eq!(d.witness, (0..n).step_by(2).collect::<Vec<_>>());
    assert_eq!(bounding_number(&r).unwrap().size, 2);
}

#[test]
fn wire_format_round_trips() {
    let r = FiniteRelSys::from_matrix(vec![vec![true, false], vec![false, true]]).unwrap();
    let s = serde_json::to_string(&r).unwrap();
    assert_eq!(s, r#"{"X":["x0","x1"],"Y":["y0","y1"],"rel":["10","01"]}"#);
    let back: FiniteRelSys = serde_json::from_str(&s).unwrap();
    assert_eq!(back, r);
    let top: FiniteRelSys = serde_json::from_str(r#"{"X":["a"],"Y":["b"],"rel":["1"]}"#).unwrap();
    assert!(!top.validity().unbounded);
    assert!(bounding_number(&top).is_err());
    assert!(
        serde_json::from_str::<FiniteRelSys>(r#"{"X":["a"],"Y":["b","c"],"rel":["1"]}"#).is_err()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn duality_swaps_the_numbers(r in arb_system(9)) {
        let d = dual(&r).unwrap();
        let (b, dd) = (bounding_number(&r).unwrap().size, dominating_number(&r).unwrap().size);
        prop_assert_eq!(b, brute_bounding(&r));
        prop_assert_eq!(dd, brute_dominating(&r));
        prop_assert_eq!(bounding_number(&d).unwrap().size, dd);
        prop_assert_eq!(dominating_number(&d).unwrap().size, b);
        prop_assert_eq!(dual(&d).unwrap(), r);
    }
}

fn arb_maps(
    r1: FiniteRelSys,
    max: usize,
) -> impl Strategy<Value = (FiniteRelSys, Vec<usize>, Vec<usize>, usize)> {
    let (nx, ny) = (r1.x.len(), r1.y.len());
    (2..=max, 2..=max).prop_flat_map(move |(x0, y0)| {
        (
            Just(r1.clone()),
            proptest::collection::vec(0..nx, x0),
            proptest::collection::vec(0..y0, ny),
            Just(y0),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn pullback_is_least_and_monotone(
        (r1, f, g, y0) in arb_system(7).prop_flat_map(|r| arb_maps(r, 7)),
        extra in proptest::collection::vec((0usize..7, 0usize..7), 0..6),
    ) {
        let p = pullback(&r1, &f, &g, y0).unwrap();
        let pair = TukeyPair { f: f.clone(), g: g.clone() };
        prop_assert!(check_tukey(&p, &r1, &pair).unwrap().holds());
        // Adding pairs to the pulled-back relation keeps the connection.
        let mut bigger = p.rel.clone();
        for (i, j) in extra {
            if i < f.len() && j < y0 {
                bigger[i][j] = true;
            }
        }
        let bigger = FiniteRelSys::unchecked(p.x.clone(), p.y.clone(), bigger).unwrap();
        prop_assert!(check_tukey(&bigger, &r1, &pair).unwrap().holds());
        // Removing any pair of the pullback breaks it.
        for i in 0..f.len() {
            for j in 0..y0 {
                if p.rel[i][j] {
                    let mut smaller = p.rel.clone();
                    smaller[i][j] = false;
                    let smaller = FiniteRelSys::unchecked(p.x.clone(), p.y.clone(), smaller).unwrap();
                    prop_assert!(!check_tukey(&smaller, &r1, &pair).unwrap().holds());
                }
            }
        }
        // Connections move the cardinal characteristics in opposite directions.
        if p.validity().ok() {
            prop_assert!(dominating_number(&p).unwrap().size <= dominating_number(&r1).unwrap().size);
            prop_assert!(bounding_number(&p).unwrap().size >= bounding_number(&r1).unwrap().size);
        }
    }

    #[test]
    fn connections_compose_and_reverse(
        (r2, f12, g12, y1) in arb_system(6).prop_flat_map(|r| arb_maps(r, 6)),
        seeds in proptest::collection::vec(any::<usize>(), 14),
    ) {
        let r1 = pullback(&r2, &f12, &g12, y1).unwrap();
        let x0 = 2 + seeds[0] % 5;
        let y0 = 2 + seeds[1] % 5;
        let f01: Vec<usize> = (0..x0).map(|i| seeds[2 + i % 12] % r1.x.len()).collect();
        let g01: Vec<usize> = (0..r1.y.len()).map(|j| seeds[(3 + j) % 14] % y0).collect();
        let r0 = pullback(&r1, &f01, &g01, y0).unwrap();
        let p01 = TukeyPair { f: f01, g: g01 };
        let p12 = TukeyPair { f: f12, g: g12 };
        prop_assert!(check_tukey(&r0, &r1, &p01).unwrap().holds());
        prop_assert!(check_tukey(&r1, &r2, &p12).unwrap().holds());
        let p02 = compose(&p01, &p12);
        prop_assert!(check_tukey(&r0, &r2, &p02).unwrap().holds());
        // A connection between two systems is one between their duals, reversed.
        for (a, b, p) in [(&r0, &r1, &p01), (&r1, &r2, &p12), (&r0, &r2, &p02)] {
            if !(a.validity().ok() && b.validity().ok()) {
                continue;
            }
            let forward = check_tukey(a, b, p).unwrap().holds();
            let back = check_tukey(&dual(b).unwrap(), &dual(a).unwrap(), &p.reversed()).unwrap().holds();
            prop_assert_eq!(forward, back);
        }
    }

    #[test]
    fn reversal_agrees_on_arbitrary_maps(
        r0 in arb_system(6),
        r1 in arb_system(6),
        seeds in proptest::collection::vec(any::<usize>(), 12),
    ) {
        let f: Vec<usize> = (0..r0.x.len()).map(|i| seeds[i % 12] % r1.x.len()).collect();
        let g: Vec<usize> = (0..r1.y.len()).map(|j| seeds[(j + 6) % 12] % r0.y.len()).collect();
        let p = TukeyPair { f, g };
        let forward = check_tukey(&r0, &r1, &p).unwrap().holds();
        let back = check_tukey(&dual(&r1).unwrap(), &dual(&r0).unwrap(), &p.reversed()).unwrap().holds();
        prop_assert_eq!(forward, back);
    }
}
