use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_bigint::BigUint;
use splitlab_bench::{cycle_cover, family, minimal};
use splitlab_core::rational::{half, q};
use splitlab_core::{
    bounding_number, defeat_bisector, density_report, dominating_number, parse_set, squaring_chain,
    transform_splitter, Checkpoints, Condition, Direction, IntervalPartition, OmegaSet,
    TransformConfig,
};

fn partitions(c: &mut Criterion) {
    c.bench_function("minimal partition, 20 intervals", |b| {
        b.iter(|| IntervalPartition::minimal(black_box(20)))
    });
}

fn densities(c: &mut Criterion) {
    let horizon = BigUint::from(1_000_000u32);
    let stride = Checkpoints::Stride(BigUint::from(10_000u32));
    let s = parse_set("inter(evens,prog(0,3))", None).unwrap();
    c.bench_function("density of a periodic set to 10^6", |b| {
        b.iter(|| density_report(&s, &OmegaSet::full(), &horizon, &stride, &half()).unwrap())
    });
    let bern = parse_set("bern(1/2,7)", None).unwrap();
    c.bench_function("density of a Bernoulli set to 10^6", |b| {
        b.iter(|| density_report(&bern, &OmegaSet::full(), &horizon, &stride, &half()).unwrap())
    });
}

fn adversary(c: &mut Criterion) {
    let p = minimal(9);
    let s = parse_set("bern(1/2,7)", Some(&p)).unwrap();
    c.bench_function("defeat a Bernoulli splitter, 3 rounds", |b| {
        b.iter(|| defeat_bisector(&s, &q(1, 10), &p, &Condition::new(), 3).unwrap())
    });
}

fn transforms(c: &mut Criterion) {
    let fam = family();
    let cfg = TransformConfig::new(8, 200_000, 1);
    let mut g = c.benchmark_group("transform");
    g.sample_size(10);
    g.bench_function("half to 7/16", |b| {
        b.iter(|| transform_splitter(&fam, Direction::HalfToRho, &q(7, 16), &cfg).unwrap())
    });
    g.bench_function("3/4 to half", |b| {
        b.iter(|| transform_splitter(&fam, Direction::RhoToHalf, &q(3, 4), &cfg).unwrap())
    });
    g.finish();
    c.bench_function("squaring chain from 9999/10000", |b| {
        b.iter(|| squaring_chain(black_box(&q(9_999, 10_000))).unwrap())
    });
}

fn relsys(c: &mut Criterion) {
    let r = cycle_cover(24);
    c.bench_function("cardinals of a 24-cycle cover", |b| {
        b.iter(|| {
            (
                bounding_number(&r).unwrap().size,
                dominating_number(&r).unwrap().size,
            )
        })
    });
}

criterion_group!(benches, partitions, densities, adversary, transforms, relsys);
criterion_main!(benches);
