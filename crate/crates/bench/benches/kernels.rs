use criterion::{black_box, criterion_group, criterion_main, Criterion};
use nast::artin_hasse::shafarevich_coeffs;
use nast::lift_solver::op_r;
use nast::nilpotent_lie::d_generators;
use nast::ramification::{mixed_break, search_break, F0Table};
use nast::{FiltrationContext, LieAlgebra, LieSeries, LieVec, SElementPack};
use nast_bench::{element, ring, rng, series, unit_series, witt};

fn witt_arith(c: &mut Criterion) {
    let r = ring(3, 4, 4);
    let mut g = rng(1);
    let (a, b) = (witt(&r, &mut g), witt(&r, &mut g));
    c.bench_function("witt mul p=3 M=4 N0=4", |bn| bn.iter(|| r.mul(black_box(a), black_box(b))));
    c.bench_function("witt frob p=3 M=4 N0=4", |bn| bn.iter(|| r.frob(black_box(a))));
}

fn series_arith(c: &mut Criterion) {
    let r = ring(3, 2, 2);
    let mut g = rng(2);
    let f = series(&r, &mut g, 0, 200);
    let u = unit_series(&r, &mut g, 200);
    c.bench_function("laurent mul prec 200", |bn| bn.iter(|| black_box(&f).mul(black_box(&u))));
    c.bench_function("laurent inverse prec 200", |bn| bn.iter(|| black_box(&u).inverse().unwrap()));
}

fn group_law(c: &mut Criterion) {
    let r = ring(5, 2, 1);
    let alg = LieAlgebra::free(5, 4, 3).unwrap();
    let mut g = rng(3);
    let (x, y) = (element(&alg, &r, &mut g), element(&alg, &r, &mut g));
    c.bench_function("ch compose p=5 class 4 three generators", |bn| bn.iter(|| alg.ch_compose(r.as_ref(), black_box(&x), black_box(&y))));
}

fn exponential(c: &mut Criterion) {
    let r = ring(3, 2, 1);
    c.bench_function("shafarevich E to degree 50 p=3 M=2", |bn| bn.iter(|| shafarevich_coeffs(&r, r.one(), 50).unwrap()));
    c.bench_function("S-element pack p=3 M=2 prec 200", |bn| bn.iter(|| SElementPack::standard(&r, 200).unwrap()));
}

fn splitting(c: &mut Criterion) {
    let r = ring(3, 2, 2);
    let alg = LieAlgebra::new(3, 2, 2, d_generators(3, 2, 4, |_| 1), None).unwrap();
    let mut g = rng(4);
    let mut b: LieSeries = LieVec::zero();
    for h in 0..alg.dim() {
        b.terms.insert(h, series(&r, &mut g, -30, 20));
    }
    c.bench_function("R operator p=3 M=2 N0=2", |bn| bn.iter(|| op_r(&alg, &r, black_box(&b)).unwrap()));
}

fn breaks(c: &mut Criterion) {
    let r = ring(3, 1, 1);
    let ctx = FiltrationContext::standard(&r, 2, 3).unwrap();
    c.bench_function("F0 table p=3 M=1 N=2", |bn| bn.iter(|| F0Table::build(&ctx.d_alg, &r, 2)));
    c.bench_function("break search p=3 M=1 s=2", |bn| bn.iter(|| search_break(&ctx, 2, 4).unwrap()));
    c.bench_function("mixed break grid p=7 M=3", |bn| {
        bn.iter(|| (1..7).all(|s| mixed_break(7, 3, 294, s).unwrap().agree))
    });
}

criterion_group!(benches, witt_arith, series_arith, group_law, exponential, splitting, breaks);
criterion_main!(benches);
