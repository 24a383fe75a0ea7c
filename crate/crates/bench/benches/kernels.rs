use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use perclab_core::graphs::{ball, rooted_certificate};
use perclab_core::oracle::{exact_event, ExactEvent, FiniteGraph};
use perclab_core::percolation::{radius_thresholds, Explorer, PrfField};
use perclab_core::{GraphFamilySpec, GraphHandle};
use std::hint::black_box;

fn handle(spec: GraphFamilySpec) -> GraphHandle {
    GraphHandle::new(spec).unwrap()
}

fn exploration(c: &mut Criterion) {
    let mut g = c.benchmark_group("explore");
    for (name, spec, p) in [
        ("z2_p0.5", GraphFamilySpec::Hypercubic { d: 2 }, 0.5),
        ("tree3_p0.5", GraphFamilySpec::RegularTree { degree: 3 }, 0.5),
        ("grandparent2_p0.15", GraphFamilySpec::Grandparent { b: 2 }, 0.15),
    ] {
        let h = handle(spec);
        let mut ex = Explorer::new(&h);
        let mut trial = 0u64;
        g.bench_function(name, |b| {
            b.iter(|| {
                trial += 1;
                let f = PrfField { seed: 1, trial };
                black_box(ex.run(h.root(), &f, p, 10_000, false).summary.touched)
            })
        });
    }
    g.finish();
}

fn thresholds(c: &mut Criterion) {
    let h = handle(GraphFamilySpec::Hypercubic { d: 2 });
    let mut trial = 0u64;
    c.bench_function("thresholds/z2_r32", |b| {
        b.iter(|| {
            trial += 1;
            black_box(radius_thresholds(&h, &PrfField { seed: 2, trial }, 32, 1_000_000))
        })
    });
}

fn canon(c: &mut Criterion) {
    let mut g = c.benchmark_group("canon");
    for (name, spec, r) in [
        ("z2_r6", GraphFamilySpec::Hypercubic { d: 2 }, 6),
        ("tree_times_line3_r4", GraphFamilySpec::TreeTimesLine { degree: 3 }, 4),
        ("grandparent2_r3", GraphFamilySpec::Grandparent { b: 2 }, 3),
    ] {
        let h = handle(spec);
        g.bench_function(name, |b| {
            b.iter_batched(|| ball(&h, h.root(), r).unwrap(), |bl| black_box(rooted_certificate(&bl)), BatchSize::SmallInput)
        });
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let fg = FiniteGraph::from_handle(&handle(GraphFamilySpec::Torus { lengths: vec![3, 3] })).unwrap();
    c.bench_function("oracle/t33_tail", |b| b.iter(|| black_box(exact_event(&fg, &ExactEvent::Tail { n: 5 }, 0.4).unwrap().value)));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = exploration, thresholds, canon, oracle
}
criterion_main!(benches);
