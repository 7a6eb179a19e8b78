use criterion::{black_box, criterion_group, criterion_main, Criterion};
use freewalk_bench::{f2, geodesic_pair, skewed_stream, uniform_walk, window_potential};
use freewalk_core::spike::spike_sweep;
use freewalk_core::{sh_distance_numeric, simulate_hitting, CylinderFn, GibbsStream, Kernel, MeasureId, Setup};

fn gibbs(c: &mut Criterion) {
    let p = window_potential();
    c.bench_function("gibbs stream, window 3", |b| b.iter(|| GibbsStream::new(black_box(&p)).unwrap()));
}

fn spikes(c: &mut Criterion) {
    let s = skewed_stream();
    let k = Kernel::new(&s, MeasureId::Hausdorff).unwrap();
    let f = CylinderFn::constant(f2(), 1.0);
    c.bench_function("spike sweep to length 6", |b| b.iter(|| spike_sweep(&s, &k, &f, black_box(6), 1.0).unwrap()));
}

fn decomposition(c: &mut Criterion) {
    let mut g = c.benchmark_group("decomposition");
    g.sample_size(10);
    g.bench_function("uniform preset", |b| b.iter(|| Setup::uniform().run().unwrap()));
    g.finish();
}

fn hyperbolic(c: &mut Criterion) {
    let (g1, g2) = geodesic_pair();
    c.bench_function("sh distance quadrature", |b| b.iter(|| sh_distance_numeric(black_box(&g1), &g2, 40.0, 1e-8).unwrap()));
}

fn hitting(c: &mut Criterion) {
    let mu = uniform_walk();
    let mut g = c.benchmark_group("hitting");
    g.sample_size(10);
    g.bench_function("10^4 paths, depth 3", |b| b.iter(|| simulate_hitting(&mu, 10_000, 3, black_box(1)).unwrap()));
    g.finish();
}

criterion_group!(benches, gibbs, spikes, decomposition, hyperbolic, hitting);
criterion_main!(benches);
