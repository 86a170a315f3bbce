use criterion::{criterion_group, criterion_main, Criterion};

use perclab::electrical::{max_pairwise_resistance, MaxMode};
use perclab::gff::{build_gff, estimate_max};
use perclab::walks::simulate_cover;
use perclab::{largest_cluster, par, sample_configuration, Cluster, LatticeSpec};

fn cluster(n: usize) -> Cluster {
    largest_cluster(&sample_configuration(LatticeSpec::new(2, n, 0.7, 1).unwrap()).unwrap())
}

fn both<F: Fn() + Sync>(c: &mut Criterion, group: &str, f: F) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(&f));
    g.bench_function("sequential", |b| b.iter(|| par::sequential(&f)));
    g.finish();
}

fn benches(c: &mut Criterion) {
    let spec = LatticeSpec::new(2, 256, 0.7, 3).unwrap();
    both(c, "sample_n256", || {
        sample_configuration(spec).unwrap();
    });

    let c32 = cluster(32);
    let mode = MaxMode::Candidate { extra: Vec::new(), seed: 5 };
    both(c, "max_resistance_n32", || {
        max_pairwise_resistance(c32.network(), &mode).unwrap();
    });

    let model = build_gff(c32.network(), 0).unwrap();
    both(c, "gff_max_n32", || {
        estimate_max(&model, 200, 7).unwrap();
    });

    let c16 = cluster(16);
    both(c, "cover_n16", || {
        simulate_cover(c16.network(), 0, 16, 9).unwrap();
    });
}

criterion_group!(parallel_vs_sequential, benches);
criterion_main!(parallel_vs_sequential);
