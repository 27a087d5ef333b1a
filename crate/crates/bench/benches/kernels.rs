use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use recurrence_lab::recurrence::{
    compute_grid, katok_cylinder_count, min_return_prefix_profile, partition_return_profile,
};
use recurrence_lab::systems::{Point, SymbolicWord, SystemSpec};

fn sample_words(count: usize, len: usize) -> Vec<SymbolicWord> {
    let sys = SystemSpec::full_shift(vec![0.5, 0.5], 42).unwrap();
    sys.sample_typical(count, len)
        .unwrap()
        .into_iter()
        .map(|p| match p {
            Point::Symbols(w) => SymbolicWord::new(w, 2).unwrap(),
            _ => unreachable!(),
        })
        .collect()
}

fn bench_grid_scan(c: &mut Criterion) {
    let sys = SystemSpec::circle(2, 42).unwrap();
    let orb = sys
        .orbit(&sys.sample_typical(1, 0).unwrap()[0], 100_000)
        .unwrap();
    let n_ladder: Vec<usize> = (6..=18).collect();
    let eps_ladder: Vec<f64> = (2..=8).map(|m| 0.5f64.powi(m)).collect();
    c.bench_function("grid_scan_circle_100k", |b| {
        b.iter(|| compute_grid(black_box(&orb), &n_ladder, &eps_ladder).unwrap())
    });
}

fn bench_partition_profile(c: &mut Criterion) {
    let words = sample_words(1, 1 << 18);
    let n_ladder: Vec<usize> = (8..=16).collect();
    c.bench_function("partition_profile_256k", |b| {
        b.iter(|| partition_return_profile(black_box(&words[0]), &n_ladder).unwrap())
    });
}

fn bench_minimal_period(c: &mut Criterion) {
    let words = sample_words(256, 512);
    c.bench_function("minimal_period_256x512", |b| {
        b.iter_batched(
            || words.clone(),
            |ws| {
                for w in &ws {
                    black_box(min_return_prefix_profile(w, &[w.len()]).unwrap());
                }
            },
            BatchSize::SmallInput,
        )
    });
}

fn bench_katok_count(c: &mut Criterion) {
    let words = sample_words(50_000, 14);
    c.bench_function("katok_count_50k_n12", |b| {
        b.iter(|| katok_cylinder_count(black_box(&words), 12, 0.5).unwrap())
    });
}

criterion_group!(
    kernels,
    bench_grid_scan,
    bench_partition_profile,
    bench_minimal_period,
    bench_katok_count
);
criterion_main!(kernels);
