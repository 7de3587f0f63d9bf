//! Rayon pool versus a single worker on the enumeration-heavy paths.
//!
//! Build with `--no-default-features` to time the plain sequential fallback instead; both
//! groups then measure the same code.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use smc_core::affine::{sample_map, MessageLayout};
use smc_core::capacity::{region_sample, RegionModel};
use smc_core::codec::{sample_codebook, SmcCode};
use smc_core::exec::with_threads;
use smc_core::exponents::{Construction, IndexSet};
use smc_core::oracle::{ensemble_bound_check, exact_leakage, AffineSpec, EnsembleSpec};
use smc_core::probability::{ChainSpec, Channel, Distribution};
use smc_core::renyi::JointSource;

const CAP: u64 = 1 << 26;

fn leakage_code() -> (SmcCode, JointSource) {
    let chain = ChainSpec::wiretap(Distribution::uniform(2), Channel::bsc(0.1), Channel::bsc(0.3)).unwrap();
    let layout = MessageLayout::new(2, 0, vec![2, 2], 2, 2).unwrap();
    let book = sample_codebook(&chain, &layout, 12, 1, Some(CAP)).unwrap();
    let code = SmcCode::new(
        layout,
        book,
        sample_map(2, 4, 1).unwrap(),
        Construction::First,
        chain,
        None,
    )
    .unwrap();
    (code, JointSource::uniform(vec![1, 4, 4]).unwrap())
}

fn affine_spec() -> EnsembleSpec {
    let p_a = Distribution::from_weights((1..=8).map(f64::from).collect()).unwrap();
    let rows: Vec<Vec<f64>> = (0..8)
        .map(|x| (0..8).map(|y| if x == y { 0.65 } else { 0.05 }).collect())
        .collect();
    EnsembleSpec::Affine(AffineSpec {
        q: 2,
        dim: 3,
        p_a,
        w: Channel::new(rows).unwrap(),
    })
}

fn bench(c: &mut Criterion) {
    let (code, source) = leakage_code();
    let spec = affine_spec();
    let (wy, wz) = (Channel::bsc(0.1), Channel::bsc(0.25));
    let mut group = c.benchmark_group("backend");
    group.sample_size(10);
    // the global pool is built once; the single-worker pool once per iteration, which
    // costs a thread spawn (tens of µs) against workloads in the milliseconds
    let run = |threads: usize, f: &(dyn Fn() + Sync)| {
        if threads == 0 {
            f()
        } else {
            with_threads(threads, f)
        }
    };
    for (label, threads) in [("pool", 0), ("single", 1)] {
        group.bench_with_input(BenchmarkId::new("exact_leakage", label), &threads, |b, &t| {
            b.iter(|| {
                run(t, &|| {
                    std::hint::black_box(exact_leakage(&code, &source, IndexSet::full(2), CAP).unwrap());
                })
            })
        });
        group.bench_with_input(BenchmarkId::new("affine_ensemble", label), &threads, |b, &t| {
            b.iter(|| {
                run(t, &|| {
                    std::hint::black_box(ensemble_bound_check(&spec, 0.5, CAP).unwrap());
                })
            })
        });
        group.bench_with_input(BenchmarkId::new("region_sample", label), &threads, |b, &t| {
            b.iter(|| {
                run(t, &|| {
                    std::hint::black_box(region_sample(&wy, &wz, RegionModel::Smc, 2, 3, 2, 2000, 5).unwrap());
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
