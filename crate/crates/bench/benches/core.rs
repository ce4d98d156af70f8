use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use trv_bench::{cgmy_spec, grid, model, sample_path};
use trv_core::oracle::{truncated_moment_numeric, OracleModel};
use trv_core::sv::PathSimulator;
use trv_core::{
    debias_step, estimate_daily_pooled, estimate_nb, estimate_pb, stream, trqv, CgmySampler, EstimatorConfig,
    TruncationProfile,
};

fn estimators(c: &mut Criterion) {
    let path = sample_path(1);
    let cfg = EstimatorConfig::default();
    let h = grid().h;
    let mut g = c.benchmark_group("estimators");
    g.bench_function("trqv_scan", |b| b.iter(|| trqv(black_box(&path.increments), 1.6e-3)));
    g.bench_function("profile_build", |b| b.iter(|| TruncationProfile::new(black_box(&path.increments)).unwrap()));
    g.bench_function("pb", |b| b.iter(|| estimate_pb(black_box(&path.increments), &cfg, h).unwrap()));
    g.bench_function("nb", |b| b.iter(|| estimate_nb(black_box(&path.increments), &cfg, h).unwrap()));
    let blocks: Vec<&[f64]> = (0..path.blocks).map(|d| path.block_increments(d).unwrap()).collect();
    g.bench_function("nb_daily_pooled", |b| b.iter(|| estimate_daily_pooled(black_box(&blocks), &cfg, h).unwrap()));
    g.bench_function("debias_step", |b| {
        b.iter(|| debias_step(black_box(0.0423), black_box(0.0427), black_box(0.0431), 1e-12))
    });
    g.finish();
}

fn simulation(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulation");
    g.sample_size(10);
    let sampler = CgmySampler::new(&cgmy_spec(), 1e-3).unwrap();
    let gr = grid();
    let mut i = 0;
    g.bench_function("cgmy_path", |b| {
        b.iter(|| {
            i += 1;
            sampler.sample_path(&gr, &mut stream(3, i))
        })
    });
    let sim = PathSimulator::new(&model(), &gr, 252, 1, 1e-3).unwrap();
    g.bench_function("constant_vol_path", |b| {
        b.iter(|| {
            i += 1;
            sim.simulate(i, &mut stream(4, i))
        })
    });
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let spec = OracleModel { c_plus: 0.5, c_minus: 0.5, y: 1.5, sigma: 0.3 }.char_spec().unwrap();
    let h = 2f64.powi(-18);
    let eps = h.powf(5.0 / 12.0);
    let mut g = c.benchmark_group("oracle");
    g.sample_size(10);
    g.bench_function("truncated_second_moment", |b| {
        b.iter(|| truncated_moment_numeric(black_box(&spec), 1, eps, h).unwrap())
    });
    g.finish();
}

criterion_group!(benches, estimators, simulation, oracle);
criterion_main!(benches);
