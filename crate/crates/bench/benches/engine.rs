use criterion::{black_box, criterion_group, criterion_main, Criterion};

use efbv_bench::bench_problem;
use efbv_core::engine::{self, AlgoChoice, RunConfig};
use efbv_core::problems::{smoothness, LtildeConvention};
use efbv_core::tuning::{Algorithm, Mode};
use efbv_core::{CompressorSpec, Family};

fn bench_round(c: &mut Criterion) {
    let problem = bench_problem(50, 1000, 50);
    let config = RunConfig::new(
        CompressorSpec::new(50, Family::Comp { k: 2, k_top: 25 }),
        AlgoChoice::Named(Algorithm::EfBv),
        Mode::Pl,
        1,
        3,
    );
    let profile = smoothness(&problem, LtildeConvention::MeanSquare).unwrap();
    let (tune, _) = engine::resolve_constants(&config, 50, &profile).unwrap();

    c.bench_function("round/n=50,d=50", |b| {
        let mut state = engine::init(&config, &problem).unwrap();
        b.iter(|| {
            engine::step(&mut state, &config, &problem, &tune).unwrap();
            black_box(state.t)
        })
    });
}

criterion_group!(benches, bench_round);
criterion_main!(benches);
