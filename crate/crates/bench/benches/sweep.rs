use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use corrdiff::cholesky::SparsityMask;
use corrdiff::mcmc::{ChainConfig, Initial, Method, PriorSpec, Sampler};
use corrdiff::model::Diffusion;
use corrdiff_bench::cir_fixture;

fn sweeps(c: &mut Criterion) {
    let (model, theta, chol, obs) = cir_fixture(100, 11);
    let mut group = c.benchmark_group("sweep");
    group.sample_size(20);
    for (method, m) in [(Method::A, 20), (Method::A, 80), (Method::B, 20)] {
        let mut cfg = ChainConfig::new(theta.len(), m, usize::MAX, 0, 3);
        cfg.proposal.method = method;
        cfg.check_every = 0;
        let mut sampler = Sampler::new(
            &model,
            &obs,
            Initial {
                theta: theta.clone(),
                chol: chol.clone(),
                path: None,
            },
            SparsityMask::full(3),
            PriorSpec::default_for(model.layout()),
            cfg,
        )
        .unwrap();
        group.bench_with_input(BenchmarkId::new(format!("{method:?}"), m), &m, |b, _| b.iter(|| sampler.sweep()));
    }
    group.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
