use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use corrdiff::likelihood::{euler_loglik, Engine, IntervalTerms, Regime};
use corrdiff_bench::cir_fixture;

fn reparam_likelihood(c: &mut Criterion) {
    let (model, theta, chol, obs) = cir_fixture(100, 7);
    let mut group = c.benchmark_group("reparam_loglik");
    for m in [10, 20, 40, 80] {
        let engine = Engine::new(&model, &obs, Regime::Observed, m).unwrap();
        let prep = engine.prepare(&chol, &theta).unwrap();
        let path = engine.initial_path(&prep).unwrap();
        let mut scratch = engine.scratch();
        let mut terms = vec![IntervalTerms::default(); engine.intervals()];
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, _| {
            b.iter(|| {
                assert!(engine.eval_all(&prep, black_box(&path), &mut scratch, &mut terms));
                terms.iter().map(IntervalTerms::total).sum::<f64>()
            })
        });
    }
    group.finish();
}

fn euler_likelihood(c: &mut Criterion) {
    let (model, theta, chol, obs) = cir_fixture(100, 7);
    let engine = Engine::new(&model, &obs, Regime::Observed, 20).unwrap();
    let prep = engine.prepare(&chol, &theta).unwrap();
    let lattice = engine.states(&prep, &engine.initial_path(&prep).unwrap()).unwrap();
    c.bench_function("euler_loglik/20", |b| {
        b.iter(|| euler_loglik(&model, &chol, black_box(&theta), &lattice).unwrap())
    });
}

criterion_group!(benches, reparam_likelihood, euler_likelihood);
criterion_main!(benches);
