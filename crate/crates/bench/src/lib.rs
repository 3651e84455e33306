//! Shared fixtures for the criterion benches in `benches/`.

use corrdiff::cholesky::{corr_to_chol, CholeskyFactor, CorrScaleSpec};
use corrdiff::model::{build_mv_cir, simulate_euler, Model, ObservationSet};

/// Trivariate CIR benchmark: true parameters, factor and `n` unit-spaced
/// observations.
pub fn cir_fixture(n: usize, seed: u64) -> (Model, Vec<f64>, CholeskyFactor, ObservationSet) {
    let (model, theta) = build_mv_cir(&[0.2, 0.15, 0.22], &[2.5, 3.0, 2.0]).expect("valid parameters");
    let spec = CorrScaleSpec::new(vec![0.45, 0.35, 0.40], vec![0.45, 0.35, 0.55]).expect("valid spec");
    let chol = corr_to_chol(&spec).expect("positive definite");
    let path = simulate_euler(&model, &chol, &theta, &[2.5, 3.0, 2.0], n as f64, 0.01, seed).expect("simulation");
    let obs = path.subsample(100, &[0, 1, 2]).expect("stride divides");
    (Model::MvCir(model), theta, chol, obs)
}
