use crate::cholesky::CholeskyFactor;
use crate::error::{Error, Result};
use crate::model::{Diffusion, PathLattice};

/// Euler-Maruyama log-likelihood `Σ log N(X_i; X_{i-1} + δ M, δ A(X_{i-1}))`.
pub fn euler_loglik<M: Diffusion + ?Sized>(
    model: &M,
    chol: &CholeskyFactor,
    theta: &[f64],
    path: &PathLattice,
) -> Result<f64> {
    let d = model.dim();
    if path.dim() != d || chol.dim() != d {
        return Err(Error::arg("dimension mismatch between model, factor and path"));
    }
    if path.len() < 2 {
        return Err(Error::arg("Euler likelihood needs at least two rows"));
    }
    model.layout().validate(theta)?;
    let c = chol.matrix();
    let log_det_c: f64 = (0..d).map(|i| c[(i, i)].ln()).sum();
    let half_log_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();

    let mut mu = vec![0.0; d];
    let mut y = vec![0.0; d];
    let mut total = 0.0;
    for r in 1..path.len() {
        let prev = path.row(r - 1);
        let cur = path.row(r);
        let delta = path.times()[r] - path.times()[r - 1];
        model.drift(prev, theta, &mut mu);
        let mut log_det_f = 0.0;
        // solve (F C) y = residual by forward substitution
        for i in 0..d {
            let f = model.factor(i, prev, theta);
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::Numerical {
                    context: "singular diffusion matrix in Euler step",
                    index: r - 1,
                });
            }
            log_det_f += f.ln();
            let mut s = (cur[i] - prev[i] - delta * mu[i]) / f;
            for j in 0..i {
                s -= c[(i, j)] * y[j];
            }
            y[i] = s / c[(i, i)];
        }
        let quad: f64 = y.iter().map(|v| v * v).sum();
        total += -(d as f64) * (half_log_2pi + 0.5 * delta.ln())
            - log_det_f
            - log_det_c
            - 0.5 * quad / delta;
    }
    if !total.is_finite() {
        return Err(Error::Numerical {
            context: "Euler likelihood",
            index: path.len() - 1,
        });
    }
    Ok(total)
}
