//! Moment-based starting values.

use nalgebra::DMatrix;

use crate::cholesky::{chol_decompose, CholeskyFactor, SparsityMask};
use crate::error::{Error, Result};
use crate::likelihood::Regime;
use crate::model::{Diffusion, Model, ObservationSet};

fn lag_one(x: &[f64]) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let c0: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    let c1: f64 = (1..n).map(|t| (x[t] - mean) * (x[t - 1] - mean)).sum();
    if c0 > 0.0 {
        c1 / c0
    } else {
        0.0
    }
}

/// Mean-reversion rate implied by a lag-one autocorrelation over spacing `dt`.
fn reversion_rate(x: &[f64], dt: f64) -> f64 {
    let r = lag_one(x).clamp(0.01, 0.999);
    -r.ln() / dt
}

/// Realised covariance of `ΔX_i / f_i(X)` per unit time, for the listed
/// columns.
fn scaled_covariance(obs: &ObservationSet, cols: &[usize], f: impl Fn(usize, f64) -> f64) -> DMatrix<f64> {
    let q = cols.len();
    let mut v = DMatrix::zeros(q, q);
    let t = obs.times();
    for s in 0..obs.intervals() {
        let (a, b) = (obs.row(s), obs.row(s + 1));
        let dt = t[s + 1] - t[s];
        let e: Vec<f64> = cols.iter().map(|&c| (b[c] - a[c]) / f(c, a[c])).collect();
        for i in 0..q {
            for j in 0..q {
                v[(i, j)] += e[i] * e[j] / dt;
            }
        }
    }
    v / obs.intervals() as f64
}

fn mask_factor(v: &DMatrix<f64>, mask: &SparsityMask, d: usize) -> CholeskyFactor {
    let fallback = || {
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = v[(i, i)].max(1e-8).sqrt();
        }
        CholeskyFactor::new(m).expect("positive diagonal")
    };
    let mut c = match chol_decompose(v) {
        Ok(c) => c.matrix().clone(),
        Err(_) => return fallback(),
    };
    for i in 0..d {
        for j in 0..i {
            if mask.is_zero_entry(i, j) {
                c[(i, j)] = 0.0;
            }
        }
    }
    CholeskyFactor::new(c).unwrap_or_else(|_| fallback())
}

/// Crude starting values from sample moments of the observations.
///
/// * CIR: `μ` from sample means, `κ` from lag-one autocorrelations and `C`
///   from the realised covariance of `ΔX / √X`.
/// * Brownian drift: average increments and realised covariance.
/// * Heston: volatility block as for CIR when observed; otherwise the level
///   is read off the price returns.
pub fn moment_guess(model: &Model, obs: &ObservationSet, regime: Regime, mask: &SparsityMask) -> Result<(Vec<f64>, CholeskyFactor)> {
    if obs.len() < 3 {
        return Err(Error::Initialization("need at least 3 observations for a moment guess".into()));
    }
    let dt = (obs.times()[obs.len() - 1] - obs.times()[0]) / obs.intervals() as f64;
    let col = |c: usize| -> Vec<f64> { (0..obs.len()).map(|r| obs.row(r)[c]).collect() };
    let means = obs.column_means();
    match model {
        Model::MvCir(m) => {
            let d = m.dim();
            let kappa: Vec<f64> = (0..d).map(|i| reversion_rate(&col(i), dt)).collect();
            let cols: Vec<usize> = (0..d).collect();
            let v = scaled_covariance(obs, &cols, |_, x| x.max(1e-12).sqrt());
            let mut theta = kappa;
            theta.extend(means.iter().map(|m| m.max(1e-6)));
            Ok((theta, mask_factor(&v, mask, d)))
        }
        Model::BrownianDrift(m) => {
            let d = m.dim();
            let span = obs.times()[obs.len() - 1] - obs.times()[0];
            let theta: Vec<f64> = (0..d)
                .map(|i| (obs.row(obs.len() - 1)[i] - obs.row(0)[i]) / span)
                .collect();
            let cols: Vec<usize> = (0..d).collect();
            let mut v = scaled_covariance(obs, &cols, |_, _| 1.0);
            // remove the drift contribution
            for i in 0..d {
                for j in 0..d {
                    v[(i, j)] -= theta[i] * theta[j] * dt;
                }
            }
            Ok((theta, mask_factor(&v, mask, d)))
        }
        Model::BivariateHeston(_) => {
            let (vol_level, kappa, price_cols) = match regime {
                Regime::Observed => (
                    [means[0].max(1e-6), means[1].max(1e-6)],
                    [reversion_rate(&col(0), dt), reversion_rate(&col(1), dt)],
                    [2usize, 3usize],
                ),
                Regime::Latent => {
                    let rv = scaled_covariance(obs, &[0, 1], |_, _| 1.0);
                    ([rv[(0, 0)].max(1e-8), rv[(1, 1)].max(1e-8)], [1.0, 1.0], [0usize, 1usize])
                }
            };
            let span = obs.times()[obs.len() - 1] - obs.times()[0];
            let drift: Vec<f64> = price_cols
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    (obs.row(obs.len() - 1)[c] - obs.row(0)[c]) / span + 0.5 * vol_level[i] * vol_level[i]
                })
                .collect();
            let vol_cov = if regime == Regime::Observed {
                scaled_covariance(obs, &[0, 1], |_, x| x.max(1e-12).sqrt())
            } else {
                DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                    0.04 * vol_level[0],
                    0.04 * vol_level[1],
                ]))
            };
            let mut v = DMatrix::zeros(4, 4);
            v.view_mut((0, 0), (2, 2)).copy_from(&vol_cov);
            v[(2, 2)] = vol_level[0] * vol_level[0];
            v[(3, 3)] = vol_level[1] * vol_level[1];
            let theta = vec![kappa[0], kappa[1], vol_level[0], vol_level[1], drift[0], drift[1]];
            Ok((theta, mask_factor(&v, mask, 4)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{simulate_euler, MvCir};

    #[test]
    fn cir_guess_is_in_the_right_region() {
        let model = MvCir::new(2).unwrap();
        let theta = MvCir::theta(&[0.5, 0.3], &[2.0, 3.0]);
        let chol = CholeskyFactor::from_lower(2, &[0.3, 0.1, 0.25]).unwrap();
        let path = simulate_euler(&model, &chol, &theta, &[2.0, 3.0], 400.0, 0.01, 9).unwrap();
        let obs = path.subsample(100, &[0, 1]).unwrap();
        let (guess, c) = moment_guess(&Model::MvCir(model), &obs, Regime::Observed, &SparsityMask::full(2)).unwrap();
        assert!((guess[2] - 2.0).abs() < 0.4 && (guess[3] - 3.0).abs() < 0.6, "{guess:?}");
        assert!(guess[0] > 0.1 && guess[0] < 2.0);
        assert!((c.get(0, 0) - 0.3).abs() < 0.05, "{}", c.get(0, 0));
    }
}
