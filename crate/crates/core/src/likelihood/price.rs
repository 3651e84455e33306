use crate::cholesky::CholeskyFactor;
use crate::error::{Error, Result};
use crate::model::Diffusion;
use crate::reparam::MAX_STACK;

/// Conditional Gaussian log-density of the untransformed (price) block over
/// one interval, given the volatility lattice and the volatility Brownian
/// increments.
///
/// Row `p` of the price block has mean
/// `y_prev + Σ drift δ + Σ_l C_{p,l} Σ f_p ΔB_l` (volatility drivers `l < k`)
/// and covariance `Σ f_p f_q δ Σ_{l >= k} C_{p,l} C_{q,l}`. Integrals are
/// left-point sums.
#[allow(clippy::too_many_arguments)]
pub(crate) fn price_block_loglik<M: Diffusion + ?Sized>(
    model: &M,
    chol: &CholeskyFactor,
    theta: &[f64],
    y_prev: &[f64],
    y_next: &[f64],
    vol: &[f64],
    db: &[f64],
    delta_at: impl Fn(usize) -> f64,
    state: &mut [f64],
    drift: &mut [f64],
) -> f64 {
    let d = model.dim();
    let k = model.transformed_dim();
    let q = d - k;
    let steps = db.len() / k;
    let c = chol.matrix();

    let mut mean = [0.0f64; MAX_STACK];
    let mut cov = [0.0f64; MAX_STACK * MAX_STACK];
    let mut f = [0.0f64; MAX_STACK];
    mean[..q].copy_from_slice(y_prev);
    state[k..].copy_from_slice(y_prev);

    for j in 0..steps {
        state[..k].copy_from_slice(&vol[j * k..(j + 1) * k]);
        model.drift(state, theta, drift);
        let delta = delta_at(j);
        let dbj = &db[j * k..(j + 1) * k];
        for p in 0..q {
            let row = k + p;
            f[p] = model.factor(row, state, theta);
            let mut shock = 0.0;
            for l in 0..k {
                shock += c[(row, l)] * dbj[l];
            }
            mean[p] += drift[row] * delta + f[p] * shock;
        }
        for p in 0..q {
            for r in 0..=p {
                let mut s = 0.0;
                for l in k..=(k + r) {
                    s += c[(k + p, l)] * c[(k + r, l)];
                }
                cov[p * q + r] += f[p] * f[r] * delta * s;
            }
        }
    }
    gaussian_logpdf(&y_next[..q], &mean[..q], &mut cov[..q * q], q)
}

/// Log-density of `N(mean, cov)` with `cov` given by its lower triangle
/// (row-major, overwritten by its Cholesky factor).
fn gaussian_logpdf(x: &[f64], mean: &[f64], cov: &mut [f64], q: usize) -> f64 {
    for j in 0..q {
        let mut diag = cov[j * q + j];
        for l in 0..j {
            diag -= cov[j * q + l] * cov[j * q + l];
        }
        if !(diag > 0.0) {
            return f64::NEG_INFINITY;
        }
        let ljj = diag.sqrt();
        cov[j * q + j] = ljj;
        for i in j + 1..q {
            let mut s = cov[i * q + j];
            for l in 0..j {
                s -= cov[i * q + l] * cov[j * q + l];
            }
            cov[i * q + j] = s / ljj;
        }
    }
    let mut y = [0.0f64; MAX_STACK];
    let mut quad = 0.0;
    let mut log_det = 0.0;
    for i in 0..q {
        let mut s = x[i] - mean[i];
        for l in 0..i {
            s -= cov[i * q + l] * y[l];
        }
        y[i] = s / cov[i * q + i];
        quad += y[i] * y[i];
        log_det += cov[i * q + i].ln();
    }
    -0.5 * q as f64 * (2.0 * std::f64::consts::PI).ln() - log_det - 0.5 * quad
}

/// Conditional log-likelihood of the price pair at the end of one interval.
///
/// `times` is the interval lattice, `vol_path` the volatility rows on it
/// (`times.len() x k`) and `vol_increments` the Brownian increments driving
/// the volatilities (`(times.len() - 1) x k`).
#[allow(clippy::too_many_arguments)]
pub fn heston_price_loglik<M: Diffusion + ?Sized>(
    model: &M,
    chol: &CholeskyFactor,
    theta: &[f64],
    y_prev: &[f64],
    y_next: &[f64],
    times: &[f64],
    vol_path: &[f64],
    vol_increments: &[f64],
) -> Result<f64> {
    let d = model.dim();
    let k = model.transformed_dim();
    let q = d - k;
    if q == 0 || q > MAX_STACK {
        return Err(Error::arg("model has no supported price block"));
    }
    if y_prev.len() != q || y_next.len() != q {
        return Err(Error::arg("price observations have the wrong length"));
    }
    let n = times.len();
    if n < 2 || vol_path.len() != n * k || vol_increments.len() != (n - 1) * k {
        return Err(Error::arg("volatility lattice does not match the time grid"));
    }
    let outside = (0..vol_path.len()).find(|&i| !model.in_open_domain(i % k, vol_path[i]));
    if let Some(i) = outside {
        return Err(Error::Domain {
            component: i % k,
            value: vol_path[i],
        });
    }
    model.layout().validate(theta)?;
    let mut state = vec![0.0; d];
    let mut drift = vec![0.0; d];
    let ll = price_block_loglik(
        model,
        chol,
        theta,
        y_prev,
        y_next,
        &vol_path[..(n - 1) * k],
        vol_increments,
        |j| times[j + 1] - times[j],
        &mut state,
        &mut drift,
    );
    if ll.is_finite() {
        Ok(ll)
    } else {
        Err(Error::Numerical {
            context: "price likelihood",
            index: 0,
        })
    }
}
