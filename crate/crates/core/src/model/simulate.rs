use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Diffusion, PathLattice};
use crate::cholesky::CholeskyFactor;
use crate::error::{Error, Result};

/// Redraws allowed per Euler step before giving up on a domain exit.
const MAX_REDRAWS: usize = 100;

/// Source of standard normal variates for the Euler integrator.
pub trait NormalSource {
    fn next_normal(&mut self) -> f64;
}

impl<R: Rng> NormalSource for R {
    #[inline]
    fn next_normal(&mut self) -> f64 {
        self.sample(StandardNormal)
    }
}

/// Always returns zero; turns the Euler scheme into its deterministic mean.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl NormalSource for ZeroNoise {
    fn next_normal(&mut self) -> f64 {
        0.0
    }
}

/// Euler-Maruyama simulation driven by a seeded ChaCha stream.
pub fn simulate_euler<M: Diffusion + ?Sized>(
    model: &M,
    chol: &CholeskyFactor,
    theta: &[f64],
    x0: &[f64],
    t_end: f64,
    step: f64,
    seed: u64,
) -> Result<PathLattice> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_euler_with(model, chol, theta, x0, t_end, step, &mut rng).map_err(|e| match e {
        Error::Simulation { message, .. } => Error::Simulation { seed, message },
        other => other,
    })
}

/// Euler-Maruyama simulation `X_i = X_{i-1} + δ M + Σ √δ ξ_i` with an
/// injectable Gaussian source.
///
/// Steps that leave the open domain are redrawn (up to 100 times) before the
/// simulation fails.
pub fn simulate_euler_with<M, S>(
    model: &M,
    chol: &CholeskyFactor,
    theta: &[f64],
    x0: &[f64],
    t_end: f64,
    step: f64,
    noise: &mut S,
) -> Result<PathLattice>
where
    M: Diffusion + ?Sized,
    S: NormalSource + ?Sized,
{
    let d = model.dim();
    if !(step > 0.0 && step.is_finite()) || !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::arg("step and t_end must be positive and finite"));
    }
    if x0.len() != d || chol.dim() != d {
        return Err(Error::arg("dimension mismatch between model, factor and x0"));
    }
    model.layout().validate(theta)?;
    for (i, &xi) in x0.iter().enumerate() {
        if !model.in_open_domain(i, xi) {
            return Err(Error::Domain {
                component: i,
                value: xi,
            });
        }
    }

    let n_steps = (t_end / step).round().max(1.0) as usize;
    let delta = t_end / n_steps as f64;
    let sqrt_delta = delta.sqrt();
    let c = chol.matrix();

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity((n_steps + 1) * d);
    times.push(0.0);
    states.extend_from_slice(x0);

    let mut x = x0.to_vec();
    let mut mu = vec![0.0; d];
    let mut f = vec![0.0; d];
    let mut xi = vec![0.0; d];
    let mut next = vec![0.0; d];
    for s in 1..=n_steps {
        model.drift(&x, theta, &mut mu);
        for (i, fi) in f.iter_mut().enumerate() {
            *fi = model.factor(i, &x, theta);
        }
        let mut accepted = false;
        for _ in 0..MAX_REDRAWS {
            xi.iter_mut().for_each(|v| *v = noise.next_normal());
            for i in 0..d {
                let mut shock = 0.0;
                for j in 0..=i {
                    shock += c[(i, j)] * xi[j];
                }
                next[i] = x[i] + delta * mu[i] + f[i] * sqrt_delta * shock;
            }
            if next
                .iter()
                .enumerate()
                .all(|(i, &v)| model.in_open_domain(i, v))
            {
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(Error::Simulation {
                seed: 0,
                message: format!(
                    "step {s} (t = {}) left the domain after {MAX_REDRAWS} redraws",
                    s as f64 * delta
                ),
            });
        }
        x.copy_from_slice(&next);
        times.push(t_end * s as f64 / n_steps as f64);
        states.extend_from_slice(&x);
    }
    PathLattice::new(times, states, d)
}
