//! Path proposals on one coordinate.

use rand::Rng;
use rand_distr::StandardNormal;

/// Proposal drift `L(u) = alpha + beta u` of a linear diffusion bridge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearDrift {
    pub alpha: f64,
    pub beta: f64,
}

impl LinearDrift {
    pub const ZERO: LinearDrift = LinearDrift { alpha: 0.0, beta: 0.0 };

    /// Drift through `(u0, m0)` and `(u1, m1)`. The slope is clamped so the
    /// Euler recursion stays contractive on steps up to `max_step`.
    pub fn interpolate(u0: f64, m0: f64, u1: f64, m1: f64, max_step: f64) -> Self {
        let du = u1 - u0;
        let mut beta = if du.abs() > 1e-10 { (m1 - m0) / du } else { 0.0 };
        let cap = 0.5 / max_step;
        beta = beta.clamp(-cap, cap);
        if !beta.is_finite() {
            beta = 0.0;
        }
        LinearDrift {
            alpha: 0.5 * (m0 + m1) - beta * 0.5 * (u0 + u1),
            beta,
        }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        self.alpha + self.beta * u
    }

    pub fn is_zero(&self) -> bool {
        self.alpha == 0.0 && self.beta == 0.0
    }
}

/// Draws `u[1..]` from the Euler scheme `du = L(u) dt + dW` started at
/// `u[0]`. Unless `free_end`, the path is conditioned on the current value of
/// the last entry, which is left untouched.
///
/// The conditioning is exact for the discretised Gaussian chain, so the
/// proposal density is `W(u) exp(G_L(u)) / const` on the lattice.
pub fn sample_bridge<R: Rng + ?Sized>(
    rng: &mut R,
    times: &[f64],
    u: &mut [f64],
    drift: LinearDrift,
    free_end: bool,
    var: &mut Vec<f64>,
) {
    let n = times.len() - 1;
    debug_assert_eq!(u.len(), n + 1);
    let target = u[n];
    var.clear();
    var.push(0.0);
    for j in 0..n {
        let dt = times[j + 1] - times[j];
        let b = 1.0 + drift.beta * dt;
        let xi: f64 = rng.sample(StandardNormal);
        u[j + 1] = drift.alpha * dt + b * u[j] + dt.sqrt() * xi;
        let v = var[j];
        var.push(b * b * v + dt);
    }
    if free_end {
        return;
    }
    // Cov(u_j, u_n) = Var(u_j) prod_{i >= j} b_i
    let gap = target - u[n];
    let total = var[n];
    let mut prod = 1.0;
    u[n] = target;
    for j in (1..n).rev() {
        prod *= 1.0 + drift.beta * (times[j + 1] - times[j]);
        u[j] += var[j] * prod / total * gap;
    }
}

/// `Σ L(u_j) Δu_j - ½ Σ L(u_j)² δ_j` with left endpoints.
pub fn drift_log_g(times: &[f64], u: &[f64], drift: LinearDrift) -> f64 {
    if drift.is_zero() {
        return 0.0;
    }
    let mut s = 0.0;
    for j in 0..times.len() - 1 {
        let l = drift.eval(u[j]);
        s += l * (u[j + 1] - u[j]) - 0.5 * l * l * (times[j + 1] - times[j]);
    }
    s
}
