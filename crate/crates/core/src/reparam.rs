//! Unit-volatility transform `U = H(X) = C⁻¹ G(X)` and bridge centering.
//!
//! Only the leading `k = transformed_dim()` components are transformed, using
//! the leading `k x k` block `D` of `C`. For fully reducible models `D = C`.

use crate::cholesky::CholeskyFactor;
use crate::error::{Error, Result};
use crate::model::Diffusion;

/// Cached quantities for one parameter value.
#[derive(Debug, Clone)]
pub struct TransformContext<'a, M: Diffusion + ?Sized> {
    model: &'a M,
    theta: Vec<f64>,
    chol: CholeskyFactor,
    k: usize,
    /// leading block of C, row-major k x k
    block: Vec<f64>,
    /// its inverse, row-major k x k (lower triangular)
    block_inv: Vec<f64>,
    /// V_ii = squared row norms of C, first k rows
    v_diag: Vec<f64>,
    log_det_block: f64,
}

impl<'a, M: Diffusion + ?Sized> TransformContext<'a, M> {
    pub fn new(model: &'a M, chol: CholeskyFactor, theta: &[f64]) -> Result<Self> {
        if chol.dim() != model.dim() {
            return Err(Error::arg("Cholesky factor dimension does not match the model"));
        }
        model.layout().validate(theta)?;
        let k = model.transformed_dim();
        let inv = chol.block_inverse(k);
        let mut block = vec![0.0; k * k];
        let mut block_inv = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..=i {
                block[i * k + j] = chol.get(i, j);
                block_inv[i * k + j] = inv[(i, j)];
            }
        }
        let v_diag = (0..k)
            .map(|i| (0..=i).map(|j| chol.get(i, j).powi(2)).sum())
            .collect();
        let log_det_block = chol.block_log_det(k);
        Ok(TransformContext {
            model,
            theta: theta.to_vec(),
            chol,
            k,
            block,
            block_inv,
            v_diag,
            log_det_block,
        })
    }

    pub fn model(&self) -> &'a M {
        self.model
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn chol(&self) -> &CholeskyFactor {
        &self.chol
    }

    /// Dimension of the transformed block.
    pub fn dim(&self) -> usize {
        self.k
    }

    /// Row-major transformed block of `C`.
    pub(crate) fn block(&self) -> &[f64] {
        &self.block
    }

    /// Squared row norms of the transformed block.
    pub(crate) fn v_diag(&self) -> &[f64] {
        &self.v_diag
    }

    /// Row-major inverse of the transformed block of `C`.
    pub fn block_inverse(&self) -> &[f64] {
        &self.block_inv
    }

    /// `U = D⁻¹ G(x)`; reads `x[..k]`. `false` when a component is outside the
    /// closed domain.
    #[inline]
    pub(crate) fn forward(&self, x: &[f64], out: &mut [f64]) -> bool {
        let k = self.k;
        let mut g = [0.0f64; MAX_STACK];
        let g = &mut g[..k];
        for i in 0..k {
            if !self.model.in_closed_domain(i, x[i]) {
                return false;
            }
            g[i] = self.model.transform(i, x[i], &self.theta);
        }
        lower_matvec(&self.block_inv, k, g, out);
        true
    }

    /// `x = G⁻¹(D u)`; `false` when `D u` leaves the image of `G`.
    #[inline]
    pub(crate) fn backward(&self, u: &[f64], out: &mut [f64]) -> bool {
        let k = self.k;
        for i in 0..k {
            let mut s = 0.0;
            for j in 0..=i {
                s += self.block[i * k + j] * u[j];
            }
            match self.model.inverse_transform(i, s, &self.theta) {
                Some(x) => out[i] = x,
                None => return false,
            }
        }
        true
    }

    /// Transformed drift at state `x` (already mapped back from `u`):
    /// `μ_U = D⁻¹ w`, `w_i = μ_i / f_i - f_i' V_ii / 2`.
    #[inline]
    pub(crate) fn drift_at_state(&self, x: &[f64], out: &mut [f64]) {
        let k = self.k;
        let mut w = [0.0f64; MAX_STACK];
        let w = &mut w[..k];
        self.model.drift(&x[..k], &self.theta, w);
        for i in 0..k {
            let f = self.model.factor(i, x, &self.theta);
            let fd = self.model.factor_deriv(i, x[i], &self.theta);
            w[i] = w[i] / f - 0.5 * fd * self.v_diag[i];
        }
        lower_matvec(&self.block_inv, k, w, out);
    }

    /// Interior state `x` and transformed drift `μ_U` at `u` in one pass;
    /// `false` outside the open domain.
    #[inline]
    pub(crate) fn unit_state(&self, u: &[f64], x: &mut [f64], mu: &mut [f64]) -> bool {
        let k = self.k;
        let mut s = [0.0f64; MAX_STACK];
        let mut w = [0.0f64; MAX_STACK];
        lower_matvec(&self.block, k, u, &mut s[..k]);
        if !self.model.unit_drift_terms(&s[..k], &self.theta, &self.v_diag, x, &mut w[..k]) {
            return false;
        }
        lower_matvec(&self.block_inv, k, &w[..k], mu);
        true
    }

    /// `log |det ∇H(y)| = -log det D - Σ_i log f_i(y_i)`.
    #[inline]
    pub(crate) fn log_jacobian(&self, y: &[f64]) -> f64 {
        let mut s = -self.log_det_block;
        for i in 0..self.k {
            s -= self.model.factor(i, y, &self.theta).ln();
        }
        s
    }
}

/// Transformed dimensions above this are not supported by the stack buffers.
pub const MAX_STACK: usize = 16;

#[inline]
fn lower_matvec(m: &[f64], k: usize, v: &[f64], out: &mut [f64]) {
    for i in 0..k {
        let mut s = 0.0;
        for j in 0..=i {
            s += m[i * k + j] * v[j];
        }
        out[i] = s;
    }
}

fn domain_error<M: Diffusion + ?Sized>(model: &M, x: &[f64]) -> Error {
    let component = (0..x.len())
        .find(|&i| !model.in_closed_domain(i, x[i]))
        .unwrap_or(0);
    Error::Domain {
        component,
        value: x[component],
    }
}

/// `U = C⁻¹ G(x)` on the transformed block.
pub fn transform_h<M: Diffusion + ?Sized>(ctx: &TransformContext<'_, M>, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < ctx.k {
        return Err(Error::arg("state shorter than the transformed block"));
    }
    let mut out = vec![0.0; ctx.k];
    if ctx.forward(x, &mut out) {
        Ok(out)
    } else {
        Err(domain_error(ctx.model, &x[..ctx.k]))
    }
}

/// `x_i = g_i⁻¹([C u]_i)`. A `Domain` error signals that `u` is outside the
/// image of `H`.
pub fn inverse_h<M: Diffusion + ?Sized>(ctx: &TransformContext<'_, M>, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != ctx.k {
        return Err(Error::arg("transformed vector has the wrong length"));
    }
    let mut out = vec![0.0; ctx.k];
    if ctx.backward(u, &mut out) {
        Ok(out)
    } else {
        let k = ctx.k;
        let component = (0..k)
            .find(|&i| {
                let s: f64 = (0..=i).map(|j| ctx.block[i * k + j] * u[j]).sum();
                ctx.model.inverse_transform(i, s, &ctx.theta).is_none()
            })
            .unwrap_or(0);
        Err(Error::Domain {
            component,
            value: u[component],
        })
    }
}

/// Drift of the unit-volatility process at `u`.
pub fn drift_u<M: Diffusion + ?Sized>(ctx: &TransformContext<'_, M>, u: &[f64]) -> Result<Vec<f64>> {
    let x = inverse_h(ctx, u)?;
    let mut out = vec![0.0; ctx.k];
    ctx.drift_at_state(&x, &mut out);
    if let Some(index) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            context: "transformed drift",
            index,
        });
    }
    Ok(out)
}

/// `log |det ∇H(y)|` for an observation row.
pub fn jacobian_logdet<M: Diffusion + ?Sized>(ctx: &TransformContext<'_, M>, y: &[f64]) -> Result<f64> {
    if y.len() < ctx.k || (0..ctx.k).any(|i| !ctx.model.in_open_domain(i, y[i])) {
        return Err(domain_error(ctx.model, &y[..ctx.k.min(y.len())]));
    }
    Ok(ctx.log_jacobian(y))
}

/// One inter-observation interval in transformed coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeFrame {
    pub interval: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub u_start: Vec<f64>,
    pub u_end: Vec<f64>,
}

impl BridgeFrame {
    pub fn new(interval: usize, t_start: f64, t_end: f64, u_start: Vec<f64>, u_end: Vec<f64>) -> Result<Self> {
        if !(t_start < t_end) || u_start.len() != u_end.len() {
            return Err(Error::arg("bridge frame needs t_start < t_end and matching endpoints"));
        }
        if u_start.iter().chain(&u_end).any(|v| !v.is_finite()) {
            return Err(Error::arg("bridge endpoints must be finite"));
        }
        Ok(BridgeFrame {
            interval,
            t_start,
            t_end,
            u_start,
            u_end,
        })
    }

    pub fn dim(&self) -> usize {
        self.u_start.len()
    }
}

/// Linear interpolation of the endpoints at time `s`.
#[inline]
pub(crate) fn bridge_offset(t0: f64, t1: f64, a: f64, b: f64, s: f64) -> f64 {
    ((t1 - s) * a + (s - t0) * b) / (t1 - t0)
}

fn check_lattice(frame: &BridgeFrame, times: &[f64], rows: &[f64]) -> Result<usize> {
    let d = frame.dim();
    if times.len() < 2 || rows.len() != times.len() * d {
        return Err(Error::arg("lattice does not match times x dim"));
    }
    if times[0] != frame.t_start || times[times.len() - 1] != frame.t_end {
        return Err(Error::arg("lattice times do not span the bridge frame"));
    }
    Ok(d)
}

/// `z(s) = u(s) - [(t_k - s) u(t_{k-1}) + (s - t_{k-1}) u(t_k)] / (t_k - t_{k-1})`.
/// Endpoints are set to exactly zero.
pub fn center_bridge(frame: &BridgeFrame, times: &[f64], u_path: &[f64]) -> Result<Vec<f64>> {
    let d = check_lattice(frame, times, u_path)?;
    let last = times.len() - 1;
    let tol = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
    for i in 0..d {
        if !tol(u_path[i], frame.u_start[i]) || !tol(u_path[last * d + i], frame.u_end[i]) {
            return Err(Error::arg(format!(
                "path endpoints do not match the frame in component {i}"
            )));
        }
    }
    let mut z = vec![0.0; u_path.len()];
    for (r, &s) in times.iter().enumerate().take(last).skip(1) {
        for i in 0..d {
            z[r * d + i] = u_path[r * d + i]
                - bridge_offset(frame.t_start, frame.t_end, frame.u_start[i], frame.u_end[i], s);
        }
    }
    Ok(z)
}

/// Inverse of [`center_bridge`].
pub fn uncenter_bridge(frame: &BridgeFrame, times: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    let d = check_lattice(frame, times, z)?;
    let last = times.len() - 1;
    let mut u = vec![0.0; z.len()];
    u[..d].copy_from_slice(&frame.u_start);
    u[last * d..].copy_from_slice(&frame.u_end);
    for (r, &s) in times.iter().enumerate().take(last).skip(1) {
        for i in 0..d {
            u[r * d + i] = z[r * d + i]
                + bridge_offset(frame.t_start, frame.t_end, frame.u_start[i], frame.u_end[i], s);
        }
    }
    Ok(u)
}
