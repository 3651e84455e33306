use super::{Diffusion, ParamLayout};
use crate::error::{Error, Result};

/// Brownian motion with constant drift: `dx_i = b_i dt + c_i dW̃_i`.
///
/// Unit factors and identity transform; mostly useful as a conjugate test
/// model.
#[derive(Debug, Clone)]
pub struct BrownianDrift {
    dim: usize,
    layout: ParamLayout,
}

impl BrownianDrift {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::arg("brownian_drift needs dim >= 1"));
        }
        let layout = ParamLayout::new((1..=dim).map(|i| (format!("drift{i}"), false)).collect());
        Ok(BrownianDrift { dim, layout })
    }
}

impl Diffusion for BrownianDrift {
    fn name(&self) -> &'static str {
        "brownian_drift"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    #[inline]
    fn drift(&self, _x: &[f64], theta: &[f64], out: &mut [f64]) {
        let n = out.len();
        out.copy_from_slice(&theta[..n]);
    }

    #[inline]
    fn factor(&self, _i: usize, _x: &[f64], _theta: &[f64]) -> f64 {
        1.0
    }

    #[inline]
    fn factor_deriv(&self, _i: usize, _xi: f64, _theta: &[f64]) -> f64 {
        0.0
    }

    #[inline]
    fn transform(&self, _i: usize, xi: f64, _theta: &[f64]) -> f64 {
        xi
    }

    #[inline]
    fn inverse_transform(&self, _i: usize, u: f64, _theta: &[f64]) -> Option<f64> {
        Some(u)
    }

    fn lower_bound(&self, _i: usize) -> f64 {
        f64::NEG_INFINITY
    }
}
