use super::{Diffusion, ParamLayout};
use crate::error::{Error, Result};

/// Multivariate CIR: `dx_i = κ_i (μ_i - x_i) dt + c_i √x_i dW̃_i` with
/// correlated drivers. Parameters are laid out as `(κ_1..κ_d, μ_1..μ_d)`.
#[derive(Debug, Clone)]
pub struct MvCir {
    dim: usize,
    layout: ParamLayout,
}

impl MvCir {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::arg("mv_cir needs dim >= 1"));
        }
        let mut entries: Vec<(String, bool)> =
            (1..=dim).map(|i| (format!("kappa{i}"), true)).collect();
        entries.extend((1..=dim).map(|i| (format!("mu{i}"), true)));
        Ok(MvCir {
            dim,
            layout: ParamLayout::new(entries),
        })
    }

    /// Flat parameter vector from mean-reversion rates and long-run means.
    pub fn theta(kappa: &[f64], mu: &[f64]) -> Vec<f64> {
        kappa.iter().chain(mu).copied().collect()
    }
}

/// Builds a `d`-dimensional CIR model together with its parameter vector.
pub fn build_mv_cir(kappa: &[f64], mu: &[f64]) -> Result<(MvCir, Vec<f64>)> {
    if kappa.len() != mu.len() {
        return Err(Error::arg("kappa and mu must have the same length"));
    }
    let model = MvCir::new(kappa.len())?;
    let theta = MvCir::theta(kappa, mu);
    model.layout.validate(&theta)?;
    Ok((model, theta))
}

impl Diffusion for MvCir {
    fn name(&self) -> &'static str {
        "mv_cir"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    #[inline]
    fn drift(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        let (kappa, mu) = theta.split_at(self.dim);
        for (i, o) in out.iter_mut().enumerate() {
            *o = kappa[i] * (mu[i] - x[i]);
        }
    }

    #[inline]
    fn factor(&self, i: usize, x: &[f64], _theta: &[f64]) -> f64 {
        x[i].sqrt()
    }

    #[inline]
    fn factor_deriv(&self, _i: usize, xi: f64, _theta: &[f64]) -> f64 {
        0.5 / xi.sqrt()
    }

    #[inline]
    fn transform(&self, _i: usize, xi: f64, _theta: &[f64]) -> f64 {
        2.0 * xi.sqrt()
    }

    #[inline]
    fn inverse_transform(&self, _i: usize, u: f64, _theta: &[f64]) -> Option<f64> {
        if u >= 0.0 {
            Some(0.25 * u * u)
        } else {
            None
        }
    }

    // s = 2√x, so √x = s/2 and no square root is needed
    #[inline]
    fn unit_drift_terms(&self, s: &[f64], theta: &[f64], v: &[f64], x: &mut [f64], w: &mut [f64]) -> bool {
        let (kappa, mu) = theta.split_at(self.dim);
        for i in 0..s.len() {
            let si = s[i];
            if !(si > 0.0 && si.is_finite()) {
                return false;
            }
            let xi = 0.25 * si * si;
            x[i] = xi;
            w[i] = (kappa[i] * (mu[i] - xi) - 0.25 * v[i]) / (0.5 * si);
        }
        true
    }

    fn stationary_level(&self, i: usize, theta: &[f64]) -> Option<f64> {
        theta.get(self.dim + i).copied()
    }

    fn lower_bound(&self, _i: usize) -> f64 {
        0.0
    }
}
