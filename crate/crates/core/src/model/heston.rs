use super::{Diffusion, ParamLayout};
use crate::cholesky::SparsityMask;
use crate::error::{Error, Result};

/// Bivariate Heston model on the state `(v1, v2, x1, x2)`.
///
/// Volatilities follow correlated CIR dynamics and drive the log-prices:
///
/// ```text
/// dv_i = κ_i (μ_i - v_i) dt + ...
/// dx_i = (μ_{i+2} - v_i² / 2) dt + ...
/// F_x  = diag(√v1, √v2, √v1 / μ1, √v2 / μ2)
/// ```
///
/// Only the volatility block is mapped to unit volatility. The price rows of
/// `C` carry a redundant diagonal: their row norm is pinned to `μ1` / `μ2`,
/// which makes the instantaneous price variance exactly `v_i`.
///
/// Parameters are laid out as `(κ1, κ2, μ1, μ2, μ3, μ4)`.
#[derive(Debug, Clone)]
pub struct BivariateHeston {
    layout: ParamLayout,
}

impl Default for BivariateHeston {
    fn default() -> Self {
        Self::new()
    }
}

impl BivariateHeston {
    pub fn new() -> Self {
        let entries = [
            ("kappa1", true),
            ("kappa2", true),
            ("mu1", true),
            ("mu2", true),
            ("mu3", false),
            ("mu4", false),
        ]
        .into_iter()
        .map(|(n, p)| (n.to_string(), p))
        .collect();
        BivariateHeston {
            layout: ParamLayout::new(entries),
        }
    }

    pub fn theta(kappa: [f64; 2], mu_v: [f64; 2], mu_x: [f64; 2]) -> Vec<f64> {
        vec![kappa[0], kappa[1], mu_v[0], mu_v[1], mu_x[0], mu_x[1]]
    }
}

/// Builds the bivariate Heston model and its parameter vector.
pub fn build_bivariate_heston(
    kappa: [f64; 2],
    mu_v: [f64; 2],
    mu_x: [f64; 2],
) -> Result<(BivariateHeston, Vec<f64>)> {
    let model = BivariateHeston::new();
    let theta = BivariateHeston::theta(kappa, mu_v, mu_x);
    model
        .layout
        .validate(&theta)
        .map_err(|e| Error::arg(format!("bivariate_heston: {e}")))?;
    Ok((model, theta))
}

impl Diffusion for BivariateHeston {
    fn name(&self) -> &'static str {
        "bivariate_heston"
    }

    fn dim(&self) -> usize {
        4
    }

    fn transformed_dim(&self) -> usize {
        2
    }

    fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    #[inline]
    fn drift(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        out[0] = theta[0] * (theta[2] - x[0]);
        if out.len() > 1 {
            out[1] = theta[1] * (theta[3] - x[1]);
        }
        if out.len() > 2 {
            out[2] = theta[4] - 0.5 * x[0] * x[0];
            out[3] = theta[5] - 0.5 * x[1] * x[1];
        }
    }

    #[inline]
    fn factor(&self, i: usize, x: &[f64], theta: &[f64]) -> f64 {
        match i {
            0 | 1 => x[i].sqrt(),
            2 => x[0].sqrt() / theta[2],
            _ => x[1].sqrt() / theta[3],
        }
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

    fn stationary_level(&self, i: usize, theta: &[f64]) -> Option<f64> {
        if i < 2 {
            theta.get(2 + i).copied()
        } else {
            None
        }
    }

    fn lower_bound(&self, i: usize) -> f64 {
        if i < 2 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    fn fixed_row_scale(&self, row: usize, theta: &[f64]) -> Option<f64> {
        match row {
            2 => Some(theta[2]),
            3 => Some(theta[3]),
            _ => None,
        }
    }

    /// Volatilities correlate with each other, prices with each other, and
    /// the cross correlations are zero.
    fn default_mask(&self) -> SparsityMask {
        SparsityMask::full(4)
            .with_zero_correlations(&[(2, 0), (2, 1), (3, 0), (3, 1)])
            .expect("static pattern")
            .with_fixed_scale_rows(&[2, 3])
            .expect("static pattern")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::drift_eval;
    use approx::assert_relative_eq;

    fn model() -> (BivariateHeston, Vec<f64>) {
        build_bivariate_heston([1.5, 2.0], [0.0049, 0.0064], [0.001, 0.002]).unwrap()
    }

    #[test]
    fn price_drift_row() {
        let (m, theta) = model();
        let d = drift_eval(&m, &[0.0049, 0.0064, 0.1, 0.2], &theta).unwrap();
        assert_relative_eq!(d[2], 0.000987995, max_relative = 1e-12);
        assert_eq!(d[0], 0.0);
    }

    #[test]
    fn price_factor_at_mean_volatility() {
        let (m, theta) = model();
        let mu1 = theta[2];
        let f3 = m.factor(2, &[mu1, 0.005, 0.0, 0.0], &theta);
        assert_relative_eq!(f3, 1.0 / mu1.sqrt(), max_relative = 1e-12);
        // pinned row norm turns the factor into the Heston price volatility √v
        let c3 = m.fixed_row_scale(2, &theta).unwrap();
        assert_relative_eq!(c3 * f3, mu1.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn factors_positive_inside_domain() {
        let (m, theta) = model();
        let x = [0.003, 0.008, -1.0, 2.0];
        for i in 0..4 {
            assert!(m.factor(i, &x, &theta) > 0.0);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_bivariate_heston([0.0, 1.0], [0.1, 0.1], [0.0, 0.0]).is_err());
        assert!(build_bivariate_heston([1.0, 1.0], [0.1, -0.1], [0.0, 0.0]).is_err());
    }
}
