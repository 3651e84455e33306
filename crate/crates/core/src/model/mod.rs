//! Diffusion model abstraction, concrete builders and forward simulation.
//!
//! A model is a `d`-dimensional SDE `dX = M(X, θ) dt + F(X, θ) C dW` where
//! `F = diag(f_1, .., f_d)` and `C` is a lower-triangular factor with positive
//! diagonal. The leading `transformed_dim()` components must be reducible:
//! each `f_i` depends only on `x_i` and has an invertible antiderivative
//! reciprocal `g_i` with `g_i' = 1 / f_i`.

mod brownian;
mod cir;
mod heston;
mod lattice;
mod simulate;

pub use brownian::BrownianDrift;
pub use cir::{build_mv_cir, MvCir};
pub use heston::{build_bivariate_heston, BivariateHeston};
pub use lattice::{ObservationSet, PathLattice};
pub use simulate::{simulate_euler, simulate_euler_with, NormalSource, ZeroNoise};

use nalgebra::DMatrix;

use crate::cholesky::{CholeskyFactor, SparsityMask};
use crate::error::{Error, Result};

/// Names and positivity flags of a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamLayout {
    names: Vec<String>,
    positive: Vec<bool>,
}

impl ParamLayout {
    pub fn new(entries: Vec<(String, bool)>) -> Self {
        let (names, positive) = entries.into_iter().unzip();
        ParamLayout { names, positive }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn is_positive(&self, i: usize) -> bool {
        self.positive[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Checks length, finiteness and positivity of a parameter vector.
    pub fn validate(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.len() {
            return Err(Error::arg(format!(
                "parameter vector has {} entries, layout expects {}",
                theta.len(),
                self.len()
            )));
        }
        for (i, &v) in theta.iter().enumerate() {
            if !v.is_finite() || (self.positive[i] && v <= 0.0) {
                return Err(Error::arg(format!(
                    "parameter `{}` = {v} is not admissible",
                    self.names[i]
                )));
            }
        }
        Ok(())
    }
}

/// A diffusion model with diagonal volatility factors.
///
/// Implementations must be cheap to call: the likelihood evaluates these
/// methods at every lattice point.
pub trait Diffusion {
    /// Registry name.
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    /// Number of leading components that are imputed and mapped to unit
    /// volatility. Equal to `dim()` for fully reducible models.
    fn transformed_dim(&self) -> usize {
        self.dim()
    }

    fn layout(&self) -> &ParamLayout;

    /// Writes the leading `out.len()` drift components. Those components only
    /// read `x[..out.len()]`.
    fn drift(&self, x: &[f64], theta: &[f64], out: &mut [f64]);

    /// Volatility factor `f_i`. For `i < transformed_dim()` it reads `x[i]`
    /// only; other rows may read any transformed component.
    fn factor(&self, i: usize, x: &[f64], theta: &[f64]) -> f64;

    /// `d f_i / d x_i`, for transformed components.
    fn factor_deriv(&self, i: usize, xi: f64, theta: &[f64]) -> f64;

    /// `g_i` with `g_i' = 1 / f_i`, for transformed components.
    fn transform(&self, i: usize, xi: f64, theta: &[f64]) -> f64;

    /// Inverse of `g_i`; `None` when `u` is outside the image of `g_i`.
    fn inverse_transform(&self, i: usize, u: f64, theta: &[f64]) -> Option<f64>;

    /// Lower bound of component `i` (`-inf` when unbounded). The open
    /// half-line above it is the interior of the domain.
    fn lower_bound(&self, i: usize) -> f64;

    /// Row norm `c_i` imposed on a row of `C` whose diagonal is redundant.
    fn fixed_row_scale(&self, _row: usize, _theta: &[f64]) -> Option<f64> {
        None
    }

    /// Correlation pattern the model is fitted with by default.
    fn default_mask(&self) -> SparsityMask {
        SparsityMask::full(self.dim())
    }

    /// Hot-path kernel for the transformed block: maps `s = D u` back to
    /// states `x = G⁻¹(s)` and writes `w_i = μ_i / f_i - ½ f_i' v_i`. Returns
    /// `false` when a state is not strictly inside the domain or a term is not
    /// finite.
    #[inline]
    fn unit_drift_terms(&self, s: &[f64], theta: &[f64], v: &[f64], x: &mut [f64], w: &mut [f64]) -> bool {
        let k = s.len();
        for i in 0..k {
            match self.inverse_transform(i, s[i], theta) {
                Some(xi) if self.in_open_domain(i, xi) => x[i] = xi,
                _ => return false,
            }
        }
        self.drift(&x[..k], theta, &mut w[..k]);
        for i in 0..k {
            let f = self.factor(i, x, theta);
            let fd = self.factor_deriv(i, x[i], theta);
            w[i] = w[i] / f - 0.5 * fd * v[i];
            if !w[i].is_finite() {
                return false;
            }
        }
        true
    }

    /// Typical level of transformed component `i`, used to start latent paths.
    fn stationary_level(&self, _i: usize, _theta: &[f64]) -> Option<f64> {
        None
    }

    /// Whether `x_i` lies in the closed domain (boundary allowed).
    fn in_closed_domain(&self, i: usize, xi: f64) -> bool {
        xi >= self.lower_bound(i) && !xi.is_nan()
    }

    /// Whether `x_i` lies strictly inside the domain.
    fn in_open_domain(&self, i: usize, xi: f64) -> bool {
        xi > self.lower_bound(i) && xi.is_finite()
    }
}

/// Registry of built-in models, dispatched statically.
#[derive(Debug, Clone)]
pub enum Model {
    MvCir(MvCir),
    BivariateHeston(BivariateHeston),
    BrownianDrift(BrownianDrift),
}

impl Model {
    pub const NAMES: [&'static str; 3] = ["mv_cir", "bivariate_heston", "brownian_drift"];

    /// Looks a model up by registry name. `dim` is ignored for fixed-dimension
    /// models.
    pub fn from_name(name: &str, dim: usize) -> Result<Self> {
        match name {
            "mv_cir" => Ok(Model::MvCir(MvCir::new(dim)?)),
            "bivariate_heston" => Ok(Model::BivariateHeston(BivariateHeston::new())),
            "brownian_drift" => Ok(Model::BrownianDrift(BrownianDrift::new(dim)?)),
            other => Err(Error::config(
                "model",
                format!("unknown model `{other}` (known: {})", Self::NAMES.join(", ")),
            )),
        }
    }
}

macro_rules! dispatch {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            Model::MvCir($m) => $e,
            Model::BivariateHeston($m) => $e,
            Model::BrownianDrift($m) => $e,
        }
    };
}

impl Diffusion for Model {
    fn name(&self) -> &'static str {
        dispatch!(self, m => m.name())
    }
    fn dim(&self) -> usize {
        dispatch!(self, m => m.dim())
    }
    fn transformed_dim(&self) -> usize {
        dispatch!(self, m => m.transformed_dim())
    }
    fn layout(&self) -> &ParamLayout {
        dispatch!(self, m => m.layout())
    }
    #[inline]
    fn drift(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        dispatch!(self, m => m.drift(x, theta, out))
    }
    #[inline]
    fn factor(&self, i: usize, x: &[f64], theta: &[f64]) -> f64 {
        dispatch!(self, m => m.factor(i, x, theta))
    }
    #[inline]
    fn factor_deriv(&self, i: usize, xi: f64, theta: &[f64]) -> f64 {
        dispatch!(self, m => m.factor_deriv(i, xi, theta))
    }
    #[inline]
    fn transform(&self, i: usize, xi: f64, theta: &[f64]) -> f64 {
        dispatch!(self, m => m.transform(i, xi, theta))
    }
    #[inline]
    fn inverse_transform(&self, i: usize, u: f64, theta: &[f64]) -> Option<f64> {
        dispatch!(self, m => m.inverse_transform(i, u, theta))
    }
    fn lower_bound(&self, i: usize) -> f64 {
        dispatch!(self, m => m.lower_bound(i))
    }
    fn fixed_row_scale(&self, row: usize, theta: &[f64]) -> Option<f64> {
        dispatch!(self, m => m.fixed_row_scale(row, theta))
    }
    fn default_mask(&self) -> SparsityMask {
        dispatch!(self, m => m.default_mask())
    }
    #[inline]
    fn unit_drift_terms(&self, s: &[f64], theta: &[f64], v: &[f64], x: &mut [f64], w: &mut [f64]) -> bool {
        dispatch!(self, m => m.unit_drift_terms(s, theta, v, x, w))
    }
    fn stationary_level(&self, i: usize, theta: &[f64]) -> Option<f64> {
        dispatch!(self, m => m.stationary_level(i, theta))
    }
}

fn check_state<M: Diffusion + ?Sized>(model: &M, x: &[f64]) -> Result<()> {
    if x.len() != model.dim() {
        return Err(Error::arg(format!(
            "state has {} components, model dimension is {}",
            x.len(),
            model.dim()
        )));
    }
    for (i, &xi) in x.iter().enumerate() {
        if !model.in_closed_domain(i, xi) {
            return Err(Error::Domain {
                component: i,
                value: xi,
            });
        }
    }
    Ok(())
}

/// Drift vector `M(x, θ)`.
pub fn drift_eval<M: Diffusion + ?Sized>(model: &M, x: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
    check_state(model, x)?;
    model.layout().validate(theta)?;
    let mut out = vec![0.0; model.dim()];
    model.drift(x, theta, &mut out);
    if let Some(index) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            context: "drift",
            index,
        });
    }
    Ok(out)
}

/// Dispersion matrix `Σ = F_x C`, i.e. `Σ_ij = f_i(x) C_ij` for `j <= i`.
pub fn dispersion_eval<M: Diffusion + ?Sized>(
    model: &M,
    chol: &CholeskyFactor,
    x: &[f64],
    theta: &[f64],
) -> Result<DMatrix<f64>> {
    check_state(model, x)?;
    if chol.dim() != model.dim() {
        return Err(Error::arg("Cholesky factor dimension does not match the model"));
    }
    let d = model.dim();
    let c = chol.matrix();
    let mut sigma = DMatrix::zeros(d, d);
    for i in 0..d {
        let f = model.factor(i, x, theta);
        if !(f.is_finite() && f >= 0.0) {
            return Err(Error::Numerical {
                context: "volatility factor",
                index: i,
            });
        }
        for j in 0..=i {
            sigma[(i, j)] = f * c[(i, j)];
        }
    }
    Ok(sigma)
}

/// Diffusion matrix `A = Σ Σ'`.
pub fn diffusion_matrix<M: Diffusion + ?Sized>(
    model: &M,
    chol: &CholeskyFactor,
    x: &[f64],
    theta: &[f64],
) -> Result<DMatrix<f64>> {
    let sigma = dispersion_eval(model, chol, x, theta)?;
    Ok(&sigma * sigma.transpose())
}

/// Realised quadratic covariation `Σ_i ΔX_i ΔX_i'` over consecutive rows.
pub fn quadratic_variation(path: &PathLattice) -> Result<DMatrix<f64>> {
    if path.len() < 2 {
        return Err(Error::arg("quadratic variation needs at least two rows"));
    }
    let d = path.dim();
    let mut qv = DMatrix::zeros(d, d);
    let mut dx = vec![0.0; d];
    for r in 1..path.len() {
        let (prev, cur) = (path.row(r - 1), path.row(r));
        for i in 0..d {
            dx[i] = cur[i] - prev[i];
        }
        for i in 0..d {
            for j in 0..d {
                qv[(i, j)] += dx[i] * dx[j];
            }
        }
    }
    Ok(qv)
}
