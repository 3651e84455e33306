//! Augmented-path log-likelihoods.
//!
//! * [`girsanov_log`]: discretised Girsanov functional on a unit-volatility
//!   lattice (left-point Itô sums).
//! * [`loglik_reparam`] / [`loglik_sv`]: the reparametrised likelihood of
//!   centered bridges, whose dominating measure is free of parameters.
//! * [`euler_loglik`]: the plain Euler-Maruyama likelihood of an `X` lattice,
//!   kept as an independent reference.
//! * [`heston_price_loglik`]: conditional Gaussian likelihood of log-prices
//!   given the volatility paths.
//!
//! The marginal density of the observations under the driftless law never
//! needs evaluating: it does not depend on the parameters once the bridges
//! are centered, so it cancels in every Metropolis ratio.

mod engine;
mod euler;
mod girsanov;
mod price;

pub use engine::{AugmentedPath, Engine, IntervalTerms, Prepared, Regime, Scratch};
pub use euler::euler_loglik;
pub use girsanov::{girsanov_log, GirsanovTerms};
pub use price::heston_price_loglik;

use crate::error::{Error, Result};
use crate::model::{Diffusion, ObservationSet};
use crate::reparam::TransformContext;

/// Per-interval likelihood terms and their total.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLikBreakdown {
    pub intervals: Vec<IntervalTerms>,
    pub total: f64,
}

impl LogLikBreakdown {
    pub fn from_terms(intervals: Vec<IntervalTerms>) -> Self {
        let total = intervals.iter().map(IntervalTerms::total).sum();
        LogLikBreakdown { intervals, total }
    }

    pub fn girsanov(&self) -> f64 {
        self.intervals.iter().map(|t| t.girsanov).sum()
    }

    pub fn endpoint(&self) -> f64 {
        self.intervals.iter().map(|t| t.endpoint).sum()
    }

    pub fn jacobian(&self) -> f64 {
        self.intervals.iter().map(|t| t.jacobian).sum()
    }

    pub fn price(&self) -> f64 {
        self.intervals.iter().map(|t| t.price).sum()
    }
}

fn evaluate<M: Diffusion + ?Sized>(
    ctx: &TransformContext<'_, M>,
    obs: &ObservationSet,
    path: &AugmentedPath,
    regime: Regime,
) -> Result<LogLikBreakdown> {
    let engine = Engine::new(ctx.model(), obs, regime, path.m())?;
    engine.check_path(path)?;
    let prep = engine.prepare(ctx.chol(), ctx.theta())?;
    let mut scratch = engine.scratch();
    let mut terms = Vec::with_capacity(obs.intervals());
    for k in 0..obs.intervals() {
        match engine.eval_interval(&prep, path, k, &mut scratch) {
            Some(t) => terms.push(t),
            None => {
                return Err(Error::Domain {
                    component: 0,
                    value: f64::NAN,
                })
            }
        }
    }
    Ok(LogLikBreakdown::from_terms(terms))
}

/// Reparametrised likelihood of centered bridges `z` for a fully observed,
/// fully reducible model.
pub fn loglik_reparam<M: Diffusion + ?Sized>(
    ctx: &TransformContext<'_, M>,
    obs: &ObservationSet,
    path: &AugmentedPath,
) -> Result<LogLikBreakdown> {
    if ctx.model().transformed_dim() != ctx.model().dim() {
        return Err(Error::arg(
            "model is only partially reducible; use loglik_sv with an observation regime",
        ));
    }
    evaluate(ctx, obs, path, Regime::Observed)
}

/// Likelihood for stochastic-volatility models: transformed volatility
/// paths plus the conditional price likelihood. In the latent regime the
/// volatility endpoint and Jacobian terms are absent.
pub fn loglik_sv<M: Diffusion + ?Sized>(
    ctx: &TransformContext<'_, M>,
    obs: &ObservationSet,
    path: &AugmentedPath,
    regime: Regime,
) -> Result<LogLikBreakdown> {
    if ctx.model().transformed_dim() == ctx.model().dim() {
        return Err(Error::arg("model has no price block; use loglik_reparam"));
    }
    evaluate(ctx, obs, path, regime)
}
