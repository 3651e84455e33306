use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ParamLayout;

/// Prior density on one scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    /// `p(x) ∝ 1 / x` on `x > 0`.
    Reciprocal,
    /// `p(x) ∝ 1`.
    Flat,
}

impl PriorKind {
    /// Unnormalised log density. Reciprocal priors give `-inf` off the
    /// positive half-line.
    #[inline]
    pub fn log_density(self, x: f64) -> f64 {
        match self {
            PriorKind::Reciprocal if x > 0.0 => -x.ln(),
            PriorKind::Reciprocal => f64::NEG_INFINITY,
            PriorKind::Flat => 0.0,
        }
    }
}

/// Priors for the drift parameters and the entries of `C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub theta: Vec<PriorKind>,
    pub chol_diagonal: PriorKind,
    pub chol_off_diagonal: PriorKind,
}

impl PriorSpec {
    /// Reciprocal priors on positive parameters and on the diagonal of `C`,
    /// flat elsewhere.
    pub fn default_for(layout: &ParamLayout) -> Self {
        PriorSpec {
            theta: (0..layout.len())
                .map(|i| {
                    if layout.is_positive(i) {
                        PriorKind::Reciprocal
                    } else {
                        PriorKind::Flat
                    }
                })
                .collect(),
            chol_diagonal: PriorKind::Reciprocal,
            chol_off_diagonal: PriorKind::Flat,
        }
    }

    /// Tags must line up with the layout; reciprocal priors only on positive
    /// parameters.
    pub fn validate(&self, layout: &ParamLayout) -> Result<()> {
        if self.theta.len() != layout.len() {
            return Err(Error::config(
                "priors",
                format!("expected {} tags, got {}", layout.len(), self.theta.len()),
            ));
        }
        for (i, p) in self.theta.iter().enumerate() {
            if *p == PriorKind::Reciprocal && !layout.is_positive(i) {
                return Err(Error::config(
                    format!("priors.{}", layout.name(i)),
                    "reciprocal prior on a parameter that is not constrained positive",
                ));
            }
        }
        if self.chol_off_diagonal == PriorKind::Reciprocal {
            return Err(Error::config(
                "priors.chol_off_diagonal",
                "off-diagonal entries of C are unconstrained; use a flat prior",
            ));
        }
        Ok(())
    }
}

/// Log prior ratio plus the Jacobian of a log-scale random walk:
/// `log p(x') - log p(x) + log x' - log x` when `log_scale`.
#[inline]
pub(crate) fn log_prior_ratio(kind: PriorKind, old: f64, new: f64, log_scale: bool) -> f64 {
    let mut r = kind.log_density(new) - kind.log_density(old);
    if log_scale {
        r += new.ln() - old.ln();
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_prior_is_flat_on_log_scale() {
        for (a, b) in [(0.3, 0.7), (2.0, 1e-3), (5.0, 5.0)] {
            assert_eq!(log_prior_ratio(PriorKind::Reciprocal, a, b, true), 0.0);
        }
    }

    #[test]
    fn flat_prior_on_log_scale_keeps_jacobian() {
        let r = log_prior_ratio(PriorKind::Flat, 1.0, std::f64::consts::E, true);
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn validate_rejects_reciprocal_on_signed_parameter() {
        let layout = ParamLayout::new(vec![("a".into(), true), ("b".into(), false)]);
        let mut p = PriorSpec::default_for(&layout);
        assert_eq!(p.theta, vec![PriorKind::Reciprocal, PriorKind::Flat]);
        assert!(p.validate(&layout).is_ok());
        p.theta[1] = PriorKind::Reciprocal;
        assert!(p.validate(&layout).is_err());
    }
}
