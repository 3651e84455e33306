use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::cholesky::{corr_to_chol_masked, CholeskyFactor, CorrScaleSpec, SparsityMask};
use crate::error::{Error, Result};
use crate::likelihood::Regime;
use crate::mcmc::{moment_guess, BridgeDrift, ChainConfig, Initial, Method, PriorKind, PriorSpec};
use crate::model::{Diffusion, Model, ObservationSet, ParamLayout};

fn default_seed() -> u64 {
    1
}
fn default_m() -> usize {
    20
}
fn default_sweeps() -> usize {
    110_000
}
fn default_warmup() -> usize {
    10_000
}
fn default_thin() -> usize {
    10
}
fn default_method() -> Method {
    Method::A
}
fn default_bridge_drift() -> BridgeDrift {
    BridgeDrift::Zero
}
fn default_regime() -> Regime {
    Regime::Observed
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}
fn default_target() -> f64 {
    0.25
}
fn default_acf_lag() -> usize {
    100
}
fn default_check_every() -> usize {
    1000
}
fn default_n() -> usize {
    500
}
fn default_dt() -> f64 {
    1.0
}
fn default_fine_step() -> f64 {
    1e-3
}
fn default_chol_scale() -> f64 {
    0.05
}
fn default_anchor_scale() -> f64 {
    0.1
}

/// One run, as read from a TOML file. Every field except `model` has a
/// default; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Registry name, see [`Model::NAMES`].
    pub model: String,
    /// State dimension; required for models of variable dimension.
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Imputed points per observation interval.
    #[serde(default = "default_m")]
    pub m: usize,
    /// Total sweeps, warm-up included.
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    #[serde(default = "default_thin")]
    pub thin: usize,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_bridge_drift")]
    pub bridge_drift: BridgeDrift,
    #[serde(default)]
    pub block_size: Option<usize>,
    /// Observed or latent volatility (Heston only).
    #[serde(default = "default_regime")]
    pub sv_regime: Regime,
    /// Observation CSV.
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_true")]
    pub auto_tune: bool,
    #[serde(default = "default_target")]
    pub target_acceptance: f64,
    #[serde(default = "default_acf_lag")]
    pub acf_max_lag: usize,
    #[serde(default)]
    pub progress_every: usize,
    #[serde(default = "default_check_every")]
    pub check_every: usize,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub priors: PriorsSection,
    #[serde(default)]
    pub proposal: ProposalSection,
    #[serde(default)]
    pub mask: MaskSection,
    #[serde(default)]
    pub simulate: SimulateSection,
}

/// Parameter values: true values for `simulate`, starting values for `fit`.
/// Missing values are replaced by moment estimates when fitting.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    /// Drift parameters by name.
    #[serde(default)]
    pub theta: BTreeMap<String, f64>,
    /// Row scales `c_i`.
    #[serde(default)]
    pub sigma: Option<Vec<f64>>,
    /// Strict lower triangle of the correlation matrix, row-major.
    #[serde(default)]
    pub rho: Option<Vec<f64>>,
}

/// Prior tags; anything not listed keeps its default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorsSection {
    #[serde(default)]
    pub theta: BTreeMap<String, PriorKind>,
    #[serde(default)]
    pub chol_diagonal: Option<PriorKind>,
    #[serde(default)]
    pub chol_off_diagonal: Option<PriorKind>,
}

/// Initial random-walk scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalSection {
    /// Per drift parameter; default 0.1.
    #[serde(default)]
    pub theta: BTreeMap<String, f64>,
    #[serde(default = "default_chol_scale")]
    pub chol: f64,
    #[serde(default = "default_anchor_scale")]
    pub anchor: f64,
}

impl Default for ProposalSection {
    fn default() -> Self {
        ProposalSection {
            theta: BTreeMap::new(),
            chol: default_chol_scale(),
            anchor: default_anchor_scale(),
        }
    }
}

/// Sparsity pattern with 1-based indices. Absent lists fall back to the
/// model default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskSection {
    /// Pairs `[i, j]`, `i > j`, whose correlation is pinned to zero.
    #[serde(default)]
    pub zero_correlations: Option<Vec<[usize; 2]>>,
    /// Rows whose diagonal is fixed by the model.
    #[serde(default)]
    pub fixed_scale_rows: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// Number of observation intervals.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Observation spacing.
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Euler step; must divide `dt`.
    #[serde(default = "default_fine_step")]
    pub fine_step: f64,
    /// Starting state; defaults to the stationary levels (0 where none).
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Also write the fine path.
    #[serde(default)]
    pub write_path: bool,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            n: default_n(),
            dt: default_dt(),
            fine_step: default_fine_step(),
            x0: None,
            write_path: false,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub m: Option<usize>,
    pub sweeps: Option<usize>,
    pub warmup: Option<usize>,
    pub thin: Option<usize>,
    pub method: Option<Method>,
    pub sv_regime: Option<Regime>,
    pub input: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

/// Name of the key on the line that a TOML error points at.
fn key_at(text: &str, err: &toml::de::Error) -> String {
    let Some(span) = err.span() else {
        return "<config>".into();
    };
    let start = text[..span.start.min(text.len())].rfind('\n').map_or(0, |p| p + 1);
    let line = text[start..].lines().next().unwrap_or("");
    match line.split_once('=') {
        Some((k, _)) => k.trim().to_string(),
        None => line.trim().to_string(),
    }
}

impl RunConfig {
    /// Parses and validates a TOML document.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg = Self::parse_unvalidated(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses without the cross-field checks, for callers that apply
    /// [`Overrides`] first.
    pub fn parse_unvalidated(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            key: key_at(text, &e),
            message: e.message().to_string(),
        })
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Applies command-line overrides and revalidates.
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = &o.$f { self.$f = v.clone(); })* };
        }
        set!(seed, m, sweeps, warmup, thin, method, sv_regime, output_dir);
        if let Some(p) = &o.input {
            self.input = Some(p.clone());
        }
        self.validate()
    }

    pub fn build_model(&self) -> Result<Model> {
        let model = Model::from_name(&self.model, self.dim.unwrap_or(0))
            .map_err(|e| match e {
                Error::Argument(msg) => Error::config("dim", msg),
                other => other,
            })?;
        if let Some(d) = self.dim {
            if d != model.dim() {
                return Err(Error::config(
                    "dim",
                    format!("model `{}` has dimension {}", self.model, model.dim()),
                ));
            }
        }
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let model = self.build_model()?;
        let d = model.dim();
        let layout = model.layout();
        if self.sweeps <= self.warmup {
            return Err(Error::config("sweeps", "must exceed warmup"));
        }
        if self.thin == 0 {
            return Err(Error::config("thin", "must be at least 1"));
        }
        if let Some(b) = self.block_size {
            if b < 2 {
                return Err(Error::config("block_size", "must be at least 2"));
            }
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::config("target_acceptance", "must lie in (0, 1)"));
        }
        if self.sv_regime == Regime::Latent && model.transformed_dim() >= d {
            return Err(Error::config(
                "sv_regime",
                format!("model `{}` has no latent components", self.model),
            ));
        }
        let known = |section: &str, map_keys: &mut dyn Iterator<Item = &String>| -> Result<()> {
            for k in map_keys {
                if layout.index_of(k).is_none() {
                    return Err(Error::config(
                        format!("{section}.{k}"),
                        format!("unknown parameter (known: {})", layout.names().join(", ")),
                    ));
                }
            }
            Ok(())
        };
        known("params.theta", &mut self.params.theta.keys())?;
        known("priors.theta", &mut self.priors.theta.keys())?;
        known("proposal.theta", &mut self.proposal.theta.keys())?;
        if let Some(s) = &self.params.sigma {
            if s.len() != d {
                return Err(Error::config("params.sigma", format!("expected {d} values")));
            }
        }
        if let Some(r) = &self.params.rho {
            if r.len() != d * (d - 1) / 2 {
                return Err(Error::config(
                    "params.rho",
                    format!("expected {} values", d * (d - 1) / 2),
                ));
            }
        }
        if !(self.proposal.chol >= 0.0 && self.proposal.anchor >= 0.0)
            || self.proposal.theta.values().any(|v| !(*v >= 0.0 && v.is_finite()))
        {
            return Err(Error::config("proposal", "scales must be finite and nonnegative"));
        }
        self.build_mask(&model)?;
        let s = &self.simulate;
        if s.n == 0 || !(s.dt > 0.0 && s.dt.is_finite()) || !(s.fine_step > 0.0 && s.fine_step <= s.dt) {
            return Err(Error::config(
                "simulate",
                "need n > 0 and 0 < fine_step <= dt",
            ));
        }
        if let Some(x0) = &s.x0 {
            if x0.len() != d {
                return Err(Error::config("simulate.x0", format!("expected {d} values")));
            }
        }
        Ok(())
    }

    /// Sparsity mask with 1-based indices converted.
    pub fn build_mask(&self, model: &Model) -> Result<SparsityMask> {
        let d = model.dim();
        let default = model.default_mask();
        let pairs: Vec<(usize, usize)> = match &self.mask.zero_correlations {
            Some(p) => p
                .iter()
                .map(|&[i, j]| {
                    if i == 0 || j == 0 {
                        Err(Error::config("mask.zero_correlations", "indices are 1-based"))
                    } else {
                        Ok((i - 1, j - 1))
                    }
                })
                .collect::<Result<_>>()?,
            None => (0..d)
                .flat_map(|i| (0..i).map(move |j| (i, j)))
                .filter(|&(i, j)| default.is_zero_correlation(i, j))
                .collect(),
        };
        let rows: Vec<usize> = match &self.mask.fixed_scale_rows {
            Some(r) => r
                .iter()
                .map(|&i| {
                    if i == 0 {
                        Err(Error::config("mask.fixed_scale_rows", "indices are 1-based"))
                    } else {
                        Ok(i - 1)
                    }
                })
                .collect::<Result<_>>()?,
            None => (0..d).filter(|&i| default.is_fixed_scale(i)).collect(),
        };
        let as_config = |key: &'static str| move |e: Error| Error::config(key, e.to_string());
        let mask = SparsityMask::full(d)
            .with_zero_correlations(&pairs)
            .map_err(as_config("mask.zero_correlations"))?
            .with_fixed_scale_rows(&rows)
            .map_err(as_config("mask.fixed_scale_rows"))?;
        for &r in &rows {
            if model.fixed_row_scale(r, &vec![1.0; model.layout().len()]).is_none() {
                return Err(Error::config(
                    "mask.fixed_scale_rows",
                    format!("model `{}` does not fix the scale of row {}", self.model, r + 1),
                ));
            }
        }
        Ok(mask)
    }

    /// Drift parameters from `[params.theta]`; `None` when the table is empty.
    pub fn theta(&self, layout: &ParamLayout) -> Result<Option<Vec<f64>>> {
        if self.params.theta.is_empty() {
            return Ok(None);
        }
        let theta = layout
            .names()
            .iter()
            .map(|n| {
                self.params
                    .theta
                    .get(n)
                    .copied()
                    .ok_or_else(|| Error::config(format!("params.theta.{n}"), "missing value"))
            })
            .collect::<Result<Vec<_>>>()?;
        layout
            .validate(&theta)
            .map_err(|e| Error::config("params.theta", e.to_string()))?;
        Ok(Some(theta))
    }

    /// `C` from `[params]` sigma/rho, with model-fixed diagonals resolved.
    /// `None` when neither is given.
    pub fn chol(&self, model: &Model, theta: &[f64], mask: &SparsityMask) -> Result<Option<CholeskyFactor>> {
        let d = model.dim();
        let (sigma, rho) = match (&self.params.sigma, &self.params.rho) {
            (None, None) => return Ok(None),
            (Some(s), r) => (s.clone(), r.clone().unwrap_or_else(|| vec![0.0; d * (d - 1) / 2])),
            (None, Some(_)) => return Err(Error::config("params.sigma", "required when rho is given")),
        };
        // fixed rows take their scale from the model
        let sigma: Vec<f64> = (0..d)
            .map(|i| {
                if mask.is_fixed_scale(i) {
                    model.fixed_row_scale(i, theta).unwrap_or(sigma[i])
                } else {
                    sigma[i]
                }
            })
            .collect();
        let spec = CorrScaleSpec::new(sigma, rho).map_err(|e| Error::config("params", e.to_string()))?;
        let c = corr_to_chol_masked(&spec, mask).map_err(|e| Error::config("params.rho", e.to_string()))?;
        let c = mask
            .resolve_fixed_scales(&c, |r| model.fixed_row_scale(r, theta))
            .ok_or_else(|| Error::config("params.rho", "correlations incompatible with the fixed row scales"))?;
        Ok(Some(c))
    }

    /// Starting point of a fit: configured values where given, moment
    /// estimates otherwise.
    pub fn initial(&self, model: &Model, obs: &ObservationSet, mask: &SparsityMask) -> Result<Initial> {
        let theta = self.theta(model.layout())?;
        let needs_guess = theta.is_none() || self.params.sigma.is_none();
        let guess = if needs_guess {
            Some(moment_guess(model, obs, self.sv_regime, mask)?)
        } else {
            None
        };
        let theta = match theta {
            Some(t) => t,
            None => guess.as_ref().unwrap().0.clone(),
        };
        let chol = match self.chol(model, &theta, mask)? {
            Some(c) => c,
            None => guess.unwrap().1,
        };
        Ok(Initial { theta, chol, path: None })
    }

    pub fn priors(&self, layout: &ParamLayout) -> Result<PriorSpec> {
        let mut p = PriorSpec::default_for(layout);
        for (name, kind) in &self.priors.theta {
            let i = layout.index_of(name).expect("validated");
            p.theta[i] = *kind;
        }
        if let Some(k) = self.priors.chol_diagonal {
            p.chol_diagonal = k;
        }
        if let Some(k) = self.priors.chol_off_diagonal {
            p.chol_off_diagonal = k;
        }
        p.validate(layout)?;
        Ok(p)
    }

    pub fn chain_config(&self, layout: &ParamLayout) -> ChainConfig {
        let mut c = ChainConfig::new(layout.len(), self.m, self.sweeps, self.warmup, self.seed);
        c.thin = self.thin;
        c.regime = self.sv_regime;
        c.check_every = self.check_every;
        c.progress_every = self.progress_every;
        let p = &mut c.proposal;
        p.method = self.method;
        p.bridge_drift = self.bridge_drift;
        p.block_size = self.block_size;
        p.auto_tune = self.auto_tune;
        p.target_acceptance = self.target_acceptance;
        p.chol_scale = self.proposal.chol;
        p.anchor_scale = self.proposal.anchor;
        for (name, s) in &self.proposal.theta {
            p.theta_scales[layout.index_of(name).expect("validated")] = *s;
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "model = \"mv_cir\"\ndim = 3\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.m, 20);
        assert_eq!(c.warmup, 10_000);
        assert_eq!(c.sweeps, 110_000);
        assert_eq!(c.thin, 10);
        assert_eq!(c.method, Method::A);
        assert_eq!(c.sv_regime, Regime::Observed);
        assert_eq!(c.acf_max_lag, 100);
        assert!(c.auto_tune);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::parse(&format!("{MINIMAL}mm = 3\n")).unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("mm"), "{err}");
        let err = RunConfig::parse(&format!("{MINIMAL}[params]\nsigmas = [1.0]\n")).unwrap_err();
        assert!(err.to_string().contains("sigmas"), "{err}");
    }

    #[test]
    fn sweeps_must_exceed_warmup() {
        let err = RunConfig::parse(&format!("{MINIMAL}sweeps = 10\nwarmup = 10\n")).unwrap_err();
        assert!(err.to_string().contains("sweeps"), "{err}");
    }

    #[test]
    fn type_mismatch_names_key() {
        let err = RunConfig::parse(&format!("{MINIMAL}m = \"many\"\n")).unwrap_err();
        assert!(err.to_string().contains("`m`"), "{err}");
    }

    #[test]
    fn unknown_model_and_parameter() {
        let err = RunConfig::parse("model = \"ou\"\n").unwrap_err();
        assert!(err.to_string().contains("ou"));
        let err = RunConfig::parse(&format!("{MINIMAL}[params.theta]\nkappa9 = 1.0\n")).unwrap_err();
        assert!(err.to_string().contains("params.theta.kappa9"), "{err}");
    }

    #[test]
    fn overrides_take_precedence() {
        let mut c = RunConfig::parse(&format!("{MINIMAL}m = 5\nseed = 3\n")).unwrap();
        c.apply(&Overrides {
            m: Some(40),
            ..Default::default()
        })
        .unwrap();
        assert_eq!((c.m, c.seed), (40, 3));
    }

    #[test]
    fn heston_default_mask_and_fixed_rows() {
        let text = "model = \"bivariate_heston\"\nsv_regime = \"latent\"\n\
                    [params]\nsigma = [0.1, 0.1, 1.0, 1.0]\nrho = [0.3, 0, 0, 0, 0, 0.5]\n\
                    [params.theta]\nkappa1 = 1.5\nkappa2 = 2.0\nmu1 = 0.2\nmu2 = 0.25\nmu3 = 0.0\nmu4 = 0.0\n";
        let c = RunConfig::parse(text).unwrap();
        let model = c.build_model().unwrap();
        let mask = c.build_mask(&model).unwrap();
        assert!(mask.is_zero_correlation(2, 0) && mask.is_fixed_scale(3));
        let theta = c.theta(model.layout()).unwrap().unwrap();
        let chol = c.chol(&model, &theta, &mask).unwrap().unwrap();
        let row3: f64 = (0..4).map(|j| chol.get(2, j).powi(2)).sum();
        assert!((row3.sqrt() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn latent_regime_needs_latent_components() {
        let err = RunConfig::parse(&format!("{MINIMAL}sv_regime = \"latent\"\n")).unwrap_err();
        assert!(err.to_string().contains("sv_regime"));
    }
}
