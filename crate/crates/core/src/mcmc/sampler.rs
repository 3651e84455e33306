use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::bridge::{drift_log_g, sample_bridge, LinearDrift};
use super::prior::{log_prior_ratio, PriorSpec};
use crate::cholesky::{chol_to_corr, CholeskyFactor, SparsityMask};
use crate::error::{Error, Result};
use crate::likelihood::{AugmentedPath, Engine, IntervalTerms, Prepared, Regime, Scratch};
use crate::model::{Diffusion, ObservationSet};
use crate::reparam::MAX_STACK;

/// Path proposal law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Brownian bridge.
    A,
    /// Linear diffusion bridge with the four-term acceptance ratio.
    B,
}

/// Drift of the method-B proposal bridge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BridgeDrift {
    /// `L ≡ 0`: method B coincides with method A.
    Zero,
    /// `L` linear in `u`, matching the target drift at the block ends.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalConfig {
    pub method: Method,
    pub bridge_drift: BridgeDrift,
    /// Interior points per bridge block. `None`: whole interval interiors
    /// (observed regime) or `m + 1` rows (latent regime).
    pub block_size: Option<usize>,
    /// Random-walk scale per drift parameter (log scale for positive ones).
    /// A zero scale holds the parameter at its initial value.
    pub theta_scales: Vec<f64>,
    /// Initial random-walk scale for every free entry of `C` (log scale on
    /// the diagonal). Zero holds `C` fixed.
    pub chol_scale: f64,
    /// Random-walk scale of the latent starting point `U₀`.
    pub anchor_scale: f64,
    /// Robbins-Monro tuning of all random-walk scales during warm-up.
    pub auto_tune: bool,
    pub target_acceptance: f64,
}

impl ProposalConfig {
    pub fn new(n_theta: usize) -> Self {
        ProposalConfig {
            method: Method::A,
            bridge_drift: BridgeDrift::Zero,
            block_size: None,
            theta_scales: vec![0.1; n_theta],
            chol_scale: 0.05,
            anchor_scale: 0.1,
            auto_tune: true,
            target_acceptance: 0.25,
        }
    }

    pub fn validate(&self, n_theta: usize) -> Result<()> {
        if self.theta_scales.len() != n_theta {
            return Err(Error::config(
                "proposal.theta_scales",
                format!("expected {n_theta} scales, got {}", self.theta_scales.len()),
            ));
        }
        let positive = |v: f64| v.is_finite() && v >= 0.0;
        if !self.theta_scales.iter().all(|&v| positive(v)) || !positive(self.chol_scale) || !positive(self.anchor_scale) {
            return Err(Error::config("proposal", "scales must be finite and nonnegative"));
        }
        if let Some(b) = self.block_size {
            if b < 2 {
                return Err(Error::config("block_size", "block size must be at least 2"));
            }
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::config("target_acceptance", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Settings of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub m: usize,
    /// Total sweeps, warm-up included.
    pub sweeps: usize,
    pub warmup: usize,
    pub thin: usize,
    pub seed: u64,
    pub regime: Regime,
    pub proposal: ProposalConfig,
    /// Full likelihood recomputation against the cache every this many
    /// sweeps (0 disables).
    pub check_every: usize,
    /// Progress logging interval in sweeps (0 disables).
    pub progress_every: usize,
}

impl ChainConfig {
    pub fn new(n_theta: usize, m: usize, sweeps: usize, warmup: usize, seed: u64) -> Self {
        ChainConfig {
            m,
            sweeps,
            warmup,
            thin: 1,
            seed,
            regime: Regime::Observed,
            proposal: ProposalConfig::new(n_theta),
            check_every: 1000,
            progress_every: 0,
        }
    }

    pub fn validate(&self, n_theta: usize) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::config("thin", "must be at least 1"));
        }
        if self.warmup > self.sweeps {
            return Err(Error::config("warmup", "warm-up longer than the chain"));
        }
        self.proposal.validate(n_theta)
    }
}

/// Proposal / acceptance counts of one update type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RateCounter {
    pub proposed: u64,
    pub accepted: u64,
    /// Proposals rejected because they left the model domain.
    pub range_exits: u64,
}

impl RateCounter {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    fn add(&mut self, accepted: bool, range_exit: bool) {
        self.proposed += 1;
        self.accepted += accepted as u64;
        self.range_exits += range_exit as u64;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedRate {
    pub name: String,
    #[serde(flatten)]
    pub counter: RateCounter,
    /// Random-walk scale after warm-up.
    pub scale: f64,
}

/// Acceptance statistics over the post-warm-up sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceStats {
    /// Bridge updates pooled over intervals and components.
    pub path: RateCounter,
    pub path_by_dim: Vec<RateCounter>,
    pub chol: Vec<NamedRate>,
    pub drift: Vec<NamedRate>,
    pub anchor: Vec<NamedRate>,
}

/// One retained draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub iteration: usize,
    pub theta: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Strictly lower triangle, row-major.
    pub rho: Vec<f64>,
    /// Lower triangle of `C`, row-major.
    pub chol: Vec<f64>,
    pub loglik: f64,
}

impl SampleRecord {
    /// Parameter values in [`sample_columns`] order.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.theta
            .iter()
            .chain(&self.sigma)
            .chain(&self.rho)
            .chain(&self.chol)
            .copied()
    }
}

/// Names of the parameter columns of a [`SampleRecord`].
pub fn sample_columns(theta_names: &[String], d: usize) -> Vec<String> {
    let mut out: Vec<String> = theta_names.to_vec();
    out.extend((1..=d).map(|i| format!("sigma{i}")));
    for i in 1..=d {
        for j in 1..i {
            out.push(format!("rho{i}{j}"));
        }
    }
    for i in 1..=d {
        for j in 1..=i {
            out.push(format!("C{i}{j}"));
        }
    }
    out
}

/// Receives retained draws as they are produced.
pub trait SampleSink {
    fn push(&mut self, record: &SampleRecord) -> Result<()>;
}

/// Discards everything.
pub struct NullSink;

impl SampleSink for NullSink {
    fn push(&mut self, _record: &SampleRecord) -> Result<()> {
        Ok(())
    }
}

/// Current point of the chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub theta: Vec<f64>,
    /// Effective factor: free entries plus model-resolved diagonals.
    pub chol: CholeskyFactor,
    pub path: AugmentedPath,
    /// Cached per-interval likelihood terms.
    pub terms: Vec<IntervalTerms>,
    pub rng: ChaCha8Rng,
    pub iteration: usize,
}

impl ChainState {
    pub fn loglik(&self) -> f64 {
        self.terms.iter().map(IntervalTerms::total).sum()
    }
}

/// Starting values.
#[derive(Debug, Clone)]
pub struct Initial {
    pub theta: Vec<f64>,
    pub chol: CholeskyFactor,
    /// Starting path; `None` uses the engine default.
    pub path: Option<AugmentedPath>,
}

/// Lattice rows `first..=last` updated together.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Block {
    first: usize,
    last: usize,
    free_end: bool,
}

fn build_blocks(regime: Regime, intervals: usize, m: usize, block_size: Option<usize>) -> Vec<Block> {
    let m1 = m + 1;
    let rows = intervals * m1 + 1;
    let mut out = Vec::new();
    match regime {
        Regime::Observed => {
            if m == 0 {
                return out;
            }
            let b = block_size.unwrap_or(m).min(m);
            for iv in 0..intervals {
                let mut first = iv * m1 + 1;
                let end = iv * m1 + m;
                while first <= end {
                    let last = (first + b - 1).min(end);
                    out.push(Block { first, last, free_end: false });
                    first = last + 1;
                }
            }
        }
        Regime::Latent => {
            let b = block_size.unwrap_or(m1);
            // two staggered tilings so that block boundaries move
            let phases: &[usize] = if b >= 2 { &[0, b / 2] } else { &[0] };
            for &shift in phases {
                let mut first = 1;
                let mut last = if shift == 0 { b } else { shift };
                while first < rows {
                    let l = last.min(rows - 1);
                    out.push(Block {
                        first,
                        last: l,
                        free_end: l == rows - 1,
                    });
                    first = l + 1;
                    last = first + b - 1;
                }
            }
        }
    }
    out
}

/// Robbins-Monro step on a log scale.
#[inline]
fn adapt(log_scale: &mut f64, accepted: bool, target: f64, iteration: usize) {
    let gain = 1.0 / (iteration as f64 + 1.0).powf(0.6);
    *log_scale += gain * (if accepted { 1.0 } else { 0.0 } - target);
    *log_scale = log_scale.clamp(-20.0, 3.0);
}

/// Data-augmentation sampler over `(θ, C, Z)`.
pub struct Sampler<'a, M: Diffusion + ?Sized> {
    engine: Engine<'a, M>,
    mask: SparsityMask,
    priors: PriorSpec,
    config: ChainConfig,
    free: Vec<(usize, usize)>,
    blocks: Vec<Block>,
    prep: Prepared<'a, M>,
    state: ChainState,
    scratch: Scratch,
    proposal_terms: Vec<IntervalTerms>,
    block_terms: Vec<IntervalTerms>,
    chol_log_scale: Vec<f64>,
    theta_log_scale: Vec<f64>,
    anchor_log_scale: Vec<f64>,
    stats: AcceptanceStats,
    times_buf: Vec<f64>,
    off_buf: Vec<f64>,
    u_buf: Vec<f64>,
    old_buf: Vec<f64>,
    var_buf: Vec<f64>,
}

fn name_entry(i: usize, j: usize) -> String {
    format!("C{}{}", i + 1, j + 1)
}

impl<'a, M: Diffusion + ?Sized> Sampler<'a, M> {
    pub fn new(
        model: &'a M,
        obs: &'a ObservationSet,
        init: Initial,
        mask: SparsityMask,
        priors: PriorSpec,
        config: ChainConfig,
    ) -> Result<Self> {
        let layout = model.layout();
        config.validate(layout.len())?;
        priors.validate(layout)?;
        layout.validate(&init.theta)?;
        if mask.dim() != model.dim() || init.chol.dim() != model.dim() {
            return Err(Error::arg("mask and Cholesky factor must match the model dimension"));
        }
        mask.check(&init.chol)?;
        let engine = Engine::new(model, obs, config.regime, config.m)?;
        let chol = mask
            .resolve_fixed_scales(&init.chol, |r| model.fixed_row_scale(r, &init.theta))
            .ok_or_else(|| {
                Error::Initialization(
                    "initial off-diagonal entries exceed a model-imposed row scale; shrink them".into(),
                )
            })?;
        let prep = engine.prepare(&chol, &init.theta)?;
        let path = match init.path {
            Some(p) => {
                engine.check_path(&p)?;
                p
            }
            None => engine.initial_path(&prep)?,
        };
        let mut scratch = engine.scratch();
        let mut terms = vec![IntervalTerms::default(); engine.intervals()];
        if !engine.eval_all(&prep, &path, &mut scratch, &mut terms) || !terms.iter().all(|t| t.total().is_finite()) {
            return Err(Error::Initialization(
                "log-likelihood is not finite at the initial values; start the parameters closer to the data \
                 (for example from the moment-based guess) so that every imputed state stays inside the domain"
                    .into(),
            ));
        }
        let free = mask.free_entries();
        let k = engine.transformed_dim();
        let blocks = build_blocks(config.regime, engine.intervals(), config.m, config.proposal.block_size);
        let ln = |v: f64| if v > 0.0 { v.ln() } else { -1e3 };
        let stats = AcceptanceStats {
            path: RateCounter::default(),
            path_by_dim: vec![RateCounter::default(); k],
            chol: free
                .iter()
                .map(|&(i, j)| NamedRate {
                    name: name_entry(i, j),
                    counter: RateCounter::default(),
                    scale: config.proposal.chol_scale,
                })
                .collect(),
            drift: (0..layout.len())
                .map(|p| NamedRate {
                    name: layout.name(p).to_string(),
                    counter: RateCounter::default(),
                    scale: config.proposal.theta_scales[p],
                })
                .collect(),
            anchor: if config.regime == Regime::Latent {
                (0..k)
                    .map(|i| NamedRate {
                        name: format!("U0_{}", i + 1),
                        counter: RateCounter::default(),
                        scale: config.proposal.anchor_scale,
                    })
                    .collect()
            } else {
                Vec::new()
            },
        };
        let n = engine.intervals();
        Ok(Sampler {
            chol_log_scale: vec![ln(config.proposal.chol_scale); free.len()],
            theta_log_scale: config.proposal.theta_scales.iter().map(|&v| ln(v)).collect(),
            anchor_log_scale: vec![ln(config.proposal.anchor_scale); k],
            state: ChainState {
                theta: init.theta,
                chol,
                path,
                terms,
                rng: ChaCha8Rng::seed_from_u64(config.seed),
                iteration: 0,
            },
            engine,
            mask,
            priors,
            config,
            free,
            blocks,
            prep,
            scratch,
            proposal_terms: vec![IntervalTerms::default(); n],
            block_terms: Vec::new(),
            stats,
            times_buf: Vec::new(),
            off_buf: Vec::new(),
            u_buf: Vec::new(),
            old_buf: Vec::new(),
            var_buf: Vec::new(),
        })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn engine(&self) -> &Engine<'a, M> {
        &self.engine
    }

    pub fn acceptance(&self) -> &AcceptanceStats {
        &self.stats
    }

    fn in_warmup(&self) -> bool {
        self.state.iteration < self.config.warmup
    }

    fn tuning(&self) -> bool {
        self.config.proposal.auto_tune && self.in_warmup()
    }

    #[inline]
    fn normal(&mut self) -> f64 {
        self.state.rng.sample(StandardNormal)
    }

    #[inline]
    fn accept(&mut self, log_ratio: f64) -> bool {
        if log_ratio >= 0.0 {
            return true;
        }
        if log_ratio.is_nan() {
            return false;
        }
        let u: f64 = self.state.rng.gen();
        u.ln() < log_ratio
    }

    /// One sweep: bridges, entries of `C`, drift parameters, then `U₀`.
    pub fn sweep(&mut self) {
        let k = self.engine.transformed_dim();
        for b in 0..self.blocks.len() {
            for i in 0..k {
                self.update_block(b, i);
            }
        }
        for e in 0..self.free.len() {
            self.update_chol_entry(e);
        }
        for p in 0..self.state.theta.len() {
            self.update_drift_param(p);
        }
        if self.config.regime == Regime::Latent {
            for i in 0..k {
                self.update_anchor(i);
            }
        }
        self.state.iteration += 1;
    }

    fn update_block(&mut self, b: usize, i: usize) {
        let block = self.blocks[b];
        let k = self.engine.transformed_dim();
        let m1 = self.engine.m() + 1;
        let rows = self.engine.rows();
        let lo = block.first - 1;
        let hi = if block.free_end { block.last } else { block.last + 1 };

        self.times_buf.clear();
        self.off_buf.clear();
        self.u_buf.clear();
        self.old_buf.clear();
        for r in lo..=hi {
            let off = self.engine.offset(&self.prep, &self.state.path, r, i);
            let z = self.state.path.row(r)[i];
            self.times_buf.push(self.engine.time(r));
            self.off_buf.push(off);
            self.u_buf.push(z + off);
            self.old_buf.push(z);
        }

        let drift = self.proposal_drift(lo, hi, block.free_end, i);
        let g_old = drift_log_g(&self.times_buf, &self.u_buf, drift);
        sample_bridge(
            &mut self.state.rng,
            &self.times_buf,
            &mut self.u_buf,
            drift,
            block.free_end,
            &mut self.var_buf,
        );
        let g_new = drift_log_g(&self.times_buf, &self.u_buf, drift);
        {
            let z = self.state.path.z_mut();
            for r in block.first..=block.last {
                let idx = r - lo;
                z[r * k + i] = self.u_buf[idx] - self.off_buf[idx];
            }
        }

        let iv_lo = lo / m1;
        let iv_hi = block.last.min(rows - 2) / m1;
        self.block_terms.clear();
        let mut log_ratio = g_old - g_new;
        let mut exit = false;
        for iv in iv_lo..=iv_hi {
            match self.engine.eval_interval(&self.prep, &self.state.path, iv, &mut self.scratch) {
                Some(t) => {
                    let old = &self.state.terms[iv];
                    log_ratio += (t.girsanov + t.price) - (old.girsanov + old.price);
                    self.block_terms.push(t);
                }
                None => {
                    exit = true;
                    break;
                }
            }
        }
        let accepted = !exit && self.accept(log_ratio);
        if accepted {
            self.state.terms[iv_lo..=iv_hi].copy_from_slice(&self.block_terms);
        } else {
            let z = self.state.path.z_mut();
            for r in block.first..=block.last {
                z[r * k + i] = self.old_buf[r - lo];
            }
        }
        if !self.in_warmup() {
            self.stats.path.add(accepted, exit);
            self.stats.path_by_dim[i].add(accepted, exit);
        }
    }

    fn proposal_drift(&self, lo: usize, hi: usize, free_end: bool, i: usize) -> LinearDrift {
        if self.config.proposal.method == Method::A || self.config.proposal.bridge_drift == BridgeDrift::Zero {
            return LinearDrift::ZERO;
        }
        let k = self.engine.transformed_dim();
        let mut mu = [0.0f64; MAX_STACK];
        if !self.engine.drift_at_row(&self.prep, &self.state.path, lo, &mut mu[..k]) {
            return LinearDrift::ZERO;
        }
        let m0 = mu[i];
        if free_end {
            return LinearDrift { alpha: m0, beta: 0.0 };
        }
        if !self.engine.drift_at_row(&self.prep, &self.state.path, hi, &mut mu[..k]) {
            return LinearDrift { alpha: m0, beta: 0.0 };
        }
        let n = self.times_buf.len() - 1;
        let max_step = (0..n)
            .map(|j| self.times_buf[j + 1] - self.times_buf[j])
            .fold(0.0, f64::max);
        LinearDrift::interpolate(self.u_buf[0], m0, self.u_buf[n], mu[i], max_step)
    }

    /// Full re-evaluation at `(θ, C)`; `None` on any domain failure.
    fn evaluate_params(&mut self, theta: &[f64], chol: &CholeskyFactor) -> Option<(Prepared<'a, M>, CholeskyFactor)> {
        let model = self.engine.model();
        let chol = self
            .mask
            .resolve_fixed_scales(chol, |r| model.fixed_row_scale(r, theta))?;
        let prep = self.engine.prepare(&chol, theta).ok()?;
        if !self
            .engine
            .eval_all(&prep, &self.state.path, &mut self.scratch, &mut self.proposal_terms)
        {
            return None;
        }
        Some((prep, chol))
    }

    fn proposal_delta(&self) -> f64 {
        self.proposal_terms.iter().map(IntervalTerms::total).sum::<f64>() - self.state.loglik()
    }

    fn commit_params(&mut self, prep: Prepared<'a, M>, chol: CholeskyFactor) {
        self.prep = prep;
        self.state.chol = chol;
        std::mem::swap(&mut self.state.terms, &mut self.proposal_terms);
    }

    fn update_chol_entry(&mut self, e: usize) {
        if self.config.proposal.chol_scale == 0.0 {
            return;
        }
        let (i, j) = self.free[e];
        let scale = self.chol_log_scale[e].exp();
        let old = self.state.chol.get(i, j);
        let xi = self.normal();
        let diag = i == j;
        let new = if diag { old * (scale * xi).exp() } else { old + scale * xi };
        let prior = if diag { self.priors.chol_diagonal } else { self.priors.chol_off_diagonal };

        let mut exit = false;
        let mut accepted = false;
        if scale * xi == 0.0 {
            accepted = true;
        } else {
            let proposal = crate::cholesky::perturb_entry(&self.state.chol, &self.mask, i, j, new)
                .ok()
                .flatten();
            let theta = self.state.theta.clone();
            match proposal.and_then(|c| self.evaluate_params(&theta, &c)) {
                None => exit = true,
                Some((prep, chol)) => {
                    let log_ratio = self.proposal_delta() + log_prior_ratio(prior, old, new, diag);
                    if self.accept(log_ratio) {
                        self.commit_params(prep, chol);
                        accepted = true;
                    }
                }
            }
        }
        if self.tuning() {
            let target = self.config.proposal.target_acceptance;
            adapt(&mut self.chol_log_scale[e], accepted, target, self.state.iteration);
        }
        if !self.in_warmup() {
            self.stats.chol[e].counter.add(accepted, exit);
        }
    }

    fn update_drift_param(&mut self, p: usize) {
        if self.config.proposal.theta_scales[p] == 0.0 {
            return;
        }
        let positive = self.engine.model().layout().is_positive(p);
        let scale = self.theta_log_scale[p].exp();
        let old = self.state.theta[p];
        let xi = self.normal();
        let new = if positive { old * (scale * xi).exp() } else { old + scale * xi };

        let mut exit = false;
        let mut accepted = false;
        if scale * xi == 0.0 {
            accepted = true;
        } else if !(new.is_finite() && (!positive || new > 0.0)) {
            exit = true;
        } else {
            let mut theta = self.state.theta.clone();
            theta[p] = new;
            let chol = self.state.chol.clone();
            match self.evaluate_params(&theta, &chol) {
                None => exit = true,
                Some((prep, chol)) => {
                    let log_ratio = self.proposal_delta() + log_prior_ratio(self.priors.theta[p], old, new, positive);
                    if self.accept(log_ratio) {
                        self.commit_params(prep, chol);
                        self.state.theta = theta;
                        accepted = true;
                    }
                }
            }
        }
        if self.tuning() {
            let target = self.config.proposal.target_acceptance;
            adapt(&mut self.theta_log_scale[p], accepted, target, self.state.iteration);
        }
        if !self.in_warmup() {
            self.stats.drift[p].counter.add(accepted, exit);
        }
    }

    fn update_anchor(&mut self, i: usize) {
        let scale = self.anchor_log_scale[i].exp();
        let old = self.state.path.anchor()[i];
        let xi = self.normal();
        self.state.path.anchor_mut()[i] = old + scale * xi;
        let ok = self
            .engine
            .eval_all(&self.prep, &self.state.path, &mut self.scratch, &mut self.proposal_terms);
        let accepted = ok && {
            let log_ratio = self.proposal_delta();
            self.accept(log_ratio)
        };
        if accepted {
            std::mem::swap(&mut self.state.terms, &mut self.proposal_terms);
        } else {
            self.state.path.anchor_mut()[i] = old;
        }
        if self.tuning() {
            let target = self.config.proposal.target_acceptance;
            adapt(&mut self.anchor_log_scale[i], accepted, target, self.state.iteration);
        }
        if !self.in_warmup() {
            self.stats.anchor[i].counter.add(accepted, !ok);
        }
    }

    /// Recomputes every interval from scratch and compares with the cache.
    pub fn check_cache(&mut self) -> Result<()> {
        let prep = self.engine.prepare(&self.state.chol, &self.state.theta)?;
        let mut fresh = vec![IntervalTerms::default(); self.engine.intervals()];
        if !self.engine.eval_all(&prep, &self.state.path, &mut self.scratch, &mut fresh) {
            return Err(Error::Numerical {
                context: "likelihood cache check",
                index: self.state.iteration,
            });
        }
        for (iv, (a, b)) in fresh.iter().zip(&self.state.terms).enumerate() {
            let (a, b) = (a.total(), b.total());
            if (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
                return Err(Error::Numerical {
                    context: "likelihood cache drifted from a fresh evaluation",
                    index: iv,
                });
            }
        }
        Ok(())
    }

    /// The current draw.
    pub fn record(&self) -> SampleRecord {
        let corr = chol_to_corr(&self.state.chol);
        SampleRecord {
            iteration: self.state.iteration,
            theta: self.state.theta.clone(),
            sigma: corr.scales().to_vec(),
            rho: corr.correlations().to_vec(),
            chol: self.state.chol.lower(),
            loglik: self.state.loglik(),
        }
    }

    fn finalize_stats(&mut self) {
        for (r, ls) in self.stats.chol.iter_mut().zip(&self.chol_log_scale) {
            r.scale = ls.exp();
        }
        for (r, ls) in self.stats.drift.iter_mut().zip(&self.theta_log_scale) {
            r.scale = ls.exp();
        }
        for (r, ls) in self.stats.anchor.iter_mut().zip(&self.anchor_log_scale) {
            r.scale = ls.exp();
        }
    }

    /// Runs the configured number of sweeps.
    pub fn run(mut self, sink: &mut dyn SampleSink) -> Result<ChainOutput> {
        let cfg = self.config.clone();
        let layout = self.engine.model().layout();
        let columns = sample_columns(layout.names(), self.engine.model().dim());
        let mut samples = Vec::new();
        let mut trace = Vec::with_capacity(cfg.sweeps);
        while self.state.iteration < cfg.sweeps {
            self.sweep();
            let it = self.state.iteration;
            let ll = self.state.loglik();
            trace.push(ll);
            if cfg.check_every > 0 && it % cfg.check_every == 0 {
                self.check_cache()?;
            }
            if it > cfg.warmup && (it - cfg.warmup - 1) % cfg.thin == 0 {
                let rec = self.record();
                sink.push(&rec)?;
                samples.push(rec);
            }
            if cfg.progress_every > 0 && it % cfg.progress_every == 0 {
                log::info!(
                    "sweep {it}/{}: loglik {ll:.3}, path acceptance {:.3}",
                    cfg.sweeps,
                    self.stats.path.rate()
                );
            }
            if it == cfg.warmup && cfg.warmup > 0 {
                log::debug!("warm-up finished after {it} sweeps; proposal scales frozen");
            }
        }
        self.finalize_stats();
        Ok(ChainOutput {
            columns,
            samples,
            acceptance: self.stats,
            loglik_trace: trace,
            final_state: self.state,
        })
    }
}

/// Result of [`run_chain`].
#[derive(Debug, Clone)]
pub struct ChainOutput {
    /// Parameter column names, aligned with [`SampleRecord::values`].
    pub columns: Vec<String>,
    pub samples: Vec<SampleRecord>,
    pub acceptance: AcceptanceStats,
    /// Log-likelihood after every sweep, warm-up included.
    pub loglik_trace: Vec<f64>,
    pub final_state: ChainState,
}

impl ChainOutput {
    /// Column `name` of the retained draws.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.samples.iter().map(|s| s.values().nth(idx).unwrap()).collect())
    }
}

/// Builds a [`Sampler`] and runs it.
pub fn run_chain<M: Diffusion + ?Sized>(
    model: &M,
    obs: &ObservationSet,
    init: Initial,
    mask: SparsityMask,
    priors: PriorSpec,
    config: ChainConfig,
    sink: &mut dyn SampleSink,
) -> Result<ChainOutput> {
    log::warn!("priors are improper; propriety of the posterior is not checked");
    Sampler::new(model, obs, init, mask, priors, config)?.run(sink)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observed_blocks_tile_interiors() {
        let b = build_blocks(Regime::Observed, 2, 5, Some(2));
        let rows: Vec<(usize, usize)> = b.iter().map(|b| (b.first, b.last)).collect();
        assert_eq!(rows, vec![(1, 2), (3, 4), (5, 5), (7, 8), (9, 10), (11, 11)]);
        assert!(build_blocks(Regime::Observed, 3, 0, None).is_empty());
    }

    #[test]
    fn latent_blocks_cover_every_row_twice() {
        let rows = 3 * 4 + 1;
        let b = build_blocks(Regime::Latent, 3, 3, None);
        let mut hits = vec![0; rows];
        for blk in &b {
            for h in hits.iter_mut().take(blk.last + 1).skip(blk.first) {
                *h += 1;
            }
        }
        assert_eq!(hits[0], 0);
        assert!(hits[1..].iter().all(|&h| h == 2), "{hits:?}");
        assert!(b.iter().filter(|blk| blk.free_end).count() == 2);
        assert!(b.iter().all(|blk| blk.free_end == (blk.last == rows - 1)));
    }

    #[test]
    fn column_names() {
        let c = sample_columns(&["a".to_string()], 2);
        assert_eq!(c, vec!["a", "sigma1", "sigma2", "rho21", "C11", "C21", "C22"]);
    }
}
