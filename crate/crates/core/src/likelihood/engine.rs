use serde::{Deserialize, Serialize};

use super::price::price_block_loglik;
use crate::cholesky::CholeskyFactor;
use crate::error::{Error, Result};
use crate::model::{Diffusion, ObservationSet, PathLattice};
use crate::reparam::{TransformContext, MAX_STACK};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// How the transformed block relates to the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Every component is observed exactly; bridges are pinned at both ends.
    #[serde(alias = "exact")]
    Observed,
    /// The transformed components are never observed. Only the remaining
    /// (price) components are data, and `Z = U - U₀`.
    Latent,
}

/// Likelihood contributions of one interval.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalTerms {
    pub girsanov: f64,
    pub endpoint: f64,
    pub jacobian: f64,
    pub price: f64,
}

impl IntervalTerms {
    #[inline]
    pub fn total(&self) -> f64 {
        self.girsanov + self.endpoint + self.jacobian + self.price
    }
}

#[inline]
fn lerp(a: f64, b: f64, frac: f64) -> f64 {
    a + frac * (b - a)
}

/// Imputed transformed paths stored on one global lattice with
/// `intervals * (m + 1) + 1` rows of `k` centered coordinates.
///
/// In the observed regime rows at observation times are exactly zero. In the
/// latent regime row 0 is zero and `anchor` carries `U₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPath {
    m: usize,
    k: usize,
    z: Vec<f64>,
    anchor: Vec<f64>,
}

impl AugmentedPath {
    /// All-zero centered path.
    pub fn zeros(intervals: usize, m: usize, k: usize) -> Self {
        AugmentedPath {
            m,
            k,
            z: vec![0.0; (intervals * (m + 1) + 1) * k],
            anchor: vec![0.0; k],
        }
    }

    pub fn from_parts(m: usize, k: usize, z: Vec<f64>, anchor: Vec<f64>) -> Result<Self> {
        if k == 0 || z.len() % k != 0 || (z.len() / k).saturating_sub(1) % (m + 1) != 0 || z.len() < 2 * k {
            return Err(Error::arg("centered path does not fit an (m + 1)-step lattice"));
        }
        if anchor.len() != k {
            return Err(Error::arg("anchor length must equal the transformed dimension"));
        }
        Ok(AugmentedPath { m, k, z, anchor })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> usize {
        self.z.len() / self.k
    }

    pub fn intervals(&self) -> usize {
        (self.rows() - 1) / (self.m + 1)
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub(crate) fn z_mut(&mut self) -> &mut [f64] {
        &mut self.z
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.z[r * self.k..(r + 1) * self.k]
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub(crate) fn anchor_mut(&mut self) -> &mut [f64] {
        &mut self.anchor
    }
}

/// Interval-level likelihood evaluator for one data set and lattice.
#[derive(Debug, Clone)]
pub struct Engine<'a, M: Diffusion + ?Sized> {
    model: &'a M,
    obs: &'a ObservationSet,
    regime: Regime,
    m: usize,
    k: usize,
    d: usize,
}

/// Parameter-dependent quantities shared by all intervals.
#[derive(Debug, Clone)]
pub struct Prepared<'a, M: Diffusion + ?Sized> {
    ctx: TransformContext<'a, M>,
    /// transformed observations, observed regime only
    uobs: Vec<f64>,
    /// observation Jacobians, observed regime only
    jac: Vec<f64>,
}

impl<'a, M: Diffusion + ?Sized> Prepared<'a, M> {
    pub fn context(&self) -> &TransformContext<'a, M> {
        &self.ctx
    }

    /// Transformed observation row (observed regime).
    pub fn u_obs(&self, r: usize) -> &[f64] {
        let k = self.ctx.dim();
        &self.uobs[r * k..(r + 1) * k]
    }
}

/// Reusable buffers for [`Engine::eval_interval`].
#[derive(Debug, Clone)]
pub struct Scratch {
    u: Vec<f64>,
    x: Vec<f64>,
    db: Vec<f64>,
    state: Vec<f64>,
    drift: Vec<f64>,
}

impl<'a, M: Diffusion + ?Sized> Engine<'a, M> {
    pub fn new(model: &'a M, obs: &'a ObservationSet, regime: Regime, m: usize) -> Result<Self> {
        let d = model.dim();
        let k = model.transformed_dim();
        if k == 0 || k > MAX_STACK || d - k > MAX_STACK {
            return Err(Error::arg("unsupported model dimensions"));
        }
        let expected = match regime {
            Regime::Observed => d,
            Regime::Latent => {
                if k == d {
                    return Err(Error::arg("latent regime needs observed components outside the transformed block"));
                }
                d - k
            }
        };
        if obs.dim() != expected {
            return Err(Error::arg(format!(
                "observations have {} columns, the {:?} regime needs {expected}",
                obs.dim(),
                regime
            )));
        }
        if regime == Regime::Observed {
            for r in 0..obs.len() {
                let y = obs.row(r);
                if let Some(i) = (0..k).find(|&i| !model.in_open_domain(i, y[i])) {
                    return Err(Error::Data {
                        path: String::new(),
                        row: r + 1,
                        message: format!("component {} = {} is outside the model domain", i + 1, y[i]),
                    });
                }
            }
        }
        Ok(Engine {
            model,
            obs,
            regime,
            m,
            k,
            d,
        })
    }

    pub fn model(&self) -> &'a M {
        self.model
    }

    pub fn observations(&self) -> &'a ObservationSet {
        self.obs
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Dimension of the imputed (transformed) block.
    pub fn transformed_dim(&self) -> usize {
        self.k
    }

    pub fn intervals(&self) -> usize {
        self.obs.intervals()
    }

    pub fn rows(&self) -> usize {
        self.intervals() * (self.m + 1) + 1
    }

    /// Time of global lattice row `r`.
    #[inline]
    pub fn time(&self, r: usize) -> f64 {
        let m1 = self.m + 1;
        let iv = (r / m1).min(self.intervals() - 1);
        let j = r - iv * m1;
        let t = self.obs.times();
        if j == m1 {
            t[iv + 1]
        } else {
            t[iv] + (t[iv + 1] - t[iv]) * j as f64 / m1 as f64
        }
    }

    pub fn scratch(&self) -> Scratch {
        let m2 = self.m + 2;
        Scratch {
            u: vec![0.0; m2 * self.k],
            x: vec![0.0; m2 * self.k],
            db: vec![0.0; m2 * self.k],
            state: vec![0.0; self.d],
            drift: vec![0.0; self.d],
        }
    }

    /// Builds the parameter-dependent cache. Fails only on invalid inputs;
    /// observations are checked once in [`Engine::new`].
    pub fn prepare(&self, chol: &CholeskyFactor, theta: &[f64]) -> Result<Prepared<'a, M>> {
        let ctx = TransformContext::new(self.model, chol.clone(), theta)?;
        let (mut uobs, mut jac) = (Vec::new(), Vec::new());
        if self.regime == Regime::Observed {
            let k = self.k;
            uobs = vec![0.0; self.obs.len() * k];
            jac = Vec::with_capacity(self.obs.len());
            for r in 0..self.obs.len() {
                let y = self.obs.row(r);
                if !ctx.forward(y, &mut uobs[r * k..(r + 1) * k]) {
                    return Err(Error::Domain {
                        component: 0,
                        value: y[0],
                    });
                }
                jac.push(ctx.log_jacobian(y));
            }
        }
        Ok(Prepared { ctx, uobs, jac })
    }

    /// Checks that a path matches this lattice and regime.
    pub fn check_path(&self, path: &AugmentedPath) -> Result<()> {
        if path.dim() != self.k || path.m() != self.m || path.rows() != self.rows() {
            return Err(Error::arg("augmented path does not match the lattice"));
        }
        let pinned: Vec<usize> = match self.regime {
            Regime::Observed => (0..=self.intervals()).map(|i| i * (self.m + 1)).collect(),
            Regime::Latent => vec![0],
        };
        for r in pinned {
            if path.row(r).iter().any(|&v| v != 0.0) {
                return Err(Error::arg(format!("centered path is not zero at lattice row {r}")));
            }
        }
        if path.z.iter().chain(&path.anchor).any(|v| !v.is_finite()) {
            return Err(Error::arg("augmented path has non-finite entries"));
        }
        Ok(())
    }

    /// Starting path: straight lines between transformed observations, or a
    /// constant path at the model's typical level in the latent regime.
    pub fn initial_path(&self, prep: &Prepared<'a, M>) -> Result<AugmentedPath> {
        let mut path = AugmentedPath::zeros(self.intervals(), self.m, self.k);
        if self.regime == Regime::Latent {
            let theta = prep.ctx.theta();
            let mut level = vec![0.0; self.d];
            for (i, l) in level.iter_mut().enumerate().take(self.k) {
                *l = self
                    .model
                    .stationary_level(i, theta)
                    .ok_or_else(|| Error::Initialization("model has no typical level for latent paths".into()))?;
            }
            let mut u = vec![0.0; self.k];
            if !prep.ctx.forward(&level, &mut u) {
                return Err(Error::Initialization("typical level is outside the model domain".into()));
            }
            path.anchor = u;
        }
        Ok(path)
    }

    /// `U` at global row `r` (`iv` is the interval containing it as a left or
    /// right point).
    #[inline]
    fn fill_u(&self, prep: &Prepared<'a, M>, path: &AugmentedPath, iv: usize, j: usize, out: &mut [f64]) {
        let k = self.k;
        let m1 = self.m + 1;
        let z = path.row(iv * m1 + j);
        match self.regime {
            Regime::Observed => {
                let ua = &prep.uobs[iv * k..(iv + 1) * k];
                let ub = &prep.uobs[(iv + 1) * k..(iv + 2) * k];
                if j == 0 {
                    out.copy_from_slice(ua);
                } else if j == m1 {
                    out.copy_from_slice(ub);
                } else {
                    let frac = j as f64 / m1 as f64;
                    for i in 0..k {
                        out[i] = z[i] + lerp(ua[i], ub[i], frac);
                    }
                }
            }
            Regime::Latent => {
                for i in 0..k {
                    out[i] = z[i] + path.anchor[i];
                }
            }
        }
    }

    /// `u - z` at global row `r`, component `i`.
    #[inline]
    pub(crate) fn offset(&self, prep: &Prepared<'a, M>, path: &AugmentedPath, r: usize, i: usize) -> f64 {
        match self.regime {
            Regime::Observed => {
                let k = self.k;
                let m1 = self.m + 1;
                let iv = (r / m1).min(self.intervals() - 1);
                let j = r - iv * m1;
                let (a, b) = (prep.uobs[iv * k + i], prep.uobs[(iv + 1) * k + i]);
                match j {
                    0 => a,
                    j if j == m1 => b,
                    j => lerp(a, b, j as f64 / m1 as f64),
                }
            }
            Regime::Latent => path.anchor[i],
        }
    }

    /// Transformed drift at global row `r`; `false` outside the domain.
    pub(crate) fn drift_at_row(&self, prep: &Prepared<'a, M>, path: &AugmentedPath, r: usize, out: &mut [f64]) -> bool {
        let k = self.k;
        let m1 = self.m + 1;
        let iv = (r / m1).min(self.intervals() - 1);
        let mut u = [0.0f64; MAX_STACK];
        let mut x = [0.0f64; MAX_STACK];
        self.fill_u(prep, path, iv, r - iv * m1, &mut u[..k]);
        prep.ctx.unit_state(&u[..k], &mut x[..k], out)
    }

    /// Girsanov sum of one interval for any transformed dimension. Fills
    /// `s.x` and `s.db` when the price term needs them.
    fn girsanov_dyn(
        &self,
        prep: &Prepared<'a, M>,
        path: &AugmentedPath,
        iv: usize,
        s: &mut Scratch,
        delta: f64,
        priced: bool,
    ) -> Option<f64> {
        let k = self.k;
        let m1 = self.m + 1;
        let ctx = &prep.ctx;
        for j in 0..=m1 {
            self.fill_u(prep, path, iv, j, &mut s.u[j * k..(j + 1) * k]);
        }
        let mut mu = [0.0f64; MAX_STACK];
        let mu = &mut mu[..k];
        let mut girsanov = 0.0;
        for j in 0..m1 {
            let x = &mut s.x[j * k..(j + 1) * k];
            let (u0, u1) = (&s.u[j * k..(j + 1) * k], &s.u[(j + 1) * k..(j + 2) * k]);
            if !ctx.unit_state(u0, x, mu) {
                return None;
            }
            let mut dot = 0.0;
            let mut sq = 0.0;
            for i in 0..k {
                let du = u1[i] - u0[i];
                dot += mu[i] * du;
                sq += mu[i] * mu[i];
                if priced {
                    s.db[j * k + i] = du - mu[i] * delta;
                }
            }
            girsanov += dot - 0.5 * sq * delta;
        }
        if self.regime == Regime::Latent && iv + 1 == self.intervals() {
            // the final state must exist even though no step starts there
            let x = &mut s.x[m1 * k..(m1 + 1) * k];
            if !ctx.backward(&s.u[m1 * k..(m1 + 1) * k], x) {
                return None;
            }
        }
        Some(girsanov)
    }

    /// Same as [`Self::girsanov_dyn`] with the dimension known at compile
    /// time, which lets the small matrix products unroll.
    #[inline(always)]
    fn girsanov_fixed<const K: usize>(
        &self,
        prep: &Prepared<'a, M>,
        path: &AugmentedPath,
        iv: usize,
        s: &mut Scratch,
        delta: f64,
        priced: bool,
    ) -> Option<f64> {
        let ctx = &prep.ctx;
        let m1 = self.m + 1;
        let (bl, bi) = (ctx.block(), ctx.block_inverse());
        let mut dm = [[0.0f64; K]; K];
        let mut di = [[0.0f64; K]; K];
        for i in 0..K {
            for l in 0..=i {
                dm[i][l] = bl[i * K + l];
                di[i][l] = bi[i * K + l];
            }
        }
        let mut v = [0.0f64; K];
        v.copy_from_slice(ctx.v_diag());
        let theta = ctx.theta();
        let z = path.z();
        let base = iv * m1;
        let observed = self.regime == Regime::Observed;
        let (mut ua, mut ub) = ([0.0f64; K], [0.0f64; K]);
        if observed {
            ua.copy_from_slice(&prep.uobs[iv * K..(iv + 1) * K]);
            ub.copy_from_slice(&prep.uobs[(iv + 1) * K..(iv + 2) * K]);
        } else {
            ua.copy_from_slice(&path.anchor);
        }
        let row_u = |j: usize| -> [f64; K] {
            let mut u = [0.0f64; K];
            let zr = &z[(base + j) * K..(base + j + 1) * K];
            if observed {
                if j == 0 {
                    return ua;
                }
                if j == m1 {
                    return ub;
                }
                let frac = j as f64 / m1 as f64;
                for i in 0..K {
                    u[i] = zr[i] + lerp(ua[i], ub[i], frac);
                }
            } else {
                for i in 0..K {
                    u[i] = zr[i] + ua[i];
                }
            }
            u
        };

        let mut u0 = row_u(0);
        let mut girsanov = 0.0;
        for j in 0..m1 {
            let u1 = row_u(j + 1);
            let mut sv = [0.0f64; K];
            for i in 0..K {
                let mut acc = 0.0;
                for l in 0..=i {
                    acc += dm[i][l] * u0[l];
                }
                sv[i] = acc;
            }
            let mut x = [0.0f64; K];
            let mut w = [0.0f64; K];
            if !self.model.unit_drift_terms(&sv, theta, &v, &mut x, &mut w) {
                return None;
            }
            let mut dot = 0.0;
            let mut sq = 0.0;
            for i in 0..K {
                let mut mu = 0.0;
                for l in 0..=i {
                    mu += di[i][l] * w[l];
                }
                let du = u1[i] - u0[i];
                dot += mu * du;
                sq += mu * mu;
                if priced {
                    s.db[j * K + i] = du - mu * delta;
                }
            }
            if priced {
                s.x[j * K..(j + 1) * K].copy_from_slice(&x);
            }
            girsanov += dot - 0.5 * sq * delta;
            u0 = u1;
        }
        if !observed && iv + 1 == self.intervals() {
            let mut x = [0.0f64; K];
            if !ctx.backward(&u0, &mut x) {
                return None;
            }
        }
        Some(girsanov)
    }

    /// Likelihood terms of interval `iv`. `None` when the path leaves the
    /// image of `H` or a term is not finite.
    pub fn eval_interval(
        &self,
        prep: &Prepared<'a, M>,
        path: &AugmentedPath,
        iv: usize,
        s: &mut Scratch,
    ) -> Option<IntervalTerms> {
        let k = self.k;
        let m1 = self.m + 1;
        let ctx = &prep.ctx;
        let times = self.obs.times();
        let span = times[iv + 1] - times[iv];
        let delta = span / m1 as f64;
        let priced = self.d > k;

        let girsanov = match k {
            1 => self.girsanov_fixed::<1>(prep, path, iv, s, delta, priced),
            2 => self.girsanov_fixed::<2>(prep, path, iv, s, delta, priced),
            3 => self.girsanov_fixed::<3>(prep, path, iv, s, delta, priced),
            4 => self.girsanov_fixed::<4>(prep, path, iv, s, delta, priced),
            _ => self.girsanov_dyn(prep, path, iv, s, delta, priced),
        }?;
        if !girsanov.is_finite() {
            return None;
        }

        let mut terms = IntervalTerms {
            girsanov,
            ..IntervalTerms::default()
        };
        if self.regime == Regime::Observed {
            let mut sq = 0.0;
            for i in 0..k {
                let du = prep.uobs[(iv + 1) * k + i] - prep.uobs[iv * k + i];
                sq += du * du;
            }
            terms.endpoint = -0.5 * k as f64 * (LN_2PI + span.ln()) - 0.5 * sq / span;
            terms.jacobian = prep.jac[iv + 1];
        }
        if priced {
            let (prev, next) = match self.regime {
                Regime::Observed => (&self.obs.row(iv)[k..], &self.obs.row(iv + 1)[k..]),
                Regime::Latent => (self.obs.row(iv), self.obs.row(iv + 1)),
            };
            terms.price = price_block_loglik(
                self.model,
                ctx.chol(),
                ctx.theta(),
                prev,
                next,
                &s.x[..m1 * k],
                &s.db[..m1 * k],
                |_| delta,
                &mut s.state,
                &mut s.drift,
            );
            if !terms.price.is_finite() {
                return None;
            }
        }
        Some(terms)
    }

    /// Evaluates every interval into `out`; `false` on the first failure.
    pub fn eval_all(
        &self,
        prep: &Prepared<'a, M>,
        path: &AugmentedPath,
        s: &mut Scratch,
        out: &mut [IntervalTerms],
    ) -> bool {
        for (iv, slot) in out.iter_mut().enumerate() {
            match self.eval_interval(prep, path, iv, s) {
                Some(t) => *slot = t,
                None => return false,
            }
        }
        true
    }

    /// Transformed-block states on the full lattice.
    pub fn states(&self, prep: &Prepared<'a, M>, path: &AugmentedPath) -> Result<PathLattice> {
        self.check_path(path)?;
        let k = self.k;
        let m1 = self.m + 1;
        let rows = self.rows();
        let mut states = vec![0.0; rows * k];
        let mut u = vec![0.0; k];
        for r in 0..rows {
            let iv = (r / m1).min(self.intervals() - 1);
            let j = r - iv * m1;
            let x = &mut states[r * k..(r + 1) * k];
            if self.regime == Regime::Observed && j % m1 == 0 {
                x.copy_from_slice(&self.obs.row(r / m1)[..k]);
                continue;
            }
            self.fill_u(prep, path, iv, j, &mut u);
            if !prep.ctx.backward(&u, x) {
                return Err(Error::Domain {
                    component: 0,
                    value: u[0],
                });
            }
        }
        let times = (0..rows).map(|r| self.time(r)).collect();
        PathLattice::new(times, states, k)?.with_obs_index((0..=self.intervals()).map(|i| i * m1).collect())
    }

    /// Centered representation of a state lattice (at least `k` columns)
    /// under the prepared parameters.
    pub fn augment(&self, prep: &Prepared<'a, M>, lattice: &PathLattice) -> Result<AugmentedPath> {
        let k = self.k;
        let m1 = self.m + 1;
        if lattice.len() != self.rows() || lattice.dim() < k {
            return Err(Error::arg("state lattice does not match the augmentation level"));
        }
        for (r, &t) in lattice.times().iter().enumerate() {
            if (t - self.time(r)).abs() > 1e-9 * (1.0 + t.abs()) {
                return Err(Error::arg(format!("lattice time at row {r} does not match the observation grid")));
            }
        }
        let mut path = AugmentedPath::zeros(self.intervals(), self.m, k);
        let mut u = vec![0.0; k];
        for r in 0..self.rows() {
            if !prep.ctx.forward(lattice.row(r), &mut u) {
                return Err(Error::Domain {
                    component: 0,
                    value: lattice.row(r)[0],
                });
            }
            match self.regime {
                Regime::Observed => {
                    if r % m1 == 0 {
                        continue;
                    }
                    for i in 0..k {
                        let off = self.offset(prep, &path, r, i);
                        path.z[r * k + i] = u[i] - off;
                    }
                }
                Regime::Latent => {
                    if r == 0 {
                        path.anchor.copy_from_slice(&u);
                    } else {
                        for i in 0..k {
                            path.z[r * k + i] = u[i] - path.anchor[i];
                        }
                    }
                }
            }
        }
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BrownianDrift, MvCir};

    #[test]
    fn single_interval_standard_normal_endpoint() {
        let model = BrownianDrift::new(1).unwrap();
        let obs = ObservationSet::new(vec![0.0, 1.0], vec![0.0, 0.0], 1).unwrap();
        let engine = Engine::new(&model, &obs, Regime::Observed, 3).unwrap();
        let prep = engine.prepare(&CholeskyFactor::identity(1), &[0.0]).unwrap();
        let path = engine.initial_path(&prep).unwrap();
        let mut s = engine.scratch();
        let t = engine.eval_interval(&prep, &path, 0, &mut s).unwrap();
        assert!((t.endpoint + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-14);
        assert_eq!(t.girsanov, 0.0);
        assert_eq!(t.jacobian, 0.0);
    }

    #[test]
    fn augment_and_states_round_trip() {
        let model = MvCir::new(2).unwrap();
        let theta = MvCir::theta(&[0.2, 0.3], &[2.0, 3.0]);
        let obs = ObservationSet::new(vec![0.0, 1.0, 2.5], vec![2.0, 3.0, 2.2, 2.9, 1.9, 3.3], 2).unwrap();
        let engine = Engine::new(&model, &obs, Regime::Observed, 2).unwrap();
        let chol = CholeskyFactor::from_lower(2, &[0.4, 0.1, 0.3]).unwrap();
        let prep = engine.prepare(&chol, &theta).unwrap();
        let mut path = engine.initial_path(&prep).unwrap();
        path.z_mut()[2] = 0.05;
        path.z_mut()[9] = -0.1;
        let lattice = engine.states(&prep, &path).unwrap();
        let back = engine.augment(&prep, &lattice).unwrap();
        for (a, b) in path.z().iter().zip(back.z()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn range_exit_is_reported_as_none() {
        let model = MvCir::new(1).unwrap();
        let theta = MvCir::theta(&[0.2], &[2.0]);
        let obs = ObservationSet::new(vec![0.0, 1.0], vec![1.0, 1.0], 1).unwrap();
        let engine = Engine::new(&model, &obs, Regime::Observed, 1).unwrap();
        let prep = engine.prepare(&CholeskyFactor::identity(1), &theta).unwrap();
        let mut path = engine.initial_path(&prep).unwrap();
        path.z_mut()[1] = -5.0;
        let mut s = engine.scratch();
        assert!(engine.eval_interval(&prep, &path, 0, &mut s).is_none());
    }
}
