//! Acceptance suite. Prints one PASS/FAIL line per criterion. Exits non-zero
//! on a failure only when CORRDIFF_ACCEPTANCE_STRICT=1.

use std::time::Instant;

use corrdiff::cholesky::{chol_to_corr, corr_to_chol, corr_to_chol_masked, CholeskyFactor, CorrScaleSpec, SparsityMask};
use corrdiff::io::{cmd_fit, cmd_simulate, read_samples, RunConfig};
use corrdiff::likelihood::{euler_loglik, heston_price_loglik, Engine, IntervalTerms, Regime};
use corrdiff::mcmc::{
    autocorrelation, integrated_autocorrelation_time, moment_guess, run_chain, summarize, wasserstein1, ChainConfig,
    ChainOutput, Initial, NullSink, PriorSpec,
};
use corrdiff::model::{
    build_bivariate_heston, build_mv_cir, quadratic_variation, simulate_euler, BrownianDrift, Diffusion, Model,
    ObservationSet, PathLattice,
};
use corrdiff::reparam::{transform_h, TransformContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// benchmark design
const KAPPA: [f64; 3] = [0.2, 0.15, 0.22];
const MU: [f64; 3] = [2.5, 3.0, 2.0];
const SIGMA: [f64; 3] = [0.45, 0.35, 0.40];
const RHO: [f64; 3] = [0.45, 0.35, 0.55];
const N_OBS: usize = 500;
const DATA_SEED: u64 = 2024;
/// Reported posterior SDs, in the order κ1..3, μ1..3, σ1..3, ρ21, ρ31, ρ32.
const REPORTED_SD: [f64; 12] = [0.025, 0.031, 0.030, 0.167, 0.366, 0.094, 0.016, 0.012, 0.014, 0.034, 0.041, 0.033];
const REPLICATION_SDS: f64 = 3.0;
const REPLICATION_WARMUP: usize = 10_000;
const REPLICATION_KEPT: usize = 50_000;
const MIN_PATH_ACCEPTANCE: f64 = 0.90;
const ACF_LAG: usize = 50;
const MAX_ACF_AT_80: f64 = 0.5;
const LEVEL_WARMUP: usize = 2_000;
const LEVEL_KEPT: usize = 8_000;
const ORACLE_PAIRS: usize = 10;
const ORACLE_REL_TOL: f64 = 0.01;
const QV_REL_TOL: f64 = 0.05;
const CONJUGATE_SES: f64 = 3.0;
const BIJECTION_CASES: usize = 1000;
const BIJECTION_TOL: f64 = 1e-12;
const CLOSED_FORM_TOL: f64 = 1e-8;

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn cir_truth() -> (Model, Vec<f64>, CholeskyFactor) {
    let (model, theta) = build_mv_cir(&KAPPA, &MU).unwrap();
    let chol = corr_to_chol(&CorrScaleSpec::new(SIGMA.to_vec(), RHO.to_vec()).unwrap()).unwrap();
    (Model::MvCir(model), theta, chol)
}

fn benchmark_data() -> ObservationSet {
    let (model, theta, chol) = cir_truth();
    let path = simulate_euler(&model, &chol, &theta, &MU, N_OBS as f64, 1e-3, DATA_SEED).unwrap();
    path.subsample(1000, &[0, 1, 2]).unwrap()
}

fn cir_chain(obs: &ObservationSet, m: usize, warmup: usize, kept: usize, seed: u64) -> ChainOutput {
    let model = cir_truth().0;
    let mask = SparsityMask::full(3);
    let (theta, chol) = moment_guess(&model, obs, Regime::Observed, &mask).unwrap();
    let cfg = ChainConfig::new(theta.len(), m, warmup + kept, warmup, seed);
    let priors = PriorSpec::default_for(model.layout());
    run_chain(&model, obs, Initial { theta, chol, path: None }, mask, priors, cfg, &mut NullSink).unwrap()
}

fn lag_acf(x: &[f64], lag: usize) -> (f64, f64) {
    let (acf, _) = autocorrelation(x, lag).unwrap();
    // Bartlett standard error at `lag`
    let var = 1.0 + 2.0 * acf[1..lag].iter().map(|r| r * r).sum::<f64>();
    (acf[lag], (var / x.len() as f64).sqrt())
}

const C_ENTRIES: [&str; 6] = ["C11", "C21", "C22", "C31", "C32", "C33"];

fn replication(obs: &ObservationSet, out: &mut Vec<Outcome>) -> ChainOutput {
    let t = Instant::now();
    let chain = cir_chain(obs, 20, REPLICATION_WARMUP, REPLICATION_KEPT, 1);
    let truth: Vec<f64> = KAPPA.iter().chain(&MU).chain(&SIGMA).chain(&RHO).copied().collect();
    let names = [
        "kappa1", "kappa2", "kappa3", "mu1", "mu2", "mu3", "sigma1", "sigma2", "sigma3", "rho21", "rho31", "rho32",
    ];
    let mut worst = (0.0f64, "");
    let mut table = String::new();
    for (i, name) in names.iter().enumerate() {
        let mean = summarize(&chain.column(name).unwrap()).unwrap().mean;
        let z = (mean - truth[i]).abs() / REPORTED_SD[i];
        if z > worst.0 {
            worst = (z, name);
        }
        table.push_str(&format!(" {name}={mean:.4}"));
    }
    out.push(Outcome {
        id: 1,
        name: "CIR replication",
        pass: worst.0 <= REPLICATION_SDS,
        detail: format!(
            "largest deviation {:.2} reported SDs ({}), limit {REPLICATION_SDS}; means:{table}; {:.0}s",
            worst.0,
            worst.1,
            t.elapsed().as_secs_f64()
        ),
    });
    let rate = chain.acceptance.path.rate();
    out.push(Outcome {
        id: 2,
        name: "path-sampler acceptance",
        pass: rate > MIN_PATH_ACCEPTANCE,
        detail: format!(
            "pooled {rate:.4} (per dimension {:?}), limit {MIN_PATH_ACCEPTANCE}",
            chain.acceptance.path_by_dim.iter().map(|r| (r.rate() * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
    });
    chain
}

fn augmentation_levels(obs: &ObservationSet, m20: &ChainOutput, out: &mut Vec<Outcome>) {
    let t = Instant::now();
    let mut chains = vec![(20, None)];
    for (s, m) in [40, 60, 80].into_iter().enumerate() {
        chains.push((m, Some(cir_chain(obs, m, LEVEL_WARMUP, LEVEL_KEPT, 10 + s as u64))));
    }
    let chain = |i: usize| chains[i].1.as_ref().unwrap_or(m20);

    let mut below = true;
    let mut monotone = Vec::new();
    let mut detail = String::new();
    for name in C_ENTRIES {
        let acfs: Vec<(f64, f64)> = (0..4).map(|i| lag_acf(&chain(i).column(name).unwrap(), ACF_LAG)).collect();
        below &= acfs[3].0 < MAX_ACF_AT_80;
        // an increase counts when it exceeds twice the combined standard error
        let increases = (0..3)
            .filter(|&i| acfs[i + 1].0 - acfs[i].0 > 2.0 * (acfs[i].1.powi(2) + acfs[i + 1].1.powi(2)).sqrt())
            .count();
        if increases > 1 {
            monotone.push(name);
        }
        detail.push_str(&format!(
            " {name}=[{}]",
            acfs.iter().map(|a| format!("{:.3}", a.0)).collect::<Vec<_>>().join(",")
        ));
    }
    out.push(Outcome {
        id: 3,
        name: "non-degeneracy across m",
        pass: below && monotone.is_empty(),
        detail: format!(
            "lag-{ACF_LAG} ACF at m=20,40,60,80:{detail}; all below {MAX_ACF_AT_80} at m=80: {below}; \
             entries with more than one significant increase: {monotone:?}"
        ),
    });

    let s = |i: usize| chain(i).column("sigma2").unwrap();
    let w_60_80 = wasserstein1(&s(2), &s(3)).unwrap();
    let w_20_80 = wasserstein1(&s(0), &s(3)).unwrap();
    let means: Vec<String> = (0..4).map(|i| format!("{:.4}", summarize(&s(i)).unwrap().mean)).collect();
    out.push(Outcome {
        id: 4,
        name: "augmentation convergence",
        pass: w_60_80 < w_20_80,
        detail: format!(
            "W1(sigma2; m=60, m=80) = {w_60_80:.5}, W1(sigma2; m=20, m=80) = {w_20_80:.5}; sigma2 means {means:?}; {:.0}s",
            t.elapsed().as_secs_f64()
        ),
    });
}

/// Euler density of a fine lattice versus the transformed-coordinate
/// likelihood plus the terms that map it back to the same lattice.
fn likelihood_oracle(out: &mut Vec<Outcome>) {
    let (model, theta0, chol0) = cir_truth();
    let (t_end, step, stride) = (20.0, 1e-4, 10_000);
    let lattice = simulate_euler(&model, &chol0, &theta0, &MU, t_end, step, 77).unwrap();
    let obs = lattice.subsample(stride, &[0, 1, 2]).unwrap();
    let m = stride - 1;
    let engine = Engine::new(&model, &obs, Regime::Observed, m).unwrap();
    let mut scratch = engine.scratch();
    let mut terms = vec![IntervalTerms::default(); engine.intervals()];

    let reparam = |theta: &[f64], chol: &CholeskyFactor, scratch: &mut _, terms: &mut Vec<IntervalTerms>| -> f64 {
        let prep = engine.prepare(chol, theta).unwrap();
        let path = engine.augment(&prep, &lattice).unwrap();
        assert!(engine.eval_all(&prep, &path, scratch, terms));
        let mut total: f64 = terms.iter().map(IntervalTerms::total).sum();
        let k = 3.0;
        let delta = 1.0 / (m + 1) as f64;
        let log_det_c: f64 = (0..3).map(|i| chol.get(i, i).ln()).sum();
        for iv in 0..engine.intervals() {
            // discrete Brownian-bridge density of the centered interior
            total += 0.5 * k * (2.0 * std::f64::consts::PI).ln();
            for j in 0..=m {
                let (a, b) = (path.row(iv * (m + 1) + j), path.row(iv * (m + 1) + j + 1));
                let sq: f64 = a.iter().zip(b).map(|(x, y)| (y - x).powi(2)).sum();
                total += -0.5 * k * (2.0 * std::f64::consts::PI * delta).ln() - sq / (2.0 * delta);
            }
            // Jacobian of x -> u at the interior rows
            for j in 1..=m {
                let x = lattice.row(iv * (m + 1) + j);
                total -= log_det_c + (0..3).map(|i| model.factor(i, x, theta).ln()).sum::<f64>();
            }
        }
        total
    };

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut draw = |vary_c: bool| -> (Vec<f64>, CholeskyFactor) {
        let theta: Vec<f64> = theta0.iter().map(|v| v * rng.gen_range(0.5..1.5)).collect();
        let chol = if vary_c {
            let s: Vec<f64> = SIGMA.iter().map(|v| v * rng.gen_range(0.8..1.2)).collect();
            let r: Vec<f64> = RHO.iter().map(|v| v + rng.gen_range(-0.1..0.1)).collect();
            corr_to_chol(&CorrScaleSpec::new(s, r).unwrap()).unwrap()
        } else {
            chol0.clone()
        };
        (theta, chol)
    };
    let mut worst = 0.0f64;
    let mut diffs = Vec::new();
    for p in 0..ORACLE_PAIRS {
        // half the pairs move only the drift parameters
        let vary_c = p % 2 == 1;
        let (ta, ca) = draw(vary_c);
        let (tb, cb) = draw(vary_c);
        let de = euler_loglik(&model, &ca, &ta, &lattice).unwrap() - euler_loglik(&model, &cb, &tb, &lattice).unwrap();
        let dr = reparam(&ta, &ca, &mut scratch, &mut terms) - reparam(&tb, &cb, &mut scratch, &mut terms);
        let rel = (dr - de).abs() / de.abs();
        worst = worst.max(rel);
        diffs.push(format!("{de:.3}/{dr:.3}"));
    }
    out.push(Outcome {
        id: 5,
        name: "likelihood oracle equivalence",
        pass: worst <= ORACLE_REL_TOL,
        detail: format!("largest relative gap {worst:.2e}, limit {ORACLE_REL_TOL}; Euler/reparametrised differences {diffs:?}"),
    });
}

fn unit_volatility(out: &mut Vec<Outcome>) {
    let (model, theta, chol) = cir_truth();
    let path = simulate_euler(&model, &chol, &theta, &MU, 10.0, 1e-4, 99).unwrap();
    let ctx = TransformContext::new(&model, chol, &theta).unwrap();
    let mut states = Vec::with_capacity(path.states().len());
    for r in 0..path.len() {
        states.extend(transform_h(&ctx, path.row(r)).unwrap());
    }
    let u = PathLattice::new(path.times().to_vec(), states, 3).unwrap();
    let qv = quadratic_variation(&u).unwrap();
    let target = nalgebra::DMatrix::<f64>::identity(3, 3) * 10.0;
    let rel = (&qv - &target).norm() / target.norm();
    out.push(Outcome {
        id: 6,
        name: "unit-volatility quadratic variation",
        pass: rel <= QV_REL_TOL,
        detail: format!(
            "relative Frobenius error {rel:.4}, limit {QV_REL_TOL}; diagonal [{:.3}, {:.3}, {:.3}]",
            qv[(0, 0)],
            qv[(1, 1)],
            qv[(2, 2)]
        ),
    });
}

fn conjugate(out: &mut Vec<Outcome>) {
    let model = BrownianDrift::new(1).unwrap();
    let chol = CholeskyFactor::identity(1);
    let path = simulate_euler(&model, &chol, &[0.3], &[0.0], 50.0, 1e-3, 3).unwrap();
    let obs = path.subsample(1000, &[0]).unwrap();
    let t_end = 50.0;
    let post_mean = (obs.row(obs.len() - 1)[0] - obs.row(0)[0]) / t_end;
    let post_var = 1.0 / t_end;

    let mut cfg = ChainConfig::new(1, 5, 22_000, 2_000, 8);
    cfg.proposal.chol_scale = 0.0;
    cfg.proposal.theta_scales = vec![0.3];
    let init = Initial {
        theta: vec![0.0],
        chol,
        path: None,
    };
    let chain = run_chain(&model, &obs, init, SparsityMask::full(1), PriorSpec::default_for(model.layout()), cfg, &mut NullSink)
        .unwrap();
    let x = chain.column("drift1").unwrap();
    let s = summarize(&x).unwrap();
    let n = x.len() as f64;
    let se_mean = (s.sd * s.sd * integrated_autocorrelation_time(&x).unwrap() / n).sqrt();
    let sq: Vec<f64> = x.iter().map(|v| (v - s.mean).powi(2)).collect();
    let sq_sd = summarize(&sq).unwrap().sd;
    let se_var = (sq_sd * sq_sd * integrated_autocorrelation_time(&sq).unwrap() / n).sqrt();
    let var = s.sd * s.sd;
    let z_mean = (s.mean - post_mean).abs() / se_mean;
    let z_var = (var - post_var).abs() / se_var;
    out.push(Outcome {
        id: 7,
        name: "conjugate posterior oracle",
        pass: z_mean <= CONJUGATE_SES && z_var <= CONJUGATE_SES,
        detail: format!(
            "mean {:.5} vs {post_mean:.5} ({z_mean:.2} SE), variance {var:.5} vs {post_var:.5} ({z_var:.2} SE), limit {CONJUGATE_SES} SE",
            s.mean
        ),
    });
}

fn random_spec(rng: &mut ChaCha8Rng, d: usize) -> CorrScaleSpec {
    let mut l = nalgebra::DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        l[(i, i)] = rng.gen_range(0.3..3.0);
        for j in 0..i {
            l[(i, j)] = rng.gen_range(-1.0..1.0);
        }
    }
    let v = &l * l.transpose();
    let mut rho = Vec::new();
    for i in 0..d {
        for j in 0..i {
            rho.push(v[(i, j)] / (v[(i, i)] * v[(j, j)]).sqrt());
        }
    }
    CorrScaleSpec::new((0..d).map(|_| rng.gen_range(0.05..5.0)).collect(), rho).unwrap()
}

fn spec_gap(a: &CorrScaleSpec, b: &CorrScaleSpec) -> f64 {
    let s = a.scales().iter().zip(b.scales()).map(|(x, y)| (x - y).abs() / x);
    let r = a.correlations().iter().zip(b.correlations()).map(|(x, y)| (x - y).abs());
    s.chain(r).fold(0.0, f64::max)
}

fn bijection(out: &mut Vec<Outcome>) {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let heston_mask = build_bivariate_heston([1.0, 1.0], [0.1, 0.1], [0.0, 0.0]).unwrap().0.default_mask();
    let mut worst = 0.0f64;
    let mut heston_cases = 0;
    for case in 0..BIJECTION_CASES {
        let (spec, mask) = if case % 4 == 3 {
            heston_cases += 1;
            let r = [rng.gen_range(-0.95..0.95), 0.0, 0.0, 0.0, 0.0, rng.gen_range(-0.95..0.95)];
            let s = (0..4).map(|_| rng.gen_range(0.05..5.0)).collect();
            (CorrScaleSpec::new(s, r.to_vec()).unwrap(), heston_mask.clone())
        } else {
            let d = rng.gen_range(1..=6);
            (random_spec(&mut rng, d), SparsityMask::full(d))
        };
        let c = corr_to_chol_masked(&spec, &mask).unwrap();
        assert!(mask.check(&c).is_ok());
        let back = chol_to_corr(&c);
        worst = worst.max(spec_gap(&spec, &back));
        let again = corr_to_chol(&back).unwrap();
        for i in 0..c.dim() {
            for j in 0..=i {
                worst = worst.max((c.get(i, j) - again.get(i, j)).abs() / spec.scales()[i]);
            }
        }
    }
    out.push(Outcome {
        id: 8,
        name: "bijection suite",
        pass: worst <= BIJECTION_TOL,
        detail: format!(
            "{BIJECTION_CASES} specs ({heston_cases} with the masked Heston pattern), largest error {worst:.2e}, limit {BIJECTION_TOL:e}"
        ),
    });
}

fn heston(out: &mut Vec<Outcome>) {
    // constant volatility and no volatility shocks: the price pair is
    // bivariate normal with variances v_i Δ and correlation ρ43
    let (model, theta) = build_bivariate_heston([1.5, 2.0], [0.2, 0.25], [0.05, -0.02]).unwrap();
    let mask = model.default_mask();
    let rho43 = 0.6;
    let spec = CorrScaleSpec::new(vec![0.3, 0.4, 0.2, 0.25], vec![0.5, 0.0, 0.0, 0.0, 0.0, rho43]).unwrap();
    let chol = mask
        .resolve_fixed_scales(&corr_to_chol_masked(&spec, &mask).unwrap(), |r| model.fixed_row_scale(r, &theta))
        .unwrap();
    let (v1, v2, delta, steps) = (0.18, 0.27, 0.5, 10);
    let times: Vec<f64> = (0..=steps).map(|j| delta * j as f64 / steps as f64).collect();
    let vols: Vec<f64> = (0..=steps).flat_map(|_| [v1, v2]).collect();
    let shocks = vec![0.0; steps * 2];
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let y0 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let y1 = [y0[0] + rng.gen_range(-0.5..0.5), y0[1] + rng.gen_range(-0.5..0.5)];
        let got = heston_price_loglik(&model, &chol, &theta, &y0, &y1, &times, &vols, &shocks).unwrap();
        let m = [(theta[4] - 0.5 * v1 * v1) * delta, (theta[5] - 0.5 * v2 * v2) * delta];
        let (s1, s2) = ((v1 * delta).sqrt(), (v2 * delta).sqrt());
        let (e1, e2) = ((y1[0] - y0[0] - m[0]) / s1, (y1[1] - y0[1] - m[1]) / s2);
        let det = 1.0 - rho43 * rho43;
        let want = -(2.0 * std::f64::consts::PI).ln()
            - (s1 * s2).ln()
            - 0.5 * det.ln()
            - (e1 * e1 - 2.0 * rho43 * e1 * e2 + e2 * e2) / (2.0 * det);
        worst = worst.max((got - want).abs());
    }
    let closed_form = worst <= CLOSED_FORM_TOL;

    // latent volatility, end to end through the batch commands
    let dir = tempfile::tempdir().unwrap();
    let cfg_text = format!(
        r#"model = "bivariate_heston"
sv_regime = "latent"
seed = 4
m = 10
sweeps = 1500
warmup = 500
thin = 1
output_dir = "{out}"
input = "{out}/observations.csv"
[params]
sigma = [0.3, 0.3, 1.0, 1.0]
rho = [0.4, 0.0, 0.0, 0.0, 0.0, 0.6]
[params.theta]
kappa1 = 2.0
kappa2 = 1.5
mu1 = 0.2
mu2 = 0.25
mu3 = 0.01
mu4 = 0.0
[simulate]
n = 200
dt = 0.1
fine_step = 0.001
"#,
        out = dir.path().display()
    );
    let run = || -> corrdiff::Result<(usize, Vec<String>, f64)> {
        let mut cfg = RunConfig::parse(&cfg_text)?;
        cmd_simulate(&cfg)?;
        // start from moment estimates rather than the truth
        cfg.params = Default::default();
        let fit = cmd_fit(&cfg)?;
        let table = read_samples(&fit.samples)?;
        let mut bad = Vec::new();
        for (name, x) in table.columns.iter().zip(&table.series) {
            let positive = name.starts_with("kappa")
                || name == "mu1"
                || name == "mu2"
                || name.starts_with("sigma")
                || matches!(name.as_str(), "C11" | "C22" | "C33" | "C44");
            if positive && x.iter().any(|v| !(*v > 0.0)) {
                bad.push(name.clone());
            }
        }
        Ok((table.series[0].len(), bad, fit.report.path_acceptance))
    };
    let (latent_ok, latent_detail) = match run() {
        Ok((n, bad, acc)) => (
            bad.is_empty() && n == 1000,
            format!("{n} draws, path acceptance {acc:.3}, non-positive columns {bad:?}"),
        ),
        Err(e) => (false, format!("run failed: {e}")),
    };
    out.push(Outcome {
        id: 9,
        name: "Heston structural suite",
        pass: closed_form && latent_ok,
        detail: format!(
            "constant-volatility closed form max gap {worst:.2e} (limit {CLOSED_FORM_TOL:e}); latent regime n=200, m=10: {latent_detail}"
        ),
    });
}

fn main() {
    // `cargo test` passes harness flags such as `--list`; only run on a plain
    // invocation or an explicit filter of "acceptance"
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    if args.iter().any(|a| !a.starts_with('-') && !"acceptance".contains(a.as_str())) {
        return;
    }
    let start = Instant::now();
    let mut out = Vec::new();
    bijection(&mut out);
    heston(&mut out);
    likelihood_oracle(&mut out);
    unit_volatility(&mut out);
    conjugate(&mut out);
    let obs = benchmark_data();
    let m20 = replication(&obs, &mut out);
    augmentation_levels(&obs, &m20, &mut out);

    out.sort_by_key(|o| o.id);
    println!();
    for o in &out {
        println!(
            "[{}] criterion {}: {}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.id,
            o.name,
            o.detail
        );
    }
    let failed = out.iter().filter(|o| !o.pass).count();
    println!(
        "acceptance: {} passed, {failed} failed in {:.0}s",
        out.len() - failed,
        start.elapsed().as_secs_f64()
    );
    // the report is the result; CORRDIFF_ACCEPTANCE_STRICT=1 turns failures into a failing exit
    if failed > 0 && std::env::var("CORRDIFF_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
