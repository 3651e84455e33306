//! Output analysis for scalar chains.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample autocorrelation `ρ_h = γ_h / γ_0` with the biased (`1/n`)
/// autocovariance, for lags `0..=max_lag` (capped at `n - 1`).
///
/// A constant series has `ρ = [1, 0, 0, ...]`; the second return value flags
/// that case.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Result<(Vec<f64>, bool)> {
    let n = x.len();
    if n < 2 {
        return Err(Error::arg("autocorrelation needs at least 2 samples"));
    }
    let lags = max_lag.min(n - 1);
    let mean = x.iter().sum::<f64>() / n as f64;
    let constant = x.iter().all(|&v| v == x[0]);
    if constant {
        let mut acf = vec![0.0; lags + 1];
        acf[0] = 1.0;
        return Ok((acf, true));
    }
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|&v| Complex::new(v - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let g0 = buf[0].re;
    let mut acf: Vec<f64> = buf[..=lags].iter().map(|c| c.re / g0).collect();
    acf[0] = 1.0;
    Ok((acf, false))
}

/// Integrated autocorrelation time `1 + 2 Σ ρ_h`, truncated with Geyer's
/// initial positive sequence.
pub fn integrated_autocorrelation_time(x: &[f64]) -> Result<f64> {
    let (acf, constant) = autocorrelation(x, x.len() - 1)?;
    if constant {
        return Ok(1.0);
    }
    let mut tau = -1.0;
    let mut k = 0;
    while 2 * k + 1 < acf.len() {
        let pair = acf[2 * k] + acf[2 * k + 1];
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 1;
    }
    Ok(tau.max(1.0 / x.len() as f64))
}

/// Location and spread of one marginal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub q025: f64,
    pub q975: f64,
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(x: &[f64]) -> Result<Summary> {
    let n = x.len();
    if n < 2 {
        return Err(Error::arg("summary needs at least 2 samples"));
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Summary {
        mean,
        sd: var.sqrt(),
        median: quantile_sorted(&sorted, 0.5),
        q025: quantile_sorted(&sorted, 0.025),
        q975: quantile_sorted(&sorted, 0.975),
    })
}

/// Full diagnostics of one parameter column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDiagnostics {
    pub name: String,
    #[serde(flatten)]
    pub summary: Summary,
    pub iact: f64,
    pub constant: bool,
    pub acf: Vec<f64>,
}

pub fn diagnose(name: &str, x: &[f64], max_lag: usize) -> Result<ParameterDiagnostics> {
    let (acf, constant) = autocorrelation(x, max_lag)?;
    Ok(ParameterDiagnostics {
        name: name.to_string(),
        summary: summarize(x)?,
        iact: integrated_autocorrelation_time(x)?,
        constant,
        acf,
    })
}

/// 1-Wasserstein distance between two empirical distributions,
/// `∫ |F(x) - G(x)| dx`.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::arg("wasserstein distance needs non-empty samples"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut prev = a[0].min(b[0]);
    let mut dist = 0.0;
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        dist += (i as f64 / na - j as f64 / nb).abs() * (next - prev);
        while i < a.len() && a[i] == next {
            i += 1;
        }
        while j < b.len() && b[j] == next {
            j += 1;
        }
        prev = next;
    }
    Ok(dist)
}
