use crate::error::{Error, Result};

/// Discretised Girsanov functional `log G = ∫ M' dU - ½ ∫ M' M ds` for a
/// unit-volatility path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GirsanovTerms {
    pub stochastic_integral: f64,
    pub time_integral: f64,
    pub log_g: f64,
}

impl GirsanovTerms {
    pub fn new(stochastic_integral: f64, time_integral: f64) -> Self {
        GirsanovTerms {
            stochastic_integral,
            time_integral,
            log_g: stochastic_integral - time_integral,
        }
    }
}

/// Left-point sums `Σ M(U_{i-1})' ΔU_i - ½ Σ |M(U_{i-1})|² δ_i` over a
/// row-major lattice of `dim`-vectors.
pub fn girsanov_log<F>(times: &[f64], path: &[f64], dim: usize, mut drift: F) -> Result<GirsanovTerms>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if times.len() < 2 || dim == 0 || path.len() != times.len() * dim {
        return Err(Error::arg("girsanov_log needs at least two rows of matching size"));
    }
    let mut mu = vec![0.0; dim];
    let mut stochastic = 0.0;
    let mut time = 0.0;
    for r in 1..times.len() {
        let prev = &path[(r - 1) * dim..r * dim];
        let cur = &path[r * dim..(r + 1) * dim];
        drift(prev, &mut mu);
        if let Some(_) = mu.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                context: "girsanov drift",
                index: r - 1,
            });
        }
        let delta = times[r] - times[r - 1];
        for i in 0..dim {
            stochastic += mu[i] * (cur[i] - prev[i]);
            time += 0.5 * mu[i] * mu[i] * delta;
        }
    }
    Ok(GirsanovTerms::new(stochastic, time))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_drift_gives_zero() {
        let g = girsanov_log(&[0.0, 0.5, 1.0], &[0.0, 3.0, -1.0], 1, |_, m| m[0] = 0.0).unwrap();
        assert_eq!(g.log_g, 0.0);
    }

    #[test]
    fn constant_drift_closed_form() {
        let (a, b, t, m) = (0.3, 1.7, 2.0, 0.8);
        let times: Vec<f64> = (0..=8).map(|i| t * i as f64 / 8.0).collect();
        let path: Vec<f64> = (0..=8).map(|i| a + (b - a) * ((i * i) as f64 / 64.0)).collect();
        let g = girsanov_log(&times, &path, 1, |_, out| out[0] = m).unwrap();
        let expected = m * (b - a) - 0.5 * m * m * t;
        assert!((g.log_g - expected).abs() < 1e-14);
    }

    #[test]
    fn left_point_differs_from_midpoint() {
        // state dependent drift on a fixed path: the Itô sum is not the
        // midpoint (Stratonovich) sum
        let times = [0.0, 0.5, 1.0];
        let path = [0.0, 1.0, 0.5];
        let g = girsanov_log(&times, &path, 1, |u, out| out[0] = u[0]).unwrap();
        assert_eq!(g.stochastic_integral, 0.0 * 1.0 + 1.0 * -0.5);
        let midpoint = 0.5 * 1.0 + 0.75 * -0.5;
        assert!((g.stochastic_integral - midpoint).abs() > 0.1);
        assert_eq!(g.time_integral, 0.5 * (0.0 + 1.0) * 0.5);
    }

    #[test]
    fn nan_drift_reports_index() {
        let err = girsanov_log(&[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0], 1, |u, out| {
            out[0] = if u[0] > 1.5 { f64::NAN } else { 0.0 }
        })
        .unwrap_err();
        assert!(matches!(err, Error::Numerical { index: 1, .. }));
    }
}
