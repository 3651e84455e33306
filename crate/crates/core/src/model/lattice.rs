use crate::error::{Error, Result};

/// A discretised path: strictly increasing times and one state row per time.
/// `obs_index` marks the rows that are observations.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLattice {
    times: Vec<f64>,
    states: Vec<f64>,
    dim: usize,
    obs_index: Vec<usize>,
}

impl PathLattice {
    /// Builds a lattice from row-major states. Every row counts as an
    /// observation.
    pub fn new(times: Vec<f64>, states: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || states.len() != times.len() * dim {
            return Err(Error::arg("state matrix does not match times x dim"));
        }
        check_increasing(&times)?;
        let obs_index = (0..times.len()).collect();
        Ok(PathLattice {
            times,
            states,
            dim,
            obs_index,
        })
    }

    /// Marks observation rows; they must be increasing and include the first
    /// and last rows.
    pub fn with_obs_index(mut self, obs_index: Vec<usize>) -> Result<Self> {
        let n = self.times.len();
        if obs_index.first() != Some(&0)
            || obs_index.last() != Some(&(n - 1))
            || obs_index.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::arg(
                "observation indices must increase and contain the first and last rows",
            ));
        }
        self.obs_index = obs_index;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn obs_index(&self) -> &[usize] {
        &self.obs_index
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.states[r * self.dim..(r + 1) * self.dim]
    }

    /// Keeps every `stride`-th row (plus the first); the kept rows become
    /// observations of the selected `columns`.
    pub fn subsample(&self, stride: usize, columns: &[usize]) -> Result<ObservationSet> {
        if stride == 0 {
            return Err(Error::arg("stride must be positive"));
        }
        if (self.len() - 1) % stride != 0 {
            return Err(Error::arg("lattice length is not a multiple of the stride"));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for r in (0..self.len()).step_by(stride) {
            times.push(self.times[r]);
            let row = self.row(r);
            values.extend(columns.iter().map(|&c| row[c]));
        }
        ObservationSet::new(times, values, columns.len())
    }
}

/// Discrete observations `Y_0..Y_n` at strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    times: Vec<f64>,
    values: Vec<f64>,
    dim: usize,
}

impl ObservationSet {
    pub fn new(times: Vec<f64>, values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || values.len() != times.len() * dim {
            return Err(Error::arg("observation matrix does not match times x dim"));
        }
        if times.len() < 2 {
            return Err(Error::arg("need at least two observations"));
        }
        check_increasing(&times)?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::arg(format!(
                "non-finite observation in row {}",
                i / dim
            )));
        }
        Ok(ObservationSet { times, values, dim })
    }

    /// Observations at unit spacing starting at time 0.
    pub fn equidistant(values: Vec<f64>, dim: usize) -> Result<Self> {
        let n = if dim == 0 { 0 } else { values.len() / dim };
        Self::new((0..n).map(|k| k as f64).collect(), values, dim)
    }

    /// Number of rows `n + 1`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of inter-observation intervals `n`.
    pub fn intervals(&self) -> usize {
        self.times.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    /// Column means.
    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.dim];
        for k in 0..self.len() {
            for (m, v) in means.iter_mut().zip(self.row(k)) {
                *m += v;
            }
        }
        let n = self.len() as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }
}

fn check_increasing(times: &[f64]) -> Result<()> {
    if let Some(i) = times.iter().position(|t| !t.is_finite()) {
        return Err(Error::arg(format!("non-finite time at row {i}")));
    }
    if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::arg(format!(
            "times are not strictly increasing at row {}",
            i + 1
        )));
    }
    Ok(())
}
