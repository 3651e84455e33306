use std::io::Write;
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use super::data::{component_names, observations_from_table, read_table_file, write_lattice_file, write_observations_file};
use super::output::{column_diagnostics, read_samples, CsvSampleSink, Diagnostics, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::likelihood::Regime;
use crate::mcmc::{autocorrelation, run_chain, summarize};
use crate::model::{simulate_euler, Diffusion, Model, ObservationSet};

pub const OBSERVATIONS_FILE: &str = "observations.csv";
pub const PATH_FILE: &str = "path.csv";
pub const SAMPLES_FILE: &str = "samples.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub observations: PathBuf,
    pub path: Option<PathBuf>,
}

/// Simulates the configured model on the fine Euler grid, subsamples it at
/// the observation spacing and writes `observations.csv` (and `path.csv`).
pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulateOutput> {
    let model = cfg.build_model()?;
    let mask = cfg.build_mask(&model)?;
    let theta = cfg
        .theta(model.layout())?
        .ok_or_else(|| Error::config("params.theta", "true parameter values are required to simulate"))?;
    let chol = cfg
        .chol(&model, &theta, &mask)?
        .ok_or_else(|| Error::config("params.sigma", "true scales are required to simulate"))?;
    let s = &cfg.simulate;
    let ratio = s.dt / s.fine_step;
    let stride = ratio.round() as usize;
    if stride == 0 || (ratio - stride as f64).abs() > 1e-9 * ratio {
        return Err(Error::config("simulate.fine_step", "must divide dt"));
    }
    let x0 = match &s.x0 {
        Some(x) => x.clone(),
        None => (0..model.dim())
            .map(|i| model.stationary_level(i, &theta).unwrap_or(0.0))
            .collect(),
    };
    let lattice = simulate_euler(&model, &chol, &theta, &x0, s.n as f64 * s.dt, s.fine_step, cfg.seed)?;
    let obs = lattice.subsample(stride, &(0..model.dim()).collect::<Vec<_>>())?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let names = component_names(&model);
    let observations = cfg.output_dir.join(OBSERVATIONS_FILE);
    write_observations_file(&observations, &obs, &names)?;
    let path = if s.write_path {
        let p = cfg.output_dir.join(PATH_FILE);
        write_lattice_file(&p, &lattice, &names)?;
        Some(p)
    } else {
        None
    };
    log::info!("wrote {} observations to {}", obs.len(), observations.display());
    Ok(SimulateOutput { observations, path })
}

/// Loads the observations a fit needs. In the latent regime a file that
/// still carries the volatility columns is accepted and those columns are
/// dropped.
pub fn load_fit_observations(cfg: &RunConfig, model: &Model, path: &Path) -> Result<ObservationSet> {
    let name = path.display().to_string();
    let table = read_table_file(path)?;
    let d = model.dim();
    match cfg.sv_regime {
        Regime::Observed => observations_from_table(&table, d, &name),
        Regime::Latent => {
            let k = model.transformed_dim();
            if table.width == d || table.width == d + 1 {
                log::info!("{name}: dropping the {k} volatility columns for the latent regime");
                let full = observations_from_table(&table, d, &name)?;
                let values = (0..full.len())
                    .flat_map(|r| full.row(r)[k..].to_vec())
                    .collect();
                ObservationSet::new(full.times().to_vec(), values, d - k)
            } else {
                observations_from_table(&table, d - k, &name)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitOutput {
    pub samples: PathBuf,
    pub diagnostics: PathBuf,
    pub report: Diagnostics,
}

/// Runs the sampler on `input`, streaming `samples.csv` and writing
/// `diagnostics.json` at the end.
pub fn cmd_fit(cfg: &RunConfig) -> Result<FitOutput> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::config("input", "an observation file is required"))?;
    let model = cfg.build_model()?;
    let obs = load_fit_observations(cfg, &model, input)?;
    let mask = cfg.build_mask(&model)?;
    let init = cfg.initial(&model, &obs, &mask)?;
    let priors = cfg.priors(model.layout())?;
    let chain = cfg.chain_config(model.layout());

    std::fs::create_dir_all(&cfg.output_dir)?;
    let columns = crate::mcmc::sample_columns(model.layout().names(), model.dim());
    let samples = cfg.output_dir.join(SAMPLES_FILE);
    let mut sink = CsvSampleSink::create(&samples, &columns)?;
    let out = run_chain(&model, &obs, init, mask, priors, chain, &mut sink)?;

    let series: Vec<Vec<f64>> = (0..columns.len())
        .map(|c| out.samples.iter().map(|s| s.values().nth(c).unwrap()).collect())
        .collect();
    let report = Diagnostics {
        schema_version: SCHEMA_VERSION,
        generator: format!("corrdiff {}", env!("CARGO_PKG_VERSION")),
        config: cfg.clone(),
        samples: out.samples.len(),
        path_acceptance: out.acceptance.path.rate(),
        path_acceptance_by_dim: out.acceptance.path_by_dim.iter().map(|r| r.rate()).collect(),
        acceptance: out.acceptance,
        parameters: column_diagnostics(&columns, &series, cfg.acf_max_lag)?,
        loglik_trace: out.loglik_trace,
    };
    let diagnostics = cfg.output_dir.join(DIAGNOSTICS_FILE);
    report.write(&diagnostics)?;
    log::info!(
        "{} draws written to {}; path acceptance {:.4}",
        report.samples,
        samples.display(),
        report.path_acceptance
    );
    Ok(FitOutput {
        samples,
        diagnostics,
        report,
    })
}

/// One samples file for [`cmd_acf_export`].
#[derive(Debug, Clone)]
pub struct AcfInput {
    pub path: PathBuf,
    /// Augmentation level for the `m` column. `None`: read from a
    /// `diagnostics.json` next to the file if there is one.
    pub m: Option<usize>,
}

fn sibling_m(path: &Path) -> Option<usize> {
    let diag = path.parent()?.join(DIAGNOSTICS_FILE);
    Diagnostics::read(&diag).ok().map(|d| d.config.m)
}

/// Writes autocorrelations in long format `m,parameter,lag,acf`, one block
/// per input file.
pub fn cmd_acf_export(inputs: &[AcfInput], max_lag: usize, out: &mut dyn Write) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::arg("no samples files given"));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "parameter", "lag", "acf"])?;
    for input in inputs {
        let table = read_samples(&input.path)?;
        let m = input.m.or_else(|| sibling_m(&input.path)).map(|m| m.to_string()).unwrap_or_default();
        for (name, x) in table.columns.iter().zip(&table.series) {
            let (acf, _) = autocorrelation(x, max_lag.min(x.len() - 1))?;
            for (lag, a) in acf.iter().enumerate() {
                w.write_record([m.as_str(), name, &lag.to_string(), &format!("{a}")])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `parameter,mean,sd,median,q025,q975` for every column of a
/// samples file.
pub fn cmd_summarize(path: &Path, out: &mut dyn Write) -> Result<()> {
    let table = read_samples(path)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["parameter", "mean", "sd", "median", "q025", "q975"])?;
    for (name, x) in table.columns.iter().zip(&table.series) {
        let s = summarize(x)?;
        let cells = [s.mean, s.sd, s.median, s.q025, s.q975].map(|v| format!("{v}"));
        let mut rec = vec![name.clone()];
        rec.extend(cells);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
