use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use corrdiff::io::{cmd_acf_export, cmd_fit, cmd_simulate, cmd_summarize, AcfInput, Overrides, RunConfig};
use corrdiff::{Error, Method, Regime};

/// Data-augmentation MCMC for discretely observed correlated diffusions.
///
/// Log verbosity is read from CORRDIFF_LOG (error, warn, info, debug, trace).
#[derive(Parser)]
#[command(name = "corrdiff", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate observations from the configured model and true values.
    Simulate(RunArgs),
    /// Fit the configured model to an observation file.
    Fit(RunArgs),
    /// Export autocorrelations of one or more samples files (long format).
    Acf {
        /// Samples CSV files written by `fit`.
        #[arg(required = true)]
        samples: Vec<PathBuf>,
        /// Augmentation level per file, in the same order. Defaults to the
        /// value in a neighbouring diagnostics.json.
        #[arg(long = "m", num_args = 1..)]
        m: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        lags: usize,
        /// Output CSV; standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Posterior summary table of a samples file.
    Summarize {
        samples: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    A,
    B,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Observed,
    Latent,
}

/// Config file plus the keys that may be overridden on the command line.
#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long = "sv-regime", value_enum)]
    sv_regime: Option<RegimeArg>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long = "output-dir")]
    output_dir: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> corrdiff::Result<RunConfig> {
        let text = std::fs::read_to_string(&self.config).map_err(|e| Error::Config {
            key: "<file>".into(),
            message: format!("{}: {e}", self.config.display()),
        })?;
        // file values first, then flags; validation happens on the merged result
        let mut cfg: RunConfig = RunConfig::parse_unvalidated(&text)?;
        cfg.apply(&Overrides {
            seed: self.seed,
            m: self.m,
            sweeps: self.sweeps,
            warmup: self.warmup,
            thin: self.thin,
            method: self.method.map(|m| match m {
                MethodArg::A => Method::A,
                MethodArg::B => Method::B,
            }),
            sv_regime: self.sv_regime.map(|r| match r {
                RegimeArg::Observed => Regime::Observed,
                RegimeArg::Latent => Regime::Latent,
            }),
            input: self.input.clone(),
            output_dir: self.output_dir.clone(),
        })?;
        Ok(cfg)
    }
}

fn output(path: &Option<PathBuf>) -> corrdiff::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn run(cli: Cli) -> corrdiff::Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let out = cmd_simulate(&args.load()?)?;
            println!("{}", out.observations.display());
            if let Some(p) = out.path {
                println!("{}", p.display());
            }
        }
        Command::Fit(args) => {
            let out = cmd_fit(&args.load()?)?;
            println!("{}", out.samples.display());
            println!("{}", out.diagnostics.display());
        }
        Command::Acf {
            samples,
            m,
            lags,
            output: path,
        } => {
            if !m.is_empty() && m.len() != samples.len() {
                return Err(Error::Argument("give one --m per samples file".into()));
            }
            let inputs: Vec<AcfInput> = samples
                .into_iter()
                .enumerate()
                .map(|(i, path)| AcfInput {
                    path,
                    m: m.get(i).copied(),
                })
                .collect();
            let mut w = output(&path)?;
            cmd_acf_export(&inputs, lags, &mut w)?;
            w.flush()?;
        }
        Command::Summarize { samples, output: path } => {
            let mut w = output(&path)?;
            cmd_summarize(&samples, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CORRDIFF_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
