//! Configuration, CSV files and the batch commands behind the CLI.

mod commands;
mod config;
mod data;
mod output;

pub use commands::{
    cmd_acf_export, cmd_fit, cmd_simulate, cmd_summarize, load_fit_observations, AcfInput, FitOutput,
    SimulateOutput, DIAGNOSTICS_FILE, OBSERVATIONS_FILE, PATH_FILE, SAMPLES_FILE,
};
pub use config::{
    MaskSection, Overrides, ParamsSection, PriorsSection, ProposalSection, RunConfig, SimulateSection,
};
pub use data::{
    component_names, load_observations, observations_from_table, read_table, read_table_file,
    write_lattice_file, write_observations, write_observations_file, Table,
};
pub use output::{column_diagnostics, read_samples, CsvSampleSink, Diagnostics, SampleTable, SCHEMA_VERSION};
