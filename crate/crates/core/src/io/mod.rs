//! Datasets, run configuration and result files.

mod config;
mod dataset;
mod export;
mod leukemia;

pub use config::{
    BayesFactorConfig, DataConfig, ModelConfig, ModelKind, OutputConfig, RunConfig, SimulateConfig, CONFIG_HELP,
};
pub use dataset::{load_dataset_csv, read_dataset, write_dataset, write_dataset_csv};
pub use export::{
    export_plot, file_label, read_trace, render_plot, write_acceptance, write_curve, write_km, write_trace, TraceTable,
};
pub use leukemia::{embedded_leukemia, LeukemiaData, WEEKS_PER_YEAR};
