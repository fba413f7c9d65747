//! Benchmark driver for the `tomobench_core` algorithms: photon sweeps,
//! dataset export, the DTNS tensor format, run manifests and the CLI.

pub mod cli;
pub mod config;
pub mod dtns;
pub mod manifest;
pub mod pipeline;
pub mod plot;
pub mod table;

pub use config::{Algorithm, SweepConfig};
pub use dtns::{read_tensor, write_tensor, DtnsError, Tensor, TensorData};
pub use manifest::{FileEntry, RunManifest};
pub use pipeline::{aggregate_log_stats, export_dataset, run_sweep, write_sweep, LogStats, Split};
pub use table::{Metric, SweepRow, SweepTable, TvChoice};
