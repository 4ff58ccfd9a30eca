//! File formats: graph TSV import/export, the experiment config grammar,
//! and result serialization (metrics CSV, stationary vectors, recruitment
//! records).

pub mod config;
pub mod graph_files;
pub mod output;

pub use config::{ExperimentConfig, GraphSource, PartitionSpec};
pub use graph_files::{load_graph, write_graph};
pub use output::{
    write_grid_metrics, write_metrics, write_sample, write_stationary, RunMetadata,
};
