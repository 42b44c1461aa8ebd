//! Library half of the command-line driver: configuration, tensor entry
//! files, the multi-trial experiment runner and the summary table.

pub mod config;
pub mod error;
pub mod files;
pub mod summary;
pub mod trials;

pub use config::{Overrides, RunConfig, TensorSource};
pub use error::{CliError, Result};
pub use files::{parse_tensor_file, tensor_from_file, write_tensor_file, TensorEntry, TensorFile};
pub use summary::{render_table, summarize, ClusterRow, Summary, CLUSTER_TOL};
pub use trials::{run_trials, write_jsonl, TrialRecord, TrialsOutput};
