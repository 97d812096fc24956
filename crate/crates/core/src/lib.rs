//! K-Modes clustering for categorical data.
//!
//! Datasets are byte-coded matrices ([`CategoricalDataset`]). Centers are
//! seeded by one of four initializers ([`InitMethod`]), the main one being
//! bisecting K-Modes, and refined by [`kmodes_fit`]. The [`harness`] module
//! runs initializer/K-Modes pairs and reports quality, iterations and time.

pub mod codec;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod harness;
pub mod ingest;
pub mod init;
pub mod metric;
pub mod synth;

pub use codec::{load_encoded, save_encoded};
pub use dataset::{CategoricalDataset, DataPoint, RowSubset, Violation, MAX_CARDINALITY};
pub use engine::{
    assign_step, kmodes_fit, kmodes_fit_observed, update_step, ClusterModel, EmptyClusterPolicy,
    EngineConfig, Phase, StepEvent,
};
pub use error::{Error, Result};
pub use harness::{
    emit_report, run_matrix, run_once, BenchmarkReport, MatrixSpec, ReportFormat, ReportOptions,
    RunRecord, RunSpec,
};
pub use ingest::{ingest_csv, DatasetProfile, DropReport, ProfileName, RecodeMap};
pub use init::{
    bkmodes_init, bkmodes_partition, cao_density, cao_init, farthest_point_init, initialize,
    random_init, two_modes_bisect, BisectState, InitMethod, MethodKind,
};
pub use metric::{hamming, mode_of, sd_total, sum_of_distances, FrequencyTable};
pub use synth::{synth_generate, SynthParams};
