//! Training/testing protocol, synthetic desk-scale data and run output.

mod experiment;
mod synth;

pub use experiment::{
    default_cache_dir, evaluate, prefetch, run_1020_experiment, run_experiment, run_test, run_training, DataSource,
    ExperimentSpec, RunOutput, TestOutcome, CACHE_DIR_ENV, MODEL_JSON, PRESET_NAMES, RECONSTRUCTED_CSV, REPORT_JSON,
    REPORT_TABLE, SPEC_JSON,
};
pub use synth::{synth_correlated, SourceBand, SyntheticModel};
