//! Control-voltage sweeps and gate statistics.
//!
//! A sample is one uniformly drawn control vector. For each sample the
//! output current is measured for the four logic inputs in the order
//! `00, 10, 01, 11`, where the first digit is the left input and the second
//! the right input. Fitness scores how well such a current vector realizes a
//! gate; abundance is the fraction of samples above a fitness threshold.

mod dataset;
mod fitness;
mod hypervolume;
mod ranges;
mod sweep;

pub use dataset::{DatasetMeta, FlaggedSample, SampleDataset, SampleRecord};
pub use fitness::{abundance_curve, evaluate_fitness, gate_table, FitnessResult, Gate, DEFAULT_K, MSE_FLOOR};
pub use hypervolume::{
    estimate_gate_count, local_hypervolume, HypervolumeEstimate, LocalCube, LocalHypervolume, SEPARATION_FACTOR,
    SMALL_P0,
};
pub use ranges::{ControlRange, Preset, VoltageRanges};
pub use sweep::{sample_hypercube, SampleOutcome, Sampler, INPUT_COMBINATIONS};

use thiserror::Error;

use crate::kinetics::KineticsError;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
    #[error("invalid voltage ranges: {0}")]
    InvalidRanges(String),
    #[error("device layout: {0}")]
    Layout(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("unknown gate {0:?}")]
    UnknownGate(String),
    #[error("undefined estimate: {0}")]
    UndefinedEstimate(String),
    #[error("dataset schema: {0}")]
    Schema(String),
    #[error("dataset file: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset file: {0}")]
    Csv(#[from] csv::Error),
    #[error("dataset sidecar: {0}")]
    Json(#[from] serde_json::Error),
}
