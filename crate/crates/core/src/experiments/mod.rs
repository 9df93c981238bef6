//! Teacher-student experiments: grid datasets, training, success rates,
//! narrow critical points and classification of trained neurons.

mod data;
mod metrics;
mod runner;
mod train;

pub use data::{
    glorot_bound, init_glorot, init_glorot_two_layer, multilayer_teacher_dataset, reference_teacher, teacher_dataset, Grid,
    TEACHER_WEIGHTS,
};
pub use train::{refine, refine_least_squares, refine_newton, train, Checkpoint, Optimizer, Refinement, TrainingConfig, TrainingTrace};
pub use metrics::{
    saddle_trace_metrics, GradNormDip, PlateauSpan, SaddleMetrics, DIP_PROMINENCE, PLATEAU_MIN_FRACTION,
    PLATEAU_RELATIVE_CHANGE,
};
pub use runner::{
    classify_run, find_critical_narrow, run_experiment, success_rate, ClassificationConfig, ExperimentConfig,
    ExperimentReport, NarrowCritical, NeuronRecord, RunClassification, RunRecord, WidthSuccess,
    NARROW_IRREDUCIBLE_TOL, NEWTON_POLISH_BUDGET,
};
