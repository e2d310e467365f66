//! Pulse sequences, readout models and the experiments built from them.

mod experiments;
mod readout;
mod sequence;
mod stats;

pub use experiments::{
    calibrate, eraser_point, eraser_sweep, interferometer, interferometer_with, transfer_experiment, Calibration, DeviceConfig, ErasePhase, EraserPoint,
    EraserSummary, EraserSweep, ExperimentConfig, NoiseConfig, Timeline, TransferResult, MIN_SWEEP_POINTS,
    TRANSFER_SAMPLE,
};
pub use readout::{apply_readout, conditional_probability, ConfusionMatrix, JointDistribution, ReadoutModel, LEVELS};
pub use sequence::{Executor, Interaction, Primitive, PulseSequence, TimeSeries};
pub use stats::{fringe_stats, phase_grid, FringeStats};
