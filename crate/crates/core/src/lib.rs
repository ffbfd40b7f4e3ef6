//! Self-guided tomography of pure qudit states.
//!
//! The crate estimates an unknown pure state by stochastic gradient ascent on
//! its measured overlap with a moving estimate, using a simulated two-channel
//! projective measurement with shot noise, electronic background, cross-talk
//! and imperfect state preparation. A maximum-likelihood tomography baseline
//! and batch experiment drivers are included.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod io;
pub mod measurement;
pub mod mle;
pub mod qudit;
pub mod seed;
pub mod sgt;

pub use error::{Error, Result};
pub use measurement::{
    apply_crosstalk, mqpg_measure, prepare_imperfect_state, projection_probability,
    sample_channel_counts, ExactOracle, MeasurementOracle, NoiseModel, PreparationModel,
    SimulatedMqpg,
};
pub use qudit::{
    fidelity, haar_random_state, infidelity, perturb_pair, render_spectral_amplitude,
    sample_direction, PerturbationDirection, QuditState, Unit,
};
pub use sgt::{
    gain_alpha, gain_beta, gradient, pseudo_normalized_difference, run_sgt, update_estimate,
    GainSchedule, IterationRecord, SgtConfig, Trajectory,
};
