//! Objectives, gradients, bounds and spectra.

mod bounds;
pub(crate) mod objective;
mod phase;
mod problem;
mod spectral;

pub use bounds::{
    desync_round_bound, fast_desync_round_bound, solution_distance, worst_case_distance_sq,
    BoundStart, FastBound,
};
pub use objective::{
    channel_residuals, gradient_g, gradient_h_channel, objective_g, objective_h, objective_h_parts,
    HParts,
};
pub use phase::PhaseVector;
pub use problem::{MultichannelProblem, SingleChannelProblem};
pub use spectral::{
    analytic_r, analytic_t, build_iteration_matrix, deflate, eigenvalues, spectral_radius,
    spectral_report, SpectralReport,
};
