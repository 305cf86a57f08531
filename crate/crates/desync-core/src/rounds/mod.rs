//! Synchronous per-round vector iterations.

mod multi;
mod runner;
mod single;

pub use multi::{fast_much_round, much_round, ChannelMomentum, MultichannelState};
pub use runner::{
    default_max_rounds_multi, default_max_rounds_single, run_to_state, run_until_convergence,
    ConvergenceReport, Objective, RoundState,
};
pub use single::{desync_round, fast_desync_round, momentum, DesyncState, NesterovState};

/// One Desync step on raw offsets, written per node:
/// `phi_i' = (1 - alpha) phi_i + alpha/2 (phi_{i-1} + phi_{i+1})`,
/// with `phi_0 = phi_n - 1` and `phi_{n+1} = phi_1 + 1`.
pub(crate) fn desync_step(phi: &[f64], alpha: f64) -> Vec<f64> {
    let n = phi.len();
    let half = alpha / 2.0;
    (0..n)
        .map(|i| {
            let lo = if i == 0 { phi[n - 1] - 1.0 } else { phi[i - 1] };
            let hi = if i + 1 == n { phi[0] + 1.0 } else { phi[i + 1] };
            (1.0 - alpha) * phi[i] + half * (lo + hi)
        })
        .collect()
}
