//! Discrete-event simulator of the fire-message protocol.
//!
//! Time is kept in periods internally. A node's next fire time `tau` gives its
//! phase `theta = 1 - (tau - now)` and its offset `phi = 1 - frac(tau)`.

mod config;
mod engine;
mod rules;
mod trace;

pub use config::{Adjacency, SimConfig, StalenessMode, SyncRule, Topology};
pub use engine::{run_simulation, FireEvent, NodeState, Role, SimOutcome, Simulator, SteadyReport};
pub use rules::{
    apply_message_loss, balance_channels, balance_counts, desync_phase_update, elect_sync_node,
    sync_phase_update, wrap_centered, Delivery, MissTracker,
};
pub use trace::{write_trace_csv, TraceRecord};
