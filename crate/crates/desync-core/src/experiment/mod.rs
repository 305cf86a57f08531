//! Experiment harness: config parsing, sweeps, bound and spectral checks, plot data.

mod compare;
mod plot;
mod spec;
mod spectra;
mod sweep;

pub use compare::{
    check_start, compare_bounds, write_bounds_csv, BoundRow, StartCheck, BOUNDS_HEADER,
};
pub use plot::{emit_plotdata, read_summary, series_text, summary_json, PLOT_HEADER, SUMMARY_FILE};
pub use spec::{
    default_alpha_grid, default_epsilons, default_gamma_grid, parse_spec, ExperimentSpec, Mode,
    OutputSettings, SimSettings, SpectraGrid,
};
pub use spectra::{certify_spectra, write_spectra_csv, SpectraRow, EIGEN_TOL, SPECTRA_HEADER};
pub use sweep::{
    grid, initial_phases, run_point, run_sweep, run_trial, sim_config, speedup_pct, stats,
    trial_rng, write_sweep_csv, GridPoint, Stats, SweepResult, SweepRow, TrialFailure,
    TrialOutcome, SWEEP_HEADER,
};

/// Writes `contents` to `path`, creating parent directories.
pub fn write_output(path: &std::path::Path, contents: &str) -> crate::Result<()> {
    plot::write_file(path, contents)
}
