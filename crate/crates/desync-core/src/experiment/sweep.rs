use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{ExperimentSpec, Mode};
use crate::error::Result;
use crate::math::{
    desync_round_bound, fast_desync_round_bound, BoundStart, MultichannelProblem, PhaseVector,
    SingleChannelProblem,
};
use crate::rounds::{
    default_max_rounds_multi, default_max_rounds_single, run_until_convergence, DesyncState,
    MultichannelState, NesterovState, Objective,
};
use crate::sim::{run_simulation, SimConfig};

/// Header of the sweep CSV, in output order.
pub const SWEEP_HEADER: [&str; 13] = [
    "mode",
    "n",
    "channels",
    "alpha",
    "gamma",
    "epsilon",
    "trials",
    "mean_rounds",
    "max_rounds",
    "std_rounds",
    "bound_desync",
    "bound_fast",
    "speedup_pct",
];

/// Seed-derived sorted uniform start; ties nudged apart by 1e-12.
pub fn initial_phases(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    x.sort_by(|a, b| a.partial_cmp(b).expect("uniform draws are finite"));
    for i in 1..n {
        if x[i] <= x[i - 1] {
            x[i] = x[i - 1] + 1e-12;
        }
    }
    x
}

pub fn trial_rng(seed_base: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed_base.wrapping_add(trial as u64))
}

/// One grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub mode: Mode,
    pub n: usize,
    pub channels: usize,
    pub alpha: f64,
    /// Absent for single-channel modes.
    pub gamma: Option<f64>,
    pub epsilon: f64,
}

/// Outcome of one trial: rounds to convergence, or a diagnostic.
pub type TrialOutcome = std::result::Result<usize, String>;

/// Runs one trial of a grid point with seed `seed_base + trial`.
pub fn run_trial(point: &GridPoint, spec: &ExperimentSpec, trial: usize) -> TrialOutcome {
    run_trial_inner(point, spec, trial).map_err(|e| e.to_string())?
}

fn run_trial_inner(point: &GridPoint, spec: &ExperimentSpec, trial: usize) -> Result<TrialOutcome> {
    let mut rng = trial_rng(spec.seed_base, trial);
    let eps = point.epsilon;
    let report = match point.mode {
        Mode::Desync | Mode::FastDesync => {
            let problem = SingleChannelProblem::new(point.n, point.alpha, eps)?;
            let budget = budget(spec.max_rounds, || Ok(default_max_rounds_single(&problem)))?;
            let phi = PhaseVector::new(initial_phases(&mut rng, point.n))?;
            if point.mode == Mode::Desync {
                run_until_convergence(DesyncState::new(phi), &problem, Objective::G, eps, budget)?
            } else {
                run_until_convergence(NesterovState::new(phi), &problem, Objective::G, eps, budget)?
            }
        }
        Mode::Much | Mode::FastMuch => {
            let problem = MultichannelProblem::uniform(
                point.channels,
                point.n,
                point.alpha / 2.0,
                point.gamma.expect("multichannel point has gamma"),
            )?;
            let budget = budget(spec.max_rounds, || default_max_rounds_multi(&problem, eps))?;
            let phis = (0..point.channels)
                .map(|_| PhaseVector::new(initial_phases(&mut rng, point.n)))
                .collect::<Result<Vec<_>>>()?;
            let state = if point.mode == Mode::Much {
                MultichannelState::new(phis)
            } else {
                MultichannelState::with_momentum(phis)
            };
            run_until_convergence(state, &problem, spec.objective, eps, budget)?
        }
        Mode::EventSim => {
            let cfg = sim_config(point, spec, trial);
            run_simulation(cfg)?.report
        }
    };
    Ok(if report.converged {
        Ok(report.rounds)
    } else {
        Err(format!(
            "not converged after {} rounds (objective {:e})",
            report.rounds, report.final_objective
        ))
    })
}

fn budget(configured: usize, default: impl FnOnce() -> Result<usize>) -> Result<usize> {
    if configured > 0 {
        Ok(configured)
    } else {
        default()
    }
}

pub fn sim_config(point: &GridPoint, spec: &ExperimentSpec, trial: usize) -> SimConfig {
    let s = &spec.sim;
    let mut cfg = SimConfig::new(point.n * point.channels, point.channels);
    cfg.period_t = s.period_t;
    cfg.alpha = point.alpha;
    cfg.gamma = point.gamma.unwrap_or(cfg.gamma);
    cfg.loss_probability = s.loss_probability;
    cfg.topology = s.topology.clone();
    cfg.rng_seed = spec.seed_base.wrapping_add(trial as u64);
    cfg.staleness_mode = s.staleness_mode;
    cfg.sync_rule = s.sync_rule;
    cfg.nesterov = s.nesterov;
    cfg.max_time = s.max_time;
    cfg.balance = s.balance;
    cfg.epsilon = point.epsilon;
    cfg
}

/// Enumerates grid points in output order.
pub fn grid(spec: &ExperimentSpec) -> Vec<GridPoint> {
    let mut points = Vec::new();
    for &mode in &spec.mode {
        let channels = if matches!(mode, Mode::Desync | Mode::FastDesync) {
            vec![1]
        } else {
            spec.channels.clone()
        };
        let alphas = if mode.is_multichannel() {
            spec.beta_grid().iter().map(|b| 2.0 * b).collect()
        } else {
            spec.alpha.clone()
        };
        let gammas: Vec<Option<f64>> = if mode.is_multichannel()
            || (mode == Mode::EventSim && channels.iter().any(|&c| c > 1))
        {
            spec.gamma.iter().map(|&g| Some(g)).collect()
        } else {
            vec![None]
        };
        for &n in &spec.n {
            for &c in &channels {
                for &eps in &spec.epsilon {
                    for &gamma in &gammas {
                        for &alpha in &alphas {
                            points.push(GridPoint {
                                mode,
                                n,
                                channels: c,
                                alpha,
                                gamma,
                                epsilon: eps,
                            });
                        }
                    }
                }
            }
        }
    }
    points
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub point: GridPoint,
    pub trial: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: GridPoint,
    pub trials: usize,
    /// Trials that converged; statistics cover these only.
    pub converged: usize,
    #[serde(with = "nan_as_null")]
    pub mean_rounds: f64,
    #[serde(with = "nan_as_null")]
    pub max_rounds: f64,
    #[serde(with = "nan_as_null")]
    pub std_rounds: f64,
    /// Worst-case bounds, single-channel modes only.
    pub bound_desync: Option<f64>,
    pub bound_fast: Option<f64>,
    /// `(plain - fast) / plain` in percent, on accelerated rows with a baseline row.
    pub speedup_pct: Option<f64>,
}

// Statistics of a point with no converged trial are NaN, which JSON cannot carry.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        (!v.is_nan()).then_some(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: ExperimentSpec,
    pub rows: Vec<SweepRow>,
    pub failures: Vec<TrialFailure>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub max: f64,
    pub std: f64,
}

/// Mean, max and sample standard deviation.
pub fn stats(values: &[f64]) -> Stats {
    let count = values.len();
    if count == 0 {
        return Stats {
            count,
            mean: f64::NAN,
            max: f64::NAN,
            std: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / count as f64;
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let var = if count > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1) as f64
    } else {
        0.0
    };
    Stats {
        count,
        mean,
        max,
        std: var.sqrt(),
    }
}

/// Runs every trial of one grid point, in parallel; result order is by trial index.
pub fn run_point(point: &GridPoint, spec: &ExperimentSpec) -> Vec<TrialOutcome> {
    (0..spec.trials)
        .into_par_iter()
        .map(|t| run_trial(point, spec, t))
        .collect()
}

fn bounds_for(point: &GridPoint) -> (Option<f64>, Option<f64>) {
    if point.channels != 1 || !matches!(point.mode, Mode::Desync | Mode::FastDesync) {
        return (None, None);
    }
    match SingleChannelProblem::new(point.n, point.alpha, point.epsilon) {
        Ok(p) => (
            Some(desync_round_bound(&p, BoundStart::WorstCase)),
            Some(fast_desync_round_bound(&p, BoundStart::WorstCase).rounds),
        ),
        Err(_) => (None, None),
    }
}

type PairKey = (usize, usize, u64, Option<u64>, u64);

fn pair_key(p: &GridPoint) -> PairKey {
    (
        p.n,
        p.channels,
        p.alpha.to_bits(),
        p.gamma.map(f64::to_bits),
        p.epsilon.to_bits(),
    )
}

/// Runs the whole sweep. Trial failures are recorded, not fatal.
pub fn run_sweep(spec: &ExperimentSpec) -> SweepResult {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for point in grid(spec) {
        let outcomes = run_point(&point, spec);
        let mut rounds = Vec::with_capacity(outcomes.len());
        for (trial, o) in outcomes.into_iter().enumerate() {
            match o {
                Ok(r) => rounds.push(r as f64),
                Err(message) => failures.push(TrialFailure {
                    point,
                    trial,
                    message,
                }),
            }
        }
        let s = stats(&rounds);
        let (bound_desync, bound_fast) = bounds_for(&point);
        rows.push(SweepRow {
            point,
            trials: spec.trials,
            converged: s.count,
            mean_rounds: s.mean,
            max_rounds: s.max,
            std_rounds: s.std,
            bound_desync,
            bound_fast,
            speedup_pct: None,
        });
    }
    fill_speedups(&mut rows);
    SweepResult {
        spec: spec.clone(),
        rows,
        failures,
    }
}

fn fill_speedups(rows: &mut [SweepRow]) {
    let baseline: BTreeMap<(Mode, PairKey), f64> = rows
        .iter()
        .map(|r| ((r.point.mode, pair_key(&r.point)), r.mean_rounds))
        .collect();
    for row in rows.iter_mut() {
        if let Some(base_mode) = row.point.mode.baseline() {
            if let Some(&plain) = baseline.get(&(base_mode, pair_key(&row.point))) {
                row.speedup_pct = Some(speedup_pct(plain, row.mean_rounds));
            }
        }
    }
}

/// `(plain - fast) / plain` in percent.
pub fn speedup_pct(plain: f64, fast: f64) -> f64 {
    (plain - fast) / plain * 100.0
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Writes the sweep CSV with the fixed column order.
pub fn write_sweep_csv<W: std::io::Write>(out: W, result: &SweepResult) -> Result<()> {
    let to_err = |e: csv::Error| crate::Error::Io {
        path: "<sweep>".into(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER).map_err(to_err)?;
    for r in &result.rows {
        let p = &r.point;
        w.write_record([
            p.mode.name().to_string(),
            p.n.to_string(),
            p.channels.to_string(),
            format!("{}", p.alpha),
            opt(p.gamma),
            format!("{}", p.epsilon),
            r.trials.to_string(),
            format!("{}", r.mean_rounds),
            format!("{}", r.max_rounds),
            format!("{}", r.std_rounds),
            opt(r.bound_desync),
            opt(r.bound_fast),
            opt(r.speedup_pct),
        ])
        .map_err(to_err)?;
    }
    w.flush().map_err(|e| crate::Error::Io {
        path: "<sweep>".into(),
        message: e.to_string(),
    })
}
