use serde::{Deserialize, Serialize};

use super::spec::{ExperimentSpec, Mode};
use super::sweep::{initial_phases, trial_rng};
use crate::error::{Error, Result};
use crate::math::{
    desync_round_bound, fast_desync_round_bound, BoundStart, PhaseVector, SingleChannelProblem,
};
use crate::rounds::{
    default_max_rounds_single, run_until_convergence, DesyncState, NesterovState, Objective,
};
use rayon::prelude::*;

pub const BOUNDS_HEADER: [&str; 10] = [
    "n",
    "alpha",
    "epsilon",
    "trials",
    "max_rounds_desync",
    "max_rounds_fast",
    "bound_desync",
    "bound_fast",
    "guaranteed",
    "violated",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub trials: usize,
    /// Observed maxima; infinite when some trial failed to converge.
    pub max_rounds_desync: f64,
    pub max_rounds_fast: f64,
    /// Worst-case bounds.
    pub bound_desync: f64,
    pub bound_fast: f64,
    /// Whether the accelerated bound is proven at this `alpha`.
    pub guaranteed: bool,
    pub failed_desync: usize,
    pub failed_fast: usize,
    /// Trials whose rounds exceed the bound evaluated at their own start.
    pub start_bound_violations: usize,
    pub violated: bool,
}

/// Rounds of both algorithms from one start, checked against the bounds at that start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartCheck {
    pub desync: Option<usize>,
    pub fast: Option<usize>,
    pub bound_desync: f64,
    pub bound_fast: f64,
    pub violation: bool,
}

pub fn check_start(
    phi: &PhaseVector,
    problem: &SingleChannelProblem,
    budget: usize,
) -> Result<StartCheck> {
    let eps = problem.epsilon();
    let start = BoundStart::from_start(phi, problem)?;
    let converged = |r: Result<crate::rounds::ConvergenceReport>| match r {
        Ok(rep) if rep.converged => Ok(Some(rep.rounds)),
        Ok(_) | Err(Error::Diverged { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    let desync = converged(run_until_convergence(
        DesyncState::new(phi.clone()),
        problem,
        Objective::G,
        eps,
        budget,
    ))?;
    let fast = converged(run_until_convergence(
        NesterovState::new(phi.clone()),
        problem,
        Objective::G,
        eps,
        budget,
    ))?;
    let bound_desync = desync_round_bound(problem, start);
    let bound_fast = fast_desync_round_bound(problem, start).rounds;
    let violation = desync.is_none_or(|r| r as f64 > bound_desync)
        || fast.is_none_or(|r| r as f64 > bound_fast);
    Ok(StartCheck {
        desync,
        fast,
        bound_desync,
        bound_fast,
        violation,
    })
}

fn trial(problem: &SingleChannelProblem, spec: &ExperimentSpec, t: usize) -> Result<StartCheck> {
    let budget = if spec.max_rounds > 0 {
        spec.max_rounds
    } else {
        default_max_rounds_single(problem)
    };
    let phi = PhaseVector::new(initial_phases(
        &mut trial_rng(spec.seed_base, t),
        problem.n(),
    ))?;
    check_start(&phi, problem, budget)
}

/// Observed worst-case rounds against the round bounds, per `(n, alpha, epsilon)`.
pub fn compare_bounds(spec: &ExperimentSpec) -> Result<Vec<BoundRow>> {
    if !spec
        .mode
        .iter()
        .all(|m| matches!(m, Mode::Desync | Mode::FastDesync))
    {
        return Err(Error::Config(
            "mode: bound comparison needs desync or fast-desync".into(),
        ));
    }
    let mut rows = Vec::new();
    for &n in &spec.n {
        for &eps in &spec.epsilon {
            for &alpha in &spec.alpha {
                let problem = SingleChannelProblem::new(n, alpha, eps)?;
                let trials = (0..spec.trials)
                    .into_par_iter()
                    .map(|t| trial(&problem, spec, t))
                    .collect::<Result<Vec<_>>>()?;
                let max_of = |f: fn(&StartCheck) -> Option<usize>| {
                    trials
                        .iter()
                        .map(|t| f(t).map_or(f64::INFINITY, |r| r as f64))
                        .fold(0.0, f64::max)
                };
                let max_d = max_of(|t| t.desync);
                let max_f = max_of(|t| t.fast);
                let bound_desync = desync_round_bound(&problem, BoundStart::WorstCase);
                let fast = fast_desync_round_bound(&problem, BoundStart::WorstCase);
                let start_bound_violations = trials.iter().filter(|t| t.violation).count();
                rows.push(BoundRow {
                    n,
                    alpha,
                    epsilon: eps,
                    trials: spec.trials,
                    max_rounds_desync: max_d,
                    max_rounds_fast: max_f,
                    bound_desync,
                    bound_fast: fast.rounds,
                    guaranteed: fast.guaranteed,
                    failed_desync: trials.iter().filter(|t| t.desync.is_none()).count(),
                    failed_fast: trials.iter().filter(|t| t.fast.is_none()).count(),
                    start_bound_violations,
                    violated: max_d > bound_desync
                        || max_f > fast.rounds
                        || start_bound_violations > 0,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_bounds_csv<W: std::io::Write>(out: W, rows: &[BoundRow]) -> Result<()> {
    let to_err = |e: csv::Error| Error::Io {
        path: "<bounds>".into(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BOUNDS_HEADER).map_err(to_err)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            format!("{}", r.alpha),
            format!("{}", r.epsilon),
            r.trials.to_string(),
            format!("{}", r.max_rounds_desync),
            format!("{}", r.max_rounds_fast),
            format!("{}", r.bound_desync),
            format!("{}", r.bound_fast),
            r.guaranteed.to_string(),
            r.violated.to_string(),
        ])
        .map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<bounds>".into(),
        message: e.to_string(),
    })
}
