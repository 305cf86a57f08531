use super::{PhaseVector, SingleChannelProblem};
use crate::error::{check_len, Result};

/// What is known about the starting point when a bound is requested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundStart {
    /// Nothing known: worst-case distance, `1/g0` dropped.
    WorstCase,
    /// Worst-case distance, but `g0 = g(phi0)` known.
    WorstCaseWithObjective(f64),
    /// Squared distance to the solution set and `g0` both known.
    Known { distance_sq: f64, objective: f64 },
}

impl BoundStart {
    pub fn from_start(phi0: &PhaseVector, problem: &SingleChannelProblem) -> Result<Self> {
        Ok(BoundStart::Known {
            distance_sq: solution_distance(phi0, problem)?,
            objective: super::objective_g(phi0, problem)?,
        })
    }

    fn objective(&self) -> Option<f64> {
        match *self {
            BoundStart::WorstCase => None,
            BoundStart::WorstCaseWithObjective(g0) => Some(g0),
            BoundStart::Known { objective, .. } => Some(objective),
        }
    }
}

/// Accelerated-variant bound with its guarantee status.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastBound {
    pub rounds: f64,
    /// False when `alpha > 1/2`: the value is computed but not proven.
    pub guaranteed: bool,
}

/// Upper bound on the squared distance from any start in `[0,1]^n` to the solution set.
pub fn worst_case_distance_sq(n: usize) -> f64 {
    let n = n as f64;
    (3.5 * n * n + 3.0 * n + 4.0) / (3.0 * n)
}

/// Squared distance from `phi0` to `{phi_bar + z 1}`, `phi_bar = (0, 1/n, ...)`.
pub fn solution_distance(phi0: &PhaseVector, problem: &SingleChannelProblem) -> Result<f64> {
    check_len(problem.n(), phi0.len())?;
    let v = problem.v();
    let diff: Vec<f64> = phi0
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, p)| p - i as f64 * v)
        .collect();
    let z = diff.iter().sum::<f64>() / diff.len() as f64;
    Ok(diff.iter().map(|x| (x - z) * (x - z)).sum())
}

/// Firing rounds sufficient for Desync to reach `g <= epsilon`.
pub fn desync_round_bound(problem: &SingleChannelProblem, start: BoundStart) -> f64 {
    let eps = problem.epsilon();
    let inv_g0 = match start.objective() {
        Some(g0) if g0 <= eps => return 0.0,
        Some(g0) => 1.0 / g0,
        None => 0.0,
    };
    let a = problem.alpha();
    let dist_sq = match start {
        BoundStart::Known { distance_sq, .. } => distance_sq,
        _ => worst_case_distance_sq(problem.n()),
    };
    dist_sq / (2.0 * a * (1.0 - a)) * (1.0 / eps - inv_g0)
}

/// Firing rounds sufficient for Fast-Desync to reach `g <= epsilon`.
pub fn fast_desync_round_bound(problem: &SingleChannelProblem, start: BoundStart) -> FastBound {
    let guaranteed = problem.fast_guaranteed();
    if matches!(start.objective(), Some(g0) if g0 <= problem.epsilon()) {
        return FastBound {
            rounds: 0.0,
            guaranteed,
        };
    }
    let dist_sq = match start {
        BoundStart::Known { distance_sq, .. } => distance_sq,
        _ => worst_case_distance_sq(problem.n()),
    };
    FastBound {
        rounds: 2.0 / (problem.alpha() * problem.epsilon()).sqrt() * dist_sq.sqrt(),
        guaranteed,
    }
}
