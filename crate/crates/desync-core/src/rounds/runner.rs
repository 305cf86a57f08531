use serde::{Deserialize, Serialize};

use super::{
    desync_round, fast_desync_round, fast_much_round, much_round, DesyncState, MultichannelState,
    NesterovState,
};
use crate::error::{Error, Result};
use crate::math::{
    desync_round_bound, objective_g, objective_h_parts, BoundStart, MultichannelProblem,
    SingleChannelProblem,
};

/// Convergence measure evaluated once per round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Single-channel `g`.
    G,
    /// Multichannel `h`.
    H,
    /// Largest per-channel `g_c`, ignoring the Sync coupling term.
    ChannelMax,
}

impl Objective {
    fn name(self) -> &'static str {
        match self {
            Objective::G => "g",
            Objective::H => "h",
            Objective::ChannelMax => "channel-max",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rounds: usize,
    pub final_objective: f64,
    /// One entry per completed round.
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// A state that one synchronous round can advance.
pub trait RoundState: Clone {
    type Problem;
    fn advance(&self, problem: &Self::Problem) -> Result<Self>;
    fn objective(&self, problem: &Self::Problem, which: Objective) -> Result<f64>;
}

fn single_objective(which: Objective) -> Result<()> {
    match which {
        Objective::G => Ok(()),
        other => Err(Error::UnsupportedObjective {
            objective: other.name(),
        }),
    }
}

impl RoundState for DesyncState {
    type Problem = SingleChannelProblem;
    fn advance(&self, problem: &SingleChannelProblem) -> Result<Self> {
        desync_round(self, problem)
    }
    fn objective(&self, problem: &SingleChannelProblem, which: Objective) -> Result<f64> {
        single_objective(which)?;
        objective_g(&self.phi, problem)
    }
}

impl RoundState for NesterovState {
    type Problem = SingleChannelProblem;
    fn advance(&self, problem: &SingleChannelProblem) -> Result<Self> {
        fast_desync_round(self, problem)
    }
    fn objective(&self, problem: &SingleChannelProblem, which: Objective) -> Result<f64> {
        single_objective(which)?;
        objective_g(&self.phi, problem)
    }
}

impl RoundState for MultichannelState {
    type Problem = MultichannelProblem;
    fn advance(&self, problem: &MultichannelProblem) -> Result<Self> {
        if self.nesterov.is_some() {
            fast_much_round(self, problem)
        } else {
            much_round(self, problem)
        }
    }
    fn objective(&self, problem: &MultichannelProblem, which: Objective) -> Result<f64> {
        let parts = objective_h_parts(&self.phis, problem)?;
        match which {
            Objective::H => Ok(parts.total()),
            Objective::ChannelMax => Ok(parts.max_channel()),
            Objective::G => Err(Error::UnsupportedObjective { objective: "g" }),
        }
    }
}

/// Ten times the worst-case Desync bound, rounded up.
pub fn default_max_rounds_single(problem: &SingleChannelProblem) -> usize {
    (10.0 * desync_round_bound(problem, BoundStart::WorstCase)).ceil() as usize
}

/// Ten times the worst-case Desync bound of the largest channel at `alpha = 2 beta`.
pub fn default_max_rounds_multi(problem: &MultichannelProblem, epsilon: f64) -> Result<usize> {
    let n = *problem
        .channel_counts()
        .iter()
        .max()
        .expect("at least two channels");
    let single = SingleChannelProblem::new(n, problem.alpha(), epsilon)?;
    Ok(default_max_rounds_single(&single))
}

/// Iterates until the objective drops to `epsilon` or `max_rounds` rounds pass.
pub fn run_to_state<S: RoundState>(
    initial: S,
    problem: &S::Problem,
    objective: Objective,
    epsilon: f64,
    max_rounds: usize,
) -> Result<(ConvergenceReport, S)> {
    if max_rounds < 1 {
        return Err(Error::TooSmall {
            what: "max_rounds",
            min: 1,
            got: max_rounds,
        });
    }
    let mut state = initial;
    let mut value = state.objective(problem, objective)?;
    let mut trace = Vec::new();
    let mut rounds = 0;
    while value > epsilon && rounds < max_rounds {
        state = match state.advance(problem) {
            Ok(s) => s,
            Err(Error::Diverged { value, .. }) => {
                return Err(Error::Diverged {
                    round: rounds + 1,
                    value,
                })
            }
            Err(e) => return Err(e),
        };
        rounds += 1;
        value = state.objective(problem, objective)?;
        if !value.is_finite() {
            return Err(Error::Diverged {
                round: rounds,
                value,
            });
        }
        trace.push(value);
    }
    Ok((
        ConvergenceReport {
            rounds,
            final_objective: value,
            trace,
            converged: value <= epsilon,
        },
        state,
    ))
}

pub fn run_until_convergence<S: RoundState>(
    initial: S,
    problem: &S::Problem,
    objective: Objective,
    epsilon: f64,
    max_rounds: usize,
) -> Result<ConvergenceReport> {
    run_to_state(initial, problem, objective, epsilon, max_rounds).map(|(r, _)| r)
}
