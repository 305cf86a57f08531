use crate::error::{check_len, Error, Result};
use crate::math::{MultichannelProblem, PhaseVector};

use super::momentum;

/// Momentum memory of one channel's Desync coordinates (indices `1..n`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMomentum {
    pub phi_prev: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelState {
    pub phis: Vec<PhaseVector>,
    pub nesterov: Option<Vec<ChannelMomentum>>,
    pub k: usize,
}

impl MultichannelState {
    pub fn new(phis: Vec<PhaseVector>) -> Self {
        Self {
            phis,
            nesterov: None,
            k: 0,
        }
    }

    /// State with momentum memory initialised to `mu = phi`.
    pub fn with_momentum(phis: Vec<PhaseVector>) -> Self {
        let memory = phis
            .iter()
            .map(|p| ChannelMomentum {
                phi_prev: p.as_slice()[1..].to_vec(),
                mu: p.as_slice()[1..].to_vec(),
            })
            .collect();
        Self {
            phis,
            nesterov: Some(memory),
            k: 0,
        }
    }

    /// Sum of Sync offsets, `u^T phi`.
    pub fn sync_sum(&self) -> f64 {
        self.phis.iter().map(|p| p[0]).sum()
    }

    /// Stacked vector `(phi_1; ...; phi_C)`.
    pub fn stacked(&self) -> Vec<f64> {
        self.phis
            .iter()
            .flat_map(|p| p.as_slice().iter().cloned())
            .collect()
    }

    fn check(&self, problem: &MultichannelProblem) -> Result<()> {
        crate::math::objective::check_channels(&self.phis, problem)
    }
}

/// Desync rows of one channel; `y[0]` is the Sync coordinate, not updated here.
fn desync_rows(y: &[f64], beta: f64) -> Vec<f64> {
    let n = y.len();
    (1..n)
        .map(|i| {
            let hi = if i + 1 == n { y[0] + 1.0 } else { y[i + 1] };
            (1.0 - 2.0 * beta) * y[i] + beta * (y[i - 1] + hi)
        })
        .collect()
}

fn sync_rows(state: &MultichannelState, problem: &MultichannelProblem) -> Vec<f64> {
    let g = problem.gamma();
    (0..problem.channels())
        .map(|c| (1.0 - g) * state.phis[c][0] + g * state.phis[problem.next(c)][0])
        .collect()
}

pub fn much_round(
    state: &MultichannelState,
    problem: &MultichannelProblem,
) -> Result<MultichannelState> {
    state.check(problem)?;
    let k = state.k + 1;
    let sync = sync_rows(state, problem);
    let phis = state
        .phis
        .iter()
        .zip(sync)
        .map(|(p, s)| {
            let mut out = Vec::with_capacity(p.len());
            out.push(s);
            out.extend(desync_rows(p.as_slice(), problem.beta()));
            PhaseVector::checked(out, k)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MultichannelState {
        phis,
        nesterov: state.nesterov.clone(),
        k,
    })
}

pub fn fast_much_round(
    state: &MultichannelState,
    problem: &MultichannelProblem,
) -> Result<MultichannelState> {
    state.check(problem)?;
    let memory = state.nesterov.as_ref().ok_or(Error::MissingMomentum)?;
    check_len(problem.channels(), memory.len())?;
    let k = state.k + 1;
    let m = momentum(k);
    let sync = sync_rows(state, problem);
    let mut phis = Vec::with_capacity(problem.channels());
    let mut next_memory = Vec::with_capacity(problem.channels());
    for ((p, mem), s) in state.phis.iter().zip(memory).zip(sync) {
        check_len(p.len() - 1, mem.mu.len())?;
        let mut y = Vec::with_capacity(p.len());
        y.push(p[0]);
        y.extend_from_slice(&mem.mu);
        let desync = desync_rows(&y, problem.beta());
        let mu: Vec<f64> = desync
            .iter()
            .zip(&p.as_slice()[1..])
            .map(|(new, old)| new + m * (new - old))
            .collect();
        let mut out = Vec::with_capacity(p.len());
        out.push(s);
        out.extend_from_slice(&desync);
        phis.push(PhaseVector::checked(out, k)?);
        if let Some(&value) = mu.iter().find(|v| !v.is_finite()) {
            return Err(Error::Diverged { round: k, value });
        }
        next_memory.push(ChannelMomentum {
            phi_prev: p.as_slice()[1..].to_vec(),
            mu,
        });
    }
    Ok(MultichannelState {
        phis,
        nesterov: Some(next_memory),
        k,
    })
}
