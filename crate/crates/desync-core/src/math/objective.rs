use super::{MultichannelProblem, PhaseVector, SingleChannelProblem};
use crate::error::{check_len, Error, Result};

/// Circular gap residuals `r = D phi - (1/n) 1 + e_n` for a channel of any length.
pub fn channel_residuals(phi: &[f64]) -> Vec<f64> {
    let n = phi.len();
    let v = 1.0 / n as f64;
    (0..n)
        .map(|i| {
            if i + 1 < n {
                phi[i + 1] - phi[i] - v
            } else {
                phi[0] + 1.0 - phi[i] - v
            }
        })
        .collect()
}

pub(crate) fn g_of(phi: &[f64]) -> f64 {
    0.5 * channel_residuals(phi).iter().map(|r| r * r).sum::<f64>()
}

/// `D^T r` for the circular difference matrix: `(r_{j-1} - r_j)` cyclically.
pub(crate) fn grad_g_of(phi: &[f64]) -> Vec<f64> {
    let r = channel_residuals(phi);
    let n = r.len();
    (0..n).map(|j| r[(j + n - 1) % n] - r[j]).collect()
}

pub fn objective_g(phi: &PhaseVector, problem: &SingleChannelProblem) -> Result<f64> {
    check_len(problem.n(), phi.len())?;
    Ok(g_of(phi.as_slice()))
}

pub fn gradient_g(phi: &PhaseVector, problem: &SingleChannelProblem) -> Result<PhaseVector> {
    check_len(problem.n(), phi.len())?;
    Ok(PhaseVector::from_raw(grad_g_of(phi.as_slice())))
}

pub(crate) fn check_channels(phis: &[PhaseVector], problem: &MultichannelProblem) -> Result<()> {
    check_len(problem.channels(), phis.len())?;
    for (phi, &n) in phis.iter().zip(problem.channel_counts()) {
        check_len(n, phi.len())?;
    }
    Ok(())
}

/// Per-channel `g_c` values and the cross-channel coupling term of `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct HParts {
    pub channel: Vec<f64>,
    pub cross: f64,
}

impl HParts {
    pub fn total(&self) -> f64 {
        self.channel.iter().sum::<f64>() + self.cross
    }

    pub fn max_channel(&self) -> f64 {
        self.channel.iter().cloned().fold(0.0, f64::max)
    }
}

pub(crate) fn cross_term(sync: &[f64]) -> f64 {
    let c = sync.len();
    0.5 * (0..c)
        .map(|i| {
            let d = sync[(i + 1) % c] - sync[i];
            d * d
        })
        .sum::<f64>()
}

pub fn objective_h_parts(phis: &[PhaseVector], problem: &MultichannelProblem) -> Result<HParts> {
    check_channels(phis, problem)?;
    let sync: Vec<f64> = phis.iter().map(|p| p[0]).collect();
    Ok(HParts {
        channel: phis.iter().map(|p| g_of(p.as_slice())).collect(),
        cross: cross_term(&sync),
    })
}

pub fn objective_h(phis: &[PhaseVector], problem: &MultichannelProblem) -> Result<f64> {
    objective_h_parts(phis, problem).map(|p| p.total())
}

pub fn gradient_h_channel(
    c: usize,
    phis: &[PhaseVector],
    problem: &MultichannelProblem,
) -> Result<PhaseVector> {
    check_channels(phis, problem)?;
    if c >= problem.channels() {
        return Err(Error::ChannelIndex {
            index: c,
            channels: problem.channels(),
        });
    }
    let mut grad = grad_g_of(phis[c].as_slice());
    grad[0] += 2.0 * phis[c][0] - phis[problem.prev(c)][0] - phis[problem.next(c)][0];
    Ok(PhaseVector::from_raw(grad))
}
