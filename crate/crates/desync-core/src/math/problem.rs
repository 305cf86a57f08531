use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_unit_open, Error, Result};

/// Single-channel instance: `n` nodes, jump parameter `alpha`, threshold `epsilon`.
///
/// `alpha` is stored; `beta = alpha / 2` is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleChannelProblem {
    n: usize,
    alpha: f64,
    epsilon: f64,
}

impl SingleChannelProblem {
    pub fn new(n: usize, alpha: f64, epsilon: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooSmall {
                what: "node count",
                min: 2,
                got: n,
            });
        }
        check_unit_open("alpha", alpha)?;
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::OutOfRange {
                name: "epsilon",
                range: "(0,inf)",
                value: epsilon,
            });
        }
        Ok(Self { n, alpha, epsilon })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.alpha / 2.0
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Target spacing `1/n`.
    pub fn v(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Lipschitz constant of the gradient of `g`.
    pub fn lipschitz(&self) -> f64 {
        4.0
    }

    /// Whether the accelerated bound is guaranteed for this `alpha`.
    pub fn fast_guaranteed(&self) -> bool {
        self.alpha <= 0.5
    }

    /// Circular difference matrix: rows `(-1, 1)` shifted, last row `(1, 0, ..., -1)`.
    pub fn d_matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n - 1 {
            d[(i, i)] = -1.0;
            d[(i, i + 1)] = 1.0;
        }
        d[(n - 1, 0)] += 1.0;
        d[(n - 1, n - 1)] -= 1.0;
        d
    }

    /// `d = (1, 0, ..., 0, -1)`.
    pub fn d_vector(&self) -> DVector<f64> {
        let mut d = DVector::zeros(self.n);
        d[0] = 1.0;
        d[self.n - 1] = -1.0;
        d
    }

    pub fn e_n(&self) -> DVector<f64> {
        let mut e = DVector::zeros(self.n);
        e[self.n - 1] = 1.0;
        e
    }
}

/// Multichannel instance with per-channel node counts.
///
/// Stored in `beta` (Desync step) and `gamma` (Sync consensus step).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultichannelProblem {
    channel_counts: Vec<usize>,
    beta: f64,
    gamma: f64,
}

impl MultichannelProblem {
    pub fn new(channel_counts: Vec<usize>, beta: f64, gamma: f64) -> Result<Self> {
        if channel_counts.len() < 2 {
            return Err(Error::TooSmall {
                what: "channel count",
                min: 2,
                got: channel_counts.len(),
            });
        }
        if let Some(&bad) = channel_counts.iter().find(|&&n| n < 2) {
            return Err(Error::TooSmall {
                what: "nodes per channel",
                min: 2,
                got: bad,
            });
        }
        if !(beta > 0.0 && beta < 0.5) {
            return Err(Error::OutOfRange {
                name: "beta",
                range: "(0,1/2)",
                value: beta,
            });
        }
        check_unit_open("gamma", gamma)?;
        Ok(Self {
            channel_counts,
            beta,
            gamma,
        })
    }

    pub fn uniform(channels: usize, n: usize, beta: f64, gamma: f64) -> Result<Self> {
        Self::new(vec![n; channels], beta, gamma)
    }

    /// Builds from the single-channel jump parameter (`beta = alpha / 2`).
    pub fn from_alpha(channel_counts: Vec<usize>, alpha: f64, gamma: f64) -> Result<Self> {
        check_unit_open("alpha", alpha)?;
        Self::new(channel_counts, alpha / 2.0, gamma)
    }

    pub fn channel_counts(&self) -> &[usize] {
        &self.channel_counts
    }

    pub fn channels(&self) -> usize {
        self.channel_counts.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha(&self) -> f64 {
        2.0 * self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn total_nodes(&self) -> usize {
        self.channel_counts.iter().sum()
    }

    /// Common channel size, if all channels agree.
    pub fn uniform_size(&self) -> Option<usize> {
        let first = self.channel_counts[0];
        self.channel_counts
            .iter()
            .all(|&n| n == first)
            .then_some(first)
    }

    /// Index of each channel's first coordinate in the stacked vector.
    pub fn block_offsets(&self) -> Vec<usize> {
        self.channel_counts
            .iter()
            .scan(0, |acc, &n| {
                let start = *acc;
                *acc += n;
                Some(start)
            })
            .collect()
    }

    /// Stacked indicator of Sync coordinates, `u = (e1; ...; e1)`.
    pub fn sync_indicator(&self) -> DVector<f64> {
        let mut u = DVector::zeros(self.total_nodes());
        for start in self.block_offsets() {
            u[start] = 1.0;
        }
        u
    }

    pub(crate) fn next(&self, c: usize) -> usize {
        (c + 1) % self.channels()
    }

    pub(crate) fn prev(&self, c: usize) -> usize {
        (c + self.channels() - 1) % self.channels()
    }
}
