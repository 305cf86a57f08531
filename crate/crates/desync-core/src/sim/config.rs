use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit_open, Error, Result};

/// How a Desync listener learns its neighbours' phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StalenessMode {
    /// Both neighbours read from the snapshot taken when the firing round began.
    Assumption1,
    /// The predecessor is the fire just heard; the successor is the cached previous fire.
    #[default]
    Live,
}

/// Cross-channel rule applied by a Sync node when the next channel's Sync fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyncRule {
    /// Linear consensus on lifted offsets; fire messages carry the sender's
    /// fire count so the receiver can lift without wrap ambiguity.
    #[default]
    Consensus,
    /// `theta' = ((1 - gamma) theta + gamma) mod 1`.
    Inhibitory,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum Topology {
    #[default]
    Full,
    /// `deaf_nodes` random nodes each ignore `ignored_each` random other nodes.
    HiddenNodes {
        deaf_nodes: usize,
        ignored_each: usize,
    },
    /// `hears[u][w]`: node `u` hears node `w`.
    Matrix { hears: Vec<Vec<bool>> },
}

/// Listen matrix. The diagonal is ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    hears: Vec<Vec<bool>>,
}

impl Adjacency {
    pub fn full(n: usize) -> Self {
        Self {
            hears: vec![vec![true; n]; n],
        }
    }

    pub fn from_matrix(hears: Vec<Vec<bool>>) -> Result<Self> {
        let n = hears.len();
        if hears.iter().any(|row| row.len() != n) {
            return Err(Error::Config("adjacency matrix must be square".into()));
        }
        Ok(Self { hears })
    }

    pub fn hidden_nodes<R: Rng>(
        n: usize,
        deaf_nodes: usize,
        ignored_each: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if deaf_nodes > n || (deaf_nodes > 0 && ignored_each >= n) {
            return Err(Error::Config(format!(
                "topology: cannot pick {deaf_nodes} deaf nodes ignoring {ignored_each} of {n}"
            )));
        }
        let mut adj = Self::full(n);
        for u in sample(rng, n, deaf_nodes).into_iter() {
            // draw among the n - 1 other nodes
            for k in sample(rng, n - 1, ignored_each).into_iter() {
                let w = if k >= u { k + 1 } else { k };
                adj.hears[u][w] = false;
            }
        }
        Ok(adj)
    }

    pub fn len(&self) -> usize {
        self.hears.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hears.is_empty()
    }

    pub fn hears(&self, listener: usize, sender: usize) -> bool {
        self.hears[listener][sender]
    }

    /// Number of ordered pairs `(u, w)`, `u != w`, where `u` cannot hear `w`.
    pub fn hidden_pairs(&self) -> usize {
        let n = self.len();
        (0..n)
            .flat_map(|u| (0..n).map(move |w| (u, w)))
            .filter(|&(u, w)| u != w && !self.hears[u][w])
            .count()
    }
}

fn default_period() -> f64 {
    0.1
}
fn default_jump() -> f64 {
    0.6
}
fn default_miss_threshold() -> usize {
    10
}
fn default_guard() -> f64 {
    0.006
}
fn default_epsilon() -> f64 {
    1e-4
}
fn default_max_time() -> f64 {
    1000.0
}
fn default_true() -> bool {
    true
}

/// Simulator configuration. Times are in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_period")]
    pub period_t: f64,
    #[serde(default = "default_jump")]
    pub alpha: f64,
    #[serde(default = "default_jump")]
    pub gamma: f64,
    pub channels: usize,
    pub nodes: usize,
    #[serde(default)]
    pub loss_probability: f64,
    #[serde(default)]
    pub topology: Topology,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub staleness_mode: StalenessMode,
    #[serde(default = "default_miss_threshold")]
    pub consecutive_miss_threshold: usize,
    #[serde(default = "default_guard")]
    pub guard_time: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_time")]
    pub max_time: f64,
    /// Fast variant: Desync nodes keep momentum memory.
    #[serde(default)]
    pub nesterov: bool,
    #[serde(default)]
    pub sync_rule: SyncRule,
    /// Run the channel-switching rule before the first fire.
    #[serde(default = "default_true")]
    pub balance: bool,
    /// Initial phases `theta_i(0)`; drawn uniformly when absent.
    #[serde(default)]
    pub initial_phases: Option<Vec<f64>>,
    /// Initial channel of each node; drawn uniformly when absent.
    #[serde(default)]
    pub initial_channels: Option<Vec<usize>>,
}

impl SimConfig {
    pub fn new(nodes: usize, channels: usize) -> Self {
        Self {
            period_t: default_period(),
            alpha: default_jump(),
            gamma: default_jump(),
            channels,
            nodes,
            loss_probability: 0.0,
            topology: Topology::Full,
            rng_seed: 0,
            staleness_mode: StalenessMode::Live,
            consecutive_miss_threshold: default_miss_threshold(),
            guard_time: default_guard(),
            epsilon: default_epsilon(),
            max_time: default_max_time(),
            nesterov: false,
            sync_rule: SyncRule::Consensus,
            balance: true,
            initial_phases: None,
            initial_channels: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period_t > 0.0 && self.period_t.is_finite()) {
            return Err(Error::OutOfRange {
                name: "period_t",
                range: "(0,inf)",
                value: self.period_t,
            });
        }
        check_unit_open("alpha", self.alpha)?;
        check_unit_open("gamma", self.gamma)?;
        if self.nodes == 0 {
            return Err(Error::EmptyNetwork);
        }
        if self.channels == 0 || self.channels > self.nodes {
            return Err(Error::Config(format!(
                "channels must be in [1, nodes]: {} channels for {} nodes",
                self.channels, self.nodes
            )));
        }
        if !(0.0..1.0).contains(&self.loss_probability) {
            return Err(Error::OutOfRange {
                name: "loss_probability",
                range: "[0,1)",
                value: self.loss_probability,
            });
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::OutOfRange {
                name: "epsilon",
                range: "(0,inf)",
                value: self.epsilon,
            });
        }
        if !(self.max_time > 0.0) {
            return Err(Error::OutOfRange {
                name: "max_time",
                range: "(0,inf)",
                value: self.max_time,
            });
        }
        if self.consecutive_miss_threshold == 0 {
            return Err(Error::TooSmall {
                what: "consecutive_miss_threshold",
                min: 1,
                got: 0,
            });
        }
        if !(self.guard_time >= 0.0) {
            return Err(Error::OutOfRange {
                name: "guard_time",
                range: "[0,inf)",
                value: self.guard_time,
            });
        }
        if let Some(p) = &self.initial_phases {
            if p.len() != self.nodes {
                return Err(Error::DimensionMismatch {
                    expected: self.nodes,
                    found: p.len(),
                });
            }
            if let Some(&bad) = p.iter().find(|v| !(0.0..1.0).contains(*v)) {
                return Err(Error::OutOfRange {
                    name: "initial_phases",
                    range: "[0,1)",
                    value: bad,
                });
            }
        }
        if let Some(c) = &self.initial_channels {
            if c.len() != self.nodes {
                return Err(Error::DimensionMismatch {
                    expected: self.nodes,
                    found: c.len(),
                });
            }
            if let Some(&bad) = c.iter().find(|&&ch| ch >= self.channels) {
                return Err(Error::ChannelIndex {
                    index: bad,
                    channels: self.channels,
                });
            }
        }
        if let Topology::Matrix { hears } = &self.topology {
            if hears.len() != self.nodes {
                return Err(Error::DimensionMismatch {
                    expected: self.nodes,
                    found: hears.len(),
                });
            }
        }
        Ok(())
    }
}
