use serde::{Deserialize, Serialize};

use crate::error::{check_unit_open, Error, Result};
use crate::rounds::Objective;
use crate::sim::{StalenessMode, SyncRule, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Desync,
    FastDesync,
    Much,
    FastMuch,
    EventSim,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Desync => "desync",
            Mode::FastDesync => "fast-desync",
            Mode::Much => "much",
            Mode::FastMuch => "fast-much",
            Mode::EventSim => "event-sim",
        }
    }

    pub fn is_multichannel(self) -> bool {
        matches!(self, Mode::Much | Mode::FastMuch)
    }

    pub fn is_fast(self) -> bool {
        matches!(self, Mode::FastDesync | Mode::FastMuch)
    }

    /// Plain counterpart of an accelerated mode.
    pub fn baseline(self) -> Option<Mode> {
        match self {
            Mode::FastDesync => Some(Mode::Desync),
            Mode::FastMuch => Some(Mode::Much),
            _ => None,
        }
    }
}

/// A scalar or a list in config text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// `{0.05, 0.10, ..., 0.95}`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 * 0.05).map(round12).collect()
}

pub fn default_gamma_grid() -> Vec<f64> {
    vec![0.2, 0.4, 0.6, 0.8]
}

pub fn default_epsilons() -> Vec<f64> {
    vec![1e-3, 1e-4]
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Event-sim settings shared by every sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSettings {
    pub period_t: f64,
    pub loss_probability: f64,
    pub topology: Topology,
    pub staleness_mode: StalenessMode,
    pub sync_rule: SyncRule,
    pub nesterov: bool,
    pub max_time: f64,
    pub balance: bool,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            period_t: 0.1,
            loss_probability: 0.0,
            topology: Topology::Full,
            staleness_mode: StalenessMode::Live,
            sync_rule: SyncRule::Consensus,
            nesterov: false,
            max_time: 1000.0,
            balance: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    pub dir: String,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

/// Raw config text shape; every field optional except `mode`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    mode: OneOrMany<Mode>,
    n: Option<OneOrMany<usize>>,
    channels: Option<OneOrMany<usize>>,
    alpha: Option<Vec<f64>>,
    beta: Option<Vec<f64>>,
    gamma: Option<Vec<f64>>,
    epsilon: Option<Vec<f64>>,
    trials: Option<usize>,
    seed_base: Option<u64>,
    objective: Option<Objective>,
    max_rounds: Option<usize>,
    output: Option<OutputSettings>,
    sim: Option<SimSettings>,
    spectra: Option<SpectraGrid>,
}

/// Grid for spectral certification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectraGrid {
    pub n: Vec<usize>,
    pub channels: Vec<usize>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl Default for SpectraGrid {
    fn default() -> Self {
        Self {
            n: vec![3, 4, 5],
            channels: vec![2, 3, 4],
            beta: vec![0.05, 0.15, 0.25, 0.35, 0.45],
            gamma: vec![0.1, 0.3, 0.5, 0.7, 0.9],
        }
    }
}

/// Fully validated experiment description with defaults applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub mode: Vec<Mode>,
    /// Nodes per channel.
    pub n: Vec<usize>,
    /// Channel counts; `[1]` for single-channel modes.
    pub channels: Vec<usize>,
    /// Desync jump grid. Multichannel modes use `beta = alpha / 2` unless `beta` is set.
    pub alpha: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
    pub gamma: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub trials: usize,
    pub seed_base: u64,
    /// Convergence measure of multichannel modes.
    pub objective: Objective,
    /// Zero selects ten times the worst-case Desync bound.
    pub max_rounds: usize,
    pub output: OutputSettings,
    pub sim: SimSettings,
    pub spectra: SpectraGrid,
}

impl ExperimentSpec {
    /// Desync step values of the multichannel grid.
    pub fn beta_grid(&self) -> Vec<f64> {
        self.beta
            .clone()
            .unwrap_or_else(|| self.alpha.iter().map(|a| a / 2.0).collect())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let nonempty = |name: &str, len: usize| {
            if len == 0 {
                Err(Error::Config(format!("{name}: grid must be nonempty")))
            } else {
                Ok(())
            }
        };
        nonempty("mode", self.mode.len())?;
        nonempty("n", self.n.len())?;
        nonempty("channels", self.channels.len())?;
        nonempty("alpha", self.alpha.len())?;
        nonempty("gamma", self.gamma.len())?;
        nonempty("epsilon", self.epsilon.len())?;
        if self.trials < 1 {
            return Err(Error::Config("trials: must be at least 1".into()));
        }
        for &a in &self.alpha {
            check_unit_open("alpha", a)?;
        }
        if let Some(beta) = &self.beta {
            nonempty("beta", beta.len())?;
            for &b in beta {
                if !(b > 0.0 && b < 0.5) {
                    return Err(Error::OutOfRange {
                        name: "beta",
                        range: "(0,1/2)",
                        value: b,
                    });
                }
            }
        }
        for &g in &self.gamma {
            check_unit_open("gamma", g)?;
        }
        for &e in &self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::OutOfRange {
                    name: "epsilon",
                    range: "(0,inf)",
                    value: e,
                });
            }
        }
        for &mode in &self.mode {
            let min_n = if mode == Mode::EventSim { 1 } else { 2 };
            if let Some(&bad) = self.n.iter().find(|&&n| n < min_n) {
                return Err(Error::Config(format!(
                    "n: {bad} is below the minimum of {min_n} for mode {}",
                    mode.name()
                )));
            }
            match mode {
                Mode::Desync | Mode::FastDesync if self.channels != [1] => {
                    return Err(Error::Config(format!(
                        "channels: mode {} is single-channel, expected [1]",
                        mode.name()
                    )))
                }
                Mode::Much | Mode::FastMuch if self.channels.iter().any(|&c| c < 2) => {
                    return Err(Error::Config(format!(
                        "channels: mode {} needs at least 2 channels",
                        mode.name()
                    )))
                }
                Mode::EventSim if self.channels.contains(&0) => {
                    return Err(Error::Config("channels: must be at least 1".into()))
                }
                _ => {}
            }
        }
        if self.mode.iter().any(|m| m.is_multichannel()) && self.objective == Objective::G {
            return Err(Error::Config(
                "objective: multichannel modes use h or channel-max".into(),
            ));
        }
        let s = &self.sim;
        if !(s.period_t > 0.0) {
            return Err(Error::OutOfRange {
                name: "sim.period_t",
                range: "(0,inf)",
                value: s.period_t,
            });
        }
        if !(0.0..1.0).contains(&s.loss_probability) {
            return Err(Error::OutOfRange {
                name: "sim.loss_probability",
                range: "[0,1)",
                value: s.loss_probability,
            });
        }
        if !(s.max_time > 0.0) {
            return Err(Error::OutOfRange {
                name: "sim.max_time",
                range: "(0,inf)",
                value: s.max_time,
            });
        }
        Ok(())
    }
}

/// Parses TOML config text, applies defaults and validates.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec> {
    let raw: RawSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let mode = raw.mode.to_vec();
    let multichannel = mode.iter().any(|m| m.is_multichannel());
    let spec = ExperimentSpec {
        n: raw.n.map(|v| v.to_vec()).unwrap_or_else(|| vec![4]),
        channels: raw.channels.map(|v| v.to_vec()).unwrap_or_else(|| {
            if multichannel {
                vec![6, 16]
            } else {
                vec![1]
            }
        }),
        alpha: raw.alpha.unwrap_or_else(default_alpha_grid),
        beta: raw.beta,
        gamma: raw.gamma.unwrap_or_else(default_gamma_grid),
        epsilon: raw.epsilon.unwrap_or_else(default_epsilons),
        trials: raw.trials.unwrap_or(400),
        seed_base: raw.seed_base.unwrap_or(0),
        objective: raw.objective.unwrap_or(if multichannel {
            Objective::H
        } else {
            Objective::G
        }),
        max_rounds: raw.max_rounds.unwrap_or(0),
        output: raw.output.unwrap_or_default(),
        sim: raw.sim.unwrap_or_default(),
        spectra: raw.spectra.unwrap_or_default(),
        mode,
    };
    spec.validate()?;
    Ok(spec)
}
