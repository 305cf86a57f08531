use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{Adjacency, SimConfig, StalenessMode, SyncRule, Topology};
use super::rules::{
    apply_message_loss, balance_channels, elect_sync_node, sync_phase_update, wrap_centered,
    Delivery, MissTracker,
};
use super::trace::TraceRecord;
use crate::error::{Error, Result};
use crate::math::objective::g_of;
use crate::rounds::{momentum, ConvergenceReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Role {
    Sync,
    Desync,
}

/// Momentum memory of a fast Desync node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NesterovMemory {
    /// Registered offset minus fire position.
    pub lag: f64,
    /// Updates performed so far.
    pub counter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub node_id: usize,
    pub channel: usize,
    pub role: Role,
    /// Next fire time in periods.
    pub fire_at: f64,
    /// Fires so far, skipped epochs included.
    pub fires: u64,
    /// Last heard fire time per sender id, in periods.
    pub last_heard: Vec<Option<f64>>,
    pub nesterov: Option<NesterovMemory>,
    pub miss: MissTracker,
    /// Time of the latest fire, in periods.
    pub last_fired: Option<f64>,
    /// Fired since its last Desync update; live updates happen once per cycle.
    pub update_due: bool,
    /// Fire scheduled after a forced immediate one.
    pub next_after_fire: Option<f64>,
}

impl NodeState {
    /// `theta = 1 - (tau - now)`; equals 1 at the fire instant.
    pub fn theta(&self, now_periods: f64) -> f64 {
        1.0 - (self.fire_at - now_periods)
    }

    /// Recovered offset `phi = 1 - frac(tau)` in `[0, 1)`.
    pub fn offset(&self) -> f64 {
        (1.0 - self.fire_at).rem_euclid(1.0)
    }

    /// Lifted offset used by the consensus rule; constant between updates.
    fn lifted(&self) -> f64 {
        match self.next_after_fire {
            Some(next) => next - 1.0 - self.fires as f64,
            None => self.fire_at - self.fires as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FireEvent {
    /// Seconds.
    pub time: f64,
    pub node_id: usize,
    pub channel: usize,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub report: ConvergenceReport,
    pub trace: Vec<TraceRecord>,
    /// Rounds times `T`, when converged.
    pub time_to_convergence_s: Option<f64>,
}

/// Outcome of [`Simulator::run_until_steady`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyReport {
    pub rounds: usize,
    pub final_objective: f64,
    pub reached_epsilon: bool,
    /// Objective at epsilon, or offsets stationary.
    pub settled: bool,
}

pub struct Simulator {
    config: SimConfig,
    adjacency: Adjacency,
    nodes: Vec<NodeState>,
    members: Vec<Vec<usize>>,
    sync_of: Vec<usize>,
    now: f64,
    rng: ChaCha8Rng,
    round: usize,
    window_fired: Vec<bool>,
    window_remaining: usize,
    snapshot: Vec<f64>,
    updated_in_window: Vec<bool>,
    order: Vec<Vec<usize>>,
    order_changes: usize,
    trace: Vec<TraceRecord>,
    switches: usize,
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let n = config.nodes;
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let adjacency = match &config.topology {
            Topology::Full => Adjacency::full(n),
            Topology::HiddenNodes {
                deaf_nodes,
                ignored_each,
            } => Adjacency::hidden_nodes(n, *deaf_nodes, *ignored_each, &mut rng)?,
            Topology::Matrix { hears } => Adjacency::from_matrix(hears.clone())?,
        };
        let phases: Vec<f64> = match &config.initial_phases {
            Some(p) => p.clone(),
            None => (0..n).map(|_| rng.random::<f64>()).collect(),
        };
        let mut assignment: Vec<usize> = match &config.initial_channels {
            Some(c) => c.clone(),
            None => (0..n)
                .map(|_| rng.random_range(0..config.channels))
                .collect(),
        };
        let switches = if config.balance {
            balance_channels(&mut assignment, config.channels)
        } else {
            0
        };
        let nodes = (0..n)
            .map(|id| NodeState {
                node_id: id,
                channel: assignment[id],
                role: Role::Desync,
                fire_at: 1.0 - phases[id],
                fires: 0,
                last_heard: vec![None; n],
                nesterov: config.nesterov.then(NesterovMemory::default),
                miss: MissTracker::default(),
                last_fired: None,
                update_due: false,
                next_after_fire: None,
            })
            .collect();
        let mut sim = Self {
            adjacency,
            nodes,
            members: Vec::new(),
            sync_of: Vec::new(),
            now: 0.0,
            rng,
            round: 0,
            window_fired: vec![false; n],
            window_remaining: n,
            snapshot: Vec::new(),
            updated_in_window: vec![false; n],
            order: Vec::new(),
            order_changes: 0,
            trace: Vec::new(),
            switches,
            config,
        };
        sim.rebuild_membership(true)?;
        sim.snapshot = sim.nodes.iter().map(|n| n.fire_at).collect();
        sim.order = sim.firing_orders();
        Ok(sim)
    }

    fn rebuild_membership(&mut self, elect: bool) -> Result<()> {
        let c_total = self.config.channels;
        let mut members = vec![Vec::new(); c_total];
        for node in &self.nodes {
            members[node.channel].push(node.node_id);
        }
        if members.iter().any(|m| m.is_empty()) {
            return Err(Error::Config(
                "every channel needs at least one node".into(),
            ));
        }
        if elect {
            for m in &members {
                let sync = elect_sync_node(m).expect("non-empty");
                for &id in m {
                    self.nodes[id].role = if id == sync { Role::Sync } else { Role::Desync };
                }
            }
        }
        self.sync_of = members
            .iter()
            .map(|m| {
                m.iter()
                    .copied()
                    .find(|&id| self.nodes[id].role == Role::Sync)
                    .expect("one Sync node per channel")
            })
            .collect();
        self.members = members;
        Ok(())
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn members(&self, channel: usize) -> &[usize] {
        &self.members[channel]
    }

    pub fn sync_node(&self, channel: usize) -> usize {
        self.sync_of[channel]
    }

    pub fn occupancy(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.len()).collect()
    }

    /// Channel switches applied before the first fire.
    pub fn balancing_switches(&self) -> usize {
        self.switches
    }

    pub fn now_seconds(&self) -> f64 {
        self.now * self.config.period_t
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    /// Offsets of one channel, Sync first, then ascending and lifted into `[s, s + 1)`.
    pub fn channel_offsets(&self, channel: usize) -> Vec<f64> {
        let s = self.nodes[self.sync_of[channel]].offset();
        let mut rel: Vec<f64> = self.members[channel]
            .iter()
            .filter(|&&id| id != self.sync_of[channel])
            .map(|&id| (self.nodes[id].offset() - s).rem_euclid(1.0))
            .collect();
        rel.sort_by(|a, b| a.partial_cmp(b).expect("finite offsets"));
        std::iter::once(s)
            .chain(rel.into_iter().map(|r| s + r))
            .collect()
    }

    pub fn recovered_offsets(&self) -> Vec<Vec<f64>> {
        (0..self.config.channels)
            .map(|c| self.channel_offsets(c))
            .collect()
    }

    /// Sum of per-channel gap objectives plus the Sync coupling term on wrapped differences.
    pub fn objective(&self) -> f64 {
        let offsets = self.recovered_offsets();
        let desync: f64 = offsets
            .iter()
            .filter(|o| o.len() >= 2)
            .map(|o| g_of(o))
            .sum();
        if offsets.len() < 2 {
            return desync;
        }
        let c_total = offsets.len();
        let cross: f64 = (0..c_total)
            .map(|c| {
                let d = wrap_centered(offsets[(c + 1) % c_total][0] - offsets[c][0]);
                d * d
            })
            .sum();
        desync + 0.5 * cross
    }

    /// Cyclic firing order of each channel, starting at its Sync node.
    fn firing_orders(&self) -> Vec<Vec<usize>> {
        (0..self.config.channels)
            .map(|c| {
                let base = self.nodes[self.sync_of[c]].fire_at;
                let mut ids = self.members[c].clone();
                ids.sort_by(|&a, &b| {
                    let ra = (self.nodes[a].fire_at - base).rem_euclid(1.0);
                    let rb = (self.nodes[b].fire_at - base).rem_euclid(1.0);
                    ra.partial_cmp(&rb).expect("finite").then(a.cmp(&b))
                });
                ids
            })
            .collect()
    }

    /// Slot index of a node within its channel's firing order.
    pub fn slot_index(&self, node: usize) -> usize {
        let c = self.nodes[node].channel;
        self.firing_orders()[c]
            .iter()
            .position(|&id| id == node)
            .expect("node is a member of its channel")
    }

    fn next_firer(&self) -> usize {
        let mut best = 0;
        for (id, node) in self.nodes.iter().enumerate().skip(1) {
            let b = &self.nodes[best];
            let earlier = node.fire_at < b.fire_at
                || (node.fire_at == b.fire_at && (node.channel, id) < (b.channel, best));
            if earlier {
                best = id;
            }
        }
        best
    }

    /// Fires the next node, delivers its message and closes the round if complete.
    pub fn advance_to_next_fire(&mut self) -> Result<FireEvent> {
        if self.nodes.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        let f = self.next_firer();
        self.now = self.nodes[f].fire_at;
        let firer = &mut self.nodes[f];
        firer.fires += 1;
        firer.fire_at = firer.next_after_fire.take().unwrap_or(firer.fire_at + 1.0);
        firer.last_fired = Some(self.now);
        firer.update_due = true;
        let event = FireEvent {
            time: self.now * self.config.period_t,
            node_id: f,
            channel: firer.channel,
            role: firer.role,
        };
        self.deliver(f);
        self.mark_fired(f);
        Ok(event)
    }

    fn receive(&mut self, listener: usize, sender: usize) -> bool {
        let adjacent = self.adjacency.hears(listener, sender);
        let delivery = apply_message_loss(adjacent, self.config.loss_probability, &mut self.rng);
        let threshold = self.config.consecutive_miss_threshold;
        self.nodes[listener].miss.record(delivery, threshold);
        delivery == Delivery::Delivered
    }

    fn deliver(&mut self, f: usize) {
        let c = self.nodes[f].channel;
        let multichannel = self.config.channels > 1;
        let listeners: Vec<usize> = self.members[c]
            .iter()
            .copied()
            .filter(|&l| l != f)
            .collect();
        for l in listeners {
            if !self.receive(l, f) {
                continue;
            }
            self.nodes[l].last_heard[f] = Some(self.now);
            if self.nodes[l].role == Role::Desync || !multichannel {
                self.desync_listen(l, f);
            }
        }
        if multichannel && self.nodes[f].role == Role::Sync {
            let prev = (c + self.config.channels - 1) % self.config.channels;
            let l = self.sync_of[prev];
            if self.receive(l, f) {
                self.nodes[l].last_heard[f] = Some(self.now);
                self.sync_listen(l, f);
            }
        }
    }

    /// Gap before (`a`) and after (`b`) the listener, or `None` if `f` is not its predecessor.
    fn live_gaps(&self, l: usize, f: usize) -> Option<(f64, f64)> {
        let node = &self.nodes[l];
        // the first period only fills the caches
        if self.now < 1.0 || !node.update_due {
            return None;
        }
        let tau = node.fire_at;
        let mut successor = self.now + 1.0;
        for &k in &self.members[node.channel] {
            if k == l || k == f {
                continue;
            }
            if let Some(t) = node.last_heard[k] {
                let est = t + (self.now - t).floor() + 1.0;
                if est < tau {
                    return None;
                }
                successor = successor.min(est);
            }
        }
        Some((tau - self.now, successor - tau))
    }

    fn snapshot_gaps(&self, l: usize, f: usize) -> Option<(f64, f64)> {
        if self.updated_in_window[l] {
            return None;
        }
        let c = self.nodes[l].channel;
        let x = self.snapshot[l];
        let (mut pred, mut a, mut b) = (usize::MAX, f64::INFINITY, f64::INFINITY);
        for &k in &self.members[c] {
            if k == l {
                continue;
            }
            let before = (x - self.snapshot[k]).rem_euclid(1.0);
            let after = (self.snapshot[k] - x).rem_euclid(1.0);
            if before < a || (before == a && k < pred) {
                a = before;
                pred = k;
            }
            b = b.min(after);
        }
        (pred == f).then_some((a, b))
    }

    fn desync_listen(&mut self, l: usize, f: usize) {
        // refractory: a beacon at the listener's own fire instant is not acted on
        if self.nodes[l].last_fired == Some(self.now) {
            return;
        }
        let gaps = match self.config.staleness_mode {
            StalenessMode::Live => self.live_gaps(l, f),
            StalenessMode::Assumption1 => self.snapshot_gaps(l, f),
        };
        let Some((a, b)) = gaps else { return };
        self.updated_in_window[l] = true;
        self.nodes[l].update_due = false;
        let step = self.config.alpha / 2.0 * (b - a);
        let now = self.now;
        let node = &mut self.nodes[l];
        match node.nesterov.as_mut() {
            None => node.fire_at += step,
            Some(mem) => {
                mem.counter += 1;
                let m = momentum(mem.counter);
                let registered = node.fire_at + step;
                let mut fire = node.fire_at + step + m * (step - mem.lag);
                if fire < now {
                    fire = now;
                }
                mem.lag = registered - fire;
                node.fire_at = fire;
            }
        }
    }

    fn sync_listen(&mut self, l: usize, f: usize) {
        let now = self.now;
        let gamma = self.config.gamma;
        match self.config.sync_rule {
            SyncRule::Consensus => {
                let target = self.nodes[f].lifted();
                let node = &mut self.nodes[l];
                let lifted = node.lifted();
                let tau = lifted + node.fires as f64 + gamma * (target - lifted);
                if tau < now {
                    // phase pushed past 1: fire now, keep the lifted offset for later epochs
                    node.fire_at = now;
                    node.next_after_fire = Some(tau + 1.0);
                } else {
                    node.fire_at = tau;
                    node.next_after_fire = None;
                }
            }
            SyncRule::Inhibitory => {
                let node = &mut self.nodes[l];
                let theta = node.theta(now).clamp(0.0, 1.0);
                node.fire_at = now + 1.0 - sync_phase_update(gamma, theta);
            }
        }
    }

    fn mark_fired(&mut self, id: usize) {
        if !self.window_fired[id] {
            self.window_fired[id] = true;
            self.window_remaining -= 1;
        }
        if self.window_remaining == 0 {
            self.close_round();
        }
    }

    fn close_round(&mut self) {
        self.round += 1;
        self.window_fired.iter_mut().for_each(|w| *w = false);
        self.updated_in_window.iter_mut().for_each(|w| *w = false);
        self.window_remaining = self.nodes.len();
        self.snapshot = self.nodes.iter().map(|n| n.fire_at).collect();
        let order = self.firing_orders();
        if order != self.order {
            self.order_changes += 1;
            self.order = order;
        }
        let record = self.record();
        self.trace.push(record);
    }

    fn record(&self) -> TraceRecord {
        let objective = self.objective();
        let mut offsets = self.recovered_offsets();
        let anchor = offsets[0][0];
        for o in offsets.iter_mut() {
            o.iter_mut().for_each(|v| *v -= anchor);
        }
        TraceRecord {
            round: self.round,
            sim_time_s: self.now_seconds(),
            offsets,
            objective,
            occupancy: self.occupancy(),
            order_changes: self.order_changes,
            converged: objective <= self.config.epsilon,
        }
    }

    /// Fires until the current round closes; returns its record.
    pub fn run_round(&mut self) -> Result<TraceRecord> {
        let target = self.round + 1;
        while self.round < target {
            self.advance_to_next_fire()?;
        }
        Ok(self.trace.last().expect("round closed").clone())
    }

    /// Runs rounds until the objective reaches epsilon or the clock passes `max_time`.
    pub fn run_until_converged(&mut self) -> Result<ConvergenceReport> {
        let eps = self.config.epsilon;
        let start = self.round;
        let mut value = self.objective();
        let mut trace = Vec::new();
        while value > eps && self.now_seconds() < self.config.max_time {
            value = self.run_round()?.objective;
            trace.push(value);
        }
        Ok(ConvergenceReport {
            rounds: self.round - start,
            final_objective: value,
            trace,
            converged: value <= eps,
        })
    }

    /// Runs until the objective reaches epsilon or no offset moves by more than
    /// `tolerance` periods over one round, bounded by `max_time`.
    pub fn run_until_steady(&mut self, tolerance: f64) -> Result<SteadyReport> {
        let eps = self.config.epsilon;
        let start = self.round;
        let mut value = self.objective();
        let mut prev = self.recovered_offsets();
        let mut settled = value <= eps;
        while !settled && self.now_seconds() < self.config.max_time {
            value = self.run_round()?.objective;
            let cur = self.recovered_offsets();
            let moved = prev
                .iter()
                .flatten()
                .zip(cur.iter().flatten())
                .map(|(a, b)| wrap_centered(a - b).abs())
                .fold(0.0, f64::max);
            settled = value <= eps || moved < tolerance;
            prev = cur;
        }
        Ok(SteadyReport {
            rounds: self.round - start,
            final_objective: value,
            reached_epsilon: value <= eps,
            settled,
        })
    }

    /// Exchanges the channels and time slots of two synchronous nodes in adjacent channels.
    pub fn swap_channels(&mut self, a: usize, b: usize) -> Result<()> {
        let n = self.nodes.len();
        let reject = |msg: String| Err(Error::SwapRejected(msg));
        if a >= n || b >= n || a == b {
            return reject(format!("invalid pair ({a}, {b})"));
        }
        let objective = self.objective();
        if objective > self.config.epsilon {
            return reject(format!("network not converged (objective {objective:e})"));
        }
        let c_total = self.config.channels;
        let (ca, cb) = (self.nodes[a].channel, self.nodes[b].channel);
        if c_total < 2 || ((ca + 1) % c_total != cb && (cb + 1) % c_total != ca) {
            return reject(format!("channels {ca} and {cb} are not adjacent"));
        }
        let (sa, sb) = (self.slot_index(a), self.slot_index(b));
        if sa != sb {
            return reject(format!(
                "slot {sa} of node {a} differs from slot {sb} of node {b}"
            ));
        }
        let skew = wrap_centered(self.nodes[a].offset() - self.nodes[b].offset()).abs()
            * self.config.period_t;
        if skew > self.config.guard_time {
            return reject(format!(
                "nodes fire {skew:e} s apart, beyond the guard time"
            ));
        }

        let (lo, hi) = (a.min(b), a.max(b));
        let (left, right) = self.nodes.split_at_mut(hi);
        let (x, y) = (&mut left[lo], &mut right[0]);
        std::mem::swap(&mut x.channel, &mut y.channel);
        std::mem::swap(&mut x.role, &mut y.role);
        std::mem::swap(&mut x.fire_at, &mut y.fire_at);
        std::mem::swap(&mut x.fires, &mut y.fires);
        std::mem::swap(&mut x.last_heard, &mut y.last_heard);
        std::mem::swap(&mut x.nesterov, &mut y.nesterov);
        std::mem::swap(&mut x.last_fired, &mut y.last_fired);
        std::mem::swap(&mut x.update_due, &mut y.update_due);
        std::mem::swap(&mut x.next_after_fire, &mut y.next_after_fire);
        for node in self.nodes.iter_mut() {
            node.last_heard.swap(a, b);
        }
        self.snapshot.swap(a, b);
        self.window_fired.swap(a, b);
        self.updated_in_window.swap(a, b);
        self.rebuild_membership(false)?;
        self.order = self.firing_orders();
        Ok(())
    }
}

/// Builds a simulator, runs it to convergence or `max_time`, and returns the trace.
pub fn run_simulation(config: SimConfig) -> Result<SimOutcome> {
    let mut sim = Simulator::new(config)?;
    let report = sim.run_until_converged()?;
    let time_to_convergence_s = report
        .converged
        .then(|| report.rounds as f64 * sim.config.period_t);
    Ok(SimOutcome {
        report,
        trace: sim.trace,
        time_to_convergence_s,
    })
}
