//! Pure per-event protocol rules.

use rand::Rng;

/// Midpoint jump at the predecessor's fire: the firer sits at phase 1 and
/// `theta_successor` is the cached, possibly stale, successor phase.
pub fn desync_phase_update(alpha: f64, theta: f64, theta_successor: f64) -> f64 {
    let next = (1.0 - alpha) * theta + alpha * (1.0 + theta_successor) / 2.0;
    next.rem_euclid(1.0)
}

/// Inhibitory Sync jump `((1 - gamma) theta + gamma) mod 1`.
pub fn sync_phase_update(gamma: f64, theta: f64) -> f64 {
    ((1.0 - gamma) * theta + gamma).rem_euclid(1.0)
}

/// Representative of `x` modulo one in `[-1/2, 1/2)`.
pub fn wrap_centered(x: f64) -> f64 {
    x - (x + 0.5).floor()
}

/// Smallest node id in a channel.
pub fn elect_sync_node(ids: &[usize]) -> Option<usize> {
    ids.iter().copied().min()
}

/// Applies the switching rule to occupancy counts until no channel qualifies.
///
/// Channel `c < C` hands one node to `c + 1` when `n_c - n_{c+1} >= 1`; the last
/// channel hands one to the first when `n_C - n_1 >= 2`. Returns the ordered
/// list of `(from, to)` moves.
pub fn balance_counts(counts: &mut [usize]) -> Vec<(usize, usize)> {
    let c_total = counts.len();
    let mut moves = Vec::new();
    if c_total < 2 {
        return moves;
    }
    loop {
        let mut moved = false;
        for c in 0..c_total {
            let next = (c + 1) % c_total;
            let need = if c + 1 < c_total { 1 } else { 2 };
            if counts[c] >= counts[next] + need {
                counts[c] -= 1;
                counts[next] += 1;
                moves.push((c, next));
                moved = true;
            }
        }
        if !moved {
            return moves;
        }
    }
}

/// Balances a node-to-channel assignment. The node that moves is always the
/// current Sync node (smallest id) of the source channel; both channels then
/// re-elect by the same rule. Returns the number of switches.
pub fn balance_channels(assignment: &mut [usize], channels: usize) -> usize {
    let mut counts = vec![0usize; channels];
    for &c in assignment.iter() {
        counts[c] += 1;
    }
    let moves = balance_counts(&mut counts);
    for &(from, to) in &moves {
        let sync = assignment
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == from)
            .map(|(id, _)| id)
            .min()
            .expect("source channel is non-empty");
        assignment[sync] = to;
    }
    moves.len()
}

/// Outcome of one listener's reception attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delivery {
    Delivered,
    Dropped,
    Hidden,
}

/// Consecutive-miss bookkeeping of one listener.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MissTracker {
    pub miss_counter: usize,
    pub full_listening: bool,
}

impl MissTracker {
    /// Hidden pairs are never expected, so they leave the counter untouched.
    pub fn record(&mut self, delivery: Delivery, threshold: usize) {
        match delivery {
            Delivery::Delivered => {
                self.miss_counter = 0;
                self.full_listening = false;
            }
            Delivery::Dropped => {
                self.miss_counter += 1;
                if self.miss_counter >= threshold {
                    self.full_listening = true;
                }
            }
            Delivery::Hidden => {}
        }
    }
}

/// Bernoulli delivery draw. No randomness is consumed for hidden pairs or when
/// the loss probability is zero.
pub fn apply_message_loss<R: Rng>(adjacent: bool, loss_probability: f64, rng: &mut R) -> Delivery {
    if !adjacent {
        Delivery::Hidden
    } else if loss_probability > 0.0 && rng.random::<f64>() < loss_probability {
        Delivery::Dropped
    } else {
        Delivery::Delivered
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn desync_examples() {
        assert!((desync_phase_update(0.5, 0.6, 0.1) - 0.575).abs() < 1e-15);
        // already the midpoint of (1, 0.1)
        assert!((desync_phase_update(0.5, 0.55, 0.1) - 0.55).abs() < 1e-15);
    }

    #[test]
    fn sync_examples() {
        assert!((sync_phase_update(0.6, 0.5) - 0.8).abs() < 1e-15);
        assert_eq!(sync_phase_update(0.6, 1.0), 0.0);
        assert!((sync_phase_update(0.6, 0.0) - 0.6).abs() < 1e-15);
        for k in 0..=100 {
            let theta = k as f64 / 101.0;
            assert!(sync_phase_update(0.3, theta) >= theta);
        }
    }

    #[test]
    fn wrap() {
        assert!((wrap_centered(0.7) + 0.3).abs() < 1e-15);
        assert!((wrap_centered(-0.7) - 0.3).abs() < 1e-15);
        assert_eq!(wrap_centered(0.5), -0.5);
    }

    #[test]
    fn election() {
        assert_eq!(elect_sync_node(&[7, 3, 12]), Some(3));
        assert_eq!(elect_sync_node(&[5]), Some(5));
        assert_eq!(elect_sync_node(&[]), None);
    }

    #[test]
    fn switching_conditions() {
        let mut a = [5, 3];
        assert_eq!(balance_counts(&mut a)[0], (0, 1));
        let mut b = [4, 3];
        assert_eq!(balance_counts(&mut b)[0], (0, 1));
        // last channel needs a difference of two
        let mut c = [3, 4];
        assert!(balance_counts(&mut c).is_empty());
        let mut d = [2, 4];
        assert_eq!(balance_counts(&mut d), vec![(1, 0)]);
    }

    #[test]
    fn fourteen_over_four() {
        let mut counts = [14, 0, 0, 0];
        balance_counts(&mut counts);
        assert_eq!(counts, [3, 3, 4, 4]);
        let mut even = [0, 16, 0, 0];
        balance_counts(&mut even);
        assert_eq!(even, [4, 4, 4, 4]);
    }

    #[test]
    fn balance_moves_sync_nodes() {
        let mut assignment = vec![0, 0, 0, 1];
        let moves = balance_channels(&mut assignment, 2);
        assert_eq!(moves, 1);
        assert_eq!(assignment, vec![1, 0, 0, 1]);
    }

    #[test]
    fn miss_counter_semantics() {
        let mut t = MissTracker::default();
        for _ in 0..9 {
            t.record(Delivery::Dropped, 10);
        }
        assert!(!t.full_listening);
        t.record(Delivery::Hidden, 10);
        assert_eq!(t.miss_counter, 9);
        t.record(Delivery::Dropped, 10);
        assert!(t.full_listening);
        t.record(Delivery::Delivered, 10);
        assert_eq!(t, MissTracker::default());
    }

    #[test]
    fn loss_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(apply_message_loss(true, 0.0, &mut rng), Delivery::Delivered);
        assert_eq!(apply_message_loss(false, 0.0, &mut rng), Delivery::Hidden);
        let delivered = (0..10_000)
            .filter(|_| apply_message_loss(true, 0.3, &mut rng) == Delivery::Delivered)
            .count();
        assert!((delivered as f64 / 10_000.0 - 0.7).abs() < 0.01);
    }
}
