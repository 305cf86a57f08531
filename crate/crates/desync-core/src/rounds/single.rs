use super::desync_step;
use crate::error::{check_len, Result};
use crate::math::{PhaseVector, SingleChannelProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct DesyncState {
    pub phi: PhaseVector,
    pub k: usize,
}

impl DesyncState {
    pub fn new(phi: PhaseVector) -> Self {
        Self { phi, k: 0 }
    }
}

/// Accelerated state. `phi_prev` is the iterate before `phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct NesterovState {
    pub phi: PhaseVector,
    pub phi_prev: PhaseVector,
    pub mu: PhaseVector,
    pub k: usize,
}

impl NesterovState {
    pub fn new(phi: PhaseVector) -> Self {
        Self {
            phi_prev: phi.clone(),
            mu: phi.clone(),
            phi,
            k: 0,
        }
    }
}

/// Momentum weight `(k-1)/(k+2)` for update number `k >= 1`.
pub fn momentum(k: usize) -> f64 {
    debug_assert!(k >= 1);
    (k as f64 - 1.0) / (k as f64 + 2.0)
}

pub fn desync_round(state: &DesyncState, problem: &SingleChannelProblem) -> Result<DesyncState> {
    check_len(problem.n(), state.phi.len())?;
    let k = state.k + 1;
    let phi = PhaseVector::checked(desync_step(state.phi.as_slice(), problem.alpha()), k)?;
    Ok(DesyncState { phi, k })
}

pub fn fast_desync_round(
    state: &NesterovState,
    problem: &SingleChannelProblem,
) -> Result<NesterovState> {
    check_len(problem.n(), state.phi.len())?;
    check_len(problem.n(), state.mu.len())?;
    let k = state.k + 1;
    let phi = desync_step(state.mu.as_slice(), problem.alpha());
    let m = momentum(k);
    let mu: Vec<f64> = phi
        .iter()
        .zip(state.phi.as_slice())
        .map(|(new, old)| new + m * (new - old))
        .collect();
    Ok(NesterovState {
        phi: PhaseVector::checked(phi, k)?,
        phi_prev: state.phi.clone(),
        mu: PhaseVector::checked(mu, k)?,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    fn pv(v: &[f64]) -> PhaseVector {
        PhaseVector::new(v.to_vec()).unwrap()
    }

    fn matrix_oracle(phi: &[f64], p: &SingleChannelProblem) -> Vec<f64> {
        let n = p.n();
        let d = p.d_matrix();
        let a = DMatrix::identity(n, n) - d.transpose() * d * p.beta();
        let out = a * DVector::from_column_slice(phi) - p.d_vector() * p.beta();
        out.iter().cloned().collect()
    }

    #[test]
    fn example_round() {
        let p = SingleChannelProblem::new(4, 0.5, 1e-3).unwrap();
        let s = desync_round(&DesyncState::new(pv(&[0.0, 0.1, 0.5, 0.9])), &p).unwrap();
        let expected = [0.0, 0.175, 0.5, 0.825];
        for i in 0..4 {
            assert_relative_eq!(s.phi[i], expected[i], epsilon = 1e-15);
        }
        let oracle = matrix_oracle(&[0.0, 0.1, 0.5, 0.9], &p);
        for i in 0..4 {
            assert_relative_eq!(s.phi[i], oracle[i], epsilon = 1e-15);
        }
        assert_eq!(s.k, 1);
    }

    #[test]
    fn equispaced_is_fixed() {
        let p = SingleChannelProblem::new(5, 0.3, 1e-3).unwrap();
        let bar = PhaseVector::equispaced(5, 0.17).unwrap();
        let s = desync_round(&DesyncState::new(bar.clone()), &p).unwrap();
        assert!(s.phi.max_abs_diff(&bar) < 1e-15);
        let mut f = NesterovState::new(bar.clone());
        for _ in 0..10 {
            f = fast_desync_round(&f, &p).unwrap();
        }
        assert!(f.phi.max_abs_diff(&bar) < 1e-14);
        assert!(f.mu.max_abs_diff(&bar) < 1e-14);
    }

    #[test]
    fn first_fast_round_has_no_momentum() {
        let p = SingleChannelProblem::new(4, 0.4, 1e-3).unwrap();
        let start = pv(&[0.0, 0.05, 0.3, 0.4]);
        let f = fast_desync_round(&NesterovState::new(start.clone()), &p).unwrap();
        let d = desync_round(&DesyncState::new(start), &p).unwrap();
        assert_eq!(momentum(1), 0.0);
        assert_eq!(f.phi, d.phi);
        assert_eq!(f.mu, f.phi);
    }

    #[test]
    fn momentum_recurrence() {
        let p = SingleChannelProblem::new(3, 0.4, 1e-3).unwrap();
        let mut s = NesterovState::new(pv(&[0.0, 0.1, 0.2]));
        for _ in 0..3 {
            let next = fast_desync_round(&s, &p).unwrap();
            let m = momentum(next.k);
            for i in 0..3 {
                let expect = next.phi[i] + m * (next.phi[i] - s.phi[i]);
                assert_relative_eq!(next.mu[i], expect, epsilon = 1e-15);
            }
            assert_eq!(next.phi_prev, s.phi);
            s = next;
        }
        assert_relative_eq!(momentum(3), 0.4);
    }

    #[test]
    fn rejects_wrong_length() {
        let p = SingleChannelProblem::new(4, 0.5, 1e-3).unwrap();
        assert!(desync_round(&DesyncState::new(pv(&[0.0, 0.3])), &p).is_err());
        assert!(fast_desync_round(&NesterovState::new(pv(&[0.0, 0.3])), &p).is_err());
    }
}
