use nalgebra::{Complex, DMatrix, DVector, Schur};
use serde::{Deserialize, Serialize};

use super::MultichannelProblem;
use crate::error::{Error, Result};

const SCHUR_MAX_ITER: usize = 100_000;
const UNIT_TOL: f64 = 1e-8;

/// Affine iteration `phi' = M phi + b` on the stacked channel vector.
pub fn build_iteration_matrix(problem: &MultichannelProblem) -> (DMatrix<f64>, DVector<f64>) {
    let total = problem.total_nodes();
    let (beta, gamma) = (problem.beta(), problem.gamma());
    let offsets = problem.block_offsets();
    let mut m = DMatrix::zeros(total, total);
    let mut b = DVector::zeros(total);
    for (c, (&start, &n)) in offsets.iter().zip(problem.channel_counts()).enumerate() {
        // Q1: Sync row
        m[(start, start)] += 1.0 - gamma;
        // Q2 = Diag(gamma, 0, ...) in block (c, c+1)
        m[(start, offsets[problem.next(c)])] += gamma;
        // Q1: Desync rows, last one wraps to the Sync column
        for i in 1..n {
            let row = start + i;
            m[(row, row - 1)] += beta;
            m[(row, row)] += 1.0 - 2.0 * beta;
            let up = if i + 1 < n { row + 1 } else { start };
            m[(row, up)] += beta;
        }
        b[start + n - 1] = beta;
    }
    (m, b)
}

/// `M - (1/C) 1 u^T`: removes the unit eigenvalue along the consensus direction.
pub fn deflate(m: &DMatrix<f64>, problem: &MultichannelProblem) -> DMatrix<f64> {
    let ones = DVector::from_element(m.nrows(), 1.0);
    let u = problem.sync_indicator();
    m - (ones * u.transpose()) / problem.channels() as f64
}

/// Real Schur form, retried on similar matrices when the shifted QR stalls
/// (it can cycle on the exact symmetries of `M`).
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = m.nrows();
    let reversed = DMatrix::from_fn(n, n, |i, j| m[(n - 1 - i, n - 1 - j)]);
    [m.clone(), m.transpose(), reversed]
        .into_iter()
        .find_map(|a| Schur::try_new(a, f64::EPSILON, SCHUR_MAX_ITER))
        .map(|s| s.complex_eigenvalues().iter().cloned().collect())
        .ok_or(Error::Eigensolver)
}

pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// `1 - 2 beta + 2 beta cos(pi j / n)`, `j = 1..n-1`. Absent for unequal channel sizes.
    pub eigenvalues_t: Option<Vec<f64>>,
    /// `1 - gamma + gamma exp(2 pi i j / C)`, `j = 0..C-1` as `(re, im)`.
    pub eigenvalues_r: Option<Vec<(f64, f64)>>,
    /// Numeric spectrum of `M` as `(re, im)`.
    pub eigenvalues_m: Vec<(f64, f64)>,
    /// Largest distance between an analytic eigenvalue and its matched numeric one.
    pub analytic_max_error: Option<f64>,
    /// Numeric eigenvalues of `M` within 1e-8 of one.
    pub unit_multiplicity: usize,
    pub spectral_radius_deflated: f64,
    pub converges: bool,
}

pub fn analytic_t(n: usize, beta: f64) -> Vec<f64> {
    (1..n)
        .map(|j| 1.0 - 2.0 * beta + 2.0 * beta * (std::f64::consts::PI * j as f64 / n as f64).cos())
        .collect()
}

pub fn analytic_r(channels: usize, gamma: f64) -> Vec<Complex<f64>> {
    (0..channels)
        .map(|j| {
            let w =
                Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / channels as f64);
            Complex::new(1.0 - gamma, 0.0) + w * gamma
        })
        .collect()
}

/// Greedy nearest matching of two eigenvalue multisets; returns the worst pair distance.
fn match_spectra(analytic: &[Complex<f64>], numeric: &[Complex<f64>]) -> f64 {
    let mut used = vec![false; numeric.len()];
    let mut worst: f64 = 0.0;
    for a in analytic {
        let (idx, dist) = numeric
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, z)| (i, (z - a).norm()))
            .fold((usize::MAX, f64::INFINITY), |best, cur| {
                if cur.1 < best.1 {
                    cur
                } else {
                    best
                }
            });
        if idx == usize::MAX {
            return f64::INFINITY;
        }
        used[idx] = true;
        worst = worst.max(dist);
    }
    worst
}

pub fn spectral_report(problem: &MultichannelProblem) -> Result<SpectralReport> {
    let (m, _) = build_iteration_matrix(problem);
    let numeric = eigenvalues(&m)?;
    let rho = spectral_radius(&deflate(&m, problem))?;
    let unit_multiplicity = numeric
        .iter()
        .filter(|z| (*z - Complex::new(1.0, 0.0)).norm() < UNIT_TOL)
        .count();

    let (eigenvalues_t, eigenvalues_r, analytic_max_error) = match problem.uniform_size() {
        Some(n) => {
            let t = analytic_t(n, problem.beta());
            let r = analytic_r(problem.channels(), problem.gamma());
            let mut all: Vec<Complex<f64>> = Vec::with_capacity(numeric.len());
            for _ in 0..problem.channels() {
                all.extend(t.iter().map(|&x| Complex::new(x, 0.0)));
            }
            all.extend(r.iter().cloned());
            let err = match_spectra(&all, &numeric);
            (
                Some(t),
                Some(r.iter().map(|z| (z.re, z.im)).collect()),
                Some(err),
            )
        }
        None => (None, None, None),
    };

    Ok(SpectralReport {
        eigenvalues_t,
        eigenvalues_r,
        eigenvalues_m: numeric.iter().map(|z| (z.re, z.im)).collect(),
        analytic_max_error,
        unit_multiplicity,
        spectral_radius_deflated: rho,
        converges: rho < 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_by_two_channels_matrix() {
        let p = MultichannelProblem::uniform(2, 2, 0.25, 0.5).unwrap();
        let (m, b) = build_iteration_matrix(&p);
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.5, 0.0, 0.5, 0.0, //
                0.5, 0.5, 0.0, 0.0, //
                0.5, 0.0, 0.5, 0.0, //
                0.0, 0.0, 0.5, 0.5,
            ],
        );
        assert_eq!(m, expected);
        assert_eq!(b.as_slice(), &[0.0, 0.25, 0.0, 0.25]);
    }

    #[test]
    fn row_sums_and_left_eigenvector() {
        let p = MultichannelProblem::new(vec![3, 5, 4], 0.3, 0.7).unwrap();
        let (m, _) = build_iteration_matrix(&p);
        let ones = DVector::from_element(m.nrows(), 1.0);
        assert!(((&m * &ones) - &ones).amax() < 1e-15);
        let u = p.sync_indicator();
        assert!((m.transpose() * &u - &u).amax() < 1e-15);
    }

    #[test]
    fn t_eigenvalues_against_dense_solver() {
        let (n, beta) = (4, 0.25);
        let mut t = DMatrix::zeros(n - 1, n - 1);
        for i in 0..n - 1 {
            t[(i, i)] = 1.0 - 2.0 * beta;
            if i + 1 < n - 1 {
                t[(i, i + 1)] = beta;
                t[(i + 1, i)] = beta;
            }
        }
        let mut dense: Vec<f64> = t.symmetric_eigenvalues().iter().cloned().collect();
        dense.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let ours = analytic_t(n, beta);
        for (a, b) in ours.iter().zip(&dense) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
        assert_relative_eq!(ours[0], 0.8535533905932737, epsilon = 1e-12);
        assert_relative_eq!(ours[1], 0.5, epsilon = 1e-12);
        assert_relative_eq!(ours[2], 0.14644660940672627, epsilon = 1e-12);
    }

    #[test]
    fn r_eigenvalues_by_dft() {
        let (c, gamma) = (4usize, 0.6);
        let row: Vec<f64> = (0..c)
            .map(|k| match k {
                0 => 1.0 - gamma,
                1 => gamma,
                _ => 0.0,
            })
            .collect();
        let dft: Vec<Complex<f64>> = (0..c)
            .map(|j| {
                (0..c)
                    .map(|k| {
                        row[k]
                            * Complex::from_polar(
                                1.0,
                                2.0 * std::f64::consts::PI * (j * k) as f64 / c as f64,
                            )
                    })
                    .sum()
            })
            .collect();
        let ours = analytic_r(c, gamma);
        for (a, b) in ours.iter().zip(&dft) {
            assert!((a - b).norm() < 1e-12);
        }
        let expected = [(1.0, 0.0), (0.4, 0.6), (-0.2, 0.0), (0.4, -0.6)];
        for (z, e) in ours.iter().zip(expected) {
            assert!((z.re - e.0).abs() < 1e-12 && (z.im - e.1).abs() < 1e-12);
        }
        let units = ours.iter().filter(|z| (*z - 1.0).norm() < 1e-12).count();
        assert_eq!(units, 1);
    }

    #[test]
    fn report_on_reference_point() {
        let p = MultichannelProblem::uniform(4, 4, 0.25, 0.6).unwrap();
        let r = spectral_report(&p).unwrap();
        assert!(r.analytic_max_error.unwrap() < 1e-9);
        assert_eq!(r.unit_multiplicity, 1);
        assert!(r.converges && r.spectral_radius_deflated < 1.0);
    }

    #[test]
    fn unnormalised_deflation_is_not_a_contraction() {
        // M - 1 u^T maps 1 to (1 - C) 1.
        let p = MultichannelProblem::uniform(3, 4, 0.25, 0.6).unwrap();
        let (m, _) = build_iteration_matrix(&p);
        let ones = DVector::from_element(m.nrows(), 1.0);
        let literal = &m - &ones * p.sync_indicator().transpose();
        assert!(((&literal * &ones) + &ones * 2.0).amax() < 1e-12);
        assert!(spectral_radius(&literal).unwrap() >= 2.0 - 1e-9);
    }

    #[test]
    fn non_uniform_is_numeric_only() {
        let p = MultichannelProblem::new(vec![3, 4, 5], 0.2, 0.5).unwrap();
        let r = spectral_report(&p).unwrap();
        assert!(r.eigenvalues_t.is_none() && r.analytic_max_error.is_none());
        assert_eq!(r.eigenvalues_m.len(), 12);
        assert_eq!(r.unit_multiplicity, 1);
        assert!(r.converges);
    }
}
