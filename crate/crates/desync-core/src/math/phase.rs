use crate::error::{Error, Result};

/// Phase offsets of one channel, ordered by firing position.
///
/// Values are not reduced modulo one: the round iterations are affine maps
/// on the reals.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooSmall {
                what: "phase vector length",
                min: 2,
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(values))
    }

    /// `(0, 1/n, ..., (n-1)/n) + shift`.
    pub fn equispaced(n: usize, shift: f64) -> Result<Self> {
        Self::new((0..n).map(|i| i as f64 / n as f64 + shift).collect())
    }

    /// Caller guarantees length and finiteness.
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        debug_assert!(values.len() >= 2);
        Self(values)
    }

    /// Rejects non-finite entries produced by a diverging iteration.
    pub(crate) fn checked(values: Vec<f64>, round: usize) -> Result<Self> {
        match values.iter().find(|v| !v.is_finite()) {
            Some(&value) => Err(Error::Diverged { round, value }),
            None => Ok(Self(values)),
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.0.len() as f64
    }

    pub fn max_abs_diff(&self, other: &PhaseVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for PhaseVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for PhaseVector {
    type Error = Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}
