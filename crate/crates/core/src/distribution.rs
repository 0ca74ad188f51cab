//! Probability vectors over finite index sets.

use crate::error::{Error, Result};
use crate::scalar::{sum, Scalar};

/// A point of the probability simplex.
///
/// Weights are nonnegative and sum to one, exactly for rational backends and
/// within `1e-12` for floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<T> {
    weights: Vec<T>,
}

impl<T: Scalar> Distribution<T> {
    pub fn new(weights: Vec<T>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("no outcomes".into()));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| w.is_negative()) {
            return Err(Error::InvalidDistribution(format!(
                "weight {} at index {} is negative",
                w,
                i + 1
            )));
        }
        let total = sum(weights.iter().cloned());
        if (total.clone() - T::one()).abs() > T::tolerance() {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self { weights })
    }

    /// Relative frequencies `counts[k] / Σ counts`.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidDistribution("all counts are zero".into()));
        }
        let weights = counts
            .iter()
            .map(|&c| T::from_ratio(c as i64, total))
            .collect();
        Ok(Self { weights })
    }

    pub fn point_mass(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidParameter(format!(
                "point mass index {} outside 1..={dim}",
                index + 1
            )));
        }
        let mut weights = vec![T::zero(); dim];
        weights[index] = T::one();
        Ok(Self { weights })
    }

    pub fn uniform(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDistribution("no outcomes".into()));
        }
        Ok(Self {
            weights: vec![T::from_ratio(1, dim as u64); dim],
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn get(&self, index: usize) -> &T {
        &self.weights[index]
    }

    pub fn into_weights(self) -> Vec<T> {
        self.weights
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(i, _)| i)
    }

    pub fn to_f64(&self) -> Distribution<f64> {
        Distribution {
            weights: self.weights.iter().map(Scalar::to_f64).collect(),
        }
    }
}

impl Distribution<f64> {
    /// Renormalizes nonnegative weights; used by samplers that perturb a
    /// distribution and must land back on the simplex.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("all weights are zero".into()));
        }
        Ok(Self {
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// Converts to an exact distribution. The float weights are taken at their
    /// binary value; any residual from `Σ w = 1` is folded into the largest
    /// weight so the result lies exactly on the simplex.
    pub fn to_exact<T: Scalar>(&self) -> Result<Distribution<T>> {
        let mut weights: Vec<T> = self
            .weights
            .iter()
            .map(|&w| T::from_f64(w).ok_or_else(|| Error::InvalidDistribution("non-finite".into())))
            .collect::<Result<_>>()?;
        let largest = (0..weights.len())
            .max_by(|&a, &b| {
                self.weights[a]
                    .partial_cmp(&self.weights[b])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(b.cmp(&a))
            })
            .unwrap_or(0);
        let rest = sum(
            weights
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != largest)
                .map(|(_, w)| w.clone()),
        );
        weights[largest] = T::one() - rest;
        Distribution::new(weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn rejects_off_simplex() {
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![1.5, -0.5]).is_err());
        assert!(Distribution::<f64>::new(vec![]).is_err());
        assert!(Distribution::new(vec![0.5, 0.5 + 1e-13]).is_ok());
        let third = Rational::from_ratio(1, 3);
        assert!(Distribution::new(vec![third.clone(), third.clone(), third.clone()]).is_ok());
        let off = third.clone() + Rational::from_ratio(1, 1 << 40);
        assert!(Distribution::new(vec![third.clone(), third, off]).is_err());
    }

    #[test]
    fn counts_are_exact() {
        let d = Distribution::<Rational>::from_counts(&[1, 2, 0]).unwrap();
        assert_eq!(d.get(1), &Rational::from_ratio(2, 3));
        assert_eq!(d.support().collect::<Vec<_>>(), vec![0, 1]);
        assert!(Distribution::<f64>::from_counts(&[0, 0]).is_err());
    }

    #[test]
    fn exact_conversion_lands_on_simplex() {
        let d = Distribution::new(vec![0.1, 0.2, 0.7]).unwrap();
        let e: Distribution<Rational> = d.to_exact().unwrap();
        assert_eq!(e.dim(), 3);
    }
}
