//! Preference vectors on the probability simplex and the scalarization of
//! vector rewards.

use crate::error::{MorlError, Result};
use crate::scalar::Scalar;

/// A point on the probability simplex weighting the `d` objectives.
#[derive(Debug, Clone, PartialEq)]
pub struct Preference<T> {
    weights: Vec<T>,
}

impl<T: Scalar> Preference<T> {
    pub fn new(weights: Vec<T>) -> Result<Self> {
        if weights.is_empty() {
            return Err(MorlError::InvalidPreference("zero-dimensional".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= T::zero() && **w <= T::one())) {
            return Err(MorlError::InvalidPreference(format!("entry {w} outside [0, 1]")));
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > T::tol() {
            return Err(MorlError::InvalidPreference(format!("entries sum to {total}")));
        }
        Ok(Self { weights })
    }

    /// Normalizes a nonnegative vector onto the simplex.
    pub fn normalized(raw: Vec<T>) -> Result<Self> {
        let total: T = raw.iter().copied().sum();
        if raw.iter().any(|w| *w < T::zero()) || total <= T::zero() {
            return Err(MorlError::InvalidPreference("cannot normalize".into()));
        }
        Self::new(raw.into_iter().map(|w| w / total).collect())
    }

    /// The `i`-th simplex vertex `e_i`.
    pub fn vertex(dim: usize, i: usize) -> Self {
        assert!(i < dim, "vertex {i} out of range for dimension {dim}");
        let mut weights = vec![T::zero(); dim];
        weights[i] = T::one();
        Self { weights }
    }

    pub fn uniform(dim: usize) -> Self {
        assert!(dim > 0);
        Self {
            weights: vec![T::one() / T::of_usize(dim); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn l1_distance(&self, other: &Self) -> T {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (*a - *b).abs())
            .sum()
    }

    /// `α·self + (1-α)·other`.
    pub fn mix(&self, other: &Self, alpha: T) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(MorlError::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Self::new(
            self.weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| alpha * *a + (T::one() - alpha) * *b)
                .collect(),
        )
    }

    /// Mean of a nonempty list of preferences.
    pub fn mean(prefs: &[Self]) -> Result<Self> {
        let first = prefs.first().ok_or(MorlError::Empty("preference list"))?;
        let mut acc = vec![T::zero(); first.dim()];
        for p in prefs {
            if p.dim() != acc.len() {
                return Err(MorlError::DimensionMismatch {
                    expected: acc.len(),
                    actual: p.dim(),
                });
            }
            for (a, w) in acc.iter_mut().zip(&p.weights) {
                *a += *w;
            }
        }
        let k = T::of_usize(prefs.len());
        Self::new(acc.into_iter().map(|a| a / k).collect())
    }

    /// Exact bit pattern, for use as a cache key.
    pub fn key(&self) -> Vec<u64> {
        self.weights.iter().map(|w| w.as_f64().to_bits()).collect()
    }

    pub fn is_vertex(&self) -> bool {
        self.weights.iter().filter(|w| **w == T::one()).count() == 1
    }
}

/// Maps a vector reward and a preference to a scalar reward.
///
/// Only the linear form is provided; other monotone, Lipschitz-in-`w`
/// scalarizations can be plugged in through this trait.
pub trait Scalarization<T: Scalar>: Send + Sync {
    fn apply(&self, reward: &[T], w: &Preference<T>) -> T;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Linear;

impl<T: Scalar> Scalarization<T> for Linear {
    fn apply(&self, reward: &[T], w: &Preference<T>) -> T {
        crate::scalar::dot(reward, w.weights())
    }
}

/// `⟨w, r⟩`.
pub fn scalarize<T: Scalar>(reward: &[T], w: &Preference<T>) -> Result<T> {
    if reward.len() != w.dim() {
        return Err(MorlError::DimensionMismatch {
            expected: w.dim(),
            actual: reward.len(),
        });
    }
    Ok(Linear.apply(reward, w))
}

/// All simplex points whose coordinates are multiples of `1/resolution`.
///
/// Includes every vertex. Points are emitted in lexicographic order of their
/// integer numerators.
pub fn simplex_lattice<T: Scalar>(dim: usize, resolution: usize) -> Vec<Preference<T>> {
    assert!(dim > 0 && resolution > 0);
    let mut out = Vec::new();
    let mut parts = vec![0usize; dim];
    fn rec<T: Scalar>(
        i: usize,
        remaining: usize,
        parts: &mut [usize],
        resolution: usize,
        out: &mut Vec<Preference<T>>,
    ) {
        if i + 1 == parts.len() {
            parts[i] = remaining;
            let weights = parts
                .iter()
                .map(|&p| T::of_usize(p) / T::of_usize(resolution))
                .collect();
            out.push(Preference { weights });
            return;
        }
        for p in (0..=remaining).rev() {
            parts[i] = p;
            rec(i + 1, remaining - p, parts, resolution, out);
        }
    }
    rec(0, resolution, &mut parts, resolution, &mut out);
    out
}

/// Simplex vertices followed by the lattice points that are not vertices.
pub fn vertices_and_lattice<T: Scalar>(dim: usize, resolution: usize) -> Vec<Preference<T>> {
    let mut grid: Vec<Preference<T>> = (0..dim).map(|i| Preference::vertex(dim, i)).collect();
    grid.extend(simplex_lattice(dim, resolution).into_iter().filter(|p| !p.is_vertex()));
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalarize_examples() {
        let e1 = Preference::<f64>::vertex(2, 0);
        assert_eq!(scalarize(&[1.0, 0.0], &e1).unwrap(), 1.0);
        assert_eq!(scalarize(&[0.3, 0.9], &e1).unwrap(), 0.3);
        let w = Preference::<f64>::new(vec![0.2, 0.8]).unwrap();
        assert!((scalarize(&[0.5, 0.5], &w).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn scalarize_rejects_dimension_mismatch() {
        let w = Preference::<f64>::uniform(3);
        assert!(matches!(
            scalarize(&[1.0, 0.0], &w),
            Err(MorlError::DimensionMismatch { expected: 3, actual: 2 })
        ));
    }

    #[test]
    fn preference_validation() {
        assert!(Preference::new(vec![0.5, 0.5]).is_ok());
        assert!(Preference::new(vec![0.5, 0.6]).is_err());
        assert!(Preference::new(vec![1.2, -0.2]).is_err());
        assert!(Preference::<f64>::new(vec![]).is_err());
        assert!(Preference::new(vec![0.5f32, 0.5]).is_ok());
    }

    #[test]
    fn lattice_counts() {
        // compositions of 4 into 3 parts: C(6, 2) = 15
        let grid = simplex_lattice::<f64>(3, 4);
        assert_eq!(grid.len(), 15);
        assert_eq!(grid.iter().filter(|p| p.is_vertex()).count(), 3);
        let full = vertices_and_lattice::<f64>(3, 4);
        assert_eq!(full.len(), 15);
        assert!(full[..3].iter().all(|p| p.is_vertex()));
        assert_eq!(vertices_and_lattice::<f64>(2, 1).len(), 2);
    }

    #[test]
    fn mean_of_vertices() {
        let m = Preference::<f64>::mean(&[Preference::vertex(2, 0), Preference::vertex(2, 1)]).unwrap();
        assert_eq!(m.weights(), &[0.5, 0.5]);
        assert!(Preference::<f64>::mean(&[]).is_err());
    }
}
