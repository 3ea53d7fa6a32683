use ndarray::Array2;

use crate::error::{MorlError, Result};
use crate::preference::Preference;
use crate::scalar::Scalar;

/// A time-dependent deterministic map from states to actions, `actions[[h, s]]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeterministicPolicy {
    actions: Array2<usize>,
}

impl DeterministicPolicy {
    pub fn new(actions: Array2<usize>, num_actions: usize) -> Result<Self> {
        if let Some(&a) = actions.iter().find(|&&a| a >= num_actions) {
            return Err(MorlError::IndexOutOfRange {
                what: "action",
                index: a,
                bound: num_actions,
            });
        }
        Ok(Self { actions })
    }

    pub(crate) fn from_table(actions: Array2<usize>) -> Self {
        Self { actions }
    }

    /// Plays `action` everywhere.
    pub fn constant(horizon: usize, num_states: usize, action: usize) -> Self {
        Self {
            actions: Array2::from_elem((horizon, num_states), action),
        }
    }

    pub fn action(&self, h: usize, s: usize) -> usize {
        self.actions[[h, s]]
    }

    pub fn horizon(&self) -> usize {
        self.actions.nrows()
    }

    pub fn num_states(&self) -> usize {
        self.actions.ncols()
    }

    pub fn table(&self) -> &Array2<usize> {
        &self.actions
    }
}

/// A distribution over deterministic policies.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePolicy<T> {
    members: Vec<DeterministicPolicy>,
    weights: Vec<T>,
}

impl<T: Scalar> MixturePolicy<T> {
    pub fn uniform(members: Vec<DeterministicPolicy>) -> Result<Self> {
        if members.is_empty() {
            return Err(MorlError::Empty("mixture"));
        }
        let w = T::one() / T::of_usize(members.len());
        let weights = vec![w; members.len()];
        Ok(Self { members, weights })
    }

    pub fn weighted(members: Vec<DeterministicPolicy>, weights: Vec<T>) -> Result<Self> {
        if members.is_empty() {
            return Err(MorlError::Empty("mixture"));
        }
        if members.len() != weights.len() {
            return Err(MorlError::DimensionMismatch {
                expected: members.len(),
                actual: weights.len(),
            });
        }
        let total: T = weights.iter().copied().sum();
        if weights.iter().any(|w| *w < T::zero()) || (total - T::one()).abs() > T::tol() {
            return Err(MorlError::InvalidParameter("mixture weights must be a distribution".into()));
        }
        Ok(Self { members, weights })
    }

    pub fn members(&self) -> &[DeterministicPolicy] {
        &self.members
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// One episode of interaction: `H` (state, action) pairs starting at the
/// initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub steps: Vec<(usize, usize)>,
    pub scalar_return: T,
    /// `None` for preference-free exploration episodes.
    pub preference: Option<Preference<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().map(|&(s, _)| s)
    }
}
