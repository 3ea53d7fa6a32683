//! Preference sources for the online protocol: fixed, i.i.d., cyclic, and a
//! greedy adversary that targets the agent's current plan.

use std::collections::HashMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::dp::{optimal_value, policy_value};
use crate::error::{MorlError, Result};
use crate::momdp::Momdp;
use crate::policy::DeterministicPolicy;
use crate::preference::{simplex_lattice, vertices_and_lattice, Preference};
use crate::scalar::{argmax, Scalar};

/// Read-only access to what an agent would play for a given preference.
pub trait AgentView<T: Scalar> {
    fn planned_policy(&self, w: &Preference<T>) -> Result<DeterministicPolicy>;
}

/// Scores how badly a policy does under a preference.
pub trait GapEvaluator<T: Scalar>: Send {
    fn gap(&mut self, policy: &DeterministicPolicy, w: &Preference<T>) -> Result<T>;
}

/// `V*_1(x_1; w) − V^π_1(x_1; w)` on the true model, with `V*` cached per
/// preference.
pub struct ExactGap<T> {
    model: Arc<Momdp<T>>,
    optimal: HashMap<Vec<u64>, T>,
}

impl<T: Scalar> ExactGap<T> {
    pub fn new(model: Arc<Momdp<T>>) -> Self {
        Self {
            model,
            optimal: HashMap::new(),
        }
    }
}

impl<T: Scalar> GapEvaluator<T> for ExactGap<T> {
    fn gap(&mut self, policy: &DeterministicPolicy, w: &Preference<T>) -> Result<T> {
        let x1 = self.model.initial_state();
        let best = match self.optimal.get(&w.key()) {
            Some(v) => *v,
            None => {
                let v = optimal_value(&self.model, w)?.0.root(x1);
                self.optimal.insert(w.key(), v);
                v
            }
        };
        Ok(best - policy_value(&self.model, policy, w)?.root(x1))
    }
}

pub enum PreferenceSource<T> {
    Fixed(Preference<T>),
    /// Flat Dirichlet over the simplex.
    Iid { dim: usize, rng: ChaCha8Rng },
    Cyclic { list: Vec<Preference<T>>, next: usize },
    /// Picks the candidate with the largest gap for the agent's planned
    /// policy; ties go to the lowest index.
    Greedy {
        candidates: Vec<Preference<T>>,
        evaluator: Box<dyn GapEvaluator<T>>,
    },
}

impl<T: Scalar> std::fmt::Debug for PreferenceSource<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PreferenceSource::Fixed(w) => f.debug_tuple("Fixed").field(w).finish(),
            PreferenceSource::Iid { dim, .. } => f.debug_struct("Iid").field("dim", dim).finish_non_exhaustive(),
            PreferenceSource::Cyclic { list, next } => {
                f.debug_struct("Cyclic").field("len", &list.len()).field("next", next).finish()
            }
            PreferenceSource::Greedy { candidates, .. } => f
                .debug_struct("Greedy")
                .field("candidates", &candidates.len())
                .finish_non_exhaustive(),
        }
    }
}

impl<T: Scalar> PreferenceSource<T> {
    pub fn fixed(w: Preference<T>) -> Self {
        PreferenceSource::Fixed(w)
    }

    pub fn iid(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(MorlError::InvalidSize("preference dimension must be at least 1".into()));
        }
        Ok(PreferenceSource::Iid {
            dim,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn cyclic(list: Vec<Preference<T>>) -> Result<Self> {
        if list.is_empty() {
            return Err(MorlError::Empty("preference cycle"));
        }
        Ok(PreferenceSource::Cyclic { list, next: 0 })
    }

    /// Round-robin over the simplex vertices.
    pub fn cyclic_vertices(dim: usize) -> Result<Self> {
        Self::cyclic((0..dim).map(|i| Preference::vertex(dim, i)).collect())
    }

    pub fn greedy(candidates: Vec<Preference<T>>, evaluator: Box<dyn GapEvaluator<T>>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(MorlError::Empty("candidate preferences"));
        }
        Ok(PreferenceSource::Greedy { candidates, evaluator })
    }

    /// Greedy over the simplex vertices, scored on the true model.
    pub fn greedy_vertices(model: Arc<Momdp<T>>) -> Result<Self> {
        let d = model.num_objectives();
        let candidates = (0..d).map(|i| Preference::vertex(d, i)).collect();
        Self::greedy(candidates, Box::new(ExactGap::new(model)))
    }

    /// Greedy over a dense simplex lattice (vertices included), scored on
    /// the true model.
    pub fn oracle(model: Arc<Momdp<T>>, resolution: usize) -> Result<Self> {
        let d = model.num_objectives();
        let candidates = if resolution == 0 {
            simplex_lattice(d, 1)
        } else {
            vertices_and_lattice(d, resolution)
        };
        Self::greedy(candidates, Box::new(ExactGap::new(model)))
    }

    /// Whether emissions ignore the agent, so the sequence can be drawn in
    /// advance.
    pub fn is_oblivious(&self) -> bool {
        !matches!(self, PreferenceSource::Greedy { .. })
    }

    pub fn next_preference(&mut self, view: Option<&dyn AgentView<T>>) -> Result<Preference<T>> {
        match self {
            PreferenceSource::Fixed(w) => Ok(w.clone()),
            PreferenceSource::Iid { dim, rng } => {
                let raw: Vec<T> = (0..*dim).map(|_| T::of(Exp1.sample(rng))).collect();
                Preference::normalized(raw)
            }
            PreferenceSource::Cyclic { list, next } => {
                let w = list[*next].clone();
                *next = (*next + 1) % list.len();
                Ok(w)
            }
            PreferenceSource::Greedy { candidates, evaluator } => {
                let view = view.ok_or_else(|| {
                    MorlError::InvalidParameter("the greedy adversary needs a view of the agent".into())
                })?;
                let gaps = candidates
                    .iter()
                    .map(|w| evaluator.gap(&view.planned_policy(w)?, w))
                    .collect::<Result<Vec<T>>>()?;
                let (best, _) = argmax(gaps).expect("candidates are nonempty");
                Ok(candidates[best].clone())
            }
        }
    }

    /// The next `k` emissions of an oblivious source.
    pub fn draw(&mut self, k: usize) -> Result<Vec<Preference<T>>> {
        if !self.is_oblivious() {
            return Err(MorlError::InvalidParameter(
                "an adaptive source cannot be drawn in advance".into(),
            ));
        }
        (0..k).map(|_| self.next_preference(None)).collect()
    }
}
