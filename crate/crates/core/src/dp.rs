//! Exact backward induction: policy evaluation, optimal values, and the
//! optimistic variant with additive bonuses and clipping.

use ndarray::{s, Array2, Array3};

use crate::error::{MorlError, Result};
use crate::momdp::{Momdp, TransitionModel};
use crate::policy::{DeterministicPolicy, MixturePolicy};
use crate::preference::Preference;
use crate::scalar::{argmax, dot, Scalar};

/// Per-step value and action-value tables.
///
/// `v` has shape `(H+1, S)` with a zero terminal row; `q` has shape `(H, S, A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables<T> {
    pub v: Array2<T>,
    pub q: Array3<T>,
}

impl<T: Scalar> ValueTables<T> {
    fn zeros(horizon: usize, states: usize, actions: usize) -> Self {
        Self {
            v: Array2::zeros((horizon + 1, states)),
            q: Array3::zeros((horizon, states, actions)),
        }
    }

    pub fn horizon(&self) -> usize {
        self.q.dim().0
    }

    /// `V_1(s)`.
    pub fn root(&self, s: usize) -> T {
        self.v[[0, s]]
    }

    pub fn v_row(&self, h: usize) -> &[T] {
        let n = self.v.ncols();
        &self.v.as_slice().expect("standard layout")[h * n..(h + 1) * n]
    }
}

/// One backward sweep shared by the exact and optimistic planners:
/// `Q_h = min{cap, r_h + bonus_h + P V_{h+1}}`, `V_h = max_a Q_h`, greedy
/// actions with lowest-index tie-breaking.
pub(crate) fn greedy_backup<T: Scalar, M: TransitionModel<T> + ?Sized>(
    model: &M,
    rewards: &Array3<T>,
    bonus: Option<&Array3<T>>,
    cap: Option<T>,
) -> (ValueTables<T>, DeterministicPolicy) {
    let (horizon, states, actions) = rewards.dim();
    let mut tables = ValueTables::zeros(horizon, states, actions);
    let mut policy = Array2::zeros((horizon, states));
    for h in (0..horizon).rev() {
        let next = tables.v.row(h + 1).to_owned();
        let next = next.as_slice().expect("contiguous");
        for x in 0..states {
            for a in 0..actions {
                let mut q = rewards[[h, x, a]];
                if let Some(b) = bonus {
                    q += b[[h, x, a]];
                }
                q += dot(model.row(h, x, a), next);
                if let Some(c) = cap {
                    q = q.min(c);
                }
                tables.q[[h, x, a]] = q;
            }
            let (best, value) = argmax(tables.q.slice(s![h, x, ..]).iter().copied()).expect("A >= 1");
            tables.v[[h, x]] = value;
            policy[[h, x]] = best;
        }
    }
    (tables, DeterministicPolicy::from_table(policy))
}

/// Evaluates a fixed policy on any transition model with a scalar reward
/// table `(H, S, A)`.
pub(crate) fn evaluate<T: Scalar, M: TransitionModel<T> + ?Sized>(
    model: &M,
    rewards: &Array3<T>,
    policy: &DeterministicPolicy,
) -> ValueTables<T> {
    let (horizon, states, actions) = rewards.dim();
    let mut tables = ValueTables::zeros(horizon, states, actions);
    for h in (0..horizon).rev() {
        let next = tables.v.row(h + 1).to_owned();
        let next = next.as_slice().expect("contiguous");
        for x in 0..states {
            for a in 0..actions {
                tables.q[[h, x, a]] = rewards[[h, x, a]] + dot(model.row(h, x, a), next);
            }
            tables.v[[h, x]] = tables.q[[h, x, policy.action(h, x)]];
        }
    }
    tables
}

fn check_policy<T: Scalar>(m: &Momdp<T>, policy: &DeterministicPolicy) -> Result<()> {
    if policy.horizon() != m.horizon() || policy.num_states() != m.num_states() {
        return Err(MorlError::InvalidSize(format!(
            "policy covers {}x{} (step x state), model needs {}x{}",
            policy.horizon(),
            policy.num_states(),
            m.horizon(),
            m.num_states()
        )));
    }
    if let Some(&a) = policy.table().iter().find(|&&a| a >= m.num_actions()) {
        return Err(MorlError::IndexOutOfRange {
            what: "action",
            index: a,
            bound: m.num_actions(),
        });
    }
    Ok(())
}

/// Exact `V^π` and `Q^π` under preference `w`.
pub fn policy_value<T: Scalar>(m: &Momdp<T>, policy: &DeterministicPolicy, w: &Preference<T>) -> Result<ValueTables<T>> {
    check_policy(m, policy)?;
    let r = m.rewards().scalarized(w)?;
    Ok(evaluate(m, &r, policy))
}

/// Exact `V*`, `Q*` and a greedy optimal policy under preference `w`.
pub fn optimal_value<T: Scalar>(m: &Momdp<T>, w: &Preference<T>) -> Result<(ValueTables<T>, DeterministicPolicy)> {
    let r = m.rewards().scalarized(w)?;
    Ok(greedy_backup(m, &r, None, None))
}

/// Weighted average of the members' `V^π_1(x_1; w)`.
pub fn mixture_value<T: Scalar>(m: &Momdp<T>, mixture: &MixturePolicy<T>, w: &Preference<T>) -> Result<T> {
    let r = m.rewards().scalarized(w)?;
    let x1 = m.initial_state();
    let mut total = T::zero();
    for (pi, &weight) in mixture.members().iter().zip(mixture.weights()) {
        check_policy(m, pi)?;
        total += weight * evaluate(m, &r, pi).root(x1);
    }
    Ok(total)
}
