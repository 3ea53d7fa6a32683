//! Exploration bonuses and optimistic backward induction, in a Hoeffding
//! form (upper values only) and a Bernstein form (upper and lower values
//! with variance-aware bonuses).

use ndarray::{s, Array2, Array3};

use crate::dp::{greedy_backup, ValueTables};
use crate::error::{MorlError, Result};
use crate::model::VisitCounts;
use crate::momdp::{Rewards, TransitionModel};
use crate::policy::DeterministicPolicy;
use crate::preference::Preference;
use crate::scalar::{argmax, dot, Scalar};

/// Sizes and confidence parameters shared by every bonus.
///
/// `d_eff = min(d, S)`, `ι = ln(6 H² S A K / (δ ε))` unless overridden, and
/// `ε = 1/K` by default.
#[derive(Debug, Clone, PartialEq)]
pub struct BonusParams<T> {
    pub d_eff: usize,
    pub horizon: usize,
    pub states: usize,
    pub actions: usize,
    pub episodes: usize,
    pub delta: T,
    pub eps: T,
    pub scale: T,
    pub iota_override: Option<T>,
}

impl<T: Scalar> BonusParams<T> {
    pub fn new(d: usize, states: usize, actions: usize, horizon: usize, episodes: usize, delta: T) -> Result<Self> {
        let p = Self {
            d_eff: d.min(states),
            horizon,
            states,
            actions,
            episodes,
            delta,
            eps: T::one() / T::of_usize(episodes.max(1)),
            scale: T::one(),
            iota_override: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_scale(mut self, scale: T) -> Result<Self> {
        self.scale = scale;
        self.validate()?;
        Ok(self)
    }

    pub fn with_eps(mut self, eps: T) -> Result<Self> {
        self.eps = eps;
        self.validate()?;
        Ok(self)
    }

    /// Fixes `ι` instead of deriving it from the sizes.
    pub fn with_iota(mut self, iota: T) -> Result<Self> {
        self.iota_override = Some(iota);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(MorlError::InvalidParameter(msg));
        if self.d_eff == 0 || self.horizon == 0 || self.states == 0 || self.actions == 0 {
            return bad("d, S, A and H must all be at least 1".into());
        }
        if !(self.delta > T::zero() && self.delta < T::one()) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.eps > T::zero()) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.scale > T::zero()) {
            return bad(format!("scale must be positive, got {}", self.scale));
        }
        if !(self.iota() > T::zero()) {
            return bad(format!("iota must be positive, got {}", self.iota()));
        }
        Ok(())
    }

    pub fn iota(&self) -> T {
        self.iota_override.unwrap_or_else(|| {
            let h = self.horizon as f64;
            let arg = 6.0 * h * h * (self.states * self.actions * self.episodes.max(1)) as f64
                / (self.delta.as_f64() * self.eps.as_f64());
            T::of(arg.ln())
        })
    }

    pub fn h(&self) -> T {
        T::of_usize(self.horizon)
    }
}

/// `scale · (2ε + sqrt(d_eff H² ι / (2n)))`, or `H` when `n = 0`.
pub fn hoeffding_bonus<T: Scalar>(n: u64, p: &BonusParams<T>) -> T {
    if n == 0 {
        return p.h();
    }
    let h = p.h();
    let two = T::of(2.0);
    let root = (T::of_usize(p.d_eff) * h * h * p.iota() / (two * T::of(n as f64))).sqrt();
    p.scale * (two * p.eps + root)
}

/// Hoeffding bonuses for every `(h, x, a)`, shape `(H, S, A)`.
pub fn hoeffding_bonus_table<T: Scalar>(counts: &VisitCounts, p: &BonusParams<T>) -> Array3<T> {
    Array3::from_shape_fn((counts.horizon(), counts.num_states(), counts.num_actions()), |(h, x, a)| {
        hoeffding_bonus(counts.n_sa(h, x, a), p)
    })
}

fn check_bonus<T: Scalar>(bonus: &Array3<T>, shape: (usize, usize, usize)) -> Result<()> {
    if bonus.dim() != shape {
        return Err(MorlError::InvalidSize(format!(
            "bonus table {:?} does not match (H, S, A) = {shape:?}",
            bonus.dim()
        )));
    }
    if bonus.iter().any(|b| !(*b >= T::zero())) {
        return Err(MorlError::InvalidParameter("bonus table has a negative entry".into()));
    }
    Ok(())
}

/// Optimistic backward induction `Q_h = min{H, ⟨w, r_h⟩ + b_h + P̂ V_{h+1}}`
/// with a greedy (lowest-index) policy.
pub fn ucb_q<T: Scalar, M: TransitionModel<T> + ?Sized>(
    model: &M,
    rewards: &Rewards<T>,
    w: &Preference<T>,
    bonus: &Array3<T>,
) -> Result<(ValueTables<T>, DeterministicPolicy)> {
    let r = rewards.scalarized(w)?;
    ucb_q_scalar(model, &r, bonus)
}

/// [`ucb_q`] on an already scalarized reward table `(H, S, A)`.
pub fn ucb_q_scalar<T: Scalar, M: TransitionModel<T> + ?Sized>(
    model: &M,
    rewards: &Array3<T>,
    bonus: &Array3<T>,
) -> Result<(ValueTables<T>, DeterministicPolicy)> {
    check_bonus(bonus, rewards.dim())?;
    let (h, s, a) = rewards.dim();
    if model.num_states() != s || model.num_actions() != a {
        return Err(MorlError::InvalidSize(format!(
            "model has {}x{} (state x action), rewards have {s}x{a}",
            model.num_states(),
            model.num_actions()
        )));
    }
    Ok(greedy_backup(model, rewards, Some(bonus), Some(T::of_usize(h))))
}

/// `Σ_y P(y) (V(y) − P V)²`.
pub fn one_step_variance<T: Scalar>(row: &[T], v: &[T]) -> T {
    let mean = dot(row, v);
    row.iter().zip(v).fold(T::zero(), |acc, (&p, &x)| {
        let dev = x - mean;
        acc + p * dev * dev
    })
}

/// Upper and lower value estimates from the Bernstein planner.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinTables<T> {
    pub upper: ValueTables<T>,
    pub lower: ValueTables<T>,
    pub policy: DeterministicPolicy,
}

/// Interleaved optimistic/pessimistic backward induction.
///
/// At step `h`, with `n = N(x, a)`, `c = sqrt(2 d_eff ι / n)` and
/// `e = 7 d_eff H ι / (3n)`:
///
/// ```text
/// b = scale · (2ε + c·(‖V̄_{h+1}‖ + ‖V̄_{h+1} − V̲_{h+1}‖) + e)
/// a = scale · (2ε + c·(‖V̲_{h+1}‖ + ‖V̄_{h+1} − V̲_{h+1}‖) + e)
/// Q̄ = min{H, ⟨w, r⟩ + b + P̂ V̄_{h+1}},   π_h = argmax Q̄
/// Q̲ = max{0, ⟨w, r⟩ − a + P̂ V̲_{h+1}},   V̲_h(x) = Q̲(x, π_h(x))
/// ```
///
/// where `‖·‖` is the standard deviation under `P̂(·|x, a)`; both bonuses
/// are `H` when `n = 0`.
pub fn bernstein_plan<T: Scalar, M: TransitionModel<T> + ?Sized>(
    model: &M,
    rewards: &Rewards<T>,
    w: &Preference<T>,
    counts: &VisitCounts,
    p: &BonusParams<T>,
) -> Result<BernsteinTables<T>> {
    let r = rewards.scalarized(w)?;
    let (horizon, states, actions) = r.dim();
    if counts.horizon() != horizon || counts.num_states() != states || counts.num_actions() != actions {
        return Err(MorlError::InvalidSize("visit counts do not match the reward table".into()));
    }
    let cap = T::of_usize(horizon);
    let two = T::of(2.0);
    let iota = p.iota();
    let d_eff = T::of_usize(p.d_eff);
    let mut upper_v = Array2::zeros((horizon + 1, states));
    let mut lower_v = Array2::zeros((horizon + 1, states));
    let mut upper_q = Array3::zeros((horizon, states, actions));
    let mut lower_q = Array3::zeros((horizon, states, actions));
    let mut policy = Array2::zeros((horizon, states));
    for h in (0..horizon).rev() {
        let up: Vec<T> = upper_v.row(h + 1).to_vec();
        let lo: Vec<T> = lower_v.row(h + 1).to_vec();
        let gap: Vec<T> = up.iter().zip(&lo).map(|(&u, &l)| u - l).collect();
        let mut lower_bonus = vec![T::zero(); actions];
        for x in 0..states {
            for a in 0..actions {
                let n = counts.n_sa(h, x, a);
                let row = model.row(h, x, a);
                let (b, lb) = if n == 0 {
                    (cap, cap)
                } else {
                    let nf = T::of(n as f64);
                    let c = (two * d_eff * iota / nf).sqrt();
                    let e = T::of(7.0) * d_eff * cap * iota / (T::of(3.0) * nf);
                    let sd_gap = one_step_variance(row, &gap).sqrt();
                    let b = p.scale * (two * p.eps + c * (one_step_variance(row, &up).sqrt() + sd_gap) + e);
                    let lb = p.scale * (two * p.eps + c * (one_step_variance(row, &lo).sqrt() + sd_gap) + e);
                    (b, lb)
                };
                lower_bonus[a] = lb;
                upper_q[[h, x, a]] = (r[[h, x, a]] + b + dot(row, &up)).min(cap);
                lower_q[[h, x, a]] = (r[[h, x, a]] - lb + dot(row, &lo)).max(T::zero());
            }
            let (best, value) = argmax(upper_q.slice(s![h, x, ..]).iter().copied()).expect("A >= 1");
            policy[[h, x]] = best;
            upper_v[[h, x]] = value;
            lower_v[[h, x]] = lower_q[[h, x, best]];
        }
    }
    Ok(BernsteinTables {
        upper: ValueTables { v: upper_v, q: upper_q },
        lower: ValueTables { v: lower_v, q: lower_q },
        policy: DeterministicPolicy::from_table(policy),
    })
}
