//! Preference-free exploration: explore with zero reward and an enlarged
//! bonus, then plan for any preference from the recorded history alone.

use ndarray::{Array3, Array4};
use rand::Rng;

use crate::dp::{evaluate, optimal_value};
use crate::error::{MorlError, Result};
use crate::model::{empirical_transitions, EmpiricalModel, HistoryBuffer, VisitCounts};
use crate::momdp::{sample_path, Momdp, Rewards};
use crate::planning::{hoeffding_bonus, ucb_q_scalar, BonusParams};
use crate::policy::{DeterministicPolicy, MixturePolicy};
use crate::preference::Preference;
use crate::scalar::Scalar;

/// Lower-order term of the exploration bonus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExplorationBonus {
    /// `c = scale · 3H²Sι/n + 2b`.
    Appendix,
    /// `c = H²S/(2n) + 2b`.
    MainText,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfeParams<T> {
    /// Planning bonus parameters; `episodes` is the exploration budget `K`.
    pub bonus: BonusParams<T>,
    pub form: ExplorationBonus,
    /// Plan on every `stride`-th history prefix.
    pub stride: usize,
}

impl<T: Scalar> PfeParams<T> {
    pub fn new(bonus: BonusParams<T>) -> Self {
        Self {
            bonus,
            form: ExplorationBonus::Appendix,
            stride: 1,
        }
    }

    pub fn with_form(mut self, form: ExplorationBonus) -> Self {
        self.form = form;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(MorlError::InvalidParameter("stride must be at least 1".into()));
        }
        self.stride = stride;
        Ok(self)
    }
}

/// Exploration bonus `c(n)`; `H` when `n = 0`.
pub fn exploration_bonus<T: Scalar>(n: u64, p: &PfeParams<T>) -> T {
    let b = &p.bonus;
    if n == 0 {
        return b.h();
    }
    let h = b.h();
    let s = T::of_usize(b.states);
    let nf = T::of(n as f64);
    let lower = match p.form {
        ExplorationBonus::Appendix => b.scale * T::of(3.0) * h * h * s * b.iota() / nf,
        ExplorationBonus::MainText => h * h * s / (T::of(2.0) * nf),
    };
    let c = lower + T::of(2.0) * hoeffding_bonus(n, b);
    assert!(c >= T::of(2.0) * hoeffding_bonus(n, b), "exploration bonus below twice the planning bonus");
    c
}

fn exploration_table<T: Scalar>(counts: &VisitCounts, p: &PfeParams<T>) -> Array3<T> {
    Array3::from_shape_fn((counts.horizon(), counts.num_states(), counts.num_actions()), |(h, x, a)| {
        exploration_bonus(counts.n_sa(h, x, a), p)
    })
}

fn planning_table<T: Scalar>(counts: &VisitCounts, p: &PfeParams<T>) -> Array3<T> {
    Array3::from_shape_fn((counts.horizon(), counts.num_states(), counts.num_actions()), |(h, x, a)| {
        hoeffding_bonus(counts.n_sa(h, x, a), &p.bonus)
    })
}

/// Output of [`explore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Exploration<T> {
    pub history: HistoryBuffer<T>,
    /// Optimistic zero-reward value `V̄^k_1(x_1)` before each episode.
    pub root_values: Vec<T>,
}

fn check_sizes<T: Scalar>(p: &PfeParams<T>, horizon: usize, states: usize, actions: usize) -> Result<()> {
    p.bonus.validate()?;
    let b = &p.bonus;
    if (b.horizon, b.states, b.actions) != (horizon, states, actions) {
        return Err(MorlError::InvalidParameter(format!(
            "parameters are for S={}, A={}, H={}, got S={states}, A={actions}, H={horizon}",
            b.states, b.actions, b.horizon
        )));
    }
    Ok(())
}

/// Runs `k` episodes of zero-reward optimistic exploration.
pub fn explore<T: Scalar, R: Rng + ?Sized>(m: &Momdp<T>, k: usize, p: &PfeParams<T>, rng: &mut R) -> Result<Exploration<T>> {
    m.ensure_valid()?;
    check_sizes(p, m.horizon(), m.num_states(), m.num_actions())?;
    let zero = m.rewards().zero_table();
    let mut history = HistoryBuffer::for_model(m);
    let mut model = empirical_transitions(history.counts());
    let mut root_values = Vec::with_capacity(k);
    for _ in 0..k {
        let bonus = exploration_table(history.counts(), p);
        let (values, policy) = ucb_q_scalar(&model, &zero, &bonus)?;
        root_values.push(values.root(m.initial_state()));
        let t = sample_path(m, &policy, rng);
        history.push(t.clone())?;
        model.refresh_along(history.counts(), &t.steps);
    }
    Ok(Exploration { history, root_values })
}

fn plan_scalar<T: Scalar>(
    model: &EmpiricalModel<T>,
    counts: &VisitCounts,
    r: &Array3<T>,
    p: &PfeParams<T>,
) -> Result<DeterministicPolicy> {
    Ok(ucb_q_scalar(model, r, &planning_table(counts, p))?.1)
}

/// Greedy planning policy for a single set of counts: optimistic backward
/// induction on the empirical model with the Hoeffding planning bonus.
pub fn plan_from_counts<T: Scalar>(
    counts: &VisitCounts,
    rewards: &Rewards<T>,
    w: &Preference<T>,
    p: &PfeParams<T>,
) -> Result<DeterministicPolicy> {
    check_sizes(p, counts.horizon(), counts.num_states(), counts.num_actions())?;
    plan_scalar(&empirical_transitions(counts), counts, &rewards.scalarized(w)?, p)
}

/// Replays the history prefix by prefix and calls `visit` with each greedy
/// planning policy. Prefix `k` holds the first `k - 1` episodes.
fn replay<T: Scalar>(
    history: &HistoryBuffer<T>,
    rewards: &Rewards<T>,
    w: &Preference<T>,
    p: &PfeParams<T>,
    mut visit: impl FnMut(DeterministicPolicy),
) -> Result<()> {
    if history.is_empty() {
        return Err(MorlError::Empty("history"));
    }
    if (rewards.horizon(), rewards.num_states(), rewards.num_actions())
        != (history.horizon(), history.num_states(), history.num_actions())
    {
        return Err(MorlError::InvalidSize("rewards do not match the history".into()));
    }
    check_sizes(p, history.horizon(), history.num_states(), history.num_actions())?;
    let r = rewards.scalarized(w)?;
    let mut counts = VisitCounts::new(history.mode(), history.horizon(), history.num_states(), history.num_actions());
    let mut model = empirical_transitions(&counts);
    for (i, t) in history.episodes().iter().enumerate() {
        if i % p.stride == 0 {
            visit(plan_scalar(&model, &counts, &r, p)?);
        }
        counts.update(&t.steps)?;
        model.refresh_along(&counts, &t.steps);
    }
    Ok(())
}

/// Uniform mixture of the greedy planning policies over all history
/// prefixes. Uses only the history and the known rewards.
pub fn plan<T: Scalar>(
    history: &HistoryBuffer<T>,
    rewards: &Rewards<T>,
    w: &Preference<T>,
    p: &PfeParams<T>,
) -> Result<MixturePolicy<T>> {
    let mut members = Vec::new();
    replay(history, rewards, w, p, |pi| members.push(pi))?;
    MixturePolicy::uniform(members)
}

/// `max_w V*_1(x_1; w) − V^{mixture}_1(x_1; w)` over `grid`, both sides by
/// exact dynamic programming on `m`.
pub fn pac_error<T: Scalar>(m: &Momdp<T>, history: &HistoryBuffer<T>, p: &PfeParams<T>, grid: &[Preference<T>]) -> Result<T> {
    if grid.is_empty() {
        return Err(MorlError::Empty("preference grid"));
    }
    let x1 = m.initial_state();
    let mut worst = T::neg_infinity();
    for w in grid {
        let r = m.rewards().scalarized(w)?;
        let best = optimal_value(m, w)?.0.root(x1);
        let mut total = T::zero();
        let mut members = 0usize;
        let mut last: Option<(DeterministicPolicy, T)> = None;
        replay(history, m.rewards(), w, p, |pi| {
            let value = match &last {
                Some((prev, v)) if *prev == pi => *v,
                _ => {
                    let v = evaluate(m, &r, &pi).root(x1);
                    last = Some((pi, v));
                    v
                }
            };
            total += value;
            members += 1;
        })?;
        worst = worst.max(best - total / T::of_usize(members));
    }
    Ok(worst)
}

/// Order-level episode budget with unit constants:
/// `(d∧S) H³ S A ι / ε² + H² S² A ι² / ε`, `ι = ln(H S A / (δ ε))`.
pub fn sample_complexity(d: usize, s: usize, a: usize, h: usize, eps: f64, delta: f64) -> Result<u64> {
    if !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(MorlError::InvalidParameter(format!(
            "eps and delta must lie in (0, 1), got {eps} and {delta}"
        )));
    }
    if d == 0 || s == 0 || a == 0 || h == 0 {
        return Err(MorlError::InvalidSize("d, S, A and H must all be at least 1".into()));
    }
    let (de, s, a, h) = (d.min(s) as f64, s as f64, a as f64, h as f64);
    let iota = (h * s * a / (delta * eps)).ln();
    let k = de * h.powi(3) * s * a * iota / (eps * eps) + h * h * s * s * a * iota * iota / eps;
    Ok(k.ceil() as u64)
}

/// Indicator rewards `r_{(x,a)}(x', a') = 1[(x,a) = (x',a')]` with one
/// objective per state-action pair, so preferences span every reward
/// function up to scaling.
pub fn reward_free_rewards<T: Scalar>(horizon: usize, states: usize, actions: usize) -> Result<Rewards<T>> {
    let mut data = Array4::zeros((horizon, states, actions, states * actions));
    for h in 0..horizon {
        for x in 0..states {
            for a in 0..actions {
                data[[h, x, a, x * actions + a]] = T::one();
            }
        }
    }
    Rewards::new(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::pfe_fixture;
    use crate::momdp::TransitionModel;
    use crate::preference::vertices_and_lattice;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(k: usize, scale: f64) -> PfeParams<f64> {
        PfeParams::new(BonusParams::new(3, 6, 3, 5, k, 0.1).unwrap().with_scale(scale).unwrap())
    }

    #[test]
    fn single_episode_history() {
        let m = pfe_fixture::<f64>(0);
        let e = explore(&m, 1, &params(1, 0.1), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(e.history.len(), 1);
        assert_eq!(e.history.episodes()[0].len(), 5);
        let mix = plan(&e.history, m.rewards(), &Preference::uniform(3), &params(1, 0.1)).unwrap();
        assert_eq!(mix.len(), 1);
    }

    #[test]
    fn bonus_forms() {
        let p = params(100, 1.0);
        let b = hoeffding_bonus(10, &p.bonus);
        let iota = p.bonus.iota();
        assert!((exploration_bonus(10, &p) - (3.0 * 25.0 * 6.0 * iota / 10.0 + 2.0 * b)).abs() < 1e-9);
        let main = p.clone().with_form(ExplorationBonus::MainText);
        assert!((exploration_bonus(10, &main) - (25.0 * 6.0 / 20.0 + 2.0 * b)).abs() < 1e-12);
        assert_eq!(exploration_bonus(0, &p), 5.0);
        for n in [1, 7, 1000, 1_000_000] {
            assert!(exploration_bonus(n, &p) >= 2.0 * hoeffding_bonus(n, &p.bonus));
        }
    }

    #[test]
    fn exploration_is_deterministic_and_clipped() {
        let m = pfe_fixture::<f64>(1);
        let p = params(200, 0.1);
        let a = explore(&m, 200, &p, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = explore(&m, 200, &p, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        assert!(a.root_values.iter().all(|v| *v <= 5.0 && *v >= 0.0));
        assert_eq!(a.history.counts().total_visits(), 1000);
    }

    #[test]
    fn empty_history_and_grid_are_errors() {
        let m = pfe_fixture::<f64>(0);
        let empty = HistoryBuffer::for_model(&m);
        assert!(plan(&empty, m.rewards(), &Preference::uniform(3), &params(1, 0.1)).is_err());
        let e = explore(&m, 2, &params(2, 0.1), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(pac_error(&m, &e.history, &params(2, 0.1), &[]).is_err());
    }

    #[test]
    fn stride_thins_the_mixture() {
        let m = pfe_fixture::<f64>(0);
        let p = params(10, 0.1);
        let e = explore(&m, 10, &p, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let w = Preference::uniform(3);
        assert_eq!(plan(&e.history, m.rewards(), &w, &p).unwrap().len(), 10);
        let thin = p.with_stride(3).unwrap();
        assert_eq!(plan(&e.history, m.rewards(), &w, &thin).unwrap().len(), 4);
    }

    #[test]
    fn pac_error_is_a_max_over_the_grid() {
        let m = pfe_fixture::<f64>(2);
        let p = params(50, 0.1);
        let e = explore(&m, 50, &p, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let grid = vertices_and_lattice::<f64>(3, 4);
        let each: Vec<f64> = grid
            .iter()
            .map(|w| {
                let mix = plan(&e.history, m.rewards(), w, &p).unwrap();
                let v = crate::dp::mixture_value(&m, &mix, w).unwrap();
                let best = optimal_value(&m, w).unwrap().0.root(0);
                assert!(v <= best + 1e-9);
                best - v
            })
            .collect();
        let err = pac_error(&m, &e.history, &p, &grid).unwrap();
        assert!((err - each.iter().cloned().fold(f64::MIN, f64::max)).abs() < 1e-12);
    }

    #[test]
    fn sample_complexity_formula() {
        let k = sample_complexity(3, 6, 3, 5, 0.5, 0.1).unwrap();
        let iota = (90.0f64 / 0.05).ln();
        let expected = 3.0 * 125.0 * 18.0 * iota / 0.25 + 25.0 * 36.0 * 3.0 * iota * iota / 0.5;
        assert_eq!(k, expected.ceil() as u64);
        assert_eq!(sample_complexity(9, 6, 3, 5, 0.5, 0.1).unwrap(), sample_complexity(6, 6, 3, 5, 0.5, 0.1).unwrap());
        assert!(sample_complexity(3, 6, 3, 5, 1.0, 0.1).is_err());
        assert!(sample_complexity(3, 6, 3, 5, 0.5, 0.0).is_err());
    }

    #[test]
    fn reward_free_basis_has_full_rank_identity() {
        let r = reward_free_rewards::<f64>(5, 6, 3).unwrap();
        assert_eq!(r.num_objectives(), 18);
        let p = BonusParams::<f64>::new(18, 6, 3, 5, 10, 0.1).unwrap();
        assert_eq!(p.d_eff, 6);
        let m = pfe_fixture::<f64>(0);
        let free = Momdp::stationary(
            0,
            m.transitions().index_axis(ndarray::Axis(0), 0).to_owned(),
            r.tensor().clone(),
        )
        .unwrap();
        let e = explore(&free, 5, &PfeParams::new(p.clone()), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let w = Preference::vertex(18, 4);
        let mix = plan(&e.history, free.rewards(), &w, &PfeParams::new(p)).unwrap();
        assert_eq!(mix.len(), 5);
        assert_eq!(free.row(0, 0, 0).len(), 6);
    }
}
