//! Finite-horizon multi-objective MDPs: the environment description,
//! invariant checking, episode sampling, and random instance generation.

use std::fmt;

use ndarray::{s, Array3, Array4, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{MorlError, Result};
use crate::policy::{DeterministicPolicy, Trajectory};
use crate::preference::{Linear, Preference, Scalarization};
use crate::scalar::Scalar;

/// Whether transitions are shared across steps or indexed by `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionMode {
    Stationary,
    PerStep,
}

impl TransitionMode {
    pub fn layers(self, horizon: usize) -> usize {
        match self {
            TransitionMode::Stationary => 1,
            TransitionMode::PerStep => horizon,
        }
    }

    pub fn layer(self, h: usize) -> usize {
        match self {
            TransitionMode::Stationary => 0,
            TransitionMode::PerStep => h,
        }
    }
}

impl fmt::Display for TransitionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransitionMode::Stationary => "stationary",
            TransitionMode::PerStep => "per-step",
        })
    }
}

/// Anything that provides a next-state distribution for `(h, s, a)`.
///
/// Steps are 0-based: `h ∈ 0..H`.
pub trait TransitionModel<T: Scalar> {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn row(&self, h: usize, s: usize, a: usize) -> &[T];
}

/// Known, deterministic vector rewards `r[h][s][a] ∈ [0,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rewards<T> {
    data: Array4<T>,
}

impl<T: Scalar> Rewards<T> {
    /// `data` has shape `(H, S, A, d)`.
    pub fn new(data: Array4<T>) -> Result<Self> {
        let (h, s, a, d) = data.dim();
        if h == 0 || s == 0 || a == 0 || d == 0 {
            return Err(MorlError::InvalidSize(format!(
                "reward tensor shape ({h}, {s}, {a}, {d}) has an empty axis"
            )));
        }
        Ok(Self { data })
    }

    pub fn horizon(&self) -> usize {
        self.data.dim().0
    }

    pub fn num_states(&self) -> usize {
        self.data.dim().1
    }

    pub fn num_actions(&self) -> usize {
        self.data.dim().2
    }

    pub fn num_objectives(&self) -> usize {
        self.data.dim().3
    }

    pub fn vector(&self, h: usize, s: usize, a: usize) -> ArrayView1<'_, T> {
        self.data.slice(s![h, s, a, ..])
    }

    pub fn tensor(&self) -> &Array4<T> {
        &self.data
    }

    /// Scalar reward table `⟨w, r[h][s][a]⟩` with shape `(H, S, A)`.
    pub fn scalarized(&self, w: &Preference<T>) -> Result<Array3<T>> {
        self.scalarized_with(&Linear, w)
    }

    pub fn scalarized_with(&self, f: &dyn Scalarization<T>, w: &Preference<T>) -> Result<Array3<T>> {
        let (h, s, a, d) = self.data.dim();
        if w.dim() != d {
            return Err(MorlError::DimensionMismatch {
                expected: d,
                actual: w.dim(),
            });
        }
        let mut out = Array3::zeros((h, s, a));
        for ((hh, ss, aa), v) in out.indexed_iter_mut() {
            let r = self.data.slice(s![hh, ss, aa, ..]);
            *v = f.apply(r.as_slice().expect("standard layout"), w);
        }
        Ok(out)
    }

    /// All-zero scalar reward table (preference-free exploration).
    pub fn zero_table(&self) -> Array3<T> {
        let (h, s, a, _) = self.data.dim();
        Array3::zeros((h, s, a))
    }
}

/// A finite-horizon MDP with vector-valued rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct Momdp<T> {
    initial_state: usize,
    mode: TransitionMode,
    /// `(layers, S, A, S)`; `layers` is 1 for stationary models.
    transitions: Array4<T>,
    rewards: Rewards<T>,
}

impl<T: Scalar> Momdp<T> {
    /// Stationary transitions `p[[s, a, s']]` and rewards of shape `(H, S, A, d)`.
    ///
    /// Only shapes are checked here; use [`Momdp::validate`] for the
    /// stochasticity and range invariants.
    pub fn stationary(initial_state: usize, p: Array3<T>, rewards: Array4<T>) -> Result<Self> {
        let (s, a, s2) = p.dim();
        let p = p.into_shape_with_order((1, s, a, s2)).expect("contiguous");
        Self::build(initial_state, TransitionMode::Stationary, p, rewards)
    }

    /// Per-step transitions `p[[h, s, a, s']]`.
    pub fn per_step(initial_state: usize, p: Array4<T>, rewards: Array4<T>) -> Result<Self> {
        Self::build(initial_state, TransitionMode::PerStep, p, rewards)
    }

    fn build(initial_state: usize, mode: TransitionMode, p: Array4<T>, rewards: Array4<T>) -> Result<Self> {
        let rewards = Rewards::new(rewards)?;
        let (layers, s, a, s2) = p.dim();
        let expected = (mode.layers(rewards.horizon()), rewards.num_states(), rewards.num_actions(), rewards.num_states());
        if (layers, s, a, s2) != expected {
            return Err(MorlError::InvalidSize(format!(
                "transition shape ({layers}, {s}, {a}, {s2}) does not match rewards; expected {expected:?}"
            )));
        }
        let transitions = if p.is_standard_layout() { p } else { p.as_standard_layout().into_owned() };
        Ok(Self {
            initial_state,
            mode,
            transitions,
            rewards,
        })
    }

    /// Constructs and rejects models that violate any invariant.
    pub fn checked(self) -> Result<Self> {
        let report = self.validate();
        if report.is_valid() {
            Ok(self)
        } else {
            Err(MorlError::InvalidModel(report.to_string()))
        }
    }

    pub fn num_states(&self) -> usize {
        self.rewards.num_states()
    }

    pub fn num_actions(&self) -> usize {
        self.rewards.num_actions()
    }

    pub fn horizon(&self) -> usize {
        self.rewards.horizon()
    }

    pub fn num_objectives(&self) -> usize {
        self.rewards.num_objectives()
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn mode(&self) -> TransitionMode {
        self.mode
    }

    pub fn rewards(&self) -> &Rewards<T> {
        &self.rewards
    }

    pub fn transitions(&self) -> &Array4<T> {
        &self.transitions
    }

    /// Checks every invariant and lists the violations; an empty report
    /// means the model is valid.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.num_states();
        if self.initial_state >= n {
            violations.push(Violation::InitialState {
                index: self.initial_state,
                num_states: n,
            });
        }
        let (layers, s_count, a_count, _) = self.transitions.dim();
        for l in 0..layers {
            for s in 0..s_count {
                for a in 0..a_count {
                    let row = self.transitions.slice(s![l, s, a, ..]);
                    for (next, &p) in row.iter().enumerate() {
                        if !(p >= T::zero()) {
                            violations.push(Violation::NegativeProbability {
                                layer: l,
                                state: s,
                                action: a,
                                next,
                                value: p.as_f64(),
                            });
                        }
                    }
                    let sum: T = row.iter().copied().sum();
                    if !((sum - T::one()).abs() <= T::tol()) {
                        violations.push(Violation::RowSum {
                            layer: l,
                            state: s,
                            action: a,
                            sum: sum.as_f64(),
                        });
                    }
                }
            }
        }
        for ((h, s, a, k), &r) in self.rewards.tensor().indexed_iter() {
            if !(r >= T::zero() && r <= T::one()) {
                violations.push(Violation::RewardRange {
                    step: h,
                    state: s,
                    action: a,
                    objective: k,
                    value: r.as_f64(),
                });
            }
        }
        ValidationReport { violations }
    }

    pub(crate) fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(MorlError::InvalidModel(report.to_string()))
        }
    }

    /// Keeps the first `d` reward objectives.
    pub fn truncate_objectives(&self, d: usize) -> Result<Self> {
        if d == 0 || d > self.num_objectives() {
            return Err(MorlError::InvalidSize(format!(
                "cannot keep {d} of {} objectives",
                self.num_objectives()
            )));
        }
        let data = self.rewards.tensor().slice(s![.., .., .., ..d]).to_owned();
        Ok(Self {
            initial_state: self.initial_state,
            mode: self.mode,
            transitions: self.transitions.clone(),
            rewards: Rewards::new(data)?,
        })
    }

    /// Draws a next state from the `(h, s, a)` row.
    pub fn step<R: Rng + ?Sized>(&self, h: usize, s: usize, a: usize, rng: &mut R) -> usize {
        sample_categorical(self.row(h, s, a), rng)
    }
}

impl<T: Scalar> TransitionModel<T> for Momdp<T> {
    fn num_states(&self) -> usize {
        Momdp::num_states(self)
    }

    fn num_actions(&self) -> usize {
        Momdp::num_actions(self)
    }

    fn row(&self, h: usize, s: usize, a: usize) -> &[T] {
        let l = self.mode.layer(h);
        let n = self.num_states();
        let base = ((l * self.num_states() + s) * self.num_actions() + a) * n;
        &self.transitions.as_slice().expect("standard layout")[base..base + n]
    }
}

/// Inverse-CDF draw from a probability row.
pub(crate) fn sample_categorical<T: Scalar, R: Rng + ?Sized>(row: &[T], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, p) in row.iter().enumerate() {
        let p = p.as_f64();
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last_positive
}

/// One invariant violation found by [`Momdp::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    RowSum {
        layer: usize,
        state: usize,
        action: usize,
        sum: f64,
    },
    NegativeProbability {
        layer: usize,
        state: usize,
        action: usize,
        next: usize,
        value: f64,
    },
    RewardRange {
        step: usize,
        state: usize,
        action: usize,
        objective: usize,
        value: f64,
    },
    InitialState {
        index: usize,
        num_states: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RowSum { layer, state, action, sum } => {
                write!(f, "transition row (layer {layer}, state {state}, action {action}) sums to {sum}")
            }
            Violation::NegativeProbability { layer, state, action, next, value } => write!(
                f,
                "transition P({next} | {state}, {action}) at layer {layer} is {value}"
            ),
            Violation::RewardRange { step, state, action, objective, value } => write!(
                f,
                "reward component {objective} at (step {step}, state {state}, action {action}) is {value}"
            ),
            Violation::InitialState { index, num_states } => {
                write!(f, "initial state {index} out of range for {num_states} states")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn row_sum_violations(&self) -> usize {
        self.count(|v| matches!(v, Violation::RowSum { .. }))
    }

    pub fn reward_range_violations(&self) -> usize {
        self.count(|v| matches!(v, Violation::RewardRange { .. }))
    }

    pub fn index_violations(&self) -> usize {
        self.count(|v| matches!(v, Violation::InitialState { .. }))
    }

    fn count(&self, f: impl Fn(&Violation) -> bool) -> usize {
        self.violations.iter().filter(|v| f(v)).count()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Runs `policy` for one episode from the initial state, scoring each step
/// with the scalarized reward under `w`.
pub fn sample_episode<T: Scalar, R: Rng + ?Sized>(
    m: &Momdp<T>,
    policy: &DeterministicPolicy,
    w: &Preference<T>,
    rng: &mut R,
) -> Result<Trajectory<T>> {
    if w.dim() != m.num_objectives() {
        return Err(MorlError::DimensionMismatch {
            expected: m.num_objectives(),
            actual: w.dim(),
        });
    }
    let steps = rollout(m, policy, rng);
    let scalar_return = steps
        .iter()
        .enumerate()
        .map(|(h, &(s, a))| Linear.apply(m.rewards().vector(h, s, a).as_slice().expect("contiguous"), w))
        .sum();
    Ok(Trajectory {
        steps,
        scalar_return,
        preference: Some(w.clone()),
    })
}

/// Runs `policy` without a preference; the return is zero.
pub fn sample_path<T: Scalar, R: Rng + ?Sized>(m: &Momdp<T>, policy: &DeterministicPolicy, rng: &mut R) -> Trajectory<T> {
    Trajectory {
        steps: rollout(m, policy, rng),
        scalar_return: T::zero(),
        preference: None,
    }
}

fn rollout<T: Scalar, R: Rng + ?Sized>(m: &Momdp<T>, policy: &DeterministicPolicy, rng: &mut R) -> Vec<(usize, usize)> {
    let horizon = m.horizon();
    let mut steps = Vec::with_capacity(horizon);
    let mut s = m.initial_state();
    for h in 0..horizon {
        let a = policy.action(h, s);
        steps.push((s, a));
        // x_{H+1} is never used by any consumer, so it is not drawn.
        if h + 1 < horizon {
            s = m.step(h, s, a, rng);
        }
    }
    steps
}

fn flat_dirichlet_row<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut row: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = row.iter().sum();
    for p in &mut row {
        *p /= total;
    }
    row
}

fn check_sizes(s: usize, a: usize, h: usize, d: usize) -> Result<()> {
    if s == 0 || a == 0 || h == 0 || d == 0 {
        return Err(MorlError::InvalidSize(format!(
            "all of S={s}, A={a}, H={h}, d={d} must be at least 1"
        )));
    }
    Ok(())
}

fn random_rewards<T: Scalar, R: Rng + ?Sized>(s: usize, a: usize, h: usize, d: usize, rng: &mut R) -> Array4<T> {
    Array4::from_shape_simple_fn((h, s, a, d), || T::of(rng.random::<f64>()))
}

/// Random stationary MOMDP: flat-Dirichlet transition rows and rewards
/// uniform on `[0,1]^d`. Deterministic in `seed`.
pub fn random_momdp<T: Scalar>(s: usize, a: usize, h: usize, d: usize, seed: u64) -> Result<Momdp<T>> {
    check_sizes(s, a, h, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Array3::zeros((s, a, s));
    for x in 0..s {
        for u in 0..a {
            let row = flat_dirichlet_row(s, &mut rng);
            for (y, v) in row.into_iter().enumerate() {
                p[[x, u, y]] = T::of(v);
            }
        }
    }
    let rewards = random_rewards(s, a, h, d, &mut rng);
    Momdp::stationary(0, p, rewards)
}

/// Random MOMDP with an independent transition table at every step.
pub fn random_momdp_per_step<T: Scalar>(s: usize, a: usize, h: usize, d: usize, seed: u64) -> Result<Momdp<T>> {
    check_sizes(s, a, h, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Array4::zeros((h, s, a, s));
    for l in 0..h {
        for x in 0..s {
            for u in 0..a {
                let row = flat_dirichlet_row(s, &mut rng);
                for (y, v) in row.into_iter().enumerate() {
                    p[[l, x, u, y]] = T::of(v);
                }
            }
        }
    }
    let rewards = random_rewards(s, a, h, d, &mut rng);
    Momdp::per_step(0, p, rewards)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::two_state;

    #[test]
    fn two_state_is_valid() {
        assert!(two_state::<f64>().validate().is_valid());
        assert!(two_state::<f32>().validate().is_valid());
    }

    #[test]
    fn short_row_is_one_violation() {
        let m = two_state::<f64>();
        let mut p = m.transitions().index_axis(ndarray::Axis(0), 0).to_owned();
        p[[0, 0, 0]] = 0.9;
        let bad = Momdp::stationary(0, p, m.rewards().tensor().clone()).unwrap();
        let report = bad.validate();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.row_sum_violations(), 1);
    }

    #[test]
    fn reward_above_one_is_one_violation() {
        let m = two_state::<f64>();
        let mut r = m.rewards().tensor().clone();
        r[[0, 0, 0, 0]] = 1.2;
        let p = m.transitions().index_axis(ndarray::Axis(0), 0).to_owned();
        let bad = Momdp::stationary(0, p, r).unwrap();
        let report = bad.validate();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.reward_range_violations(), 1);
        assert!(bad.checked().is_err());
    }

    #[test]
    fn bad_initial_state_is_reported() {
        let m = two_state::<f64>();
        let p = m.transitions().index_axis(ndarray::Axis(0), 0).to_owned();
        let bad = Momdp::stationary(5, p, m.rewards().tensor().clone()).unwrap();
        assert_eq!(bad.validate().index_violations(), 1);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let p = Array3::<f64>::zeros((2, 2, 3));
        let r = Array4::<f64>::zeros((2, 2, 2, 1));
        assert!(Momdp::stationary(0, p, r).is_err());
    }

    #[test]
    fn random_momdp_is_valid_and_deterministic() {
        for seed in 0..5 {
            let m = random_momdp::<f64>(5, 3, 4, 2, seed).unwrap();
            assert!(m.validate().is_valid());
            assert_eq!(m, random_momdp::<f64>(5, 3, 4, 2, seed).unwrap());
        }
        assert_ne!(random_momdp::<f64>(5, 3, 4, 2, 0).unwrap(), random_momdp::<f64>(5, 3, 4, 2, 1).unwrap());
        let big = random_momdp::<f64>(20, 5, 10, 15, 3).unwrap();
        assert!(big.validate().is_valid());
        assert_eq!((big.num_states(), big.num_actions(), big.horizon(), big.num_objectives()), (20, 5, 10, 15));
        assert!(random_momdp::<f64>(0, 1, 1, 1, 0).is_err());
        assert!(random_momdp_per_step::<f32>(4, 2, 3, 2, 9).unwrap().validate().is_valid());
    }

    #[test]
    fn two_state_stay_episode() {
        let m = two_state::<f64>();
        let stay = DeterministicPolicy::constant(2, 2, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = sample_episode(&m, &stay, &Preference::vertex(2, 0), &mut rng).unwrap();
        assert_eq!(t.steps, vec![(0, 0), (0, 0)]);
        assert_eq!(t.scalar_return, 2.0);
    }

    #[test]
    fn episodes_have_length_h_and_zero_reward_gives_zero_return() {
        let m = random_momdp::<f64>(4, 2, 7, 3, 11).unwrap();
        let zero = Momdp::stationary(
            0,
            m.transitions().index_axis(ndarray::Axis(0), 0).to_owned(),
            Array4::zeros((7, 4, 2, 3)),
        )
        .unwrap();
        let pi = DeterministicPolicy::constant(7, 4, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let t = sample_episode(&m, &pi, &Preference::uniform(3), &mut rng).unwrap();
            assert_eq!(t.len(), 7);
            assert_eq!(t.steps[0].0, 0);
            assert!(t.scalar_return >= 0.0 && t.scalar_return <= 7.0);
            let z = sample_episode(&zero, &pi, &Preference::uniform(3), &mut rng).unwrap();
            assert_eq!(z.scalar_return, 0.0);
        }
    }

    #[test]
    fn sampling_is_deterministic_in_seed() {
        let m = random_momdp::<f64>(6, 3, 5, 2, 4).unwrap();
        let pi = DeterministicPolicy::constant(5, 6, 2);
        let w = Preference::uniform(2);
        let a = sample_episode(&m, &pi, &w, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_episode(&m, &pi, &w, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncation_keeps_leading_objectives() {
        let m = random_momdp::<f64>(3, 2, 2, 5, 0).unwrap();
        let t = m.truncate_objectives(2).unwrap();
        assert_eq!(t.num_objectives(), 2);
        assert_eq!(t.rewards().vector(1, 2, 1)[1], m.rewards().vector(1, 2, 1)[1]);
        assert!(m.truncate_objectives(6).is_err());
    }
}
