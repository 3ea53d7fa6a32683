//! The online protocol: each episode the agent receives a preference, plans,
//! plays one episode and updates its statistics. Regret is measured exactly
//! as `V*_1(x_1; w^k) − V^{π^k}_1(x_1; w^k)` by dynamic programming.

use std::collections::HashMap;
use std::io::{Read, Write};

use ndarray::{Array2, Array3};
use rand::Rng;

use crate::adversary::{AgentView, PreferenceSource};
use crate::dp::{optimal_value, policy_value, ValueTables};
use crate::error::{MorlError, Result};
use crate::model::{empirical_transitions, EmpiricalModel, VisitCounts};
use crate::momdp::{sample_episode, Momdp, Rewards};
use crate::planning::{bernstein_plan, hoeffding_bonus, ucb_q, BonusParams};
use crate::policy::DeterministicPolicy;
use crate::preference::Preference;
use crate::scalar::{argmax, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Hoeffding,
    Bernstein,
}

impl Variant {
    pub fn agent_name(self) -> &'static str {
        match self {
            Variant::Hoeffding => "mo-ucbvi",
            Variant::Bernstein => "mo-ucbvi-bernstein",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord<T> {
    /// 1-based.
    pub episode: usize,
    pub preference: Preference<T>,
    /// Index of the preference among the distinct preferences of the run,
    /// in order of first appearance.
    pub preference_id: usize,
    pub v_star: T,
    pub v_pi: T,
    pub regret_cum: T,
}

impl<T: Scalar> EpisodeRecord<T> {
    pub fn gap(&self) -> T {
        self.v_star - self.v_pi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog<T> {
    pub agent: String,
    pub seed: u64,
    pub records: Vec<EpisodeRecord<T>>,
}

pub const LOG_HEADER: [&str; 7] = ["episode", "agent", "seed", "preference_id", "v_star", "v_pi", "regret_cum"];

impl<T: Scalar> EpisodeLog<T> {
    pub fn new(agent: impl Into<String>, seed: u64) -> Self {
        Self {
            agent: agent.into(),
            seed,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn final_regret(&self) -> T {
        self.records.last().map_or(T::zero(), |r| r.regret_cum)
    }

    /// Cumulative regret after `k` episodes.
    pub fn regret_at(&self, k: usize) -> T {
        if k == 0 {
            T::zero()
        } else {
            self.records[k - 1].regret_cum
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(LOG_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.episode.to_string(),
                self.agent.clone(),
                self.seed.to_string(),
                r.preference_id.to_string(),
                r.v_star.as_f64().to_string(),
                r.v_pi.as_f64().to_string(),
                r.regret_cum.as_f64().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One parsed line of an episode-log CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub episode: usize,
    pub agent: String,
    pub seed: u64,
    pub preference_id: usize,
    pub v_star: f64,
    pub v_pi: f64,
    pub regret_cum: f64,
}

/// Parses an episode-log CSV, checking the header.
pub fn read_log_csv<R: Read>(input: R) -> Result<Vec<LogRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(LOG_HEADER) {
        return Err(MorlError::Parse {
            line: 1,
            message: format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |j: usize| rec.get(j).unwrap_or("");
        let bad = |j: usize| MorlError::Parse {
            line,
            message: format!("bad `{}` value `{}`", LOG_HEADER[j], field(j)),
        };
        rows.push(LogRow {
            episode: field(0).parse().map_err(|_| bad(0))?,
            agent: field(1).to_string(),
            seed: field(2).parse().map_err(|_| bad(2))?,
            preference_id: field(3).parse().map_err(|_| bad(3))?,
            v_star: field(4).parse().map_err(|_| bad(4))?,
            v_pi: field(5).parse().map_err(|_| bad(5))?,
            regret_cum: field(6).parse().map_err(|_| bad(6))?,
        });
    }
    Ok(rows)
}

/// Partial sums of the per-episode gaps.
pub fn cumulative_regret<T: Scalar>(log: &EpisodeLog<T>) -> Vec<T> {
    log.records
        .iter()
        .scan(T::zero(), |acc, r| {
            *acc += r.gap();
            Some(*acc)
        })
        .collect()
}

/// Appends exact per-episode records, caching `V*` per distinct preference.
struct RegretBook<'a, T> {
    m: &'a Momdp<T>,
    seen: HashMap<Vec<u64>, (usize, T)>,
    log: EpisodeLog<T>,
}

impl<'a, T: Scalar> RegretBook<'a, T> {
    fn new(m: &'a Momdp<T>, agent: &str) -> Self {
        Self {
            m,
            seen: HashMap::new(),
            log: EpisodeLog::new(agent, 0),
        }
    }

    fn record(&mut self, w: &Preference<T>, policy: &DeterministicPolicy) -> Result<()> {
        let x1 = self.m.initial_state();
        let next_id = self.seen.len();
        let (preference_id, v_star) = match self.seen.get(&w.key()) {
            Some(&entry) => entry,
            None => {
                let entry = (next_id, optimal_value(self.m, w)?.0.root(x1));
                self.seen.insert(w.key(), entry);
                entry
            }
        };
        let v_pi = policy_value(self.m, policy, w)?.root(x1);
        let regret_cum = self.log.final_regret() + (v_star - v_pi);
        self.log.records.push(EpisodeRecord {
            episode: self.log.len() + 1,
            preference: w.clone(),
            preference_id,
            v_star,
            v_pi,
            regret_cum,
        });
        Ok(())
    }
}

/// What the agent computed for one preference.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan<T> {
    pub policy: DeterministicPolicy,
    pub upper: ValueTables<T>,
    /// Pessimistic values; only the Bernstein variant computes them.
    pub lower: Option<ValueTables<T>>,
}

/// MO-UCBVI state: visit counts, the empirical model and cached Hoeffding
/// bonuses. Rewards are known; transitions are learned.
#[derive(Debug, Clone)]
pub struct OnlineAgent<T> {
    variant: Variant,
    params: BonusParams<T>,
    rewards: Rewards<T>,
    counts: VisitCounts,
    model: EmpiricalModel<T>,
    bonus: Array3<T>,
}

impl<T: Scalar> OnlineAgent<T> {
    /// Uses only the sizes, transition mode and rewards of `m`.
    pub fn new(m: &Momdp<T>, variant: Variant, params: BonusParams<T>) -> Result<Self> {
        params.validate()?;
        if params.horizon != m.horizon() || params.states != m.num_states() || params.actions != m.num_actions() {
            return Err(MorlError::InvalidParameter(format!(
                "bonus parameters are for S={}, A={}, H={}, the model has S={}, A={}, H={}",
                params.states,
                params.actions,
                params.horizon,
                m.num_states(),
                m.num_actions(),
                m.horizon()
            )));
        }
        let counts = VisitCounts::for_model(m);
        let model = empirical_transitions(&counts);
        let bonus = Array3::from_elem((m.horizon(), m.num_states(), m.num_actions()), hoeffding_bonus(0, &params));
        Ok(Self {
            variant,
            params,
            rewards: m.rewards().clone(),
            counts,
            model,
            bonus,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn counts(&self) -> &VisitCounts {
        &self.counts
    }

    pub fn model(&self) -> &EmpiricalModel<T> {
        &self.model
    }

    pub fn plan(&self, w: &Preference<T>) -> Result<Plan<T>> {
        match self.variant {
            Variant::Hoeffding => {
                let (upper, policy) = ucb_q(&self.model, &self.rewards, w, &self.bonus)?;
                Ok(Plan {
                    policy,
                    upper,
                    lower: None,
                })
            }
            Variant::Bernstein => {
                let t = bernstein_plan(&self.model, &self.rewards, w, &self.counts, &self.params)?;
                Ok(Plan {
                    policy: t.policy,
                    upper: t.upper,
                    lower: Some(t.lower),
                })
            }
        }
    }

    /// Adds one episode to the statistics.
    pub fn observe(&mut self, steps: &[(usize, usize)]) -> Result<()> {
        self.counts.update(steps)?;
        self.model.refresh_along(&self.counts, steps);
        let layers_per_step = self.counts.mode().layers(self.counts.horizon()) > 1;
        for (h, &(x, a)) in steps.iter().enumerate() {
            let b = hoeffding_bonus(self.counts.n_sa(h, x, a), &self.params);
            if layers_per_step {
                self.bonus[[h, x, a]] = b;
            } else {
                for hh in 0..self.counts.horizon() {
                    self.bonus[[hh, x, a]] = b;
                }
            }
        }
        Ok(())
    }
}

impl<T: Scalar> AgentView<T> for OnlineAgent<T> {
    fn planned_policy(&self, w: &Preference<T>) -> Result<DeterministicPolicy> {
        Ok(self.plan(w)?.policy)
    }
}

fn check_objectives<T: Scalar>(m: &Momdp<T>, w: &Preference<T>) -> Result<()> {
    if w.dim() != m.num_objectives() {
        return Err(MorlError::DimensionMismatch {
            expected: m.num_objectives(),
            actual: w.dim(),
        });
    }
    Ok(())
}

/// Runs MO-UCBVI for `k` episodes against `src`.
pub fn run_online<T: Scalar, R: Rng + ?Sized>(
    m: &Momdp<T>,
    src: &mut PreferenceSource<T>,
    k: usize,
    variant: Variant,
    params: &BonusParams<T>,
    rng: &mut R,
) -> Result<EpisodeLog<T>> {
    m.ensure_valid()?;
    let mut agent = OnlineAgent::new(m, variant, params.clone())?;
    let mut book = RegretBook::new(m, variant.agent_name());
    for _ in 0..k {
        let w = src.next_preference(Some(&agent))?;
        check_objectives(m, &w)?;
        let policy = agent.plan(&w)?.policy;
        let t = sample_episode(m, &policy, &w, rng)?;
        agent.observe(&t.steps)?;
        book.record(&w, &policy)?;
    }
    Ok(book.log)
}

/// The policy maximizing `Σ_k V^π_1(x_1; w^k)`, i.e. the optimal policy for
/// the mean preference, since `V^π_1` is linear in `w`.
pub fn best_in_hindsight_policy<T: Scalar>(m: &Momdp<T>, prefs: &[Preference<T>]) -> Result<DeterministicPolicy> {
    let mean = Preference::mean(prefs)?;
    Ok(optimal_value(m, &mean)?.1)
}

/// Plays the best-in-hindsight policy against `k` preferences drawn from an
/// oblivious source.
pub fn run_best_in_hindsight<T: Scalar>(m: &Momdp<T>, src: &mut PreferenceSource<T>, k: usize) -> Result<EpisodeLog<T>> {
    m.ensure_valid()?;
    let prefs = src.draw(k)?;
    let mut book = RegretBook::new(m, "best-in-hindsight");
    if prefs.is_empty() {
        return Ok(book.log);
    }
    let policy = best_in_hindsight_policy(m, &prefs)?;
    for w in &prefs {
        check_objectives(m, w)?;
        book.record(w, &policy)?;
    }
    Ok(book.log)
}

/// Optimistic Q-learning settings.
#[derive(Debug, Clone, PartialEq)]
pub struct QLearningParams<T> {
    /// Bonus constant `c_q`; the bonus after `t` visits is
    /// `c_q · sqrt(H³ ι / t)`.
    pub c_q: T,
    pub delta: T,
}

impl<T: Scalar> QLearningParams<T> {
    /// `c_q = 0.1 · scale`.
    pub fn with_scale(scale: T, delta: T) -> Self {
        Self {
            c_q: T::of(0.1) * scale,
            delta,
        }
    }
}

/// Tabular optimistic Q-learning with step size `(H + 1)/(H + t)` on the
/// current episode's scalarized reward. Counts and estimates are kept per
/// step; `ι = ln(S A H K / δ)`.
pub fn run_q_learning<T: Scalar, R: Rng + ?Sized>(
    m: &Momdp<T>,
    src: &mut PreferenceSource<T>,
    k: usize,
    params: &QLearningParams<T>,
    rng: &mut R,
) -> Result<EpisodeLog<T>> {
    m.ensure_valid()?;
    if !(params.c_q >= T::zero()) || !(params.delta > T::zero() && params.delta < T::one()) {
        return Err(MorlError::InvalidParameter("need c_q >= 0 and delta in (0, 1)".into()));
    }
    let (s, a, horizon) = (m.num_states(), m.num_actions(), m.horizon());
    let h_t = T::of_usize(horizon);
    let iota = T::of(((s * a * horizon * k.max(1)) as f64 / params.delta.as_f64()).ln());
    let mut q = Array3::from_elem((horizon, s, a), h_t);
    let mut v = Array2::from_elem((horizon + 1, s), h_t);
    v.row_mut(horizon).fill(T::zero());
    let mut visits = Array3::<u64>::zeros((horizon, s, a));
    let mut book = RegretBook::new(m, "q-learning");
    for _ in 0..k {
        let w = src.next_preference(None)?;
        check_objectives(m, &w)?;
        let policy = DeterministicPolicy::from_table(Array2::from_shape_fn((horizon, s), |(h, x)| {
            argmax((0..a).map(|u| q[[h, x, u]])).expect("A >= 1").0
        }));
        let traj = sample_episode(m, &policy, &w, rng)?;
        for (h, &(x, u)) in traj.steps.iter().enumerate() {
            visits[[h, x, u]] += 1;
            let t = T::of(visits[[h, x, u]] as f64);
            let alpha = (h_t + T::one()) / (h_t + t);
            let bonus = params.c_q * (h_t * h_t * h_t * iota / t).sqrt();
            let r = crate::preference::scalarize(m.rewards().vector(h, x, u).as_slice().expect("contiguous"), &w)?;
            let next = match traj.steps.get(h + 1) {
                Some(&(y, _)) => v[[h + 1, y]],
                None => T::zero(),
            };
            q[[h, x, u]] = (T::one() - alpha) * q[[h, x, u]] + alpha * (r + next + bonus);
            let best = (0..a).map(|b| q[[h, x, b]]).fold(T::neg_infinity(), T::max);
            v[[h, x]] = best.min(h_t);
        }
        book.record(&w, &policy)?;
    }
    Ok(book.log)
}
