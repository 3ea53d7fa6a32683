//! Visit counting and empirical transition estimation from interaction
//! history.
//!
//! Every step `(x_h, a_h)` of an episode increments `N(x, a)`. Only the
//! `H - 1` observed transitions `x_h -> x_{h+1}` increment `N(x, a, y)`,
//! so the final pair of an episode is a visit without a successor. Empirical
//! rows are normalized by `Σ_y N(x, a, y)` and are uniform when that sum is
//! zero.

use std::path::Path;

use ndarray::{Array3, Array4};

use crate::error::{MorlError, Result};
use crate::format;
use crate::momdp::{Momdp, TransitionMode, TransitionModel};
use crate::policy::Trajectory;
use crate::scalar::Scalar;

/// `N(x, a)` and `N(x, a, y)`, either pooled over steps (stationary) or
/// kept per step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitCounts {
    mode: TransitionMode,
    horizon: usize,
    /// `(layers, S, A)`
    n_sa: Array3<u64>,
    /// `(layers, S, A, S)`
    n_sas: Array4<u64>,
}

impl VisitCounts {
    pub fn new(mode: TransitionMode, horizon: usize, states: usize, actions: usize) -> Self {
        let layers = mode.layers(horizon);
        Self {
            mode,
            horizon,
            n_sa: Array3::zeros((layers, states, actions)),
            n_sas: Array4::zeros((layers, states, actions, states)),
        }
    }

    /// Counts matching the layout of `m`.
    pub fn for_model<T: Scalar>(m: &Momdp<T>) -> Self {
        Self::new(m.mode(), m.horizon(), m.num_states(), m.num_actions())
    }

    /// Builds counts directly from tables, e.g. synthetic counts in tests.
    ///
    /// `n_sa` must dominate the row sums of `n_sas`.
    pub fn from_tables(mode: TransitionMode, horizon: usize, n_sa: Array3<u64>, n_sas: Array4<u64>) -> Result<Self> {
        let (layers, s, a) = n_sa.dim();
        if layers != mode.layers(horizon) || n_sas.dim() != (layers, s, a, s) {
            return Err(MorlError::InvalidSize(format!(
                "count tables {:?} and {:?} do not fit a {mode} model with H={horizon}",
                n_sa.dim(),
                n_sas.dim()
            )));
        }
        for ((l, x, u), &n) in n_sa.indexed_iter() {
            let moved: u64 = (0..s).map(|y| n_sas[[l, x, u, y]]).sum();
            if moved > n {
                return Err(MorlError::InvalidParameter(format!(
                    "N({x}, {u}) = {n} is below its {moved} recorded transitions"
                )));
            }
        }
        Ok(Self { mode, horizon, n_sa, n_sas })
    }

    pub fn mode(&self) -> TransitionMode {
        self.mode
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.n_sa.dim().1
    }

    pub fn num_actions(&self) -> usize {
        self.n_sa.dim().2
    }

    /// `N(x, a)` as seen by step `h` (the pooled count when stationary).
    pub fn n_sa(&self, h: usize, x: usize, a: usize) -> u64 {
        self.n_sa[[self.mode.layer(h), x, a]]
    }

    pub fn n_sas(&self, h: usize, x: usize, a: usize, y: usize) -> u64 {
        self.n_sas[[self.mode.layer(h), x, a, y]]
    }

    /// Number of observed transitions out of `(x, a)`.
    pub fn n_transitions(&self, h: usize, x: usize, a: usize) -> u64 {
        let l = self.mode.layer(h);
        (0..self.num_states()).map(|y| self.n_sas[[l, x, a, y]]).sum()
    }

    pub fn sa_table(&self) -> &Array3<u64> {
        &self.n_sa
    }

    pub fn sas_table(&self) -> &Array4<u64> {
        &self.n_sas
    }

    /// `Σ_{x,a} N(x, a)` over all layers.
    pub fn total_visits(&self) -> u64 {
        self.n_sa.sum()
    }

    fn check_trajectory(&self, steps: &[(usize, usize)]) -> Result<()> {
        if steps.len() != self.horizon {
            return Err(MorlError::InvalidSize(format!(
                "trajectory has {} steps, expected H = {}",
                steps.len(),
                self.horizon
            )));
        }
        for &(x, a) in steps {
            if x >= self.num_states() {
                return Err(MorlError::IndexOutOfRange {
                    what: "state",
                    index: x,
                    bound: self.num_states(),
                });
            }
            if a >= self.num_actions() {
                return Err(MorlError::IndexOutOfRange {
                    what: "action",
                    index: a,
                    bound: self.num_actions(),
                });
            }
        }
        Ok(())
    }

    /// Adds one episode. Nothing is counted if any index is out of range.
    pub fn update(&mut self, steps: &[(usize, usize)]) -> Result<()> {
        self.check_trajectory(steps)?;
        for (h, &(x, a)) in steps.iter().enumerate() {
            let l = self.mode.layer(h);
            self.n_sa[[l, x, a]] += 1;
            if let Some(&(y, _)) = steps.get(h + 1) {
                self.n_sas[[l, x, a, y]] += 1;
            }
        }
        Ok(())
    }
}

/// Row-stochastic transition estimate built from [`VisitCounts`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalModel<T> {
    mode: TransitionMode,
    /// `(layers, S, A, S)`
    probs: Array4<T>,
}

impl<T: Scalar> EmpiricalModel<T> {
    /// The true transitions of `m`, wrapped as an estimate.
    pub fn from_momdp(m: &Momdp<T>) -> Self {
        Self {
            mode: m.mode(),
            probs: m.transitions().clone(),
        }
    }

    pub fn mode(&self) -> TransitionMode {
        self.mode
    }

    pub fn probabilities(&self) -> &Array4<T> {
        &self.probs
    }

    /// Recomputes the row of `(l, x, a)` from the counts.
    fn refresh_row(&mut self, counts: &VisitCounts, l: usize, x: usize, a: usize) {
        let s = counts.num_states();
        let total: u64 = (0..s).map(|y| counts.n_sas[[l, x, a, y]]).sum();
        if total == 0 {
            let uniform = T::one() / T::of_usize(s);
            for y in 0..s {
                self.probs[[l, x, a, y]] = uniform;
            }
        } else {
            let total = T::of(total as f64);
            for y in 0..s {
                self.probs[[l, x, a, y]] = T::of(counts.n_sas[[l, x, a, y]] as f64) / total;
            }
        }
    }

    /// Recomputes only the rows touched by one episode.
    pub fn refresh_along(&mut self, counts: &VisitCounts, steps: &[(usize, usize)]) {
        for (h, &(x, a)) in steps.iter().enumerate() {
            self.refresh_row(counts, counts.mode.layer(h), x, a);
        }
    }
}

impl<T: Scalar> TransitionModel<T> for EmpiricalModel<T> {
    fn num_states(&self) -> usize {
        self.probs.dim().1
    }

    fn num_actions(&self) -> usize {
        self.probs.dim().2
    }

    fn row(&self, h: usize, s: usize, a: usize) -> &[T] {
        let (_, ns, na, _) = self.probs.dim();
        let base = ((self.mode.layer(h) * ns + s) * na + a) * ns;
        &self.probs.as_slice().expect("standard layout")[base..base + ns]
    }
}

/// `P̂(y | x, a) = N(x, a, y) / Σ_y' N(x, a, y')`, or `1/S` for rows with no
/// observed transition.
pub fn empirical_transitions<T: Scalar>(counts: &VisitCounts) -> EmpiricalModel<T> {
    let (layers, s, a) = counts.n_sa.dim();
    let mut model = EmpiricalModel {
        mode: counts.mode,
        probs: Array4::zeros((layers, s, a, s)),
    };
    for l in 0..layers {
        for x in 0..s {
            for u in 0..a {
                model.refresh_row(counts, l, x, u);
            }
        }
    }
    model
}

/// Recorded episodes together with their visit counts.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryBuffer<T> {
    episodes: Vec<Trajectory<T>>,
    counts: VisitCounts,
}

impl<T: Scalar> HistoryBuffer<T> {
    pub fn new(mode: TransitionMode, horizon: usize, states: usize, actions: usize) -> Self {
        Self {
            episodes: Vec::new(),
            counts: VisitCounts::new(mode, horizon, states, actions),
        }
    }

    pub fn for_model(m: &Momdp<T>) -> Self {
        Self::new(m.mode(), m.horizon(), m.num_states(), m.num_actions())
    }

    pub fn push(&mut self, t: Trajectory<T>) -> Result<()> {
        self.counts.update(&t.steps)?;
        self.episodes.push(t);
        Ok(())
    }

    pub fn episodes(&self) -> &[Trajectory<T>] {
        &self.episodes
    }

    pub fn counts(&self) -> &VisitCounts {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn mode(&self) -> TransitionMode {
        self.counts.mode
    }

    pub fn horizon(&self) -> usize {
        self.counts.horizon
    }

    pub fn num_states(&self) -> usize {
        self.counts.num_states()
    }

    pub fn num_actions(&self) -> usize {
        self.counts.num_actions()
    }

    /// Counts rebuilt from the stored episodes.
    pub fn recount(&self) -> VisitCounts {
        self.prefix_counts(self.episodes.len())
    }

    /// Counts over the first `k` episodes.
    pub fn prefix_counts(&self, k: usize) -> VisitCounts {
        let mut counts = VisitCounts::new(self.mode(), self.horizon(), self.num_states(), self.num_actions());
        for t in &self.episodes[..k.min(self.episodes.len())] {
            counts.update(&t.steps).expect("stored episodes were validated");
        }
        counts
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        format::write_history(self, std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        format::read_history(std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::two_state;
    use crate::momdp::{random_momdp, random_momdp_per_step, sample_path};
    use crate::policy::DeterministicPolicy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const STAY: usize = 0;

    #[test]
    fn stay_trajectory_counts() {
        let mut c = VisitCounts::new(TransitionMode::Stationary, 2, 2, 2);
        c.update(&[(0, STAY), (0, STAY)]).unwrap();
        assert_eq!(c.n_sa(0, 0, STAY), 2);
        assert_eq!(c.n_sas(0, 0, STAY, 0), 1);
        assert_eq!(c.total_visits(), 2);
        c.update(&[(0, STAY), (0, STAY)]).unwrap();
        assert_eq!(c.n_sa(0, 0, STAY), 4);
        assert_eq!(c.n_sas(0, 0, STAY, 0), 2);
    }

    #[test]
    fn bad_index_leaves_counts_untouched() {
        let mut c = VisitCounts::new(TransitionMode::Stationary, 2, 2, 2);
        assert!(c.update(&[(0, 0), (3, 0)]).is_err());
        assert!(c.update(&[(0, 0), (0, 2)]).is_err());
        assert!(c.update(&[(0, 0)]).is_err());
        assert_eq!(c.total_visits(), 0);
    }

    #[test]
    fn empirical_rows() {
        let mut c = VisitCounts::new(TransitionMode::Stationary, 2, 2, 2);
        let p = empirical_transitions::<f64>(&c);
        assert_eq!(p.row(0, 1, 1), &[0.5, 0.5]);
        c.update(&[(0, 1), (1, 0)]).unwrap();
        let p = empirical_transitions::<f64>(&c);
        assert_eq!(p.row(0, 0, 1), &[0.0, 1.0]);
        // The terminal pair (1, 0) is a visit without a transition.
        assert_eq!(c.n_sa(0, 1, 0), 1);
        assert_eq!(p.row(0, 1, 0), &[0.5, 0.5]);
    }

    #[test]
    fn frequency_ratio() {
        let mut c = VisitCounts::new(TransitionMode::Stationary, 4, 3, 1);
        c.update(&[(0, 0), (1, 0), (0, 0), (1, 0)]).unwrap();
        c.update(&[(0, 0), (2, 0), (2, 0), (2, 0)]).unwrap();
        let p = empirical_transitions::<f64>(&c);
        assert_eq!(p.row(0, 0, 0), &[0.0, 2.0 / 3.0, 1.0 / 3.0]);
    }

    #[test]
    fn history_counts_match_recount_and_total() {
        let m = random_momdp::<f64>(5, 3, 6, 2, 21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut hist = HistoryBuffer::for_model(&m);
        for k in 0..40 {
            let pi = DeterministicPolicy::constant(6, 5, k % 3);
            hist.push(sample_path(&m, &pi, &mut rng)).unwrap();
        }
        assert_eq!(hist.counts(), &hist.recount());
        assert_eq!(hist.counts().total_visits(), 40 * 6);
        let p = empirical_transitions::<f64>(hist.counts());
        for x in 0..5 {
            for a in 0..3 {
                let sum: f64 = p.row(0, x, a).iter().sum();
                assert!((sum - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn incremental_refresh_matches_rebuild() {
        let m = random_momdp::<f64>(4, 2, 5, 1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut counts = VisitCounts::for_model(&m);
        let mut model = empirical_transitions::<f64>(&counts);
        for k in 0..25 {
            let t = sample_path(&m, &DeterministicPolicy::constant(5, 4, k % 2), &mut rng);
            counts.update(&t.steps).unwrap();
            model.refresh_along(&counts, &t.steps);
            assert_eq!(model, empirical_transitions(&counts));
        }
    }

    #[test]
    fn per_step_counts_one_visit_per_step() {
        let m = random_momdp_per_step::<f64>(4, 2, 3, 1, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut counts = VisitCounts::for_model(&m);
        for _ in 0..30 {
            let t = sample_path(&m, &DeterministicPolicy::constant(3, 4, 1), &mut rng);
            counts.update(&t.steps).unwrap();
        }
        for h in 0..3 {
            let at_h: u64 = (0..4).flat_map(|x| (0..2).map(move |a| (x, a))).map(|(x, a)| counts.n_sa(h, x, a)).sum();
            assert_eq!(at_h, 30);
        }
    }

    #[test]
    fn exact_model_wraps_true_rows() {
        let m = two_state::<f64>();
        let p = EmpiricalModel::from_momdp(&m);
        assert_eq!(p.row(1, 0, 1), m.row(1, 0, 1));
    }

    #[test]
    fn from_tables_rejects_inconsistent_counts() {
        let n_sa = Array3::from_elem((1, 2, 1), 1u64);
        let n_sas = Array4::from_elem((1, 2, 1, 2), 1u64);
        assert!(VisitCounts::from_tables(TransitionMode::Stationary, 3, n_sa, n_sas).is_err());
    }

    #[test]
    fn save_and_load_round_trip() {
        let m = random_momdp::<f64>(3, 2, 4, 1, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut hist = HistoryBuffer::for_model(&m);
        for _ in 0..5 {
            hist.push(sample_path(&m, &DeterministicPolicy::constant(4, 3, 1), &mut rng)).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("h.txt");
        hist.save(&file).unwrap();
        let back = HistoryBuffer::<f64>::load(&file).unwrap();
        assert_eq!(back.counts(), hist.counts());
        assert_eq!(back.len(), 5);
        assert_eq!(back.episodes()[2].steps, hist.episodes()[2].steps);
    }
}
