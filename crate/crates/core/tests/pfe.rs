use std::collections::VecDeque;

use morl::dp::{mixture_value, optimal_value};
use morl::fixtures::pfe_fixture;
use morl::hard::basic_instance;
use morl::model::VisitCounts;
use morl::momdp::TransitionMode;
use morl::pfe::{explore, pac_error, plan, plan_from_counts, PfeParams};
use morl::planning::BonusParams;
use morl::preference::vertices_and_lattice;
use morl::{Momdp, Preference, TransitionModel};
use ndarray::{Array3, Array4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn params(m: &Momdp<f64>, k: usize, scale: f64) -> PfeParams<f64> {
    PfeParams::new(
        BonusParams::new(m.num_objectives(), m.num_states(), m.num_actions(), m.horizon(), k, 0.1)
            .unwrap()
            .with_scale(scale)
            .unwrap(),
    )
}

/// `(h, x, a)` triples reachable from the initial state, by breadth-first
/// search over positive-probability transitions.
fn reachable(m: &Momdp<f64>) -> Vec<(usize, usize)> {
    let mut seen = vec![vec![false; m.num_states()]; m.horizon()];
    let mut queue = VecDeque::from([(0usize, m.initial_state())]);
    seen[0][m.initial_state()] = true;
    let mut pairs = Vec::new();
    while let Some((h, x)) = queue.pop_front() {
        for a in 0..m.num_actions() {
            pairs.push((x, a));
            if h + 1 < m.horizon() {
                for (y, p) in m.row(h, x, a).iter().enumerate() {
                    if *p > 0.0 && !seen[h + 1][y] {
                        seen[h + 1][y] = true;
                        queue.push_back((h + 1, y));
                    }
                }
            }
        }
    }
    pairs.sort();
    pairs.dedup();
    pairs
}

#[test]
fn exploration_covers_every_reachable_pair() {
    let m = pfe_fixture::<f64>(0);
    let e = explore(&m, 2000, &params(&m, 2000, 0.1), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let pairs = reachable(&m);
    assert_eq!(pairs.len(), 18);
    for (x, a) in pairs {
        assert!(e.history.counts().n_sa(0, x, a) > 0, "({x}, {a}) unvisited");
    }
}

#[test]
fn exploration_value_decreases() {
    let m = pfe_fixture::<f64>(0);
    let k = 3000;
    let e = explore(&m, k, &params(&m, k, 0.1), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let tenth = k / 10;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let first = mean(&e.root_values[..tenth]);
    let last = mean(&e.root_values[k - tenth..]);
    assert!(last <= first, "{first} -> {last}");
}

fn exact_counts(m: &Momdp<f64>, n: u64) -> VisitCounts {
    let (s, a) = (m.num_states(), m.num_actions());
    let mut n_sas = Array4::zeros((1, s, a, s));
    for x in 0..s {
        for u in 0..a {
            for y in 0..s {
                n_sas[[0, x, u, y]] = (m.row(0, x, u)[y] * n as f64).floor() as u64;
            }
        }
    }
    VisitCounts::from_tables(TransitionMode::Stationary, m.horizon(), Array3::from_elem((1, s, a), n), n_sas).unwrap()
}

#[test]
fn planning_on_exact_counts_is_optimal() {
    let m = pfe_fixture::<f64>(0);
    let p = params(&m, 1000, 0.1);
    let counts = exact_counts(&m, 1_000_000_000_000);
    for w in vertices_and_lattice::<f64>(3, 4) {
        let pi = plan_from_counts(&counts, m.rewards(), &w, &p).unwrap();
        let mix = morl::MixturePolicy::uniform(vec![pi]).unwrap();
        let err = optimal_value(&m, &w).unwrap().0.root(0) - mixture_value(&m, &mix, &w).unwrap();
        assert!(err <= 1e-6, "{err}");
    }
}

#[test]
fn mixture_never_beats_the_optimum() {
    let m = pfe_fixture::<f64>(1);
    let p = params(&m, 300, 0.1);
    let e = explore(&m, 300, &p, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    for w in vertices_and_lattice::<f64>(3, 4) {
        let mix = plan(&e.history, m.rewards(), &w, &p).unwrap();
        assert_eq!(mix.len(), 300);
        assert!(mixture_value(&m, &mix, &w).unwrap() <= optimal_value(&m, &w).unwrap().0.root(0) + 1e-9);
    }
    let vertices = [Preference::vertex(3, 0), Preference::vertex(3, 1), Preference::vertex(3, 2)];
    let err = pac_error(&m, &e.history, &p, &vertices).unwrap();
    assert!(err >= 0.0 && err <= 5.0);
}

#[test]
fn plan_reads_history_from_disk() {
    let m = pfe_fixture::<f64>(0);
    let p = params(&m, 40, 0.1);
    let e = explore(&m, 40, &p, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("history.csv");
    e.history.save(&file).unwrap();
    let back = morl::model::HistoryBuffer::<f64>::load(&file).unwrap();
    let w = Preference::uniform(3);
    assert_eq!(plan(&back, m.rewards(), &w, &p).unwrap(), plan(&e.history, m.rewards(), &w, &p).unwrap());
}

#[test]
fn basic_instance_is_hard_with_few_episodes() {
    let eps = 0.2;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let inst = loop {
        let inst = basic_instance::<f64, _>(2, 2, eps, &mut rng).unwrap();
        if inst.good_action != 0 {
            break inst;
        }
    };
    let m = &inst.momdp;
    let w = Preference::vertex(2, inst.boosted);
    let error_at = |k: usize| {
        let p = params(m, k, 0.1);
        let e = explore(m, k, &p, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        pac_error(m, &e.history, &p, std::slice::from_ref(&w)).unwrap()
    };
    let small = error_at(20);
    let large = error_at(20_000);
    assert!(small > eps / 12.0, "{small}");
    assert!(large < eps / 12.0, "{large}");
}
