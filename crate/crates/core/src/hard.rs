//! Lower-bound constructions: Johnson–Lindenstrauss sign matrices, the
//! two-step basic hard instance and the binary-tree full hard instance.

use ndarray::{Array2, Array3, Array4};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{MorlError, Result};
use crate::momdp::Momdp;
use crate::policy::DeterministicPolicy;
use crate::preference::Preference;
use crate::scalar::Scalar;

/// A `d × n` matrix with entries `±1/√d` and its achieved
/// `max_i ‖AᵀA e_i − e_i‖_∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct JlMatrix<T> {
    pub a: Array2<T>,
    pub achieved_eps: T,
    pub target_eps: T,
    /// Number of draws used, including the accepted one.
    pub attempts: usize,
}

/// `ceil(200 ln(n + 1) / ε₁²)`.
pub fn lemma_dimension(n: usize, eps1: f64) -> usize {
    (200.0 * ((n + 1) as f64).ln() / (eps1 * eps1)).ceil() as usize
}

/// Exact `max_i ‖AᵀA e_i − e_i‖_∞` and whether it is at most `ε₁`.
pub fn verify_jl<T: Scalar>(a: &Array2<T>, eps1: T) -> (T, bool) {
    let n = a.ncols();
    let mut worst = T::zero();
    for i in 0..n {
        let ci = a.column(i);
        for j in i..n {
            let g = ci.iter().zip(a.column(j).iter()).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max((g - target).abs());
        }
    }
    (worst, worst <= eps1)
}

/// Gram deviation of a sign matrix, computed in integers so the diagonal is
/// exactly one.
fn sign_gram_eps(signs: &Array2<i8>) -> f64 {
    let (d, n) = signs.dim();
    let mut worst = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let g: i64 = (0..d).map(|k| (signs[[k, i]] * signs[[k, j]]) as i64).sum();
            worst = worst.max(g.abs());
        }
    }
    worst as f64 / d as f64
}

fn check_jl_args(n: usize, eps1: f64, d: usize) -> Result<()> {
    if n == 0 || d == 0 {
        return Err(MorlError::InvalidSize(format!("need n >= 1 and d >= 1, got n={n}, d={d}")));
    }
    if !(eps1 > 0.0 && eps1 < 1.0) {
        return Err(MorlError::InvalidParameter(format!("eps1 must lie in (0, 1), got {eps1}")));
    }
    Ok(())
}

fn draw_until<T: Scalar, R: Rng + ?Sized>(
    d: usize,
    eps1: f64,
    max_retries: usize,
    rng: &mut R,
    mut draw: impl FnMut(&mut R) -> Array2<i8>,
) -> Result<JlMatrix<T>> {
    let mut best = f64::INFINITY;
    for attempt in 1..=max_retries.max(1) {
        let signs = draw(rng);
        let eps = sign_gram_eps(&signs);
        if eps <= eps1 {
            let unit = T::one() / T::of_usize(d).sqrt();
            return Ok(JlMatrix {
                a: signs.mapv(|s| if s > 0 { unit } else { -unit }),
                achieved_eps: T::of(eps),
                target_eps: T::of(eps1),
                attempts: attempt,
            });
        }
        best = best.min(eps);
    }
    Err(MorlError::RetriesExhausted {
        retries: max_retries,
        best_eps: best,
    })
}

/// Draws i.i.d. Rademacher matrices until the Gram check passes.
///
/// `dim` defaults to [`lemma_dimension`].
pub fn jl_matrix<T: Scalar, R: Rng + ?Sized>(
    n: usize,
    eps1: f64,
    dim: Option<usize>,
    rng: &mut R,
    max_retries: usize,
) -> Result<JlMatrix<T>> {
    let d = dim.unwrap_or_else(|| lemma_dimension(n, eps1));
    check_jl_args(n, eps1, d)?;
    draw_until(d, eps1, max_retries, rng, |rng| {
        Array2::from_shape_simple_fn((d, n), || if rng.random::<bool>() { 1 } else { -1 })
    })
}

/// Like [`jl_matrix`] but every column has exactly `d/2` positive entries,
/// so columns sum to zero. `d` must be even.
pub fn balanced_jl_matrix<T: Scalar, R: Rng + ?Sized>(
    n: usize,
    eps1: f64,
    dim: Option<usize>,
    rng: &mut R,
    max_retries: usize,
) -> Result<JlMatrix<T>> {
    let d = dim.unwrap_or_else(|| lemma_dimension(n, eps1).next_multiple_of(2));
    check_jl_args(n, eps1, d)?;
    if !d.is_multiple_of(2) {
        return Err(MorlError::InvalidSize(format!("balanced columns need an even d, got {d}")));
    }
    draw_until(d, eps1, max_retries, rng, |rng| {
        let mut signs = Array2::zeros((d, n));
        let mut col: Vec<i8> = (0..d).map(|k| if k < d / 2 { 1 } else { -1 }).collect();
        for j in 0..n {
            col.shuffle(rng);
            for (k, &s) in col.iter().enumerate() {
                signs[[k, j]] = s;
            }
        }
        signs
    })
}

/// Transition rows into `d` absorbing states for `actions` actions: all
/// uniform except one good action whose row puts `(1 + ε)/d` on the boosted
/// coordinate and `1/d − ε/(d(d−1))` elsewhere.
fn perturbed_rows<R: Rng + ?Sized>(d: usize, actions: usize, eps: f64, rng: &mut R) -> (Vec<Vec<f64>>, usize, usize) {
    let good = rng.random_range(0..actions);
    let boosted = rng.random_range(0..d);
    let base = 1.0 / d as f64;
    let rows = (0..actions)
        .map(|a| {
            if a != good {
                return vec![base; d];
            }
            (0..d)
                .map(|i| {
                    if i == boosted {
                        base + eps / d as f64
                    } else {
                        base - eps / (d * (d - 1)) as f64
                    }
                })
                .collect()
        })
        .collect();
    (rows, good, boosted)
}

fn check_instance_args(d_obj: usize, actions: usize, eps: f64) -> Result<()> {
    if d_obj < 2 || actions == 0 {
        return Err(MorlError::InvalidSize(format!(
            "need d >= 2 and A >= 1, got d={d_obj}, A={actions}"
        )));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(MorlError::InvalidParameter(format!("eps must lie in [0, 1], got {eps}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasicInstance<T> {
    pub momdp: Momdp<T>,
    pub good_action: usize,
    /// Objective (and absorbing state `1 + boosted`) that the good action
    /// favours.
    pub boosted: usize,
}

/// State 0 is the start; states `1..=d` are absorbing and state `i` pays
/// reward `e_{i−1}`. `H = 2`.
pub fn basic_instance<T: Scalar, R: Rng + ?Sized>(d_obj: usize, actions: usize, eps: f64, rng: &mut R) -> Result<BasicInstance<T>> {
    check_instance_args(d_obj, actions, eps)?;
    let s = d_obj + 1;
    let (rows, good_action, boosted) = perturbed_rows(d_obj, actions, eps, rng);
    let mut p = Array3::zeros((s, actions, s));
    for (a, row) in rows.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            p[[0, a, 1 + i]] = T::of(v);
        }
    }
    let mut r = Array4::zeros((2, s, actions, d_obj));
    for i in 0..d_obj {
        for a in 0..actions {
            p[[1 + i, a, 1 + i]] = T::one();
            for h in 0..2 {
                r[[h, 1 + i, a, i]] = T::one();
            }
        }
    }
    Ok(BasicInstance {
        momdp: Momdp::stationary(0, p, r)?.checked()?,
        good_action,
        boosted,
    })
}

/// State index of tree node `(s, ℓ)`.
pub fn tree_state(s: usize, level: usize) -> usize {
    (1 << level) - 1 + s
}

/// The binary-tree instance with its preference basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FullInstance<T> {
    pub momdp: Momdp<T>,
    pub jl: JlMatrix<T>,
    /// One preference per leaf: `(½ w_s, ½ v)` with `w_s` the simplex image
    /// of `A e_s` and `v` uniform.
    pub basis: Vec<Preference<T>>,
    pub leaves: usize,
    pub good_actions: Vec<usize>,
    pub boosted: Vec<usize>,
    /// The scalarized reward at leaf `j` under `basis[s]` equals
    /// `reward_offset + reward_scale · (AᵀA)_{sj}`.
    pub reward_scale: T,
    pub reward_offset: T,
}

impl<T: Scalar> FullInstance<T> {
    pub fn leaf_state(&self, s: usize) -> usize {
        tree_state(s, self.levels())
    }

    pub fn absorbing_state(&self, i: usize) -> usize {
        2 * self.leaves - 1 + i
    }

    pub fn levels(&self) -> usize {
        self.leaves.trailing_zeros() as usize
    }

    /// Deterministic policy that walks to leaf `s` (bit `ℓ` of `s` picks the
    /// branch at level `ℓ`) and plays action 0 afterwards.
    pub fn leaf_path_policy(&self, s: usize) -> DeterministicPolicy {
        let levels = self.levels();
        let mut t = Array2::zeros((self.momdp.horizon(), self.momdp.num_states()));
        for h in 0..self.momdp.horizon() {
            for level in 0..levels {
                let bit = (s >> level) & 1;
                for node in 0..(1 << level) {
                    t[[h, tree_state(node, level)]] = bit;
                }
            }
        }
        DeterministicPolicy::from_table(t)
    }

    /// `(r − offset) / scale`, mapping a scalarized leaf reward back to the
    /// Gram entry it encodes.
    pub fn decode(&self, reward: T) -> T {
        (reward - self.reward_offset) / self.reward_scale
    }
}

/// Builds the full hard instance with `n` leaves (a power of two).
///
/// The reward has `2 d_obj` objectives. On leaf `j`, objective `k < d_obj`
/// pays `(√d A_{kj} + 1)/2 ∈ {0, 1}`; absorbing state `i` pays objective
/// `d_obj + i`. `A` has balanced columns so the first block of each basis
/// preference lies on the simplex. `d_obj` defaults to the lemma dimension
/// rounded up to even.
#[allow(clippy::too_many_arguments)]
pub fn full_instance<T: Scalar, R: Rng + ?Sized>(
    n: usize,
    d_obj: Option<usize>,
    actions: usize,
    horizon: usize,
    eps: f64,
    eps1: f64,
    rng: &mut R,
    max_retries: usize,
) -> Result<FullInstance<T>> {
    if n == 0 || !n.is_power_of_two() {
        return Err(MorlError::InvalidSize(format!("leaf count must be a power of two, got {n}")));
    }
    if actions < 2 {
        return Err(MorlError::InvalidSize("the tree needs at least two actions".into()));
    }
    let levels = n.trailing_zeros() as usize;
    if horizon < 2 * (levels + 1) {
        return Err(MorlError::InvalidParameter(format!(
            "H must be at least {} for {n} leaves, got {horizon}",
            2 * (levels + 1)
        )));
    }
    let jl = balanced_jl_matrix::<T, R>(n, eps1, d_obj, rng, max_retries)?;
    let d = jl.a.nrows();
    check_instance_args(d, actions, eps)?;
    let states = 2 * n - 1 + d;
    let leaf = |s: usize| tree_state(s, levels);
    let absorbing = |i: usize| 2 * n - 1 + i;

    let mut p = Array3::zeros((states, actions, states));
    for level in 0..levels {
        for s in 0..(1 << level) {
            let x = tree_state(s, level);
            p[[x, 0, tree_state(s, level + 1)]] = T::one();
            for a in 1..actions {
                p[[x, a, tree_state((1 << level) + s, level + 1)]] = T::one();
            }
        }
    }
    let mut good_actions = Vec::with_capacity(n);
    let mut boosted = Vec::with_capacity(n);
    for s in 0..n {
        let (rows, good, boost) = perturbed_rows(d, actions, eps, rng);
        good_actions.push(good);
        boosted.push(boost);
        for (a, row) in rows.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                p[[leaf(s), a, absorbing(i)]] = T::of(v);
            }
        }
    }
    for i in 0..d {
        for a in 0..actions {
            p[[absorbing(i), a, absorbing(i)]] = T::one();
        }
    }

    let sqrt_d = T::of_usize(d).sqrt();
    let half = T::of(0.5);
    let mut r = Array4::zeros((horizon, states, actions, 2 * d));
    for h in 0..horizon {
        for a in 0..actions {
            for j in 0..n {
                for k in 0..d {
                    r[[h, leaf(j), a, k]] = (sqrt_d * jl.a[[k, j]] + T::one()) * half;
                }
            }
            for i in 0..d {
                r[[h, absorbing(i), a, d + i]] = T::one();
            }
        }
    }
    let momdp = Momdp::stationary(0, p, r)?.checked()?;

    let uniform = T::one() / T::of_usize(d);
    let basis = (0..n)
        .map(|s| {
            let mut w: Vec<T> = (0..d).map(|k| half * (jl.a[[k, s]] + T::one() / sqrt_d) / sqrt_d).collect();
            w.extend(std::iter::repeat_n(half * uniform, d));
            Preference::new(w)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FullInstance {
        momdp,
        jl,
        basis,
        leaves: n,
        good_actions,
        boosted,
        reward_scale: T::of(0.25),
        reward_offset: T::of(0.25),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::momdp::TransitionModel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn verify_edge_cases() {
        let id = Array2::<f64>::eye(4);
        assert_eq!(verify_jl(&id, 0.1), (0.0, true));
        let zero = Array2::<f64>::zeros((3, 4));
        assert_eq!(verify_jl(&zero, 0.5), (1.0, false));
    }

    #[test]
    fn single_column_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = jl_matrix::<f64, _>(1, 0.5, None, &mut rng, 1).unwrap();
        assert_eq!(m.achieved_eps, 0.0);
        assert_eq!(m.a.dim(), (lemma_dimension(1, 0.5), 1));
    }

    #[test]
    fn lemma_dimension_value() {
        assert_eq!(lemma_dimension(32, 0.25), (3200.0 * 33f64.ln()).ceil() as usize);
    }

    #[test]
    fn small_dimension_exhausts_retries() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = jl_matrix::<f64, _>(16, 0.05, Some(4), &mut rng, 3).unwrap_err();
        assert!(matches!(err, MorlError::RetriesExhausted { retries: 3, .. }));
        assert!(jl_matrix::<f64, _>(0, 0.5, None, &mut rng, 3).is_err());
        assert!(balanced_jl_matrix::<f64, _>(2, 0.5, Some(7), &mut rng, 3).is_err());
    }

    #[test]
    fn balanced_columns_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = balanced_jl_matrix::<f64, _>(4, 0.3, Some(200), &mut rng, 20).unwrap();
        for j in 0..4 {
            assert!(m.a.column(j).sum().abs() < 1e-12);
        }
        let (eps, ok) = verify_jl(&m.a, 0.3);
        assert!(ok && (eps - m.achieved_eps).abs() < 1e-12);
    }

    #[test]
    fn basic_instance_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = basic_instance::<f64, _>(4, 3, 0.2, &mut rng).unwrap();
        let m = &inst.momdp;
        assert_eq!((m.num_states(), m.horizon(), m.num_objectives()), (5, 2, 4));
        let mut worst = 0.0f64;
        for a in 0..3 {
            let row = m.row(0, 0, a);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(row[0], 0.0);
            let dev = row[1..].iter().map(|p| (p - 0.25).abs()).fold(0.0, f64::max);
            if a == inst.good_action {
                assert!((dev - 0.05).abs() < 1e-12);
                assert!((row[1 + inst.boosted] - 0.3).abs() < 1e-12);
            } else {
                assert_eq!(dev, 0.0);
            }
            worst = worst.max(dev);
        }
        assert!(worst <= 0.2 / 4.0 + 1e-12);
        let flat = basic_instance::<f64, _>(3, 2, 0.0, &mut rng).unwrap();
        for a in 0..2 {
            assert!(flat.momdp.row(0, 0, a)[1..].iter().all(|p| *p == 1.0 / 3.0));
        }
        assert!(basic_instance::<f64, _>(1, 2, 0.1, &mut rng).is_err());
        assert!(basic_instance::<f64, _>(3, 2, 1.5, &mut rng).is_err());
    }

    #[test]
    fn full_instance_argument_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(full_instance::<f64, _>(3, Some(64), 2, 6, 0.1, 0.5, &mut rng, 5).is_err());
        assert!(full_instance::<f64, _>(4, Some(64), 2, 5, 0.1, 0.5, &mut rng, 5).is_err());
        assert!(full_instance::<f64, _>(4, Some(64), 1, 6, 0.1, 0.5, &mut rng, 5).is_err());
    }
}
