//! Small hand-checkable instances used across tests and examples.

use ndarray::{Array3, Array4};

use crate::momdp::Momdp;
use crate::scalar::Scalar;

/// Two states `{0, 1}`, actions `{stay = 0, go = 1}`, `H = 2`, `d = 2`.
///
/// From state 0, `stay` remains in 0 and `go` moves to 1; state 1 is
/// absorbing. Rewards ignore the action: `r(0) = (1, 0)`, `r(1) = (0, 1)`.
pub fn two_state<T: Scalar>() -> Momdp<T> {
    let one = T::one();
    let mut p = Array3::zeros((2, 2, 2));
    p[[0, 0, 0]] = one;
    p[[0, 1, 1]] = one;
    p[[1, 0, 1]] = one;
    p[[1, 1, 1]] = one;
    let mut r = Array4::zeros((2, 2, 2, 2));
    for h in 0..2 {
        for a in 0..2 {
            r[[h, 0, a, 0]] = one;
            r[[h, 1, a, 1]] = one;
        }
    }
    Momdp::stationary(0, p, r).expect("fixture shapes agree")
}

/// Six states, three actions, `H = 5`, `d = 3`; the preference-free
/// exploration fixture. Stationary random dynamics from a fixed seed.
pub fn pfe_fixture<T: Scalar>(seed: u64) -> Momdp<T> {
    crate::momdp::random_momdp(6, 3, 5, 3, seed).expect("valid sizes")
}
