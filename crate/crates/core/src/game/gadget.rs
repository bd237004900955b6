//! The Matching Pennies variant that forces a copy player to mix exactly like
//! a main player.
//!
//! The copy player wants to match the auxiliary player. The auxiliary player
//! is paid for playing 1 against (main 1, copy 0) and for playing 0 against
//! (main 0, copy 1), so its gain from playing 1 is `s_main - s_copy`. In
//! every equilibrium the two strategies coincide.

use num_traits::{One, Zero};

use super::PlayerPayoff;
use crate::rational::Rational;

/// `(u_copy, u_aux)` for the given actions.
pub fn gadget_payoffs(a_main: bool, a_copy: bool, a_aux: bool) -> (Rational, Rational) {
    let (copy, aux) = match (a_main, a_copy, a_aux) {
        (false, false, false) => (1, 0),
        (false, false, true) => (0, 0),
        (false, true, false) => (0, 1),
        (false, true, true) => (1, 0),
        (true, false, false) => (1, 0),
        (true, false, true) => (0, 1),
        (true, true, false) => (0, 0),
        (true, true, true) => (1, 0),
    };
    let r = |v: i32| {
        if v == 1 {
            Rational::one()
        } else {
            Rational::zero()
        }
    };
    (r(copy), r(aux))
}

/// Player indices of one gadget instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GadgetWiring {
    pub main: usize,
    pub copy: usize,
    pub aux: usize,
}

impl GadgetWiring {
    /// Payoff tables for the copy and the auxiliary player.
    pub fn payoffs(&self) -> (PlayerPayoff, PlayerPayoff) {
        let mut deps = vec![self.main, self.copy, self.aux];
        deps.sort_unstable();
        let mut copy = Vec::with_capacity(8);
        let mut aux = Vec::with_capacity(8);
        for idx in 0..8usize {
            let bit = |player: usize| {
                let j = deps.iter().position(|&d| d == player).unwrap();
                (idx >> (2 - j)) & 1 == 1
            };
            let (c, a) = gadget_payoffs(bit(self.main), bit(self.copy), bit(self.aux));
            copy.push(c);
            aux.push(a);
        }
        (
            PlayerPayoff {
                deps: deps.clone(),
                table: copy,
            },
            PlayerPayoff { deps, table: aux },
        )
    }
}
