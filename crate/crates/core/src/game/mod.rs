//! Normal-form games in which every player has two pure strategies.
//!
//! Pure strategies are `0` and `1`; a mixed strategy is the probability of
//! playing `1`. Each player's payoff is stored as a table over the actions of
//! the players it depends on, so payoffs that only read a few coordinates
//! stay small even in games with many players.

mod gadget;
mod reduction;
mod solve;

pub use gadget::{gadget_payoffs, GadgetWiring};
pub use reduction::{build_g_r, solve_via_game, GameSolution, ReductionGame};
pub use solve::{solve_nash, NashConfig, SolveMethod};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Payoff of one player as a table over the actions of `deps`.
///
/// Entry order is lexicographic in the dependency actions with the first
/// dependency most significant: for `deps = [a, b]` the entries are
/// `(a, b) = 00, 01, 10, 11`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlayerPayoff {
    pub deps: Vec<usize>,
    pub table: Vec<Rational>,
}

impl PlayerPayoff {
    pub fn constant(value: Rational) -> Self {
        Self {
            deps: Vec::new(),
            table: vec![value],
        }
    }

    fn index(&self, profile: &[bool]) -> usize {
        self.deps
            .iter()
            .fold(0, |acc, &d| (acc << 1) | profile[d] as usize)
    }
}

#[derive(Clone, Debug)]
pub struct NormalFormGame {
    players: Vec<PlayerPayoff>,
    tables: Vec<Vec<f64>>,
}

impl PartialEq for NormalFormGame {
    fn eq(&self, other: &Self) -> bool {
        self.players == other.players
    }
}

impl NormalFormGame {
    pub fn new(players: Vec<PlayerPayoff>) -> Result<Self> {
        let m = players.len();
        for (k, p) in players.iter().enumerate() {
            if p.deps.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidGame(format!(
                    "player {}: dependencies must be strictly increasing",
                    k + 1
                )));
            }
            if let Some(&d) = p.deps.iter().find(|&&d| d >= m) {
                return Err(Error::InvalidGame(format!(
                    "player {}: dependency {} out of range",
                    k + 1,
                    d + 1
                )));
            }
            if p.deps.len() >= usize::BITS as usize - 1 || p.table.len() != 1 << p.deps.len() {
                return Err(Error::InvalidGame(format!(
                    "player {}: table needs {} entries, has {}",
                    k + 1,
                    1u128 << p.deps.len().min(100),
                    p.table.len()
                )));
            }
            if let Some(v) = p.table.iter().find(|v| !rational::in_unit(v)) {
                return Err(Error::InvalidGame(format!(
                    "player {}: payoff {} outside [0, 1]",
                    k + 1,
                    rational::format_rational(v)
                )));
            }
        }
        let tables = players
            .iter()
            .map(|p| p.table.iter().map(rational::to_f64).collect())
            .collect();
        Ok(Self { players, tables })
    }

    /// Builds tables by evaluating `payoff(player, profile)` on every action
    /// combination of the player's dependencies. Coordinates outside `deps`
    /// are passed as `false`.
    pub fn from_fn(
        deps: Vec<Vec<usize>>,
        mut payoff: impl FnMut(usize, &[bool]) -> Rational,
    ) -> Result<Self> {
        let m = deps.len();
        let mut players = Vec::with_capacity(m);
        for (k, d) in deps.into_iter().enumerate() {
            let mut profile = vec![false; m];
            let mut table = Vec::with_capacity(1 << d.len());
            for idx in 0..(1usize << d.len()) {
                for (j, &p) in d.iter().enumerate() {
                    profile[p] = (idx >> (d.len() - 1 - j)) & 1 == 1;
                }
                table.push(payoff(k, &profile));
            }
            players.push(PlayerPayoff { deps: d, table });
        }
        Self::new(players)
    }

    /// Every payoff depends on every player.
    pub fn dense(m: usize, payoff: impl FnMut(usize, &[bool]) -> Rational) -> Result<Self> {
        Self::from_fn(vec![(0..m).collect(); m], payoff)
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn player(&self, k: usize) -> &PlayerPayoff {
        &self.players[k]
    }

    pub fn players(&self) -> &[PlayerPayoff] {
        &self.players
    }

    pub fn payoff(&self, player: usize, profile: &[bool]) -> &Rational {
        let p = &self.players[player];
        &p.table[p.index(profile)]
    }

    /// Sum over the player's table weighted by the mixed profile. With
    /// `fix = Some((k, a))` player `k` is treated as playing `a` purely.
    fn weighted(&self, player: usize, s: &[f64], fix: Option<(usize, bool)>) -> f64 {
        let p = &self.players[player];
        let table = &self.tables[player];
        let n = p.deps.len();
        let mut total = 0.0;
        for (idx, &v) in table.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let mut w = v;
            for (j, &d) in p.deps.iter().enumerate() {
                let a = (idx >> (n - 1 - j)) & 1 == 1;
                let pa = match fix {
                    Some((k, fixed)) if k == d => {
                        if a == fixed {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    _ => {
                        if a {
                            s[d]
                        } else {
                            1.0 - s[d]
                        }
                    }
                };
                w *= pa;
                if w == 0.0 {
                    break;
                }
            }
            total += w;
        }
        total
    }

    /// Expected payoff of `player` under the mixed profile.
    pub fn expected_payoff(&self, profile: &MixedProfile, player: usize) -> f64 {
        self.weighted(player, &profile.0, None)
    }

    /// Payoffs of the player's two pure strategies against the others' mix.
    pub fn pure_payoffs(&self, s: &[f64], player: usize) -> (f64, f64) {
        (
            self.weighted(player, s, Some((player, false))),
            self.weighted(player, s, Some((player, true))),
        )
    }

    /// Payoff of pure strategy 1 minus payoff of pure strategy 0.
    pub fn gain(&self, s: &[f64], player: usize) -> f64 {
        if !self.players[player].deps.contains(&player) {
            return 0.0;
        }
        let (u0, u1) = self.pure_payoffs(s, player);
        u1 - u0
    }

    /// Exact expected payoff for a rational profile.
    pub fn expected_payoff_exact(&self, s: &[Rational], player: usize) -> Rational {
        let p = &self.players[player];
        let n = p.deps.len();
        let mut total = Rational::zero();
        for (idx, v) in p.table.iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            let mut w = v.clone();
            for (j, &d) in p.deps.iter().enumerate() {
                if (idx >> (n - 1 - j)) & 1 == 1 {
                    w *= &s[d];
                } else {
                    w *= Rational::one() - &s[d];
                }
            }
            total += w;
        }
        total
    }

    /// `r_k = max(u_k(0), u_k(1)) - u_k(s)` for every player.
    pub fn best_response_regret(&self, profile: &MixedProfile) -> Vec<f64> {
        (0..self.num_players())
            .map(|k| {
                let (u0, u1) = self.pure_payoffs(&profile.0, k);
                let s = profile.0[k];
                (u0.max(u1) - (s * u1 + (1.0 - s) * u0)).max(0.0)
            })
            .collect()
    }

    /// An epsilon-Nash equilibrium: every regret is at most `eps`, and a
    /// player mixing strictly inside `(eps, 1 - eps)` has pure payoffs within
    /// `eps` of each other.
    pub fn is_equilibrium(&self, profile: &MixedProfile, eps: f64) -> bool {
        let regrets = self.best_response_regret(profile);
        regrets.iter().all(|&r| r <= eps)
            && (0..self.num_players()).all(|k| {
                let s = profile.0[k];
                s <= eps || s >= 1.0 - eps || self.gain(&profile.0, k).abs() <= eps
            })
    }
}

/// `s_k = P(player k plays 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedProfile(pub Vec<f64>);

impl MixedProfile {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        if let Some(x) = s.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::ProbabilityOutOfRange(x.to_string()));
        }
        Ok(Self(s))
    }

    pub fn pure(actions: &[bool]) -> Self {
        Self(actions.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumReport {
    pub profile: MixedProfile,
    pub regrets: Vec<f64>,
    pub method: SolveMethod,
    /// Support patterns tried (support enumeration) or dynamics steps
    /// (damping).
    pub iterations: usize,
    pub epsilon: f64,
    pub converged: bool,
}

impl EquilibriumReport {
    pub fn max_regret(&self) -> f64 {
        self.regrets.iter().cloned().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    pub(crate) fn matching_pennies() -> NormalFormGame {
        NormalFormGame::dense(2, |k, a| {
            let matched = a[0] == a[1];
            int((matched == (k == 0)) as i64)
        })
        .unwrap()
    }

    #[test]
    fn matching_pennies_value() {
        let g = matching_pennies();
        let s = MixedProfile(vec![0.5, 0.5]);
        assert_eq!(g.expected_payoff(&s, 0), 0.5);
        assert_eq!(g.best_response_regret(&s), vec![0.0, 0.0]);
        assert_eq!(
            g.expected_payoff_exact(&[rat(1, 2), rat(1, 2)], 0),
            rat(1, 2)
        );
    }

    #[test]
    fn matching_pennies_pure_corner_regret() {
        let g = matching_pennies();
        let s = MixedProfile(vec![1.0, 1.0]);
        assert_eq!(g.best_response_regret(&s), vec![0.0, 1.0]);
        assert!(!g.is_equilibrium(&s, 1e-6));
    }

    #[test]
    fn pure_profile_gives_table_entry() {
        let g = matching_pennies();
        for a in [[false, false], [false, true], [true, false], [true, true]] {
            let s = MixedProfile::pure(&a);
            for k in 0..2 {
                assert_eq!(g.expected_payoff(&s, k), rational::to_f64(g.payoff(k, &a)));
            }
        }
    }

    #[test]
    fn single_player_regret() {
        let g = NormalFormGame::dense(1, |_, a| int(a[0] as i64)).unwrap();
        assert_eq!(g.best_response_regret(&MixedProfile(vec![1.0])), vec![0.0]);
        assert_eq!(g.best_response_regret(&MixedProfile(vec![0.25])), vec![0.75]);
    }

    #[test]
    fn table_order_is_msb_first() {
        let p = PlayerPayoff {
            deps: vec![0, 2],
            table: vec![int(0), rat(1, 3), rat(2, 3), int(1)],
        };
        let g = NormalFormGame::new(vec![p.clone(), PlayerPayoff::constant(int(0)), PlayerPayoff::constant(int(0))])
            .unwrap();
        assert_eq!(g.payoff(0, &[false, true, true]), &rat(1, 3));
        assert_eq!(g.payoff(0, &[true, false, false]), &rat(2, 3));
    }

    #[test]
    fn invalid_tables_rejected() {
        let bad = PlayerPayoff {
            deps: vec![0],
            table: vec![int(0)],
        };
        assert!(NormalFormGame::new(vec![bad]).is_err());
        let bad = PlayerPayoff {
            deps: vec![0],
            table: vec![int(0), int(2)],
        };
        assert!(NormalFormGame::new(vec![bad]).is_err());
        let bad = PlayerPayoff {
            deps: vec![1],
            table: vec![int(0), int(1)],
        };
        assert!(NormalFormGame::new(vec![bad]).is_err());
    }
}
