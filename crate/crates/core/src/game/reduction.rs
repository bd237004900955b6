//! The game whose equilibria are reflective oracles.
//!
//! For a closed, bounded query set of size `n` with bound `B` the game has
//! `m = n(2B + 1)` players (0-based indices):
//!
//! - main player `i` (`0 <= i < n`) plays the answer to query `i`;
//! - copy player `g(i, j) = j*n + i` (`1 <= j <= B`) is forced by a gadget to
//!   mix exactly like main player `i`, giving an independent sample of it;
//! - auxiliary player `h(i, j) = (B + j)*n + i` drives that gadget.
//!
//! Main player `i` is paid `P_i` evaluated on copy-player samples when it
//! plays 1 and `p_i` when it plays 0, so it plays 1 only if `P_i(x) >= p_i`.
//! Negative polynomial coefficients are handled by the positive affine map
//! `u -> (u + C_i) / (1 + 2 C_i)` with `C_i` the total negative mass, which
//! keeps payoffs in `[0, 1]` and leaves equilibria unchanged.

use num_traits::{One, Signed, Zero};

use super::{gadget_payoffs, solve_nash, EquilibriumReport, NashConfig, NormalFormGame};
use crate::analysis;
use crate::error::{Error, Result};
use crate::machine::{MachineRegistry, OracleAssignment, QuerySet};
use crate::poly::{self, ProbPolynomial};
use crate::rational::Rational;
use crate::reflection::{check_reflective, ReflectionReport};

#[derive(Clone, Debug)]
pub struct ReductionGame {
    pub game: NormalFormGame,
    pub queries: QuerySet,
    /// The oracle-call bound `B`.
    pub bound: u32,
    pub polynomials: Vec<ProbPolynomial>,
    /// `C_i`: total magnitude of negative coefficients of `P_i`.
    pub offsets: Vec<Rational>,
    /// Step budget under which exact evaluation of every query is complete.
    pub depth: usize,
}

impl ReductionGame {
    pub fn n(&self) -> usize {
        self.queries.len()
    }

    pub fn main(&self, i: usize) -> usize {
        i
    }

    /// `j` in `1..=B`.
    pub fn copy(&self, i: usize, j: usize) -> usize {
        j * self.n() + i
    }

    /// `j` in `1..=B`.
    pub fn aux(&self, i: usize, j: usize) -> usize {
        (self.bound as usize + j) * self.n() + i
    }

    /// Main player `i`'s payoff before the affine rescaling.
    pub fn unscaled_main_payoff(&self, i: usize, profile: &[bool]) -> Rational {
        let c = &self.offsets[i];
        let u = self.game.payoff(i, profile);
        u * (Rational::one() + c + c) - c
    }
}

fn copy_index(n: usize, i: usize, j: usize) -> usize {
    j * n + i
}

/// Builds the game for a closed, bounded query set whose machines halt.
pub fn build_g_r(registry: &MachineRegistry, queries: &QuerySet) -> Result<ReductionGame> {
    let report = analysis::compute_bound(registry, queries)?;
    if let Some(f) = report.findings.first() {
        return Err(Error::NotClosed(f.to_string()));
    }
    let (bound, depth) = match (report.bound_value(), report.max_steps) {
        (Some(b), Some(d)) => (b, d),
        _ => {
            return Err(Error::Unbounded(
                queries
                    .iter()
                    .map(|q| q.machine.clone())
                    .collect::<Vec<_>>()
                    .join(", "),
            ))
        }
    };
    let polys = poly::extract_all(registry, queries)?;
    let n = queries.len();
    let b = bound as usize;
    let m = n * (2 * b + 1);
    let offsets: Vec<Rational> = polys
        .iter()
        .map(|p| {
            p.terms()
                .filter(|(_, c)| c.is_negative())
                .map(|(_, c)| -c)
                .sum()
        })
        .collect();
    let thresholds: Vec<Rational> = queries.iter().map(|q| q.threshold.clone()).collect();

    let mut deps = vec![Vec::new(); m];
    for i in 0..n {
        let mut d = vec![i];
        for i2 in 0..n {
            for j in 1..=polys[i].degree_in(i2) as usize {
                d.push(copy_index(n, i2, j));
            }
        }
        d.sort_unstable();
        deps[i] = d;
        for j in 1..=b {
            let mut g = vec![i, copy_index(n, i, j), (b + j) * n + i];
            g.sort_unstable();
            deps[copy_index(n, i, j)] = g.clone();
            deps[(b + j) * n + i] = g;
        }
    }
    // Role of each player: (query index, j, is_aux); main players have j = 0.
    let role = |k: usize| -> (usize, usize, bool) {
        let (block, i) = (k / n, k % n);
        if block == 0 {
            (i, 0, false)
        } else if block <= b {
            (i, block, false)
        } else {
            (i, block - b, true)
        }
    };
    let game = NormalFormGame::from_fn(deps, |k, a| {
        let (i, j, is_aux) = role(k);
        if j == 0 {
            let c = &offsets[i];
            let scale = Rational::one() + c + c;
            let raw = if a[i] {
                let mut total = Rational::zero();
                for (mono, coef) in polys[i].terms() {
                    let hit = mono.0.iter().enumerate().all(|(i2, &d)| {
                        (1..=d as usize).all(|jj| a[copy_index(n, i2, jj)])
                    });
                    if coef.is_negative() {
                        if !hit {
                            total -= coef;
                        }
                    } else if hit {
                        total += coef;
                    }
                }
                total
            } else {
                &thresholds[i] + c
            };
            raw / scale
        } else {
            let (u_copy, u_aux) =
                gadget_payoffs(a[i], a[copy_index(n, i, j)], a[(b + j) * n + i]);
            if is_aux {
                u_aux
            } else {
                u_copy
            }
        }
    })?;
    Ok(ReductionGame {
        game,
        queries: queries.clone(),
        bound,
        polynomials: polys,
        offsets,
        depth,
    })
}

#[derive(Clone, Debug)]
pub struct GameSolution {
    pub assignment: OracleAssignment,
    pub report: ReflectionReport,
    pub equilibrium: EquilibriumReport,
    pub game: ReductionGame,
}

/// Solves the reduction game and reads the main players' strategies as an
/// oracle assignment. A failed equilibrium search shows up as a failing
/// report, not an error.
pub fn solve_via_game(
    registry: &MachineRegistry,
    queries: &QuerySet,
    epsilon: f64,
    nash: &NashConfig,
) -> Result<GameSolution> {
    let game = build_g_r(registry, queries)?;
    let equilibrium = solve_nash(&game.game, nash)?;
    let x: Vec<f64> = equilibrium.profile.0[..game.n()].to_vec();
    let assignment = OracleAssignment::float(queries.clone(), x)?;
    let report = check_reflective(registry, queries, &assignment, epsilon, game.depth)?;
    Ok(GameSolution {
        assignment,
        report,
        equilibrium,
        game,
    })
}
