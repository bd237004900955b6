//! Equilibrium search for two-action games.
//!
//! Support enumeration walks the `3^m` support patterns (each player pure 0,
//! pure 1 or mixing) in order of increasing number of mixing players. A
//! pattern is first screened with exact vertex bounds: payoff gains are
//! multilinear, so their range over the mixing players' box is attained at
//! the box vertices. Surviving patterns are solved with a projected
//! Levenberg-Marquardt iteration on the indifference equations of the mixing
//! players, plus hinge residuals keeping every pure player's choice a best
//! response.
//!
//! Damping runs fictitious-play style averaging toward the best response
//! from seeded starts, then polishes the end point on the support pattern it
//! suggests.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EquilibriumReport, MixedProfile, NormalFormGame};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    SupportEnum,
    Damping,
}

impl std::fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveMethod::SupportEnum => "support-enum",
            SolveMethod::Damping => "damping",
        })
    }
}

#[derive(Clone, Debug)]
pub struct NashConfig {
    pub method: SolveMethod,
    /// Regret tolerance for accepting a profile.
    pub epsilon: f64,
    /// Iteration cap for one local solve (or one damping run).
    pub max_iter: usize,
    pub seed: u64,
    /// Random restarts after the deterministic start.
    pub restarts: usize,
}

impl Default for NashConfig {
    fn default() -> Self {
        Self {
            method: SolveMethod::SupportEnum,
            epsilon: 1e-9,
            max_iter: 200,
            seed: 0,
            restarts: 2,
        }
    }
}

/// Largest game support enumeration accepts.
pub const MAX_SUPPORT_ENUM_PLAYERS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Zero,
    One,
    Mixed,
}

pub fn solve_nash(game: &NormalFormGame, cfg: &NashConfig) -> Result<EquilibriumReport> {
    if !(cfg.epsilon > 0.0) {
        return Err(Error::InvalidConfig("epsilon must be positive".into()));
    }
    let m = game.num_players();
    match cfg.method {
        SolveMethod::SupportEnum => {
            if m > MAX_SUPPORT_ENUM_PLAYERS {
                return Err(Error::InvalidConfig(format!(
                    "support enumeration handles at most {MAX_SUPPORT_ENUM_PLAYERS} players, game has {m}"
                )));
            }
            Ok(support_enum(game, cfg))
        }
        SolveMethod::Damping => Ok(damping(game, cfg)),
    }
}

fn report(
    game: &NormalFormGame,
    s: Vec<f64>,
    cfg: &NashConfig,
    iterations: usize,
) -> EquilibriumReport {
    let profile = MixedProfile(s);
    let regrets = game.best_response_regret(&profile);
    let converged = game.is_equilibrium(&profile, cfg.epsilon);
    EquilibriumReport {
        profile,
        regrets,
        method: cfg.method,
        iterations,
        epsilon: cfg.epsilon,
        converged,
    }
}

fn support_enum(game: &NormalFormGame, cfg: &NashConfig) -> EquilibriumReport {
    let m = game.num_players();
    let solver = PatternSolver::new(game, cfg);
    let mut tried = 0usize;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..=m {
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            let mut roles = vec![Role::Zero; m];
            for &c in &combo {
                roles[c] = Role::Mixed;
            }
            let pure: Vec<usize> = (0..m).filter(|p| roles[*p] != Role::Mixed).collect();
            for bits in 0..(1u64 << pure.len()) {
                for (j, &p) in pure.iter().enumerate() {
                    roles[p] = if (bits >> (pure.len() - 1 - j)) & 1 == 1 {
                        Role::One
                    } else {
                        Role::Zero
                    };
                }
                tried += 1;
                if !solver.feasible(&roles) {
                    continue;
                }
                let (s, ok) = solver.solve(&roles, tried as u64);
                if ok {
                    return report(game, s, cfg, tried);
                }
                let worst = max_regret(game, &s);
                if best.as_ref().is_none_or(|(r, _)| worst < *r) {
                    best = Some((worst, s));
                }
            }
            if !next_combination(&mut combo, m) {
                break;
            }
        }
    }
    let s = best.map(|b| b.1).unwrap_or_else(|| vec![0.5; m]);
    report(game, s, cfg, tried)
}

fn max_regret(game: &NormalFormGame, s: &[f64]) -> f64 {
    game.best_response_regret(&MixedProfile(s.to_vec()))
        .into_iter()
        .fold(0.0, f64::max)
}

/// Advances `combo` to the next k-subset of `0..n` in lexicographic order.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

struct PatternSolver<'g> {
    game: &'g NormalFormGame,
    cfg: &'g NashConfig,
    /// Whether each player's payoff reads its own action.
    self_dep: Vec<bool>,
}

impl<'g> PatternSolver<'g> {
    fn new(game: &'g NormalFormGame, cfg: &'g NashConfig) -> Self {
        let self_dep = (0..game.num_players())
            .map(|k| game.player(k).deps.contains(&k))
            .collect();
        Self {
            game,
            cfg,
            self_dep,
        }
    }

    /// Gain of `player` when every dependency plays purely.
    fn vertex_gain(&self, player: usize, actions: &mut [bool]) -> f64 {
        let saved = actions[player];
        actions[player] = true;
        let u1 = crate::rational::to_f64(self.game.payoff(player, actions));
        actions[player] = false;
        let u0 = crate::rational::to_f64(self.game.payoff(player, actions));
        actions[player] = saved;
        u1 - u0
    }

    /// Exact screen: can each player's role be a best response somewhere in
    /// the box spanned by the mixing players?
    fn feasible(&self, roles: &[Role]) -> bool {
        let eps = self.cfg.epsilon;
        let mut actions: Vec<bool> = roles.iter().map(|r| *r == Role::One).collect();
        for (k, role) in roles.iter().enumerate() {
            if !self.self_dep[k] {
                continue;
            }
            let free: Vec<usize> = self
                .game
                .player(k)
                .deps
                .iter()
                .copied()
                .filter(|&d| d != k && roles[d] == Role::Mixed)
                .collect();
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for v in 0..(1usize << free.len()) {
                for (j, &d) in free.iter().enumerate() {
                    actions[d] = (v >> j) & 1 == 1;
                }
                let g = self.vertex_gain(k, &mut actions);
                lo = lo.min(g);
                hi = hi.max(g);
            }
            for &d in &free {
                actions[d] = false;
            }
            let ok = match role {
                Role::One => hi >= -eps,
                Role::Zero => lo <= eps,
                Role::Mixed => lo <= eps && hi >= -eps,
            };
            if !ok {
                return false;
            }
        }
        true
    }

    /// Local solve on one pattern. Returns the best profile reached and
    /// whether it is an equilibrium.
    fn solve(&self, roles: &[Role], salt: u64) -> (Vec<f64>, bool) {
        let m = roles.len();
        let base: Vec<f64> = roles
            .iter()
            .map(|r| match r {
                Role::One => 1.0,
                _ => 0.0,
            })
            .collect();
        let unknowns: Vec<usize> = (0..m).filter(|&k| roles[k] == Role::Mixed).collect();
        let mut start = base.clone();
        for &u in &unknowns {
            start[u] = 0.5;
        }
        if unknowns.is_empty() {
            let ok = self.game.is_equilibrium(&MixedProfile(start.clone()), self.cfg.epsilon);
            return (start, ok);
        }
        // Residual players: mixing players, plus pure players whose gain
        // reads a mixing player.
        let residuals: Vec<usize> = (0..m)
            .filter(|&k| {
                self.self_dep[k]
                    && (roles[k] == Role::Mixed
                        || self
                            .game
                            .player(k)
                            .deps
                            .iter()
                            .any(|&d| d != k && roles[d] == Role::Mixed))
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut best = start.clone();
        let mut best_regret = f64::INFINITY;
        for attempt in 0..=self.cfg.restarts {
            let mut s = start.clone();
            if attempt > 0 {
                for &u in &unknowns {
                    s[u] = rng.gen::<f64>();
                }
            }
            let s = polish(self.game, roles, &unknowns, &residuals, s, self.cfg.max_iter);
            if self.game.is_equilibrium(&MixedProfile(s.clone()), self.cfg.epsilon) {
                return (s, true);
            }
            let r = max_regret(self.game, &s);
            if r < best_regret {
                best_regret = r;
                best = s;
            }
        }
        (best, false)
    }
}

fn residual(game: &NormalFormGame, roles: &[Role], k: usize, s: &[f64]) -> f64 {
    let g = game.gain(s, k);
    match roles[k] {
        Role::Mixed => g,
        Role::One => g.min(0.0),
        Role::Zero => g.max(0.0),
    }
}

/// Projected Levenberg-Marquardt on the pattern's residuals.
fn polish(
    game: &NormalFormGame,
    roles: &[Role],
    unknowns: &[usize],
    residuals: &[usize],
    mut s: Vec<f64>,
    max_iter: usize,
) -> Vec<f64> {
    let eval = |s: &[f64]| -> DVector<f64> {
        DVector::from_iterator(
            residuals.len(),
            residuals.iter().map(|&k| residual(game, roles, k, s)),
        )
    };
    let mut r = eval(&s);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let n = unknowns.len();
    for _ in 0..max_iter {
        if r.amax() < 1e-14 {
            break;
        }
        // Gains are affine in each single coordinate, so a two-point
        // difference is the exact partial derivative of the smooth part.
        let mut jac = DMatrix::<f64>::zeros(residuals.len(), n);
        for (col, &u) in unknowns.iter().enumerate() {
            let saved = s[u];
            s[u] = 1.0;
            let hi: Vec<f64> = residuals.iter().map(|&k| game.gain(&s, k)).collect();
            s[u] = 0.0;
            let lo: Vec<f64> = residuals.iter().map(|&k| game.gain(&s, k)).collect();
            s[u] = saved;
            for (row, &k) in residuals.iter().enumerate() {
                let active = match roles[k] {
                    Role::Mixed => true,
                    Role::One => r[row] < 0.0,
                    Role::Zero => r[row] > 0.0,
                };
                if active && k != u {
                    jac[(row, col)] = hi[row] - lo[row];
                }
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * &r;
        let mut improved = false;
        while lambda < 1e12 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * (1.0 + jtj[(i, i)]);
            }
            let Some(step) = a.lu().solve(&(-&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = s.clone();
            for (i, &u) in unknowns.iter().enumerate() {
                trial[u] = (s[u] + step[i]).clamp(0.0, 1.0);
            }
            let tr = eval(&trial);
            let tc = tr.norm_squared();
            if tc < cost {
                s = trial;
                r = tr;
                cost = tc;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    s
}

fn damping(game: &NormalFormGame, cfg: &NashConfig) -> EquilibriumReport {
    let m = game.num_players();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut steps = 0usize;
    for attempt in 0..=cfg.restarts {
        let mut s: Vec<f64> = if attempt == 0 {
            vec![0.5; m]
        } else {
            (0..m).map(|_| rng.gen::<f64>()).collect()
        };
        for t in 0..cfg.max_iter {
            steps += 1;
            if game.is_equilibrium(&MixedProfile(s.clone()), cfg.epsilon) {
                return report(game, s, cfg, steps);
            }
            let eta = 1.0 / (t as f64 + 2.0);
            let target: Vec<f64> = (0..m)
                .map(|k| {
                    let g = game.gain(&s, k);
                    if g > 0.0 {
                        1.0
                    } else if g < 0.0 {
                        0.0
                    } else {
                        s[k]
                    }
                })
                .collect();
            for k in 0..m {
                s[k] = (1.0 - eta) * s[k] + eta * target[k];
            }
        }
        // Polish on the support the dynamics point to.
        let roles: Vec<Role> = s
            .iter()
            .map(|&x| {
                if x < 1e-2 {
                    Role::Zero
                } else if x > 1.0 - 1e-2 {
                    Role::One
                } else {
                    Role::Mixed
                }
            })
            .collect();
        let unknowns: Vec<usize> = (0..m).filter(|&k| roles[k] == Role::Mixed).collect();
        let residuals: Vec<usize> = (0..m).collect();
        let mut start = s.clone();
        for k in 0..m {
            match roles[k] {
                Role::Zero => start[k] = 0.0,
                Role::One => start[k] = 1.0,
                Role::Mixed => {}
            }
        }
        let polished = polish(game, &roles, &unknowns, &residuals, start, cfg.max_iter);
        for cand in [polished, s] {
            if game.is_equilibrium(&MixedProfile(cand.clone()), cfg.epsilon) {
                return report(game, cand, cfg, steps);
            }
            let r = max_regret(game, &cand);
            if best.as_ref().is_none_or(|(b, _)| r < *b) {
                best = Some((r, cand));
            }
        }
    }
    let s = best.map(|b| b.1).unwrap_or_else(|| vec![0.5; m]);
    report(game, s, cfg, steps)
}
