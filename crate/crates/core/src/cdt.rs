//! Causal-decision-theory agents built from world models.
//!
//! A world model gives, for each action `a`, a machine `W(a)` that halts
//! with an outcome label. The comparison machine
//!
//! `E = flip((u(W(1)) - u(W(0)) + 1) / 2)`
//!
//! outputs 1 with probability `1/2 + (E[u(W(1))] - E[u(W(0))]) / 2`, so an
//! oracle reflective on `(E, 1/2)` answers 1 only when action 1 is at least
//! as good as action 0. The agent `A = O(E, 1/2)` therefore maximizes
//! expected utility. Labels are mapped to utilities when `E` is built: the
//! world bodies are in-lined and each pair of leaves becomes a constant-bias
//! flip.
//!
//! More than two actions are handled by a tournament in which stage `t`
//! compares action `t` against the world that follows the earlier stages'
//! choice. Every stage re-runs the earlier comparisons with fresh oracle
//! calls instead of sharing one sample.
//!
//! Several agents whose worlds run each other's agent machines form a
//! multi-agent system; its reflective oracles are exactly the Nash
//! equilibria of the induced game.

use std::collections::HashMap;

use indexmap::IndexMap;
use num_traits::{One, Zero};

use crate::analysis::{self, OutputSet};
use crate::error::{Error, Result};
use crate::eval::exact_eval;
use crate::game::NormalFormGame;
use crate::machine::{MachineExpr, MachineRegistry, OracleAssignment, Output, Query, QuerySet};
use crate::rational::{self, rat, Rational};

/// Utility of each outcome label, in `[0, 1]`. Bit outputs use the labels
/// `"0"` and `"1"`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UtilityTable {
    values: IndexMap<String, Rational>,
}

impl UtilityTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<L: Into<String>>(pairs: impl IntoIterator<Item = (L, Rational)>) -> Result<Self> {
        let mut t = Self::new();
        for (l, u) in pairs {
            t.insert(l, u)?;
        }
        Ok(t)
    }

    pub fn insert(&mut self, label: impl Into<String>, utility: Rational) -> Result<()> {
        let label = label.into();
        if !rational::in_unit(&utility) {
            return Err(Error::ProbabilityOutOfRange(format!(
                "utility {} of `{label}`",
                rational::format_rational(&utility)
            )));
        }
        if self.values.contains_key(&label) {
            return Err(Error::InvalidConfig(format!("utility of `{label}` given twice")));
        }
        self.values.insert(label, utility);
        Ok(())
    }

    pub fn get(&self, label: &str) -> Option<&Rational> {
        self.values.get(label)
    }

    pub fn utility(&self, label: &str) -> Result<&Rational> {
        self.get(label)
            .ok_or_else(|| Error::MissingUtility(label.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Rational)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `W(a)` for each action `a = 0..k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorldModel {
    actions: Vec<String>,
}

impl WorldModel {
    pub fn new(actions: Vec<String>) -> Result<Self> {
        if actions.len() < 2 {
            return Err(Error::TooFewActions {
                min: 2,
                got: actions.len(),
            });
        }
        Ok(Self { actions })
    }

    pub fn binary(w0: impl Into<String>, w1: impl Into<String>) -> Self {
        Self {
            actions: vec![w0.into(), w1.into()],
        }
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn world(&self, a: usize) -> &str {
        &self.actions[a]
    }
}

/// How a pure action profile becomes an outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutcomeModel {
    /// The outcome label is the profile itself, e.g. `"01"` when agent 1
    /// plays 0 and agent 2 plays 1.
    Identity,
    /// The outcome of profile `"01"` is whatever machine `<prefix>_01`
    /// returns.
    Machines(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiAgentSpec {
    pub name: String,
    pub agents: usize,
    pub outcome: OutcomeModel,
    /// One table per agent.
    pub utilities: Vec<UtilityTable>,
}

impl MultiAgentSpec {
    pub fn new(
        name: impl Into<String>,
        agents: usize,
        outcome: OutcomeModel,
        utilities: Vec<UtilityTable>,
    ) -> Result<Self> {
        if agents == 0 {
            return Err(Error::InvalidConfig("a multi-agent system needs an agent".into()));
        }
        if utilities.len() != agents {
            return Err(Error::InvalidConfig(format!(
                "{agents} agents but {} utility tables",
                utilities.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            agents,
            outcome,
            utilities,
        })
    }

    /// Identity outcomes with `payoffs[i][profile index]` as agent `i`'s
    /// utility; profile indices put agent 1 in the most significant bit.
    pub fn from_payoffs(name: impl Into<String>, payoffs: Vec<Vec<Rational>>) -> Result<Self> {
        let n = payoffs.len();
        let mut tables = Vec::with_capacity(n);
        for row in payoffs {
            if row.len() != 1 << n {
                return Err(Error::InvalidConfig(format!(
                    "payoff table needs {} entries, has {}",
                    1usize << n,
                    row.len()
                )));
            }
            tables.push(UtilityTable::from_pairs(
                row.into_iter()
                    .enumerate()
                    .map(|(idx, u)| (Self::profile_label(n, idx), u)),
            )?);
        }
        Self::new(name, n, OutcomeModel::Identity, tables)
    }

    /// `"a_1 a_2 ... a_n"` without spaces for profile index `idx`.
    pub fn profile_label(n: usize, idx: usize) -> String {
        (0..n)
            .map(|j| if idx >> (n - 1 - j) & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn matching_pennies() -> Self {
        let (o, z) = (Rational::one(), Rational::zero());
        Self::from_payoffs(
            "mp",
            vec![
                vec![o.clone(), z.clone(), z.clone(), o.clone()],
                vec![z.clone(), o.clone(), o, z],
            ],
        )
        .expect("valid table")
    }
}

/// Replaces every reachable leaf of `body` by `leaf(output)`. Call branches
/// the callee can never take become `ret 0`.
fn inline_leaves(
    body: &MachineExpr,
    sets: &HashMap<String, OutputSet>,
    leaf: &mut dyn FnMut(&Output) -> Result<MachineExpr>,
) -> Result<MachineExpr> {
    Ok(match body {
        MachineExpr::Ret(o) => leaf(o)?,
        MachineExpr::Flip { p, heads, tails } => MachineExpr::flip(
            p.clone(),
            inline_leaves(heads, sets, leaf)?,
            inline_leaves(tails, sets, leaf)?,
        ),
        MachineExpr::Oracle {
            target,
            p,
            on_zero,
            on_one,
        } => MachineExpr::oracle(
            target.clone(),
            p.clone(),
            inline_leaves(on_zero, sets, leaf)?,
            inline_leaves(on_one, sets, leaf)?,
        ),
        MachineExpr::Call {
            target,
            on_zero,
            on_one,
            on_other,
        } => {
            let s = sets.get(target).copied().unwrap_or_default();
            let mut branch = |take: bool, e: &MachineExpr| -> Result<MachineExpr> {
                if take {
                    inline_leaves(e, sets, leaf)
                } else {
                    Ok(MachineExpr::ret0())
                }
            };
            MachineExpr::call(
                target.clone(),
                branch(s.zero, on_zero)?,
                branch(s.one, on_one)?,
                branch(s.other, on_other)?,
            )
        }
    })
}

/// `E` for the comparison of world `w1` (action 1) against `w0` (action 0)
/// under `u`, not yet registered.
fn comparison_body(
    registry: &MachineRegistry,
    w0: &str,
    w1: &str,
    u: &UtilityTable,
) -> Result<MachineExpr> {
    let sets = analysis::possible_outputs(registry);
    let body0 = registry.body(w0)?;
    let body1 = registry.body(w1)?;
    let two = rat(2, 1);
    inline_leaves(body1, &sets, &mut |l1| {
        let u1 = u.utility(l1.label())?.clone();
        inline_leaves(body0, &sets, &mut |l0| {
            let u0 = u.utility(l0.label())?;
            let p = (&u1 - u0 + Rational::one()) / &two;
            Ok(MachineExpr::flip(p, MachineExpr::ret1(), MachineExpr::ret0()))
        })
    })
}

fn insert_new(registry: &mut MachineRegistry, name: &str, body: MachineExpr) -> Result<()> {
    registry.insert(name.to_string(), body)
}

/// Registers `name` as the comparison machine for actions 0 and 1 of
/// `world`.
pub fn build_e(
    registry: &mut MachineRegistry,
    world: &WorldModel,
    u: &UtilityTable,
    name: &str,
) -> Result<String> {
    registry.validate().into_result()?;
    let body = comparison_body(registry, world.world(0), world.world(1), u)?;
    insert_new(registry, name, body)?;
    Ok(name.to_string())
}

/// Registers `name` as `oracle(E, 1/2, ret 0, ret 1)`.
pub fn build_agent(registry: &mut MachineRegistry, e: &str, name: &str) -> Result<String> {
    if !registry.contains(e) {
        return Err(Error::UnknownMachine(e.to_string()));
    }
    insert_new(registry, name, agent_body(e))?;
    Ok(name.to_string())
}

fn agent_body(e: &str) -> MachineExpr {
    MachineExpr::oracle(e, rat(1, 2), MachineExpr::ret0(), MachineExpr::ret1())
}

/// The machines making up one agent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Agent {
    /// Outputs the chosen action: `0`, `1`, or the label `"a"` for `a >= 2`.
    pub name: String,
    /// One comparison machine per stage.
    pub stages: Vec<String>,
    /// `(E_t, 1/2)` for every stage.
    pub queries: QuerySet,
    /// `decoders[a]` outputs 1 exactly when the agent would play `a`.
    pub decoders: Vec<String>,
    /// Action count.
    pub actions: usize,
}

/// The choice made after the first `stages.len()` stages, with action `a`
/// rendered as `leaf(a)`.
fn choice_expr(stages: &[String], leaf: &mut dyn FnMut(usize) -> Result<MachineExpr>) -> Result<MachineExpr> {
    let mut e = leaf(0)?;
    for (t, s) in stages.iter().enumerate() {
        e = MachineExpr::oracle(s.clone(), rat(1, 2), e, leaf(t + 1)?);
    }
    Ok(e)
}

fn action_output(a: usize) -> MachineExpr {
    match a {
        0 => MachineExpr::ret0(),
        1 => MachineExpr::ret1(),
        a => MachineExpr::ret_other(a.to_string()),
    }
}

/// Agent for any action count: `<prefix>_E` and `<prefix>_A` for two
/// actions, a tournament otherwise.
pub fn build_cdt_agent(
    registry: &mut MachineRegistry,
    world: &WorldModel,
    u: &UtilityTable,
    prefix: &str,
) -> Result<Agent> {
    build_tournament_agent(registry, world, u, prefix)
}

/// `k`-action agent built from `k - 1` comparison stages.
///
/// Stage `t` (1-based) compares action `t` (as action 1) with the world
/// `<prefix>_B<t-1>` that plays whatever the first `t - 1` stages choose (as
/// action 0); stage 1 compares actions 1 and 0 directly. For `k = 2` the
/// agent is exactly `oracle(E, 1/2, ret 0, ret 1)`.
pub fn build_tournament_agent(
    registry: &mut MachineRegistry,
    world: &WorldModel,
    u: &UtilityTable,
    prefix: &str,
) -> Result<Agent> {
    registry.validate().into_result()?;
    let k = world.action_count();
    let mut stages: Vec<String> = Vec::with_capacity(k - 1);
    let mut prev_world = world.world(0).to_string();
    for t in 1..k {
        let e = if k == 2 {
            format!("{prefix}_E")
        } else {
            format!("{prefix}_E{t}")
        };
        let body = comparison_body(registry, &prev_world, world.world(t), u)?;
        insert_new(registry, &e, body)?;
        stages.push(e);
        if t + 1 < k {
            let sets = analysis::possible_outputs(registry);
            let b = format!("{prefix}_B{t}");
            let body = choice_expr(&stages, &mut |a| {
                let w = registry.body(world.world(a))?;
                inline_leaves(w, &sets, &mut |o| Ok(MachineExpr::Ret(o.clone())))
            })?;
            insert_new(registry, &b, body)?;
            prev_world = b;
        }
    }
    let name = format!("{prefix}_A");
    insert_new(registry, &name, choice_expr(&stages, &mut |a| Ok(action_output(a)))?)?;
    let mut decoders = Vec::with_capacity(k);
    for target in 0..k {
        let d = format!("{prefix}_D{target}");
        insert_new(
            registry,
            &d,
            choice_expr(&stages, &mut |a| Ok(MachineExpr::ret_bit(a == target)))?,
        )?;
        decoders.push(d);
    }
    let queries = QuerySet::from_queries(stages.iter().map(|s| Query::new(s.clone(), rat(1, 2))))?;
    Ok(Agent {
        name,
        stages,
        queries,
        decoders,
        actions: k,
    })
}

/// `flip(u(W))`: outputs 1 with probability `E[u(W)]`.
pub fn utility_machine(registry: &MachineRegistry, world: &str, u: &UtilityTable) -> Result<MachineExpr> {
    let sets = analysis::possible_outputs(registry);
    inline_leaves(registry.body(world)?, &sets, &mut |l| {
        Ok(MachineExpr::flip(
            u.utility(l.label())?.clone(),
            MachineExpr::ret1(),
            MachineExpr::ret0(),
        ))
    })
}

/// Step budget that makes exact evaluation of `body` complete, when its
/// call graph is acyclic.
fn sufficient_depth(registry: &MachineRegistry, name: &str) -> Result<usize> {
    Ok(analysis::machine_cost(registry, name)?
        .map(|(_, steps)| steps.max(1))
        .unwrap_or(crate::DEFAULT_DEPTH_BUDGET))
}

/// `[lo, hi]` of `E[u(W)]` under `oracle`.
pub fn expected_utility(
    registry: &MachineRegistry,
    world: &str,
    u: &UtilityTable,
    oracle: &OracleAssignment,
) -> Result<crate::EvalInterval> {
    let mut scratch = registry.clone();
    let name = unused_name(&scratch, "__utility");
    scratch.insert(name.clone(), utility_machine(registry, world, u)?)?;
    let depth = sufficient_depth(&scratch, &name)?;
    exact_eval(&scratch, &name, oracle, depth)
}

fn unused_name(registry: &MachineRegistry, base: &str) -> String {
    let mut name = base.to_string();
    let mut k = 0;
    while registry.contains(&name) {
        k += 1;
        name = format!("{base}{k}");
    }
    name
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalityReport {
    /// Lower bounds on `E[u(W(a))]` (exact when the worlds halt).
    pub utilities: Vec<Rational>,
    /// `P(agent plays a)`.
    pub action_probs: Vec<Rational>,
    pub best: usize,
    /// Best utility minus the runner-up.
    pub margin: Rational,
    /// The margin is at most `delta`, so nothing is asserted.
    pub tie: bool,
    pub pass: bool,
}

/// Checks that the agent plays the utility-maximizing action with
/// probability at least `1 - epsilon` whenever that action wins by more
/// than `delta`.
pub fn verify_optimality(
    registry: &MachineRegistry,
    world: &WorldModel,
    u: &UtilityTable,
    agent: &Agent,
    x: &OracleAssignment,
    delta: f64,
    epsilon: f64,
) -> Result<OptimalityReport> {
    let utilities = (0..world.action_count())
        .map(|a| expected_utility(registry, world.world(a), u, x).map(|i| i.lo))
        .collect::<Result<Vec<_>>>()?;
    let action_probs = agent
        .decoders
        .iter()
        .map(|d| {
            let depth = sufficient_depth(registry, d)?;
            exact_eval(registry, d, x, depth).map(|i| i.lo)
        })
        .collect::<Result<Vec<_>>>()?;
    let best = (0..utilities.len())
        .max_by(|&a, &b| utilities[a].cmp(&utilities[b]).then(b.cmp(&a)))
        .unwrap_or(0);
    let runner_up = utilities
        .iter()
        .enumerate()
        .filter(|&(a, _)| a != best)
        .map(|(_, v)| v.clone())
        .max()
        .unwrap_or_else(Rational::zero);
    let margin = &utilities[best] - runner_up;
    let tie = rational::to_f64(&margin) <= delta;
    let pass = tie || rational::to_f64(&action_probs[best]) >= 1.0 - epsilon;
    Ok(OptimalityReport {
        utilities,
        action_probs,
        best,
        margin,
        tie,
        pass,
    })
}

/// Machines of a multi-agent system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiAgentSystem {
    /// `A_i`.
    pub agents: Vec<String>,
    /// `E_i`.
    pub stages: Vec<String>,
    /// `(W_i(0), W_i(1))`.
    pub worlds: Vec<(String, String)>,
    /// `[(E_1, 1/2), ..., (E_n, 1/2)]`.
    pub queries: QuerySet,
}

/// Registers `A_i = O(E_i, 1/2)`, `W_i(a) = F(a, A_{-i}())` and
/// `E_i` for every agent of `spec`. Names are `<spec>_A1`, `<spec>_W1_0`,
/// `<spec>_E1` and so on.
pub fn build_multi_agent(registry: &mut MachineRegistry, spec: &MultiAgentSpec) -> Result<MultiAgentSystem> {
    let n = spec.agents;
    let p = &spec.name;
    let agents: Vec<String> = (1..=n).map(|i| format!("{p}_A{i}")).collect();
    let stages: Vec<String> = (1..=n).map(|i| format!("{p}_E{i}")).collect();
    for i in 0..n {
        insert_new(registry, &agents[i], agent_body(&stages[i]))?;
    }
    let mut worlds = Vec::with_capacity(n);
    for i in 0..n {
        let mut pair = Vec::with_capacity(2);
        for a in [false, true] {
            let name = format!("{p}_W{}_{}", i + 1, a as u8);
            let body = world_body(registry, spec, &agents, i, a, 0, &mut vec![false; n])?;
            insert_new(registry, &name, body)?;
            pair.push(name);
        }
        let w1 = pair.pop().unwrap();
        let w0 = pair.pop().unwrap();
        worlds.push((w0, w1));
    }
    // Stages reference each other through the agents, so every stage body
    // is built against the registry before any stage is inserted.
    let mut bodies = Vec::with_capacity(n);
    for i in 0..n {
        let (w0, w1) = &worlds[i];
        bodies.push(comparison_body(registry, w0, w1, &spec.utilities[i])?);
    }
    for (name, body) in stages.iter().zip(bodies) {
        insert_new(registry, name, body)?;
    }
    registry.validate().into_result()?;
    let queries = QuerySet::from_queries(stages.iter().map(|s| Query::new(s.clone(), rat(1, 2))))?;
    Ok(MultiAgentSystem {
        agents,
        stages,
        worlds,
        queries,
    })
}

/// Calls every co-player's agent in index order, then produces the outcome
/// of the assembled profile.
fn world_body(
    registry: &MachineRegistry,
    spec: &MultiAgentSpec,
    agents: &[String],
    me: usize,
    my_action: bool,
    next: usize,
    profile: &mut Vec<bool>,
) -> Result<MachineExpr> {
    let n = spec.agents;
    if next == n {
        profile[me] = my_action;
        let idx = profile.iter().fold(0usize, |acc, &b| acc << 1 | b as usize);
        let label = MultiAgentSpec::profile_label(n, idx);
        return match &spec.outcome {
            OutcomeModel::Identity => Ok(MachineExpr::ret_other(label)),
            OutcomeModel::Machines(prefix) => Ok(registry.body(&format!("{prefix}_{label}"))?.clone()),
        };
    }
    if next == me {
        return world_body(registry, spec, agents, me, my_action, next + 1, profile);
    }
    profile[next] = false;
    let z = world_body(registry, spec, agents, me, my_action, next + 1, profile)?;
    profile[next] = true;
    let o = world_body(registry, spec, agents, me, my_action, next + 1, profile)?;
    Ok(MachineExpr::call(agents[next].clone(), z, o, MachineExpr::ret0()))
}

/// The normal-form game whose payoffs are the agents' expected utilities of
/// each pure profile.
pub fn induced_game(registry: &MachineRegistry, spec: &MultiAgentSpec) -> Result<NormalFormGame> {
    let n = spec.agents;
    let mut tables = vec![Vec::with_capacity(1 << n); n];
    for idx in 0..(1usize << n) {
        let label = MultiAgentSpec::profile_label(n, idx);
        for (i, table) in tables.iter_mut().enumerate() {
            let u = &spec.utilities[i];
            let v = match &spec.outcome {
                OutcomeModel::Identity => u.utility(&label)?.clone(),
                OutcomeModel::Machines(prefix) => {
                    expected_utility(registry, &format!("{prefix}_{label}"), u, &OracleAssignment::empty())?.lo
                }
            };
            table.push(v);
        }
    }
    NormalFormGame::new(
        tables
            .into_iter()
            .map(|table| crate::game::PlayerPayoff {
                deps: (0..n).collect(),
                table,
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::MachineExpr as E;
    use crate::poly::extract_polynomial;
    use crate::rational::int;

    fn dollars() -> (MachineRegistry, WorldModel, UtilityTable) {
        let mut r = MachineRegistry::new();
        r.insert("W0", E::ret_other("$20")).unwrap();
        r.insert("W1", E::ret_other("$15")).unwrap();
        let u = UtilityTable::from_pairs([("$20", int(1)), ("$15", int(0))]).unwrap();
        (r, WorldModel::binary("W0", "W1"), u)
    }

    fn p_one(r: &MachineRegistry, name: &str) -> Rational {
        let i = exact_eval(r, name, &OracleAssignment::empty(), 64).unwrap();
        assert!(i.is_point());
        i.lo
    }

    #[test]
    fn dollar_world_comparison() {
        let (mut r, w, u) = dollars();
        build_e(&mut r, &w, &u, "E").unwrap();
        assert_eq!(p_one(&r, "E"), int(0));
    }

    #[test]
    fn identical_worlds_give_half() {
        let (mut r, _, u) = dollars();
        build_e(&mut r, &WorldModel::binary("W0", "W0"), &u, "E").unwrap();
        assert_eq!(p_one(&r, "E"), rat(1, 2));
    }

    #[test]
    fn missing_utility_is_an_error() {
        let (mut r, w, _) = dollars();
        let u = UtilityTable::from_pairs([("$20", int(1))]).unwrap();
        assert!(matches!(build_e(&mut r, &w, &u, "E"), Err(Error::MissingUtility(l)) if l == "$15"));
    }

    #[test]
    fn agent_body_is_an_oracle_call() {
        let (mut r, w, u) = dollars();
        build_e(&mut r, &w, &u, "E").unwrap();
        build_agent(&mut r, "E", "A").unwrap();
        assert_eq!(r.get("A"), Some(&E::oracle("E", rat(1, 2), E::ret0(), E::ret1())));
    }

    #[test]
    fn two_action_tournament_is_the_plain_agent() {
        let (mut r, w, u) = dollars();
        let a = build_tournament_agent(&mut r, &w, &u, "ag").unwrap();
        assert_eq!(a.stages, vec!["ag_E".to_string()]);
        assert_eq!(r.get(&a.name), Some(&agent_body("ag_E")));
    }

    #[test]
    fn dollar_agent_is_optimal_under_reflective_answer() {
        let (mut r, w, u) = dollars();
        let a = build_cdt_agent(&mut r, &w, &u, "ag").unwrap();
        let x = OracleAssignment::exact(a.queries.clone(), vec![int(0)]).unwrap();
        let rep = verify_optimality(&r, &w, &u, &a, &x, 0.0, 1e-9).unwrap();
        assert!(rep.pass && !rep.tie);
        assert_eq!(rep.best, 0);
        assert_eq!(rep.action_probs, vec![int(1), int(0)]);
        let bad = OracleAssignment::exact(a.queries.clone(), vec![int(1)]).unwrap();
        assert!(!verify_optimality(&r, &w, &u, &a, &bad, 0.0, 1e-9).unwrap().pass);
    }

    #[test]
    fn matching_pennies_polynomials() {
        let mut r = MachineRegistry::new();
        let sys = build_multi_agent(&mut r, &MultiAgentSpec::matching_pennies()).unwrap();
        let p1 = extract_polynomial(&r, &sys.stages[0], &sys.queries).unwrap();
        let p2 = extract_polynomial(&r, &sys.stages[1], &sys.queries).unwrap();
        assert_eq!(p1.to_string(), "x2");
        assert_eq!(p2.to_string(), "1 - x1");
    }

    #[test]
    fn single_agent_system_is_a_plain_comparison() {
        let spec = MultiAgentSpec::from_payoffs("solo", vec![vec![rat(1, 4), rat(3, 4)]]).unwrap();
        let mut r = MachineRegistry::new();
        let sys = build_multi_agent(&mut r, &spec).unwrap();
        assert_eq!(p_one(&r, &sys.stages[0]), rat(3, 4));
    }

    #[test]
    fn induced_game_of_matching_pennies() {
        let r = MachineRegistry::new();
        let g = induced_game(&r, &MultiAgentSpec::matching_pennies()).unwrap();
        assert_eq!(g.payoff(0, &[true, true]), &int(1));
        assert_eq!(g.payoff(1, &[true, true]), &int(0));
    }
}
