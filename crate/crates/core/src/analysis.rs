//! Static analysis of machines relative to a query set.
//!
//! A query set is closed when its machines only ever ask the oracle about
//! queries in the set, and bounded when they ask at most `B_R` times on any
//! execution. Boundedness is decided conservatively: subroutine calls are
//! in-lined, and any cycle in the call graph makes the set unbounded.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::machine::{MachineExpr, MachineRegistry, Output, Query, QuerySet};

/// An oracle call that leaves the query set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClosedFinding {
    /// The machine whose body contains the call.
    pub machine: String,
    pub query: Query,
}

impl fmt::Display for ClosedFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} queries {} outside R", self.machine, self.query)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    Finite(u32),
    Unbounded,
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(b) => write!(f, "{b}"),
            Bound::Unbounded => f.write_str("unbounded"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundReport {
    pub closed: bool,
    pub findings: Vec<ClosedFinding>,
    pub bound: Bound,
    /// Every path of every machine in the set reaches a leaf.
    pub halt_certified: bool,
    /// Longest path in steps with subroutines in-lined, when finite. An exact
    /// evaluation with at least this depth budget is complete.
    pub max_steps: Option<usize>,
}

impl BoundReport {
    pub fn is_ok(&self) -> bool {
        self.closed && self.halt_certified && matches!(self.bound, Bound::Finite(_))
    }

    pub fn bound_value(&self) -> Option<u32> {
        match self.bound {
            Bound::Finite(b) => Some(b),
            Bound::Unbounded => None,
        }
    }
}

/// Machines reachable from `roots` through subroutine calls (oracle targets
/// are asked about, not run).
fn call_closure<'a>(registry: &'a MachineRegistry, roots: &[&'a str]) -> Result<Vec<&'a str>> {
    let mut seen: HashSet<&str> = HashSet::new();
    let mut order = Vec::new();
    let mut stack: Vec<&str> = roots.to_vec();
    while let Some(name) = stack.pop() {
        if !seen.insert(name) {
            continue;
        }
        let body = registry.body(name)?;
        order.push(name);
        body.visit(&mut |e| {
            if let MachineExpr::Call { target, .. } = e {
                stack.push(target.as_str());
            }
        });
    }
    Ok(order)
}

/// Every oracle call, reachable from a machine in `queries`, on a pair
/// outside `queries`. Empty iff the set is closed.
pub fn check_closed(registry: &MachineRegistry, queries: &QuerySet) -> Result<Vec<ClosedFinding>> {
    registry.validate().into_result()?;
    let roots: Vec<&str> = queries.iter().map(|q| q.machine.as_str()).collect();
    let mut findings = Vec::new();
    let mut seen = HashSet::new();
    for name in call_closure(registry, &roots)? {
        registry.body(name)?.visit(&mut |e| {
            if let MachineExpr::Oracle { target, p, .. } = e {
                if !queries.contains(target, p) {
                    let f = ClosedFinding {
                        machine: name.to_string(),
                        query: Query::new(target.clone(), p.clone()),
                    };
                    if seen.insert(f.clone()) {
                        findings.push(f);
                    }
                }
            }
        });
    }
    Ok(findings)
}

#[derive(Clone, Copy, Default)]
struct PathCost {
    oracle_calls: u32,
    steps: usize,
}

/// Worst-case oracle calls and steps for machines with an acyclic call
/// graph. `None` when a cycle is reachable.
struct CostAnalysis<'a> {
    registry: &'a MachineRegistry,
    memo: HashMap<&'a str, PathCost>,
    on_stack: HashSet<&'a str>,
}

impl<'a> CostAnalysis<'a> {
    fn new(registry: &'a MachineRegistry) -> Self {
        Self {
            registry,
            memo: HashMap::new(),
            on_stack: HashSet::new(),
        }
    }

    fn machine(&mut self, name: &'a str) -> Result<Option<PathCost>> {
        if let Some(c) = self.memo.get(name) {
            return Ok(Some(*c));
        }
        if !self.on_stack.insert(name) {
            return Ok(None);
        }
        let body = self.registry.body(name)?;
        let cost = self.expr(body)?;
        self.on_stack.remove(name);
        if let Some(c) = cost {
            self.memo.insert(name, c);
        }
        Ok(cost)
    }

    fn expr(&mut self, e: &'a MachineExpr) -> Result<Option<PathCost>> {
        let max2 = |a: PathCost, b: PathCost| PathCost {
            oracle_calls: a.oracle_calls.max(b.oracle_calls),
            steps: a.steps.max(b.steps),
        };
        Ok(match e {
            MachineExpr::Ret(_) => Some(PathCost::default()),
            MachineExpr::Flip { heads, tails, .. } => {
                match (self.expr(heads)?, self.expr(tails)?) {
                    (Some(h), Some(t)) => {
                        let m = max2(h, t);
                        Some(PathCost {
                            oracle_calls: m.oracle_calls,
                            steps: m.steps + 1,
                        })
                    }
                    _ => None,
                }
            }
            MachineExpr::Oracle {
                on_zero, on_one, ..
            } => match (self.expr(on_zero)?, self.expr(on_one)?) {
                (Some(z), Some(o)) => {
                    let m = max2(z, o);
                    Some(PathCost {
                        oracle_calls: m.oracle_calls + 1,
                        steps: m.steps + 1,
                    })
                }
                _ => None,
            },
            MachineExpr::Call {
                target,
                on_zero,
                on_one,
                on_other,
            } => {
                let t = self.machine(target)?;
                let z = self.expr(on_zero)?;
                let o = self.expr(on_one)?;
                let x = self.expr(on_other)?;
                match (t, z, o, x) {
                    (Some(t), Some(z), Some(o), Some(x)) => {
                        let b = max2(max2(z, o), x);
                        Some(PathCost {
                            oracle_calls: t.oracle_calls + b.oracle_calls,
                            steps: 1 + t.steps + b.steps,
                        })
                    }
                    _ => None,
                }
            }
        })
    }
}

/// Closedness, the oracle-call bound `B_R` and halting certification for
/// the machines of `queries`.
pub fn compute_bound(registry: &MachineRegistry, queries: &QuerySet) -> Result<BoundReport> {
    let findings = check_closed(registry, queries)?;
    let mut analysis = CostAnalysis::new(registry);
    let mut bound = Some(PathCost::default());
    for q in queries {
        bound = match (bound, analysis.machine(&q.machine)?) {
            (Some(acc), Some(c)) => Some(PathCost {
                oracle_calls: acc.oracle_calls.max(c.oracle_calls),
                steps: acc.steps.max(c.steps),
            }),
            _ => None,
        };
    }
    Ok(BoundReport {
        closed: findings.is_empty(),
        findings,
        bound: bound.map_or(Bound::Unbounded, |c| Bound::Finite(c.oracle_calls)),
        halt_certified: bound.is_some(),
        max_steps: bound.map(|c| c.steps),
    })
}

/// Worst-case oracle calls and steps of a single machine, or `None` when
/// its call graph has a cycle.
pub fn machine_cost(registry: &MachineRegistry, name: &str) -> Result<Option<(u32, usize)>> {
    registry.validate().into_result()?;
    let mut analysis = CostAnalysis::new(registry);
    Ok(analysis
        .machine(name)?
        .map(|c| (c.oracle_calls, c.steps)))
}

/// Requires `name` to have an acyclic call graph; returns its step bound.
pub(crate) fn require_halting(registry: &MachineRegistry, name: &str) -> Result<usize> {
    machine_cost(registry, name)?
        .map(|(_, steps)| steps)
        .ok_or_else(|| Error::Unbounded(name.to_string()))
}

/// Which outputs a machine can possibly produce.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OutputSet {
    pub zero: bool,
    pub one: bool,
    pub other: bool,
}

impl OutputSet {
    pub fn contains(&self, o: &Output) -> bool {
        match o {
            Output::Zero => self.zero,
            Output::One => self.one,
            Output::Other(_) => self.other,
        }
    }

    fn union(self, b: OutputSet) -> OutputSet {
        OutputSet {
            zero: self.zero || b.zero,
            one: self.one || b.one,
            other: self.other || b.other,
        }
    }
}

/// Over-approximation of every machine's possible outputs (least fixed
/// point). A machine that can never halt gets the empty set.
pub fn possible_outputs(registry: &MachineRegistry) -> HashMap<String, OutputSet> {
    let mut sets: HashMap<String, OutputSet> = registry
        .names()
        .map(|n| (n.to_string(), OutputSet::default()))
        .collect();
    loop {
        let mut changed = false;
        for (name, body) in registry.iter() {
            let s = expr_outputs(body, &sets);
            if sets.get(name) != Some(&s) {
                sets.insert(name.to_string(), s);
                changed = true;
            }
        }
        if !changed {
            return sets;
        }
    }
}

pub(crate) fn expr_outputs(e: &MachineExpr, sets: &HashMap<String, OutputSet>) -> OutputSet {
    match e {
        MachineExpr::Ret(o) => {
            let mut s = OutputSet::default();
            match o {
                Output::Zero => s.zero = true,
                Output::One => s.one = true,
                Output::Other(_) => s.other = true,
            }
            s
        }
        MachineExpr::Flip { heads, tails, .. } => {
            expr_outputs(heads, sets).union(expr_outputs(tails, sets))
        }
        MachineExpr::Oracle {
            on_zero, on_one, ..
        } => expr_outputs(on_zero, sets).union(expr_outputs(on_one, sets)),
        MachineExpr::Call {
            target,
            on_zero,
            on_one,
            on_other,
        } => {
            let t = sets.get(target).copied().unwrap_or_default();
            let mut s = OutputSet::default();
            if t.zero {
                s = s.union(expr_outputs(on_zero, sets));
            }
            if t.one {
                s = s.union(expr_outputs(on_one, sets));
            }
            if t.other {
                s = s.union(expr_outputs(on_other, sets));
            }
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::MachineExpr as E;
    use crate::rational::rat;

    fn reg(defs: Vec<(&str, E)>) -> MachineRegistry {
        let mut r = MachineRegistry::new();
        for (n, e) in defs {
            r.insert(n, e).unwrap();
        }
        r
    }

    fn qs(qs: &[(&str, (i64, i64))]) -> QuerySet {
        QuerySet::from_queries(qs.iter().map(|(n, (a, b))| Query::new(*n, rat(*a, *b)))).unwrap()
    }

    #[test]
    fn liar_is_closed_with_bound_one() {
        let r = reg(vec![("L", E::oracle("L", rat(1, 2), E::ret1(), E::ret0()))]);
        let q = qs(&[("L", (1, 2))]);
        assert!(check_closed(&r, &q).unwrap().is_empty());
        let b = compute_bound(&r, &q).unwrap();
        assert_eq!(b.bound, Bound::Finite(1));
        assert!(b.halt_certified && b.closed);
        assert_eq!(b.max_steps, Some(1));
    }

    #[test]
    fn query_outside_set_is_found() {
        let r = reg(vec![
            ("A", E::oracle("B", rat(1, 3), E::ret0(), E::ret1())),
            ("B", E::ret1()),
        ]);
        let f = check_closed(&r, &qs(&[("A", (1, 2))])).unwrap();
        assert_eq!(f, vec![ClosedFinding { machine: "A".into(), query: Query::new("B", rat(1, 3)) }]);
    }

    #[test]
    fn oracle_free_set_is_closed() {
        let r = reg(vec![("A", E::flip(rat(1, 2), E::ret0(), E::ret1()))]);
        let q = qs(&[("A", (1, 2))]);
        assert!(check_closed(&r, &q).unwrap().is_empty());
        assert_eq!(compute_bound(&r, &q).unwrap().bound, Bound::Finite(0));
    }

    #[test]
    fn longest_path_counts_nested_calls() {
        let r = reg(vec![(
            "A",
            E::oracle("A", rat(1, 2), E::oracle("A", rat(1, 2), E::ret0(), E::ret1()), E::ret1()),
        )]);
        assert_eq!(compute_bound(&r, &qs(&[("A", (1, 2))])).unwrap().bound, Bound::Finite(2));
    }

    #[test]
    fn calls_are_inlined() {
        let r = reg(vec![
            ("L", E::oracle("L", rat(1, 2), E::ret1(), E::ret0())),
            ("B", E::call("L", E::call("L", E::ret0(), E::ret1(), E::ret0()), E::ret1(), E::ret0())),
        ]);
        let b = compute_bound(&r, &qs(&[("L", (1, 2)), ("B", (1, 3))])).unwrap();
        assert_eq!(b.bound, Bound::Finite(2));
        assert_eq!(b.max_steps, Some(4));
    }

    #[test]
    fn self_call_is_unbounded() {
        let r = reg(vec![("A", E::call("A", E::ret0(), E::ret1(), E::ret0()))]);
        let b = compute_bound(&r, &qs(&[("A", (1, 2))])).unwrap();
        assert_eq!(b.bound, Bound::Unbounded);
        assert!(!b.halt_certified);
        assert!(!b.is_ok());
    }

    #[test]
    fn output_sets() {
        let r = reg(vec![
            ("A", E::oracle("A", rat(1, 2), E::ret0(), E::ret1())),
            ("W", E::call("A", E::ret_other("x"), E::ret_other("y"), E::ret0())),
            ("Om", E::call("Om", E::ret0(), E::ret1(), E::ret0())),
        ]);
        let s = possible_outputs(&r);
        assert_eq!(s["A"], OutputSet { zero: true, one: true, other: false });
        assert_eq!(s["W"], OutputSet { zero: false, one: false, other: true });
        assert_eq!(s["Om"], OutputSet::default());
    }
}
