//! Exact evaluation of machine output probabilities.
//!
//! The computation tree is expanded exhaustively up to a step budget. Every
//! flip, oracle call and subroutine call costs one step, and the steps spent
//! inside a subroutine count against the caller's budget, so the result is
//! exactly the distribution a sampled run with the same step budget would
//! have. Mass that has not reached a leaf within the budget is left
//! unassigned, which turns the answer into an interval:
//!
//! `lo = P(output = 1 within budget) <= P(M = 1)`
//! `hi = 1 - P(output = 0 within budget) >= P(M != 0)`
//!
//! Outputs outside `{0, 1}` count toward `hi` only.

use num_traits::{One, Zero};

use crate::error::Result;
use crate::machine::{MachineRegistry, OracleAssignment, Output};
use crate::program::{Node, Program};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalInterval {
    pub lo: Rational,
    pub hi: Rational,
}

impl EvalInterval {
    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }
}

/// Probability mass of each output class reached within the budget.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OutputMass {
    pub zero: Rational,
    pub one: Rational,
    pub other: Rational,
}

impl OutputMass {
    pub fn halted(&self) -> Rational {
        &self.zero + &self.one + &self.other
    }

    pub fn interval(&self) -> EvalInterval {
        EvalInterval {
            lo: self.one.clone(),
            hi: Rational::one() - &self.zero,
        }
    }

    fn unit(o: &Output) -> Self {
        let mut m = OutputMass::default();
        *match o {
            Output::Zero => &mut m.zero,
            Output::One => &mut m.one,
            Output::Other(_) => &mut m.other,
        } = Rational::one();
        m
    }

    fn add_scaled(&mut self, w: &Rational, m: &OutputMass) {
        if w.is_zero() {
            return;
        }
        for (dst, src) in [
            (&mut self.zero, &m.zero),
            (&mut self.one, &m.one),
            (&mut self.other, &m.other),
        ] {
            if !src.is_zero() {
                *dst += w * src;
            }
        }
    }

    fn is_zero(&self) -> bool {
        self.zero.is_zero() && self.one.is_zero() && self.other.is_zero()
    }
}

/// `[lo, hi]` for `P(M = 1)` under `oracle`, expanded to `depth_budget` steps.
pub fn exact_eval(
    registry: &MachineRegistry,
    name: &str,
    oracle: &OracleAssignment,
    depth_budget: usize,
) -> Result<EvalInterval> {
    Ok(exact_distribution(registry, name, oracle, depth_budget)?.interval())
}

/// The halted mass of each output class within `depth_budget` steps.
pub fn exact_distribution(
    registry: &MachineRegistry,
    name: &str,
    oracle: &OracleAssignment,
    depth_budget: usize,
) -> Result<OutputMass> {
    registry.validate().into_result()?;
    let program = Program::compile(registry, oracle.queries())?;
    let root = program.root(name)?;
    let x = oracle.exact_probs();
    Ok(StepTable::build(&program, root, &x, depth_budget).total(root))
}

/// `at[node][k]`: mass reaching a leaf in exactly `k` steps when starting at
/// `node`. `None` stands for zero mass.
struct StepTable {
    at: Vec<Vec<Option<OutputMass>>>,
}

impl StepTable {
    fn build(program: &Program, root: usize, x: &[Rational], depth: usize) -> Self {
        let reachable = program.reachable(root);
        let mut at: Vec<Vec<Option<OutputMass>>> = Vec::new();
        at.resize_with(program.nodes.len(), Vec::new);
        for &id in &reachable {
            let mut row = vec![None; depth + 1];
            if let Node::Leaf(o) = &program.nodes[id] {
                row[0] = Some(OutputMass::unit(o));
            }
            at[id] = row;
        }
        // Level k only reads levels < k, so the order within a level is free.
        for k in 1..=depth {
            for &id in &reachable {
                let mass = match &program.nodes[id] {
                    Node::Leaf(_) => continue,
                    Node::Flip { p, heads, tails } => {
                        let mut m = OutputMass::default();
                        if let Some(h) = &at[*heads][k - 1] {
                            m.add_scaled(p, h);
                        }
                        if let Some(t) = &at[*tails][k - 1] {
                            m.add_scaled(&(Rational::one() - p), t);
                        }
                        m
                    }
                    Node::Oracle {
                        query,
                        on_zero,
                        on_one,
                    } => {
                        let q = query.map(|i| x[i].clone()).unwrap_or_else(Rational::zero);
                        let mut m = OutputMass::default();
                        if let Some(o) = &at[*on_one][k - 1] {
                            m.add_scaled(&q, o);
                        }
                        if let Some(z) = &at[*on_zero][k - 1] {
                            m.add_scaled(&(Rational::one() - &q), z);
                        }
                        m
                    }
                    Node::Call {
                        target,
                        on_zero,
                        on_one,
                        on_other,
                    } => {
                        let t = program.root_of(*target);
                        let mut m = OutputMass::default();
                        for j in 0..k {
                            let Some(sub) = &at[t][j] else { continue };
                            let rest = k - 1 - j;
                            for (w, branch) in [
                                (&sub.zero, on_zero),
                                (&sub.one, on_one),
                                (&sub.other, on_other),
                            ] {
                                if let Some(b) = &at[*branch][rest] {
                                    m.add_scaled(w, b);
                                }
                            }
                        }
                        m
                    }
                };
                if !mass.is_zero() {
                    at[id][k] = Some(mass);
                }
            }
        }
        StepTable { at }
    }

    fn total(&self, root: usize) -> OutputMass {
        let mut sum = OutputMass::default();
        for m in self.at[root].iter().flatten() {
            sum.add_scaled(&Rational::one(), m);
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{MachineExpr as E, Query, QuerySet};
    use crate::rational::{int, rat};

    fn reg(defs: Vec<(&str, E)>) -> MachineRegistry {
        let mut r = MachineRegistry::new();
        for (n, e) in defs {
            r.insert(n, e).unwrap();
        }
        r
    }

    fn liar_oracle(x: Rational) -> OracleAssignment {
        let r = QuerySet::from_queries([Query::new("L", rat(1, 2))]).unwrap();
        OracleAssignment::exact(r, vec![x]).unwrap()
    }

    #[test]
    fn biased_flip() {
        let r = reg(vec![("F", E::flip(rat(1, 3), E::ret1(), E::ret0()))]);
        let iv = exact_eval(&r, "F", &OracleAssignment::empty(), 64).unwrap();
        assert_eq!(iv, EvalInterval { lo: rat(1, 3), hi: rat(1, 3) });
    }

    #[test]
    fn liar_returns_one_when_oracle_says_zero() {
        let r = reg(vec![("L", E::oracle("L", rat(1, 2), E::ret1(), E::ret0()))]);
        let iv = exact_eval(&r, "L", &liar_oracle(rat(2, 5)), 64).unwrap();
        assert_eq!(iv, EvalInterval { lo: rat(3, 5), hi: rat(3, 5) });
    }

    #[test]
    fn pure_loop_is_unknown_at_every_budget() {
        let r = reg(vec![("W", E::call("W", E::ret1(), E::ret1(), E::ret1()))]);
        for budget in [0, 1, 5, 64] {
            let iv = exact_eval(&r, "W", &OracleAssignment::empty(), budget).unwrap();
            assert_eq!(iv, EvalInterval { lo: int(0), hi: int(1) });
        }
    }

    #[test]
    fn other_output_counts_toward_hi_only() {
        let r = reg(vec![("D", E::ret_other("$15"))]);
        let iv = exact_eval(&r, "D", &OracleAssignment::empty(), 64).unwrap();
        assert_eq!(iv, EvalInterval { lo: int(0), hi: int(1) });
        let r = reg(vec![("D", E::flip(rat(1, 4), E::ret_other("x"), E::ret0()))]);
        let iv = exact_eval(&r, "D", &OracleAssignment::empty(), 64).unwrap();
        assert_eq!(iv, EvalInterval { lo: int(0), hi: rat(1, 4) });
    }

    #[test]
    fn zero_budget_only_sees_leaves() {
        let r = reg(vec![
            ("A", E::ret1()),
            ("B", E::call("A", E::ret0(), E::ret1(), E::ret0())),
        ]);
        let o = OracleAssignment::empty();
        assert_eq!(exact_eval(&r, "A", &o, 0).unwrap().lo, int(1));
        assert_eq!(exact_eval(&r, "B", &o, 0).unwrap(), EvalInterval { lo: int(0), hi: int(1) });
        assert_eq!(exact_eval(&r, "B", &o, 1).unwrap().lo, int(1));
    }

    #[test]
    fn steps_inside_subroutines_count_against_the_caller() {
        // B spends one step on the call and one inside A's flip.
        let r = reg(vec![
            ("A", E::flip(rat(1, 2), E::ret1(), E::ret0())),
            ("B", E::call("A", E::ret0(), E::ret1(), E::ret0())),
        ]);
        let o = OracleAssignment::empty();
        assert_eq!(exact_eval(&r, "B", &o, 1).unwrap(), EvalInterval { lo: int(0), hi: int(1) });
        assert_eq!(exact_eval(&r, "B", &o, 2).unwrap(), EvalInterval { lo: rat(1, 2), hi: rat(1, 2) });
    }

    #[test]
    fn geometric_retry_converges_from_both_sides() {
        // G = flip(1/2, ret 1, call(G, ...)): halts a.s. with output 1.
        let r = reg(vec![(
            "G",
            E::flip(rat(1, 2), E::ret1(), E::call("G", E::ret0(), E::ret1(), E::ret0())),
        )]);
        let o = OracleAssignment::empty();
        let mut prev = exact_eval(&r, "G", &o, 0).unwrap();
        for budget in 1..20 {
            let iv = exact_eval(&r, "G", &o, budget).unwrap();
            assert!(iv.lo >= prev.lo && iv.hi <= prev.hi);
            assert_eq!(iv.hi, int(1));
            prev = iv;
        }
        assert!(prev.lo > rat(999, 1000));
    }

    #[test]
    fn dangling_reference_is_an_error() {
        let r = reg(vec![("A", E::call("B", E::ret0(), E::ret1(), E::ret0()))]);
        assert!(exact_eval(&r, "A", &OracleAssignment::empty(), 8).is_err());
        let r = reg(vec![("A", E::ret1())]);
        assert!(exact_eval(&r, "Z", &OracleAssignment::empty(), 8).is_err());
    }
}
