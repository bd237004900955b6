//! Seeded simulation of single machine runs.

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::machine::{MachineRegistry, OracleAssignment, Output, Prob, Query, RunOutcome};
use crate::program::{Node, NodeId, Program};
use crate::rational::{self, Rational};

/// A biased coin that can be tossed without rounding when the bias has a
/// small denominator.
#[derive(Clone, Debug)]
enum Coin {
    Ratio { numer: u64, denom: u64 },
    Float(f64),
}

impl Coin {
    fn exact(p: &Rational) -> Self {
        match (p.numer().to_u64(), p.denom().to_u64()) {
            (Some(numer), Some(denom)) => Coin::Ratio { numer, denom },
            _ => Coin::Float(rational::to_f64(p)),
        }
    }

    fn of(p: &Prob) -> Self {
        match p {
            Prob::Exact(r) => Coin::exact(r),
            Prob::Float(x) => Coin::Float(*x),
        }
    }

    fn toss(&self, rng: &mut ChaCha8Rng) -> bool {
        match *self {
            Coin::Ratio { numer, denom } => rng.gen_range(0..denom) < numer,
            Coin::Float(x) => rng.gen::<f64>() < x,
        }
    }
}

/// A registry prepared for repeated sampling under one oracle.
pub struct Sampler {
    program: Program,
    flip_coins: Vec<Option<Coin>>,
    oracle_coins: Vec<Coin>,
    queries: Vec<Query>,
}

impl Sampler {
    pub fn new(registry: &MachineRegistry, oracle: &OracleAssignment) -> Result<Self> {
        registry.validate().into_result()?;
        let program = Program::compile(registry, oracle.queries())?;
        let flip_coins = program
            .nodes
            .iter()
            .map(|n| match n {
                Node::Flip { p, .. } => Some(Coin::exact(p)),
                _ => None,
            })
            .collect();
        Ok(Self {
            flip_coins,
            oracle_coins: oracle.probs().iter().map(Coin::of).collect(),
            queries: oracle.queries().iter().cloned().collect(),
            program,
        })
    }

    pub fn run(&self, name: &str, seed: u64, step_budget: u64) -> Result<RunOutcome> {
        self.run_observed(name, seed, step_budget, |_| {})
    }

    /// Like [`Sampler::run`], reporting every oracle query as it is issued.
    /// Queries outside the oracle's set are reported as `None`.
    pub fn run_observed(
        &self,
        name: &str,
        seed: u64,
        step_budget: u64,
        mut on_query: impl FnMut(Option<&Query>),
    ) -> Result<RunOutcome> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cur = self.program.root(name)?;
        // Pending call frames: (on_zero, on_one, on_other).
        let mut frames: Vec<(NodeId, NodeId, NodeId)> = Vec::new();
        let mut steps = 0u64;
        loop {
            match &self.program.nodes[cur] {
                Node::Leaf(o) => match frames.pop() {
                    None => return Ok(o.clone().into()),
                    Some((z, one, other)) => {
                        cur = match o {
                            Output::Zero => z,
                            Output::One => one,
                            Output::Other(_) => other,
                        }
                    }
                },
                node => {
                    if steps == step_budget {
                        return Ok(RunOutcome::BudgetExhausted);
                    }
                    steps += 1;
                    cur = match node {
                        Node::Flip { heads, tails, .. } => {
                            let coin = self.flip_coins[cur].as_ref().expect("flip coin");
                            if coin.toss(&mut rng) {
                                *heads
                            } else {
                                *tails
                            }
                        }
                        Node::Oracle {
                            query,
                            on_zero,
                            on_one,
                        } => {
                            on_query(query.map(|i| &self.queries[i]));
                            let answer = match query {
                                Some(i) => self.oracle_coins[*i].toss(&mut rng),
                                None => false,
                            };
                            if answer {
                                *on_one
                            } else {
                                *on_zero
                            }
                        }
                        Node::Call {
                            target,
                            on_zero,
                            on_one,
                            on_other,
                        } => {
                            frames.push((*on_zero, *on_one, *on_other));
                            self.program.root_of(*target)
                        }
                        Node::Leaf(_) => unreachable!(),
                    };
                }
            }
        }
    }
}

/// One seeded execution of `name`. Every flip and oracle call draws fresh
/// randomness; flips, oracle calls and call entries each consume one step.
pub fn sample_run(
    registry: &MachineRegistry,
    name: &str,
    oracle: &OracleAssignment,
    seed: u64,
    step_budget: u64,
) -> Result<RunOutcome> {
    Sampler::new(registry, oracle)?.run(name, seed, step_budget)
}

/// Empirical outcome counts over `runs` seeded executions (seeds
/// `base_seed, base_seed + 1, ...`).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Frequencies {
    pub runs: u64,
    pub one: u64,
    pub zero: u64,
    pub other: u64,
    pub timeout: u64,
}

impl Frequencies {
    pub fn fraction(&self, count: u64) -> f64 {
        if self.runs == 0 {
            0.0
        } else {
            count as f64 / self.runs as f64
        }
    }
}

impl Sampler {
    pub fn frequencies(
        &self,
        name: &str,
        runs: u64,
        base_seed: u64,
        step_budget: u64,
    ) -> Result<Frequencies> {
        use rayon::prelude::*;
        self.program.root(name)?;
        let outcomes: Vec<RunOutcome> = (0..runs)
            .into_par_iter()
            .map(|r| self.run(name, base_seed.wrapping_add(r), step_budget))
            .collect::<Result<_>>()?;
        let mut f = Frequencies {
            runs,
            ..Default::default()
        };
        for o in outcomes {
            match o {
                RunOutcome::One => f.one += 1,
                RunOutcome::Zero => f.zero += 1,
                RunOutcome::Other(_) => f.other += 1,
                RunOutcome::BudgetExhausted => f.timeout += 1,
            }
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{MachineExpr as E, QuerySet};
    use crate::rational::rat;

    fn one(name: &str, e: E) -> MachineRegistry {
        let mut r = MachineRegistry::new();
        r.insert(name, e).unwrap();
        r
    }

    #[test]
    fn ret_one_always_one() {
        let r = one("A", E::ret1());
        for seed in 0..10 {
            assert_eq!(
                sample_run(&r, "A", &OracleAssignment::empty(), seed, 10).unwrap(),
                RunOutcome::One
            );
        }
    }

    #[test]
    fn self_call_loop_exhausts_budget() {
        let r = one("W", E::call("W", E::ret0(), E::ret1(), E::ret0()));
        assert_eq!(
            sample_run(&r, "W", &OracleAssignment::empty(), 0, 1000).unwrap(),
            RunOutcome::BudgetExhausted
        );
    }

    #[test]
    fn same_seed_same_outcome() {
        let r = one("F", E::flip(rat(1, 2), E::ret1(), E::ret0()));
        let s = Sampler::new(&r, &OracleAssignment::empty()).unwrap();
        for seed in 0..50 {
            assert_eq!(s.run("F", seed, 10).unwrap(), s.run("F", seed, 10).unwrap());
        }
    }

    #[test]
    fn liar_is_one_half_the_time() {
        let r = one("L", E::oracle("L", rat(1, 2), E::ret1(), E::ret0()));
        let q = QuerySet::from_queries([Query::new("L", rat(1, 2))]).unwrap();
        let x = OracleAssignment::exact(q, vec![rat(1, 2)]).unwrap();
        let s = Sampler::new(&r, &x).unwrap();
        let f = s.frequencies("L", 100_000, 0, 10).unwrap();
        assert!((f.fraction(f.one) - 0.5).abs() < 0.01, "{f:?}");
    }

    #[test]
    fn queries_outside_the_set_answer_zero() {
        let r = one("A", E::oracle("A", rat(1, 3), E::ret0(), E::ret1()));
        let q = QuerySet::from_queries([Query::new("A", rat(1, 2))]).unwrap();
        let x = OracleAssignment::exact(q, vec![rat(1, 1)]).unwrap();
        let s = Sampler::new(&r, &x).unwrap();
        let mut outside = 0;
        for seed in 0..100 {
            let o = s
                .run_observed("A", seed, 10, |q| outside += q.is_none() as u32)
                .unwrap();
            assert_eq!(o, RunOutcome::Zero);
        }
        assert_eq!(outside, 100);
    }
}
