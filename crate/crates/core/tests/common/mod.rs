//! Shared fixtures: the `.rom` corpus, seeded instance generators and a
//! brute-force path enumerator used as an independent oracle.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use reflax::analysis::{self, Bound};
use reflax::cdt::{UtilityTable, WorldModel};
use reflax::dsl::{self, Document};
use reflax::game::{gadget_payoffs, NormalFormGame};
use reflax::machine::{MachineExpr as E, MachineRegistry, Output, Query, QuerySet};
use reflax::rational::rat;
use reflax::Rational;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

/// Every corpus document, sorted by file name.
pub fn corpus() -> Vec<(String, Document)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "rom"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let src = std::fs::read_to_string(&p).unwrap();
            let doc = dsl::parse_document(&src)
                .unwrap_or_else(|e| panic!("{}: {}", p.display(), e.first()));
            (p.file_stem().unwrap().to_string_lossy().into_owned(), doc)
        })
        .collect()
}

/// Halted mass per output label, found by walking every computation path of
/// at most `depth` steps. Flips, oracle calls and subroutine entries cost a
/// step each; queries outside `queries` are answered 0.
pub fn brute_force(
    reg: &MachineRegistry,
    name: &str,
    queries: &QuerySet,
    x: &[Rational],
    depth: usize,
) -> BTreeMap<String, Rational> {
    let mut acc = BTreeMap::new();
    let mut frames = Vec::new();
    walk(
        reg,
        queries,
        x,
        reg.body(name).unwrap(),
        &mut frames,
        depth,
        Rational::one(),
        &mut acc,
    );
    acc
}

type Frame<'a> = (&'a E, &'a E, &'a E);

#[allow(clippy::too_many_arguments)]
fn walk<'a>(
    reg: &'a MachineRegistry,
    queries: &QuerySet,
    x: &[Rational],
    e: &'a E,
    frames: &mut Vec<Frame<'a>>,
    left: usize,
    w: Rational,
    acc: &mut BTreeMap<String, Rational>,
) {
    if w.is_zero() {
        return;
    }
    match e {
        E::Ret(o) => match frames.pop() {
            None => *acc.entry(o.label().to_string()).or_insert_with(Rational::zero) += w,
            Some(f) => {
                let next = match o {
                    Output::Zero => f.0,
                    Output::One => f.1,
                    Output::Other(_) => f.2,
                };
                walk(reg, queries, x, next, frames, left, w, acc);
                frames.push(f);
            }
        },
        _ if left == 0 => {}
        E::Flip { p, heads, tails } => {
            walk(reg, queries, x, heads, frames, left - 1, &w * p, acc);
            walk(reg, queries, x, tails, frames, left - 1, &w * (Rational::one() - p), acc);
        }
        E::Oracle {
            target,
            p,
            on_zero,
            on_one,
        } => {
            let a = queries
                .index_of(target, p)
                .map(|i| x[i].clone())
                .unwrap_or_else(Rational::zero);
            walk(reg, queries, x, on_one, frames, left - 1, &w * &a, acc);
            walk(reg, queries, x, on_zero, frames, left - 1, &w * (Rational::one() - a), acc);
        }
        E::Call {
            target,
            on_zero,
            on_one,
            on_other,
        } => {
            frames.push((on_zero, on_one, on_other));
            walk(reg, queries, x, reg.body(target).unwrap(), frames, left - 1, w, acc);
            frames.pop();
        }
    }
}

/// `(lo, hi)` of `P(M = 1)` from the brute-force distribution.
pub fn brute_interval(
    reg: &MachineRegistry,
    name: &str,
    queries: &QuerySet,
    x: &[Rational],
    depth: usize,
) -> (Rational, Rational) {
    let d = brute_force(reg, name, queries, x, depth);
    let get = |l: &str| d.get(l).cloned().unwrap_or_else(Rational::zero);
    (get("1"), Rational::one() - get("0"))
}

/// Expected utility of a halting world, by brute force.
pub fn brute_utility(reg: &MachineRegistry, world: &str, u: &UtilityTable, depth: usize) -> Rational {
    brute_force(reg, world, &QuerySet::new(), &[], depth)
        .iter()
        .map(|(l, m)| m * u.get(l).expect("utility"))
        .sum()
}

pub fn random_prob(rng: &mut impl Rng, max_denom: i64) -> Rational {
    let d = rng.gen_range(1..=max_denom);
    rat(rng.gen_range(0..=d), d)
}

/// A bias strictly inside `(0, 1)`.
pub fn random_bias(rng: &mut impl Rng) -> Rational {
    let d = rng.gen_range(2..=7);
    rat(rng.gen_range(1..d), d)
}

fn random_leaf(rng: &mut impl Rng) -> E {
    match rng.gen_range(0..5) {
        0 | 1 => E::ret0(),
        2 | 3 => E::ret1(),
        _ => E::ret_other("x"),
    }
}

/// A random closed, bounded query set whose machines halt, with at most two
/// queries and at most two oracle calls per run.
pub fn random_query_instance(rng: &mut impl Rng) -> (MachineRegistry, QuerySet) {
    loop {
        let n = rng.gen_range(1..=2);
        let names: Vec<String> = (0..n).map(|i| format!("M{i}")).collect();
        let thresholds = [rat(1, 4), rat(1, 3), rat(1, 2), rat(2, 3), rat(3, 4)];
        let queries: Vec<Query> = names
            .iter()
            .map(|m| Query::new(m.clone(), thresholds.choose(rng).unwrap().clone()))
            .collect();
        let mut reg = MachineRegistry::new();
        // A helper that asks the oracle once, called from the query machines.
        let helper = gen_body(rng, &queries, &[], 2, 1);
        reg.insert("H", helper).unwrap();
        for (i, m) in names.iter().enumerate() {
            let callees: Vec<String> = std::iter::once("H".to_string())
                .chain(names[..i].iter().cloned())
                .collect();
            let body = gen_body(rng, &queries, &callees, 3, 2);
            reg.insert(m.clone(), body).unwrap();
        }
        let qs = QuerySet::from_queries(queries).unwrap();
        let report = analysis::compute_bound(&reg, &qs).unwrap();
        let nontrivial = reg
            .iter()
            .any(|(_, b)| b.references().iter().any(|r| names.iter().any(|n| n == r)));
        if report.is_ok() && nontrivial && matches!(report.bound, Bound::Finite(b) if b <= 2) {
            return (reg, qs);
        }
    }
}

fn gen_body<R: Rng>(rng: &mut R, queries: &[Query], callees: &[String], depth: u32, oracles: u32) -> E {
    if depth == 0 {
        return random_leaf(rng);
    }
    let sub = |rng: &mut R, o: u32| gen_body(rng, queries, callees, depth - 1, o);
    match rng.gen_range(0..10) {
        0 | 1 => random_leaf(rng),
        2..=4 => E::flip(random_bias(rng), sub(rng, oracles), sub(rng, oracles)),
        5..=7 if oracles > 0 => {
            let q = queries.choose(rng).unwrap();
            E::oracle(
                q.machine.clone(),
                q.threshold.clone(),
                sub(rng, oracles - 1),
                sub(rng, oracles - 1),
            )
        }
        8 | 9 if !callees.is_empty() => E::call(
            callees.choose(rng).unwrap().clone(),
            sub(rng, oracles),
            sub(rng, oracles),
            sub(rng, oracles),
        ),
        _ => E::flip(random_bias(rng), sub(rng, oracles), sub(rng, oracles)),
    }
}

/// An oracle-free world over the given outcome labels.
pub fn random_world_body(rng: &mut impl Rng, labels: &[&str], depth: u32) -> E {
    if depth == 0 || rng.gen_bool(0.3) {
        return E::ret_other(*labels.choose(rng).unwrap());
    }
    E::flip(
        random_bias(rng),
        random_world_body(rng, labels, depth - 1),
        random_world_body(rng, labels, depth - 1),
    )
}

pub struct WorldInstance {
    pub registry: MachineRegistry,
    pub world: WorldModel,
    pub utilities: UtilityTable,
    /// Exact expected utility of each action.
    pub values: Vec<Rational>,
}

impl WorldInstance {
    pub fn argmax(&self) -> usize {
        (0..self.values.len())
            .max_by(|&a, &b| self.values[a].cmp(&self.values[b]))
            .unwrap()
    }

    /// Best value minus the runner-up.
    pub fn gap(&self) -> Rational {
        let mut v = self.values.clone();
        v.sort();
        &v[v.len() - 1] - &v[v.len() - 2]
    }
}

/// A halting `k`-action world whose best action wins by more than
/// `min_gap`. With `deterministic`, every action leads to a single outcome.
pub fn random_world(rng: &mut impl Rng, k: usize, deterministic: bool, min_gap: &Rational) -> WorldInstance {
    let labels = ["a", "b", "c", "d", "e"];
    loop {
        let mut registry = MachineRegistry::new();
        let mut names = Vec::new();
        for a in 0..k {
            let name = format!("W{a}");
            let body = if deterministic {
                E::ret_other(labels[rng.gen_range(0..labels.len())])
            } else {
                random_world_body(rng, &labels, 3)
            };
            registry.insert(name.clone(), body).unwrap();
            names.push(name);
        }
        let utilities = UtilityTable::from_pairs(labels.iter().map(|l| (*l, random_prob(rng, 12)))).unwrap();
        let values: Vec<Rational> = names
            .iter()
            .map(|w| brute_utility(&registry, w, &utilities, 16))
            .collect();
        let inst = WorldInstance {
            registry,
            world: WorldModel::new(names).unwrap(),
            utilities,
            values,
        };
        if &inst.gap() > min_gap {
            return inst;
        }
    }
}

/// A registry of three machines that may loop forever, call each other, and
/// ask the oracle about one another, with a matching exact assignment.
pub fn random_loopy_instance(rng: &mut impl Rng) -> (MachineRegistry, QuerySet, Vec<Rational>) {
    let names = ["N0", "N1", "N2"];
    let queries = QuerySet::from_queries(
        names
            .iter()
            .take(2)
            .map(|m| Query::new(*m, random_bias(rng))),
    )
    .unwrap();
    let qs: Vec<Query> = queries.iter().cloned().collect();
    let mut reg = MachineRegistry::new();
    for m in names {
        reg.insert(m, gen_loopy(rng, &names, &qs, 3)).unwrap();
    }
    let x = (0..queries.len()).map(|_| random_prob(rng, 8)).collect();
    (reg, queries, x)
}

fn gen_loopy<R: Rng>(rng: &mut R, names: &[&str], queries: &[Query], depth: u32) -> E {
    if depth == 0 {
        return match rng.gen_range(0..4) {
            0 => E::call(*names.choose(rng).unwrap(), E::ret0(), E::ret1(), E::ret_other("z")),
            _ => random_leaf(rng),
        };
    }
    let sub = |rng: &mut R| gen_loopy(rng, names, queries, depth - 1);
    match rng.gen_range(0..8) {
        0 => random_leaf(rng),
        1..=3 => E::flip(random_bias(rng), sub(rng), sub(rng)),
        4 | 5 => {
            let q = queries.choose(rng).unwrap();
            E::oracle(q.machine.clone(), q.threshold.clone(), sub(rng), sub(rng))
        }
        _ => E::call(*names.choose(rng).unwrap(), sub(rng), sub(rng), sub(rng)),
    }
}

/// Main, copy, aux and a pinning player `Z` that forces the main player to
/// mix with probability `v`. `order[r]` is the index of role `r`.
pub fn pinned_gadget(v: &Rational, order: [usize; 4]) -> NormalFormGame {
    let [main, copy, aux, z] = order;
    NormalFormGame::dense(4, |k, a| {
        if k == main {
            // Gain from playing 1 is 1/2 - s_z.
            if a[main] {
                Rational::from_integer((!a[z] as i64).into())
            } else {
                rat(1, 2)
            }
        } else if k == z {
            // Gain from playing 1 is s_main - v.
            if a[z] {
                Rational::from_integer((a[main] as i64).into())
            } else {
                v.clone()
            }
        } else {
            let (u_copy, u_aux) = gadget_payoffs(a[main], a[copy], a[aux]);
            if k == copy {
                u_copy
            } else {
                u_aux
            }
        }
    })
    .unwrap()
}
