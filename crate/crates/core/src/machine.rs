//! The probabilistic oracle machine model.
//!
//! A machine is a finite expression tree. Leaves halt with an output; inner
//! nodes flip a biased coin, ask the oracle about a `(machine, threshold)`
//! query, or run another machine as a subroutine and branch on its output.
//! Machines refer to each other by name through a [`MachineRegistry`], which
//! is how self reference and mutual reference are expressed.

use std::collections::HashMap;
use std::fmt;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// What a halted machine returns.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Output {
    Zero,
    One,
    /// Any output outside `{0, 1}`, identified by its label.
    Other(String),
}

impl Output {
    pub fn bit(b: bool) -> Self {
        if b {
            Output::One
        } else {
            Output::Zero
        }
    }

    /// The label used when an output is looked up in a utility table.
    /// Bits map to `"0"` and `"1"`.
    pub fn label(&self) -> &str {
        match self {
            Output::Zero => "0",
            Output::One => "1",
            Output::Other(l) => l,
        }
    }
}

/// The result of one sampled execution.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RunOutcome {
    Zero,
    One,
    Other(String),
    BudgetExhausted,
}

impl From<Output> for RunOutcome {
    fn from(o: Output) -> Self {
        match o {
            Output::Zero => RunOutcome::Zero,
            Output::One => RunOutcome::One,
            Output::Other(l) => RunOutcome::Other(l),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MachineExpr {
    Ret(Output),
    /// Heads with probability `p`.
    Flip {
        p: Rational,
        heads: Box<MachineExpr>,
        tails: Box<MachineExpr>,
    },
    /// Ask the oracle about `(target, p)`.
    Oracle {
        target: String,
        p: Rational,
        on_zero: Box<MachineExpr>,
        on_one: Box<MachineExpr>,
    },
    /// Run `target` and continue on the branch matching its output.
    Call {
        target: String,
        on_zero: Box<MachineExpr>,
        on_one: Box<MachineExpr>,
        on_other: Box<MachineExpr>,
    },
}

impl MachineExpr {
    pub fn ret0() -> Self {
        MachineExpr::Ret(Output::Zero)
    }

    pub fn ret1() -> Self {
        MachineExpr::Ret(Output::One)
    }

    pub fn ret_bit(b: bool) -> Self {
        MachineExpr::Ret(Output::bit(b))
    }

    pub fn ret_other(label: impl Into<String>) -> Self {
        MachineExpr::Ret(Output::Other(label.into()))
    }

    pub fn flip(p: Rational, heads: MachineExpr, tails: MachineExpr) -> Self {
        MachineExpr::Flip {
            p,
            heads: Box::new(heads),
            tails: Box::new(tails),
        }
    }

    pub fn oracle(
        target: impl Into<String>,
        p: Rational,
        on_zero: MachineExpr,
        on_one: MachineExpr,
    ) -> Self {
        MachineExpr::Oracle {
            target: target.into(),
            p,
            on_zero: Box::new(on_zero),
            on_one: Box::new(on_one),
        }
    }

    pub fn call(
        target: impl Into<String>,
        on_zero: MachineExpr,
        on_one: MachineExpr,
        on_other: MachineExpr,
    ) -> Self {
        MachineExpr::Call {
            target: target.into(),
            on_zero: Box::new(on_zero),
            on_one: Box::new(on_one),
            on_other: Box::new(on_other),
        }
    }

    /// Pre-order traversal over this expression's nodes.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a MachineExpr)) {
        f(self);
        match self {
            MachineExpr::Ret(_) => {}
            MachineExpr::Flip { heads, tails, .. } => {
                heads.visit(f);
                tails.visit(f);
            }
            MachineExpr::Oracle {
                on_zero, on_one, ..
            } => {
                on_zero.visit(f);
                on_one.visit(f);
            }
            MachineExpr::Call {
                on_zero,
                on_one,
                on_other,
                ..
            } => {
                on_zero.visit(f);
                on_one.visit(f);
                on_other.visit(f);
            }
        }
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    /// Names of all machines this expression calls or queries.
    pub fn references(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |e| match e {
            MachineExpr::Oracle { target, .. } | MachineExpr::Call { target, .. } => {
                out.push(target.as_str())
            }
            _ => {}
        });
        out
    }
}

/// Something wrong with a registry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValidationFinding {
    DanglingReference { machine: String, target: String },
    ProbabilityOutOfRange { machine: String, p: Rational },
}

impl fmt::Display for ValidationFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationFinding::DanglingReference { machine, target } => {
                write!(f, "machine `{machine}` refers to undefined machine `{target}`")
            }
            ValidationFinding::ProbabilityOutOfRange { machine, p } => write!(
                f,
                "machine `{machine}` uses probability {} outside [0, 1]",
                rational::format_rational(p)
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<ValidationFinding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_empty() {
            Ok(())
        } else {
            let msgs: Vec<String> = self.findings.iter().map(|f| f.to_string()).collect();
            Err(Error::InvalidRegistry(msgs.join("; ")))
        }
    }
}

/// Named machines, kept in declaration order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MachineRegistry {
    machines: IndexMap<String, MachineExpr>,
}

impl MachineRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, expr: MachineExpr) -> Result<()> {
        let name = name.into();
        if self.machines.contains_key(&name) {
            return Err(Error::DuplicateMachine(name));
        }
        self.machines.insert(name, expr);
        Ok(())
    }

    /// Inserts or overwrites.
    pub fn set(&mut self, name: impl Into<String>, expr: MachineExpr) {
        self.machines.insert(name.into(), expr);
    }

    pub fn get(&self, name: &str) -> Option<&MachineExpr> {
        self.machines.get(name)
    }

    pub fn body(&self, name: &str) -> Result<&MachineExpr> {
        self.get(name)
            .ok_or_else(|| Error::UnknownMachine(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.machines.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.machines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.machines.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &MachineExpr)> {
        self.machines.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.machines.keys().map(String::as_str)
    }

    /// Adds every machine of `other`; fails on the first name clash.
    pub fn extend(&mut self, other: MachineRegistry) -> Result<()> {
        for (name, expr) in other.machines {
            self.insert(name, expr)?;
        }
        Ok(())
    }

    /// Reports dangling references and out-of-range probabilities. The
    /// registry is usable by every other operation iff the report is empty.
    pub fn validate(&self) -> ValidationReport {
        let mut findings = Vec::new();
        for (name, expr) in &self.machines {
            expr.visit(&mut |e| match e {
                MachineExpr::Flip { p, .. } => {
                    if !rational::in_unit(p) {
                        findings.push(ValidationFinding::ProbabilityOutOfRange {
                            machine: name.clone(),
                            p: p.clone(),
                        });
                    }
                }
                MachineExpr::Oracle { target, p, .. } => {
                    if !rational::in_unit(p) {
                        findings.push(ValidationFinding::ProbabilityOutOfRange {
                            machine: name.clone(),
                            p: p.clone(),
                        });
                    }
                    if !self.machines.contains_key(target) {
                        findings.push(ValidationFinding::DanglingReference {
                            machine: name.clone(),
                            target: target.clone(),
                        });
                    }
                }
                MachineExpr::Call { target, .. } => {
                    if !self.machines.contains_key(target) {
                        findings.push(ValidationFinding::DanglingReference {
                            machine: name.clone(),
                            target: target.clone(),
                        });
                    }
                }
                MachineExpr::Ret(_) => {}
            });
        }
        ValidationReport { findings }
    }
}

/// A pair `(machine, threshold)` asked of the oracle.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Query {
    pub machine: String,
    pub threshold: Rational,
}

impl Query {
    pub fn new(machine: impl Into<String>, threshold: Rational) -> Self {
        Self {
            machine: machine.into(),
            threshold,
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {})",
            self.machine,
            rational::format_rational(&self.threshold)
        )
    }
}

/// An ordered finite set of queries. Position `i` is the variable `x_{i+1}`
/// in polynomials and the main player `i` in the reduction game.
#[derive(Clone, Debug, Default)]
pub struct QuerySet {
    queries: Vec<Query>,
    index: HashMap<Query, usize>,
}

impl PartialEq for QuerySet {
    fn eq(&self, other: &Self) -> bool {
        self.queries == other.queries
    }
}

impl Eq for QuerySet {}

impl QuerySet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_queries(queries: impl IntoIterator<Item = Query>) -> Result<Self> {
        let mut set = Self::new();
        for q in queries {
            set.push(q)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, q: Query) -> Result<usize> {
        if !rational::in_unit(&q.threshold) {
            return Err(Error::ProbabilityOutOfRange(rational::format_rational(
                &q.threshold,
            )));
        }
        if self.index.contains_key(&q) {
            return Err(Error::DuplicateQuery(q.machine, q.threshold));
        }
        let i = self.queries.len();
        self.index.insert(q.clone(), i);
        self.queries.push(q);
        Ok(i)
    }

    pub fn index_of(&self, machine: &str, threshold: &Rational) -> Option<usize> {
        // Avoids allocating a Query for the lookup in the common small case.
        if self.queries.len() <= 8 {
            return self
                .queries
                .iter()
                .position(|q| q.machine == machine && &q.threshold == threshold);
        }
        self.index
            .get(&Query::new(machine, threshold.clone()))
            .copied()
    }

    pub fn contains(&self, machine: &str, threshold: &Rational) -> bool {
        self.index_of(machine, threshold).is_some()
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Query> {
        self.queries.iter()
    }

    pub fn get(&self, i: usize) -> Option<&Query> {
        self.queries.get(i)
    }
}

impl std::ops::Index<usize> for QuerySet {
    type Output = Query;

    fn index(&self, i: usize) -> &Query {
        &self.queries[i]
    }
}

impl<'a> IntoIterator for &'a QuerySet {
    type Item = &'a Query;
    type IntoIter = std::slice::Iter<'a, Query>;

    fn into_iter(self) -> Self::IntoIter {
        self.queries.iter()
    }
}

/// The probability that the oracle answers `1`, either exact or a binary64
/// value produced by a numerical solver.
#[derive(Clone, Debug, PartialEq)]
pub enum Prob {
    Exact(Rational),
    Float(f64),
}

impl Prob {
    pub fn to_f64(&self) -> f64 {
        match self {
            Prob::Exact(r) => rational::to_f64(r),
            Prob::Float(x) => *x,
        }
    }

    /// Binary64 values convert without rounding.
    pub fn to_rational(&self) -> Rational {
        match self {
            Prob::Exact(r) => r.clone(),
            Prob::Float(x) => rational::from_f64(*x).expect("probabilities are finite"),
        }
    }

    pub fn is_valid(&self) -> bool {
        match self {
            Prob::Exact(r) => rational::in_unit(r),
            Prob::Float(x) => (0.0..=1.0).contains(x),
        }
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prob::Exact(r) => f.write_str(&rational::format_rational(r)),
            Prob::Float(x) => write!(f, "{x:?}"),
        }
    }
}

/// The oracle `O_x`: query `i` is answered `1` with probability `x_i`, any
/// query outside the set with probability 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OracleAssignment {
    queries: QuerySet,
    probs: Vec<Prob>,
}

impl OracleAssignment {
    pub fn new(queries: QuerySet, probs: Vec<Prob>) -> Result<Self> {
        if probs.len() != queries.len() {
            return Err(Error::AssignmentLength {
                expected: queries.len(),
                got: probs.len(),
            });
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_valid()) {
            return Err(Error::ProbabilityOutOfRange(bad.to_string()));
        }
        Ok(Self { queries, probs })
    }

    pub fn exact(queries: QuerySet, probs: Vec<Rational>) -> Result<Self> {
        Self::new(queries, probs.into_iter().map(Prob::Exact).collect())
    }

    pub fn float(queries: QuerySet, probs: Vec<f64>) -> Result<Self> {
        Self::new(queries, probs.into_iter().map(Prob::Float).collect())
    }

    /// The oracle answering every query with 0.
    pub fn empty() -> Self {
        Self {
            queries: QuerySet::new(),
            probs: Vec::new(),
        }
    }

    pub fn queries(&self) -> &QuerySet {
        &self.queries
    }

    pub fn probs(&self) -> &[Prob] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `Prob(O(machine, threshold) = 1)`.
    pub fn answer(&self, machine: &str, threshold: &Rational) -> Option<&Prob> {
        self.queries
            .index_of(machine, threshold)
            .map(|i| &self.probs[i])
    }

    pub fn exact_probs(&self) -> Vec<Rational> {
        self.probs.iter().map(Prob::to_rational).collect()
    }

    pub fn float_probs(&self) -> Vec<f64> {
        self.probs.iter().map(Prob::to_f64).collect()
    }
}
