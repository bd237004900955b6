//! The reflection conditions on a finite query set.
//!
//! An oracle is reflective on `R` when, for every `(M, p)` in `R`,
//! `P(M = 1) > p` forces the answer `1` and `P(M = 0) > 1 - p` forces the
//! answer `0`. With `[lo, hi]` from exact evaluation the violation of query
//! `i` is
//!
//! `v_i = max((lo - p)^+ * (1 - x_i), (p - hi)^+ * x_i)`
//!
//! which is zero exactly when the answer probability `x_i` is allowed.

use std::fmt;

use num_traits::Zero;
use rayon::prelude::*;

use crate::analysis;
use crate::error::{Error, Result};
use crate::eval::{exact_eval, EvalInterval};
use crate::machine::{MachineRegistry, OracleAssignment, Prob, Query, QuerySet};
use crate::poly::{self, ProbPolynomial};
use crate::rational::{self, format_rational, Rational};

/// Largest query set the grid solver accepts.
pub const MAX_GRID_QUERIES: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct QueryReport {
    pub query: Query,
    /// Bounds on `P(M = 1)`.
    pub interval: EvalInterval,
    pub answer: Prob,
    pub violation: Rational,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReflectionReport {
    pub entries: Vec<QueryReport>,
    pub epsilon: f64,
}

impl ReflectionReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn max_violation(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| rational::to_f64(&e.violation))
            .fold(0.0, f64::max)
    }

    pub fn total_violation(&self) -> Rational {
        self.entries.iter().map(|e| &e.violation).sum()
    }
}

impl fmt::Display for ReflectionReport {
    /// One line per query: `query i: lo hi x violation verdict`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.entries.iter().enumerate() {
            writeln!(
                f,
                "query {}: {:.9} {:.9} {} {:.3e} {}",
                i + 1,
                rational::to_f64(&e.interval.lo),
                rational::to_f64(&e.interval.hi),
                e.answer,
                rational::to_f64(&e.violation),
                if e.pass { "pass" } else { "fail" }
            )?;
        }
        Ok(())
    }
}

/// `max((lo - p)^+ * (1 - x), (p - hi)^+ * x)`.
pub fn violation(interval: &EvalInterval, p: &Rational, x: &Rational) -> Rational {
    let one = Rational::from_integer(1.into());
    let demand_one = rational::positive_part(&interval.lo - p) * (&one - x);
    let demand_zero = rational::positive_part(p - &interval.hi) * x;
    demand_one.max(demand_zero)
}

/// Checks every query of `queries` against the oracle `x` using exact
/// evaluation to `depth_budget` steps.
pub fn check_reflective(
    registry: &MachineRegistry,
    queries: &QuerySet,
    x: &OracleAssignment,
    epsilon: f64,
    depth_budget: usize,
) -> Result<ReflectionReport> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidConfig(format!("epsilon {epsilon} must be non-negative")));
    }
    let findings = analysis::check_closed(registry, queries)?;
    if let Some(f) = findings.first() {
        return Err(Error::NotClosed(f.to_string()));
    }
    let mut entries = Vec::with_capacity(queries.len());
    for q in queries {
        let answer = x
            .answer(&q.machine, &q.threshold)
            .cloned()
            .ok_or_else(|| Error::InvalidConfig(format!("assignment has no answer for {q}")))?;
        let interval = exact_eval(registry, &q.machine, x, depth_budget)?;
        let v = violation(&interval, &q.threshold, &answer.to_rational());
        let pass = rational::to_f64(&v) <= epsilon;
        entries.push(QueryReport {
            query: q.clone(),
            interval,
            answer,
            violation: v,
            pass,
        });
    }
    Ok(ReflectionReport { entries, epsilon })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveConfig {
    pub grid_resolution: usize,
    pub refinement_rounds: usize,
    pub epsilon: f64,
    /// Half-width of a dead band around each threshold in the search
    /// objective.
    pub delta: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            grid_resolution: 16,
            refinement_rounds: 8,
            epsilon: 1e-6,
            delta: 0.0,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_resolution < 2 {
            return Err(Error::InvalidConfig("grid resolution must be at least 2".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::InvalidConfig("delta must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSolution {
    pub assignment: OracleAssignment,
    pub report: ReflectionReport,
    /// Search objective at the returned point.
    pub objective: f64,
}

struct Objective {
    polys: Vec<ProbPolynomial>,
    thresholds: Vec<f64>,
    delta: f64,
}

impl Objective {
    fn value(&self, x: &[f64]) -> f64 {
        self.polys
            .iter()
            .zip(&self.thresholds)
            .enumerate()
            .map(|(i, (poly, &p))| {
                let prob = poly.eval_f64(x);
                let up = (prob - p - self.delta).max(0.0) * (1.0 - x[i]);
                let down = (p - self.delta - prob).max(0.0) * x[i];
                up.max(down)
            })
            .sum()
    }
}

/// Box `[lo_d, hi_d]` per axis.
#[derive(Clone)]
struct Cell {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Cell {
    fn point(&self, idx: usize, res: usize) -> Vec<f64> {
        let n = self.lo.len();
        let mut rest = idx;
        let mut x = vec![0.0; n];
        for d in (0..n).rev() {
            let j = rest % res;
            rest /= res;
            x[d] = if j == res - 1 {
                self.hi[d]
            } else {
                self.lo[d] + (self.hi[d] - self.lo[d]) * j as f64 / (res - 1) as f64
            };
        }
        x
    }
}

/// Minimum of the objective over the grid, ties broken by the
/// lexicographically smallest point.
fn best_on_grid(obj: &Objective, cell: &Cell, res: usize) -> (f64, Vec<f64>) {
    let count = res.pow(cell.lo.len() as u32);
    let (v, idx) = (0..count)
        .into_par_iter()
        .map(|idx| (obj.value(&cell.point(idx, res)), idx))
        .reduce(
            || (f64::INFINITY, usize::MAX),
            |a, b| match a.0.partial_cmp(&b.0) {
                Some(std::cmp::Ordering::Less) => a,
                Some(std::cmp::Ordering::Greater) => b,
                _ => {
                    if a.1 <= b.1 {
                        a
                    } else {
                        b
                    }
                }
            },
        );
    (v, cell.point(idx, res))
}

/// Direct search for a reflective assignment on a uniform grid, refined
/// around the incumbent.
pub fn solve_grid(
    registry: &MachineRegistry,
    queries: &QuerySet,
    cfg: &SolveConfig,
) -> Result<GridSolution> {
    cfg.validate()?;
    let n = queries.len();
    if n > MAX_GRID_QUERIES {
        return Err(Error::TooManyQueries(n, MAX_GRID_QUERIES));
    }
    let bound = analysis::compute_bound(registry, queries)?;
    if let Some(f) = bound.findings.first() {
        return Err(Error::NotClosed(f.to_string()));
    }
    let depth = bound.max_steps.ok_or_else(|| {
        Error::Unbounded(
            queries
                .iter()
                .map(|q| q.machine.clone())
                .collect::<Vec<_>>()
                .join(", "),
        )
    })?;
    let obj = Objective {
        polys: poly::extract_all(registry, queries)?,
        thresholds: queries.iter().map(|q| rational::to_f64(&q.threshold)).collect(),
        delta: cfg.delta,
    };
    let res = cfg.grid_resolution;
    let mut cell = Cell {
        lo: vec![0.0; n],
        hi: vec![1.0; n],
    };
    let (mut best_v, mut best_x) = best_on_grid(&obj, &cell, res);
    for _ in 0..cfg.refinement_rounds {
        if best_v == 0.0 {
            break;
        }
        for d in 0..n {
            let h = (cell.hi[d] - cell.lo[d]) / (res - 1) as f64;
            cell.lo[d] = (best_x[d] - h).max(0.0);
            cell.hi[d] = (best_x[d] + h).min(1.0);
        }
        let (v, x) = best_on_grid(&obj, &cell, res);
        if v < best_v {
            best_v = v;
            best_x = x;
        }
    }
    let assignment = OracleAssignment::float(queries.clone(), best_x)?;
    let report = check_reflective(registry, queries, &assignment, cfg.epsilon, depth)?;
    Ok(GridSolution {
        assignment,
        report,
        objective: best_v,
    })
}

/// `true` when the report shows no violation at all.
pub fn is_exactly_reflective(report: &ReflectionReport) -> bool {
    report.entries.iter().all(|e| e.violation.is_zero())
}

impl fmt::Display for QueryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} lo={} hi={} x={} v={}",
            self.query,
            format_rational(&self.interval.lo),
            format_rational(&self.interval.hi),
            self.answer,
            format_rational(&self.violation)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::MachineExpr as E;
    use crate::rational::{int, rat};

    fn liar() -> (MachineRegistry, QuerySet) {
        let mut r = MachineRegistry::new();
        r.insert("L", E::oracle("L", rat(1, 2), E::ret1(), E::ret0())).unwrap();
        let q = QuerySet::from_queries([Query::new("L", rat(1, 2))]).unwrap();
        (r, q)
    }

    #[test]
    fn liar_half_is_reflective() {
        let (r, q) = liar();
        let x = OracleAssignment::exact(q.clone(), vec![rat(1, 2)]).unwrap();
        let rep = check_reflective(&r, &q, &x, 1e-6, 64).unwrap();
        assert!(rep.pass());
        assert!(rep.entries[0].violation.is_zero());
    }

    #[test]
    fn liar_one_is_not() {
        let (r, q) = liar();
        let x = OracleAssignment::exact(q.clone(), vec![int(1)]).unwrap();
        let rep = check_reflective(&r, &q, &x, 1e-6, 64).unwrap();
        assert_eq!(rep.entries[0].violation, rat(1, 2));
        assert!(!rep.pass());
    }

    #[test]
    fn constant_one_demands_answer_one() {
        let mut r = MachineRegistry::new();
        r.insert("M", E::ret1()).unwrap();
        let q = QuerySet::from_queries([Query::new("M", rat(3, 10))]).unwrap();
        let yes = OracleAssignment::exact(q.clone(), vec![int(1)]).unwrap();
        assert!(check_reflective(&r, &q, &yes, 1e-6, 64).unwrap().pass());
        let no = OracleAssignment::exact(q.clone(), vec![int(0)]).unwrap();
        let rep = check_reflective(&r, &q, &no, 1e-6, 64).unwrap();
        assert_eq!(rep.entries[0].violation, rat(7, 10));
    }

    #[test]
    fn open_set_is_rejected() {
        let mut r = MachineRegistry::new();
        r.insert("A", E::oracle("B", rat(1, 3), E::ret0(), E::ret1())).unwrap();
        r.insert("B", E::ret1()).unwrap();
        let q = QuerySet::from_queries([Query::new("A", rat(1, 2))]).unwrap();
        let x = OracleAssignment::exact(q.clone(), vec![int(0)]).unwrap();
        assert!(matches!(
            check_reflective(&r, &q, &x, 1e-6, 64),
            Err(Error::NotClosed(_))
        ));
    }

    #[test]
    fn grid_finds_liar_fixed_point() {
        let (r, q) = liar();
        let cfg = SolveConfig {
            refinement_rounds: 6,
            ..SolveConfig::default()
        };
        let sol = solve_grid(&r, &q, &cfg).unwrap();
        assert!((sol.assignment.float_probs()[0] - 0.5).abs() <= 1e-6);
        assert!(sol.report.pass());
    }

    #[test]
    fn grid_handles_constant_machine() {
        let mut r = MachineRegistry::new();
        r.insert("M", E::ret1()).unwrap();
        let q = QuerySet::from_queries([Query::new("M", rat(1, 2))]).unwrap();
        let sol = solve_grid(&r, &q, &SolveConfig::default()).unwrap();
        assert_eq!(sol.assignment.float_probs(), vec![1.0]);
    }

    #[test]
    fn report_lines() {
        let (r, q) = liar();
        let x = OracleAssignment::exact(q.clone(), vec![rat(1, 2)]).unwrap();
        let rep = check_reflective(&r, &q, &x, 1e-6, 64).unwrap();
        assert_eq!(
            rep.to_string(),
            "query 1: 0.500000000 0.500000000 1/2 0.000e0 pass\n"
        );
    }
}
