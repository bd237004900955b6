//! Exact multivariate polynomials in the oracle answers.
//!
//! For a query set `R = [(M_1, p_1), ..., (M_n, p_n)]` whose machines make a
//! bounded number of oracle calls, `P(M^{O_x} = 1)` is a polynomial in
//! `x_1, ..., x_n` with rational coefficients. [`extract_polynomial`]
//! computes it symbolically.

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_traits::{One, Signed, Zero};

use crate::analysis;
use crate::error::{Error, Result};
use crate::machine::{MachineExpr, MachineRegistry, OracleAssignment, QuerySet};
use crate::rational::{self, Rational};

/// Exponent vector `(d_1, ..., d_n)`.
///
/// Ordered by total degree first; within a degree, higher powers of lower
/// indexed variables come first (`x1 < x2 < x1^2 < x1*x2 < x2^2`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    fn times(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &d) in self.0.iter().enumerate() {
            if d == 0 {
                continue;
            }
            if !first {
                f.write_str(" * ")?;
            }
            first = false;
            if d == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{d}", i + 1)?;
            }
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

/// `sum_k c_k * prod_i x_i^{d_{k,i}}` with no zero coefficients stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbPolynomial {
    nvars: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl ProbPolynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::one(nvars), c);
        p
    }

    /// `x_{i+1}`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::var(nvars, i), Rational::one());
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut p = Self::zero(nvars);
        for (m, c) in terms {
            assert_eq!(m.0.len(), nvars, "exponent vector length");
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending graded order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// Highest power of `x_{i+1}` in any term.
    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|m| m.0[i]).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Self {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    /// Exact value at `x`.
    pub fn eval_exact(&self, x: &[Rational]) -> Rational {
        assert_eq!(x.len(), self.nvars, "point dimension");
        let powers: Vec<Vec<Rational>> = (0..self.nvars)
            .map(|i| {
                let d = self.degree_in(i) as usize;
                let mut v = Vec::with_capacity(d + 1);
                v.push(Rational::one());
                for k in 1..=d {
                    let next = &v[k - 1] * &x[i];
                    v.push(next);
                }
                v
            })
            .collect();
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &d) in m.0.iter().enumerate() {
                if d > 0 {
                    t *= &powers[i][d as usize];
                }
            }
            total += t;
        }
        total
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars, "point dimension");
        self.terms
            .iter()
            .map(|(m, c)| {
                m.0.iter()
                    .enumerate()
                    .fold(rational::to_f64(c), |acc, (i, &d)| acc * x[i].powi(d as i32))
            })
            .sum()
    }
}

impl Add for &ProbPolynomial {
    type Output = ProbPolynomial;

    fn add(self, rhs: &ProbPolynomial) -> ProbPolynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &ProbPolynomial {
    type Output = ProbPolynomial;

    fn sub(self, rhs: &ProbPolynomial) -> ProbPolynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Mul for &ProbPolynomial {
    type Output = ProbPolynomial;

    fn mul(self, rhs: &ProbPolynomial) -> ProbPolynomial {
        let mut out = ProbPolynomial::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.times(mb), ca * cb);
            }
        }
        out
    }
}

impl fmt::Display for ProbPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            match (k, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let a = c.abs();
            if m.degree() == 0 {
                f.write_str(&rational::format_rational(&a))?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{} * {m}", rational::format_rational(&a))?;
            }
        }
        Ok(())
    }
}

/// Output-class polynomials of one expression.
#[derive(Clone)]
struct Split {
    zero: ProbPolynomial,
    one: ProbPolynomial,
    other: ProbPolynomial,
}

impl Split {
    fn leaf(n: usize, class: usize) -> Self {
        let mut s = Split {
            zero: ProbPolynomial::zero(n),
            one: ProbPolynomial::zero(n),
            other: ProbPolynomial::zero(n),
        };
        *[&mut s.zero, &mut s.one, &mut s.other][class] =
            ProbPolynomial::constant(n, Rational::one());
        s
    }

    /// `w * a + (1 - w) * b` class by class.
    fn mix(w: &ProbPolynomial, a: &Split, b: &Split) -> Split {
        let n = w.nvars();
        let not_w = &ProbPolynomial::constant(n, Rational::one()) - w;
        let f = |x: &ProbPolynomial, y: &ProbPolynomial| &(w * x) + &(&not_w * y);
        Split {
            zero: f(&a.zero, &b.zero),
            one: f(&a.one, &b.one),
            other: f(&a.other, &b.other),
        }
    }
}

struct Extractor<'a> {
    registry: &'a MachineRegistry,
    queries: &'a QuerySet,
    memo: HashMap<&'a str, Split>,
}

impl<'a> Extractor<'a> {
    fn n(&self) -> usize {
        self.queries.len()
    }

    fn machine(&mut self, name: &'a str) -> Result<Split> {
        if let Some(s) = self.memo.get(name) {
            return Ok(s.clone());
        }
        let s = self.expr(self.registry.body(name)?)?;
        self.memo.insert(name, s.clone());
        Ok(s)
    }

    fn expr(&mut self, e: &'a MachineExpr) -> Result<Split> {
        let n = self.n();
        Ok(match e {
            MachineExpr::Ret(o) => Split::leaf(
                n,
                match o {
                    crate::machine::Output::Zero => 0,
                    crate::machine::Output::One => 1,
                    crate::machine::Output::Other(_) => 2,
                },
            ),
            MachineExpr::Flip { p, heads, tails } => {
                let h = self.expr(heads)?;
                let t = self.expr(tails)?;
                Split::mix(&ProbPolynomial::constant(n, p.clone()), &h, &t)
            }
            MachineExpr::Oracle {
                target,
                p,
                on_zero,
                on_one,
            } => {
                let z = self.expr(on_zero)?;
                match self.queries.index_of(target, p) {
                    Some(i) => {
                        let o = self.expr(on_one)?;
                        Split::mix(&ProbPolynomial::var(n, i), &o, &z)
                    }
                    // O_x answers 0 outside the set.
                    None => z,
                }
            }
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
                let f = |a: &ProbPolynomial, b: &ProbPolynomial, c: &ProbPolynomial| {
                    &(&(&t.zero * a) + &(&t.one * b)) + &(&t.other * c)
                };
                Split {
                    zero: f(&z.zero, &o.zero, &x.zero),
                    one: f(&z.one, &o.one, &x.one),
                    other: f(&z.other, &o.other, &x.other),
                }
            }
        })
    }
}

/// `P(name^{O_x} = 1)` as a polynomial in the answers to `queries`.
///
/// Requires an acyclic call graph below `name`, so every execution halts
/// after a bounded number of steps.
pub fn extract_polynomial(
    registry: &MachineRegistry,
    name: &str,
    queries: &QuerySet,
) -> Result<ProbPolynomial> {
    analysis::require_halting(registry, name)?;
    let mut ex = Extractor {
        registry,
        queries,
        memo: HashMap::new(),
    };
    Ok(ex.machine(name)?.one)
}

/// One polynomial per query, in query order.
pub fn extract_all(registry: &MachineRegistry, queries: &QuerySet) -> Result<Vec<ProbPolynomial>> {
    queries
        .iter()
        .map(|q| extract_polynomial(registry, &q.machine, queries))
        .collect()
}

/// Exact value of `p` at the answers of `x`, matched by query order.
pub fn poly_eval(p: &ProbPolynomial, x: &OracleAssignment) -> Result<Rational> {
    if x.len() != p.nvars() {
        return Err(Error::AssignmentLength {
            expected: p.nvars(),
            got: x.len(),
        });
    }
    Ok(p.eval_exact(&x.exact_probs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{MachineExpr as E, Query};
    use crate::rational::{int, rat};

    fn qs(items: &[(&str, Rational)]) -> QuerySet {
        QuerySet::from_queries(items.iter().map(|(m, p)| Query::new(*m, p.clone()))).unwrap()
    }

    #[test]
    fn liar_polynomial() {
        let mut r = MachineRegistry::new();
        r.insert("L", E::oracle("L", rat(1, 2), E::ret1(), E::ret0())).unwrap();
        let q = qs(&[("L", rat(1, 2))]);
        let p = extract_polynomial(&r, "L", &q).unwrap();
        assert_eq!(p.to_string(), "1 - x1");
        let x = OracleAssignment::exact(q, vec![rat(1, 2)]).unwrap();
        assert_eq!(poly_eval(&p, &x).unwrap(), rat(1, 2));
    }

    #[test]
    fn conjunction() {
        let mut r = MachineRegistry::new();
        r.insert(
            "A",
            E::oracle("M1", rat(1, 3), E::ret0(), E::oracle("M2", rat(1, 4), E::ret0(), E::ret1())),
        )
        .unwrap();
        r.insert("M1", E::ret1()).unwrap();
        r.insert("M2", E::ret1()).unwrap();
        let q = qs(&[("M1", rat(1, 3)), ("M2", rat(1, 4))]);
        let p = extract_polynomial(&r, "A", &q).unwrap();
        assert_eq!(p.to_string(), "x1 * x2");
        let x = OracleAssignment::exact(q, vec![rat(1, 3), rat(3, 4)]).unwrap();
        assert_eq!(poly_eval(&p, &x).unwrap(), rat(1, 4));
    }

    #[test]
    fn calls_compose() {
        let mut r = MachineRegistry::new();
        r.insert("L", E::oracle("L", rat(1, 2), E::ret1(), E::ret0())).unwrap();
        r.insert("B", E::call("L", E::flip(rat(1, 3), E::ret1(), E::ret0()), E::ret_other("z"), E::ret0()))
            .unwrap();
        let q = qs(&[("L", rat(1, 2))]);
        let p = extract_polynomial(&r, "B", &q).unwrap();
        // L returns 0 with probability x1.
        assert_eq!(p, ProbPolynomial::var(1, 0).scale(&rat(1, 3)));
    }

    #[test]
    fn cyclic_calls_are_rejected() {
        let mut r = MachineRegistry::new();
        r.insert("O", E::call("O", E::ret0(), E::ret1(), E::ret0())).unwrap();
        assert!(matches!(
            extract_polynomial(&r, "O", &QuerySet::new()),
            Err(Error::Unbounded(_))
        ));
    }

    #[test]
    fn graded_order_and_display() {
        let p = ProbPolynomial::from_terms(
            2,
            [
                (Monomial(vec![0, 2]), rat(1, 2)),
                (Monomial(vec![1, 0]), int(-1)),
                (Monomial(vec![0, 0]), int(1)),
                (Monomial(vec![1, 1]), rat(-2, 3)),
            ],
        );
        assert_eq!(p.to_string(), "1 - x1 - 2/3 * x1 * x2 + 1/2 * x2^2");
        assert_eq!(p.degree_in(1), 2);
        assert_eq!(ProbPolynomial::zero(1).to_string(), "0");
    }

    #[test]
    fn arithmetic_cancels() {
        let x = ProbPolynomial::var(1, 0);
        assert!((&x - &x).is_zero());
        let sq = &x * &x;
        assert_eq!(sq.eval_exact(&[rat(1, 3)]), rat(1, 9));
        assert!((sq.eval_f64(&[0.5]) - 0.25).abs() < 1e-15);
    }
}
