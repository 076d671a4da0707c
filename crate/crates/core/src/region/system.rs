//! Exact-rational linear inequality systems and Fourier–Motzkin elimination.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Denominator of the grid real inputs are rounded to before elimination.
pub const QUANTIZATION_DENOMINATOR: i64 = 1_000_000_000;

/// Rounds `x` to the nearest multiple of 1/[`QUANTIZATION_DENOMINATOR`].
pub fn quantize(x: f64) -> Rational {
    let scaled = (x * QUANTIZATION_DENOMINATOR as f64).round();
    Rational::new(
        BigInt::from(scaled as i128),
        BigInt::from(QUANTIZATION_DENOMINATOR),
    )
}

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl Relation {
    fn and(self, other: Relation) -> Relation {
        if self == Relation::Gt || other == Relation::Gt {
            Relation::Gt
        } else {
            Relation::Ge
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }
}

/// `coeffs · x  (relation)  rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Inequality {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Inequality {
    pub fn new(coeffs: Vec<Rational>, relation: Relation, rhs: Rational) -> Self {
        Self {
            coeffs,
            relation,
            rhs,
        }
    }

    fn is_trivial(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// For a row with no variables: does `0 (rel) rhs` hold?
    fn trivially_true(&self) -> bool {
        match self.relation {
            Relation::Ge => !self.rhs.is_positive(),
            Relation::Gt => self.rhs.is_negative(),
        }
    }

    /// Positive rescaling making the first nonzero coefficient ±1.
    fn normalized(&self) -> Self {
        let lead = self
            .coeffs
            .iter()
            .find(|c| !c.is_zero())
            .map(|c| c.abs());
        match lead {
            None => {
                // canonical forms: tautology 0 >= 0, contradiction 0 >= 1
                let z = vec![Rational::zero(); self.coeffs.len()];
                if self.trivially_true() {
                    Self::new(z, Relation::Ge, Rational::zero())
                } else {
                    Self::new(z, Relation::Ge, Rational::one())
                }
            }
            Some(s) => Self {
                coeffs: self.coeffs.iter().map(|c| c / &s).collect(),
                relation: self.relation,
                rhs: &self.rhs / &s,
            },
        }
    }

    /// The complement: ¬(a·x ≥ b) is (−a)·x > −b and ¬(a·x > b) is (−a)·x ≥ −b.
    fn negation(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            relation: match self.relation {
                Relation::Ge => Relation::Gt,
                Relation::Gt => Relation::Ge,
            },
            rhs: -&self.rhs,
        }
    }

    /// Left side minus right side at a real point.
    pub fn slack(&self, x: &[f64]) -> f64 {
        let lhs: f64 = self.coeffs.iter().zip(x).map(|(c, v)| to_f64(c) * v).sum();
        lhs - to_f64(&self.rhs)
    }

    /// Exact evaluation at a rational point.
    pub fn holds_at(&self, x: &[Rational]) -> bool {
        let lhs: Rational = self
            .coeffs
            .iter()
            .zip(x)
            .fold(Rational::zero(), |acc, (c, v)| acc + c * v);
        match self.relation {
            Relation::Ge => lhs >= self.rhs,
            Relation::Gt => lhs > self.rhs,
        }
    }
}

/// Affine inequalities over named variables.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalitySystem {
    variables: Vec<String>,
    rows: Vec<Inequality>,
}

impl InequalitySystem {
    pub fn new<S: Into<String>>(variables: impl IntoIterator<Item = S>) -> Self {
        Self {
            variables: variables.into_iter().map(Into::into).collect(),
            rows: vec![],
        }
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn rows(&self) -> &[Inequality] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    pub fn push(&mut self, row: Inequality) -> Result<()> {
        if row.coeffs.len() != self.variables.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} variables",
                row.coeffs.len(),
                self.variables.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Adds `Σ c·var (rel) rhs` from sparse named terms.
    pub fn add(&mut self, terms: &[(&str, Rational)], relation: Relation, rhs: Rational) -> Result<()> {
        let mut coeffs = vec![Rational::zero(); self.variables.len()];
        for (name, c) in terms {
            let i = self.index(name)?;
            coeffs[i] += c;
        }
        self.push(Inequality::new(coeffs, relation, rhs))
    }

    /// Adds `Σ c·var ≥ rhs` with integer coefficients.
    pub fn ge(&mut self, terms: &[(&str, i64)], rhs: Rational) -> Result<()> {
        let t: Vec<(&str, Rational)> = terms.iter().map(|(n, c)| (*n, int(*c))).collect();
        self.add(&t, Relation::Ge, rhs)
    }

    /// Adds `Σ c·var > rhs` with integer coefficients.
    pub fn gt(&mut self, terms: &[(&str, i64)], rhs: Rational) -> Result<()> {
        let t: Vec<(&str, Rational)> = terms.iter().map(|(n, c)| (*n, int(*c))).collect();
        self.add(&t, Relation::Gt, rhs)
    }

    /// Adds `Σ c·var ≤ rhs`.
    pub fn le(&mut self, terms: &[(&str, i64)], rhs: Rational) -> Result<()> {
        let t: Vec<(&str, Rational)> = terms.iter().map(|(n, c)| (*n, int(-*c))).collect();
        self.add(&t, Relation::Ge, -rhs)
    }

    /// Adds `Σ c·var < rhs`.
    pub fn lt(&mut self, terms: &[(&str, i64)], rhs: Rational) -> Result<()> {
        let t: Vec<(&str, Rational)> = terms.iter().map(|(n, c)| (*n, int(-*c))).collect();
        self.add(&t, Relation::Gt, -rhs)
    }

    /// Normalizes rows and keeps, for each coefficient direction, only the
    /// tightest row. Tautologies are dropped; a contradiction collapses the
    /// system to the single row `0 ≥ 1`.
    pub fn filter_redundant(&self) -> Self {
        let mut best: Vec<Inequality> = Vec::new();
        for row in &self.rows {
            let r = row.normalized();
            if r.is_trivial() {
                if r.rhs.is_zero() {
                    continue;
                }
                return self.contradiction();
            }
            match best.iter_mut().find(|b| b.coeffs == r.coeffs) {
                Some(b) => {
                    let tighter = match r.rhs.cmp(&b.rhs) {
                        Ordering::Greater => true,
                        Ordering::Equal => r.relation == Relation::Gt,
                        Ordering::Less => false,
                    };
                    if tighter {
                        *b = r;
                    }
                }
                None => best.push(r),
            }
        }
        Self {
            variables: self.variables.clone(),
            rows: best,
        }
    }

    fn contradiction(&self) -> Self {
        let c = vec![Rational::zero(); self.variables.len()];
        Self {
            variables: self.variables.clone(),
            rows: vec![Inequality::new(c, Relation::Ge, Rational::one())],
        }
    }

    /// Eliminates one variable by pairing its lower and upper bounds.
    fn eliminate_index(&self, k: usize) -> Self {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut rest = Vec::new();
        for r in &self.rows {
            match r.coeffs[k].cmp(&Rational::zero()) {
                Ordering::Greater => pos.push(r),
                Ordering::Less => neg.push(r),
                Ordering::Equal => rest.push(r.clone()),
            }
        }
        for p in &pos {
            for q in &neg {
                let a = &p.coeffs[k];
                let b = -&q.coeffs[k];
                let coeffs: Vec<Rational> = p
                    .coeffs
                    .iter()
                    .zip(&q.coeffs)
                    .map(|(x, y)| &b * x + a * y)
                    .collect();
                let rhs = &b * &p.rhs + a * &q.rhs;
                rest.push(Inequality::new(coeffs, p.relation.and(q.relation), rhs));
            }
        }
        let mut variables = self.variables.clone();
        variables.remove(k);
        for r in &mut rest {
            r.coeffs.remove(k);
        }
        Self {
            variables,
            rows: rest,
        }
        .filter_redundant()
    }

    /// Projects out the named variables, filtering proportional rows after each step.
    pub fn fourier_motzkin(&self, eliminate: &[&str]) -> Result<Self> {
        let mut sys = self.filter_redundant();
        for name in eliminate {
            let k = sys.index(name)?;
            sys = sys.eliminate_index(k);
        }
        Ok(sys)
    }

    /// Exact feasibility over the reals (strict rows respected).
    pub fn is_feasible(&self) -> bool {
        let mut sys = self.filter_redundant();
        while !sys.variables.is_empty() {
            sys = sys.eliminate_index(sys.variables.len() - 1);
        }
        sys.rows.iter().all(Inequality::trivially_true)
    }

    /// True when every point satisfying the system satisfies `row`.
    pub fn implies(&self, row: &Inequality) -> bool {
        let mut s = self.clone();
        s.rows.push(row.negation());
        !s.is_feasible()
    }

    /// An irredundant subsystem with the same feasible set: each row implied by
    /// the remaining ones is dropped in turn.
    pub fn irredundant(&self) -> Self {
        let mut sys = self.filter_redundant();
        let mut i = 0;
        while i < sys.rows.len() {
            let mut others = sys.clone();
            let row = others.rows.remove(i);
            if others.implies(&row) {
                sys = others;
            } else {
                i += 1;
            }
        }
        sys
    }

    /// The same rows with every strict relation relaxed to `≥`.
    pub fn closure(&self) -> Self {
        Self {
            variables: self.variables.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| Inequality::new(r.coeffs.clone(), Relation::Ge, r.rhs.clone()))
                .collect(),
        }
    }

    /// Set equality of normalized rows over the same variable list.
    pub fn same_rows(&self, other: &Self) -> bool {
        if self.variables != other.variables {
            return false;
        }
        let a: Vec<Inequality> = self.filter_redundant().rows;
        let b: Vec<Inequality> = other.filter_redundant().rows;
        a.len() == b.len() && a.iter().all(|r| b.contains(r))
    }

    /// Reorders variables to `order` (which must be a permutation of the current list).
    pub fn reorder(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.variables.len() {
            return Err(Error::DimensionMismatch("variable order length".into()));
        }
        let idx = order.iter().map(|n| self.index(n)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            variables: order.iter().map(|s| s.to_string()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| {
                    Inequality::new(
                        idx.iter().map(|&i| r.coeffs[i].clone()).collect(),
                        r.relation,
                        r.rhs.clone(),
                    )
                })
                .collect(),
        })
    }

    /// Exact membership of a rational point.
    pub fn contains(&self, x: &[Rational]) -> bool {
        self.rows.iter().all(|r| r.holds_at(x))
    }
}

impl fmt::Display for InequalitySystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            let mut first = true;
            for (c, v) in r.coeffs.iter().zip(&self.variables) {
                if c.is_zero() {
                    continue;
                }
                let sign = if c.is_negative() { "-" } else if first { "" } else { "+" };
                let mag = c.abs();
                if mag.is_one() {
                    write!(f, "{sign}{v} ")?;
                } else {
                    write!(f, "{sign}{mag}*{v} ")?;
                }
                first = false;
            }
            if first {
                write!(f, "0 ")?;
            }
            writeln!(f, "{} {}", r.relation.symbol(), r.rhs)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eliminate_single_chain() {
        // y ≥ a, x ≥ y  →  x ≥ a
        let a = rational(3, 4);
        let mut s = InequalitySystem::new(["x", "y"]);
        s.ge(&[("y", 1)], a.clone()).unwrap();
        s.ge(&[("x", 1), ("y", -1)], int(0)).unwrap();
        let p = s.fourier_motzkin(&["y"]).unwrap();
        let mut want = InequalitySystem::new(["x"]);
        want.ge(&[("x", 1)], a).unwrap();
        assert!(p.same_rows(&want), "{p}");
    }

    #[test]
    fn eliminate_nothing_only_filters() {
        let mut s = InequalitySystem::new(["x"]);
        s.ge(&[("x", 2)], int(2)).unwrap();
        s.ge(&[("x", 1)], int(0)).unwrap();
        let p = s.fourier_motzkin(&[]).unwrap();
        assert_eq!(p.len(), 1);
        assert!(p.contains(&[int(1)]));
        assert!(!p.contains(&[rational(1, 2)]));
    }

    #[test]
    fn strictness_propagates() {
        let mut s = InequalitySystem::new(["x", "y"]);
        s.gt(&[("y", 1)], int(1)).unwrap();
        s.ge(&[("x", 1), ("y", -1)], int(0)).unwrap();
        let p = s.fourier_motzkin(&["y"]).unwrap();
        assert_eq!(p.rows()[0].relation, Relation::Gt);
        assert!(!p.contains(&[int(1)]));
    }

    #[test]
    fn feasibility_and_implication() {
        let mut s = InequalitySystem::new(["x"]);
        s.ge(&[("x", 1)], int(1)).unwrap();
        s.lt(&[("x", 1)], int(1)).unwrap();
        assert!(!s.is_feasible());
        let mut t = InequalitySystem::new(["x", "y"]);
        t.ge(&[("x", 1)], int(1)).unwrap();
        t.ge(&[("y", 1)], int(1)).unwrap();
        let sum = Inequality::new(vec![int(1), int(1)], Relation::Ge, int(2));
        assert!(t.implies(&sum));
        let strict = Inequality::new(vec![int(1), int(1)], Relation::Gt, int(2));
        assert!(!t.implies(&strict));
    }

    #[test]
    fn irredundant_drops_implied_rows() {
        let mut t = InequalitySystem::new(["x", "y"]);
        t.ge(&[("x", 1)], int(1)).unwrap();
        t.ge(&[("y", 1)], int(1)).unwrap();
        t.ge(&[("x", 1), ("y", 1)], int(1)).unwrap();
        assert_eq!(t.irredundant().len(), 2);
    }

    #[test]
    fn quantization_grid() {
        assert_eq!(quantize(0.5), rational(1, 2));
        assert_eq!(quantize(1.0 / 3.0), rational(333_333_333, 1_000_000_000));
        assert_eq!(quantize(-2.0000000000004), int(-2));
    }
}
