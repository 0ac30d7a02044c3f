//! Signal temporal logic: formula syntax, traces, and quantitative (robustness)
//! and boolean semantics on a uniform sample grid.
//!
//! Formulas are written in a small textual grammar:
//!
//! ```text
//! G[0,100] (y5 - y4 <= 40)
//! G[0,30](RPM < 3000) -> G[0,4](Speed < 35)
//! G[30,630] F[0,5] (abs(theta - theta_d) <= 1.6)
//! ```
//!
//! Operator precedence, tightest first: `not`/`G[a,b]`/`F[a,b]`, `and`, `or`,
//! `->` (right associative).

mod eval;
mod parser;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{Signal, TimeGrid};

pub(crate) use eval::atom_value;
pub use eval::{robustness, robustness_signal, satisfied};
pub use parser::parse;

/// One summand of an [`AtomExpr`].
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Const(f64),
    Channel { coef: f64, name: String },
    Abs { coef: f64, inner: AtomExpr },
}

/// A sum of terms over trace channels, e.g. `y5 - y4` or `abs(mu) + 0.5*x`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomExpr {
    pub terms: Vec<Term>,
}

impl AtomExpr {
    pub fn channel(name: impl Into<String>) -> Self {
        Self { terms: vec![Term::Channel { coef: 1.0, name: name.into() }] }
    }

    /// `a - b` over two channels.
    pub fn difference(a: impl Into<String>, b: impl Into<String>) -> Self {
        Self { terms: vec![Term::Channel { coef: 1.0, name: a.into() }, Term::Channel { coef: -1.0, name: b.into() }] }
    }

    pub fn channels(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for t in &self.terms {
            match t {
                Term::Const(_) => {}
                Term::Channel { name, .. } => out.push(name.as_str()),
                Term::Abs { inner, .. } => out.extend(inner.channels()),
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }

    pub fn holds(self, lhs: f64, bound: f64) -> bool {
        match self {
            Comparator::Lt => lhs < bound,
            Comparator::Le => lhs <= bound,
            Comparator::Gt => lhs > bound,
            Comparator::Ge => lhs >= bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub expr: AtomExpr,
    pub cmp: Comparator,
    pub bound: f64,
}

/// Closed time interval `[lo, hi]` in seconds, relative to the evaluation instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || lo > hi {
            return Err(Error::Semantic(format!("interval [{lo}, {hi}] needs 0 <= a <= b")));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Predicate(Predicate),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Globally(Interval, Box<Formula>),
    Eventually(Interval, Box<Formula>),
}

impl Formula {
    pub fn predicate(expr: AtomExpr, cmp: Comparator, bound: f64) -> Self {
        Formula::Predicate(Predicate { expr, cmp, bound })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn globally(lo: f64, hi: f64, f: Formula) -> Result<Self> {
        Ok(Formula::Globally(Interval::new(lo, hi)?, Box::new(f)))
    }

    pub fn eventually(lo: f64, hi: f64, f: Formula) -> Result<Self> {
        Ok(Formula::Eventually(Interval::new(lo, hi)?, Box::new(f)))
    }

    /// Longest look-ahead in seconds: the largest sum of nested interval upper bounds.
    pub fn horizon(&self) -> f64 {
        match self {
            Formula::Predicate(_) => 0.0,
            Formula::Not(f) => f.horizon(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => a.horizon().max(b.horizon()),
            Formula::Globally(i, f) | Formula::Eventually(i, f) => i.hi + f.horizon(),
        }
    }

    /// Every channel referenced by a predicate, sorted and deduplicated.
    pub fn channels(&self) -> Vec<String> {
        fn walk<'a>(f: &'a Formula, out: &mut Vec<&'a str>) {
            match f {
                Formula::Predicate(p) => out.extend(p.expr.channels()),
                Formula::Not(g) | Formula::Globally(_, g) | Formula::Eventually(_, g) => walk(g, out),
                Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut names = Vec::new();
        walk(self, &mut names);
        let mut names: Vec<String> = names.into_iter().map(str::to_owned).collect();
        names.sort();
        names.dedup();
        names
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Predicate(_) => 1,
            Formula::Not(f) | Formula::Globally(_, f) | Formula::Eventually(_, f) => 1 + f.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

impl fmt::Display for AtomExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, term) in self.terms.iter().enumerate() {
            let (coef, body): (f64, Option<String>) = match term {
                Term::Const(c) => (*c, None),
                Term::Channel { coef, name } => (*coef, Some(name.clone())),
                Term::Abs { coef, inner } => (*coef, Some(format!("abs({inner})"))),
            };
            let negative = coef.is_sign_negative();
            let mag = coef.abs();
            if k == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if negative { '-' } else { '+' })?;
            }
            match body {
                None => write!(f, "{mag:?}")?,
                Some(b) if mag == 1.0 => write!(f, "{b}")?,
                Some(b) => write!(f, "{mag:?}*{b}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Predicate(p) => write!(f, "{} {} {:?}", p.expr, p.cmp.symbol(), p.bound),
            Formula::Not(g) => write!(f, "not ({g})"),
            Formula::And(a, b) => write!(f, "({a}) and ({b})"),
            Formula::Or(a, b) => write!(f, "({a}) or ({b})"),
            Formula::Implies(a, b) => write!(f, "({a}) -> ({b})"),
            Formula::Globally(i, g) => write!(f, "G[{:?},{:?}] ({g})", i.lo, i.hi),
            Formula::Eventually(i, g) => write!(f, "F[{:?},{:?}] ({g})", i.lo, i.hi),
        }
    }
}

impl std::str::FromStr for Formula {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

/// Named channels sampled on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    grid: TimeGrid,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Trace {
    pub fn new(grid: TimeGrid) -> Self {
        Self { grid, names: Vec::new(), columns: Vec::new() }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Adds a channel; names must be unique and lengths must match the grid.
    pub fn insert(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if self.names.contains(&name) {
            return Err(Error::invalid(format!("duplicate channel '{name}'")));
        }
        if values.len() != self.grid.len() {
            return Err(Error::invalid(format!(
                "channel '{name}' has {} samples, grid has {}",
                values.len(),
                self.grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("channel '{name}' has non-finite samples")));
        }
        self.names.push(name);
        self.columns.push(values);
        Ok(())
    }

    pub fn with(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        self.insert(name, values)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }

    pub fn channel(&self, name: &str) -> Result<&[f64]> {
        self.get(name).ok_or_else(|| Error::MissingChannel(name.to_owned()))
    }

    pub fn signal(&self, name: &str) -> Result<Signal> {
        Signal::new(self.grid, self.channel(name)?.to_vec())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn channels(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.names.iter().map(String::as_str).zip(self.columns.iter().map(Vec::as_slice))
    }
}
