//! Manual fitness expressions.
//!
//! Textual form, as used in config files:
//!
//! ```text
//! scale(mean(Brake,[0,50]),[0,325]) - scale(mean(Throttle,[0,50]),[0,100])
//! 0.5*dist(scale(mean(Throttle,[0,33]),[0,100]), 0.45) + 0.5*scale(mean(Brake,[0,25]),[0,325])
//! scale(min(y4 - y5,[0,100]),[-40,10])
//! ```
//!
//! Window statistics are `min`, `max`, `mean`, `p2p`; slopes are `slope_up` and
//! `slope_down`; `at(ch, t)` reads the sample closest to `t`. The first argument
//! of a statistic may be a linear combination of channels.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::signals::{self, ControlPoints, Signal, SlopeDirection, Stat};
use crate::stl::{AtomExpr, Term, Trace};

#[derive(Debug, Clone, PartialEq)]
pub enum ManualFitnessExpr {
    Const(f64),
    WindowStat { signal: AtomExpr, stat: Stat, window: (f64, f64) },
    SteepestSlope { channel: String, direction: SlopeDirection, window: (f64, f64) },
    At { channel: String, time: f64 },
    Scale { inner: Box<ManualFitnessExpr>, range: (f64, f64) },
    TargetDistance { inner: Box<ManualFitnessExpr>, target: f64 },
    Neg(Box<ManualFitnessExpr>),
    Add(Box<ManualFitnessExpr>, Box<ManualFitnessExpr>),
    Sub(Box<ManualFitnessExpr>, Box<ManualFitnessExpr>),
    Mul(Box<ManualFitnessExpr>, Box<ManualFitnessExpr>),
}

use ManualFitnessExpr as M;

impl ManualFitnessExpr {
    pub fn stat(channel: &str, stat: Stat, window: (f64, f64)) -> Self {
        M::WindowStat { signal: AtomExpr::channel(channel), stat, window }
    }

    pub fn scaled(self, range: (f64, f64)) -> Self {
        M::Scale { inner: Box::new(self), range }
    }

    pub fn distance_to(self, target: f64) -> Self {
        M::TargetDistance { inner: Box::new(self), target }
    }

    pub fn plus(self, rhs: Self) -> Self {
        M::Add(Box::new(self), Box::new(rhs))
    }

    pub fn minus(self, rhs: Self) -> Self {
        M::Sub(Box::new(self), Box::new(rhs))
    }

    pub fn times(self, rhs: Self) -> Self {
        M::Mul(Box::new(self), Box::new(rhs))
    }

    pub fn negated(self) -> Self {
        M::Neg(Box::new(self))
    }

    /// Channels read by the expression.
    pub fn channels(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |e| match e {
            M::WindowStat { signal, .. } => out.extend(signal.channels().into_iter().map(str::to_owned)),
            M::SteepestSlope { channel, .. } | M::At { channel, .. } => out.push(channel.clone()),
            _ => {}
        });
        out.sort();
        out.dedup();
        out
    }

    fn walk(&self, f: &mut impl FnMut(&ManualFitnessExpr)) {
        f(self);
        match self {
            M::Scale { inner, .. } | M::TargetDistance { inner, .. } | M::Neg(inner) => inner.walk(f),
            M::Add(a, b) | M::Sub(a, b) | M::Mul(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            _ => {}
        }
    }
}

/// Evaluates `expr` against a trace.
pub fn manual_fitness(expr: &ManualFitnessExpr, trace: &Trace) -> Result<f64> {
    manual_fitness_with(expr, trace, &BTreeMap::new())
}

/// As [`manual_fitness`], with the control points that generated each input.
///
/// Slope terms use a channel's control points when given, and otherwise treat
/// every trace sample as a control point.
pub fn manual_fitness_with(
    expr: &ManualFitnessExpr,
    trace: &Trace,
    control: &BTreeMap<String, ControlPoints>,
) -> Result<f64> {
    let eval = |e: &ManualFitnessExpr| manual_fitness_with(e, trace, control);
    Ok(match expr {
        M::Const(c) => *c,
        M::WindowStat { signal, stat, window } => signals::window_stat(&derived(signal, trace)?, *stat, *window)?,
        M::SteepestSlope { channel, direction, window } => match control.get(channel) {
            Some(cp) => signals::steepest_slope(cp, *direction, *window)?,
            None => {
                let grid = trace.grid();
                let cp = ControlPoints::new(grid.times().collect(), trace.channel(channel)?.to_vec())?;
                signals::steepest_slope(&cp, *direction, *window)?
            }
        },
        M::At { channel, time } => {
            let values = trace.channel(channel)?;
            let grid = trace.grid();
            if !(*time >= 0.0 && *time <= grid.end()) {
                return Err(Error::invalid(format!("time {time} is outside [0, {}]", grid.end())));
            }
            values[((time / grid.step()).round() as usize).min(values.len() - 1)]
        }
        M::Scale { inner, range } => signals::scale(eval(inner)?, *range)?,
        M::TargetDistance { inner, target } => (eval(inner)? - target).abs(),
        M::Neg(a) => -eval(a)?,
        M::Add(a, b) => eval(a)? + eval(b)?,
        M::Sub(a, b) => eval(a)? - eval(b)?,
        M::Mul(a, b) => eval(a)? * eval(b)?,
    })
}

fn derived(expr: &AtomExpr, trace: &Trace) -> Result<Signal> {
    if let [Term::Channel { coef, name }] = expr.terms.as_slice() {
        if *coef == 1.0 {
            return trace.signal(name);
        }
    }
    for name in expr.channels() {
        trace.channel(name)?;
    }
    let values = (0..trace.grid().len()).map(|i| crate::stl::atom_value(expr, trace, i)).collect();
    Signal::new(*trace.grid(), values)
}

impl fmt::Display for ManualFitnessExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            M::Const(c) if *c < 0.0 => write!(f, "({c:?})"),
            M::Const(c) => write!(f, "{c:?}"),
            M::WindowStat { signal, stat, window } => {
                write!(f, "{}({signal},[{:?},{:?}])", stat.name(), window.0, window.1)
            }
            M::SteepestSlope { channel, direction, window } => {
                let name = match direction {
                    SlopeDirection::Positive => "slope_up",
                    SlopeDirection::Negative => "slope_down",
                };
                write!(f, "{name}({channel},[{:?},{:?}])", window.0, window.1)
            }
            M::At { channel, time } => write!(f, "at({channel},{time:?})"),
            M::Scale { inner, range } => write!(f, "scale({inner},[{:?},{:?}])", range.0, range.1),
            M::TargetDistance { inner, target } => write!(f, "dist({inner},{target:?})"),
            M::Neg(a) => write!(f, "-({a})"),
            M::Add(a, b) => write!(f, "({a} + {b})"),
            M::Sub(a, b) => write!(f, "({a} - {b})"),
            M::Mul(a, b) => write!(f, "({a} * {b})"),
        }
    }
}

impl std::str::FromStr for ManualFitnessExpr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_manual(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                j += 1;
            }
            if j < chars.len() && matches!(chars[j], 'e' | 'E') {
                let mut k = j + 1;
                if k < chars.len() && matches!(chars[k], '+' | '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                    j = k;
                }
            }
            let lexeme: String = chars[i..j].iter().collect();
            let v = lexeme
                .parse()
                .map_err(|_| Error::Parse { offset: start, message: format!("malformed number '{lexeme}'") })?;
            out.push((Tok::Num(v), start));
            i = j;
        } else if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            out.push((Tok::Ident(chars[i..j].iter().collect()), start));
            i = j;
        } else if "()[],+-*".contains(c) {
            out.push((Tok::Sym(c), start));
            i += 1;
        } else {
            return Err(Error::Parse { offset: start, message: format!("unexpected character '{c}'") });
        }
    }
    out.push((Tok::End, chars.len()));
    Ok(out)
}

/// Parses the textual manual-fitness syntax.
pub fn parse_manual(text: &str) -> Result<ManualFitnessExpr> {
    if text.trim().is_empty() {
        return Err(Error::Parse { offset: 0, message: "empty expression".into() });
    }
    let mut p = ManualParser { toks: lex(text)?, pos: 0 };
    let e = p.sum()?;
    if p.peek() != &Tok::End {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

struct ManualParser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl ManualParser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse { offset: self.toks[self.pos].1, message: format!("{msg}, found {:?}", self.peek()) }
    }

    fn eat(&mut self, c: char) -> Result<()> {
        if self.peek() == &Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.err(&format!("expected '{c}'")))
        }
    }

    fn sum(&mut self) -> Result<ManualFitnessExpr> {
        let mut e = self.product()?;
        loop {
            match self.peek() {
                Tok::Sym('+') => {
                    self.bump();
                    e = e.plus(self.product()?);
                }
                Tok::Sym('-') => {
                    self.bump();
                    e = e.minus(self.product()?);
                }
                _ => return Ok(e),
            }
        }
    }

    fn product(&mut self) -> Result<ManualFitnessExpr> {
        let mut e = self.unary()?;
        while self.peek() == &Tok::Sym('*') {
            self.bump();
            e = e.times(self.unary()?);
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<ManualFitnessExpr> {
        if self.peek() == &Tok::Sym('-') {
            self.bump();
            return Ok(match self.unary()? {
                M::Const(c) => M::Const(-c),
                other => other.negated(),
            });
        }
        self.primary()
    }

    fn number(&mut self) -> Result<f64> {
        let neg = self.peek() == &Tok::Sym('-');
        if neg {
            self.bump();
        }
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            _ => Err(self.err("expected number")),
        }
    }

    fn pair(&mut self) -> Result<(f64, f64)> {
        self.eat('[')?;
        let a = self.number()?;
        self.eat(',')?;
        let b = self.number()?;
        self.eat(']')?;
        Ok((a, b))
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.err("expected channel name")),
        }
    }

    /// Linear combination of channels: `[c*]ch (+|- [c*]ch)*`.
    fn signal(&mut self) -> Result<AtomExpr> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        if self.peek() == &Tok::Sym('-') {
            self.bump();
            sign = -1.0;
        }
        loop {
            let coef = if let Tok::Num(v) = self.peek().clone() {
                self.bump();
                if self.peek() == &Tok::Sym('*') {
                    self.bump();
                } else {
                    terms.push(Term::Const(sign * v));
                    match self.next_sign() {
                        Some(s) => {
                            sign = s;
                            continue;
                        }
                        None => break,
                    }
                }
                v
            } else {
                1.0
            };
            terms.push(Term::Channel { coef: sign * coef, name: self.ident()? });
            match self.next_sign() {
                Some(s) => sign = s,
                None => break,
            }
        }
        Ok(AtomExpr { terms })
    }

    fn next_sign(&mut self) -> Option<f64> {
        let s = match self.peek() {
            Tok::Sym('+') => 1.0,
            Tok::Sym('-') => -1.0,
            _ => return None,
        };
        self.bump();
        Some(s)
    }

    fn primary(&mut self) -> Result<ManualFitnessExpr> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(M::Const(v))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.sum()?;
                self.eat(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                self.eat('(')?;
                let e = match name.as_str() {
                    "min" | "max" | "mean" | "p2p" | "peak_to_peak" => {
                        let stat = match name.as_str() {
                            "min" => Stat::Min,
                            "max" => Stat::Max,
                            "mean" => Stat::Mean,
                            _ => Stat::PeakToPeak,
                        };
                        let signal = self.signal()?;
                        self.eat(',')?;
                        M::WindowStat { signal, stat, window: self.pair()? }
                    }
                    "slope_up" | "slope_down" => {
                        let channel = self.ident()?;
                        self.eat(',')?;
                        let direction =
                            if name == "slope_up" { SlopeDirection::Positive } else { SlopeDirection::Negative };
                        M::SteepestSlope { channel, direction, window: self.pair()? }
                    }
                    "at" => {
                        let channel = self.ident()?;
                        self.eat(',')?;
                        M::At { channel, time: self.number()? }
                    }
                    "scale" => {
                        let inner = self.sum()?;
                        self.eat(',')?;
                        inner.scaled(self.pair()?)
                    }
                    "dist" | "target_distance" => {
                        let inner = self.sum()?;
                        self.eat(',')?;
                        inner.distance_to(self.number()?)
                    }
                    _ => {
                        self.pos -= 2;
                        return Err(self.err(&format!("unknown function '{name}'")));
                    }
                };
                self.eat(')')?;
                Ok(e)
            }
            _ => Err(self.err("expected term")),
        }
    }
}
