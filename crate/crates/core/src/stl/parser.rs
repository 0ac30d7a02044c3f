use super::{AtomExpr, Comparator, Formula, Interval, Predicate, Term};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Plus,
    Minus,
    Star,
    Cmp(Comparator),
    Arrow,
    End,
}

/// Token plus the 0-based character offset where it starts.
type Spanned = (Tok, usize);

fn lex(text: &str) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            '+' => Tok::Plus,
            '*' => Tok::Star,
            '-' if chars.get(i + 1) == Some(&'>') => {
                i += 1;
                Tok::Arrow
            }
            '-' => Tok::Minus,
            '<' | '>' => {
                let eq = chars.get(i + 1) == Some(&'=');
                if eq {
                    i += 1;
                }
                Tok::Cmp(match (c, eq) {
                    ('<', false) => Comparator::Lt,
                    ('<', true) => Comparator::Le,
                    ('>', false) => Comparator::Gt,
                    _ => Comparator::Ge,
                })
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
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
                let value = lexeme
                    .parse::<f64>()
                    .map_err(|_| Error::Parse { offset: start, message: format!("malformed number '{lexeme}'") })?;
                i = j - 1;
                Tok::Num(value)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let ident: String = chars[i..j].iter().collect();
                i = j - 1;
                Tok::Ident(ident)
            }
            other => return Err(Error::Parse { offset: start, message: format!("unexpected character '{other}'") }),
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, chars.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

/// Parses formula text into an AST.
///
/// Syntax errors carry the character offset of the offending token; an interval
/// with `a > b` is reported as a semantic error.
pub fn parse(text: &str) -> Result<Formula> {
    if text.trim().is_empty() {
        return Err(Error::Parse { offset: 0, message: "empty formula".into() });
    }
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let f = p.implication()?;
    match p.peek() {
        Tok::End => Ok(f),
        t => Err(p.error(format!("unexpected {}", describe(t)))),
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("'{s}'"),
        Tok::End => "end of input".into(),
        other => format!("{other:?}"),
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: String) -> Error {
        Error::Parse { offset: self.offset(), message }
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {}, found {}", describe(&want), describe(self.peek()))))
        }
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn implication(&mut self) -> Result<Formula> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut f = self.conjunction()?;
        while self.keyword("or") {
            self.bump();
            f = Formula::or(f, self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut f = self.unary()?;
        while self.keyword("and") {
            self.bump();
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula> {
        if self.keyword("not") {
            self.bump();
            return Ok(Formula::not(self.unary()?));
        }
        let temporal =
            matches!(self.peek(), Tok::Ident(s) if s == "G" || s == "F") && *self.peek_at(1) == Tok::LBracket;
        if temporal {
            let globally = self.keyword("G");
            self.bump();
            let interval = self.interval()?;
            let body = Box::new(self.unary()?);
            return Ok(if globally { Formula::Globally(interval, body) } else { Formula::Eventually(interval, body) });
        }
        if *self.peek() == Tok::LParen {
            self.bump();
            let f = self.implication()?;
            self.expect(Tok::RParen)?;
            return Ok(f);
        }
        self.atom()
    }

    fn interval(&mut self) -> Result<Interval> {
        self.expect(Tok::LBracket)?;
        let at = self.offset();
        let lo = self.number()?;
        self.expect(Tok::Comma)?;
        let hi = self.number()?;
        self.expect(Tok::RBracket)?;
        Interval::new(lo, hi).map_err(|e| match e {
            Error::Semantic(m) => Error::Semantic(format!("{m} (at offset {at})")),
            other => other,
        })
    }

    fn number(&mut self) -> Result<f64> {
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(if negative { -v } else { v })
            }
            t => Err(self.error(format!("expected number, found {}", describe(&t)))),
        }
    }

    fn atom(&mut self) -> Result<Formula> {
        let expr = self.expr()?;
        let cmp = match self.peek() {
            Tok::Cmp(c) => *c,
            t => return Err(self.error(format!("expected comparison, found {}", describe(t)))),
        };
        self.bump();
        let bound = self.number()?;
        Ok(Formula::Predicate(Predicate { expr, cmp, bound }))
    }

    fn expr(&mut self) -> Result<AtomExpr> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        if *self.peek() == Tok::Minus {
            self.bump();
            sign = -1.0;
        }
        terms.push(self.term(sign)?);
        loop {
            sign = match self.peek() {
                Tok::Plus => 1.0,
                Tok::Minus => -1.0,
                _ => break,
            };
            self.bump();
            terms.push(self.term(sign)?);
        }
        Ok(AtomExpr { terms })
    }

    fn term(&mut self, sign: f64) -> Result<Term> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                if *self.peek() == Tok::Star {
                    self.bump();
                    self.scaled(sign * v)
                } else {
                    Ok(Term::Const(sign * v))
                }
            }
            Tok::Ident(_) => self.scaled(sign),
            t => Err(self.error(format!("expected signal term, found {}", describe(&t)))),
        }
    }

    /// `ident` or `abs(expr)` multiplied by `coef`.
    fn scaled(&mut self, coef: f64) -> Result<Term> {
        match self.peek().clone() {
            Tok::Ident(name) if name == "abs" && *self.peek_at(1) == Tok::LParen => {
                self.bump();
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(Term::Abs { coef, inner })
            }
            Tok::Ident(name) if !matches!(name.as_str(), "and" | "or" | "not") => {
                self.bump();
                Ok(Term::Channel { coef, name })
            }
            t => Err(self.error(format!("expected channel name, found {}", describe(&t)))),
        }
    }
}
