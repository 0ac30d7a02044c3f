use std::collections::VecDeque;

use super::{AtomExpr, Formula, Interval, Term, Trace};
use crate::error::{Error, Result};
use crate::signals::TimeGrid;

/// Sample offsets `ka..=kb` selected by an interval on this grid.
fn offsets(i: &Interval, grid: &TimeGrid) -> Result<(usize, usize)> {
    let tol = 1e-9;
    let lo = ((i.lo() / grid.step()) - tol).ceil().max(0.0) as usize;
    let hi = ((i.hi() / grid.step()) + tol).floor() as usize;
    if lo > hi {
        return Err(Error::Semantic(format!(
            "interval [{}, {}] selects no samples at step {}",
            i.lo(),
            i.hi(),
            grid.step()
        )));
    }
    Ok((lo, hi))
}

/// Look-ahead of `f` in whole samples.
fn horizon_steps(f: &Formula, grid: &TimeGrid) -> Result<usize> {
    Ok(match f {
        Formula::Predicate(_) => 0,
        Formula::Not(g) => horizon_steps(g, grid)?,
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            horizon_steps(a, grid)?.max(horizon_steps(b, grid)?)
        }
        Formula::Globally(i, g) | Formula::Eventually(i, g) => offsets(i, grid)?.1 + horizon_steps(g, grid)?,
    })
}

fn check(f: &Formula, trace: &Trace, count: usize) -> Result<()> {
    for name in f.channels() {
        trace.channel(&name)?;
    }
    let grid = trace.grid();
    let needed = horizon_steps(f, grid)? + count - 1;
    if needed >= grid.len() {
        return Err(Error::Horizon { needed: f.horizon(), available: grid.end() });
    }
    Ok(())
}

pub(crate) fn atom_value(expr: &AtomExpr, trace: &Trace, i: usize) -> f64 {
    expr.terms.iter().fold(0.0, |acc, t| {
        acc + match t {
            Term::Const(c) => *c,
            Term::Channel { coef, name } => coef * trace.get(name).expect("checked")[i],
            Term::Abs { coef, inner } => coef * atom_value(inner, trace, i).abs(),
        }
    })
}

/// Robustness of `f` at time 0.
///
/// Positive means the trace satisfies `f`, negative means it violates it.
pub fn robustness(f: &Formula, trace: &Trace) -> Result<f64> {
    Ok(robustness_signal(f, trace, 1)?[0])
}

/// Robustness at the first `count` grid samples.
pub fn robustness_signal(f: &Formula, trace: &Trace, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    check(f, trace, count)?;
    quantitative(f, trace, count)
}

fn quantitative(f: &Formula, trace: &Trace, count: usize) -> Result<Vec<f64>> {
    Ok(match f {
        Formula::Predicate(p) => {
            let e = (0..count).map(|i| atom_value(&p.expr, trace, i));
            use super::Comparator::*;
            match p.cmp {
                Lt | Le => e.map(|v| p.bound - v).collect(),
                Gt | Ge => e.map(|v| v - p.bound).collect(),
            }
        }
        Formula::Not(g) => quantitative(g, trace, count)?.into_iter().map(|v| -v).collect(),
        Formula::And(a, b) => zip(quantitative(a, trace, count)?, quantitative(b, trace, count)?, f64::min),
        Formula::Or(a, b) => zip(quantitative(a, trace, count)?, quantitative(b, trace, count)?, f64::max),
        Formula::Implies(a, b) => {
            zip(quantitative(a, trace, count)?, quantitative(b, trace, count)?, |p, q| (-p).max(q))
        }
        Formula::Globally(i, g) => {
            let (ka, kb) = offsets(i, trace.grid())?;
            let inner = quantitative(g, trace, count + kb)?;
            sliding(&inner, ka, kb, count, |a, b| a <= b)
        }
        Formula::Eventually(i, g) => {
            let (ka, kb) = offsets(i, trace.grid())?;
            let inner = quantitative(g, trace, count + kb)?;
            sliding(&inner, ka, kb, count, |a, b| a >= b)
        }
    })
}

fn zip(a: Vec<f64>, b: Vec<f64>, op: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

/// `out[t]` = extremum of `xs[t+ka..=t+kb]` under `keep` (`<=` for min, `>=` for max),
/// using a monotone deque so each sample enters and leaves once.
fn sliding(xs: &[f64], ka: usize, kb: usize, count: usize, keep: impl Fn(f64, f64) -> bool) -> Vec<f64> {
    if count == 1 {
        let w = &xs[ka..=kb];
        return vec![w.iter().copied().reduce(|a, b| if keep(a, b) { a } else { b }).expect("non-empty")];
    }
    let mut out = Vec::with_capacity(count);
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = ka;
    for t in 0..count {
        while next <= t + kb {
            while let Some(&back) = dq.back() {
                if keep(xs[next], xs[back]) {
                    dq.pop_back();
                } else {
                    break;
                }
            }
            dq.push_back(next);
            next += 1;
        }
        while let Some(&front) = dq.front() {
            if front < t + ka {
                dq.pop_front();
            } else {
                break;
            }
        }
        out.push(xs[*dq.front().expect("window non-empty")]);
    }
    out
}

/// Boolean satisfaction at time 0 on the same sample sets as [`robustness`].
pub fn satisfied(f: &Formula, trace: &Trace) -> Result<bool> {
    check(f, trace, 1)?;
    Ok(boolean(f, trace, 1)?[0])
}

fn boolean(f: &Formula, trace: &Trace, count: usize) -> Result<Vec<bool>> {
    Ok(match f {
        Formula::Predicate(p) => (0..count).map(|i| p.cmp.holds(atom_value(&p.expr, trace, i), p.bound)).collect(),
        Formula::Not(g) => boolean(g, trace, count)?.into_iter().map(|v| !v).collect(),
        Formula::And(a, b) => bzip(boolean(a, trace, count)?, boolean(b, trace, count)?, |p, q| p && q),
        Formula::Or(a, b) => bzip(boolean(a, trace, count)?, boolean(b, trace, count)?, |p, q| p || q),
        Formula::Implies(a, b) => bzip(boolean(a, trace, count)?, boolean(b, trace, count)?, |p, q| !p || q),
        Formula::Globally(i, g) | Formula::Eventually(i, g) => {
            let (ka, kb) = offsets(i, trace.grid())?;
            let inner = boolean(g, trace, count + kb)?;
            let mut prefix = vec![0usize; inner.len() + 1];
            for (k, &v) in inner.iter().enumerate() {
                prefix[k + 1] = prefix[k] + usize::from(v);
            }
            let width = kb - ka + 1;
            let all = matches!(f, Formula::Globally(..));
            (0..count)
                .map(|t| {
                    let hits = prefix[t + kb + 1] - prefix[t + ka];
                    if all {
                        hits == width
                    } else {
                        hits > 0
                    }
                })
                .collect()
        }
    })
}

fn bzip(a: Vec<bool>, b: Vec<bool>, op: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}
