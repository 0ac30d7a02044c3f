//! Reference implementations and generators shared by the integration tests.
//!
//! The oracles are written from the textbook definitions and deliberately skip
//! every optimization used by the library (no sliding windows, no DP, no
//! pre-sampled inputs), so agreement is meaningful.
#![allow(dead_code)]

use athena_core::signals::TimeGrid;
use athena_core::stl::{AtomExpr, Comparator, Formula, Interval, Term, Trace};
use rand::Rng;

pub const TIME_TOL: f64 = 1e-9;

fn atom(expr: &AtomExpr, trace: &Trace, i: usize) -> f64 {
    let mut acc = 0.0;
    for t in &expr.terms {
        acc += match t {
            Term::Const(c) => *c,
            Term::Channel { coef, name } => coef * trace.get(name).unwrap()[i],
            Term::Abs { coef, inner } => coef * atom(inner, trace, i).abs(),
        };
    }
    acc
}

/// Grid indices `u` with `t + a <= u <= t + b`, compared in seconds.
fn window(trace: &Trace, i: usize, iv: &Interval) -> Vec<usize> {
    let g = trace.grid();
    let t = i as f64 * g.step();
    let us: Vec<usize> = (0..g.len())
        .filter(|&u| {
            let tu = u as f64 * g.step();
            tu >= t + iv.lo() - TIME_TOL && tu <= t + iv.hi() + TIME_TOL
        })
        .collect();
    assert!(!us.is_empty(), "oracle window at sample {i} is empty");
    us
}

/// Space robustness at sample `i`, by direct recursion.
pub fn naive_robustness(f: &Formula, trace: &Trace, i: usize) -> f64 {
    match f {
        Formula::Predicate(p) => {
            let e = atom(&p.expr, trace, i);
            match p.cmp {
                Comparator::Lt | Comparator::Le => p.bound - e,
                Comparator::Gt | Comparator::Ge => e - p.bound,
            }
        }
        Formula::Not(g) => -naive_robustness(g, trace, i),
        Formula::And(a, b) => naive_robustness(a, trace, i).min(naive_robustness(b, trace, i)),
        Formula::Or(a, b) => naive_robustness(a, trace, i).max(naive_robustness(b, trace, i)),
        Formula::Implies(a, b) => (-naive_robustness(a, trace, i)).max(naive_robustness(b, trace, i)),
        Formula::Globally(iv, g) => {
            window(trace, i, iv).into_iter().map(|u| naive_robustness(g, trace, u)).fold(f64::INFINITY, f64::min)
        }
        Formula::Eventually(iv, g) => {
            window(trace, i, iv).into_iter().map(|u| naive_robustness(g, trace, u)).fold(f64::NEG_INFINITY, f64::max)
        }
    }
}

/// Classical boolean semantics at sample `i`.
pub fn naive_satisfied(f: &Formula, trace: &Trace, i: usize) -> bool {
    match f {
        Formula::Predicate(p) => {
            let e = atom(&p.expr, trace, i);
            match p.cmp {
                Comparator::Lt => e < p.bound,
                Comparator::Le => e <= p.bound,
                Comparator::Gt => e > p.bound,
                Comparator::Ge => e >= p.bound,
            }
        }
        Formula::Not(g) => !naive_satisfied(g, trace, i),
        Formula::And(a, b) => naive_satisfied(a, trace, i) && naive_satisfied(b, trace, i),
        Formula::Or(a, b) => naive_satisfied(a, trace, i) || naive_satisfied(b, trace, i),
        Formula::Implies(a, b) => !naive_satisfied(a, trace, i) || naive_satisfied(b, trace, i),
        Formula::Globally(iv, g) => window(trace, i, iv).into_iter().all(|u| naive_satisfied(g, trace, u)),
        Formula::Eventually(iv, g) => window(trace, i, iv).into_iter().any(|u| naive_satisfied(g, trace, u)),
    }
}

pub const CHANNELS: [&str; 3] = ["x", "y", "z"];

fn random_expr(rng: &mut impl Rng, allow_abs: bool) -> AtomExpr {
    let n = rng.gen_range(1..=3);
    let mut terms = Vec::new();
    for _ in 0..n {
        let coef = [1.0, -1.0, 0.5, 2.0, -0.25][rng.gen_range(0..5)];
        terms.push(match rng.gen_range(0..6) {
            0 => Term::Const(rng.gen_range(-2.0..2.0)),
            1 if allow_abs => Term::Abs { coef, inner: random_expr(rng, false) },
            _ => Term::Channel { coef, name: CHANNELS[rng.gen_range(0..3)].to_owned() },
        });
    }
    if terms.iter().all(|t| matches!(t, Term::Const(_))) {
        terms.push(Term::Channel { coef: 1.0, name: CHANNELS[rng.gen_range(0..3)].to_owned() });
    }
    AtomExpr { terms }
}

fn random_predicate(rng: &mut impl Rng) -> Formula {
    let cmp = [Comparator::Lt, Comparator::Le, Comparator::Gt, Comparator::Ge][rng.gen_range(0..4)];
    // Half-integer bounds make exact ties with quantized traces likely.
    let bound = if rng.gen_bool(0.5) { rng.gen_range(-4..=4) as f64 / 2.0 } else { rng.gen_range(-2.0..2.0) };
    Formula::predicate(random_expr(rng, true), cmp, bound)
}

/// Interval covering sample offsets `ka..=kb` exactly, with optional slack that
/// selects no extra samples.
fn random_interval(rng: &mut impl Rng, dt: f64, max_k: usize) -> (f64, f64, usize) {
    let kb = rng.gen_range(0..=max_k);
    let ka = rng.gen_range(0..=kb);
    let slack_a = if rng.gen_bool(0.5) { 0.0 } else { 0.3 * dt };
    let slack_b = if rng.gen_bool(0.5) { 0.0 } else { 0.3 * dt };
    let a = (ka as f64 * dt - slack_a).max(0.0);
    let b = kb as f64 * dt + slack_b;
    (a, b, kb)
}

/// Random formula of depth at most `depth` whose look-ahead is at most `budget` samples.
pub fn random_formula(rng: &mut impl Rng, depth: usize, dt: f64, budget: usize) -> Formula {
    if depth <= 1 {
        return random_predicate(rng);
    }
    match rng.gen_range(0..7) {
        0 => Formula::not(random_formula(rng, depth - 1, dt, budget)),
        1 => Formula::and(random_formula(rng, depth - 1, dt, budget), random_formula(rng, depth - 1, dt, budget)),
        2 => Formula::or(random_formula(rng, depth - 1, dt, budget), random_formula(rng, depth - 1, dt, budget)),
        3 => Formula::implies(random_formula(rng, depth - 1, dt, budget), random_formula(rng, depth - 1, dt, budget)),
        4 | 5 => {
            let (a, b, kb) = random_interval(rng, dt, budget);
            let inner = random_formula(rng, depth - 1, dt, budget - kb);
            if rng.gen_bool(0.5) {
                Formula::globally(a, b, inner).unwrap()
            } else {
                Formula::eventually(a, b, inner).unwrap()
            }
        }
        _ => random_predicate(rng),
    }
}

/// Three-channel trace; half the time values are quantized to multiples of 0.5.
pub fn random_trace(rng: &mut impl Rng, samples: usize, dt: f64) -> Trace {
    let grid = TimeGrid::new((samples - 1) as f64 * dt, dt).unwrap();
    let quantized = rng.gen_bool(0.5);
    let mut trace = Trace::new(grid);
    for name in CHANNELS {
        let values = (0..samples)
            .map(|_| {
                let v: f64 = rng.gen_range(-3.0..3.0);
                if quantized {
                    (v * 2.0).round() / 2.0
                } else {
                    v
                }
            })
            .collect();
        trace.insert(name, values).unwrap();
    }
    trace
}

/// Fritsch–Carlson slopes, straight from the defining formulas.
pub fn oracle_pchip_slopes(t: &[f64], v: &[f64]) -> Vec<f64> {
    let n = t.len();
    let h: Vec<f64> = (0..n - 1).map(|k| t[k + 1] - t[k]).collect();
    let del: Vec<f64> = (0..n - 1).map(|k| (v[k + 1] - v[k]) / h[k]).collect();
    if n == 2 {
        return vec![del[0]; 2];
    }
    let sign = |x: f64| {
        if x > 0.0 {
            1
        } else if x < 0.0 {
            -1
        } else {
            0
        }
    };
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if sign(d) != sign(d0) {
            0.0
        } else if sign(d0) != sign(d1) && d.abs() > (3.0 * d0).abs() {
            3.0 * d0
        } else {
            d
        }
    };
    let mut d = vec![0.0; n];
    d[0] = end(h[0], h[1], del[0], del[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    for k in 1..n - 1 {
        if sign(del[k - 1]) * sign(del[k]) > 0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    d
}

/// Piecewise cubic Hermite interpolant evaluated in Horner form.
pub fn oracle_pchip(t: &[f64], v: &[f64], at: f64) -> f64 {
    let d = oracle_pchip_slopes(t, v);
    let mut k = 0;
    while k + 2 < t.len() && at >= t[k + 1] {
        k += 1;
    }
    let h = t[k + 1] - t[k];
    let s = (at - t[k]) / h;
    let dv = v[k + 1] - v[k];
    let c1 = h * d[k];
    let c2 = 3.0 * dv - 2.0 * h * d[k] - h * d[k + 1];
    let c3 = -2.0 * dv + h * d[k] + h * d[k + 1];
    v[k] + s * (c1 + s * (c2 + s * c3))
}

/// Two-sided rank-sum p-value and U for `a` by enumerating every split of the pooled sample.
pub fn brute_rank_sum(a: &[f64], b: &[f64]) -> (f64, f64) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    // doubled midranks: 2*rank = (#less * 2) + (#equal) + 1
    let doubled: Vec<i64> = pooled
        .iter()
        .map(|&x| {
            let less = pooled.iter().filter(|&&y| y < x).count() as i64;
            let equal = pooled.iter().filter(|&&y| y == x).count() as i64;
            2 * less + equal + 1
        })
        .collect();
    let u: f64 = a
        .iter()
        .map(|&x| {
            b.iter()
                .map(|&y| {
                    if x > y {
                        1.0
                    } else if x == y {
                        0.5
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
        })
        .sum();
    let na = a.len();
    let mean2 = (na * (n + 1)) as i64;
    let observed: i64 = doubled[..na].iter().sum();
    let dev = (observed - mean2).abs();
    let (mut total, mut extreme) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != na {
            continue;
        }
        let s: i64 = (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| doubled[i]).sum();
        total += 1;
        if (s - mean2).abs() >= dev {
            extreme += 1;
        }
    }
    (u, extreme as f64 / total as f64)
}

/// ChasingCars positions integrated with classical RK4 at `dt`, inputs given as
/// functions of time. Returns `y1..y5` sampled every `every` steps.
pub fn oracle_chasing_cars(
    gains: (f64, f64, f64, f64, f64, f64),
    throttle: impl Fn(f64) -> f64,
    brake: impl Fn(f64) -> f64,
    horizon: f64,
    dt: f64,
    every: usize,
) -> Vec<[f64; 5]> {
    let (kt, kb, drag, stiff, damp, gap) = gains;
    let f = |t: f64, s: &[f64; 10]| -> [f64; 10] {
        let mut d = [0.0; 10];
        d[..5].copy_from_slice(&s[5..]);
        d[5] = kt * throttle(t) - kb * brake(t) - drag * s[5];
        for k in 1..5 {
            d[5 + k] = stiff * ((s[k - 1] - s[k]) - gap) - damp * s[5 + k] + damp * s[5 + k - 1];
        }
        d
    };
    let steps = (horizon / dt).round() as usize;
    let mut s = [40.0, 30.0, 20.0, 10.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let mut out = vec![[s[0], s[1], s[2], s[3], s[4]]];
    for i in 0..steps {
        let t = i as f64 * dt;
        let add = |s: &[f64; 10], k: &[f64; 10], h: f64| {
            let mut r = *s;
            for j in 0..10 {
                r[j] += h * k[j];
            }
            r
        };
        let k1 = f(t, &s);
        let k2 = f(t + dt / 2.0, &add(&s, &k1, dt / 2.0));
        let k3 = f(t + dt / 2.0, &add(&s, &k2, dt / 2.0));
        let k4 = f(t + dt, &add(&s, &k3, dt));
        for j in 0..10 {
            s[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if (i + 1) % every == 0 {
            out.push([s[0], s[1], s[2], s[3], s[4]]);
        }
    }
    out
}
