//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use athena_core::fitness::CATALOG_IDS;
use athena_core::harness::{
    compare, rank_sum, run_experiment, ExperimentConfig, InlineSpec, Mode, Prepared, ProblemSpec,
};
use athena_core::models::simulate;
use athena_core::search::{
    control_points, encode_inputs, falsify_observed, Assumption, InputAssumption, Outcome, SearchConfig,
};
use athena_core::signals::{interpolate, ControlPoints, InterpolationKind, TimeGrid};
use athena_core::stl::{robustness, robustness_signal, satisfied};
use common::{brute_rank_sum, naive_robustness, naive_satisfied, oracle_pchip, random_formula, random_trace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<String, String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.1?}, limit {limit:?}"))?;
    Ok(format!("{took:.1?}"))
}

fn prepare(problem: ProblemSpec, mode: Mode) -> Prepared {
    ExperimentConfig::new(problem, mode).prepare().unwrap()
}

fn catalog(id: &str, mode: Mode) -> Prepared {
    prepare(ProblemSpec::Catalog(id.to_owned()), mode)
}

fn stl_oracle() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut nonzero = 0;
    for case in 0..1000 {
        let dt = [1.0, 0.5, 0.25][rng.gen_range(0..3)];
        let budget = rng.gen_range(0..=100);
        let depth = rng.gen_range(1..=4);
        let f = random_formula(&mut rng, depth, dt, budget);
        let samples = budget + rng.gen_range(2..=10);
        let trace = random_trace(&mut rng, samples, dt);
        let fast = robustness_signal(&f, &trace, samples - budget).map_err(|e| format!("case {case}: {e}"))?;
        for (i, r) in fast.iter().enumerate() {
            let slow = naive_robustness(&f, &trace, i);
            ensure(*r == slow, || format!("case {case} sample {i} ({f}): {r} vs {slow}"))?;
        }
        let r = robustness(&f, &trace).unwrap();
        let b = satisfied(&f, &trace).unwrap();
        ensure(b == naive_satisfied(&f, &trace, 0), || format!("case {case}: boolean semantics differ"))?;
        if r != 0.0 {
            nonzero += 1;
            ensure((r > 0.0) == b, || format!("case {case} ({f}): robustness {r}, satisfied {b}"))?;
        }
    }
    Ok(format!("1000 pairs, {nonzero} nonzero, {}", within(start, Duration::from_secs(30))?))
}

fn combination() -> Result<String, String> {
    let prepared: Vec<Prepared> = CATALOG_IDS.iter().map(|id| catalog(id, Mode::Athena)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..200 {
        let p = &prepared[case % prepared.len()];
        let a = &p.problem.assumption;
        let v = a.sample_uniform(&mut rng);
        let inputs = encode_inputs(a, &v, &p.grid).unwrap();
        let trace = simulate(p.problem.plant.as_ref(), &inputs, &p.grid).unwrap().trace;
        let cps: BTreeMap<String, ControlPoints> = control_points(a, &v, &p.grid).unwrap().into_iter().collect();
        let at = |w: f64| p.fitness.clone().with_p(w).unwrap().assess_with(&trace, &cps, 0, 1).unwrap();
        let (one, zero) = (at(1.0), at(0.0));
        let id = &p.problem.name;
        ensure(one.combined == one.automatic, || format!("{id}: p=1 gives {} not {}", one.combined, one.automatic))?;
        ensure(zero.combined == zero.manual, || format!("{id}: p=0 gives {} not {}", zero.combined, zero.manual))?;
        for w in [0.25, 0.5, 0.75] {
            let c = at(w).combined;
            let want = w * one.automatic + (1.0 - w) * zero.manual;
            ensure((c - want).abs() <= 1e-12, || format!("{id}: p={w} gives {c}, affine value {want}"))?;
        }
    }
    Ok("200 traces over 11 catalog entries".to_owned())
}

fn interpolation() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let n = rng.gen_range(2..=10);
        let mut times = vec![0.0];
        for _ in 1..n {
            times.push(times.last().unwrap() + f64::from(rng.gen_range(1..=16u32)) * 0.25);
        }
        let end = *times.last().unwrap();
        let mut values: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let grid = TimeGrid::new(end, 0.05).unwrap();
        let cp = ControlPoints::new(times.clone(), values.clone()).unwrap();
        let got = interpolate(&cp, InterpolationKind::Pchip, &grid).unwrap().into_values();
        for (i, t) in grid.times().enumerate() {
            let want = oracle_pchip(&times, &values, t);
            let err = (got[i] - want).abs() / (1.0 + want.abs());
            worst = worst.max(err);
            ensure(err <= 1e-12, || format!("case {case}: pchip at {t} is {} not {want}", got[i]))?;
        }

        values.sort_by(f64::total_cmp);
        let cp = ControlPoints::new(times.clone(), values.clone()).unwrap();
        let mono = interpolate(&cp, InterpolationKind::Pchip, &grid).unwrap().into_values();
        ensure(mono.windows(2).all(|w| w[1] >= w[0]), || format!("case {case}: monotone data not monotone"))?;
        let (lo, hi) = (values[0], values[n - 1]);
        ensure(mono.iter().all(|&x| x >= lo && x <= hi), || format!("case {case}: overshoot"))?;

        let coarse = TimeGrid::new(end, 0.25).unwrap();
        for kind in [InterpolationKind::PiecewiseConstant, InterpolationKind::Linear, InterpolationKind::Pchip] {
            let s = interpolate(&cp, kind, &coarse).unwrap().into_values();
            for (t, v) in times.iter().zip(&values) {
                let got = s[(t / 0.25).round() as usize];
                ensure(got == *v, || format!("case {case}: {kind:?} gives {got} at control time {t}, not {v}"))?;
            }
        }
        let single = ControlPoints::new(vec![0.0], vec![values[0]]).unwrap();
        let s = interpolate(&single, InterpolationKind::Constant, &coarse).unwrap();
        ensure(s.values().iter().all(|&x| x == values[0]), || "constant signal moved".to_owned())?;
    }
    Ok(format!("100 sets, worst relative pchip error {worst:.1e}, {}", within(start, Duration::from_secs(10))?))
}

fn integrator() -> Result<String, String> {
    let start = Instant::now();
    let p = catalog("CC1", Mode::Athena);
    let a = &p.problem.assumption;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let v = a.sample_uniform(&mut rng);
        let run = |dt: f64| {
            let grid = TimeGrid::new(100.0, dt).unwrap();
            let inputs = encode_inputs(a, &v, &grid).unwrap();
            simulate(p.problem.plant.as_ref(), &inputs, &grid).unwrap().trace
        };
        let (coarse, fine) = (run(0.01), run(0.005));
        for name in ["y1", "y2", "y3", "y4", "y5"] {
            let (c, f) = (coarse.channel(name).unwrap(), fine.channel(name).unwrap());
            for (i, x) in c.iter().enumerate() {
                worst = worst.max((x - f[2 * i]).abs());
            }
        }
    }
    ensure(worst < 1e-3, || format!("max difference {worst:.3e}"))?;
    Ok(format!("max |dt=0.01 - dt=0.005| = {worst:.1e}, {}", within(start, Duration::from_secs(20))?))
}

fn soundness() -> Result<String, String> {
    let mut failures = 0;
    let mut runs = 0;
    for id in ["AT1", "CC1", "AT2"] {
        for mode in Mode::ALL {
            let p = catalog(id, mode);
            let problem = p.as_problem();
            for seed in 0..2 {
                let cfg = SearchConfig { seed, max_iterations: 120, ..SearchConfig::default() };
                let mut outside = 0;
                let first = falsify_observed(&problem, &cfg, |_, v| {
                    if !problem.assumption.contains(v) {
                        outside += 1;
                    }
                })
                .unwrap();
                ensure(outside == 0, || format!("{id}/{mode} seed {seed}: {outside} candidates outside the box"))?;
                let second = falsify_observed(&problem, &cfg, |_, _| {}).unwrap();
                let (h1, h2) = (serde_json::to_vec(&first).unwrap(), serde_json::to_vec(&second).unwrap());
                ensure(h1 == h2, || format!("{id}/{mode} seed {seed}: reruns differ"))?;
                if let Outcome::FailureFound(tc) = &first.outcome {
                    let inputs = encode_inputs(problem.assumption, &tc.parameters, &p.grid).unwrap();
                    let trace = simulate(problem.plant, &inputs, &p.grid).unwrap().trace;
                    let r = robustness(&p.problem.formula, &trace).unwrap();
                    ensure(r < 0.0 && r == tc.robustness, || format!("{id}/{mode}: replay gives {r}"))?;
                    failures += 1;
                }
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} runs replayed and rerun, {failures} failures confirmed"))
}

fn smoke() -> Result<String, String> {
    let start = Instant::now();
    let mut summary = Vec::new();
    let mut low = Vec::new();
    for id in ["AT1", "CC1"] {
        let mut cfg = ExperimentConfig::new(ProblemSpec::Catalog(id.to_owned()), Mode::Athena);
        cfg.repetitions = 25;
        let report = run_experiment(&cfg, None).map_err(|e| e.to_string())?;
        summary.push(format!("{id} {:.0}%", report.percentage));
        if report.percentage < 80.0 {
            low.push(format!("{id} at {:.0}%", report.percentage));
        }
    }
    let timing = within(start, Duration::from_secs(300))?;
    ensure(low.is_empty(), || format!("below 80%: {}", low.join(", ")))?;
    Ok(format!("{}, {timing}", summary.join(", ")))
}

fn protocol() -> Result<String, String> {
    let mut reports = Vec::new();
    for mode in Mode::ALL {
        let cfg = ExperimentConfig::new(ProblemSpec::Catalog("AT1".to_owned()), mode);
        ensure(cfg.repetitions == 50 && cfg.search.max_iterations == 300, || "defaults drifted".to_owned())?;
        let report = run_experiment(&cfg, None).map_err(|e| e.to_string())?;
        let json: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        for key in ["percentage", "iteration_stats", "runs", "repetitions", "max_iterations", "mode", "p"] {
            ensure(json.get(key).is_some(), || format!("report lacks '{key}'"))?;
        }
        ensure(report.runs.len() == 50, || "wrong run count".to_owned())?;
        let its = report.failure_iterations();
        if let Some(s) = report.iteration_stats {
            ensure(s.count == its.len() && s.count == report.failures, || "stats include non-failing runs".to_owned())?;
        }
        reports.push(report);
    }
    let mut p_values = Vec::new();
    for (i, j) in [(0, 2), (1, 2)] {
        let c = compare(&reports[i], &reports[j]).map_err(|e| e.to_string())?;
        let json = serde_json::to_value(&c).unwrap();
        ensure(json.get("rank_sum").is_some(), || "comparison lacks rank_sum".to_owned())?;
        p_values.push(c.rank_sum.map_or("n/a".to_owned(), |r| format!("{:.3}", r.p_value)));
    }

    // Every pair of group sizes up to 4, every assignment of values from {0, 1, 2}.
    let mut checked = 0;
    for na in 1..=4 {
        for nb in 1..=4 {
            let n = na + nb;
            for code in 0..3usize.pow(n as u32) {
                let pooled: Vec<f64> = (0..n).map(|k| ((code / 3usize.pow(k as u32)) % 3) as f64).collect();
                let (a, b) = pooled.split_at(na);
                let r = rank_sum(a, b).unwrap();
                let (u, p) = brute_rank_sum(a, b);
                ensure(r.exact && r.u == u && (r.p_value - p).abs() < 1e-12, || {
                    format!("rank_sum({a:?}, {b:?}) = ({}, {}), enumeration ({u}, {p})", r.u, r.p_value)
                })?;
                checked += 1;
            }
        }
    }
    let pct: Vec<String> = reports.iter().map(|r| format!("{} {:.0}%", r.mode, r.percentage)).collect();
    Ok(format!(
        "AT1 {}; p(auto vs athena) {}, p(manual vs athena) {}; {checked} exact rank-sum cases",
        pct.join(", "),
        p_values[0],
        p_values[1]
    ))
}

fn unfalsifiable() -> Result<String, String> {
    let spec = InlineSpec {
        name: Some("guard".to_owned()),
        plant: "passthrough".to_owned(),
        formula: "G[0,10] (x < 2)".to_owned(),
        manual: "-scale(max(u,[0,10]),[0,1])".to_owned(),
        assumption: Assumption::new(vec![InputAssumption::new("u", InterpolationKind::Pchip, (0.0, 1.0), 5)]).unwrap(),
        auto_scale: 2.0,
        horizon: None,
    };
    let p = prepare(ProblemSpec::Inline(spec), Mode::Athena);
    let mut least = f64::INFINITY;
    for seed in 0..10 {
        let cfg = SearchConfig { seed, ..SearchConfig::default() };
        let r = falsify_observed(&p.as_problem(), &cfg, |_, _| {}).unwrap();
        ensure(r.outcome == Outcome::NoFailureFound, || format!("seed {seed} reported a failure"))?;
        ensure(r.best_robustness > 0.0, || format!("seed {seed}: best robustness {}", r.best_robustness))?;
        least = least.min(r.best_robustness);
    }
    Ok(format!("10/10 no failure, smallest best robustness {least}"))
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 8] = [
        ("STL oracle equivalence", stl_oracle),
        ("combination identities", combination),
        ("interpolation conformance", interpolation),
        ("integrator step check", integrator),
        ("falsification soundness and determinism", soundness),
        ("smoke falsification", smoke),
        ("protocol fidelity", protocol),
        ("unfalsifiable guard", unfalsifiable),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("criterion {n} PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} FAIL {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
