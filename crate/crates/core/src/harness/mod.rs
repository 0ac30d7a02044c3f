//! Repeated seeded falsification runs, their aggregate report, and report comparison.
//!
//! A run with index `i` uses seed `base_seed + i`. Runs may execute in parallel;
//! results are always assembled in run-index order, so a report depends only on
//! its configuration.

pub mod io;
pub mod stats;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::{catalog, parse_manual, FitnessAssessment, ManualFitnessExpr};
use crate::models::{builtin, PlantModel, DEFAULT_DT};
use crate::search::{falsify, Assumption, Outcome, Problem, RunResult, SearchConfig};
use crate::signals::TimeGrid;
use crate::stl::{parse, Formula};

pub use stats::{rank_sum, RankSum};

/// Which fitness drives the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Robustness only (p = 1).
    Automatic,
    /// Manual fitness only (p = 0).
    Manual,
    /// Even blend (p = 0.5) unless a schedule is configured.
    Athena,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Automatic, Mode::Manual, Mode::Athena];

    pub fn p(self) -> f64 {
        match self {
            Mode::Automatic => 1.0,
            Mode::Manual => 0.0,
            Mode::Athena => 0.5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Automatic => "automatic",
            Mode::Manual => "manual",
            Mode::Athena => "athena",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "automatic" | "auto" => Ok(Mode::Automatic),
            "manual" => Ok(Mode::Manual),
            "athena" => Ok(Mode::Athena),
            _ => Err(Error::invalid(format!("unknown mode '{s}' (automatic, manual, athena)"))),
        }
    }
}

/// A requirement written out in full instead of taken from the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub plant: String,
    pub formula: String,
    pub manual: String,
    pub assumption: Assumption,
    pub auto_scale: f64,
    /// Defaults to the plant horizon stretched to cover the formula.
    #[serde(default)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemSpec {
    Catalog(String),
    Inline(InlineSpec),
}

/// A [`ProblemSpec`] with every name looked up and every text parsed.
#[derive(Debug, Clone)]
pub struct ResolvedProblem {
    pub name: String,
    pub plant: Arc<dyn PlantModel>,
    pub formula: Formula,
    pub manual: ManualFitnessExpr,
    pub assumption: Assumption,
    pub auto_scale: f64,
    pub horizon: f64,
}

impl ProblemSpec {
    pub fn resolve(&self) -> Result<ResolvedProblem> {
        match self {
            ProblemSpec::Catalog(id) => {
                let e = catalog(id)?;
                Ok(ResolvedProblem {
                    name: e.id.to_owned(),
                    plant: builtin(e.plant)?,
                    formula: e.formula,
                    manual: e.manual,
                    assumption: e.assumption,
                    auto_scale: e.auto_scale,
                    horizon: e.horizon,
                })
            }
            ProblemSpec::Inline(s) => {
                let plant = builtin(&s.plant)?;
                let formula = parse(&s.formula)?;
                let horizon = s.horizon.unwrap_or_else(|| plant.horizon().max(formula.horizon()));
                s.assumption.validate()?;
                Ok(ResolvedProblem {
                    name: s.name.clone().unwrap_or_else(|| "inline".to_owned()),
                    plant,
                    formula,
                    manual: parse_manual(&s.manual)?,
                    assumption: s.assumption.clone(),
                    auto_scale: s.auto_scale,
                    horizon,
                })
            }
        }
    }
}

impl ResolvedProblem {
    pub fn fitness(&self, mode: Mode, schedule: Option<(f64, f64)>, threshold: f64) -> Result<FitnessAssessment> {
        let f = FitnessAssessment::new(self.formula.clone(), self.manual.clone(), mode.p(), self.auto_scale)?
            .with_threshold(threshold);
        match (mode, schedule) {
            (Mode::Athena, Some((start, end))) => f.with_schedule(start, end),
            _ => Ok(f),
        }
    }

    pub fn grid(&self, dt: f64) -> Result<TimeGrid> {
        TimeGrid::new(self.horizon, dt)
    }
}

fn default_repetitions() -> usize {
    50
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

/// One (requirement, mode) experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub mode: Mode,
    /// Linear p schedule `(start, end)`; only used in athena mode.
    #[serde(default)]
    pub schedule: Option<(f64, f64)>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// `seed` is ignored; each run gets its own.
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub threshold: f64,
}

impl ExperimentConfig {
    pub fn new(problem: ProblemSpec, mode: Mode) -> Self {
        Self {
            problem,
            mode,
            schedule: None,
            repetitions: default_repetitions(),
            base_seed: 0,
            search: SearchConfig::default(),
            dt: DEFAULT_DT,
            threshold: 0.0,
        }
    }

    /// Checks everything that can fail before the first run.
    pub fn prepare(&self) -> Result<Prepared> {
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        self.search.validate()?;
        if !self.threshold.is_finite() {
            return Err(Error::invalid("threshold must be finite"));
        }
        let problem = self.problem.resolve()?;
        let fitness = problem.fitness(self.mode, self.schedule, self.threshold)?;
        let grid = problem.grid(self.dt)?;
        Problem { plant: problem.plant.as_ref(), assumption: &problem.assumption, fitness: &fitness, grid }
            .validate()?;
        Ok(Prepared { problem, fitness, grid })
    }
}

/// A validated experiment, ready to run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub problem: ResolvedProblem,
    pub fitness: FitnessAssessment,
    pub grid: TimeGrid,
}

impl Prepared {
    pub fn as_problem(&self) -> Problem<'_> {
        Problem {
            plant: self.problem.plant.as_ref(),
            assumption: &self.problem.assumption,
            fitness: &self.fitness,
            grid: self.grid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    FailureFound,
    NoFailureFound,
    Error,
}

/// Per-run summary row; also the CSV schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub run: usize,
    pub seed: u64,
    pub status: RunStatus,
    pub iterations: Option<usize>,
    pub best_robustness: Option<f64>,
    pub best_combined: Option<f64>,
    pub error: Option<String>,
}

impl RunRow {
    fn from_result(run: usize, seed: u64, r: Result<RunResult>) -> Self {
        match r {
            Ok(r) => RunRow {
                run,
                seed,
                status: match r.outcome {
                    Outcome::FailureFound(_) => RunStatus::FailureFound,
                    Outcome::NoFailureFound => RunStatus::NoFailureFound,
                },
                iterations: Some(r.iterations_used),
                best_robustness: Some(r.best_robustness),
                best_combined: Some(r.best_combined),
                error: None,
            },
            Err(e) => RunRow {
                run,
                seed,
                status: RunStatus::Error,
                iterations: None,
                best_robustness: None,
                best_combined: None,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub count: usize,
    pub mean: f64,
    pub min: usize,
    pub max: usize,
    /// Sample standard deviation; 0 for a single value.
    pub stddev: f64,
}

impl IterationStats {
    pub fn of(xs: &[usize]) -> Option<Self> {
        let (&min, &max) = (xs.iter().min()?, xs.iter().max()?);
        let n = xs.len() as f64;
        let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
        let stddev = if xs.len() < 2 {
            0.0
        } else {
            (xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Some(Self { count: xs.len(), mean, min, max, stddev })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Seconds since the Unix epoch at the start of the experiment.
    pub started_at: u64,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub requirement: String,
    pub mode: Mode,
    pub p: f64,
    pub schedule: Option<(f64, f64)>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub max_iterations: usize,
    pub failures: usize,
    pub errors: usize,
    pub percentage: f64,
    /// Over failure-revealing runs only; absent when there are none.
    pub iteration_stats: Option<IterationStats>,
    pub runs: Vec<RunRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl ExperimentReport {
    /// Iteration counts of the failure-revealing runs, in run order.
    pub fn failure_iterations(&self) -> Vec<usize> {
        self.runs.iter().filter(|r| r.status == RunStatus::FailureFound).filter_map(|r| r.iterations).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_runs_csv(&self, out: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.runs {
            w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn percentage(failures: usize, repetitions: usize) -> f64 {
    100.0 * failures as f64 / repetitions as f64
}

/// Runs `cfg.repetitions` falsification runs on up to `jobs` threads
/// (all available cores when `None`).
///
/// Configuration problems are reported before any run starts; a run that fails
/// later is recorded in its row and the batch continues.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<ExperimentReport> {
    let prepared = cfg.prepare()?;
    let started_at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();

    let one = |i: usize| {
        let seed = cfg.base_seed.wrapping_add(i as u64);
        let search = SearchConfig { seed, ..cfg.search.clone() };
        RunRow::from_result(i, seed, falsify(&prepared.as_problem(), &search))
    };
    let runs: Vec<RunRow> = match jobs {
        Some(1) => (0..cfg.repetitions).map(one).collect(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(|| (0..cfg.repetitions).into_par_iter().map(one).collect()),
        None => (0..cfg.repetitions).into_par_iter().map(one).collect(),
    };

    let failures = runs.iter().filter(|r| r.status == RunStatus::FailureFound).count();
    let errors = runs.iter().filter(|r| r.status == RunStatus::Error).count();
    let mut report = ExperimentReport {
        requirement: prepared.problem.name.clone(),
        mode: cfg.mode,
        p: cfg.mode.p(),
        schedule: if cfg.mode == Mode::Athena { cfg.schedule } else { None },
        repetitions: cfg.repetitions,
        base_seed: cfg.base_seed,
        max_iterations: cfg.search.max_iterations,
        failures,
        errors,
        percentage: percentage(failures, cfg.repetitions),
        iteration_stats: None,
        runs,
        timing: None,
    };
    report.iteration_stats = IterationStats::of(&report.failure_iterations());
    report.timing = Some(Timing { started_at, wall_clock_seconds: clock.elapsed().as_secs_f64() });
    Ok(report)
}

/// A bench configuration file: every listed requirement under every listed mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub requirements: Vec<ProblemSpec>,
    #[serde(default = "all_modes")]
    pub modes: Vec<Mode>,
    #[serde(default)]
    pub schedule: Option<(f64, f64)>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub threshold: f64,
}

fn all_modes() -> Vec<Mode> {
    Mode::ALL.to_vec()
}

impl SuiteConfig {
    /// Expands into one experiment per (requirement, mode), requirement-major.
    pub fn experiments(&self) -> Result<Vec<ExperimentConfig>> {
        if self.requirements.is_empty() || self.modes.is_empty() {
            return Err(Error::invalid("suite needs at least one requirement and one mode"));
        }
        let out: Vec<ExperimentConfig> = self
            .requirements
            .iter()
            .flat_map(|req| {
                self.modes.iter().map(move |&mode| ExperimentConfig {
                    problem: req.clone(),
                    mode,
                    schedule: self.schedule,
                    repetitions: self.repetitions,
                    base_seed: self.base_seed,
                    search: self.search.clone(),
                    dt: self.dt,
                    threshold: self.threshold,
                })
            })
            .collect();
        for e in &out {
            e.prepare()?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub percentage_a: f64,
    pub percentage_b: f64,
    /// `percentage_b - percentage_a`.
    pub percentage_delta: f64,
    pub mean_iterations_a: Option<f64>,
    pub mean_iterations_b: Option<f64>,
    /// Rank-sum test on the iteration counts of failure-revealing runs;
    /// absent when either report has none.
    pub rank_sum: Option<RankSum>,
}

/// Compares two reports, typically one requirement under two modes.
pub fn compare(a: &ExperimentReport, b: &ExperimentReport) -> Result<Comparison> {
    let label = |r: &ExperimentReport| format!("{}/{}", r.requirement, r.mode);
    let ia: Vec<f64> = a.failure_iterations().into_iter().map(|x| x as f64).collect();
    let ib: Vec<f64> = b.failure_iterations().into_iter().map(|x| x as f64).collect();
    let rank_sum = if ia.is_empty() || ib.is_empty() { None } else { Some(rank_sum(&ia, &ib)?) };
    Ok(Comparison {
        a: label(a),
        b: label(b),
        percentage_a: a.percentage,
        percentage_b: b.percentage,
        percentage_delta: b.percentage - a.percentage,
        mean_iterations_a: a.iteration_stats.map(|s| s.mean),
        mean_iterations_b: b.iteration_stats.map(|s| s.mean),
        rank_sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_weights() {
        assert_eq!(Mode::ALL.map(Mode::p), [1.0, 0.0, 0.5]);
        assert_eq!("Athena".parse::<Mode>().unwrap(), Mode::Athena);
        assert!("sa".parse::<Mode>().is_err());
    }

    #[test]
    fn iteration_stats() {
        assert_eq!(IterationStats::of(&[]), None);
        let s = IterationStats::of(&[2, 4, 4, 4, 5, 5, 7, 9]).unwrap();
        assert_eq!((s.count, s.min, s.max, s.mean), (8, 2, 9, 5.0));
        assert!((s.stddev - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(IterationStats::of(&[3]).unwrap().stddev, 0.0);
    }

    #[test]
    fn config_errors_come_first() {
        let mut cfg = ExperimentConfig::new(ProblemSpec::Catalog("CC1".into()), Mode::Athena);
        cfg.repetitions = 0;
        assert!(run_experiment(&cfg, Some(1)).is_err());
        let cfg = ExperimentConfig::new(ProblemSpec::Catalog("nope".into()), Mode::Athena);
        assert!(matches!(run_experiment(&cfg, Some(1)), Err(Error::NotFound(_))));
    }

    #[test]
    fn config_json_shape() {
        let text = r#"{"problem": {"catalog": "AT1"}, "mode": "manual", "repetitions": 3}"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.problem, ProblemSpec::Catalog("AT1".into()));
        assert_eq!(cfg.search, SearchConfig::default());
        assert_eq!(cfg.dt, DEFAULT_DT);
        assert_eq!(cfg.repetitions, 3);
    }
}
