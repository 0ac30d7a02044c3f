//! Input generation and the falsification loop.
//!
//! Each input port is described by an [`InputAssumption`]: interpolation kind,
//! value range, and number of evenly spaced control points. The search space is
//! the box of all control values, flattened port by port into a
//! [`ParameterVector`]. Simulated annealing walks that box, simulating and
//! scoring each candidate, until a candidate violates the requirement or the
//! budget runs out.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::{FitnessAssessment, FitnessValue};
use crate::models::{simulate, PlantModel};
use crate::signals::{interpolate, ControlPoints, InterpolationKind, Signal, TimeGrid};

/// Floor on the temperature used to size proposals.
const MIN_PROPOSAL_TEMPERATURE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputAssumption {
    pub port: String,
    pub kind: InterpolationKind,
    pub range: (f64, f64),
    pub control_points: usize,
}

impl InputAssumption {
    pub fn new(port: impl Into<String>, kind: InterpolationKind, range: (f64, f64), control_points: usize) -> Self {
        Self { port: port.into(), kind, range, control_points }
    }

    fn width(&self) -> f64 {
        self.range.1 - self.range.0
    }
}

/// Per-port constraints, in plant input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assumption {
    pub inputs: Vec<InputAssumption>,
}

impl Assumption {
    pub fn new(inputs: Vec<InputAssumption>) -> Result<Self> {
        let a = Self { inputs };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        for ia in &self.inputs {
            let (lo, hi) = ia.range;
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::invalid(format!("port '{}': range [{lo}, {hi}] needs lo < hi", ia.port)));
            }
            ia.kind.check_arity(ia.control_points).map_err(|e| Error::invalid(format!("port '{}': {e}", ia.port)))?;
        }
        Ok(())
    }

    /// Checks that the ports are exactly the plant's inputs, in order.
    pub fn check_ports(&self, plant: &dyn PlantModel) -> Result<()> {
        let ours: Vec<&str> = self.inputs.iter().map(|i| i.port.as_str()).collect();
        let theirs: Vec<&str> = plant.ports().inputs().iter().map(String::as_str).collect();
        if ours != theirs {
            return Err(Error::PortMismatch(format!(
                "assumption covers {ours:?} but '{}' has inputs {theirs:?}",
                plant.name()
            )));
        }
        Ok(())
    }

    /// Length of the parameter vector.
    pub fn dimension(&self) -> usize {
        self.inputs.iter().map(|i| i.control_points).sum()
    }

    pub fn contains(&self, v: &ParameterVector) -> bool {
        v.len() == self.dimension() && self.bounds().zip(v.values()).all(|((lo, hi), x)| (lo..=hi).contains(x))
    }

    /// `(lo, hi)` for every coordinate.
    pub fn bounds(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.inputs.iter().flat_map(|i| std::iter::repeat_n(i.range, i.control_points))
    }

    fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.inputs.iter().flat_map(|i| std::iter::repeat_n(i.width(), i.control_points))
    }

    pub fn sample_uniform(&self, rng: &mut impl Rng) -> ParameterVector {
        ParameterVector(self.bounds().map(|(lo, hi)| rng.gen_range(lo..=hi)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(pub Vec<f64>);

impl ParameterVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Control points per port for `v`, in assumption order.
pub fn control_points(a: &Assumption, v: &ParameterVector, grid: &TimeGrid) -> Result<Vec<(String, ControlPoints)>> {
    if v.len() != a.dimension() {
        return Err(Error::invalid(format!(
            "parameter vector has {} entries, assumption needs {}",
            v.len(),
            a.dimension()
        )));
    }
    let mut offset = 0;
    a.inputs
        .iter()
        .map(|ia| {
            let slice = v.values()[offset..offset + ia.control_points].to_vec();
            offset += ia.control_points;
            Ok((ia.port.clone(), ControlPoints::uniform(grid, slice)?))
        })
        .collect()
}

/// Builds one input signal per port from the flat control-value vector.
pub fn encode_inputs(a: &Assumption, v: &ParameterVector, grid: &TimeGrid) -> Result<BTreeMap<String, Signal>> {
    let cps = control_points(a, v, grid)?;
    a.inputs.iter().zip(cps).map(|(ia, (port, cp))| Ok((port, interpolate(&cp, ia.kind, grid)?))).collect()
}

/// Gaussian neighbour of `current`, clamped to the assumption box.
///
/// Each coordinate moves with stddev `sigma * width * max(temperature, 0.05)`.
pub fn propose(
    current: &ParameterVector,
    a: &Assumption,
    sigma: f64,
    temperature: f64,
    rng: &mut impl Rng,
) -> ParameterVector {
    let spread = sigma * temperature.max(MIN_PROPOSAL_TEMPERATURE);
    ParameterVector(
        current
            .values()
            .iter()
            .zip(a.bounds().zip(a.widths()))
            .map(|(&x, ((lo, hi), w))| {
                let step: f64 = Normal::new(0.0, spread * w).expect("positive stddev").sample(rng);
                (x + step).clamp(lo, hi)
            })
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub max_iterations: usize,
    pub seed: u64,
    /// Acceptance temperature at the start of each annealing epoch, in combined-fitness units.
    pub initial_temperature: f64,
    pub cooling: f64,
    pub sigma: f64,
    /// Non-improving iterations before restarting from a fresh uniform draw
    /// with the temperature reset.
    pub restart_after: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { max_iterations: 300, seed: 0, initial_temperature: 0.02, cooling: 0.97, sigma: 0.1, restart_after: 50 }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(Error::invalid("cooling factor must lie in (0, 1)"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::invalid("sigma must be positive"));
        }
        if !(self.initial_temperature >= 0.0) {
            return Err(Error::invalid("initial temperature must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub parameters: ParameterVector,
    pub inputs: BTreeMap<String, Vec<f64>>,
    pub robustness: f64,
    pub seed: u64,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    FailureFound(TestCase),
    NoFailureFound,
}

/// One evaluated candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub automatic: f64,
    pub manual: f64,
    pub combined: f64,
    pub robustness: f64,
    pub diverged: bool,
    pub accepted: bool,
    pub best_combined: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub outcome: Outcome,
    pub iterations_used: usize,
    pub best_combined: f64,
    pub best_robustness: f64,
    pub best_parameters: ParameterVector,
    pub history: Vec<IterationRecord>,
}

impl RunResult {
    pub fn failure_found(&self) -> bool {
        matches!(self.outcome, Outcome::FailureFound(_))
    }
}

/// Everything a falsification run needs besides its configuration.
pub struct Problem<'a> {
    pub plant: &'a dyn PlantModel,
    pub assumption: &'a Assumption,
    pub fitness: &'a FitnessAssessment,
    pub grid: TimeGrid,
}

impl Problem<'_> {
    pub fn validate(&self) -> Result<()> {
        self.assumption.validate()?;
        self.assumption.check_ports(self.plant)?;
        let needed = self.fitness.formula().horizon();
        if needed > self.grid.end() * (1.0 + 1e-9) {
            return Err(Error::Horizon { needed, available: self.grid.end() });
        }
        Ok(())
    }

    /// Simulates and scores one candidate.
    pub fn evaluate(&self, v: &ParameterVector, iteration: usize, max_iterations: usize) -> Result<FitnessValue> {
        let cps = control_points(self.assumption, v, &self.grid)?;
        let inputs: BTreeMap<String, Signal> = self
            .assumption
            .inputs
            .iter()
            .zip(&cps)
            .map(|(ia, (port, cp))| Ok((port.clone(), interpolate(cp, ia.kind, &self.grid)?)))
            .collect::<Result<_>>()?;
        let sim = simulate(self.plant, &inputs, &self.grid)?;
        let control: BTreeMap<String, ControlPoints> = cps.into_iter().collect();
        self.fitness.assess_with(&sim.trace, &control, iteration, max_iterations)
    }
}

/// Runs simulated annealing until a violating input is found or the budget is spent.
///
/// Moves are accepted with probability `exp(-delta / T)`. Proposals are sized by
/// the relative temperature `T / initial_temperature`, so the first move of an
/// epoch has spread `sigma` of each range width whatever the acceptance scale.
///
/// A candidate whose simulation diverges is scored +1 (the worst combined value)
/// and the search continues.
pub fn falsify(problem: &Problem<'_>, cfg: &SearchConfig) -> Result<RunResult> {
    falsify_observed(problem, cfg, |_, _| {})
}

/// As [`falsify`], calling `observe` with every candidate before it is evaluated.
pub fn falsify_observed(
    problem: &Problem<'_>,
    cfg: &SearchConfig,
    mut observe: impl FnMut(usize, &ParameterVector),
) -> Result<RunResult> {
    problem.validate()?;
    cfg.validate()?;
    let a = problem.assumption;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut temperature = cfg.initial_temperature;

    let mut current = a.sample_uniform(&mut rng);
    let mut current_fitness = f64::INFINITY;
    let mut best = (f64::INFINITY, f64::MAX, current.clone());
    let mut stall = 0usize;
    let mut history = Vec::with_capacity(cfg.max_iterations);
    let mut candidate = current.clone();

    for iteration in 0..cfg.max_iterations {
        observe(iteration, &candidate);
        let (value, diverged) = match problem.evaluate(&candidate, iteration, cfg.max_iterations) {
            Ok(v) => (v, false),
            Err(Error::Divergence { .. }) => (
                FitnessValue {
                    automatic: 1.0,
                    manual: 1.0,
                    combined: 1.0,
                    robustness: f64::MAX,
                    p: problem.fitness.effective_p(iteration, cfg.max_iterations),
                    stop: false,
                },
                true,
            ),
            Err(e) => return Err(e),
        };

        if value.combined < best.0 {
            best = (value.combined, value.robustness, candidate.clone());
            stall = 0;
        } else {
            stall += 1;
        }
        if value.robustness < best.1 {
            best.1 = value.robustness;
        }

        let accepted = if iteration == 0 || value.combined < current_fitness {
            true
        } else {
            let delta = value.combined - current_fitness;
            temperature > 0.0 && rng.gen::<f64>() < (-delta / temperature).exp()
        };
        if accepted {
            current = candidate.clone();
            current_fitness = value.combined;
        }
        history.push(IterationRecord {
            iteration,
            automatic: value.automatic,
            manual: value.manual,
            combined: value.combined,
            robustness: value.robustness,
            diverged,
            accepted,
            best_combined: best.0,
        });

        if value.stop {
            let inputs =
                encode_inputs(a, &candidate, &problem.grid)?.into_iter().map(|(k, s)| (k, s.into_values())).collect();
            return Ok(RunResult {
                outcome: Outcome::FailureFound(TestCase {
                    parameters: candidate.clone(),
                    inputs,
                    robustness: value.robustness,
                    seed: cfg.seed,
                    iteration,
                }),
                iterations_used: iteration + 1,
                best_combined: best.0,
                best_robustness: best.1,
                best_parameters: best.2,
                history,
            });
        }

        temperature *= cfg.cooling;
        candidate = if stall >= cfg.restart_after {
            stall = 0;
            temperature = cfg.initial_temperature;
            current = a.sample_uniform(&mut rng);
            current_fitness = f64::INFINITY;
            current.clone()
        } else {
            let relative = if cfg.initial_temperature > 0.0 { temperature / cfg.initial_temperature } else { 0.0 };
            propose(&current, a, cfg.sigma, relative, &mut rng)
        };
    }

    Ok(RunResult {
        outcome: Outcome::NoFailureFound,
        iterations_used: cfg.max_iterations,
        best_combined: best.0,
        best_robustness: best.1,
        best_parameters: best.2,
        history,
    })
}
