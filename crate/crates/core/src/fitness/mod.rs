//! Fitness assessment: automatic fitness from robustness, manual fitness from
//! an engineer-written expression, their weighted combination, and the stop
//! criterion. The search minimizes the combined value.

mod catalog;
mod manual;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::ControlPoints;
use crate::stl::{self, Formula, Trace};

pub use catalog::{catalog, CatalogEntry, CATALOG_IDS};
pub use manual::{manual_fitness, manual_fitness_with, parse_manual, ManualFitnessExpr};

/// Robustness divided by `auto_scale`, clamped to `[-1, 1]`.
pub fn auto_fitness(formula: &Formula, trace: &Trace, auto_scale: f64) -> Result<f64> {
    Ok(normalize(stl::robustness(formula, trace)?, auto_scale))
}

fn normalize(robustness: f64, auto_scale: f64) -> f64 {
    (robustness / auto_scale).clamp(-1.0, 1.0)
}

/// `p * fa + (1 - p) * fm`.
pub fn athena_combine(fa: f64, fm: f64, p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    p * fa + (1.0 - p) * fm
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessValue {
    pub automatic: f64,
    pub manual: f64,
    pub combined: f64,
    /// Unscaled robustness of the requirement.
    pub robustness: f64,
    /// Weight actually applied at this iteration.
    pub p: f64,
    pub stop: bool,
}

/// Everything needed to score a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessAssessment {
    formula: Formula,
    manual: ManualFitnessExpr,
    p: f64,
    auto_scale: f64,
    schedule: Option<(f64, f64)>,
    threshold: f64,
}

impl FitnessAssessment {
    pub fn new(formula: Formula, manual: ManualFitnessExpr, p: f64, auto_scale: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("weight p = {p} is outside [0, 1]")));
        }
        if !(auto_scale > 0.0 && auto_scale.is_finite()) {
            return Err(Error::invalid(format!("auto_scale = {auto_scale} must be positive")));
        }
        Ok(Self { formula, manual, p, auto_scale, schedule: None, threshold: 0.0 })
    }

    /// Moves `p` linearly from `start` at the first iteration to `end` at the last.
    pub fn with_schedule(mut self, start: f64, end: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&end) {
            return Err(Error::invalid("schedule endpoints must lie in [0, 1]"));
        }
        self.schedule = Some((start, end));
        Ok(self)
    }

    /// Robustness below `threshold` counts as a failure (default 0).
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_p(mut self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("weight p = {p} is outside [0, 1]")));
        }
        self.p = p;
        self.schedule = None;
        Ok(self)
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn manual(&self) -> &ManualFitnessExpr {
        &self.manual
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn auto_scale(&self) -> f64 {
        self.auto_scale
    }

    pub fn schedule(&self) -> Option<(f64, f64)> {
        self.schedule
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn effective_p(&self, iteration: usize, max_iterations: usize) -> f64 {
        match self.schedule {
            None => self.p,
            Some((start, _)) if max_iterations <= 1 => start,
            Some((start, end)) => {
                let frac = iteration.min(max_iterations - 1) as f64 / (max_iterations - 1) as f64;
                start + (end - start) * frac
            }
        }
    }

    pub fn assess(&self, trace: &Trace, iteration: usize, max_iterations: usize) -> Result<FitnessValue> {
        self.assess_with(trace, &BTreeMap::new(), iteration, max_iterations)
    }

    /// As [`assess`](Self::assess), also passing the control points behind each input.
    pub fn assess_with(
        &self,
        trace: &Trace,
        control: &BTreeMap<String, ControlPoints>,
        iteration: usize,
        max_iterations: usize,
    ) -> Result<FitnessValue> {
        let robustness = stl::robustness(&self.formula, trace)?;
        let automatic = normalize(robustness, self.auto_scale);
        let p = self.effective_p(iteration, max_iterations);
        let manual = manual_fitness_with(&self.manual, trace, control)?;
        Ok(FitnessValue {
            automatic,
            manual,
            combined: athena_combine(automatic, manual, p),
            robustness,
            p,
            stop: robustness < self.threshold,
        })
    }
}
