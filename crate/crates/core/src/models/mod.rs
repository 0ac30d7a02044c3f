//! Plant models and fixed-step simulation.
//!
//! A plant is a continuous state with optional discrete mode (for example, a
//! gear). Each step integrates the continuous state with classic RK4, then lets
//! the plant project the state and update its mode. Outputs are read at every
//! grid sample.

mod plants;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{Signal, TimeGrid};
use crate::stl::Trace;

pub use plants::{AutoTransmissionLite, ChasingCars, Passthrough};

/// Default integration step in seconds.
pub const DEFAULT_DT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortSpec {
    inputs: Vec<String>,
    outputs: Vec<String>,
}

impl PortSpec {
    pub fn new<I, O>(inputs: I, outputs: O) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Into<String>,
        O: IntoIterator,
        O::Item: Into<String>,
    {
        let inputs: Vec<String> = inputs.into_iter().map(Into::into).collect();
        let outputs: Vec<String> = outputs.into_iter().map(Into::into).collect();
        if outputs.is_empty() {
            return Err(Error::invalid("a plant needs at least one output"));
        }
        let mut all: Vec<&String> = inputs.iter().chain(&outputs).collect();
        all.sort();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("port names must be unique"));
        }
        Ok(Self { inputs, outputs })
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }
}

/// A system model that can be simulated.
///
/// `derivative` and `outputs` must be deterministic and total on finite inputs.
pub trait PlantModel: Send + Sync {
    fn name(&self) -> &str;
    fn ports(&self) -> &PortSpec;
    /// Simulation horizon the benchmark is defined over, in seconds.
    fn horizon(&self) -> f64;
    fn initial_state(&self) -> Vec<f64>;
    fn initial_mode(&self) -> usize {
        0
    }
    fn derivative(&self, state: &[f64], mode: usize, inputs: &[f64], out: &mut [f64]);
    fn outputs(&self, state: &[f64], mode: usize, inputs: &[f64], out: &mut [f64]);
    /// Discrete transition checked once after every step.
    fn next_mode(&self, _state: &[f64], mode: usize, _inputs: &[f64]) -> usize {
        mode
    }
    /// Keeps the continuous state inside its physical domain after every step.
    fn project(&self, _state: &mut [f64]) {}
}

impl std::fmt::Debug for dyn PlantModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PlantModel").field("name", &self.name()).field("ports", self.ports()).finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub trace: Trace,
}

/// Looks up a shipped plant by name.
pub fn builtin(name: &str) -> Result<Arc<dyn PlantModel>> {
    Ok(match name {
        "chasing_cars" => Arc::new(ChasingCars::default()),
        "at_lite" => Arc::new(AutoTransmissionLite::default()),
        "passthrough" => Arc::new(Passthrough::default()),
        other => return Err(Error::NotFound(format!("plant '{other}'"))),
    })
}

pub const BUILTIN_PLANTS: [&str; 3] = ["chasing_cars", "at_lite", "passthrough"];

/// Integrates `model` over `grid` with RK4 (step = grid step).
///
/// The returned trace holds every output channel followed by every input channel.
/// Input values at the RK midpoint are the average of the adjacent samples.
pub fn simulate(model: &dyn PlantModel, inputs: &BTreeMap<String, Signal>, grid: &TimeGrid) -> Result<SimResult> {
    let ports = model.ports();
    for name in inputs.keys() {
        if !ports.inputs().contains(name) {
            return Err(Error::PortMismatch(format!("'{}' has no input port '{name}'", model.name())));
        }
    }
    let columns: Vec<&[f64]> = ports
        .inputs()
        .iter()
        .map(|name| {
            let s = inputs.get(name).ok_or_else(|| Error::PortMismatch(format!("missing input signal '{name}'")))?;
            if !s.grid().same_as(grid) {
                return Err(Error::PortMismatch(format!("input '{name}' is sampled on a different grid")));
            }
            Ok(s.values())
        })
        .collect::<Result<_>>()?;

    let n = grid.len();
    let dt = grid.step();
    let n_in = columns.len();
    let n_out = ports.outputs().len();
    let mut state = model.initial_state();
    let mut mode = model.initial_mode();
    let dim = state.len();

    let mut out_cols = vec![Vec::with_capacity(n); n_out];
    let mut u0 = vec![0.0; n_in];
    let mut u1 = vec![0.0; n_in];
    let mut um = vec![0.0; n_in];
    let mut y = vec![0.0; n_out];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut tmp = vec![0.0; dim];

    let sample = |i: usize, u: &mut [f64]| {
        for (slot, col) in u.iter_mut().zip(&columns) {
            *slot = col[i];
        }
    };

    for i in 0..n {
        sample(i, &mut u0);
        model.outputs(&state, mode, &u0, &mut y);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { time: grid.time(i) });
        }
        for (col, v) in out_cols.iter_mut().zip(&y) {
            col.push(*v);
        }
        if i + 1 == n {
            break;
        }
        sample(i + 1, &mut u1);
        for ((m, a), b) in um.iter_mut().zip(&u0).zip(&u1) {
            *m = 0.5 * (a + b);
        }
        let h = if i + 2 == n { grid.end() - grid.time(i) } else { dt };
        model.derivative(&state, mode, &u0, &mut k1);
        axpy(&state, 0.5 * h, &k1, &mut tmp);
        model.derivative(&tmp, mode, &um, &mut k2);
        axpy(&state, 0.5 * h, &k2, &mut tmp);
        model.derivative(&tmp, mode, &um, &mut k3);
        axpy(&state, h, &k3, &mut tmp);
        model.derivative(&tmp, mode, &u1, &mut k4);
        for j in 0..dim {
            state[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { time: grid.time(i + 1) });
        }
        model.project(&mut state);
        mode = model.next_mode(&state, mode, &u1);
    }

    let mut trace = Trace::new(*grid);
    for (name, col) in ports.outputs().iter().zip(out_cols) {
        trace.insert(name.clone(), col)?;
    }
    for (name, col) in ports.inputs().iter().zip(&columns) {
        trace.insert(name.clone(), col.to_vec())?;
    }
    Ok(SimResult { trace })
}

fn axpy(x: &[f64], a: f64, d: &[f64], out: &mut [f64]) {
    for ((o, xi), di) in out.iter_mut().zip(x).zip(d) {
        *o = xi + a * di;
    }
}
