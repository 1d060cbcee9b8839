//! Projected gradient ascent on the finite-constellation sum-rate with a
//! backtracking line search.
//!
//! Every outer iteration `n` draws a fresh noise substream and reuses it for
//! the gradient, the stopping test and every trial step of the line search,
//! so all comparisons inside one iteration are between common random numbers.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infotheory::{sum_rate_mc, DEFAULT_SAMPLES};
use crate::mmse::sum_rate_gradient;
use crate::model::{PrecoderSet, Scenario};
use crate::sampling::{substream_seed, TAG_EVAL, TAG_ITERATION};
use crate::{CMatrix, C64};

/// Smallest step tried before the line search gives up.
pub const STEP_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeParams {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for OptimizeParams {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            beta: 0.4,
            epsilon: 0.01,
            max_iterations: 15,
            samples: DEFAULT_SAMPLES,
            seed: 0,
        }
    }
}

impl OptimizeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.01 && self.alpha < 0.3) {
            return Err(Error::param("alpha", format!("{} is outside (0.01, 0.3)", self.alpha)));
        }
        if !(self.beta > 0.1 && self.beta < 0.8) {
            return Err(Error::param("beta", format!("{} is outside (0.1, 0.8)", self.beta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param("epsilon", "must be positive and finite"));
        }
        if self.max_iterations == 0 {
            return Err(Error::param("max_iterations", "must be at least 1"));
        }
        if self.samples == 0 {
            return Err(Error::ZeroSamples);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    EpsilonStop,
    MaxIterations,
    LineSearchFloor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub n: usize,
    /// Objective at the iterate entering this iteration.
    pub f_start_bits: f64,
    /// Objective after the accepted step, same noise draws as `f_start_bits`.
    pub f_value_bits: f64,
    /// Step length used for the accepted trial point.
    pub step_t: f64,
    /// Step length after the final shrink, as used in the acceptance test.
    pub armijo_t: f64,
    pub gradient_norm_sq: f64,
    pub line_search_backtracks: usize,
    pub precoders: PrecoderSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeTrace {
    pub params: OptimizeParams,
    pub power_db: f64,
    pub iterations: Vec<IterationRecord>,
    pub termination: Termination,
    /// Sum-rate of the initial and final precoders on a shared evaluation
    /// stream, independent of the per-iteration streams.
    pub initial_sum_rate: f64,
    pub final_sum_rate: f64,
    pub final_precoders: PrecoderSet,
}

impl OptimizeTrace {
    pub fn improvement(&self) -> f64 {
        self.final_sum_rate - self.initial_sum_rate
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    /// `n,f,t` rows behind a versioned comment line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# ccsc optimize trace v1\nn,f,t\n");
        for r in &self.iterations {
            let _ = writeln!(out, "{},{},{}", r.n, sig6(r.f_value_bits), sig6(r.step_t));
        }
        out
    }
}

/// Formats with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

/// Scales `v` back onto the unit-trace ball when it lies outside.
pub fn project_power(v: &CMatrix) -> CMatrix {
    let trace = v.norm_squared();
    if trace <= 1.0 {
        v.clone()
    } else {
        v / C64::from(trace.sqrt())
    }
}

fn step(v: &PrecoderSet, g: &[CMatrix], t: f64) -> PrecoderSet {
    PrecoderSet(
        v.iter()
            .zip(g)
            .map(|(vi, gi)| project_power(&(vi + gi * C64::from(t))))
            .collect(),
    )
}

/// Seed of the shared stream used for `initial_sum_rate` and
/// `final_sum_rate`.
pub fn evaluation_seed(seed: u64) -> u64 {
    substream_seed(seed, &[TAG_EVAL])
}

pub fn optimize_sum_rate(scenario: &Scenario, params: &OptimizeParams) -> Result<OptimizeTrace> {
    params.validate()?;
    let mut current = scenario.clone();
    let mut previous: Option<PrecoderSet> = None;
    let mut iterations = Vec::new();
    let mut termination = Termination::MaxIterations;

    'outer: for n in 1..=params.max_iterations {
        let seed = substream_seed(params.seed, &[TAG_ITERATION, n as u64]);
        let grad = sum_rate_gradient(&current, params.samples, seed)?;
        let f_prev = grad.sum_rate.bits;
        if let Some(prev) = &previous {
            let f_prev_prev = sum_rate_mc(&current.with_precoders(prev.clone())?, params.samples, seed)?.bits;
            if f_prev - f_prev_prev < params.epsilon {
                termination = Termination::EpsilonStop;
                break;
            }
        }
        let norm_sq = grad.norm_sq();
        let mut t = 1.0;
        let mut backtracks = 0;
        loop {
            let candidate = step(current.precoders(), &grad.gradients, t);
            let trial = current.with_precoders(candidate.clone())?;
            let f_new = sum_rate_mc(&trial, params.samples, seed)?.bits;
            let used = t;
            t *= params.beta;
            if f_new >= f_prev + params.alpha * t * norm_sq {
                iterations.push(IterationRecord {
                    n,
                    f_start_bits: f_prev,
                    f_value_bits: f_new,
                    step_t: used,
                    armijo_t: t,
                    gradient_norm_sq: norm_sq,
                    line_search_backtracks: backtracks,
                    precoders: candidate,
                });
                previous = Some(current.precoders().clone());
                current = trial;
                break;
            }
            if t < STEP_FLOOR {
                termination = Termination::LineSearchFloor;
                break 'outer;
            }
            backtracks += 1;
        }
    }

    let eval = evaluation_seed(params.seed);
    Ok(OptimizeTrace {
        params: *params,
        power_db: scenario.power_db(),
        iterations,
        termination,
        initial_sum_rate: sum_rate_mc(scenario, params.samples, eval)?.bits,
        final_sum_rate: sum_rate_mc(&current, params.samples, eval)?.bits,
        final_precoders: current.precoders().clone(),
    })
}
