//! Posterior means, MMSE matrices and the analytic sum-rate gradient.
//!
//! The gradient uses the conjugate-Wirtinger convention scaled so that
//! `f(V + εΔ) ≈ f(V) + 2ε Re tr(Δᴴ G)` for the sum-rate `f` in bits.

use std::f64::consts::LOG2_E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infotheory::{check_samples, sum_of, user_rate, McEstimate, Term, UserRate};
use crate::kernel::{self, log_sum_exp, ReceivedPoints};
use crate::model::{effective_channel, EnumerationCap, JointSymbolTable, Scenario};
use crate::sampling::noise_block;
use crate::{CMatrix, CVector, C64};

/// `E[x | y]` for `y = √P G x + n` with `x` uniform over `table`.
pub fn posterior_mean(y: &CVector, map: &CMatrix, table: &JointSymbolTable, power: f64) -> Result<CVector> {
    if y.len() != map.nrows() {
        return Err(Error::Dimension(format!(
            "observation has length {} but the channel has {} rows",
            y.len(),
            map.nrows()
        )));
    }
    if table.dim() != map.ncols() {
        return Err(Error::Dimension(format!(
            "symbol table has dimension {} but the channel has {} columns",
            table.dim(),
            map.ncols()
        )));
    }
    let sqrt_p = power.sqrt();
    let count = table.total() as usize;
    let symbols = table.materialize()?;
    let pts = ReceivedPoints::new(map, symbols, count, sqrt_p);
    let nr = map.nrows();
    let logw: Vec<f64> = (0..count)
        .map(|k| {
            -pts.points[k * nr..(k + 1) * nr]
                .iter()
                .zip(y.iter())
                .map(|(r, v)| (v - r).norm_sqr())
                .sum::<f64>()
        })
        .collect();
    let lse = log_sum_exp(&logw);
    let d = table.dim();
    let mut mean = CVector::zeros(d);
    for (k, lw) in logw.iter().enumerate() {
        let w = (lw - lse).exp();
        for r in 0..d {
            mean[r] += pts.symbols[k * d + r] * w;
        }
    }
    Ok(mean)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmseEstimate {
    pub matrix: CMatrix,
    pub samples: usize,
    pub seed: u64,
}

struct ReceiverPass {
    term: Term,
    cov: CMatrix,
}

fn receiver_pass(
    map: &CMatrix,
    table: &JointSymbolTable,
    sqrt_p: f64,
    noise: &[C64],
    samples: usize,
) -> Result<ReceiverPass> {
    let count = table.total() as usize;
    let d = table.dim();
    let pts = ReceivedPoints::new(map, table.materialize()?, count, sqrt_p);
    let out = kernel::run(&pts, noise, samples, true);
    let raw = out.error_cov.unwrap_or_default();
    let norm = (count * samples) as f64;
    let m = CMatrix::from_fn(d, d, |r, c| raw[r * d + c] / norm);
    let cov = (&m + m.adjoint()) * C64::from(0.5);
    Ok(ReceiverPass {
        term: Term::from_sums(&out.per_sample, count),
        cov,
    })
}

fn full_pass(scenario: &Scenario, rx: usize, samples: usize, seed: u64) -> Result<ReceiverPass> {
    check_samples(samples)?;
    let table = JointSymbolTable::full(scenario, EnumerationCap::default())?;
    let eff = effective_channel(scenario, rx);
    let noise = noise_block(seed, rx, samples, scenario.rx_antennas()[rx]);
    receiver_pass(&eff.full, &table, scenario.power_linear().sqrt(), &noise, samples)
}

fn interference_pass(scenario: &Scenario, rx: usize, samples: usize, seed: u64) -> Result<ReceiverPass> {
    check_samples(samples)?;
    let table = JointSymbolTable::excluding(scenario, rx, EnumerationCap::default())?;
    let eff = effective_channel(scenario, rx);
    let noise = noise_block(seed, rx, samples, scenario.rx_antennas()[rx]);
    receiver_pass(&eff.interference, &table, scenario.power_linear().sqrt(), &noise, samples)
}

/// `E_j`: error covariance of the conditional-mean estimate of all streams
/// from receiver `j`'s observation.
pub fn mmse_full(scenario: &Scenario, rx: usize, samples: usize, seed: u64) -> Result<MmseEstimate> {
    Ok(MmseEstimate {
        matrix: full_pass(scenario, rx, samples, seed)?.cov,
        samples,
        seed,
    })
}

/// `E_{¬j}`: the same for the interfering streams once receiver `j`'s own
/// contribution `√P H_jj V_j x_j` has been removed.
pub fn mmse_interference(scenario: &Scenario, rx: usize, samples: usize, seed: u64) -> Result<MmseEstimate> {
    Ok(MmseEstimate {
        matrix: interference_pass(scenario, rx, samples, seed)?.cov,
        samples,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientSet {
    /// `G_i`, shape `n_t[i] × d[i]`.
    pub gradients: Vec<CMatrix>,
    /// Sum-rate at the same precoders and noise draws.
    pub sum_rate: McEstimate,
    pub per_user: Vec<UserRate>,
}

impl GradientSet {
    /// `Σ_i ‖G_i‖_F²`.
    pub fn norm_sq(&self) -> f64 {
        self.gradients.iter().map(|g| g.norm_squared()).sum()
    }
}

/// Gradient of the Monte-Carlo sum-rate with respect to every precoder.
pub fn sum_rate_gradient(scenario: &Scenario, samples: usize, seed: u64) -> Result<GradientSet> {
    let k = scenario.users();
    let p = scenario.power_linear();
    let mut gradients: Vec<CMatrix> = (0..k)
        .map(|i| CMatrix::zeros(scenario.tx_antennas()[i], scenario.streams()[i]))
        .collect();
    let mut per_user = Vec::with_capacity(k);
    for j in 0..k {
        let full = full_pass(scenario, j, samples, seed)?;
        let intf = interference_pass(scenario, j, samples, seed)?;
        per_user.push(user_rate(&full.term, &intf.term));

        let eff = effective_channel(scenario, j);
        let a_full = &eff.full * &full.cov;
        let a_intf = &eff.interference * &intf.cov;
        let dj = scenario.streams()[j];
        for (i, g) in gradients.iter_mut().enumerate() {
            let di = scenario.streams()[i];
            let off = scenario.stream_offset(i);
            let h = scenario.channel(i, j).adjoint();
            *g += &h * a_full.columns(off, di);
            if i != j {
                let off_j = if i > j { off - dj } else { off };
                *g -= &h * a_intf.columns(off_j, di);
            }
        }
    }
    let scale = C64::from(p * LOG2_E);
    for g in &mut gradients {
        *g *= scale;
    }
    Ok(GradientSet {
        gradients,
        sum_rate: sum_of(&per_user),
        per_user,
    })
}
