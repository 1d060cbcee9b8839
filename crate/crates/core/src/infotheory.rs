//! Mutual-information rates under treat-interference-as-noise decoding.
//!
//! All rates are in bits per channel use. For receiver `i` the per-user rate
//! is `I[X_i; Y_i] = I[X; Y_i] − I[X; Y_i | X_i]`, where both terms are
//! evaluated over uniformly distributed joint symbols.

use std::f64::consts::{LN_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{self, mean_and_se, ReceivedPoints};
use crate::model::{effective_channel, EnumerationCap, JointSymbolTable, Scenario};
use crate::sampling::noise_block;
use crate::{CMatrix, C64};

/// Relative threshold under which a difference vector counts as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

/// Noise draws per outer symbol index.
pub const DEFAULT_SAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMethod {
    Mc,
    Approx,
    Gaussian,
}

impl std::str::FromStr for RateMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "mc" => Ok(RateMethod::Mc),
            "approx" => Ok(RateMethod::Approx),
            "gaussian" => Ok(RateMethod::Gaussian),
            other => Err(format!("unknown method `{other}` (expected mc, approx or gaussian)")),
        }
    }
}

impl std::fmt::Display for RateMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RateMethod::Mc => "mc",
            RateMethod::Approx => "approx",
            RateMethod::Gaussian => "gaussian",
        })
    }
}

/// A Monte-Carlo value with its standard error, both in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub bits: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserRate {
    pub bits: f64,
    pub std_error: f64,
    pub joint: McEstimate,
    pub conditional: McEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxRate {
    pub bits: f64,
    /// Set when some nonzero difference component is too small for the
    /// high-power regime, so the approximation may be loose.
    pub regime_warning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub method: RateMethod,
    pub power_db: f64,
    pub per_user: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditional: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

impl RateReport {
    pub fn sum_rate(&self) -> f64 {
        self.per_user.iter().sum()
    }
}

pub(crate) struct Term {
    per_draw: Vec<f64>,
    log2_count: f64,
}

impl Term {
    /// Wraps the kernel's per-draw sums over `count` outer indices.
    pub(crate) fn from_sums(per_sample: &[f64], count: usize) -> Self {
        Term {
            per_draw: per_sample.iter().map(|v| v / count as f64).collect(),
            log2_count: (count as f64).log2(),
        }
    }

    pub(crate) fn estimate(&self) -> McEstimate {
        let (mean, se) = mean_and_se(&self.per_draw);
        McEstimate {
            bits: self.log2_count - mean / LN_2,
            std_error: se / LN_2,
        }
    }
}

pub(crate) fn check_samples(samples: usize) -> Result<()> {
    if samples == 0 {
        Err(Error::ZeroSamples)
    } else {
        Ok(())
    }
}

fn mc_term(map: &CMatrix, table: &JointSymbolTable, sqrt_p: f64, noise: &[C64], samples: usize) -> Result<Term> {
    let count = table.total() as usize;
    let pts = ReceivedPoints::new(map, table.materialize()?, count, sqrt_p);
    let out = kernel::run(&pts, noise, samples, false);
    Ok(Term::from_sums(&out.per_sample, count))
}

fn joint_term(scenario: &Scenario, rx: usize, samples: usize, seed: u64) -> Result<Term> {
    check_samples(samples)?;
    let table = JointSymbolTable::full(scenario, EnumerationCap::default())?;
    let eff = effective_channel(scenario, rx);
    let noise = noise_block(seed, rx, samples, scenario.rx_antennas()[rx]);
    mc_term(&eff.full, &table, scenario.power_linear().sqrt(), &noise, samples)
}

fn conditional_term(scenario: &Scenario, rx: usize, samples: usize, seed: u64) -> Result<Term> {
    check_samples(samples)?;
    let table = JointSymbolTable::excluding(scenario, rx, EnumerationCap::default())?;
    let eff = effective_channel(scenario, rx);
    let noise = noise_block(seed, rx, samples, scenario.rx_antennas()[rx]);
    mc_term(&eff.interference, &table, scenario.power_linear().sqrt(), &noise, samples)
}

/// Monte-Carlo estimate of `I[X_1, …, X_K; Y_i]`.
pub fn mi_joint_mc(scenario: &Scenario, rx: usize, samples: usize, seed: u64) -> Result<McEstimate> {
    Ok(joint_term(scenario, rx, samples, seed)?.estimate())
}

/// Monte-Carlo estimate of `I[X_1, …, X_K; Y_i | X_i]`.
pub fn mi_conditional_mc(scenario: &Scenario, rx: usize, samples: usize, seed: u64) -> Result<McEstimate> {
    Ok(conditional_term(scenario, rx, samples, seed)?.estimate())
}

/// `I[X_i; Y_i]` by the chain rule, with both terms sharing noise draws.
pub fn mi_user(scenario: &Scenario, rx: usize, samples: usize, seed: u64) -> Result<UserRate> {
    let joint = joint_term(scenario, rx, samples, seed)?;
    let cond = conditional_term(scenario, rx, samples, seed)?;
    Ok(user_rate(&joint, &cond))
}

pub(crate) fn user_rate(joint: &Term, cond: &Term) -> UserRate {
    let diff: Vec<f64> = joint
        .per_draw
        .iter()
        .zip(&cond.per_draw)
        .map(|(a, b)| a - b)
        .collect();
    let (_, se) = mean_and_se(&diff);
    let j = joint.estimate();
    let c = cond.estimate();
    UserRate {
        bits: j.bits - c.bits,
        std_error: se / LN_2,
        joint: j,
        conditional: c,
    }
}

/// `Σ_i I[X_i; Y_i]` with the standard error of the sum.
pub fn sum_rate_mc(scenario: &Scenario, samples: usize, seed: u64) -> Result<McEstimate> {
    let rates = (0..scenario.users())
        .map(|rx| mi_user(scenario, rx, samples, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(sum_of(&rates))
}

pub(crate) fn sum_of(rates: &[UserRate]) -> McEstimate {
    let mut bits = 0.0;
    let mut var = 0.0;
    for r in rates {
        bits += r.bits;
        var += r.std_error * r.std_error;
    }
    McEstimate {
        bits,
        std_error: var.sqrt(),
    }
}

/// Largest own-signal difference norm `max ‖H_ii V_i (x − x')‖` at receiver `rx`.
/// This is the reference scale for deciding that a difference vanishes.
pub fn own_difference_scale(scenario: &Scenario, rx: usize) -> f64 {
    let eff = effective_channel(scenario, rx);
    let own = eff.own(scenario, rx);
    let c = scenario.constellation();
    let m = c.order() as u64;
    let d = scenario.streams()[rx];
    let alphabet = m.pow(d as u32);
    let mut x = vec![C64::new(0.0, 0.0); d];
    let points: Vec<Vec<C64>> = (0..alphabet)
        .map(|p| {
            let mut rest = p;
            for slot in x.iter_mut() {
                *slot = c.points()[(rest % m) as usize];
                rest /= m;
            }
            (0..own.nrows())
                .map(|r| (0..d).map(|col| own[(r, col)] * x[col]).sum())
                .collect()
        })
        .collect();
    let mut scale: f64 = 0.0;
    for a in &points {
        for b in &points {
            let n2: f64 = a.iter().zip(b).map(|(u, v)| (u - v).norm_sqr()).sum();
            scale = scale.max(n2.sqrt());
        }
    }
    scale
}

fn approx_term(map: &CMatrix, table: &JointSymbolTable, sqrt_p: f64, zero_level: f64) -> Result<(f64, bool)> {
    let count = table.total() as usize;
    let pts = ReceivedPoints::new(map, table.materialize()?, count, sqrt_p);
    let total = kernel::run_noiseless(&pts);
    let threshold = 3.0 / SQRT_2;
    // √P scales every difference, so the zero test uses the scaled level too
    let zero = zero_level * sqrt_p;
    let mut warn = false;
    'outer: for k1 in 0..count {
        for k2 in 0..count {
            if k1 == k2 {
                continue;
            }
            let a = &pts.points[k1 * pts.rx_dim..(k1 + 1) * pts.rx_dim];
            let b = &pts.points[k2 * pts.rx_dim..(k2 + 1) * pts.rx_dim];
            let norm = a.iter().zip(b).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>().sqrt();
            if norm <= zero {
                continue;
            }
            for (u, v) in a.iter().zip(b) {
                let diff = u - v;
                if diff.norm() > zero && (diff.re.abs() < threshold || diff.im.abs() < threshold) {
                    warn = true;
                    break 'outer;
                }
            }
        }
    }
    Ok(((count as f64).log2() - total / count as f64 / LN_2, warn))
}

/// High-power approximation of `I[X_1, …, X_K; Y_i]` obtained by dropping the
/// noise from the exact expression.
pub fn mi_joint_approx(scenario: &Scenario, rx: usize) -> Result<ApproxRate> {
    let table = JointSymbolTable::full(scenario, EnumerationCap::default())?;
    let eff = effective_channel(scenario, rx);
    let zero = DEFAULT_ZERO_TOL * own_difference_scale(scenario, rx);
    let (bits, regime_warning) = approx_term(&eff.full, &table, scenario.power_linear().sqrt(), zero)?;
    Ok(ApproxRate { bits, regime_warning })
}

/// High-power approximation of `I[X_1, …, X_K; Y_i | X_i]`.
pub fn mi_conditional_approx(scenario: &Scenario, rx: usize) -> Result<ApproxRate> {
    let table = JointSymbolTable::excluding(scenario, rx, EnumerationCap::default())?;
    let eff = effective_channel(scenario, rx);
    let zero = DEFAULT_ZERO_TOL * own_difference_scale(scenario, rx);
    let (bits, regime_warning) =
        approx_term(&eff.interference, &table, scenario.power_linear().sqrt(), zero)?;
    Ok(ApproxRate { bits, regime_warning })
}

/// High-power approximation of `I[X_i; Y_i]`.
pub fn mi_user_approx(scenario: &Scenario, rx: usize) -> Result<ApproxRate> {
    let j = mi_joint_approx(scenario, rx)?;
    let c = mi_conditional_approx(scenario, rx)?;
    Ok(ApproxRate {
        bits: j.bits - c.bits,
        regime_warning: j.regime_warning || c.regime_warning,
    })
}

fn log2_det_hpd(m: &CMatrix) -> f64 {
    match m.clone().cholesky() {
        Some(ch) => 2.0 * ch.l().diagonal().iter().map(|z| z.re.ln()).sum::<f64>() / LN_2,
        // I + P·(PSD) is always positive definite; fall back to LU for
        // round-off at extreme powers
        None => m.clone().lu().determinant().norm().log2(),
    }
}

/// Rate of user `i` with Gaussian inputs when interference is treated as
/// noise: `log₂ det(I + P Σ_k Q_k) − log₂ det(I + P Σ_{k≠i} Q_k)` with
/// `Q_k = H_ki V_k V_kᴴ H_kiᴴ`.
pub fn gaussian_rate_tin(scenario: &Scenario, rx: usize) -> f64 {
    let p = scenario.power_linear();
    let nr = scenario.rx_antennas()[rx];
    let mut all = CMatrix::identity(nr, nr);
    let mut interference = CMatrix::identity(nr, nr);
    for tx in 0..scenario.users() {
        let g = scenario.channel(tx, rx) * scenario.precoder(tx);
        let q = &g * g.adjoint() * C64::from(p);
        all += &q;
        if tx != rx {
            interference += &q;
        }
    }
    (log2_det_hpd(&all) - log2_det_hpd(&interference)).max(0.0)
}

/// Limit of the Gaussian-input single-antenna rate as `P → ∞`:
/// `log₂(1 + |h_ii|² / Σ_{k≠i} |h_ki|²)`. Returns `f64::INFINITY` when every
/// cross gain into receiver `i` vanishes.
pub fn gaussian_saturation_siso(scenario: &Scenario, rx: usize) -> Result<f64> {
    if !scenario.is_siso() {
        return Err(Error::NotSiso);
    }
    let direct = scenario.channel(rx, rx)[(0, 0)].norm_sqr();
    let cross: f64 = (0..scenario.users())
        .filter(|&k| k != rx)
        .map(|k| scenario.channel(k, rx)[(0, 0)].norm_sqr())
        .sum();
    if cross == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((1.0 + direct / cross).log2())
}

/// Rates for every user with one method.
pub fn rate_report(scenario: &Scenario, method: RateMethod, samples: usize, seed: u64) -> Result<RateReport> {
    let k = scenario.users();
    let mut report = RateReport {
        method,
        power_db: scenario.power_db(),
        per_user: Vec::with_capacity(k),
        std_error: None,
        joint: None,
        conditional: None,
        samples: None,
        seed: None,
        warnings: Vec::new(),
    };
    match method {
        RateMethod::Mc => {
            let rates = (0..k)
                .map(|rx| mi_user(scenario, rx, samples, seed))
                .collect::<Result<Vec<_>>>()?;
            report.per_user = rates.iter().map(|r| r.bits).collect();
            report.std_error = Some(rates.iter().map(|r| r.std_error).collect());
            report.joint = Some(rates.iter().map(|r| r.joint.bits).collect());
            report.conditional = Some(rates.iter().map(|r| r.conditional.bits).collect());
            report.samples = Some(samples);
            report.seed = Some(seed);
        }
        RateMethod::Approx => {
            let mut joint = Vec::with_capacity(k);
            let mut cond = Vec::with_capacity(k);
            for rx in 0..k {
                let j = mi_joint_approx(scenario, rx)?;
                let c = mi_conditional_approx(scenario, rx)?;
                if j.regime_warning || c.regime_warning {
                    report.warnings.push(format!(
                        "user {}: some difference components are below the high-power regime",
                        rx + 1
                    ));
                }
                report.per_user.push(j.bits - c.bits);
                joint.push(j.bits);
                cond.push(c.bits);
            }
            report.joint = Some(joint);
            report.conditional = Some(cond);
        }
        RateMethod::Gaussian => {
            report.per_user = (0..k).map(|rx| gaussian_rate_tin(scenario, rx)).collect();
        }
    }
    Ok(report)
}
