//! Saturation analysis: which precoders let treat-interference-as-noise reach
//! `d_i log₂ M` as power grows, and what every user saturates to otherwise.
//!
//! User `i` saturates at the interference-free ceiling iff no pair of distinct
//! own symbol vectors can be confused at receiver `i` for some combination of
//! interfering symbols, i.e. iff
//! `H_ii V_i (x_i − x_i') + Σ_{k≠i} H_ki V_k (x_k − x_k') ≠ 0` whenever
//! `x_i ≠ x_i'`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infotheory::{own_difference_scale, DEFAULT_ZERO_TOL};
use crate::model::{effective_channel, EnumerationCap, JointSymbolTable, PrecoderSet, Scenario};
use crate::sampling::{complex_normal_matrix, rng_for, TAG_PRECODER};
use crate::{CMatrix, C64};

/// At most this many violating tuples are kept per user.
pub const MAX_REPORTED_VIOLATIONS: usize = 1 << 20;

/// A combination of symbol differences that maps to (numerically) zero at
/// the receiver while the user's own symbols differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// `pairs[k] = [p_k1, p_k2]`, per-user symbol indices for every user.
    pub pairs: Vec<[u64; 2]>,
    /// `differences[k] = x_k^{p_k1} − x_k^{p_k2}`.
    pub differences: Vec<Vec<C64>>,
    pub norm: f64,
}

impl Violation {
    /// Joint indices `(k1, k2)` whose difference vector reproduces this
    /// violation.
    pub fn joint_indices(&self, table: &JointSymbolTable) -> Result<(u64, u64)> {
        let first: Vec<u64> = self.pairs.iter().map(|p| p[0]).collect();
        let second: Vec<u64> = self.pairs.iter().map(|p| p[1]).collect();
        Ok((table.index_of(&first)?, table.index_of(&second)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserCcsc {
    pub user: usize,
    pub optimal: bool,
    pub violation_count: u64,
    pub violations: Vec<Violation>,
    /// Smallest combined norm among non-violating tuples; `None` when every
    /// tuple violates.
    pub min_nonzero_norm: Option<f64>,
    /// Absolute threshold applied, `tol × max own difference norm`.
    pub threshold: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcscReport {
    pub per_user_optimal: Vec<bool>,
    pub users: Vec<UserCcsc>,
    pub tolerance_used: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSaturation {
    pub user: usize,
    pub limit_bits: f64,
    pub ceiling_bits: f64,
    /// `|𝒜^{k1}|` → number of joint indices `k1` with that count.
    pub set_a_counts: BTreeMap<usize, u64>,
    /// `|ℬ^{i1}|` → number of interferer indices `i1` with that count.
    pub set_b_counts: BTreeMap<usize, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationReport {
    pub per_user_limit_bits: Vec<f64>,
    pub users: Vec<UserSaturation>,
    pub tolerance_used: f64,
}

/// Images `G_k x_k^p` of every per-user symbol vector at one receiver.
fn user_images(table: &JointSymbolTable, map: &CMatrix, user_pos: usize) -> Vec<Vec<C64>> {
    let d = table.streams()[user_pos];
    let mut x = vec![C64::new(0.0, 0.0); d];
    (0..table.user_alphabet(user_pos))
        .map(|p| {
            table.write_user_vector(d, p, &mut x);
            (0..map.nrows())
                .map(|r| (0..d).map(|c| map[(r, c)] * x[c]).sum())
                .collect()
        })
        .collect()
}

fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(u, v)| u - v).collect()
}

/// Checks the saturation condition for user `rx`.
pub fn ccsc_check(scenario: &Scenario, rx: usize, tol: f64) -> Result<UserCcsc> {
    if !(tol >= 0.0) {
        return Err(Error::param("tol", "must be non-negative"));
    }
    let k = scenario.users();
    let cap = EnumerationCap::default();
    let table = JointSymbolTable::full(scenario, cap)?;
    let eff = effective_channel(scenario, rx);

    let images: Vec<Vec<Vec<C64>>> = (0..k)
        .map(|u| {
            let off = scenario.stream_offset(u);
            let block = eff.full.columns(off, scenario.streams()[u]).into_owned();
            user_images(&table, &block, u)
        })
        .collect();
    let alphabet: Vec<u64> = (0..k).map(|u| table.user_alphabet(u)).collect();
    let own_pairs = alphabet[rx] as u128 * (alphabet[rx] as u128 - 1);
    let cross: u128 = (0..k).filter(|&u| u != rx).map(|u| (alphabet[u] as u128).pow(2)).product();
    cap.check(own_pairs * cross)?;

    let scale = own_difference_scale(scenario, rx);
    let threshold = tol * scale;
    let nr = scenario.rx_antennas()[rx];
    let mut violations = Vec::new();
    let mut violation_count = 0u64;
    let mut min_nonzero: Option<f64> = None;

    let others: Vec<usize> = (0..k).filter(|&u| u != rx).collect();
    // odometer over [p_k1, p_k2] for every interferer, first interferer fastest
    let mut odo = vec![[0u64; 2]; others.len()];
    loop {
        let mut interference = vec![C64::new(0.0, 0.0); nr];
        for (slot, &u) in odo.iter().zip(&others) {
            for (acc, (a, b)) in interference
                .iter_mut()
                .zip(images[u][slot[0] as usize].iter().zip(&images[u][slot[1] as usize]))
            {
                *acc += a - b;
            }
        }
        for p1 in 0..alphabet[rx] {
            for p2 in 0..alphabet[rx] {
                if p1 == p2 {
                    continue;
                }
                let own = &images[rx];
                let norm = own[p1 as usize]
                    .iter()
                    .zip(&own[p2 as usize])
                    .zip(&interference)
                    .map(|((a, b), c)| (a - b + c).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                if norm <= threshold {
                    violation_count += 1;
                    if violations.len() < MAX_REPORTED_VIOLATIONS {
                        let mut pairs = vec![[0u64; 2]; k];
                        pairs[rx] = [p1, p2];
                        for (slot, &u) in odo.iter().zip(&others) {
                            pairs[u] = *slot;
                        }
                        let differences = pairs
                            .iter()
                            .enumerate()
                            .map(|(u, pr)| {
                                let a = table.user_vector(u, pr[0]).expect("valid index");
                                let b = table.user_vector(u, pr[1]).expect("valid index");
                                sub(a.as_slice(), b.as_slice())
                            })
                            .collect();
                        violations.push(Violation {
                            pairs,
                            differences,
                            norm,
                        });
                    }
                } else {
                    min_nonzero = Some(min_nonzero.map_or(norm, |m: f64| m.min(norm)));
                }
            }
        }
        // advance odometer
        let mut pos = 0;
        loop {
            if pos == odo.len() {
                return Ok(UserCcsc {
                    user: rx,
                    optimal: violation_count == 0,
                    violation_count,
                    violations,
                    min_nonzero_norm: min_nonzero,
                    threshold,
                    scale,
                });
            }
            let radix = alphabet[others[pos]];
            odo[pos][0] += 1;
            if odo[pos][0] < radix {
                break;
            }
            odo[pos][0] = 0;
            odo[pos][1] += 1;
            if odo[pos][1] < radix {
                break;
            }
            odo[pos][1] = 0;
            pos += 1;
        }
    }
}

pub fn ccsc_report(scenario: &Scenario, tol: f64) -> Result<CcscReport> {
    let users = (0..scenario.users())
        .map(|rx| ccsc_check(scenario, rx, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(CcscReport {
        per_user_optimal: users.iter().map(|u| u.optimal).collect(),
        users,
        tolerance_used: tol,
    })
}

fn zero_counts(points: &[Vec<C64>], threshold: f64) -> Vec<usize> {
    points
        .iter()
        .enumerate()
        .map(|(k1, a)| {
            points
                .iter()
                .enumerate()
                .filter(|(k2, b)| {
                    *k2 != k1 && sub(a, b).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() <= threshold
                })
                .count()
        })
        .collect()
}

fn images_of_table(table: &JointSymbolTable, map: &CMatrix) -> Result<Vec<Vec<C64>>> {
    let dim = table.dim();
    let buf = table.materialize()?;
    Ok((0..table.total() as usize)
        .map(|k| {
            let x = &buf[k * dim..(k + 1) * dim];
            (0..map.nrows())
                .map(|r| (0..dim).map(|c| map[(r, c)] * x[c]).sum())
                .collect()
        })
        .collect())
}

/// Exact `P → ∞` value of the high-power rate approximation for user `rx`,
/// from the sizes of the sets of joint (resp. interferer) indices whose
/// difference vectors vanish.
pub fn saturation_limit(scenario: &Scenario, rx: usize, tol: f64) -> Result<UserSaturation> {
    if !(tol >= 0.0) {
        return Err(Error::param("tol", "must be non-negative"));
    }
    let cap = EnumerationCap::default();
    let full = JointSymbolTable::full(scenario, cap)?;
    let interferers = JointSymbolTable::excluding(scenario, rx, cap)?;
    let eff = effective_channel(scenario, rx);
    let threshold = tol * own_difference_scale(scenario, rx);

    let a_counts = zero_counts(&images_of_table(&full, &eff.full)?, threshold);
    let b_counts = zero_counts(&images_of_table(&interferers, &eff.interference)?, threshold);
    let mean_log = |counts: &[usize]| {
        counts.iter().map(|&c| ((1 + c) as f64).log2()).sum::<f64>() / counts.len() as f64
    };
    let ceiling = scenario.streams()[rx] as f64 * (scenario.constellation().order() as f64).log2();
    let histogram = |counts: &[usize]| {
        let mut h = BTreeMap::new();
        for &c in counts {
            *h.entry(c).or_insert(0u64) += 1;
        }
        h
    };
    Ok(UserSaturation {
        user: rx,
        limit_bits: ceiling - mean_log(&a_counts) + mean_log(&b_counts),
        ceiling_bits: ceiling,
        set_a_counts: histogram(&a_counts),
        set_b_counts: histogram(&b_counts),
    })
}

pub fn saturation_report(scenario: &Scenario, tol: f64) -> Result<SaturationReport> {
    let users = (0..scenario.users())
        .map(|rx| saturation_limit(scenario, rx, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(SaturationReport {
        per_user_limit_bits: users.iter().map(|u| u.limit_bits).collect(),
        users,
        tolerance_used: tol,
    })
}

/// Draws precoders with i.i.d. standard complex Gaussian entries, scaled to
/// unit trace, until every user passes [`ccsc_check`]. Returns the set and the
/// 1-based attempt on which it was found.
pub fn random_ccsc_precoders(
    scenario: &Scenario,
    seed: u64,
    max_attempts: usize,
    tol: f64,
) -> Result<(PrecoderSet, usize)> {
    if max_attempts == 0 {
        return Err(Error::param("max_attempts", "must be at least 1"));
    }
    for attempt in 1..=max_attempts {
        let mut rng = rng_for(seed, &[TAG_PRECODER, attempt as u64]);
        let set = PrecoderSet(
            scenario
                .tx_antennas()
                .iter()
                .zip(scenario.streams())
                .map(|(&nt, &d)| {
                    let v = complex_normal_matrix(&mut rng, nt, d);
                    let norm = v.norm();
                    v / C64::from(norm)
                })
                .collect(),
        );
        let candidate = scenario.with_precoders(set.clone())?;
        let mut ok = true;
        for rx in 0..scenario.users() {
            if !ccsc_check(&candidate, rx, tol)?.optimal {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok((set, attempt));
        }
    }
    Err(Error::VerificationFailed {
        attempts: max_attempts,
    })
}

/// [`random_ccsc_precoders`] with the default zero tolerance.
pub fn random_ccsc_precoders_default(scenario: &Scenario, seed: u64, max_attempts: usize) -> Result<(PrecoderSet, usize)> {
    random_ccsc_precoders(scenario, seed, max_attempts, DEFAULT_ZERO_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChannelSet, Constellation, ConstellationKind, ScenarioParts};

    fn scalar(re: f64, im: f64) -> CMatrix {
        CMatrix::from_element(1, 1, C64::new(re, im))
    }

    fn two_user_bpsk(cross: f64) -> Scenario {
        Scenario::new(ScenarioParts {
            tx_antennas: vec![1, 1],
            rx_antennas: vec![1, 1],
            streams: vec![1, 1],
            power_db: 0.0,
            constellation: Constellation::new(ConstellationKind::Psk, 2).unwrap(),
            channels: ChannelSet::from_fn(2, |tx, rx| scalar(if tx == rx { 1.0 } else { cross }, 0.0)),
            precoders: None,
        })
        .unwrap()
    }

    #[test]
    fn interference_free_is_optimal() {
        let s = two_user_bpsk(0.0);
        let r = ccsc_check(&s, 0, DEFAULT_ZERO_TOL).unwrap();
        assert!(r.optimal);
        assert_eq!(r.violation_count, 0);
        let sat = saturation_limit(&s, 0, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(sat.limit_bits, 1.0);
    }

    #[test]
    fn equal_real_gains_collide() {
        // x1 = +1, x2 = -1 and x1 = -1, x2 = +1 both give y = 0
        let s = two_user_bpsk(1.0);
        let r = ccsc_check(&s, 0, DEFAULT_ZERO_TOL).unwrap();
        assert!(!r.optimal);
        let table = JointSymbolTable::full(&s, EnumerationCap::default()).unwrap();
        for v in &r.violations {
            let (k1, k2) = v.joint_indices(&table).unwrap();
            let a = crate::model::difference_vector(&s, 0, k1, k2).unwrap();
            assert!(a.norm() <= r.threshold);
        }
        let sat = saturation_limit(&s, 0, DEFAULT_ZERO_TOL).unwrap();
        assert!(sat.limit_bits < 1.0);
        assert_eq!(sat.set_a_counts.get(&1), Some(&2));
    }

    #[test]
    fn rotation_restores_optimality() {
        let s = two_user_bpsk(1.0);
        let rotated = s
            .with_precoders(PrecoderSet(vec![scalar(1.0, 0.0), CMatrix::from_element(1, 1, C64::from_polar(1.0, 1.0))]))
            .unwrap();
        assert!(ccsc_check(&rotated, 0, DEFAULT_ZERO_TOL).unwrap().optimal);
        assert!((saturation_limit(&rotated, 0, DEFAULT_ZERO_TOL).unwrap().limit_bits - 1.0).abs() < 1e-12);
    }

    #[test]
    fn huge_tolerance_flags_everything() {
        let s = two_user_bpsk(0.3);
        let r = ccsc_check(&s, 0, 1e30).unwrap();
        assert_eq!(r.violation_count, 2 * 4);
        assert_eq!(r.min_nonzero_norm, None);
    }

    #[test]
    fn negative_tolerance_rejected() {
        assert!(ccsc_check(&two_user_bpsk(0.3), 0, -1.0).is_err());
        assert!(ccsc_check(&two_user_bpsk(0.3), 0, f64::NAN).is_err());
    }

    #[test]
    fn random_generation_is_deterministic() {
        let s = two_user_bpsk(0.8);
        let (a, na) = random_ccsc_precoders_default(&s, 5, 10).unwrap();
        let (b, nb) = random_ccsc_precoders_default(&s, 5, 10).unwrap();
        assert_eq!(a, b);
        assert_eq!(na, nb);
        for p in a.powers() {
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_attempts_rejected() {
        assert!(random_ccsc_precoders_default(&two_user_bpsk(0.8), 5, 0).is_err());
    }
}
