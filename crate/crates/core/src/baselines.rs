//! Reference precoders: closed-form interference alignment for three users
//! with two antennas and one stream each, plus identity and random sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infotheory::sum_rate_mc;
use crate::model::{ChannelSet, PrecoderSet, Scenario};
use crate::sampling::{complex_normal_matrix, rng_for, substream_seed, TAG_IA, TAG_PRECODER};
use crate::{CMatrix, CVector, C64};

/// Channel blocks with a larger 2-norm condition number count as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Default tolerance for [`verify_alignment`].
pub const ALIGNMENT_TOL: f64 = 1e-8;

fn check_ia_shape(channels: &ChannelSet) -> Result<()> {
    if channels.users() != 3 {
        return Err(Error::Dimension(format!(
            "alignment needs exactly 3 users, got {}",
            channels.users()
        )));
    }
    for rx in 0..3 {
        for tx in 0..3 {
            let h = channels.get(tx, rx);
            if h.shape() != (2, 2) {
                return Err(Error::Dimension(format!(
                    "channels[{rx}][{tx}] is {}x{}, alignment needs 2x2 blocks",
                    h.nrows(),
                    h.ncols()
                )));
            }
        }
    }
    Ok(())
}

fn inverse(channels: &ChannelSet, tx: usize, rx: usize) -> Result<CMatrix> {
    let h = channels.get(tx, rx);
    let sv = h.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    let name = format!("channels[{rx}][{tx}]");
    if !(min > 0.0) || max / min >= MAX_CONDITION {
        return Err(Error::SingularChannel(name));
    }
    h.clone().try_inverse().ok_or(Error::SingularChannel(name))
}

fn unit_with_phase(v: CVector) -> CVector {
    // fixes the free phase so the largest entry is real and positive
    let (idx, _) = v
        .iter()
        .enumerate()
        .fold((0, -1.0), |best, (i, z)| if z.norm() > best.1 { (i, z.norm()) } else { best });
    let pivot = v[idx];
    let phase = pivot.conj() / pivot.norm();
    let norm = v.norm();
    v * (phase / norm)
}

/// Eigenpairs of a 2×2 matrix, larger modulus first.
fn eigen2(t: &CMatrix) -> [(C64, CVector); 2] {
    let (a, b, c, d) = (t[(0, 0)], t[(0, 1)], t[(1, 0)], t[(1, 1)]);
    let half_tr = (a + d) * 0.5;
    let disc = (half_tr * half_tr - (a * d - b * c)).sqrt();
    let mut lambdas = [half_tr + disc, half_tr - disc];
    if lambdas[1].norm() > lambdas[0].norm() {
        lambdas.swap(0, 1);
    }
    let scale = t.norm().max(f64::MIN_POSITIVE);
    let vector = |lambda: C64, fallback: usize| {
        let u = CVector::from_vec(vec![b, lambda - a]);
        let w = CVector::from_vec(vec![lambda - d, c]);
        let best = if u.norm() >= w.norm() { u } else { w };
        if best.norm() <= 1e-14 * scale {
            // scalar multiple of the identity: every vector is an eigenvector
            let mut e = CVector::zeros(2);
            e[fallback] = C64::new(1.0, 0.0);
            e
        } else {
            unit_with_phase(best)
        }
    };
    [(lambdas[0], vector(lambdas[0], 0)), (lambdas[1], vector(lambdas[1], 1))]
}

/// One alignment solution and the eigenvalue of the composite map it came
/// from.
#[derive(Debug, Clone, PartialEq)]
pub struct IaCandidate {
    pub eigenvalue: C64,
    pub precoders: PrecoderSet,
}

/// Both alignment solutions, larger eigenvalue modulus first.
///
/// `V_1` is an eigenvector of `H₁₂⁻¹ H₃₂ H₃₁⁻¹ H₂₁ H₂₃⁻¹ H₁₃` (with `H_ij` the
/// channel from transmitter `i` to receiver `j`), `V_2 = H₂₃⁻¹ H₁₃ V_1`,
/// `V_3 = H₃₂⁻¹ H₁₂ V_1`, each scaled to unit trace.
pub fn ia_candidates(channels: &ChannelSet) -> Result<Vec<IaCandidate>> {
    check_ia_shape(channels)?;
    let h = |tx: usize, rx: usize| channels.get(tx - 1, rx - 1);
    let h12_inv = inverse(channels, 0, 1)?;
    let h31_inv = inverse(channels, 2, 0)?;
    let h23_inv = inverse(channels, 1, 2)?;
    let h32_inv = inverse(channels, 2, 1)?;
    let t = &h12_inv * h(3, 2) * &h31_inv * h(2, 1) * &h23_inv * h(1, 3);
    let v2_map = &h23_inv * h(1, 3);
    let v3_map = &h32_inv * h(1, 2);
    Ok(eigen2(&t)
        .into_iter()
        .map(|(eigenvalue, v1)| {
            let v2 = unit_with_phase(&v2_map * &v1);
            let v3 = unit_with_phase(&v3_map * &v1);
            IaCandidate {
                eigenvalue,
                precoders: PrecoderSet(vec![
                    CMatrix::from_column_slice(2, 1, v1.as_slice()),
                    CMatrix::from_column_slice(2, 1, v2.as_slice()),
                    CMatrix::from_column_slice(2, 1, v3.as_slice()),
                ]),
            }
        })
        .collect())
}

/// Alignment precoders from the eigenvector with the larger eigenvalue
/// modulus.
pub fn ia_precoders_3user(channels: &ChannelSet) -> Result<PrecoderSet> {
    Ok(ia_candidates(channels)?.swap_remove(0).precoders)
}

/// How [`ia_precoders_for`] picks between the two alignment solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IaSelection {
    /// Higher Monte-Carlo sum-rate at the scenario's power.
    BestSumRate,
    LargestEigenvalue,
}

/// Alignment precoders for `scenario`'s channels.
///
/// With [`IaSelection::BestSumRate`] both candidates are scored on the noise
/// stream `substream_seed(seed, [TAG_IA])`, which no estimator shares, and
/// ties go to the larger eigenvalue modulus.
pub fn ia_precoders_for(scenario: &Scenario, selection: IaSelection, samples: usize, seed: u64) -> Result<PrecoderSet> {
    let mut candidates = ia_candidates(scenario.channels())?;
    if selection == IaSelection::LargestEigenvalue {
        return Ok(candidates.swap_remove(0).precoders);
    }
    let noise = substream_seed(seed, &[TAG_IA]);
    let mut best: Option<(f64, PrecoderSet)> = None;
    for c in candidates {
        let rate = sum_rate_mc(&scenario.with_precoders(c.precoders.clone())?, samples, noise)?.bits;
        if best.as_ref().is_none_or(|(r, _)| rate > *r) {
            best = Some((rate, c.precoders));
        }
    }
    Ok(best.expect("two candidates").1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverAlignment {
    pub receiver: usize,
    /// Numerical dimension of the span of the two interference directions.
    pub interference_span_dim: usize,
    /// Whether the desired direction is independent of the interference.
    pub independent: bool,
    /// Sine of the principal angle between the two interference directions.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub receivers: Vec<ReceiverAlignment>,
    pub tolerance: f64,
}

impl AlignmentReport {
    pub fn passed(&self) -> bool {
        self.receivers
            .iter()
            .all(|r| r.interference_span_dim == 1 && r.independent && r.residual <= self.tolerance)
    }
}

/// Sine of the angle between two vectors; 1 when either is zero.
fn sine(u: &CMatrix, w: &CMatrix) -> f64 {
    let (nu, nw) = (u.norm(), w.norm());
    if nu == 0.0 || nw == 0.0 {
        return 1.0;
    }
    // residual of projecting w onto u; avoids the cancellation in 1 − cos²
    let coef = (u.adjoint() * w)[(0, 0)] / (nu * nu);
    (w - u * coef).norm() / nw
}

/// Checks that interference collapses to one dimension at every receiver and
/// stays independent of the desired signal.
pub fn verify_alignment(channels: &ChannelSet, precoders: &PrecoderSet, tol: f64) -> Result<AlignmentReport> {
    check_ia_shape(channels)?;
    if precoders.len() != 3 || precoders.iter().any(|v| v.shape() != (2, 1)) {
        return Err(Error::Dimension("alignment needs three 2x1 precoders".into()));
    }
    let receivers = (0..3)
        .map(|rx| {
            let signal = channels.get(rx, rx) * precoders.get(rx);
            let others: Vec<CMatrix> = (0..3)
                .filter(|&tx| tx != rx)
                .map(|tx| channels.get(tx, rx) * precoders.get(tx))
                .collect();
            let nonzero = others.iter().filter(|u| u.norm() > 0.0).count();
            let residual = sine(&others[0], &others[1]);
            let interference_span_dim = match nonzero {
                0 => 0,
                1 => 1,
                _ if residual <= tol => 1,
                _ => 2,
            };
            let dominant = if others[0].norm() >= others[1].norm() {
                &others[0]
            } else {
                &others[1]
            };
            let independent = signal.norm() > 0.0 && sine(&signal, dominant) > tol;
            ReceiverAlignment {
                receiver: rx,
                interference_span_dim,
                independent,
                residual,
            }
        })
        .collect();
    Ok(AlignmentReport {
        receivers,
        tolerance: tol,
    })
}

/// `[I; 0] / √d` for every transmitter.
pub fn identity_precoders(scenario: &Scenario) -> PrecoderSet {
    PrecoderSet::identity(scenario.tx_antennas(), scenario.streams())
}

/// I.i.d. complex Gaussian precoders scaled to unit trace.
pub fn random_precoders(scenario: &Scenario, seed: u64) -> PrecoderSet {
    let mut rng = rng_for(seed, &[TAG_PRECODER, 0]);
    PrecoderSet(
        scenario
            .tx_antennas()
            .iter()
            .zip(scenario.streams())
            .map(|(&nt, &d)| {
                let v = complex_normal_matrix(&mut rng, nt, d);
                let n = v.norm();
                v / C64::from(n)
            })
            .collect(),
    )
}
