use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

const POWER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstellationKind {
    Psk,
    Qam,
    Custom,
}

/// A finite, unit-average-power symbol alphabet used with a uniform prior.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    kind: ConstellationKind,
    points: Vec<C64>,
}

/// Removes round-off from components that are exactly 0 or ±1/√2.
fn snap(v: f64) -> f64 {
    if v.abs() < 1e-15 {
        0.0
    } else if (v.abs() - FRAC_1_SQRT_2).abs() < 1e-15 {
        FRAC_1_SQRT_2.copysign(v)
    } else {
        v
    }
}

impl Constellation {
    /// Builds a standard PSK or square QAM alphabet of the given order.
    ///
    /// PSK points sit at `exp(i 2πm/M)`; the four-point alphabet is offset by
    /// π/4 so that its first point is `(1 + i)/√2`. Square QAM requires
    /// `M = L²` with `L` even and orders points with the in-phase level
    /// varying fastest.
    pub fn new(kind: ConstellationKind, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::Constellation(format!("order {order} < 2")));
        }
        let points = match kind {
            ConstellationKind::Psk => {
                let offset = if order == 4 { FRAC_PI_4 } else { 0.0 };
                (0..order)
                    .map(|m| {
                        let (sin, cos) = (offset + 2.0 * PI * m as f64 / order as f64).sin_cos();
                        C64::new(snap(cos), snap(sin))
                    })
                    .collect()
            }
            ConstellationKind::Qam => {
                let side = (order as f64).sqrt().round() as usize;
                if side * side != order || !side.is_multiple_of(2) {
                    return Err(Error::Constellation(format!(
                        "qam order {order} is not an even square"
                    )));
                }
                // mean of (2l - L + 1)^2 over both axes is 2(L^2 - 1)/3
                let scale = (2.0 * (order as f64 - 1.0) / 3.0).sqrt().recip();
                let level = |l: usize| (2 * l) as f64 - (side - 1) as f64;
                (0..order)
                    .map(|m| C64::new(level(m % side), level(m / side)) * scale)
                    .collect()
            }
            ConstellationKind::Custom => {
                return Err(Error::Constellation(
                    "custom constellations need an explicit point list".into(),
                ))
            }
        };
        Ok(Self { kind, points })
    }

    /// Wraps an explicit point list. The points must be pairwise distinct and
    /// have unit average power.
    pub fn custom(points: Vec<C64>) -> Result<Self> {
        Self::validate(&points)?;
        Ok(Self {
            kind: ConstellationKind::Custom,
            points,
        })
    }

    fn validate(points: &[C64]) -> Result<()> {
        if points.len() < 2 {
            return Err(Error::Constellation(format!(
                "{} points, need at least 2",
                points.len()
            )));
        }
        if points.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
            return Err(Error::Constellation("non-finite point".into()));
        }
        for (a, p) in points.iter().enumerate() {
            for q in &points[a + 1..] {
                if p == q {
                    return Err(Error::Constellation(format!("duplicate point {p}")));
                }
            }
        }
        let power = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
        if (power - 1.0).abs() > POWER_TOL {
            return Err(Error::Constellation(format!(
                "average power {power} is not 1"
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn average_power(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.order() as f64
    }

    /// Multiplies every point by `phase / |phase|`.
    pub fn rotated(&self, phase: C64) -> Self {
        let unit = phase / phase.norm();
        Self {
            kind: ConstellationKind::Custom,
            points: self.points.iter().map(|p| p * unit).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-14
    }

    #[test]
    fn qpsk_matches_listed_points() {
        let c = Constellation::new(ConstellationKind::Psk, 4).unwrap();
        let s = FRAC_1_SQRT_2;
        let want = [
            C64::new(s, s),
            C64::new(-s, s),
            C64::new(-s, -s),
            C64::new(s, -s),
        ];
        for (p, w) in c.points().iter().zip(want) {
            assert!(close(*p, w), "{p} vs {w}");
        }
    }

    #[test]
    fn bpsk_is_plus_minus_one() {
        let c = Constellation::new(ConstellationKind::Psk, 2).unwrap();
        assert!(close(c.points()[0], C64::new(1.0, 0.0)));
        assert!(close(c.points()[1], C64::new(-1.0, 0.0)));
    }

    #[test]
    fn qam16_scale_is_inverse_sqrt_ten() {
        let c = Constellation::new(ConstellationKind::Qam, 16).unwrap();
        assert_eq!(c.order(), 16);
        assert!((c.average_power() - 1.0).abs() < 1e-12);
        let scale = 10f64.sqrt().recip();
        assert!(close(c.points()[0], C64::new(-3.0, -3.0) * scale));
        assert!(close(c.points()[5], C64::new(-1.0, -1.0) * scale));
    }

    #[test]
    fn unsupported_combinations() {
        assert!(Constellation::new(ConstellationKind::Qam, 8).is_err());
        assert!(Constellation::new(ConstellationKind::Qam, 9).is_err());
        assert!(Constellation::new(ConstellationKind::Psk, 1).is_err());
        assert!(Constellation::new(ConstellationKind::Custom, 4).is_err());
    }

    #[test]
    fn custom_validation() {
        assert!(Constellation::custom(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).is_err());
        assert!(Constellation::custom(vec![C64::new(2.0, 0.0), C64::new(-2.0, 0.0)]).is_err());
        let ok = Constellation::custom(vec![C64::new(0.0, 1.0), C64::new(0.0, -1.0)]).unwrap();
        assert_eq!(ok.kind(), ConstellationKind::Custom);
    }

    #[test]
    fn psk_orders_have_unit_power() {
        for m in [2, 3, 4, 8, 16] {
            let c = Constellation::new(ConstellationKind::Psk, m).unwrap();
            assert!((c.average_power() - 1.0).abs() < 1e-12);
        }
    }
}
