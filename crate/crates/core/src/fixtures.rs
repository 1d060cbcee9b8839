//! Reference scenarios used by tests, benchmarks and the command line.

use crate::error::Result;
use crate::model::{ChannelSet, Constellation, ConstellationKind, PrecoderSet, Scenario, ScenarioParts};
use crate::{CMatrix, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn qpsk() -> Constellation {
    Constellation::new(ConstellationKind::Psk, 4).expect("qpsk")
}

/// Three single-antenna users with QPSK. Rows index receivers, columns
/// transmitters. The second transmitter rotates by `e^{iπ/3}`, which makes
/// every user reach 2 bits at high power.
pub fn siso_three_user(power_db: f64) -> Scenario {
    let gains = [
        [c(-0.9, 0.4), c(-1.7, -1.4), c(1.5, 5.0)],
        [c(2.6, -0.9), c(-0.9, -2.8), c(0.04, 0.88)],
        [c(-2.9, -5.2), c(-10.2, 0.7), c(-0.5, 2.4)],
    ];
    let scalar = |z: C64| CMatrix::from_element(1, 1, z);
    Scenario::new(ScenarioParts {
        tx_antennas: vec![1; 3],
        rx_antennas: vec![1; 3],
        streams: vec![1; 3],
        power_db,
        constellation: qpsk(),
        channels: ChannelSet::from_fn(3, |tx, rx| scalar(gains[rx][tx])),
        precoders: Some(PrecoderSet(vec![
            scalar(c(1.0, 0.0)),
            scalar(C64::from_polar(1.0, std::f64::consts::FRAC_PI_3)),
            scalar(c(1.0, 0.0)),
        ])),
    })
    .expect("fixture is valid")
}

/// Stacked `6 × 6` channel of a three-user 2×2 system where user 1 fails the
/// saturation condition. Block row = receiver, block column = transmitter.
pub fn mimo_three_user_a_channels() -> ChannelSet {
    let rows = [
        [c(0.5756, -0.0565), c(0.7524, -0.1375), c(0.1697, -0.1069), c(0.0124, -0.2002), c(0.0, 0.0), c(0.0, 0.0)],
        [c(0.1610, 0.3766), c(-0.0010, 0.2005), c(0.8758, -0.0689), c(-0.1285, 0.0605), c(0.0, 0.0), c(0.0, 0.0)],
        [c(-1.1533, -0.1280), c(-0.6361, 1.4658), c(-1.3069, 0.1090), c(0.0427, 0.2488), c(-0.0028, 0.2215), c(-1.0597, -0.2708)],
        [c(-1.7763, -0.3748), c(0.5341, 0.0966), c(-0.9491, 0.8074), c(-1.0773, -1.7202), c(0.9616, -1.2130), c(-0.6077, 0.6970)],
        [c(-1.7082, -0.4948), c(-0.6101, -0.4739), c(-0.2226, -4.2486), c(-0.8216, 0.4808), c(0.9572, 1.8870), c(-1.4428, -1.4353)],
        [c(-1.3014, -0.5614), c(1.2515, 0.3414), c(0.4242, 0.0202), c(0.0138, -0.8740), c(0.3393, -1.3451), c(0.9498, -1.0932)],
    ];
    stacked(&rows)
}

/// Precoders paired with [`mimo_three_user_a_channels`], scaled to unit
/// trace (the raw vectors have trace close to 2).
pub fn mimo_three_user_a_precoders() -> PrecoderSet {
    let raw = [
        [c(0.66, 0.74), c(0.13, 0.99)],
        [c(0.9883, 0.1524), c(0.4538, 0.8911)],
        [c(0.7044, 0.7098), c(0.1603, 0.9871)],
    ];
    PrecoderSet(
        raw.iter()
            .map(|v| {
                let m = CMatrix::from_column_slice(2, 1, v);
                let n = m.norm();
                m / C64::from(n)
            })
            .collect(),
    )
}

pub fn mimo_three_user_a(power_db: f64) -> Scenario {
    three_user_mimo(mimo_three_user_a_channels(), power_db)
        .and_then(|s| s.with_precoders(mimo_three_user_a_precoders()))
        .expect("fixture is valid")
}

/// Fixed `6 × 6` three-user 2×2 channel used for optimizer regressions.
pub fn mimo_three_user_b_channels() -> ChannelSet {
    let rows = [
        [c(1.1408, -0.8637), c(0.1954, -1.5172), c(-0.7038, 0.3064), c(0.3323, -0.4278), c(1.3425, -0.5842), c(0.0766, -0.7555)],
        [c(0.9331, 0.3749), c(1.1588, 0.1093), c(1.1412, 0.0561), c(0.2708, 0.5320), c(-1.1639, 0.3706), c(0.4311, 1.4726)],
        [c(-0.5206, 2.7224), c(0.0330, 1.0577), c(-0.1581, -0.7055), c(-1.4823, 0.7144), c(0.4286, 0.5008), c(-1.0052, 0.0051)],
        [c(-0.5897, 0.8322), c(-0.9552, 1.1568), c(-0.9685, -0.7241), c(1.1944, -0.0556), c(-1.3293, -0.2445), c(0.3540, -0.7644)],
        [c(1.3814, -0.4690), c(-0.2731, -0.6355), c(-0.8927, 0.0044), c(-0.1312, 0.3106), c(-1.9229, -0.2353), c(-0.7885, -0.3229)],
        [c(-0.3043, -0.2351), c(1.1578, 0.3676), c(0.9095, -0.4187), c(0.4161, 1.2482), c(1.2900, -0.0196), c(0.4838, 1.4578)],
    ];
    stacked(&rows)
}

/// [`mimo_three_user_b_channels`] with first-antenna precoders.
pub fn mimo_three_user_b(power_db: f64) -> Scenario {
    three_user_mimo(mimo_three_user_b_channels(), power_db).expect("fixture is valid")
}

/// Two single-antenna BPSK users with unit direct and 0.5 cross gains.
pub fn two_user_bpsk(power_db: f64) -> Scenario {
    let gains = [[1.0, 0.5], [0.5, 1.0]];
    Scenario::new(ScenarioParts {
        tx_antennas: vec![1; 2],
        rx_antennas: vec![1; 2],
        streams: vec![1; 2],
        power_db,
        constellation: Constellation::new(ConstellationKind::Psk, 2).expect("bpsk"),
        channels: ChannelSet::from_fn(2, |tx, rx| CMatrix::from_element(1, 1, c(gains[rx][tx], 0.0))),
        precoders: None,
    })
    .expect("fixture is valid")
}

/// Three users, two antennas each, one QPSK stream, first-antenna precoders.
pub fn three_user_mimo(channels: ChannelSet, power_db: f64) -> Result<Scenario> {
    Scenario::new(ScenarioParts {
        tx_antennas: vec![2; 3],
        rx_antennas: vec![2; 3],
        streams: vec![1; 3],
        power_db,
        constellation: qpsk(),
        channels,
        precoders: None,
    })
}

fn stacked(rows: &[[C64; 6]; 6]) -> ChannelSet {
    let m = CMatrix::from_fn(6, 6, |r, col| rows[r][col]);
    ChannelSet::from_stacked(&m, &[2, 2, 2], &[2, 2, 2]).expect("6x6 stacks into 2x2 blocks")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert!(siso_three_user(40.0).is_siso());
        assert_eq!(mimo_three_user_a(40.0).users(), 3);
        assert_eq!(mimo_three_user_b(0.0).channel(0, 1)[(0, 0)], c(-0.5206, 2.7224));
        assert_eq!(two_user_bpsk(0.0).users(), 2);
    }

    #[test]
    fn block_layout_follows_receiver_rows() {
        // second receiver, first transmitter
        let s = siso_three_user(0.0);
        assert_eq!(s.channel(0, 1)[(0, 0)], c(2.6, -0.9));
        let a = mimo_three_user_a_channels();
        assert_eq!(a.get(2, 0)[(0, 0)], c(0.0, 0.0));
        assert_eq!(a.get(0, 1)[(1, 1)], c(0.5341, 0.0966));
    }
}
