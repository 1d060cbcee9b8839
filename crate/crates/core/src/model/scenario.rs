use serde::{Deserialize, Serialize};

use super::constellation::Constellation;
use crate::error::{Error, Result};
use crate::{CMatrix, C64};

/// Slack allowed on the per-transmitter power constraint `tr(V Vᴴ) ≤ 1`.
pub const POWER_SLACK: f64 = 1e-9;

/// Channel blocks of a K-user interference channel, indexed by `(tx, rx)`.
///
/// Block `(tx, rx)` has shape `n_r[rx] × n_t[tx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    // blocks[rx][tx]
    blocks: Vec<Vec<CMatrix>>,
}

impl ChannelSet {
    /// `blocks[rx][tx]` is the matrix from transmitter `tx` to receiver `rx`.
    pub fn from_rx_major(blocks: Vec<Vec<CMatrix>>) -> Result<Self> {
        let k = blocks.len();
        if k == 0 {
            return Err(Error::scenario("channels", "no users"));
        }
        for (rx, row) in blocks.iter().enumerate() {
            if row.len() != k {
                return Err(Error::scenario(
                    format!("channels[{rx}]"),
                    format!("expected {k} blocks, found {}", row.len()),
                ));
            }
        }
        Ok(Self { blocks })
    }

    /// Builds a channel set from a function of `(tx, rx)`.
    pub fn from_fn(users: usize, mut f: impl FnMut(usize, usize) -> CMatrix) -> Self {
        let blocks = (0..users)
            .map(|rx| (0..users).map(|tx| f(tx, rx)).collect())
            .collect();
        Self { blocks }
    }

    /// Splits a stacked matrix whose block row `rx` and block column `tx`
    /// hold the channel from `tx` to `rx`.
    pub fn from_stacked(stacked: &CMatrix, tx_antennas: &[usize], rx_antennas: &[usize]) -> Result<Self> {
        let rows: usize = rx_antennas.iter().sum();
        let cols: usize = tx_antennas.iter().sum();
        if stacked.nrows() != rows || stacked.ncols() != cols || tx_antennas.len() != rx_antennas.len() {
            return Err(Error::Dimension(format!(
                "stacked channel is {}x{}, antennas imply {rows}x{cols}",
                stacked.nrows(),
                stacked.ncols()
            )));
        }
        let k = tx_antennas.len();
        let row_off = offsets(rx_antennas);
        let col_off = offsets(tx_antennas);
        Ok(Self::from_fn(k, |tx, rx| {
            stacked
                .view((row_off[rx], col_off[tx]), (rx_antennas[rx], tx_antennas[tx]))
                .into_owned()
        }))
    }

    pub fn users(&self) -> usize {
        self.blocks.len()
    }

    /// Channel from transmitter `tx` to receiver `rx`.
    pub fn get(&self, tx: usize, rx: usize) -> &CMatrix {
        &self.blocks[rx][tx]
    }

    pub fn rx_major(&self) -> &[Vec<CMatrix>] {
        &self.blocks
    }

    /// Multiplies every block into receiver `rx` by `factor`.
    pub fn scale_receiver(&mut self, rx: usize, factor: C64) {
        for block in &mut self.blocks[rx] {
            *block *= factor;
        }
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        for rx in 0..self.users() {
            out.scale_receiver(rx, factor);
        }
        out
    }
}

/// One precoding matrix per transmitter, `V_i` of shape `n_t[i] × d[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet(pub Vec<CMatrix>);

impl PrecoderSet {
    /// `V_i = [I_{d_i}; 0] / √d_i`, which sits on the power boundary.
    pub fn identity(tx_antennas: &[usize], streams: &[usize]) -> Self {
        PrecoderSet(
            tx_antennas
                .iter()
                .zip(streams)
                .map(|(&nt, &d)| CMatrix::identity(nt, d) * C64::from((d as f64).sqrt().recip()))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> &CMatrix {
        &self.0[i]
    }

    /// `tr(V_i V_iᴴ)` for every transmitter.
    pub fn powers(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.norm_squared()).collect()
    }

    /// Squared Frobenius norm of the block-diagonal stack.
    pub fn frobenius_sq(&self) -> f64 {
        self.powers().iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CMatrix> {
        self.0.iter()
    }
}

/// Raw pieces of a problem instance, validated by [`Scenario::new`].
#[derive(Debug, Clone)]
pub struct ScenarioParts {
    pub tx_antennas: Vec<usize>,
    pub rx_antennas: Vec<usize>,
    pub streams: Vec<usize>,
    pub power_db: f64,
    pub constellation: Constellation,
    pub channels: ChannelSet,
    /// Defaults to [`PrecoderSet::identity`] when absent.
    pub precoders: Option<PrecoderSet>,
}

/// A fully specified K-user MIMO interference channel with linear precoders.
///
/// The signal at receiver `j` is `Y_j = Σ_i √P H_ij V_i X_i + N_j` with
/// `P = 10^(power_db/10)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    tx_antennas: Vec<usize>,
    rx_antennas: Vec<usize>,
    streams: Vec<usize>,
    power_db: f64,
    constellation: Constellation,
    channels: ChannelSet,
    precoders: PrecoderSet,
}

impl Scenario {
    pub fn new(parts: ScenarioParts) -> Result<Self> {
        let ScenarioParts {
            tx_antennas,
            rx_antennas,
            streams,
            power_db,
            constellation,
            channels,
            precoders,
        } = parts;
        let k = channels.users();
        for (name, v) in [
            ("tx_antennas", &tx_antennas),
            ("rx_antennas", &rx_antennas),
            ("streams", &streams),
        ] {
            if v.len() != k {
                return Err(Error::scenario(
                    name,
                    format!("length {} does not match {k} users", v.len()),
                ));
            }
            if let Some(pos) = v.iter().position(|&x| x == 0) {
                return Err(Error::scenario(format!("{name}[{pos}]"), "must be positive"));
            }
        }
        for i in 0..k {
            if streams[i] > tx_antennas[i] {
                return Err(Error::scenario(
                    format!("streams[{i}]"),
                    format!("{} streams exceed {} transmit antennas", streams[i], tx_antennas[i]),
                ));
            }
        }
        if !power_db.is_finite() {
            return Err(Error::scenario("power_db", "must be finite"));
        }
        for rx in 0..k {
            for tx in 0..k {
                let h = channels.get(tx, rx);
                let field = format!("channels[{rx}][{tx}]");
                if h.nrows() != rx_antennas[rx] || h.ncols() != tx_antennas[tx] {
                    return Err(Error::scenario(
                        field,
                        format!(
                            "shape {}x{}, expected {}x{}",
                            h.nrows(),
                            h.ncols(),
                            rx_antennas[rx],
                            tx_antennas[tx]
                        ),
                    ));
                }
                if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::scenario(field, "non-finite entry"));
                }
            }
            if channels.get(rx, rx).iter().all(|z| *z == C64::new(0.0, 0.0)) {
                return Err(Error::scenario(
                    format!("channels[{rx}][{rx}]"),
                    "direct channel is zero",
                ));
            }
        }
        let precoders =
            precoders.unwrap_or_else(|| PrecoderSet::identity(&tx_antennas, &streams));
        check_precoders(&precoders, &tx_antennas, &streams)?;
        Ok(Self {
            tx_antennas,
            rx_antennas,
            streams,
            power_db,
            constellation,
            channels,
            precoders,
        })
    }

    pub fn users(&self) -> usize {
        self.streams.len()
    }

    pub fn tx_antennas(&self) -> &[usize] {
        &self.tx_antennas
    }

    pub fn rx_antennas(&self) -> &[usize] {
        &self.rx_antennas
    }

    pub fn streams(&self) -> &[usize] {
        &self.streams
    }

    pub fn total_streams(&self) -> usize {
        self.streams.iter().sum()
    }

    /// Column offset of user `i`'s streams in the stacked symbol vector.
    pub fn stream_offset(&self, i: usize) -> usize {
        self.streams[..i].iter().sum()
    }

    pub fn power_db(&self) -> f64 {
        self.power_db
    }

    pub fn power_linear(&self) -> f64 {
        10f64.powf(self.power_db / 10.0)
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }

    pub fn channel(&self, tx: usize, rx: usize) -> &CMatrix {
        self.channels.get(tx, rx)
    }

    pub fn precoders(&self) -> &PrecoderSet {
        &self.precoders
    }

    pub fn precoder(&self, i: usize) -> &CMatrix {
        self.precoders.get(i)
    }

    pub fn is_siso(&self) -> bool {
        self.tx_antennas
            .iter()
            .chain(&self.rx_antennas)
            .chain(&self.streams)
            .all(|&n| n == 1)
    }

    pub fn with_power_db(&self, power_db: f64) -> Self {
        Self {
            power_db,
            ..self.clone()
        }
    }

    pub fn with_precoders(&self, precoders: PrecoderSet) -> Result<Self> {
        check_precoders(&precoders, &self.tx_antennas, &self.streams)?;
        Ok(Self {
            precoders,
            ..self.clone()
        })
    }

    pub fn with_constellation(&self, constellation: Constellation) -> Self {
        Self {
            constellation,
            ..self.clone()
        }
    }

    pub fn with_channels(&self, channels: ChannelSet) -> Result<Self> {
        Scenario::new(ScenarioParts {
            tx_antennas: self.tx_antennas.clone(),
            rx_antennas: self.rx_antennas.clone(),
            streams: self.streams.clone(),
            power_db: self.power_db,
            constellation: self.constellation.clone(),
            channels,
            precoders: Some(self.precoders.clone()),
        })
    }
}

fn check_precoders(precoders: &PrecoderSet, tx_antennas: &[usize], streams: &[usize]) -> Result<()> {
    if precoders.len() != streams.len() {
        return Err(Error::scenario(
            "precoders",
            format!("{} matrices for {} users", precoders.len(), streams.len()),
        ));
    }
    for (i, v) in precoders.iter().enumerate() {
        let field = format!("precoders[{i}]");
        if v.nrows() != tx_antennas[i] || v.ncols() != streams[i] {
            return Err(Error::scenario(
                field,
                format!(
                    "shape {}x{}, expected {}x{}",
                    v.nrows(),
                    v.ncols(),
                    tx_antennas[i],
                    streams[i]
                ),
            ));
        }
        let power = v.norm_squared();
        if !power.is_finite() {
            return Err(Error::scenario(field, "non-finite entry"));
        }
        if power > 1.0 + POWER_SLACK {
            return Err(Error::scenario(
                field,
                format!("tr(V Vᴴ) = {power} exceeds the unit power budget"),
            ));
        }
    }
    Ok(())
}

pub(crate) fn offsets(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct PrecoderSetRepr(Vec<Vec<Vec<[f64; 2]>>>);

impl Serialize for PrecoderSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PrecoderSetRepr(self.0.iter().map(super::json::encode_matrix).collect()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for PrecoderSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PrecoderSetRepr::deserialize(d)?;
        repr.0
            .iter()
            .enumerate()
            .map(|(i, m)| {
                super::json::decode_matrix(m)
                    .map_err(|e| serde::de::Error::custom(format!("precoder {i}: {e}")))
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(PrecoderSet)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConstellationKind;

    fn scalar(z: C64) -> CMatrix {
        CMatrix::from_element(1, 1, z)
    }

    fn siso(k: usize) -> ScenarioParts {
        ScenarioParts {
            tx_antennas: vec![1; k],
            rx_antennas: vec![1; k],
            streams: vec![1; k],
            power_db: 0.0,
            constellation: Constellation::new(ConstellationKind::Psk, 2).unwrap(),
            channels: ChannelSet::from_fn(k, |_, _| scalar(C64::new(1.0, 0.0))),
            precoders: None,
        }
    }

    #[test]
    fn default_precoders_are_identity() {
        let s = Scenario::new(siso(2)).unwrap();
        assert_eq!(s.precoder(1)[(0, 0)], C64::new(1.0, 0.0));
    }

    #[test]
    fn rejects_zero_direct_channel() {
        let mut parts = siso(2);
        parts.channels = ChannelSet::from_fn(2, |tx, rx| {
            scalar(if tx == rx && tx == 1 { C64::new(0.0, 0.0) } else { C64::new(1.0, 0.0) })
        });
        let err = Scenario::new(parts).unwrap_err();
        assert!(err.to_string().contains("channels[1][1]"), "{err}");
    }

    #[test]
    fn rejects_overpowered_precoder() {
        let mut parts = siso(2);
        parts.precoders = Some(PrecoderSet(vec![scalar(C64::new(1.0, 0.0)), scalar(C64::new(1.1, 0.0))]));
        let err = Scenario::new(parts).unwrap_err();
        assert!(err.to_string().contains("precoders[1]"), "{err}");
    }

    #[test]
    fn rejects_streams_above_antennas() {
        let mut parts = siso(2);
        parts.streams = vec![1, 2];
        assert!(Scenario::new(parts).is_err());
    }

    #[test]
    fn stacked_split_follows_block_layout() {
        let stacked = CMatrix::from_fn(3, 3, |r, c| C64::new((10 * r + c) as f64, 0.0));
        let set = ChannelSet::from_stacked(&stacked, &[1, 2], &[2, 1]).unwrap();
        // rx 0 occupies rows 0..2, tx 1 occupies columns 1..3
        assert_eq!(set.get(1, 0).shape(), (2, 2));
        assert_eq!(set.get(1, 0)[(1, 0)], C64::new(11.0, 0.0));
        assert_eq!(set.get(0, 1)[(0, 0)], C64::new(20.0, 0.0));
    }
}
