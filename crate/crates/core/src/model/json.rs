//! Scenario file format.
//!
//! Complex entries are `[re, im]` pairs and matrices are row-major arrays of
//! rows. `channels[j][i]` is the matrix from transmitter `i` to receiver `j`.

use serde::{Deserialize, Serialize};

use super::constellation::{Constellation, ConstellationKind};
use super::scenario::{ChannelSet, PrecoderSet, Scenario, ScenarioParts};
use crate::error::{Error, Result};
use crate::{CMatrix, C64};

type MatrixRepr = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationSpec {
    pub kind: ConstellationKind,
    pub order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub users: usize,
    pub constellation: ConstellationSpec,
    pub tx_antennas: Vec<usize>,
    pub rx_antennas: Vec<usize>,
    pub streams: Vec<usize>,
    pub power_db: f64,
    pub channels: Vec<Vec<MatrixRepr>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precoders: Option<Vec<MatrixRepr>>,
}

pub(crate) fn encode_matrix(m: &CMatrix) -> MatrixRepr {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

pub(crate) fn decode_matrix(rows: &MatrixRepr) -> std::result::Result<CMatrix, String> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err("empty matrix".into());
    }
    if let Some(r) = rows.iter().position(|row| row.len() != ncols) {
        return Err(format!("row {r} has {} entries, expected {ncols}", rows[r].len()));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |r, c| {
        let [re, im] = rows[r][c];
        C64::new(re, im)
    }))
}

impl ScenarioFile {
    pub fn from_scenario(s: &Scenario) -> Self {
        let c = s.constellation();
        let points = (c.kind() == ConstellationKind::Custom)
            .then(|| c.points().iter().map(|p| [p.re, p.im]).collect());
        ScenarioFile {
            users: s.users(),
            constellation: ConstellationSpec {
                kind: c.kind(),
                order: c.order(),
                points,
            },
            tx_antennas: s.tx_antennas().to_vec(),
            rx_antennas: s.rx_antennas().to_vec(),
            streams: s.streams().to_vec(),
            power_db: s.power_db(),
            channels: s
                .channels()
                .rx_major()
                .iter()
                .map(|row| row.iter().map(encode_matrix).collect())
                .collect(),
            precoders: Some(s.precoders().iter().map(encode_matrix).collect()),
        }
    }

    pub fn into_scenario(self) -> Result<Scenario> {
        let k = self.users;
        if k == 0 {
            return Err(Error::scenario("users", "must be positive"));
        }
        let constellation = match (self.constellation.kind, self.constellation.points) {
            (ConstellationKind::Custom, Some(points)) => {
                if points.len() != self.constellation.order {
                    return Err(Error::scenario(
                        "constellation.points",
                        format!("{} points for order {}", points.len(), self.constellation.order),
                    ));
                }
                Constellation::custom(points.iter().map(|&[re, im]| C64::new(re, im)).collect())
            }
            (ConstellationKind::Custom, None) => {
                return Err(Error::scenario("constellation.points", "required for custom kind"))
            }
            (kind, _) => Constellation::new(kind, self.constellation.order),
        }
        .map_err(|e| Error::scenario("constellation", e.to_string()))?;

        if self.channels.len() != k {
            return Err(Error::scenario(
                "channels",
                format!("{} receiver rows for {k} users", self.channels.len()),
            ));
        }
        let mut blocks = Vec::with_capacity(k);
        for (rx, row) in self.channels.iter().enumerate() {
            if row.len() != k {
                return Err(Error::scenario(
                    format!("channels[{rx}]"),
                    format!("{} blocks for {k} users", row.len()),
                ));
            }
            let decoded = row
                .iter()
                .enumerate()
                .map(|(tx, m)| {
                    decode_matrix(m).map_err(|e| Error::scenario(format!("channels[{rx}][{tx}]"), e))
                })
                .collect::<Result<Vec<_>>>()?;
            blocks.push(decoded);
        }
        let precoders = self
            .precoders
            .map(|list| {
                list.iter()
                    .enumerate()
                    .map(|(i, m)| decode_matrix(m).map_err(|e| Error::scenario(format!("precoders[{i}]"), e)))
                    .collect::<Result<Vec<_>>>()
                    .map(PrecoderSet)
            })
            .transpose()?;

        Scenario::new(ScenarioParts {
            tx_antennas: self.tx_antennas,
            rx_antennas: self.rx_antennas,
            streams: self.streams,
            power_db: self.power_db,
            constellation,
            channels: ChannelSet::from_rx_major(blocks)?,
            precoders,
        })
    }
}

/// Parses a scenario, reporting the JSON path of the first offending key.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Parse {
            path,
            message: format!("{inner} (line {}, column {})", inner.line(), inner.column()),
        }
    })?;
    file.into_scenario()
}

pub fn scenario_to_json(s: &Scenario) -> String {
    serde_json::to_string_pretty(&ScenarioFile::from_scenario(s)).expect("scenario serializes")
}

pub fn read_scenario(path: impl AsRef<std::path::Path>) -> Result<Scenario> {
    parse_scenario(&std::fs::read_to_string(path)?)
}
