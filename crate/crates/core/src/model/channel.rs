use super::joint::{EnumerationCap, JointSymbolTable};
use super::scenario::Scenario;
use crate::error::Result;
use crate::{CMatrix, CVector};

/// Noise-free maps from stacked symbols to the antennas of one receiver
/// (without the `√P` factor).
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    /// `[H_1i V_1, …, H_Ki V_K]`, shape `n_r[i] × Σd`.
    pub full: CMatrix,
    /// Same blocks with user `i` removed, shape `n_r[i] × Σ_{j≠i} d_j`.
    pub interference: CMatrix,
}

impl EffectiveChannel {
    /// The `H_ii V_i` block.
    pub fn own(&self, scenario: &Scenario, rx: usize) -> CMatrix {
        let off = scenario.stream_offset(rx);
        self.full.columns(off, scenario.streams()[rx]).into_owned()
    }
}

pub fn effective_channel(scenario: &Scenario, rx: usize) -> EffectiveChannel {
    let nr = scenario.rx_antennas()[rx];
    let k = scenario.users();
    let total = scenario.total_streams();
    let mut full = CMatrix::zeros(nr, total);
    let mut interference = CMatrix::zeros(nr, total - scenario.streams()[rx]);
    let mut col = 0;
    let mut icol = 0;
    for tx in 0..k {
        let block = scenario.channel(tx, rx) * scenario.precoder(tx);
        let d = block.ncols();
        full.columns_mut(col, d).copy_from(&block);
        col += d;
        if tx != rx {
            interference.columns_mut(icol, d).copy_from(&block);
            icol += d;
        }
    }
    EffectiveChannel { full, interference }
}

/// `A^{k1,k2} = H_i V (x^{k1} − x^{k2})` at receiver `rx`.
pub fn difference_vector(scenario: &Scenario, rx: usize, k1: u64, k2: u64) -> Result<CVector> {
    let table = JointSymbolTable::full(scenario, EnumerationCap::default())?;
    let x1 = table.vector(k1)?;
    let x2 = table.vector(k2)?;
    Ok(effective_channel(scenario, rx).full * (x1 - x2))
}

/// `B^{i1,i2} = H_{¬i} V_{¬i} (x_{¬i}^{i1} − x_{¬i}^{i2})` at receiver `rx`,
/// with `i1`, `i2` indexing the table that excludes user `rx`.
pub fn interference_difference_vector(
    scenario: &Scenario,
    rx: usize,
    i1: u64,
    i2: u64,
) -> Result<CVector> {
    let table = JointSymbolTable::excluding(scenario, rx, EnumerationCap::default())?;
    let x1 = table.vector(i1)?;
    let x2 = table.vector(i2)?;
    Ok(effective_channel(scenario, rx).interference * (x1 - x2))
}
