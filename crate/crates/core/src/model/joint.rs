use super::constellation::Constellation;
use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::{CVector, C64};

/// Limits on joint-symbol enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationCap {
    /// Largest `M^Σd` for which a table may be built (entries are virtual).
    pub max_entries: u64,
    /// Largest table whose vectors may be materialized at once.
    pub max_materialized: u64,
}

impl Default for EnumerationCap {
    fn default() -> Self {
        Self {
            max_entries: 1 << 24,
            max_materialized: 1_000_000,
        }
    }
}

impl EnumerationCap {
    pub(crate) fn check(&self, needed: u128) -> Result<()> {
        if needed > self.max_entries as u128 {
            return Err(Error::CapExceeded {
                needed,
                limit: self.max_entries,
            });
        }
        Ok(())
    }
}

/// Mixed-radix enumeration of all stacked symbol vectors for a subset of users.
///
/// Joint index `k` is read as base-`M` digits, least significant first. The
/// digits are grouped by user in ascending user order, so the first included
/// user's digits vary fastest, and within a user the first stream varies
/// fastest. Per-user index `p` packs that user's stream digits the same way.
#[derive(Debug, Clone)]
pub struct JointSymbolTable {
    points: Vec<C64>,
    users: Vec<usize>,
    streams: Vec<usize>,
    total: u64,
    cap: EnumerationCap,
}

impl JointSymbolTable {
    /// `users[n]` is the scenario index of the n-th included user and
    /// `streams[n]` its stream count.
    pub fn new(
        constellation: &Constellation,
        users: Vec<usize>,
        streams: Vec<usize>,
        cap: EnumerationCap,
    ) -> Result<Self> {
        if users.len() != streams.len() {
            return Err(Error::Dimension("users and streams differ in length".into()));
        }
        let m = constellation.order() as u128;
        let digits: u32 = streams.iter().sum::<usize>() as u32;
        let needed = m.checked_pow(digits).unwrap_or(u128::MAX);
        cap.check(needed)?;
        Ok(Self {
            points: constellation.points().to_vec(),
            users,
            streams,
            total: needed as u64,
            cap,
        })
    }

    /// Table over all users of the scenario.
    pub fn full(scenario: &Scenario, cap: EnumerationCap) -> Result<Self> {
        let users = (0..scenario.users()).collect();
        Self::new(scenario.constellation(), users, scenario.streams().to_vec(), cap)
    }

    /// Table over every user except `excluded`.
    pub fn excluding(scenario: &Scenario, excluded: usize, cap: EnumerationCap) -> Result<Self> {
        let users: Vec<usize> = (0..scenario.users()).filter(|&u| u != excluded).collect();
        let streams = users.iter().map(|&u| scenario.streams()[u]).collect();
        Self::new(scenario.constellation(), users, streams, cap)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Length of each stacked vector.
    pub fn dim(&self) -> usize {
        self.streams.iter().sum()
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn users(&self) -> &[usize] {
        &self.users
    }

    pub fn streams(&self) -> &[usize] {
        &self.streams
    }

    /// Number of per-user symbol vectors for the n-th included user.
    pub fn user_alphabet(&self, n: usize) -> u64 {
        (self.order() as u64).pow(self.streams[n] as u32)
    }

    fn check_index(&self, k: u64) -> Result<()> {
        if k >= self.total {
            return Err(Error::IndexOutOfRange {
                index: k,
                size: self.total,
            });
        }
        Ok(())
    }

    /// Per-user symbol indices `(p_1, …)` of joint index `k`.
    pub fn digits(&self, k: u64) -> Result<Vec<u64>> {
        self.check_index(k)?;
        let mut rest = k;
        Ok((0..self.users.len())
            .map(|n| {
                let radix = self.user_alphabet(n);
                let p = rest % radix;
                rest /= radix;
                p
            })
            .collect())
    }

    /// Inverse of [`Self::digits`].
    pub fn index_of(&self, digits: &[u64]) -> Result<u64> {
        if digits.len() != self.users.len() {
            return Err(Error::Dimension(format!(
                "{} digits for {} users",
                digits.len(),
                self.users.len()
            )));
        }
        let mut k = 0u64;
        let mut weight = 1u64;
        for (n, &p) in digits.iter().enumerate() {
            let radix = self.user_alphabet(n);
            if p >= radix {
                return Err(Error::IndexOutOfRange {
                    index: p,
                    size: radix,
                });
            }
            k += p * weight;
            weight *= radix;
        }
        Ok(k)
    }

    /// Writes the `d`-stream symbol vector with per-user index `p` into `out`.
    pub(crate) fn write_user_vector(&self, streams: usize, p: u64, out: &mut [C64]) {
        let m = self.order() as u64;
        let mut rest = p;
        for slot in out.iter_mut().take(streams) {
            *slot = self.points[(rest % m) as usize];
            rest /= m;
        }
    }

    /// Symbol vector of the n-th included user for per-user index `p`.
    pub fn user_vector(&self, n: usize, p: u64) -> Result<CVector> {
        let radix = self.user_alphabet(n);
        if p >= radix {
            return Err(Error::IndexOutOfRange { index: p, size: radix });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.streams[n]];
        self.write_user_vector(self.streams[n], p, &mut out);
        Ok(CVector::from_vec(out))
    }

    pub(crate) fn write_vector(&self, k: u64, out: &mut [C64]) {
        let m = self.order() as u64;
        let mut rest = k;
        for slot in out.iter_mut() {
            *slot = self.points[(rest % m) as usize];
            rest /= m;
        }
    }

    /// Stacked symbol vector `x^k`.
    pub fn vector(&self, k: u64) -> Result<CVector> {
        self.check_index(k)?;
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        self.write_vector(k, &mut out);
        Ok(CVector::from_vec(out))
    }

    /// The joint vector `x^k` with the entries of included user position `n`
    /// removed. Digits of the remaining users keep their order.
    pub fn subvector(&self, k: u64, exclude_position: usize) -> Result<CVector> {
        let full = self.vector(k)?;
        let start: usize = self.streams[..exclude_position].iter().sum();
        let end = start + self.streams[exclude_position];
        Ok(CVector::from_iterator(
            self.dim() - (end - start),
            full.iter().enumerate().filter(|(r, _)| *r < start || *r >= end).map(|(_, z)| *z),
        ))
    }

    /// All vectors as a row-major `total × dim` buffer.
    pub fn materialize(&self) -> Result<Vec<C64>> {
        if self.total > self.cap.max_materialized {
            return Err(Error::CapExceeded {
                needed: self.total as u128,
                limit: self.cap.max_materialized,
            });
        }
        let dim = self.dim();
        let mut buf = vec![C64::new(0.0, 0.0); self.total as usize * dim];
        if dim > 0 {
            for (k, row) in buf.chunks_mut(dim).enumerate() {
                self.write_vector(k as u64, row);
            }
        }
        Ok(buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConstellationKind;

    fn table(m: usize, streams: Vec<usize>) -> JointSymbolTable {
        let c = Constellation::new(ConstellationKind::Psk, m).unwrap();
        let users = (0..streams.len()).collect();
        JointSymbolTable::new(&c, users, streams, EnumerationCap::default()).unwrap()
    }

    #[test]
    fn three_user_qpsk_total() {
        assert_eq!(table(4, vec![1, 1, 1]).total(), 64);
    }

    #[test]
    fn mixed_radix_digits() {
        let t = table(2, vec![2, 1]);
        assert_eq!(t.total(), 8);
        assert_eq!(t.digits(5).unwrap(), vec![1, 1]);
        // k = 5 = 0b101: user 1 stream digits (1, 0), user 2 digit 1
        let x = t.vector(5).unwrap();
        assert_eq!(x[0], C64::new(-1.0, 0.0));
        assert_eq!(x[1], C64::new(1.0, 0.0));
        assert_eq!(x[2], C64::new(-1.0, 0.0));
    }

    #[test]
    fn single_user_vectors_are_points() {
        let t = table(4, vec![1]);
        let c = Constellation::new(ConstellationKind::Psk, 4).unwrap();
        for k in 0..4 {
            assert_eq!(t.vector(k).unwrap()[0], c.points()[k as usize]);
        }
    }

    #[test]
    fn out_of_range() {
        let t = table(4, vec![1, 1]);
        assert!(matches!(t.digits(16), Err(Error::IndexOutOfRange { .. })));
        assert!(t.index_of(&[4, 0]).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        let c = Constellation::new(ConstellationKind::Psk, 4).unwrap();
        let cap = EnumerationCap::default();
        assert!(JointSymbolTable::new(&c, vec![0; 12], vec![1; 12], cap).is_ok());
        assert!(matches!(
            JointSymbolTable::new(&c, vec![0; 13], vec![1; 13], cap),
            Err(Error::CapExceeded { .. })
        ));
        let big = JointSymbolTable::new(&c, vec![0; 11], vec![1; 11], cap).unwrap();
        assert!(big.materialize().is_err());
    }

    #[test]
    fn subvector_drops_one_user() {
        let t = table(4, vec![1, 2, 1]);
        let k = 123;
        let full = t.vector(k).unwrap();
        let sub = t.subvector(k, 1).unwrap();
        assert_eq!(sub.len(), 2);
        assert_eq!(sub[0], full[0]);
        assert_eq!(sub[1], full[3]);
    }

    #[test]
    fn materialized_rows_match_vectors() {
        let t = table(4, vec![1, 1]);
        let buf = t.materialize().unwrap();
        for k in 0..t.total() {
            let v = t.vector(k).unwrap();
            assert_eq!(&buf[k as usize * 2..k as usize * 2 + 2], v.as_slice());
        }
    }
}
