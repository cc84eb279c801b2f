//! Distances on the three carriers: real points (Euclidean), bit strings
//! (Hamming) and Borel codes (the induced one-dimensional metric).

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::borel::{BorelCode, GroupedCode};
use crate::data::Point;
use crate::error::{Error, Result};

/// A carrier with a metric.
///
/// `Key` is an exactly comparable representation of the distance used for
/// ranking neighbours; `key_value` converts it to a real (the receiver
/// supplies any scale the key does not carry). For Borel codes the
/// key is the exact integer gap, so ordering never suffers from rounding.
pub trait MetricPoint: Send + Sync {
    type Key: Ord + Clone + Send + Sync + fmt::Debug;

    const CARRIER: &'static str;

    fn distance_key(&self, other: &Self) -> Result<Self::Key>;

    fn key_value(&self, key: &Self::Key) -> f64;

    fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.key_value(&self.distance_key(other)?))
    }
}

/// `f64` ordered by `total_cmp`. Only ever holds finite non-negative values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Real(pub f64);

impl Eq for Real {}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Real {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

impl MetricPoint for Point {
    type Key = Real;
    const CARRIER: &'static str = "point";

    fn distance_key(&self, other: &Self) -> Result<Real> {
        euclidean(self.coords(), other.coords()).map(Real)
    }

    fn key_value(&self, key: &Real) -> f64 {
        key.0
    }
}

/// A fixed-length string over {0, 1}, packed little-endian into `u64` words.
/// Bits past `len` are always zero.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = BitString {
            words: vec![u64::MAX; len.div_ceil(64)],
            len,
        };
        b.mask_tail();
        b
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut b = BitString::zeros(bits.len());
        for (i, &v) in bits.iter().enumerate() {
            if v {
                b.set(i, true);
            }
        }
        b
    }

    /// Build from packed words; bits beyond `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(len.div_ceil(64), 0);
        let mut b = BitString { words, len };
        b.mask_tail();
        b
    }

    fn mask_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Indices of set bits in increasing order.
    pub fn ones_iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + t)
            })
        })
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        self.check_len(other)?;
        Ok(BitString {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
            len: self.len,
        })
    }

    pub fn hamming(&self, other: &BitString) -> Result<u32> {
        self.check_len(other)?;
        Ok(hamming_words(&self.words, &other.words))
    }

    fn check_len(&self, other: &BitString) -> Result<()> {
        if self.len != other.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                actual: other.len,
            });
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn hamming_words(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::param(format!("invalid bit {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BitString::from_bits(&bits))
    }
}

impl MetricPoint for BitString {
    type Key = u32;
    const CARRIER: &'static str = "bit string";

    fn distance_key(&self, other: &Self) -> Result<u32> {
        self.hamming(other)
    }

    fn key_value(&self, key: &u32) -> f64 {
        f64::from(*key)
    }
}

/// The metrics exposed on the command line and in [`distance`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Hamming,
    Reduced,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Hamming => "hamming",
            Metric::Reduced => "reduced",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "hamming" => Ok(Metric::Hamming),
            "reduced" => Ok(Metric::Reduced),
            other => Err(Error::param(format!("unknown metric {other:?}"))),
        }
    }
}

/// A borrowed operand of [`distance`].
#[derive(Clone, Copy, Debug)]
pub enum Operand<'a> {
    Point(&'a Point),
    Bits(&'a BitString),
    Code(&'a BorelCode),
    Grouped(&'a GroupedCode),
}

impl Operand<'_> {
    fn carrier(&self) -> &'static str {
        match self {
            Operand::Point(_) => Point::CARRIER,
            Operand::Bits(_) => BitString::CARRIER,
            Operand::Code(_) => BorelCode::CARRIER,
            Operand::Grouped(_) => GroupedCode::CARRIER,
        }
    }
}

/// Distance between two operands under `metric`; the operands must live on
/// the metric's carrier.
pub fn distance(metric: Metric, a: Operand<'_>, b: Operand<'_>) -> Result<f64> {
    let mismatch = |op: Operand<'_>| Error::CarrierMismatch {
        metric: metric.name(),
        carrier: op.carrier(),
    };
    match (metric, a, b) {
        (Metric::Euclidean, Operand::Point(x), Operand::Point(y)) => x.distance(y),
        (Metric::Hamming, Operand::Bits(x), Operand::Bits(y)) => x.distance(y),
        (Metric::Reduced, Operand::Code(x), Operand::Code(y)) => x.distance(y),
        (Metric::Reduced, Operand::Grouped(x), Operand::Grouped(y)) => x.distance(y),
        (Metric::Euclidean, Operand::Point(_), other)
        | (Metric::Hamming, Operand::Bits(_), other)
        | (Metric::Reduced, Operand::Code(_) | Operand::Grouped(_), other) => Err(mismatch(other)),
        (_, other, _) => Err(mismatch(other)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::borel::{borel_map, ReductionConfig};

    #[test]
    fn hamming_example() {
        let a: BitString = "0101".parse().unwrap();
        let b: BitString = "0011".parse().unwrap();
        assert_eq!(
            distance(Metric::Hamming, Operand::Bits(&a), Operand::Bits(&b)).unwrap(),
            2.0
        );
    }

    #[test]
    fn euclidean_example() {
        let a = Point::from(vec![0.0, 0.0]);
        let b = Point::from(vec![3.0, 4.0]);
        assert_eq!(
            distance(Metric::Euclidean, Operand::Point(&a), Operand::Point(&b)).unwrap(),
            5.0
        );
    }

    #[test]
    fn reduced_identity() {
        let cfg = ReductionConfig::single(1, 16).unwrap();
        let c = borel_map(&Point::from(vec![0.75]), &cfg).unwrap();
        assert_eq!(
            distance(Metric::Reduced, Operand::Code(&c), Operand::Code(&c)).unwrap(),
            0.0
        );
    }

    #[test]
    fn dimension_mismatch() {
        let a = Point::from(vec![0.0]);
        let b = Point::from(vec![0.0, 1.0]);
        assert!(matches!(
            distance(Metric::Euclidean, Operand::Point(&a), Operand::Point(&b)),
            Err(Error::DimensionMismatch { .. })
        ));
        let x: BitString = "01".parse().unwrap();
        let y: BitString = "011".parse().unwrap();
        assert!(x.hamming(&y).is_err());
    }

    #[test]
    fn carrier_mismatch() {
        let a = Point::from(vec![0.0]);
        let x: BitString = "01".parse().unwrap();
        assert!(matches!(
            distance(Metric::Hamming, Operand::Point(&a), Operand::Bits(&x)),
            Err(Error::CarrierMismatch { .. })
        ));
        assert!(matches!(
            distance(Metric::Euclidean, Operand::Point(&a), Operand::Bits(&x)),
            Err(Error::CarrierMismatch { .. })
        ));
    }

    #[test]
    fn bitstring_tail_is_masked() {
        let b = BitString::ones(70);
        assert_eq!(b.count_ones(), 70);
        let c = BitString::from_words(vec![u64::MAX, u64::MAX], 65);
        assert_eq!(c.count_ones(), 65);
        assert_eq!(c.ones_iter().count(), 65);
        assert_eq!(format!("{}", "0110".parse::<BitString>().unwrap()), "0110");
    }
}
