//! Borel isomorphic reduction `[0,1]ᵈ → [0,1]` by bit interleaving.
//!
//! Each coordinate is truncated to `B` bits, so every lattice point has a
//! unique terminating binary expansion. The expansions are interleaved
//! round-robin, coordinate 0 first:
//!
//! ```text
//! (0.a₁a₂…, 0.b₁b₂…)  ↦  0.a₁b₁a₂b₂…
//! ```
//!
//! The result is kept as an exact `d·B`-bit unsigned integer. For the
//! dimensions seen in practice (e.g. 33 × 16 = 528 bits) a float cannot hold
//! the code, and the one-dimensional order must be exact.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::data::Point;
use crate::error::{Error, Result};
use crate::metric::{MetricPoint, Real};

mod codefile;

pub use codefile::{read_codes, write_codes, CodeFile};

pub const DEFAULT_BITS: u32 = 16;
pub const MAX_BITS: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionConfig {
    /// Bits kept per coordinate.
    pub bits: u32,
    /// Coordinates per group; consecutive coordinates are grouped.
    pub group_size: usize,
}

impl ReductionConfig {
    pub fn new(bits: u32, group_size: usize) -> Result<Self> {
        if !(1..=MAX_BITS).contains(&bits) {
            return Err(Error::param(format!(
                "bits must be in 1..={MAX_BITS}, got {bits}"
            )));
        }
        if group_size == 0 {
            return Err(Error::param("group size must be positive"));
        }
        Ok(ReductionConfig { bits, group_size })
    }

    /// A single group covering all `d` coordinates.
    pub fn single(d: usize, bits: u32) -> Result<Self> {
        Self::new(bits, d)
    }

    pub fn group_count(&self, d: usize) -> usize {
        d.div_ceil(self.group_size)
    }
}

/// An interleaved code: an integer in `[0, 2^(d·B))` read as the dyadic
/// number `value / 2^(d·B)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BorelCode {
    value: BigUint,
    dim: usize,
    bits: u32,
}

impl BorelCode {
    pub fn new(value: BigUint, dim: usize, bits: u32) -> Result<Self> {
        if dim == 0 || !(1..=MAX_BITS).contains(&bits) {
            return Err(Error::param(format!(
                "invalid code layout ({dim} dims, {bits} bits)"
            )));
        }
        if value.bits() > (dim as u64) * u64::from(bits) {
            return Err(Error::param(format!(
                "code has {} bits, layout allows {}",
                value.bits(),
                dim as u64 * u64::from(bits)
            )));
        }
        Ok(BorelCode { value, dim, bits })
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn total_bits(&self) -> u64 {
        self.dim as u64 * u64::from(self.bits)
    }

    /// The code as a point of `[0, 1)`, rounded to `f64`.
    pub fn as_unit(&self) -> f64 {
        scaled_to_f64(&self.value, self.total_bits())
    }

    pub fn same_layout(&self, other: &BorelCode) -> Result<()> {
        if self.dim != other.dim || self.bits != other.bits {
            return Err(Error::CodeMismatch {
                d_a: self.dim,
                bits_a: self.bits,
                d_b: other.dim,
                bits_b: other.bits,
            });
        }
        Ok(())
    }

    /// Exact gap `|a − b|` in units of `2^−(d·B)`.
    pub fn gap(&self, other: &BorelCode) -> Result<BigUint> {
        self.same_layout(other)?;
        Ok(if self.value >= other.value {
            &self.value - &other.value
        } else {
            &other.value - &self.value
        })
    }
}

/// `v / 2^shift` as a float, without overflowing for wide integers.
pub(crate) fn scaled_to_f64(v: &BigUint, shift: u64) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    let len = v.bits();
    let drop = len.saturating_sub(64);
    let top = (v >> drop).to_u64().expect("at most 64 bits");
    let mut exp = drop as i64 - shift as i64;
    let mut out = top as f64;
    while exp != 0 {
        let step = exp.clamp(-1000, 1000);
        out *= 2f64.powi(step as i32);
        exp -= step;
    }
    out
}

/// Truncate `x ∈ [0, 1]` to `bits` bits: `⌊x·2^B⌋`, with `x = 1` mapped to
/// the all-ones pattern `2^B − 1`.
pub fn quantize(x: f64, bits: u32) -> u64 {
    let max = if bits == 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    };
    let scaled = (x * 2f64.powi(bits as i32)).floor();
    if scaled >= max as f64 {
        max
    } else {
        scaled as u64
    }
}

/// The lattice representative of `x` at `bits` bits per coordinate.
pub fn quantize_point(x: &Point, bits: u32) -> Result<Point> {
    check_unit(x)?;
    let scale = 2f64.powi(-(bits as i32));
    Ok(Point::from_vec_unchecked(
        x.coords()
            .iter()
            .map(|&v| quantize(v, bits) as f64 * scale)
            .collect(),
    ))
}

fn check_unit(x: &Point) -> Result<()> {
    for (index, &value) in x.coords().iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfUnitRange { index, value });
        }
    }
    Ok(())
}

/// Interleave already-quantized coordinates. Output bit `j·d + i`, counted
/// from the most significant end, is bit `j` (from the top) of coordinate `i`.
pub fn interleave(q: &[u64], bits: u32) -> BorelCode {
    let d = q.len();
    let total = d * bits as usize;
    let mut limbs = vec![0u64; total.div_ceil(64)];
    for j in 0..bits as usize {
        let shift = bits as usize - 1 - j;
        for (i, &qi) in q.iter().enumerate() {
            if (qi >> shift) & 1 == 1 {
                let lsb = total - 1 - (j * d + i);
                limbs[lsb / 64] |= 1u64 << (lsb % 64);
            }
        }
    }
    BorelCode {
        value: biguint_from_limbs(&limbs),
        dim: d,
        bits,
    }
}

/// Inverse of [`interleave`].
pub fn deinterleave(code: &BorelCode) -> Vec<u64> {
    let d = code.dim;
    let bits = code.bits as usize;
    let total = d * bits;
    let limbs = code.value.to_u64_digits();
    let bit = |lsb: usize| {
        limbs
            .get(lsb / 64)
            .is_some_and(|w| (w >> (lsb % 64)) & 1 == 1)
    };
    let mut q = vec![0u64; d];
    for j in 0..bits {
        for (i, qi) in q.iter_mut().enumerate() {
            if bit(total - 1 - (j * d + i)) {
                *qi |= 1u64 << (bits - 1 - j);
            }
        }
    }
    q
}

fn biguint_from_limbs(limbs: &[u64]) -> BigUint {
    let digits: Vec<u32> = limbs
        .iter()
        .flat_map(|&w| [w as u32, (w >> 32) as u32])
        .collect();
    BigUint::new(digits)
}

/// Map `x ∈ [0,1]ᵈ` to its interleaved code. `cfg` must describe a single
/// group spanning all coordinates.
pub fn borel_map(x: &Point, cfg: &ReductionConfig) -> Result<BorelCode> {
    if cfg.group_size != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.group_size,
            actual: x.dim(),
        });
    }
    encode_block(x.coords(), cfg.bits)
}

fn encode_block(coords: &[f64], bits: u32) -> Result<BorelCode> {
    let mut q = Vec::with_capacity(coords.len());
    for (index, &value) in coords.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfUnitRange { index, value });
        }
        q.push(quantize(value, bits));
    }
    Ok(interleave(&q, bits))
}

/// The quantized representative of the preimage of `code`.
pub fn borel_inverse(code: &BorelCode) -> Point {
    let scale = 2f64.powi(-(code.bits as i32));
    Point::from_vec_unchecked(
        deinterleave(code)
            .into_iter()
            .map(|q| q as f64 * scale)
            .collect(),
    )
}

/// Several codes, one per block of consecutive coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupedCode {
    codes: Vec<BorelCode>,
}

impl GroupedCode {
    pub fn new(codes: Vec<BorelCode>) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::param("grouped code needs at least one group"));
        }
        Ok(GroupedCode { codes })
    }

    pub fn codes(&self) -> &[BorelCode] {
        &self.codes
    }

    pub fn into_codes(self) -> Vec<BorelCode> {
        self.codes
    }
}

/// Split the coordinates of `x` into blocks of `cfg.group_size` (the last
/// block may be shorter) and interleave each block on its own.
pub fn grouped_reduce(x: &Point, cfg: &ReductionConfig) -> Result<GroupedCode> {
    if x.dim() == 0 {
        return Err(Error::EmptyDataset);
    }
    if cfg.group_size > x.dim() {
        return Err(Error::param(format!(
            "group size {} exceeds dimension {}",
            cfg.group_size,
            x.dim()
        )));
    }
    let mut codes = Vec::with_capacity(cfg.group_count(x.dim()));
    for (g, block) in x.coords().chunks(cfg.group_size).enumerate() {
        let code = encode_block(block, cfg.bits).map_err(|e| match e {
            Error::OutOfUnitRange { index, value } => Error::OutOfUnitRange {
                index: g * cfg.group_size + index,
                value,
            },
            other => other,
        })?;
        codes.push(code);
    }
    GroupedCode::new(codes)
}

/// `|a − b| / 2^(d·B)`: distance of the two codes on the real line.
pub fn reduced_distance(a: &BorelCode, b: &BorelCode) -> Result<f64> {
    Ok(scaled_to_f64(&a.gap(b)?, a.total_bits()))
}

/// Euclidean combination of the per-group line distances.
pub fn grouped_distance(a: &GroupedCode, b: &GroupedCode) -> Result<f64> {
    if a.codes.len() != b.codes.len() {
        return Err(Error::DimensionMismatch {
            expected: a.codes.len(),
            actual: b.codes.len(),
        });
    }
    let mut sum = 0.0;
    for (x, y) in a.codes.iter().zip(&b.codes) {
        let r = reduced_distance(x, y)?;
        sum += r * r;
    }
    Ok(sum.sqrt())
}

impl MetricPoint for BorelCode {
    type Key = BigUint;
    const CARRIER: &'static str = "borel code";

    fn distance_key(&self, other: &Self) -> Result<BigUint> {
        self.gap(other)
    }

    fn key_value(&self, key: &BigUint) -> f64 {
        scaled_to_f64(key, self.total_bits())
    }
}

impl MetricPoint for GroupedCode {
    type Key = Real;
    const CARRIER: &'static str = "grouped borel code";

    fn distance_key(&self, other: &Self) -> Result<Real> {
        grouped_distance(self, other).map(Real)
    }

    fn key_value(&self, key: &Real) -> f64 {
        key.0
    }
}
