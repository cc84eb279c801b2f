use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::BitString;
use crate::seed::Seed;

/// A `D × k'` matrix over GF(2), stored as `D` packed rows of `k'` bits.
/// `x ↦ x·M` is the XOR of the rows selected by the set bits of `x`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    /// Range the matrix was drawn for; 0 for hand-built matrices.
    range: usize,
    seed: Seed,
    data: Vec<u64>,
}

impl BinaryMatrix {
    fn words_per_row(cols: usize) -> usize {
        cols.div_ceil(64)
    }

    pub fn from_rows(rows: &[BitString]) -> Result<Self> {
        let cols = rows
            .first()
            .map(BitString::len)
            .ok_or(Error::EmptyDataset)?;
        let wpr = Self::words_per_row(cols);
        let mut data = Vec::with_capacity(rows.len() * wpr);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r.words());
        }
        Ok(BinaryMatrix {
            rows: rows.len(),
            cols,
            range: 0,
            seed: Seed(0),
            data,
        })
    }

    pub fn identity(n: usize) -> Self {
        let rows: Vec<BitString> = (0..n)
            .map(|i| {
                let mut b = BitString::zeros(n);
                b.set(i, true);
                b
            })
            .collect();
        Self::from_rows(&rows).expect("nonempty")
    }

    pub(crate) fn from_raw(
        rows: usize,
        cols: usize,
        range: usize,
        seed: Seed,
        data: Vec<u64>,
    ) -> Result<Self> {
        if data.len() != rows * Self::words_per_row(cols) {
            return Err(Error::param("matrix payload has the wrong length"));
        }
        Ok(BinaryMatrix {
            rows,
            cols,
            range,
            seed,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    pub(crate) fn data(&self) -> &[u64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[u64] {
        let wpr = Self::words_per_row(self.cols);
        &self.data[i * wpr..(i + 1) * wpr]
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        (self.row(i)[j / 64] >> (j % 64)) & 1 == 1
    }

    pub fn count_ones(&self) -> u64 {
        self.data.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    fn project_words(&self, x: &BitString, out: &mut [u64]) {
        out.fill(0);
        for i in x.ones_iter() {
            for (o, r) in out.iter_mut().zip(self.row(i)) {
                *o ^= r;
            }
        }
    }

    /// Projections of many strings at once (method of the four Russians:
    /// XOR tables over 8-row blocks).
    pub(crate) fn project_batch(&self, xs: &[BitString]) -> Vec<u64> {
        const BLOCK: usize = 8;
        let wpr = Self::words_per_row(self.cols);
        let mut out = vec![0u64; xs.len() * wpr];
        if xs.len() < 64 {
            for (x, o) in xs.iter().zip(out.chunks_mut(wpr)) {
                self.project_words(x, o);
            }
            return out;
        }
        let mut table = vec![0u64; (1 << BLOCK) * wpr];
        for start in (0..self.rows).step_by(BLOCK) {
            let width = BLOCK.min(self.rows - start);
            for m in 1usize..(1 << width) {
                let top = usize::BITS as usize - 1 - m.leading_zeros() as usize;
                let rest = m & !(1 << top);
                let (lo, hi) = table.split_at_mut(m * wpr);
                let src = &lo[rest * wpr..(rest + 1) * wpr];
                for ((t, s), r) in hi[..wpr].iter_mut().zip(src).zip(self.row(start + top)) {
                    *t = s ^ r;
                }
            }
            for (x, o) in xs.iter().zip(out.chunks_mut(wpr)) {
                let m = block_bits(x.words(), start, width);
                if m != 0 {
                    for (oo, t) in o.iter_mut().zip(&table[m * wpr..(m + 1) * wpr]) {
                        *oo ^= t;
                    }
                }
            }
        }
        out
    }
}

fn block_bits(words: &[u64], start: usize, width: usize) -> usize {
    let w = start / 64;
    let off = start % 64;
    let mut v = words[w] >> off;
    if off + width > 64 && w + 1 < words.len() {
        v |= words[w + 1] << (64 - off);
    }
    (v & ((1u64 << width) - 1)) as usize
}

/// Draw a `D × k'` matrix with i.i.d. Bernoulli(1/ℓ) entries. Successes are
/// placed by geometric gap skipping, so the cost is proportional to the
/// number of ones.
pub fn sample_projection(
    rows: usize,
    cols: usize,
    range: usize,
    seed: Seed,
) -> Result<BinaryMatrix> {
    if range == 0 || range > rows {
        return Err(Error::param(format!("range {range} outside 1..={rows}")));
    }
    if cols == 0 {
        return Err(Error::param("projection needs at least one column"));
    }
    let wpr = BinaryMatrix::words_per_row(cols);
    let mut data = vec![0u64; rows * wpr];
    let total = (rows * cols) as u64;
    if range == 1 {
        for r in 0..rows {
            for j in 0..cols {
                data[r * wpr + j / 64] |= 1 << (j % 64);
            }
        }
    } else {
        let mut rng = seed.rng();
        let gaps = Geometric::new(1.0 / range as f64).map_err(|e| Error::param(e.to_string()))?;
        let mut pos = gaps.sample(&mut rng);
        while pos < total {
            let (r, j) = ((pos / cols as u64) as usize, (pos % cols as u64) as usize);
            data[r * wpr + j / 64] |= 1 << (j % 64);
            pos = pos.saturating_add(1).saturating_add(gaps.sample(&mut rng));
        }
    }
    BinaryMatrix::from_raw(rows, cols, range, seed, data)
}

/// `x·M` over GF(2).
pub fn project(m: &BinaryMatrix, x: &BitString) -> Result<BitString> {
    if x.len() != m.rows {
        return Err(Error::DimensionMismatch {
            expected: m.rows,
            actual: x.len(),
        });
    }
    let mut out = vec![0u64; BinaryMatrix::words_per_row(m.cols)];
    m.project_words(x, &mut out);
    Ok(BitString::from_words(out, m.cols))
}
