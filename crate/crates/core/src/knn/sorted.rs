use num_bigint::BigUint;

use super::{check_k, to_neighbor_set, NeighborSet, Ranked};
use crate::borel::BorelCode;
use crate::error::{Error, Result};
use crate::seed::Seed;

/// Reduced codes sorted on the line. Answers exact k-NN under the reduced
/// metric by binary search and outward expansion.
#[derive(Clone, Debug)]
pub struct Sorted1DIndex {
    /// `(code, original index)`, ascending.
    entries: Vec<(BigUint, usize)>,
    dim: usize,
    bits: u32,
}

impl Sorted1DIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Original indices in code order.
    pub fn order(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|(_, i)| *i)
    }

    pub fn codes(&self) -> impl Iterator<Item = &BigUint> + '_ {
        self.entries.iter().map(|(c, _)| c)
    }
}

pub fn sorted_index_build(codes: &[BorelCode]) -> Result<Sorted1DIndex> {
    let first = codes.first().ok_or(Error::EmptyDataset)?;
    for c in codes {
        first.same_layout(c)?;
    }
    let mut entries: Vec<(BigUint, usize)> = codes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.value().clone(), i))
        .collect();
    entries.sort_unstable();
    Ok(Sorted1DIndex {
        entries,
        dim: first.dim(),
        bits: first.bits(),
    })
}

/// Exact k-NN of `q` among the indexed codes.
///
/// Expands outward from the insertion point, collecting every candidate up
/// to and including the `k`-th smallest gap, then applies the same seeded
/// tie order as [`super::brute_knn`].
pub fn sorted_knn(
    index: &Sorted1DIndex,
    q: &BorelCode,
    k: usize,
    seed: Seed,
) -> Result<NeighborSet> {
    check_k(k, index.len())?;
    if q.dim() != index.dim || q.bits() != index.bits {
        return Err(Error::CodeMismatch {
            d_a: index.dim,
            bits_a: index.bits,
            d_b: q.dim(),
            bits_b: q.bits(),
        });
    }
    let qv = q.value();
    let e = &index.entries;
    let pos = e.partition_point(|(c, _)| c < qv);
    // `left` walks down from pos-1, `right` walks up from pos.
    let mut left = pos;
    let mut right = pos;
    let gap_left = |l: usize| qv - &e[l - 1].0;
    let gap_right = |r: usize| &e[r].0 - qv;

    let mut cands: Vec<Ranked<BigUint>> = Vec::with_capacity(k + 2);
    let mut kth: Option<BigUint> = None;
    loop {
        let next_left = (left > 0).then(|| gap_left(left));
        let next_right = (right < e.len()).then(|| gap_right(right));
        let take_left = match (&next_left, &next_right) {
            (None, None) => break,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(b)) => a <= b,
        };
        let (gap, idx) = if take_left {
            left -= 1;
            (next_left.unwrap(), e[left].1)
        } else {
            let i = e[right].1;
            right += 1;
            (next_right.unwrap(), i)
        };
        if let Some(limit) = &kth {
            if &gap > limit {
                break;
            }
        }
        cands.push((gap, seed.rank(idx as u64), idx));
        if kth.is_none() && cands.len() == k {
            kth = Some(cands[k - 1].0.clone());
        }
    }
    cands.sort_unstable();
    cands.truncate(k);
    Ok(to_neighbor_set(q, &cands))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::borel::{borel_map, ReductionConfig};
    use crate::data::Point;
    use crate::knn::brute_knn;

    fn code(v: u32, bits: u32) -> BorelCode {
        BorelCode::new(BigUint::from(v), 1, bits).unwrap()
    }

    #[test]
    fn in_order_and_duplicates_kept() {
        let codes: Vec<BorelCode> = [5, 3, 9, 3, 0].iter().map(|&v| code(v, 4)).collect();
        let idx = sorted_index_build(&codes).unwrap();
        let sorted: Vec<&BigUint> = idx.codes().collect();
        assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(idx.order().collect::<Vec<_>>(), vec![4, 1, 3, 0, 2]);
    }

    #[test]
    fn empty_and_mixed_rejected() {
        assert!(matches!(sorted_index_build(&[]), Err(Error::EmptyDataset)));
        assert!(matches!(
            sorted_index_build(&[code(1, 4), code(1, 5)]),
            Err(Error::CodeMismatch { .. })
        ));
    }

    #[test]
    fn exact_hit_and_boundaries() {
        let codes: Vec<BorelCode> = [10, 20, 30, 40].iter().map(|&v| code(v, 8)).collect();
        let idx = sorted_index_build(&codes).unwrap();
        let hit = sorted_knn(&idx, &code(30, 8), 1, Seed(0)).unwrap();
        assert_eq!(hit.indices, vec![2]);
        assert_eq!(hit.distances, vec![0.0]);
        let top = sorted_knn(&idx, &code(255, 8), 2, Seed(0)).unwrap();
        assert_eq!(top.indices, vec![3, 2]);
        let bottom = sorted_knn(&idx, &code(0, 8), 2, Seed(0)).unwrap();
        assert_eq!(bottom.indices, vec![0, 1]);
        assert!(matches!(
            sorted_knn(&idx, &code(0, 8), 5, Seed(0)),
            Err(Error::InvalidK { .. })
        ));
    }

    #[test]
    fn ties_match_brute_force() {
        // Many duplicates and symmetric gaps.
        let vals = [4, 4, 4, 2, 6, 2, 6, 0, 8, 4];
        let codes: Vec<BorelCode> = vals.iter().map(|&v| code(v, 4)).collect();
        let idx = sorted_index_build(&codes).unwrap();
        for s in 0..50 {
            for q in 0..16 {
                for k in 1..=vals.len() {
                    let a = sorted_knn(&idx, &code(q, 4), k, Seed(s)).unwrap();
                    let b = brute_knn(&codes, &code(q, 4), k, Seed(s)).unwrap();
                    assert_eq!(a, b, "q={q} k={k} seed={s}");
                }
            }
        }
    }

    #[test]
    fn wide_codes() {
        let cfg = ReductionConfig::single(33, 16).unwrap();
        let pts: Vec<BorelCode> = (0..20)
            .map(|i| borel_map(&Point::from(vec![(i as f64) / 19.0; 33]), &cfg).unwrap())
            .collect();
        let idx = sorted_index_build(&pts).unwrap();
        let nn = sorted_knn(&idx, &pts[7], 3, Seed(1)).unwrap();
        assert_eq!(nn.indices[0], 7);
        assert_eq!(nn, brute_knn(&pts, &pts[7], 3, Seed(1)).unwrap());
    }
}
