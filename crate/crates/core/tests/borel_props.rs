mod common;

use std::cmp::Ordering;

use num_bigint::BigUint;
use proptest::prelude::*;

use borelknn::borel::{
    borel_inverse, borel_map, deinterleave, grouped_reduce, interleave, quantize, quantize_point,
    BorelCode, ReductionConfig,
};
use borelknn::Point;

use common::{cases, unit_point};

fn code_of(x: &Point, bits: u32) -> BorelCode {
    borel_map(x, &ReductionConfig::single(x.dim(), bits).unwrap()).unwrap()
}

#[test]
fn lattice_bijection_exhaustive() {
    for d in 1..=16usize {
        for bits in 1..=(16 / d) as u32 {
            let total = d as u32 * bits;
            for v in 0..(1u64 << total) {
                let code = BorelCode::new(BigUint::from(v), d, bits).unwrap();
                let x = borel_inverse(&code);
                assert_eq!(code_of(&x, bits), code, "d={d} B={bits} v={v}");
                assert_eq!(quantize_point(&x, bits).unwrap(), x);
            }
        }
    }
}

/// Morton comparison without building codes: the coordinate holding the
/// highest differing bit decides, lower coordinates first within a level.
fn morton_cmp(a: &[u64], b: &[u64]) -> Ordering {
    let mut best: Option<(u32, usize)> = None;
    for i in 0..a.len() {
        let x = a[i] ^ b[i];
        if x == 0 {
            continue;
        }
        let level = 63 - x.leading_zeros();
        if best.is_none_or(|(l, _)| level > l) {
            best = Some((level, i));
        }
    }
    best.map_or(Ordering::Equal, |(_, i)| a[i].cmp(&b[i]))
}

proptest! {
    #![proptest_config(cases(2000))]

    #[test]
    fn round_trip(d in 1usize..=10, bits in 1u32..=64, seed in any::<u64>()) {
        let x = Point::new((0..d).map(|i| ((seed.rotate_left(i as u32 * 7) >> 11) as f64) / (1u64 << 53) as f64).collect()).unwrap();
        let code = code_of(&x, bits);
        let back = borel_inverse(&code);
        prop_assert_eq!(&back, &quantize_point(&x, bits).unwrap());
        prop_assert_eq!(code_of(&back, bits), code);
    }

    #[test]
    fn code_fits_its_width(x in unit_point(5), bits in 1u32..=40) {
        let code = code_of(&x, bits);
        prop_assert!(code.value().bits() <= code.total_bits());
        prop_assert!(code.as_unit() >= 0.0 && code.as_unit() < 1.0);
    }

    #[test]
    fn prefix_locality(d in 1usize..=6, bits in 2u32..=24, m_frac in 0.0..1.0f64, a in any::<[u64; 6]>(), b in any::<[u64; 6]>()) {
        let m = ((bits as f64) * m_frac) as u32;
        let low = bits - m;
        let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
        // Same top m bits, arbitrary bottom bits.
        let qa: Vec<u64> = a[..d].iter().map(|v| v & mask).collect();
        let qb: Vec<u64> = qa.iter().zip(&b[..d]).map(|(x, y)| {
            let keep = if low == 64 { 0 } else { (x >> low) << low };
            keep | (y & ((1u64 << low) - 1))
        }).collect();
        let (ca, cb) = (interleave(&qa, bits), interleave(&qb, bits));
        let shift = (d as u32 * low) as u64;
        prop_assert_eq!(ca.value() >> shift, cb.value() >> shift);
    }

    #[test]
    fn axis_one_is_monotone(d in 1usize..=5, bits in 1u32..=20, s in 0.0..=1.0f64, t in 0.0..=1.0f64) {
        let (s, t) = if s <= t { (s, t) } else { (t, s) };
        let at = |v: f64| {
            let mut c = vec![0.0; d];
            c[0] = v;
            code_of(&Point::new(c).unwrap(), bits)
        };
        let (qs, qt) = (quantize(s, bits), quantize(t, bits));
        let (cs, ct) = (at(s), at(t));
        prop_assert_eq!(qs.cmp(&qt), cs.value().cmp(ct.value()));
    }

    #[test]
    fn code_order_is_morton_order(d in 1usize..=6, bits in 1u32..=16, a in any::<[u64; 6]>(), b in any::<[u64; 6]>()) {
        let mask = (1u64 << bits) - 1;
        let qa: Vec<u64> = a[..d].iter().map(|v| v & mask).collect();
        let qb: Vec<u64> = b[..d].iter().map(|v| v & mask).collect();
        let (ca, cb) = (interleave(&qa, bits), interleave(&qb, bits));
        prop_assert_eq!(ca.value().cmp(cb.value()), morton_cmp(&qa, &qb));
        prop_assert_eq!(deinterleave(&ca), qa);
    }

    #[test]
    fn grouping_splits_consecutive_blocks(x in unit_point(7), g in 1usize..=7, bits in 1u32..=16) {
        let cfg = ReductionConfig::new(bits, g).unwrap();
        let grouped = grouped_reduce(&x, &cfg).unwrap();
        prop_assert_eq!(grouped.codes().len(), 7usize.div_ceil(g));
        for (b, code) in grouped.codes().iter().enumerate() {
            let block = &x.coords()[b * g..(b * g + g).min(7)];
            prop_assert_eq!(code, &code_of(&Point::new(block.to_vec()).unwrap(), bits));
        }
    }
}
