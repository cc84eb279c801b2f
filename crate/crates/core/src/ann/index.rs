use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::{project, sample_projection, BinaryMatrix};
use super::AnnParams;
use crate::data::UnitCubeParams;
use crate::error::{Error, Result};
use crate::knn::{check_k, select_smallest, NeighborOracle, NeighborSet, Ranked};
use crate::metric::{hamming_words, BitString};
use crate::seed::{splitmix64, stream, Seed};

const MAGIC: &[u8; 8] = b"BORELANN";
const FORMAT_VERSION: u32 = 1;

/// How the indexed strings were produced from real vectors, so that a
/// stored index can encode new queries the same way.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingInfo {
    pub levels: u32,
    pub normalization: UnitCubeParams,
}

/// One projection and the dataset's images under it. Distinct codewords are
/// kept in order of first appearance; `members[offsets[s]..offsets[s+1]]`
/// lists the points mapping to slot `s`, ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct Draw {
    matrix: BinaryMatrix,
    codewords: Vec<u64>,
    offsets: Vec<u32>,
    members: Vec<u32>,
    lookup: HashMap<u64, Vec<u32>>,
}

impl Draw {
    fn build(matrix: BinaryMatrix, points: &[BitString]) -> Draw {
        let wpr = matrix.cols().div_ceil(64);
        let images = matrix.project_batch(points);
        let mut codewords: Vec<u64> = Vec::new();
        let mut lookup: HashMap<u64, Vec<u32>> = HashMap::new();
        let mut slot_of = Vec::with_capacity(points.len());
        for image in images.chunks(wpr) {
            let slots = lookup.entry(fingerprint(image)).or_default();
            let found = slots
                .iter()
                .copied()
                .find(|&s| &codewords[s as usize * wpr..(s as usize + 1) * wpr] == image);
            let slot = found.unwrap_or_else(|| {
                let s = (codewords.len() / wpr) as u32;
                codewords.extend_from_slice(image);
                slots.push(s);
                s
            });
            slot_of.push(slot);
        }
        let (offsets, members) = group_members(&slot_of, codewords.len() / wpr);
        Draw {
            matrix,
            codewords,
            offsets,
            members,
            lookup,
        }
    }

    fn from_parts(
        matrix: BinaryMatrix,
        codewords: Vec<u64>,
        offsets: Vec<u32>,
        members: Vec<u32>,
    ) -> Result<Draw> {
        let wpr = matrix.cols().div_ceil(64);
        let slots = codewords.len() / wpr;
        if offsets.len() != slots + 1 || offsets.last().copied() != Some(members.len() as u32) {
            return Err(Error::param("inconsistent bucket table"));
        }
        let mut lookup: HashMap<u64, Vec<u32>> = HashMap::new();
        for s in 0..slots {
            lookup
                .entry(fingerprint(&codewords[s * wpr..(s + 1) * wpr]))
                .or_default()
                .push(s as u32);
        }
        Ok(Draw {
            matrix,
            codewords,
            offsets,
            members,
            lookup,
        })
    }

    pub fn matrix(&self) -> &BinaryMatrix {
        &self.matrix
    }

    /// Number of distinct codewords.
    pub fn slots(&self) -> usize {
        self.offsets.len() - 1
    }

    fn codeword(&self, s: usize) -> &[u64] {
        let wpr = self.matrix.cols().div_ceil(64);
        &self.codewords[s * wpr..(s + 1) * wpr]
    }

    pub fn bucket(&self, s: usize) -> &[u32] {
        &self.members[self.offsets[s] as usize..self.offsets[s + 1] as usize]
    }

    /// Dataset indices whose image is exactly `code`.
    pub fn lookup(&self, code: &BitString) -> Option<&[u32]> {
        let slots = self.lookup.get(&fingerprint(code.words()))?;
        slots
            .iter()
            .find(|&&s| self.codeword(s as usize) == code.words())
            .map(|&s| self.bucket(s as usize))
    }

    /// Every dataset index, each exactly once.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().map(|&i| i as usize)
    }

    /// Image distance from `image` to every slot.
    fn image_distances(&self, image: &[u64]) -> impl Iterator<Item = (usize, u32)> + '_ {
        let image = image.to_vec();
        (0..self.slots()).map(move |s| (s, hamming_words(self.codeword(s), &image)))
    }

    fn count_within(&self, image: &[u64], threshold: f64, enough: usize) -> usize {
        let mut count = 0;
        for (s, dist) in self.image_distances(image) {
            if f64::from(dist) <= threshold {
                count += self.bucket(s).len();
                if count >= enough {
                    break;
                }
            }
        }
        count
    }

    fn image_nearest(&self, image: &[u64], k: usize, seed: Seed) -> Vec<usize> {
        let mut cands: Vec<Ranked<u32>> = Vec::with_capacity(self.members.len());
        for (s, dist) in self.image_distances(image) {
            for &i in self.bucket(s) {
                cands.push((dist, seed.rank(u64::from(i)), i as usize));
            }
        }
        select_smallest(cands, k)
            .into_iter()
            .map(|(_, _, i)| i)
            .collect()
    }
}

fn fingerprint(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x243F_6A88_85A3_08D3, |h, &w| splitmix64(h ^ w))
}

fn group_members(slot_of: &[u32], slots: usize) -> (Vec<u32>, Vec<u32>) {
    let mut offsets = vec![0u32; slots + 1];
    for &s in slot_of {
        offsets[s as usize + 1] += 1;
    }
    for s in 0..slots {
        offsets[s + 1] += offsets[s];
    }
    let mut fill = offsets.clone();
    let mut members = vec![0u32; slot_of.len()];
    for (i, &s) in slot_of.iter().enumerate() {
        members[fill[s as usize] as usize] = i as u32;
        fill[s as usize] += 1;
    }
    (offsets, members)
}

/// The `R` draws for one range `ℓ`.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeTable {
    range: usize,
    draws: Vec<Draw>,
}

impl RangeTable {
    pub fn range(&self) -> usize {
        self.range
    }

    pub fn draws(&self) -> &[Draw] {
        &self.draws
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Header {
    dim: usize,
    n: usize,
    k: usize,
    k_prime: usize,
    params: AnnParams,
    seed: Seed,
    encoding: Option<EncodingInfo>,
}

/// Range tables for every `ℓ ∈ 1..=D` over a fixed set of bit strings.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnIndex {
    header: Header,
    points: Vec<BitString>,
    tables: Vec<RangeTable>,
}

fn matrix_seed(seed: Seed, range: usize, draw: usize) -> Seed {
    seed.derive(stream::MATRIX)
        .derive(range as u64)
        .derive(draw as u64)
}

pub fn build_ann_index(
    points: &[BitString],
    params: &AnnParams,
    k: usize,
    seed: Seed,
) -> Result<AnnIndex> {
    let params = params.clone().validated()?;
    let first = points.first().ok_or(Error::EmptyDataset)?;
    let dim = first.len();
    if dim == 0 {
        return Err(Error::param("bit strings must be nonempty"));
    }
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: p.len(),
            });
        }
    }
    check_k(k, points.len())?;
    let n = points.len();
    let k_prime = params.k_prime(n);
    let jobs: Vec<(usize, usize)> = (1..=dim)
        .flat_map(|l| (0..params.repeats).map(move |r| (l, r)))
        .collect();
    let draws: Vec<Draw> = jobs
        .par_iter()
        .map(|&(l, r)| {
            Ok(Draw::build(
                sample_projection(dim, k_prime, l, matrix_seed(seed, l, r))?,
                points,
            ))
        })
        .collect::<Result<_>>()?;
    let mut draws = draws.into_iter();
    let tables = (1..=dim)
        .map(|range| RangeTable {
            range,
            draws: draws.by_ref().take(params.repeats).collect(),
        })
        .collect();
    Ok(AnnIndex {
        header: Header {
            dim,
            n,
            k,
            k_prime,
            params,
            seed,
            encoding: None,
        },
        points: points.to_vec(),
        tables,
    })
}

/// Expected fraction of differing projected bits for two strings at
/// Hamming distance `r` under a Bernoulli(1/ℓ) matrix.
fn flip_rate(range: usize, r: f64) -> f64 {
    (1.0 - (1.0 - 2.0 / range as f64).powf(r)) / 2.0
}

impl AnnIndex {
    pub fn dim(&self) -> usize {
        self.header.dim
    }

    pub fn len(&self) -> usize {
        self.header.n
    }

    pub fn is_empty(&self) -> bool {
        self.header.n == 0
    }

    pub fn k(&self) -> usize {
        self.header.k
    }

    pub fn k_prime(&self) -> usize {
        self.header.k_prime
    }

    pub fn params(&self) -> &AnnParams {
        &self.header.params
    }

    pub fn seed(&self) -> Seed {
        self.header.seed
    }

    pub fn points(&self) -> &[BitString] {
        &self.points
    }

    pub fn tables(&self) -> &[RangeTable] {
        &self.tables
    }

    pub fn encoding(&self) -> Option<&EncodingInfo> {
        self.header.encoding.as_ref()
    }

    pub fn with_encoding(mut self, encoding: EncodingInfo) -> Self {
        self.header.encoding = Some(encoding);
        self
    }

    /// Image-distance threshold separating original distances `≤ ℓ/2` from
    /// `≥ ℓ(1+4ε)/2`: the midpoint of the two expected image distances.
    pub fn threshold(&self, range: usize) -> f64 {
        let l = range as f64;
        let near = flip_rate(range, l / 2.0);
        let far = flip_rate(range, l * (1.0 + 4.0 * self.header.params.epsilon) / 2.0);
        self.header.k_prime as f64 * (near + far) / 2.0
    }

    /// Ranges the binary search runs over. At `ℓ ≤ 2` the flip rate does
    /// not depend on the distance scale (ℓ = 1 reduces to parity, ℓ = 2
    /// flips every bit with probability ½), so the search starts at 3.
    pub fn search_ranges(&self) -> std::ops::RangeInclusive<usize> {
        self.header.dim.min(3)..=self.header.dim
    }

    /// Whether draw `r` at range `ℓ` sees at least `k` points within the
    /// image threshold of `q`.
    pub fn range_has_k(&self, q: &BitString, range: usize, draw: usize, k: usize) -> Result<bool> {
        let d = &self.tables[range - 1].draws[draw];
        let image = project(d.matrix(), q)?;
        Ok(d.count_within(image.words(), self.threshold(range), k) >= k)
    }

    /// Smallest searched range whose draw `r` has `k` points within the
    /// threshold; the largest range if none does.
    pub fn search_range(&self, q: &BitString, draw: usize, k: usize) -> Result<usize> {
        let (mut lo, mut hi) = (*self.search_ranges().start(), *self.search_ranges().end());
        if !self.range_has_k(q, hi, draw, k)? {
            return Ok(hi);
        }
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.range_has_k(q, mid, draw, k)? {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(lo)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let io = |e| Error::io("<index>", e);
        let header = serde_json::to_vec(&self.header)?;
        w.write_all(MAGIC).map_err(io)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes()).map_err(io)?;
        w.write_all(&(header.len() as u64).to_le_bytes())
            .map_err(io)?;
        w.write_all(&header).map_err(io)?;
        for p in &self.points {
            write_words(&mut w, p.words()).map_err(io)?;
        }
        for t in &self.tables {
            for d in &t.draws {
                write_words(&mut w, d.matrix.data()).map_err(io)?;
                w.write_all(&(d.slots() as u64).to_le_bytes()).map_err(io)?;
                write_words(&mut w, &d.codewords).map_err(io)?;
                write_u32s(&mut w, &d.offsets).map_err(io)?;
                write_u32s(&mut w, &d.members).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }

    pub fn read_from(mut r: impl Read) -> Result<AnnIndex> {
        let bad = |m: &str| Error::Format {
            path: "<index>".into(),
            message: m.to_string(),
        };
        let io = |e: std::io::Error| bad(&e.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(bad("not an index file"));
        }
        let version = read_u32(&mut r).map_err(io)?;
        if version != FORMAT_VERSION {
            return Err(bad(&format!("unsupported index version {version}")));
        }
        let len = read_u64(&mut r).map_err(io)? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf).map_err(io)?;
        let header: Header = serde_json::from_slice(&buf)?;
        let pw = header.dim.div_ceil(64);
        let cw = header.k_prime.div_ceil(64);
        let mut points = Vec::with_capacity(header.n);
        for _ in 0..header.n {
            points.push(BitString::from_words(
                read_words(&mut r, pw).map_err(io)?,
                header.dim,
            ));
        }
        let mut tables = Vec::with_capacity(header.dim);
        for range in 1..=header.dim {
            let mut draws = Vec::with_capacity(header.params.repeats);
            for draw in 0..header.params.repeats {
                let data = read_words(&mut r, header.dim * cw).map_err(io)?;
                let matrix = BinaryMatrix::from_raw(
                    header.dim,
                    header.k_prime,
                    range,
                    matrix_seed(header.seed, range, draw),
                    data,
                )?;
                let slots = read_u64(&mut r).map_err(io)? as usize;
                if slots > header.n {
                    return Err(bad("bucket table larger than the dataset"));
                }
                let codewords = read_words(&mut r, slots * cw).map_err(io)?;
                let offsets = read_u32s(&mut r, slots + 1).map_err(io)?;
                let members = read_u32s(&mut r, header.n).map_err(io)?;
                draws.push(Draw::from_parts(matrix, codewords, offsets, members)?);
            }
            tables.push(RangeTable { range, draws });
        }
        Ok(AnnIndex {
            header,
            points,
            tables,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(f))
            .map_err(|e| relabel(e, path))
    }

    pub fn load(path: &Path) -> Result<AnnIndex> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        AnnIndex::read_from(BufReader::new(f)).map_err(|e| relabel(e, path))
    }

    /// FNV-1a over the serialized index.
    pub fn digest(&self) -> u64 {
        let mut h = Fnv(0xCBF2_9CE4_8422_2325);
        self.write_to(&mut h).expect("hashing cannot fail");
        h.0
    }
}

fn relabel(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::io(path, source),
        Error::Format { message, .. } => Error::Format {
            path: path.into(),
            message,
        },
        other => other,
    }
}

struct Fnv(u64);

impl Write for Fnv {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        for &b in buf {
            self.0 = (self.0 ^ u64::from(b)).wrapping_mul(0x0100_0000_01B3);
        }
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

fn write_words(w: &mut impl Write, words: &[u64]) -> std::io::Result<()> {
    for x in words {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn write_u32s(w: &mut impl Write, v: &[u32]) -> std::io::Result<()> {
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_words(r: &mut impl Read, count: usize) -> std::io::Result<Vec<u64>> {
    (0..count).map(|_| read_u64(r)).collect()
}

fn read_u32s(r: &mut impl Read, count: usize) -> std::io::Result<Vec<u32>> {
    (0..count).map(|_| read_u32(r)).collect()
}

/// k-ANN query. For each of the `R` draws: binary search for the smallest
/// range with `k` image neighbours inside the threshold, take the `k`
/// image-nearest points there, and add them to a common bucket. The `k`
/// bucket members nearest to `q` in the cube are returned.
pub fn kann_query(index: &AnnIndex, q: &BitString, k: usize, seed: Seed) -> Result<NeighborSet> {
    check_k(k, index.len())?;
    if q.len() != index.dim() {
        return Err(Error::DimensionMismatch {
            expected: index.dim(),
            actual: q.len(),
        });
    }
    let mut bucket: Vec<usize> = Vec::with_capacity(k * index.params().repeats);
    for r in 0..index.params().repeats {
        let range = index.search_range(q, r, k)?;
        let draw = &index.tables[range - 1].draws[r];
        let image = project(draw.matrix(), q)?;
        bucket.extend(draw.image_nearest(image.words(), k, seed));
    }
    bucket.sort_unstable();
    bucket.dedup();
    let cands: Vec<Ranked<u32>> = bucket
        .into_iter()
        .map(|i| {
            (
                hamming_words(q.words(), index.points[i].words()),
                seed.rank(i as u64),
                i,
            )
        })
        .collect();
    let best = select_smallest(cands, k);
    Ok(NeighborSet {
        indices: best.iter().map(|c| c.2).collect(),
        distances: best.iter().map(|c| f64::from(c.0)).collect(),
    })
}

impl NeighborOracle<BitString> for AnnIndex {
    fn neighbors(&self, q: &BitString, k: usize, seed: Seed) -> Result<NeighborSet> {
        kann_query(self, q, k, seed)
    }
}

/// Outcome of checking k-ANN answers against exact search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub queries: usize,
    pub k: usize,
    pub c: f64,
    /// Queries whose `k` answers all lie within `(1 + c)·ε_k-NN`.
    pub satisfied: usize,
    pub rate: f64,
    /// Largest ratio of returned radius to `ε_k-NN` (1 when exact).
    pub worst_ratio: f64,
    pub mean_ratio: f64,
}

/// Run every query through the index and compare with brute force. Query
/// `i` uses the same derived seed a classifier would give ordinal `i`.
pub fn audit_kann(
    index: &AnnIndex,
    queries: &[BitString],
    k: usize,
    seed: Seed,
) -> Result<AuditReport> {
    if queries.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let c = index.params().c;
    let ratios: Vec<(bool, f64)> = queries
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let s = seed
                .derive(stream::QUERY)
                .derive(i as u64)
                .derive(stream::NEIGHBOR_TIES);
            let got = kann_query(index, q, k, s)?;
            let exact = crate::knn::brute_knn(&index.points, q, k, s)?;
            let eps = exact.radius();
            let ok = got.distances.iter().all(|&d| d <= (1.0 + c) * eps);
            let ratio = if eps > 0.0 {
                got.radius() / eps
            } else if got.radius() == 0.0 {
                1.0
            } else {
                f64::INFINITY
            };
            Ok((ok, ratio))
        })
        .collect::<Result<_>>()?;
    let satisfied = ratios.iter().filter(|r| r.0).count();
    Ok(AuditReport {
        queries: queries.len(),
        k,
        c,
        satisfied,
        rate: satisfied as f64 / queries.len() as f64,
        worst_ratio: ratios.iter().map(|r| r.1).fold(1.0, f64::max),
        mean_ratio: ratios.iter().map(|r| r.1).sum::<f64>() / queries.len() as f64,
    })
}
