//! Length-`k` block statistics of residue sequences.
//!
//! Frequencies are exact rationals; [`normality_deviation`] compares them with
//! the uniform value `m^-k` and counts absent blocks at full weight, so a
//! missing block shows up as a deviation of `m^-k`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Range;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::certified_eval::{ExponentSpec, Residue};
use crate::error::{Error, Result};
use crate::sources::ResidueSource;

/// Windows counted per parallel task.
const SCAN_CHUNK: usize = 1 << 16;
/// Up to this many possible blocks the counter is a flat array.
const DENSE_LIMIT: u64 = 1 << 12;

/// A word over `{0, …, m-1}`; ordered lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Block(pub Vec<Residue>);

impl Block {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Residue] {
        &self.0
    }
}

/// Symbols joined by `-`, e.g. `1-0-1`.
impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockHistogram {
    m: u64,
    k: usize,
    counts: BTreeMap<Block, u64>,
    total: u64,
}

impl BlockHistogram {
    pub fn new(m: u64, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroBlockLength);
        }
        if m < 1 {
            return Err(Error::ModulusTooSmall { m, min: 1 });
        }
        Ok(BlockHistogram {
            m,
            k,
            counts: BTreeMap::new(),
            total: 0,
        })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct blocks seen.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, block: &[Residue]) -> u64 {
        self.counts.get(&Block(block.to_vec())).copied().unwrap_or(0)
    }

    /// Present blocks in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&Block, u64)> {
        self.counts.iter().map(|(b, &c)| (b, c))
    }

    /// `m^k`, the number of possible blocks.
    pub fn block_space(&self) -> BigUint {
        num_traits::pow(BigUint::from(self.m), self.k)
    }

    pub fn frequency(&self, block: &[Residue]) -> Result<BigRational> {
        if self.total == 0 {
            return Err(Error::EmptyHistogram);
        }
        Ok(BigRational::new(
            BigInt::from(self.count(block)),
            BigInt::from(self.total),
        ))
    }

    /// Exact frequencies of the present blocks.
    pub fn frequencies(&self) -> Result<Vec<(Block, BigRational)>> {
        if self.total == 0 {
            return Err(Error::EmptyHistogram);
        }
        let total = BigInt::from(self.total);
        Ok(self
            .counts
            .iter()
            .map(|(b, &c)| (b.clone(), BigRational::new(BigInt::from(c), total.clone())))
            .collect())
    }

    pub fn add(&mut self, block: Block, count: u64) {
        debug_assert_eq!(block.len(), self.k);
        if count > 0 {
            *self.counts.entry(block).or_insert(0) += count;
            self.total += count;
        }
    }

    /// Adds the counts of `other`, which must have the same `m` and `k`.
    pub fn merge(&mut self, other: &BlockHistogram) -> Result<()> {
        if self.m != other.m || self.k != other.k {
            return Err(Error::ShapeMismatch);
        }
        for (b, &c) in &other.counts {
            *self.counts.entry(b.clone()).or_insert(0) += c;
        }
        self.total += other.total;
        Ok(())
    }
}

fn check_symbols(seq: &[Residue], m: u64) -> Result<()> {
    match seq.iter().position(|&s| u64::from(s) >= m) {
        Some(index) => Err(Error::SymbolOutOfRange {
            index,
            symbol: seq[index],
            m,
        }),
        None => Ok(()),
    }
}

/// Counts the windows `seq[i..i+k]` for `i` in `starts`.
fn count_range(seq: &[Residue], k: usize, m: u64, starts: Range<usize>) -> BlockHistogram {
    let mut h = BlockHistogram {
        m,
        k,
        counts: BTreeMap::new(),
        total: 0,
    };
    let codes = |visit: &mut dyn FnMut(u64)| {
        let top = m.pow(k as u32 - 1);
        let mut code = 0u64;
        for (j, &s) in seq[starts.start..starts.end + k - 1].iter().enumerate() {
            code = (code % top) * m + u64::from(s);
            if j + 1 >= k {
                visit(code);
            }
        }
    };
    match m.checked_pow(k as u32) {
        Some(space) if space <= DENSE_LIMIT => {
            let mut dense = vec![0u64; space as usize];
            codes(&mut |c| dense[c as usize] += 1);
            for (code, &c) in dense.iter().enumerate() {
                h.add(decode(code as u64, m, k), c);
            }
        }
        Some(_) => {
            let mut sparse: HashMap<u64, u64> = HashMap::new();
            codes(&mut |c| *sparse.entry(c).or_insert(0) += 1);
            for (code, c) in sparse {
                h.add(decode(code, m, k), c);
            }
        }
        None => {
            let mut sparse: HashMap<&[Residue], u64> = HashMap::new();
            for i in starts {
                *sparse.entry(&seq[i..i + k]).or_insert(0) += 1;
            }
            for (w, c) in sparse {
                h.add(Block(w.to_vec()), c);
            }
        }
    }
    h
}

fn decode(mut code: u64, m: u64, k: usize) -> Block {
    let mut v = vec![0; k];
    for slot in v.iter_mut().rev() {
        *slot = (code % m) as Residue;
        code /= m;
    }
    Block(v)
}

/// Histogram of the windows of length `k` starting in `starts`.
///
/// Counting disjoint start ranges and merging gives the same result as one
/// scan over their union; this is how [`scan_blocks`] parallelises.
pub fn scan_blocks_range(seq: &[Residue], k: usize, m: u64, starts: Range<usize>) -> Result<BlockHistogram> {
    if k == 0 {
        return Err(Error::ZeroBlockLength);
    }
    if seq.len() < k {
        return Err(Error::WindowTooShort { len: seq.len(), k });
    }
    if starts.end > seq.len() - k + 1 || starts.start > starts.end {
        return Err(Error::InvalidInput(format!(
            "window starts {starts:?} exceed {} windows",
            seq.len() - k + 1
        )));
    }
    check_symbols(&seq[starts.start..starts.end + k - 1], m)?;
    BlockHistogram::new(m, k)?;
    Ok(count_range(seq, k, m, starts))
}

/// Histogram of all contiguous windows of length `k`.
pub fn scan_blocks(seq: &[Residue], k: usize, m: u64) -> Result<BlockHistogram> {
    if k == 0 {
        return Err(Error::ZeroBlockLength);
    }
    if seq.len() < k {
        return Err(Error::WindowTooShort { len: seq.len(), k });
    }
    BlockHistogram::new(m, k)?;
    check_symbols(seq, m)?;
    let windows = seq.len() - k + 1;
    let parts: Vec<BlockHistogram> = (0..windows.div_ceil(SCAN_CHUNK))
        .into_par_iter()
        .map(|c| {
            let a = c * SCAN_CHUNK;
            count_range(seq, k, m, a..(a + SCAN_CHUNK).min(windows))
        })
        .collect();
    let mut h = BlockHistogram::new(m, k)?;
    for p in &parts {
        h.merge(p)?;
    }
    Ok(h)
}

/// `max_B |count(B)/total − m^-k|` over all `m^k` blocks, computed exactly and
/// rounded once at the end.
pub fn normality_deviation(h: &BlockHistogram) -> Result<f64> {
    if h.total == 0 {
        return Err(Error::EmptyHistogram);
    }
    let space = BigInt::from(h.block_space());
    let total = BigInt::from(h.total);
    // |count/total − 1/space| = |count·space − total| / (total·space)
    let mut worst = BigInt::zero();
    for &c in h.counts.values() {
        let d = BigInt::from(c) * &space - &total;
        let d = if d < BigInt::zero() { -d } else { d };
        worst = worst.max(d);
    }
    if BigInt::from(h.distinct()) < space {
        worst = worst.max(total.clone());
    }
    let r = BigRational::new(worst, total * space);
    Ok(r.to_f64().unwrap_or(0.0))
}

/// `‖c‖ / ((k+2) 2^(c+1))`, the exponent of the proven convergence rate
/// `N^-rate` for length-`k` blocks.
pub fn rate_exponent(c: &ExponentSpec, k: usize) -> f64 {
    c.distance_to_integer() / ((k as f64 + 2.0) * 2f64.powf(c.to_f64() + 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformityRow {
    pub k: usize,
    pub deviation: f64,
    pub distinct_blocks: usize,
    /// Only known for Piatetski-Shapiro sources.
    pub rate_exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformityReport {
    pub source: String,
    pub m: u64,
    /// Scanned indices are `[n, 2n)`.
    pub n: u64,
    pub rows: Vec<UniformityRow>,
}

/// Block deviations for `k = 1..=k_max` over the indices `[n, 2n)`.
pub fn uniformity_report(source: &dyn ResidueSource, k_max: usize, n: u64) -> Result<UniformityReport> {
    if k_max == 0 {
        return Err(Error::ZeroBlockLength);
    }
    if n < k_max as u64 {
        return Err(Error::WindowTooShort {
            len: n as usize,
            k: k_max,
        });
    }
    let count = usize::try_from(n).map_err(|_| Error::InvalidInput(format!("n = {n} is too large")))?;
    let seq = source.residues(n, count)?;
    uniformity_rows(source, &seq, k_max, n)
}

/// Same as [`uniformity_report`] but scanning `[1, n]`.
pub fn uniformity_report_prefix(source: &dyn ResidueSource, k_max: usize, n: u64) -> Result<UniformityReport> {
    if k_max == 0 {
        return Err(Error::ZeroBlockLength);
    }
    let count = usize::try_from(n).map_err(|_| Error::InvalidInput(format!("n = {n} is too large")))?;
    if count < k_max {
        return Err(Error::WindowTooShort { len: count, k: k_max });
    }
    let seq = source.residues(1, count)?;
    uniformity_rows(source, &seq, k_max, n)
}

fn uniformity_rows(source: &dyn ResidueSource, seq: &[Residue], k_max: usize, n: u64) -> Result<UniformityReport> {
    let m = source.modulus();
    let mut rows = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let h = scan_blocks(seq, k, m)?;
        rows.push(UniformityRow {
            k,
            deviation: normality_deviation(&h)?,
            distinct_blocks: h.distinct(),
            rate_exponent: source.exponent().map(|c| rate_exponent(c, k)),
        });
    }
    Ok(UniformityReport {
        source: source.describe(),
        m,
        n,
        rows,
    })
}
