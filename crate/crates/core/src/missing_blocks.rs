//! Candidate missing blocks: the explicit constructions, linear-time block
//! search, saturation scans of the distinct-block count, and the
//! approximation schedule for polynomial coefficients.
//!
//! A block not found up to `N` is only consistent with it being absent from
//! the whole sequence; nothing here proves absence.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::block_stats::Block;
use crate::certified_eval::Residue;
use crate::error::{Error, Result};
use crate::sources::ResidueSource;
use crate::spectral::{approx_distance, dirichlet_approx};
use crate::subword_complexity::{QuadraticNumber, WindowIndex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BlockVariant {
    /// `2^{M!} 1^{M!} 0^{N-2M!}`, for `m ≥ 3`.
    ThreeSymbol,
    /// Zeros with ones at positions `2kM!`, `k = 1..2d`, for `m ≥ 2`.
    TwoSymbol,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ForbiddenBlockSpec {
    pub m: u64,
    /// `⌊c⌋`.
    pub d: u64,
    /// Stand-in for `M!`.
    pub m_factorial: u64,
    /// Block length.
    pub n: usize,
    pub variant: BlockVariant,
}

impl ForbiddenBlockSpec {
    pub fn new(m: u64, d: u64, m_factorial: u64, n: usize, variant: BlockVariant) -> Result<Self> {
        let spec = ForbiddenBlockSpec {
            m,
            d,
            m_factorial,
            n,
            variant,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn min_modulus(&self) -> u64 {
        match self.variant {
            BlockVariant::ThreeSymbol => 3,
            BlockVariant::TwoSymbol => 2,
        }
    }

    /// Length the construction needs.
    pub fn required_len(&self) -> Result<usize> {
        let f = self.m_factorial as u128;
        let need = match self.variant {
            BlockVariant::ThreeSymbol => 2 * f,
            BlockVariant::TwoSymbol => 4 * u128::from(self.d) * f,
        };
        need.try_into()
            .map_err(|_| Error::PreconditionViolation(format!("block length {need} is too large")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < self.min_modulus() {
            return Err(Error::ModulusTooSmall {
                m: self.m,
                min: self.min_modulus(),
            });
        }
        if self.m_factorial == 0 {
            return Err(Error::PreconditionViolation("M! must be positive".into()));
        }
        if self.variant == BlockVariant::TwoSymbol && self.d == 0 {
            return Err(Error::PreconditionViolation("d must be positive".into()));
        }
        let needed = self.required_len()?;
        if self.n < needed {
            return Err(Error::LengthTooShort { len: self.n, needed });
        }
        Ok(())
    }
}

fn expect_variant(spec: &ForbiddenBlockSpec, v: BlockVariant) -> Result<()> {
    if spec.variant != v {
        return Err(Error::PreconditionViolation(format!("expected variant {v:?}, got {:?}", spec.variant)));
    }
    spec.validate()
}

/// `2^{M!} 1^{M!} 0^{N-2M!}`.
pub fn construct_block_a(spec: &ForbiddenBlockSpec) -> Result<Block> {
    expect_variant(spec, BlockVariant::ThreeSymbol)?;
    let f = spec.m_factorial as usize;
    let mut b = vec![0 as Residue; spec.n];
    b[..f].fill(2);
    b[f..2 * f].fill(1);
    Ok(Block(b))
}

/// Zeros with a one at each 1-indexed position `2kM!`, `k = 1, …, 2d`.
pub fn construct_block_b(spec: &ForbiddenBlockSpec) -> Result<Block> {
    expect_variant(spec, BlockVariant::TwoSymbol)?;
    let f = spec.m_factorial as usize;
    let mut b = vec![0 as Residue; spec.n];
    for k in 1..=2 * spec.d as usize {
        b[2 * k * f - 1] = 1;
    }
    Ok(Block(b))
}

pub fn construct_block(spec: &ForbiddenBlockSpec) -> Result<Block> {
    match spec.variant {
        BlockVariant::ThreeSymbol => construct_block_a(spec),
        BlockVariant::TwoSymbol => construct_block_b(spec),
    }
}

const SEARCH_CHUNK: usize = 1 << 20;

/// KMP failure function.
fn failure(pat: &[Residue]) -> Vec<usize> {
    let mut f = vec![0; pat.len()];
    let mut k = 0;
    for i in 1..pat.len() {
        while k > 0 && pat[i] != pat[k] {
            k = f[k - 1];
        }
        if pat[i] == pat[k] {
            k += 1;
        }
        f[i] = k;
    }
    f
}

fn kmp_first(text: &[Residue], pat: &[Residue], fail: &[usize]) -> Option<usize> {
    let mut k = 0;
    for (i, &s) in text.iter().enumerate() {
        while k > 0 && s != pat[k] {
            k = fail[k - 1];
        }
        if s == pat[k] {
            k += 1;
        }
        if k == pat.len() {
            return Some(i + 1 - k);
        }
    }
    None
}

/// 0-based start of the first occurrence of `block` in `seq`.
pub fn block_occurs(seq: &[Residue], block: &[Residue]) -> Option<usize> {
    let k = block.len();
    if k == 0 {
        return Some(0);
    }
    if k > seq.len() {
        return None;
    }
    let fail = failure(block);
    let starts = seq.len() - k + 1;
    // Chunks own the starts [c·CHUNK, (c+1)·CHUNK) and read k−1 symbols past them.
    let found: Vec<Option<usize>> = (0..starts.div_ceil(SEARCH_CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * SEARCH_CHUNK;
            let hi = ((c + 1) * SEARCH_CHUNK).min(starts);
            kmp_first(&seq[lo..hi + k - 1], block, &fail).map(|p| lo + p)
        })
        .collect();
    found.into_iter().flatten().next()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SaturationRow {
    pub n: u64,
    /// Distinct `k`-blocks among `u_1, …, u_N`.
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SaturationReport {
    pub k: usize,
    pub m: u64,
    pub rows: Vec<SaturationRow>,
    #[serde(serialize_with = "crate::serialize_display")]
    pub block_space: BigUint,
    /// No growth over the last two prefixes while below `m^k`.
    pub saturated: bool,
    /// `m^k` minus the final count.
    #[serde(serialize_with = "crate::serialize_display")]
    pub missing: BigUint,
}

fn check_schedule(schedule: &[u64], k: usize) -> Result<()> {
    let bad = |why: String| Err(Error::PreconditionViolation(why));
    match schedule.first() {
        None => return bad("empty schedule".into()),
        Some(&n) if n < k as u64 => return bad(format!("first prefix {n} is shorter than k = {k}")),
        _ => {}
    }
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return bad("schedule must be strictly increasing".into());
    }
    if *schedule.last().unwrap() > u32::MAX as u64 {
        return bad("prefixes beyond 2^32 are not supported".into());
    }
    Ok(())
}

/// Saturation scans for several `k` over the prefixes `u_1, …, u_N` of one
/// sequence, sharing one window index.
pub fn saturation_sweep(source: &dyn ResidueSource, ks: &[usize], schedule: &[u64]) -> Result<Vec<SaturationReport>> {
    let k_max = ks.iter().copied().max().ok_or_else(|| Error::PreconditionViolation("no block lengths".into()))?;
    if ks.contains(&0) {
        return Err(Error::ZeroBlockLength);
    }
    check_schedule(schedule, k_max)?;
    let m = source.modulus();
    let seq = source.residues(1, *schedule.last().unwrap() as usize)?;
    let index = WindowIndex::build(&seq, m, k_max)?;
    Ok(ks
        .iter()
        .map(|&k| {
            let mut firsts = index.first_positions(k);
            firsts.sort_unstable();
            let rows: Vec<SaturationRow> = schedule
                .iter()
                .map(|&n| SaturationRow {
                    n,
                    count: firsts.partition_point(|&p| p as u64 + k as u64 <= n) as u64,
                })
                .collect();
            report(k, m, rows)
        })
        .collect())
}

fn report(k: usize, m: u64, rows: Vec<SaturationRow>) -> SaturationReport {
    let block_space = BigUint::from(m).pow(k as u32);
    let last = rows.last().map_or(0, |r| r.count);
    let saturated = rows.len() >= 2
        && rows[rows.len() - 2].count == last
        && BigUint::from(last) < block_space;
    let missing = &block_space - BigUint::from(last);
    SaturationReport {
        k,
        m,
        rows,
        block_space,
        saturated,
        missing,
    }
}

pub fn saturation_scan(source: &dyn ResidueSource, k: usize, schedule: &[u64]) -> Result<SaturationReport> {
    Ok(saturation_sweep(source, &[k], schedule)?.remove(0))
}

/// The distinct `k`-blocks among `u_1, …, u_N`, sorted.
pub fn present_blocks(source: &dyn ResidueSource, k: usize, n: u64) -> Result<Vec<Block>> {
    if k == 0 {
        return Err(Error::ZeroBlockLength);
    }
    check_schedule(&[n], k)?;
    let seq = source.residues(1, n as usize)?;
    let index = WindowIndex::build(&seq, source.modulus(), k)?;
    let mut out: Vec<Block> = index
        .first_positions(k)
        .into_iter()
        .map(|p| Block(seq[p as usize..p as usize + k].to_vec()))
        .collect();
    out.sort();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MissingBlockReport {
    pub variant: BlockVariant,
    pub m: u64,
    pub d: u64,
    #[serde(rename = "M_factorial")]
    pub m_factorial: u64,
    #[serde(rename = "N_block")]
    pub n_block: usize,
    #[serde(rename = "scanned_N")]
    pub scanned_n: u64,
    /// Index `n ≥ 1` at which the block starts, if it occurs.
    pub first_occurrence: Option<u64>,
}

/// Builds the block for `spec` and looks for it in `u_1, …, u_N`.
pub fn missing_block_search(spec: &ForbiddenBlockSpec, source: &dyn ResidueSource, scanned_n: u64) -> Result<MissingBlockReport> {
    if source.modulus() != spec.m {
        return Err(Error::PreconditionViolation(format!(
            "sequence modulus {} differs from block modulus {}",
            source.modulus(),
            spec.m
        )));
    }
    let block = construct_block(spec)?;
    let seq = source.residues(1, scanned_n as usize)?;
    Ok(MissingBlockReport {
        variant: spec.variant,
        m: spec.m,
        d: spec.d,
        m_factorial: spec.m_factorial,
        n_block: spec.n,
        scanned_n,
        first_occurrence: block_occurs(&seq, &block.0).map(|p| p as u64 + 1),
    })
}

/// For `x1, x2, x3` monotone with `|x3 − x1| < 1`, whether the residues of
/// their floors mod `m` avoid the patterns `(0,1,0)` and `(1,0,1)`.
pub fn monotone_triple_check(x1: f64, x2: f64, x3: f64, m: u64) -> Result<bool> {
    if m < 2 {
        return Err(Error::ModulusTooSmall { m, min: 2 });
    }
    let xs = [x1, x2, x3];
    if xs.iter().any(|x| !x.is_finite() || x.abs() >= 2f64.powi(62)) {
        return Err(Error::InvalidInput(format!("{xs:?} must be finite and below 2^62 in size")));
    }
    let monotone = (x1 <= x2 && x2 <= x3) || (x1 >= x2 && x2 >= x3);
    if !monotone {
        return Err(Error::PreconditionViolation(format!("{xs:?} is not monotone")));
    }
    if (x3 - x1).abs() >= 1.0 {
        return Err(Error::PreconditionViolation(format!("{xs:?} spans 1 or more")));
    }
    let r = xs.map(|x| (x.floor() as i64).rem_euclid(m as i64));
    Ok(r != [0, 1, 0] && r != [1, 0, 1])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoeffProbe {
    /// Coefficient index `i ≥ 1`.
    pub i: usize,
    pub n_i: u64,
    /// `Q_i`.
    pub q_bound: u64,
    #[serde(serialize_with = "crate::serialize_display")]
    pub p: BigInt,
    pub q: u64,
    /// `|α_i − p/q|`.
    pub error: f64,
    /// `N^(-(i+2)!/(2(d+2)!))`.
    pub bound: f64,
    pub within: bool,
}

/// Rational approximations of `α_1, …, α_d` on the schedule
/// `ε = 1/(2(d+2))`, `N_i = ⌊N^((i+2)!/(2(d+2)!)) + 1⌋`,
/// `Q_i = ⌊N_i^(1-ε) + 1⌋`, each compared against `N^(-(i+2)!/(2(d+2)!))`.
pub fn dirichlet_coeff_probe(coeffs: &[QuadraticNumber], n: u64) -> Result<Vec<CoeffProbe>> {
    let d = coeffs.len().saturating_sub(1);
    if d == 0 {
        return Err(Error::DegreeZero);
    }
    if n == 0 {
        return Err(Error::PreconditionViolation("N must be at least 1".into()));
    }
    let eps = 1.0 / (2.0 * (d as f64 + 2.0));
    let nf = n as f64;
    (1..=d)
        .map(|i| {
            // (i+2)!/(d+2)! = 1/((i+3)(i+4)⋯(d+2)).
            let ratio: f64 = (i + 3..=d + 2).map(|j| 1.0 / j as f64).product();
            let expo = ratio / 2.0;
            let n_i = (nf.powf(expo) + 1.0).floor();
            let q_bound = (n_i.powf(1.0 - eps) + 1.0).floor();
            if !(q_bound < 2f64.powi(63)) {
                return Err(Error::PreconditionViolation(format!("Q_{i} overflows")));
            }
            let (p, q) = dirichlet_approx(&coeffs[i], q_bound as u64)?;
            let dist = approx_distance(&coeffs[i], &p, &BigInt::from(q))?;
            let bound = nf.powf(-expo);
            let limit = QuadraticNumber::rational(BigRational::from_float(bound).expect("finite"));
            Ok(CoeffProbe {
                i,
                n_i: n_i as u64,
                q_bound: q_bound as u64,
                p,
                q,
                error: dist.to_f64(),
                bound,
                within: dist.cmp_exact(&limit)? != Ordering::Greater,
            })
        })
        .collect()
}

/// The first report flagged as saturated.
pub fn first_saturated(reports: &[SaturationReport]) -> Option<&SaturationReport> {
    reports.iter().find(|r| r.saturated)
}

impl SaturationReport {
    pub fn final_count(&self) -> u64 {
        self.rows.last().map_or(0, |r| r.count)
    }

    /// Fraction of the `m^k` blocks seen in the longest prefix.
    pub fn coverage(&self) -> f64 {
        self.final_count() as f64 / self.block_space.to_f64().unwrap_or(f64::INFINITY)
    }
}

#[cfg(test)]
mod tests;
