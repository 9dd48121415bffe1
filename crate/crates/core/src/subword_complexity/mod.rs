//! Subword complexity `L_k`, Beatty/Sturmian reference sequences and the
//! three-gap structure of `{nα + β}`.

mod index;
mod quadratic;

pub use index::WindowIndex;
pub use quadratic::{parse_decimal, QuadraticNumber};

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use crate::certified_eval::Residue;
use crate::error::{Error, Result};
use crate::sources::{check_modulus, ResidueSource};

/// The line `n ↦ nα + β` with `α, β` in a common field `Q(√d)`.
///
/// Floors and fractional-part comparisons are decided in f64 when the value
/// is clearly away from the relevant boundary and exactly otherwise.
#[derive(Clone, Debug)]
pub struct BeattyLine {
    alpha: QuadraticNumber,
    beta: QuadraticNumber,
    d: u64,
    // nα + β = (n·a1·c2 + a2·c1 + (n·b1·c2 + b2·c1)√d) / (c1·c2)
    a1c2: BigInt,
    a2c1: BigInt,
    b1c2: BigInt,
    b2c1: BigInt,
    c: BigInt,
    af: f64,
    bf: f64,
}

const FAST_LIMIT: f64 = (1u64 << 50) as f64;

impl BeattyLine {
    pub fn new(alpha: QuadraticNumber, beta: QuadraticNumber) -> Result<Self> {
        // Fails unless both live in the same field.
        alpha.add(&beta)?;
        let d = if alpha.is_rational() { beta.parts().2 } else { alpha.parts().2 };
        let (a1, b1, c1) = alpha.integer_form();
        let (a2, b2, c2) = beta.integer_form();
        Ok(BeattyLine {
            af: alpha.to_f64(),
            bf: beta.to_f64(),
            alpha,
            beta,
            d,
            a1c2: &a1 * &c2,
            a2c1: &a2 * &c1,
            b1c2: &b1 * &c2,
            b2c1: &b2 * &c1,
            c: c1 * c2,
        })
    }

    pub fn alpha(&self) -> &QuadraticNumber {
        &self.alpha
    }

    pub fn beta(&self) -> &QuadraticNumber {
        &self.beta
    }

    fn approx(&self, n: u64) -> Option<(f64, f64)> {
        let x = n as f64 * self.af + self.bf;
        let margin = (n as f64 * self.af.abs() + self.bf.abs() + 1.0) * f64::EPSILON * 64.0;
        (x.abs() < FAST_LIMIT).then_some((x, margin))
    }

    fn exact_parts(&self, n: u64) -> (BigInt, BigInt) {
        let n = BigInt::from(n);
        (&n * &self.a1c2 + &self.a2c1, &n * &self.b1c2 + &self.b2c1)
    }

    fn exact_floor(&self, n: u64) -> BigInt {
        let (a, b) = self.exact_parts(n);
        (a + quadratic::floor_sqrt_mul(&b, self.d)).div_floor(&self.c)
    }

    /// `⌊nα + β⌋`.
    pub fn floor(&self, n: u64) -> BigInt {
        if let Some((x, margin)) = self.approx(n) {
            let f = x.floor();
            if x - f > margin && x - f < 1.0 - margin {
                return BigInt::from(f as i64);
            }
        }
        self.exact_floor(n)
    }

    /// `⌊nα + β⌋ mod m`.
    pub fn residue(&self, n: u64, m: u64) -> Residue {
        if let Some((x, margin)) = self.approx(n) {
            let f = x.floor();
            if x - f > margin && x - f < 1.0 - margin {
                return (f as i64).rem_euclid(m as i64) as Residue;
            }
        }
        self.exact_floor(n)
            .mod_floor(&BigInt::from(m))
            .to_u32()
            .expect("residue below m")
    }

    /// Whether `{nα + β} ≥ t` for a rational threshold `0 < t < 1`.
    pub fn frac_at_least(&self, n: u64, t: &BigRational, t_f64: f64) -> bool {
        if let Some((x, margin)) = self.approx(n) {
            let fr = x - x.floor();
            if fr > margin && fr < 1.0 - margin && (fr - t_f64).abs() > margin {
                return fr > t_f64;
            }
        }
        // (A + B√d)/C − (⌊x⌋ + t) ≥ 0 with t = r/s.
        let fl = self.exact_floor(n);
        let (a, b) = self.exact_parts(n);
        let (r, s) = (t.numer(), t.denom());
        let u = s * a - &self.c * (s * fl + r);
        let v = s * b;
        quadratic::sign_of(&u, &v, self.d) != Ordering::Less
    }
}

/// `⌊nα + β⌋ mod m` for `n = start, …, start + count - 1`.
pub fn beatty_residues(
    alpha: &QuadraticNumber,
    beta: &QuadraticNumber,
    m: u64,
    start: u64,
    count: usize,
) -> Result<Vec<Residue>> {
    BeattySequence::new(alpha.clone(), beta.clone(), m)?.residues(start, count)
}

/// The Beatty sequence `⌊nα + β⌋ mod m` as a residue source.
#[derive(Clone, Debug)]
pub struct BeattySequence {
    line: BeattyLine,
    m: u64,
}

impl BeattySequence {
    pub fn new(alpha: QuadraticNumber, beta: QuadraticNumber, m: u64) -> Result<Self> {
        check_modulus(m)?;
        Ok(BeattySequence {
            line: BeattyLine::new(alpha, beta)?,
            m,
        })
    }

    pub fn line(&self) -> &BeattyLine {
        &self.line
    }
}

impl ResidueSource for BeattySequence {
    fn modulus(&self) -> u64 {
        self.m
    }

    fn residues(&self, start: u64, count: usize) -> Result<Vec<Residue>> {
        if count > 0 && start.checked_add(count as u64 - 1).is_none() {
            return Err(Error::InvalidInput("index range overflows".into()));
        }
        let mut out = vec![0; count];
        out.par_chunks_mut(1 << 14).enumerate().for_each(|(c, slots)| {
            let base = start + (c << 14) as u64;
            for (i, s) in slots.iter_mut().enumerate() {
                *s = self.line.residue(base + i as u64, self.m);
            }
        });
        Ok(out)
    }

    fn describe(&self) -> String {
        format!("floor(n*({}) + {}) mod {}", self.line.alpha, self.line.beta, self.m)
    }
}

fn totient(n: u64) -> u64 {
    let (mut x, mut out, mut p) = (n, n, 2u64);
    while p * p <= x {
        if x % p == 0 {
            while x % p == 0 {
                x /= p;
            }
            out -= out / p;
        }
        p += 1;
    }
    if x > 1 {
        out -= out / x;
    }
    out
}

/// Number of balanced binary words of length `k`:
/// `1 + Σ_{i=1..k} (k − i + 1) φ(i)`.
pub fn sturmian_factor_count(k: u64) -> u128 {
    1 + (1..=k)
        .map(|i| u128::from(k - i + 1) * u128::from(totient(i)))
        .sum::<u128>()
}

/// Whether any two factors of equal length have 1-counts differing by at
/// most one. The word must be nonempty and binary.
pub fn is_balanced(word: &[Residue]) -> Result<bool> {
    if word.is_empty() {
        return Err(Error::InvalidInput("word is empty".into()));
    }
    if let Some(index) = word.iter().position(|&s| s > 1) {
        return Err(Error::SymbolOutOfRange {
            index,
            symbol: word[index],
            m: 2,
        });
    }
    let mut prefix = vec![0i64; word.len() + 1];
    for (i, &s) in word.iter().enumerate() {
        prefix[i + 1] = prefix[i] + i64::from(s);
    }
    for len in 1..word.len() {
        let sums = (0..=word.len() - len).map(|i| prefix[i + len] - prefix[i]);
        let (lo, hi) = sums.fold((i64::MAX, i64::MIN), |(lo, hi), s| (lo.min(s), hi.max(s)));
        if hi - lo > 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Gaps between consecutive `n ∈ [0, N)` with `{nα + β} ∈ [1 − ε, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapAnalysis {
    pub distinct_gaps: Vec<u64>,
    pub multiplicities: Vec<u64>,
    pub epsilon: f64,
    pub n: u64,
    pub hits: u64,
    pub first_hit: u64,
}

impl GapAnalysis {
    /// At most three gaps, and with three the largest is the sum of the others.
    pub fn three_gap_holds(&self) -> bool {
        match self.distinct_gaps.as_slice() {
            [_] | [_, _] => true,
            [a, b, c] => a + b == *c,
            _ => false,
        }
    }
}

pub fn three_gap_analysis(
    alpha: &QuadraticNumber,
    beta: &QuadraticNumber,
    epsilon: &BigRational,
    n: u64,
) -> Result<GapAnalysis> {
    if alpha.is_rational() {
        return Err(Error::RationalAlpha);
    }
    if !epsilon.is_positive() || epsilon >= &BigRational::one() {
        return Err(Error::InvalidInput("epsilon must lie in (0, 1)".into()));
    }
    if n == 0 {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    let line = BeattyLine::new(alpha.clone(), beta.clone())?;
    let t = BigRational::one() - epsilon;
    let t_f64 = t.to_f64().unwrap_or(0.5);
    let mut hits = Vec::new();
    for i in 0..n {
        if line.frac_at_least(i, &t, t_f64) {
            hits.push(i);
        }
    }
    if hits.len() < 2 {
        return Err(Error::EmptyHitSet);
    }
    let mut gaps: Vec<u64> = hits.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_unstable();
    let mut distinct_gaps = Vec::new();
    let mut multiplicities = Vec::new();
    for g in gaps {
        if distinct_gaps.last() == Some(&g) {
            *multiplicities.last_mut().unwrap() += 1;
        } else {
            distinct_gaps.push(g);
            multiplicities.push(1);
        }
    }
    Ok(GapAnalysis {
        distinct_gaps,
        multiplicities,
        epsilon: epsilon.to_f64().unwrap_or(f64::NAN),
        n,
        hits: hits.len() as u64,
        first_hit: hits[0],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexityProfile {
    /// `(k, L_k)` for `k = 1..=k_max`.
    pub entries: Vec<(usize, u64)>,
    /// Prefix length.
    pub n: usize,
    pub m: u64,
}

impl ComplexityProfile {
    pub fn l(&self, k: usize) -> Option<u64> {
        self.entries.get(k.checked_sub(1)?).map(|e| e.1)
    }

    /// `m^k` as f64 (exact while below 2^53).
    pub fn block_space(&self, k: usize) -> f64 {
        (self.m as f64).powi(k as i32)
    }
}

/// `L_k` for `k = 1..=k_max`.
pub fn complexity_profile(seq: &[Residue], m: u64, k_max: usize) -> Result<ComplexityProfile> {
    let idx = WindowIndex::build(seq, m, k_max)?;
    Ok(profile_from_index(&idx, seq.len(), m))
}

fn profile_from_index(idx: &WindowIndex<'_>, n: usize, m: u64) -> ComplexityProfile {
    ComplexityProfile {
        entries: idx.complexities().into_iter().enumerate().map(|(i, l)| (i + 1, l)).collect(),
        n,
        m,
    }
}

/// Least-squares slope of `ln L_k` against `ln k` over `k ∈ [k_lo, k_hi]`.
pub fn fit_growth_exponent(profile: &ComplexityProfile, k_lo: usize, k_hi: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = profile
        .entries
        .iter()
        .filter(|(k, l)| *k >= k_lo && *k <= k_hi && *l > 0)
        .map(|&(k, l)| ((k as f64).ln(), (l as f64).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Default lower end of the fitting range, skipping small-`k` transients.
pub const FIT_K_MIN: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexityExperiment {
    pub source: String,
    pub profile: ComplexityProfile,
    pub fit_range: (usize, usize),
    pub slope: Option<f64>,
    /// `max(4/(2 − c), 6)`, the upper growth exponent when `1 < c < 2`.
    pub upper_exponent: Option<f64>,
    /// Smallest `k*` with `L_k < m^k` for every measured `k ≥ k*`.
    pub deficient_from: Option<usize>,
    pub warning: Option<String>,
}

impl ComplexityExperiment {
    /// `(k, L_k, m^k, L_k/k³, L_k/k^r)` rows.
    pub fn rows(&self) -> Vec<(usize, u64, f64, f64, Option<f64>)> {
        self.profile
            .entries
            .iter()
            .map(|&(k, l)| {
                let kf = k as f64;
                (
                    k,
                    l,
                    self.profile.block_space(k),
                    l as f64 / kf.powi(3),
                    self.upper_exponent.map(|r| l as f64 / kf.powf(r)),
                )
            })
            .collect()
    }
}

/// Complexity profile of the prefix `u_1, …, u_N` with a log-log growth fit
/// over `k ∈ [8, k_max]`.
///
/// The growth window `[3, r]` only applies for `1 < c < 2`; other exponents
/// (and non-Piatetski-Shapiro sources) still get a profile and a fit, with the
/// bound comparison suppressed.
pub fn ps_complexity_experiment(source: &dyn ResidueSource, n: usize, k_max: usize) -> Result<ComplexityExperiment> {
    if n < k_max {
        return Err(Error::WindowTooShort { len: n, k: k_max });
    }
    let seq = source.residues(1, n)?;
    let m = source.modulus();
    let idx = WindowIndex::build(&seq, m, k_max)?;
    let profile = profile_from_index(&idx, n, m);
    let (upper_exponent, warning) = match source.exponent() {
        Some(c) => {
            let cf = c.to_f64();
            if c.integer_part() == 1 {
                (Some((4.0 / (2.0 - cf)).max(6.0)), None)
            } else {
                (None, Some(format!("c = {c} is outside (1, 2); growth bounds not compared")))
            }
        }
        None => (None, None),
    };
    let mut deficient_from = None;
    for &(k, l) in profile.entries.iter().rev() {
        if (l as f64) < profile.block_space(k) {
            deficient_from = Some(k);
        } else {
            break;
        }
    }
    Ok(ComplexityExperiment {
        source: source.describe(),
        slope: fit_growth_exponent(&profile, FIT_K_MIN, k_max),
        fit_range: (FIT_K_MIN, k_max),
        profile,
        upper_exponent,
        deficient_from,
        warning,
    })
}

#[cfg(test)]
mod tests;
