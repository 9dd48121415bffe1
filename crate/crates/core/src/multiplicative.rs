//! Multiplicative functions against `G(⌊n^c⌋ mod m)`: Möbius and Liouville
//! sieves, correlation sums, and the prime-pair sums of the Daboussi–Kátai
//! criterion.
//!
//! All sums run over `1 ≤ n ≤ N`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::certified_eval::{floor_mod, power_bounds, residue_window, ExponentSpec, PrecisionPolicy};
use crate::error::{Error, Result};
use crate::spectral::{best_approximation, compensated_sum, unit, ExpSumResult};
use crate::subword_complexity::QuadraticNumber;

/// Sieve segment length.
pub const SEGMENT: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MultiplicativeKind {
    Mobius,
    Liouville,
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
enum Values {
    /// Values in `{-1, 0, 1}`; sums over them are exact.
    Signs(Vec<i8>),
    Complex(Vec<Complex64>),
}

/// `f(1), …, f(N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplicativeTable {
    kind: MultiplicativeKind,
    values: Values,
}

/// Largest `a, b` used when spot-checking `f(ab) = f(a) f(b)`.
const SPOT_CHECK: u64 = 300;

impl MultiplicativeTable {
    /// A user-supplied table `values[n-1] = f(n)`. Checks `f(1) = 1`,
    /// `|f(n)| ≤ 1`, and multiplicativity on every coprime pair `a, b ≤ 300`
    /// with `ab ≤ N`.
    pub fn custom(values: Vec<Complex64>) -> Result<Self> {
        const TOL: f64 = 1e-9;
        let bad = |why: String| Err(Error::HypothesisViolation(why));
        match values.first() {
            None => return Err(Error::EmptySet),
            Some(v) if (v - Complex64::new(1.0, 0.0)).norm() > TOL => return bad(format!("f(1) = {v}, not 1")),
            _ => {}
        }
        if let Some(i) = values.iter().position(|v| !(v.norm() <= 1.0 + TOL)) {
            return bad(format!("|f({})| = {} exceeds 1", i + 1, values[i].norm()));
        }
        let n = values.len() as u64;
        let f = |k: u64| values[k as usize - 1];
        for a in 2..=SPOT_CHECK.min(n) {
            for b in a + 1..=SPOT_CHECK.min(n / a) {
                if a.gcd(&b) == 1 && (f(a * b) - f(a) * f(b)).norm() > TOL {
                    return bad(format!("f({}) ≠ f({a}) f({b})", a * b));
                }
            }
        }
        let signs: Option<Vec<i8>> = values
            .iter()
            .map(|v| (v.im == 0.0 && [-1.0, 0.0, 1.0].contains(&v.re)).then_some(v.re as i8))
            .collect();
        Ok(MultiplicativeTable {
            kind: MultiplicativeKind::Custom,
            values: match signs {
                Some(s) => Values::Signs(s),
                None => Values::Complex(values),
            },
        })
    }

    /// `f ≡ 1` on `1..=n`.
    pub fn constant_one(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySet);
        }
        Ok(MultiplicativeTable {
            kind: MultiplicativeKind::Custom,
            values: Values::Signs(vec![1; n]),
        })
    }

    pub fn kind(&self) -> MultiplicativeKind {
        self.kind
    }

    /// Largest `n` in the table.
    pub fn n(&self) -> u64 {
        match &self.values {
            Values::Signs(v) => v.len() as u64,
            Values::Complex(v) => v.len() as u64,
        }
    }

    /// `f(n)` for `1 ≤ n ≤ N`.
    pub fn get(&self, n: u64) -> Complex64 {
        let i = n as usize - 1;
        match &self.values {
            Values::Signs(v) => Complex64::new(f64::from(v[i]), 0.0),
            Values::Complex(v) => v[i],
        }
    }

    /// `f(n)` as an integer, for tables with values in `{-1, 0, 1}`.
    pub fn sign(&self, n: u64) -> Option<i8> {
        match &self.values {
            Values::Signs(v) => Some(v[n as usize - 1]),
            Values::Complex(_) => None,
        }
    }

    /// `Σ_{n ≤ N} f(n)`.
    pub fn partial_sum(&self, n: u64) -> Result<Complex64> {
        self.check_len(n)?;
        Ok(match &self.values {
            Values::Signs(v) => Complex64::new(v[..n as usize].iter().map(|&s| i64::from(s)).sum::<i64>() as f64, 0.0),
            Values::Complex(v) => compensated_sum(n as usize, |i| Ok(v[i]))?,
        })
    }

    fn check_len(&self, n: u64) -> Result<()> {
        if n == 0 || n > self.n() {
            return Err(Error::ChecksOutOfRange(format!("{n} is outside [1, {}]", self.n())));
        }
        Ok(())
    }
}

fn small_primes(limit: u64) -> Vec<u32> {
    let limit = limit as usize;
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::new();
    for p in 2..=limit {
        if !composite[p] {
            out.push(p as u32);
            let mut j = p * p;
            while j <= limit {
                composite[j] = true;
                j += p;
            }
        }
    }
    out
}

fn sieve(n: u64, kind: MultiplicativeKind) -> Result<MultiplicativeTable> {
    if n == 0 {
        return Err(Error::PreconditionViolation("N must be at least 1".into()));
    }
    if n > u64::from(u32::MAX) {
        return Err(Error::TooLarge {
            n: n as usize,
            limit: u32::MAX as usize,
        });
    }
    let primes = small_primes(n.sqrt());
    let mobius = kind == MultiplicativeKind::Mobius;
    let segments: Vec<Vec<i8>> = (0..(n as usize).div_ceil(SEGMENT))
        .into_par_iter()
        .map(|s| {
            let lo = (s * SEGMENT) as u64 + 1;
            let hi = ((s + 1) * SEGMENT).min(n as usize) as u64 + 1;
            let mut rest: Vec<u32> = (lo..hi).map(|v| v as u32).collect();
            let mut val = vec![1i8; rest.len()];
            for &p in &primes {
                let p = u64::from(p);
                if p * p >= hi {
                    break;
                }
                let mut j = lo.div_ceil(p) * p;
                while j < hi {
                    let i = (j - lo) as usize;
                    let mut e = 0;
                    while rest[i].is_multiple_of(p as u32) {
                        rest[i] /= p as u32;
                        e += 1;
                    }
                    if mobius && e >= 2 {
                        val[i] = 0;
                    } else if e % 2 == 1 {
                        val[i] = -val[i];
                    }
                    j += p;
                }
            }
            // What remains above 1 is a single prime factor.
            for (v, &r) in val.iter_mut().zip(&rest) {
                if r > 1 {
                    *v = -*v;
                }
            }
            val
        })
        .collect();
    Ok(MultiplicativeTable {
        kind,
        values: Values::Signs(segments.concat()),
    })
}

/// `μ(1), …, μ(N)` by a segmented sieve.
pub fn mobius_sieve(n: u64) -> Result<MultiplicativeTable> {
    sieve(n, MultiplicativeKind::Mobius)
}

/// `λ(n) = (-1)^Ω(n)` for `n ≤ N`.
pub fn liouville_sieve(n: u64) -> Result<MultiplicativeTable> {
    sieve(n, MultiplicativeKind::Liouville)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationPoint {
    pub n: u64,
    /// `(1/N) Σ_{n ≤ N} f(n) G(⌊n^c⌋ mod m)`.
    pub correlation: Complex64,
    pub abs: f64,
    /// `(1/N) Σ_{n ≤ N} f(n)`.
    pub mean_f: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationSeries {
    pub checkpoints: Vec<CorrelationPoint>,
}

/// Correlation of `f` with `G(⌊n^c⌋ mod m)` at each checkpoint.
///
/// For `{-1, 0, 1}`-valued `f` the sum is regrouped by residue class,
/// `Σ_b G(b) Σ_{u_n = b} f(n)`, with exact integer inner sums, so the result
/// does not depend on how the range is split.
pub fn correlation(
    f: &MultiplicativeTable,
    g: &[Complex64],
    c: &ExponentSpec,
    m: u64,
    checkpoints: &[u64],
    policy: &PrecisionPolicy,
) -> Result<CorrelationSeries> {
    if g.len() as u64 != m {
        return Err(Error::DimensionMismatch {
            expected: m as usize,
            got: g.len(),
        });
    }
    let last = match checkpoints.last() {
        None => return Err(Error::ChecksOutOfRange("no checkpoints".into())),
        Some(&l) => l,
    };
    if checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) || last > f.n() {
        return Err(Error::ChecksOutOfRange(format!(
            "checkpoints must increase strictly within [1, {}]",
            f.n()
        )));
    }
    let residues = residue_window(1, last as usize, c, m, policy)?;
    let mut out = Vec::with_capacity(checkpoints.len());
    match &f.values {
        Values::Signs(v) => {
            let mut class = vec![0i64; m as usize];
            let mut total = 0i64;
            let mut done = 0usize;
            for &cp in checkpoints {
                for i in done..cp as usize {
                    let s = i64::from(v[i]);
                    class[residues[i] as usize] += s;
                    total += s;
                }
                done = cp as usize;
                let sum = compensated_sum(m as usize, |b| Ok(g[b] * class[b] as f64))?;
                out.push(point(cp, sum, Complex64::new(total as f64, 0.0)));
            }
        }
        Values::Complex(v) => {
            for &cp in checkpoints {
                let sum = compensated_sum(cp as usize, |i| Ok(v[i] * g[residues[i] as usize]))?;
                let mean = compensated_sum(cp as usize, |i| Ok(v[i]))?;
                out.push(point(cp, sum, mean));
            }
        }
    }
    Ok(CorrelationSeries { checkpoints: out })
}

fn point(n: u64, sum: Complex64, total_f: Complex64) -> CorrelationPoint {
    let correlation = sum / n as f64;
    CorrelationPoint {
        n,
        correlation,
        abs: correlation.norm(),
        mean_f: total_f / n as f64,
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d <= n / d {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn check_primes(p: u64, q: u64) -> Result<()> {
    for x in [p, q] {
        if !is_prime(x) {
            return Err(Error::NotPrime(x));
        }
    }
    if p == q {
        return Err(Error::EqualPrimes);
    }
    Ok(())
}

/// `S/N` for `S = Σ_{n ≤ N} e(α(⌊(pn)^c⌋ − ⌊(qn)^c⌋))`.
///
/// With `α = a/b`, only the floors mod `b` matter, so each phase is the exact
/// rational `(a(u − v) mod b)/b`.
pub fn katai_pair_sum(
    p: u64,
    q: u64,
    alpha: &BigRational,
    c: &ExponentSpec,
    n: u64,
    policy: &PrecisionPolicy,
) -> Result<ExpSumResult> {
    check_primes(p, q)?;
    if alpha.is_integer() {
        return Err(Error::IntegerAlpha);
    }
    let b = alpha
        .denom()
        .to_u64()
        .filter(|&b| b <= u64::from(u32::MAX))
        .ok_or_else(|| Error::InvalidInput(format!("denominator of {alpha} exceeds 2^32")))?;
    let a = alpha.numer().mod_floor(&BigInt::from(b)).to_u64().expect("below b");
    if p.max(q).checked_mul(n).is_none() {
        return Err(Error::PreconditionViolation("pN or qN overflows 64 bits".into()));
    }
    let value = compensated_sum(n as usize, |i| {
        let k = i as u64 + 1;
        let u = floor_mod(p * k, c, b, policy)?;
        let v = floor_mod(q * k, c, b, policy)?;
        let t = (u128::from(a) * u128::from((u + b - v) % b)) % u128::from(b);
        Ok(unit(t as f64 / b as f64))
    })?;
    Ok(ExpSumResult::new(value, n))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RationalityReport {
    pub p: u64,
    pub q: u64,
    pub c: String,
    /// `(p/q)^c`, rounded.
    pub value: f64,
    /// Closest fraction with denominator at most `q_max`.
    #[serde(serialize_with = "crate::serialize_display")]
    pub approx_num: BigInt,
    pub approx_den: u64,
    pub q_max: u64,
    /// `|(p/q)^c − approx|`, rounded.
    pub error: f64,
    /// Precision at which the approximation was certified.
    pub bits: u32,
}

/// Best rational approximation of `(p/q)^c` with denominator at most `Q`.
/// Evidence only: a small error does not make the number rational.
pub fn rationality_probe(p: u64, q: u64, c: &ExponentSpec, q_max: u64) -> Result<RationalityReport> {
    check_primes(p, q)?;
    if q_max == 0 {
        return Err(Error::PreconditionViolation("Q must be at least 1".into()));
    }
    let mut bits = 2 * (64 - q_max.leading_zeros()) + 64;
    loop {
        let (p_lo, p_hi) = power_bounds(p, c, bits);
        let (q_lo, q_hi) = power_bounds(q, c, bits);
        let lo = QuadraticNumber::rational(&p_lo / &q_hi);
        let hi = QuadraticNumber::rational(&p_hi / &q_lo);
        let a = best_approximation(&lo, q_max)?;
        // Best-approximation regions are intervals, so agreement at both
        // endpoints fixes the answer for everything between them.
        if a == best_approximation(&hi, q_max)? {
            let frac = BigRational::new(a.0.clone(), BigInt::from(a.1));
            let mid = (&p_lo / &q_hi + &p_hi / &q_lo) / BigRational::from_integer(2.into());
            let err = (&mid - &frac).abs();
            return Ok(RationalityReport {
                p,
                q,
                c: c.repr().to_string(),
                value: mid.to_f64().unwrap_or(f64::NAN),
                approx_num: a.0,
                approx_den: a.1,
                q_max,
                error: if err.is_zero() { 0.0 } else { err.to_f64().unwrap_or(f64::NAN) },
                bits,
            });
        }
        if bits >= 1 << 16 {
            return Err(Error::Eval(crate::certified_eval::EvalError::AmbiguousFloor { n: p, bits }));
        }
        bits *= 2;
    }
}
