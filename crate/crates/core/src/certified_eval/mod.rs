//! Certified evaluation of `n^c`, `⌊n^c⌋`, `⌊n^c⌋ mod m` and `{n^c/m}`.
//!
//! `n^c` is enclosed as `exp(c ln n)` with outward rounding. A 128-bit
//! fixed-point tier ([`fixed`]) handles the common case; when its enclosure
//! straddles an integer the evaluation escalates through the big-integer tier
//! ([`wide`]) at increasing precision, as dictated by a [`PrecisionPolicy`].
//!
//! The exponent is an exact decimal, hence rational: `c = a/b` in lowest
//! terms. Then `n^c` is an integer exactly when `n` is a perfect `b`-th
//! power, and no amount of precision can separate it from its floor. That case
//! is detected with exact integer arithmetic before reporting
//! [`EvalError::AmbiguousFloor`].

mod fixed;
pub(crate) mod wide;

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::{Integer, Roots};
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Residues are stored compactly; moduli are bounded accordingly.
pub type Residue = u32;

/// Number of indices evaluated per parallel task in [`residue_window`].
const WINDOW_CHUNK: usize = 1 << 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("invalid exponent {repr:?}: {reason}")]
    InvalidExponent { repr: String, reason: &'static str },
    #[error("invalid precision policy: {0}")]
    InvalidPolicy(&'static str),
    #[error("modulus {m} is below the minimum {min}")]
    InvalidModulus { m: u64, min: u64 },
    #[error("modulus {m} does not fit the residue type")]
    ModulusTooLarge { m: u64 },
    #[error("floor of {n}^c is still ambiguous at {bits} bits")]
    AmbiguousFloor { n: u64, bits: u32 },
    #[error("cell of {{{n}^c/{m}}} is still ambiguous at {bits} bits")]
    BoundaryAmbiguity { n: u64, m: u64, bits: u32 },
    #[error("index {n} is outside the supported range")]
    IndexOutOfRange { n: u64 },
    #[error("at index {index}: {source}")]
    AtIndex {
        index: u64,
        #[source]
        source: Box<EvalError>,
    },
}

impl EvalError {
    /// True for certification failures (as opposed to invalid input).
    pub fn is_ambiguity(&self) -> bool {
        match self {
            EvalError::AmbiguousFloor { .. } | EvalError::BoundaryAmbiguity { .. } => true,
            EvalError::AtIndex { source, .. } => source.is_ambiguity(),
            _ => false,
        }
    }
}

/// A non-integer exponent `c > 1`, held exactly.
#[derive(Clone, PartialEq, Eq)]
pub struct ExponentSpec {
    repr: String,
    num: BigInt,
    den: BigInt,
    integer_part: u64,
    fixed: Option<(u128, u128)>,
}

impl ExponentSpec {
    /// Parses an exact decimal such as `"1.5"` or `"1.7320508075688772"`.
    pub fn parse(repr: &str) -> Result<Self, EvalError> {
        let invalid = |reason| EvalError::InvalidExponent {
            repr: repr.to_string(),
            reason,
        };
        let s = repr.trim();
        let (int_digits, frac_digits) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        let all_digits = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
        if int_digits.is_empty() || !all_digits(int_digits) || !all_digits(frac_digits) {
            return Err(invalid("expected a plain decimal number"));
        }
        let digits = format!("{int_digits}{frac_digits}");
        let num: BigInt = digits.parse().map_err(|_| invalid("expected a plain decimal number"))?;
        let den = num_traits::pow(BigInt::from(10u32), frac_digits.len());
        let g = num.gcd(&den);
        let (num, den) = (num / &g, den / &g);
        if den.is_one() {
            return Err(invalid("c must not be an integer"));
        }
        if num <= den {
            return Err(invalid("c must exceed 1"));
        }
        let integer_part = (&num / &den)
            .to_u64()
            .ok_or_else(|| invalid("c is too large"))?;
        let fixed = fixed::exponent_to_fixed(&num, &den);
        Ok(ExponentSpec {
            repr: s.to_string(),
            num,
            den,
            integer_part,
            fixed,
        })
    }

    pub fn repr(&self) -> &str {
        &self.repr
    }

    /// `⌊c⌋`.
    pub fn integer_part(&self) -> u64 {
        self.integer_part
    }

    /// `{c}` as an exact fraction `(numerator, denominator)`.
    pub fn fractional_part_exact(&self) -> (BigInt, BigInt) {
        (self.num.mod_floor(&self.den), self.den.clone())
    }

    /// `{c}`, in (0, 1).
    pub fn fractional_part(&self) -> f64 {
        let (p, q) = self.fractional_part_exact();
        ratio_to_f64(p, &q)
    }

    /// `‖c‖ = min({c}, 1 - {c})`.
    pub fn distance_to_integer(&self) -> f64 {
        let (p, q) = self.fractional_part_exact();
        let other = &q - &p;
        ratio_to_f64(p.min(other), &q)
    }

    /// `L = ⌊c⌋ + 1`, the number of consecutive terms in the pair sums.
    pub fn consecutive_terms(&self) -> usize {
        self.integer_part as usize + 1
    }

    /// `c` as the reduced fraction `(a, b)`.
    pub fn as_ratio(&self) -> (&BigInt, &BigInt) {
        (&self.num, &self.den)
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(self.num.clone(), &self.den)
    }
}

fn ratio_to_f64(p: impl Into<BigInt>, q: &BigInt) -> f64 {
    let p = p.into();
    // Scale so the quotient carries ~60 significant bits before conversion.
    let shift = 64i64 + q.bits() as i64 - p.bits() as i64;
    let scaled = if shift >= 0 {
        (p << shift as u64) / q
    } else {
        p / (q << (-shift) as u64)
    };
    scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-(shift as i32))
}

impl fmt::Debug for ExponentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExponentSpec({})", self.repr)
    }
}

impl fmt::Display for ExponentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.repr)
    }
}

impl FromStr for ExponentSpec {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExponentSpec::parse(s)
    }
}

/// How far precision may escalate before a floor is declared ambiguous.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    pub initial_bits: u32,
    pub max_bits: u32,
    pub escalation_factor: u32,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy {
            initial_bits: 96,
            max_bits: 4096,
            escalation_factor: 2,
        }
    }
}

impl PrecisionPolicy {
    pub fn new(initial_bits: u32, max_bits: u32, escalation_factor: u32) -> Result<Self, EvalError> {
        let p = PrecisionPolicy {
            initial_bits,
            max_bits,
            escalation_factor,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.initial_bits < 64 {
            return Err(EvalError::InvalidPolicy("initial_bits must be at least 64"));
        }
        if self.max_bits < self.initial_bits {
            return Err(EvalError::InvalidPolicy("max_bits must be at least initial_bits"));
        }
        if self.escalation_factor < 2 {
            return Err(EvalError::InvalidPolicy("escalation_factor must be at least 2"));
        }
        Ok(())
    }

    /// The sequence of working precisions tried, ending at `max_bits`.
    pub fn levels(&self) -> impl Iterator<Item = u32> + '_ {
        let mut next = Some(self.initial_bits);
        std::iter::from_fn(move || {
            let bits = next?;
            next = if bits >= self.max_bits {
                None
            } else {
                Some(bits.saturating_mul(self.escalation_factor).min(self.max_bits))
            };
            Some(bits)
        })
    }
}

/// An exact binary fraction `mantissa * 2^exponent`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dyadic {
    pub mantissa: BigInt,
    pub exponent: i64,
}

impl Dyadic {
    pub fn integer(v: BigInt) -> Self {
        Dyadic {
            mantissa: v,
            exponent: 0,
        }
    }

    pub fn floor(&self) -> BigInt {
        wide::shift_floor(&self.mantissa, self.exponent)
    }

    /// Nearest-ish f64 (correct to ~60 bits before the final rounding).
    pub fn to_f64(&self) -> f64 {
        let bits = self.mantissa.bits() as i64;
        let drop = (bits - 64).max(0);
        let m = &self.mantissa >> drop as u64;
        let e = self.exponent + drop;
        let v = m.to_f64().unwrap_or(0.0);
        v * 2f64.powi(e.clamp(-2000, 2000) as i32)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let e = self.exponent.min(other.exponent);
        let a = &self.mantissa << (self.exponent - e) as u64;
        let b = &other.mantissa << (other.exponent - e) as u64;
        a.cmp(&b)
    }
}

/// A certified enclosure `[lo, hi]` of `n^c` with unambiguous integer part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertifiedValue {
    pub lo: Dyadic,
    pub hi: Dyadic,
    pub floor_value: BigUint,
    pub bits_used: u32,
}

impl CertifiedValue {
    pub fn width(&self) -> Dyadic {
        let e = self.lo.exponent.min(self.hi.exponent);
        let a = &self.lo.mantissa << (self.lo.exponent - e) as u64;
        let b = &self.hi.mantissa << (self.hi.exponent - e) as u64;
        Dyadic {
            mantissa: b - a,
            exponent: e,
        }
    }
}

/// Integer part of `n^c`, kept small when possible.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Floor {
    Small(u128),
    Big(BigUint),
}

impl Floor {
    fn rem(&self, m: u64) -> u64 {
        match self {
            Floor::Small(v) => (v % u128::from(m)) as u64,
            Floor::Big(v) => (v % m).to_u64().expect("remainder below m"),
        }
    }

    fn to_biguint(&self) -> BigUint {
        match self {
            Floor::Small(v) => BigUint::from(*v),
            Floor::Big(v) => v.clone(),
        }
    }
}

/// A successful evaluation: the certified floor plus the fractional enclosure.
#[derive(Clone, Debug)]
enum Evaluation {
    Fixed {
        power: fixed::FixedPower,
        floor: u128,
        frac_lo: u128,
        frac_hi: u128,
        shift: u32,
        bits: u32,
    },
    Wide {
        power: wide::WidePower,
        floor: BigUint,
        bits: u32,
    },
    /// `n^c` is exactly an integer.
    Exact { value: BigUint, bits: u32 },
}

impl Evaluation {
    fn floor(&self) -> Floor {
        match self {
            Evaluation::Fixed { floor, .. } => Floor::Small(*floor),
            Evaluation::Wide { floor, .. } => Floor::Big(floor.clone()),
            Evaluation::Exact { value, .. } => Floor::Big(value.clone()),
        }
    }

    fn bits(&self) -> u32 {
        match self {
            Evaluation::Fixed { bits, .. }
            | Evaluation::Wide { bits, .. }
            | Evaluation::Exact { bits, .. } => *bits,
        }
    }

    /// Bounds on `{n^c}` as exact dyadics in `[0, 1)`.
    fn frac_bounds(&self) -> (Dyadic, Dyadic) {
        match self {
            Evaluation::Fixed {
                frac_lo,
                frac_hi,
                shift,
                ..
            } => (
                Dyadic {
                    mantissa: BigInt::from(*frac_lo),
                    exponent: -i64::from(*shift),
                },
                Dyadic {
                    mantissa: BigInt::from(*frac_hi),
                    exponent: -i64::from(*shift),
                },
            ),
            Evaluation::Wide { power, floor, .. } => {
                let e = power.exp2 - i64::from(power.mant.scale);
                let fl = BigInt::from_biguint(Sign::Plus, floor.clone());
                let sub = |m: &BigInt| {
                    if e >= 0 {
                        Dyadic::integer((m << e as u64) - &fl)
                    } else {
                        Dyadic {
                            mantissa: m - (&fl << (-e) as u64),
                            exponent: e,
                        }
                    }
                };
                (sub(&power.mant.lo), sub(&power.mant.hi))
            }
            Evaluation::Exact { .. } => (Dyadic::integer(BigInt::zero()), Dyadic::integer(BigInt::zero())),
        }
    }

    /// Midpoint of the fractional enclosure, as f64.
    fn frac_f64(&self) -> f64 {
        match self {
            Evaluation::Fixed {
                frac_lo,
                frac_hi,
                shift,
                ..
            } => {
                let mid = frac_lo / 2 + frac_hi / 2;
                mid as f64 * 2f64.powi(-(*shift as i32))
            }
            Evaluation::Exact { .. } => 0.0,
            Evaluation::Wide { .. } => {
                let (lo, hi) = self.frac_bounds();
                0.5 * (lo.to_f64() + hi.to_f64())
            }
        }
    }

    fn enclosure(&self) -> (Dyadic, Dyadic) {
        match self {
            Evaluation::Fixed { power, .. } => {
                let e = i64::from(power.exp2) - i64::from(fixed::FRAC_BITS);
                (
                    Dyadic {
                        mantissa: BigInt::from(power.mant - power.err),
                        exponent: e,
                    },
                    Dyadic {
                        mantissa: BigInt::from(power.mant + power.err),
                        exponent: e,
                    },
                )
            }
            Evaluation::Wide { power, .. } => {
                let e = power.exp2 - i64::from(power.mant.scale);
                (
                    Dyadic {
                        mantissa: power.mant.lo.clone(),
                        exponent: e,
                    },
                    Dyadic {
                        mantissa: power.mant.hi.clone(),
                        exponent: e,
                    },
                )
            }
            Evaluation::Exact { value, .. } => {
                let v = Dyadic::integer(BigInt::from_biguint(Sign::Plus, value.clone()));
                (v.clone(), v)
            }
        }
    }
}

/// `n^c` exactly, if it is an integer (i.e. `n` is a perfect `b`-th power).
fn exact_power(n: u64, c: &ExponentSpec) -> Option<BigUint> {
    let b = c.den.to_u32()?;
    // For n >= 2 a b-th power needs b <= log2(n) < 64.
    if b >= 64 {
        return None;
    }
    let root = n.nth_root(b);
    if root.checked_pow(b)? != n {
        return None;
    }
    let a = c.num.to_u32()?;
    Some(num_traits::pow(BigUint::from(root), a as usize))
}

fn evaluate(n: u64, c: &ExponentSpec, policy: &PrecisionPolicy) -> Result<Evaluation, EvalError> {
    policy.validate()?;
    if n <= 1 {
        return Ok(Evaluation::Exact {
            value: BigUint::from(n),
            bits: policy.initial_bits,
        });
    }
    let mut exact_checked = false;
    let mut last_bits = policy.initial_bits;
    for bits in policy.levels() {
        last_bits = bits;
        if bits <= fixed::FRAC_BITS {
            if let Some((c_fixed, c_ceil)) = c.fixed {
                if let Some(power) = fixed::pow(n, c_fixed, c_ceil) {
                    if let Some((floor, frac_lo, frac_hi, shift)) = power.split() {
                        return Ok(Evaluation::Fixed {
                            power,
                            floor,
                            frac_lo,
                            frac_hi,
                            shift,
                            bits,
                        });
                    }
                }
            }
        }
        let try_wide = bits > fixed::FRAC_BITS || c.fixed.is_none();
        if try_wide {
            let power = wide::pow(n, &c.num, &c.den, bits);
            if let Some(floor) = power.floor() {
                let floor = floor.to_biguint().expect("n^c is positive");
                return Ok(Evaluation::Wide { power, floor, bits });
            }
        }
        if !exact_checked {
            exact_checked = true;
            if let Some(value) = exact_power(n, c) {
                return Ok(Evaluation::Exact { value, bits });
            }
        }
    }
    Err(EvalError::AmbiguousFloor { n, bits: last_bits })
}

/// Certified enclosure of `n^c` whose integer part is unambiguous.
pub fn ps_floor(n: u64, c: &ExponentSpec, policy: &PrecisionPolicy) -> Result<CertifiedValue, EvalError> {
    let ev = evaluate(n, c, policy)?;
    let (lo, hi) = ev.enclosure();
    Ok(CertifiedValue {
        lo,
        hi,
        floor_value: ev.floor().to_biguint(),
        bits_used: ev.bits(),
    })
}

fn check_modulus(m: u64, min: u64) -> Result<(), EvalError> {
    if m < min {
        return Err(EvalError::InvalidModulus { m, min });
    }
    Ok(())
}

/// `⌊n^c⌋ mod m` for `m >= 2`.
pub fn ps_residue(n: u64, c: &ExponentSpec, m: u64, policy: &PrecisionPolicy) -> Result<u64, EvalError> {
    check_modulus(m, 2)?;
    Ok(evaluate(n, c, policy)?.floor().rem(m))
}

/// `⌊n^c⌋ mod m` for any `m >= 1` (used internally, e.g. for pair sums).
pub(crate) fn floor_mod(n: u64, c: &ExponentSpec, m: u64, policy: &PrecisionPolicy) -> Result<u64, EvalError> {
    check_modulus(m, 1)?;
    Ok(evaluate(n, c, policy)?.floor().rem(m))
}

/// `{n^c/m}` located in its certified cell `[b/m, (b+1)/m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusPoint {
    /// `b = ⌊n^c⌋ mod m`.
    pub cell: u64,
    pub modulus: u64,
    /// `{n^c}` lies in `[frac_lo, frac_hi] ⊂ [0, 1)`.
    pub frac_lo: Dyadic,
    pub frac_hi: Dyadic,
    frac_mid: f64,
}

impl TorusPoint {
    /// `{n^c/m} = (b + {n^c})/m` as an f64 that stays inside the cell.
    pub fn value(&self) -> f64 {
        let m = self.modulus as f64;
        let b = self.cell as f64;
        let mut v = (b + self.frac_mid) / m;
        let top = (b + 1.0) / m;
        while v >= top {
            v = v.next_down();
        }
        while v * m < b && v < top {
            v = v.next_up();
        }
        v.max(0.0)
    }
}

/// `{n^c/m}` for `n >= 1`, `m >= 1`, with the cell certified.
pub fn torus_point(n: u64, c: &ExponentSpec, m: u64, policy: &PrecisionPolicy) -> Result<TorusPoint, EvalError> {
    check_modulus(m, 1)?;
    if n == 0 {
        return Err(EvalError::IndexOutOfRange { n });
    }
    let ev = evaluate(n, c, policy).map_err(|e| match e {
        EvalError::AmbiguousFloor { n, bits } => EvalError::BoundaryAmbiguity { n, m, bits },
        other => other,
    })?;
    let (frac_lo, frac_hi) = ev.frac_bounds();
    Ok(TorusPoint {
        cell: ev.floor().rem(m),
        modulus: m,
        frac_lo,
        frac_hi,
        frac_mid: ev.frac_f64(),
    })
}

/// Residues `⌊n^c⌋ mod m` for `n = start, …, start + count - 1`.
///
/// Evaluated in fixed-size chunks in parallel; the output is identical to the
/// sequential definition. The first failing index is reported.
pub fn residue_window(
    start: u64,
    count: usize,
    c: &ExponentSpec,
    m: u64,
    policy: &PrecisionPolicy,
) -> Result<Vec<Residue>, EvalError> {
    check_modulus(m, 2)?;
    if m > u64::from(Residue::MAX) + 1 {
        return Err(EvalError::ModulusTooLarge { m });
    }
    policy.validate()?;
    if count > 0 && start.checked_add(count as u64 - 1).is_none() {
        return Err(EvalError::IndexOutOfRange { n: u64::MAX });
    }
    let mut out = vec![0 as Residue; count];
    let failures: Vec<EvalError> = out
        .par_chunks_mut(WINDOW_CHUNK)
        .enumerate()
        .filter_map(|(chunk, slots)| {
            let base = start + (chunk * WINDOW_CHUNK) as u64;
            for (i, slot) in slots.iter_mut().enumerate() {
                let n = base + i as u64;
                match floor_mod(n, c, m, policy) {
                    Ok(r) => *slot = r as Residue,
                    Err(e) => {
                        return Some(EvalError::AtIndex {
                            index: n,
                            source: Box::new(e),
                        })
                    }
                }
            }
            None
        })
        .collect();
    // Chunks are collected in order, so this is the smallest failing index.
    if let Some(e) = failures.into_iter().next() {
        return Err(e);
    }
    Ok(out)
}

/// Rational enclosure `[lo, hi]` of `n^c` for `n ≥ 2`, of relative width
/// about `2^-bits`.
pub(crate) fn power_bounds(n: u64, c: &ExponentSpec, bits: u32) -> (num_rational::BigRational, num_rational::BigRational) {
    use num_rational::BigRational;
    let (num, den) = c.as_ratio();
    let w = wide::pow(n, num, den, bits);
    let shift = w.exp2 - i64::from(w.mant.scale);
    let scale = |v: &BigInt| {
        if shift >= 0 {
            BigRational::from_integer(v << shift as u64)
        } else {
            BigRational::new(v.clone(), BigInt::one() << (-shift) as u64)
        }
    };
    (scale(&w.mant.lo), scale(&w.mant.hi))
}
