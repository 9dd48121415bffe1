//! 128-bit fixed-point evaluation of `n^c` with a certified error radius.
//!
//! Values are `u128`/`i128` read at scale `2^-112`. Each routine returns a
//! midpoint together with a bound on its distance to the exact value, counted
//! in units of the last place (ulps). Constants come from [`super::wide`] and
//! are rounded outward once, on first use.
//!
//! `ln n` uses two table-driven multiplicative reductions followed by a short
//! `ln(1 + u)` series with `|u| < 2^-15`; `exp` uses a 64-entry table and a
//! degree-14 Taylor polynomial.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::wide;

pub(crate) const FRAC_BITS: u32 = 112;
const ONE: u128 = 1 << FRAC_BITS;
/// Table entries are built at this scale and rounded outward to `FRAC_BITS`.
const TABLE_SCALE: u32 = FRAC_BITS + 32;
/// Stage-two reduction index range `[-STAGE2_SPAN, STAGE2_SPAN]`.
const STAGE2_SPAN: i32 = 260;
/// Exp table covers `j/64` for `j <= 44`, i.e. all of `[0, ln 2)`.
const EXP_ENTRIES: usize = 45;
/// Max ulp error of any rounded table entry.
const TABLE_ERR: u128 = 2;

struct Tables {
    ln2: u128,
    /// 12-bit dyadic reciprocals `r_j ≈ 1/(1 + (j + 1/2)/256)`, scaled by 2^12.
    recip: [u128; 256],
    /// `-ln(r_j)`.
    neg_ln_recip: [u128; 256],
    /// `-ln(1 - k/2^16)` for `k` in the stage-two span.
    neg_ln_stage2: Vec<i128>,
    exp_table: [u128; EXP_ENTRIES],
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(build_tables)
}

fn round_to_fixed(iv: &wide::Interval) -> i128 {
    let coarse = iv.coarsen(FRAC_BITS);
    let width = &coarse.hi - &coarse.lo;
    assert!(width <= BigInt::from(TABLE_ERR), "table entry too wide");
    coarse.lo.to_i128().expect("table entry fits in i128")
}

fn build_tables() -> Tables {
    let ln2 = round_to_fixed(&wide::ln2(TABLE_SCALE)) as u128;

    let mut recip = [0u128; 256];
    let mut neg_ln_recip = [0u128; 256];
    for j in 0..256u128 {
        // round(4096 * 512 / (512 + 2j + 1))
        let den = 512 + 2 * j + 1;
        let r = (2 * 4096 * 512 / den).div_ceil(2);
        recip[j as usize] = r;
        let iv = wide::ln_ratio(&BigInt::from(4096), &BigInt::from(r), TABLE_SCALE);
        neg_ln_recip[j as usize] = round_to_fixed(&iv) as u128;
    }

    let neg_ln_stage2 = (-STAGE2_SPAN..=STAGE2_SPAN)
        .map(|k| {
            let iv = wide::ln_ratio(
                &BigInt::from(65536),
                &BigInt::from(65536 - k),
                TABLE_SCALE,
            );
            round_to_fixed(&iv)
        })
        .collect();

    let mut exp_table = [0u128; EXP_ENTRIES];
    for (j, slot) in exp_table.iter_mut().enumerate() {
        let x = wide::Interval::exact(BigInt::from(j) << (TABLE_SCALE - 6), TABLE_SCALE);
        *slot = round_to_fixed(&wide::exp_small(&x)) as u128;
    }

    Tables {
        ln2,
        recip,
        neg_ln_recip,
        neg_ln_stage2,
        exp_table,
    }
}

/// Full 256-bit product of two `u128`s as `(hi, lo)`.
#[inline]
fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    const MASK: u128 = u64::MAX as u128;
    let (a1, a0) = (a >> 64, a & MASK);
    let (b1, b0) = (b >> 64, b & MASK);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 & MASK) + (p10 & MASK);
    let lo = (p00 & MASK) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

/// `floor(a * b / 2^112)`, or `None` if it does not fit in a `u128`.
#[inline]
fn mul_fix(a: u128, b: u128) -> Option<u128> {
    let (hi, lo) = mul_wide(a, b);
    if hi >> FRAC_BITS != 0 {
        return None;
    }
    Some((hi << (128 - FRAC_BITS)) | (lo >> FRAC_BITS))
}

/// Signed product truncated toward zero. Both factors are below 1 in magnitude.
#[inline]
fn mul_fix_signed(a: i128, b: i128) -> i128 {
    let mag = mul_fix(a.unsigned_abs(), b.unsigned_abs()).expect("product below one") as i128;
    if (a < 0) != (b < 0) {
        -mag
    } else {
        mag
    }
}

/// `ln n` as `(mid, err)` in ulps of `2^-112`, for `n >= 1`.
fn ln(n: u64) -> (u128, u128) {
    let t = tables();
    let e = 63 - n.leading_zeros();
    let x = u128::from(n) << (FRAC_BITS - e);

    // Stage one: x * r_j lands within 2^-8 of one. x has at least 49 trailing
    // zero bits, so dropping 12 of them keeps the product exact.
    let j = ((x >> (FRAC_BITS - 8)) & 0xff) as usize;
    let z1 = (x >> 12) * t.recip[j];
    let u1 = z1 as i128 - ONE as i128;

    // Stage two: multiply by 1 - k/2^16 (still exact: z1 keeps >= 37 zero bits).
    let k = (u1 + (1i128 << (FRAC_BITS - 17))) >> (FRAC_BITS - 16);
    debug_assert!(k.abs() <= STAGE2_SPAN as i128);
    let z2 = z1 as i128 - ((z1 as i128 * k) >> 16);
    let u = z2 - ONE as i128;

    // ln(1 + u) = u - u^2/2 + ... ; |u| < 1.5 * 2^-16, eight terms leave < 2^-140.
    let mut power = u;
    let mut series = u;
    for i in 2..=8i128 {
        power = mul_fix_signed(power, u);
        let term = power / i;
        if i % 2 == 0 {
            series -= term;
        } else {
            series += term;
        }
    }

    let stage2 = t.neg_ln_stage2[(k + STAGE2_SPAN as i128) as usize];
    let total = t.ln2 as i128 * i128::from(e) + t.neg_ln_recip[j] as i128 + stage2 + series;
    debug_assert!(total >= 0);
    // ln2 contributes e * TABLE_ERR, the two tables 2 * TABLE_ERR, the series
    // at most 2 ulps per term plus one for the tail.
    let err = TABLE_ERR * u128::from(e) + 2 * TABLE_ERR + 17;
    (total as u128, err)
}

/// Enclosure `n^c ∈ [(mant - err), (mant + err)] * 2^(exp2 - 112)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct FixedPower {
    pub mant: u128,
    pub err: u128,
    pub exp2: u32,
}

impl FixedPower {
    /// Certified floor and the fractional enclosure `[lo, hi] * 2^-shift`.
    pub fn split(&self) -> Option<(u128, u128, u128, u32)> {
        if self.exp2 >= FRAC_BITS {
            return None;
        }
        let shift = FRAC_BITS - self.exp2;
        let lo = self.mant.checked_sub(self.err)?;
        let hi = self.mant + self.err;
        let floor = lo >> shift;
        if hi >> shift != floor {
            return None;
        }
        let mask = (1u128 << shift) - 1;
        Some((floor, lo & mask, hi & mask, shift))
    }
}

/// `c` as `floor(c * 2^112)` plus `ceil(c)`; `None` when `c >= 2^15`.
pub(crate) fn exponent_to_fixed(num: &BigInt, den: &BigInt) -> Option<(u128, u128)> {
    let fixed = ((num << FRAC_BITS) / den).to_u128()?;
    if fixed >> (FRAC_BITS + 15) != 0 {
        return None;
    }
    let ceil = wide::ceil_div(num, den).to_u128()?;
    Some((fixed, ceil))
}

/// Evaluates `n^c` for `n >= 2`; `None` if the result leaves the fixed range.
pub(crate) fn pow(n: u64, c_fixed: u128, c_ceil: u128) -> Option<FixedPower> {
    debug_assert!(n >= 2);
    let t = tables();
    let (ln_mid, ln_err) = ln(n);

    // c is stored to within one ulp.
    let prod = mul_fix(c_fixed, ln_mid)?;
    if prod >> (FRAC_BITS + 15) != 0 {
        return None;
    }
    let ln_ceil = (ln_mid >> FRAC_BITS) + 1;
    let prod_err = c_ceil * ln_err + ln_ceil + 2;

    // prod = q ln2 + r with r in [0, ln2); the integer quotient is exact, the
    // rounding of ln2 costs TABLE_ERR per unit of q.
    let q = prod / t.ln2;
    let r = prod - q * t.ln2;
    let r_err = prod_err + q * TABLE_ERR + 1;

    let j = (r >> (FRAC_BITS - 6)) as usize;
    let s = r & ((1u128 << (FRAC_BITS - 6)) - 1);
    // exp(s) by Horner, s < 2^-6: each step adds at most ~2 ulps, shrunk by s/i.
    let mut acc = ONE;
    for i in (1..=14u128).rev() {
        acc = ONE + mul_fix(acc, s)? / i;
    }
    let mant = mul_fix(t.exp_table[j], acc)?;
    // exp'(r) < 2 turns r_err into at most 2 r_err (plus slack), the table
    // and polynomial contribute below 16 ulps.
    let err = 2 * r_err + (r_err >> 4) + 64;
    Some(FixedPower {
        mant,
        err,
        exp2: u32::try_from(q).ok()?,
    })
}

/// Convenience for tests: `ln n` as an f64.
#[cfg(test)]
fn ln_f64(n: u64) -> f64 {
    ln(n).0 as f64 / 2f64.powi(FRAC_BITS as i32)
}

/// Checks the fast `ln` against the wide tier's enclosure.
#[cfg(test)]
fn ln_within_wide(n: u64) -> bool {
    let (mid, err) = ln(n);
    let wide_iv = {
        let log2 = wide::ln2(200);
        let b = 63 - n.leading_zeros();
        let lnx = wide::ln_ratio(
            &BigInt::from(n),
            &(BigInt::from(1) << b),
            200,
        );
        wide::Interval {
            lo: &log2.lo * b + lnx.lo,
            hi: &log2.hi * b + lnx.hi,
            scale: 200,
        }
    };
    let d = BigInt::from(1) << (200 - FRAC_BITS);
    let lo = BigInt::from(mid - err) * &d;
    let hi = BigInt::from(mid + err) * &d;
    lo <= wide_iv.lo && wide_iv.hi <= hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_multiply_matches_u128_when_small() {
        for (a, b) in [(3u128, 5u128), (u64::MAX as u128, u64::MAX as u128), (1 << 100, 1 << 20)] {
            let (hi, lo) = mul_wide(a, b);
            let full = num_bigint::BigUint::from(a) * num_bigint::BigUint::from(b);
            let got = (num_bigint::BigUint::from(hi) << 128) + num_bigint::BigUint::from(lo);
            assert_eq!(full, got);
        }
    }

    #[test]
    fn ln_is_accurate_across_magnitudes() {
        for n in [2u64, 3, 7, 1000, 65_537, 999_999_937, u64::MAX / 3, u64::MAX] {
            assert!((ln_f64(n) - (n as f64).ln()).abs() < 1e-13, "n={n}");
            assert!(ln_within_wide(n), "n={n}");
        }
    }

    #[test]
    fn ln_enclosure_holds_on_a_dense_range() {
        for n in 2..3000u64 {
            assert!(ln_within_wide(n), "n={n}");
        }
    }

    #[test]
    fn pow_splits_small_cases() {
        let (c, ceil) = exponent_to_fixed(&BigInt::from(3), &BigInt::from(2)).unwrap();
        let p = pow(3, c, ceil).unwrap();
        let (floor, _, _, _) = p.split().unwrap();
        assert_eq!(floor, 5);
        // 4^1.5 = 8: the enclosure straddles the integer.
        assert!(pow(4, c, ceil).unwrap().split().is_none());
    }
}
