//! Arbitrary-precision fixed-point enclosures.
//!
//! Every quantity is a pair of big integers `[lo, hi]` read at a binary scale
//! `2^-scale`. Lower endpoints are always rounded toward minus infinity and
//! upper endpoints toward plus infinity, so each result encloses the exact
//! real value. Only what `n^c` needs is provided: `ln` of a positive rational
//! close to one and `exp` of a small nonnegative argument.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// The closed interval `[lo, hi] * 2^-scale`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Interval {
    pub lo: BigInt,
    pub hi: BigInt,
    pub scale: u32,
}

impl Interval {
    pub fn exact(value: BigInt, scale: u32) -> Self {
        Interval {
            lo: value.clone(),
            hi: value,
            scale,
        }
    }

    /// Outward rescale to a coarser scale.
    pub fn coarsen(&self, scale: u32) -> Interval {
        assert!(scale <= self.scale);
        let d = BigInt::one() << (self.scale - scale);
        Interval {
            lo: self.lo.div_floor(&d),
            hi: ceil_div(&self.hi, &d),
            scale,
        }
    }
}

pub(crate) fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

/// Encloses `ln(num/den)` for `1/2 <= num/den <= 2` via
/// `ln x = 2 atanh((x - 1)/(x + 1))`.
pub(crate) fn ln_ratio(num: &BigInt, den: &BigInt, scale: u32) -> Interval {
    assert!(num.is_positive() && den.is_positive());
    let diff = num - den;
    let sum = num + den;
    let negative = diff.is_negative();
    let p = diff.abs();
    // |p/sum| <= 1/3 keeps the tail bound below valid.
    assert!(&p * 3 <= sum, "ln_ratio argument too far from 1");
    // Guard bits absorb the per-term rounding of the series.
    let work = scale + 16;
    let (lo, hi) = atanh_series(&p, &sum, work);
    let (lo, hi): (BigInt, BigInt) = (lo << 1u32, hi << 1u32);
    let iv = if negative {
        Interval {
            lo: -hi,
            hi: -lo,
            scale: work,
        }
    } else {
        Interval {
            lo,
            hi,
            scale: work,
        }
    };
    iv.coarsen(scale)
}

/// Bounds for `atanh(p/q) * 2^scale` with `0 <= p/q <= 1/3`.
fn atanh_series(p: &BigInt, q: &BigInt, scale: u32) -> (BigInt, BigInt) {
    let one = BigInt::one() << scale;
    let p2 = p * p;
    let q2 = q * q;
    let mut t_lo = (&one * p).div_floor(q);
    let mut t_hi = ceil_div(&(&one * p), q);
    let mut s_lo = BigInt::zero();
    let mut s_hi = BigInt::zero();
    let mut odd = BigInt::one();
    loop {
        s_lo += t_lo.div_floor(&odd);
        s_hi += ceil_div(&t_hi, &odd);
        // Remaining terms sum to less than t * v^2 / (1 - v^2) < 1 ulp.
        if t_hi <= BigInt::one() {
            break;
        }
        t_lo = (&t_lo * &p2).div_floor(&q2);
        t_hi = ceil_div(&(&t_hi * &p2), &q2);
        odd += 2;
    }
    (s_lo, s_hi + 2)
}

/// Encloses `exp(x)` for `x` in `[0, 2)`.
pub(crate) fn exp_small(x: &Interval) -> Interval {
    let scale = x.scale;
    assert!(!x.lo.is_negative(), "exp_small needs a nonnegative argument");
    assert!(x.hi < (BigInt::one() << (scale + 1)));
    // Halve the argument `halvings` times, sum the Taylor series, square back.
    let halvings = 4 + (f64::from(scale).sqrt() as u32) / 2;
    let work = scale + halvings + 16;
    let shift = work - scale - halvings;
    let y_lo = &x.lo << shift;
    let y_hi = &x.hi << shift;
    let one = BigInt::one() << work;

    let mut lo = taylor_exp(&y_lo, &one, false);
    let mut hi = taylor_exp(&y_hi, &one, true);
    for _ in 0..halvings {
        lo = (&lo * &lo) >> work;
        hi = ceil_div(&(&hi * &hi), &one);
    }
    Interval {
        lo,
        hi,
        scale: work,
    }
    .coarsen(scale)
}

fn taylor_exp(y: &BigInt, one: &BigInt, upper: bool) -> BigInt {
    let mut term = one.clone();
    let mut sum = one.clone();
    let mut i = 1u32;
    loop {
        let num = &term * y;
        let den = one * i;
        term = if upper {
            ceil_div(&num, &den)
        } else {
            num.div_floor(&den)
        };
        sum += &term;
        if upper {
            // y < 1/8, so the tail is below the current term.
            if term <= BigInt::one() && i >= 2 {
                return sum + 2;
            }
        } else if term.is_zero() {
            return sum;
        }
        i += 1;
    }
}

/// `ln 2` at the given scale.
pub(crate) fn ln2(scale: u32) -> Interval {
    ln_ratio(&BigInt::from(2), &BigInt::one(), scale)
}

/// Enclosure of `n^(num/den)` as `[lo, hi] * 2^(exp2 - scale)`.
#[derive(Clone, Debug)]
pub(crate) struct WidePower {
    pub mant: Interval,
    pub exp2: i64,
}

impl WidePower {
    /// The certified integer part, if both endpoints agree on it.
    pub fn floor(&self) -> Option<BigInt> {
        let lo = shift_floor(&self.mant.lo, self.exp2 - i64::from(self.mant.scale));
        let hi = shift_floor(&self.mant.hi, self.exp2 - i64::from(self.mant.scale));
        (lo == hi).then_some(lo)
    }
}

/// `floor(v * 2^shift)`.
pub(crate) fn shift_floor(v: &BigInt, shift: i64) -> BigInt {
    if shift >= 0 {
        v << shift as u64
    } else {
        v.div_floor(&(BigInt::one() << (-shift) as u64))
    }
}

/// Encloses `n^(num/den)` with roughly `bits` bits of relative accuracy.
pub(crate) fn pow(n: u64, num: &BigInt, den: &BigInt, bits: u32) -> WidePower {
    assert!(n >= 2);
    let scale = bits + 8;
    let log2 = ln2(scale);
    // n = 2^e * x with x in [3/4, 3/2).
    let b = 63 - n.leading_zeros();
    let e = if 2 * u128::from(n) >= 3u128 << b { b + 1 } else { b };
    let lnx = ln_ratio(&BigInt::from(n), &(BigInt::one() << e), scale);
    let ln_lo = &log2.lo * e + &lnx.lo;
    let ln_hi = &log2.hi * e + &lnx.hi;

    let t_lo = (ln_lo * num).div_floor(den);
    let t_hi = ceil_div(&(ln_hi * num), den);
    let k = if t_lo.is_negative() {
        BigInt::zero()
    } else {
        t_lo.div_floor(&log2.hi)
    };
    let r_lo = &t_lo - &k * &log2.hi;
    let r_hi = &t_hi - &k * &log2.lo;
    let r_lo = if r_lo.is_negative() { BigInt::zero() } else { r_lo };
    let mant = exp_small(&Interval {
        lo: r_lo,
        hi: r_hi,
        scale,
    });
    let exp2 = i64::try_from(&k).expect("exponent fits in i64");
    WidePower { mant, exp2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn to_f64(v: &BigInt, scale: u32) -> f64 {
        v.to_f64().unwrap() / 2f64.powi(scale as i32)
    }

    #[test]
    fn ln2_encloses_reference() {
        let iv = ln2(200);
        assert!(to_f64(&iv.lo, 200) <= std::f64::consts::LN_2 + 1e-15);
        assert!(to_f64(&iv.hi, 200) >= std::f64::consts::LN_2 - 1e-15);
        assert!(&iv.hi - &iv.lo <= BigInt::from(8));
    }

    #[test]
    fn ln_of_ratio_below_one_is_negative() {
        let iv = ln_ratio(&BigInt::from(3), &BigInt::from(4), 128);
        let want = (0.75f64).ln();
        assert!((to_f64(&iv.lo, 128) - want).abs() < 1e-15);
        assert!(iv.lo <= iv.hi);
        assert!(iv.hi.is_negative());
    }

    #[test]
    fn exp_encloses_reference() {
        for j in 0..64 {
            let x = Interval::exact(BigInt::from(j) << 122, 128);
            let iv = exp_small(&x);
            let want = (j as f64 / 64.0).exp();
            assert!((to_f64(&iv.lo, 128) - want).abs() < 1e-14, "j={j}");
            assert!(&iv.hi - &iv.lo <= BigInt::from(16), "j={j}");
        }
    }

    #[test]
    fn pow_of_perfect_square_straddles_the_integer() {
        // 4^(3/2) = 8 exactly, so no finite precision separates the floor.
        let w = pow(4, &BigInt::from(3), &BigInt::from(2), 128);
        assert!(w.floor().is_none());
        let w = pow(3, &BigInt::from(3), &BigInt::from(2), 128);
        assert_eq!(w.floor(), Some(BigInt::from(5)));
    }
}
