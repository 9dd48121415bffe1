//! Exact numbers `p + q√d` with rational `p, q` and squarefree `d`.
//!
//! Enough arithmetic to build Beatty slopes from expressions such as
//! `(sqrt(5)-1)/2` and to decide `⌊x⌋` and comparisons exactly.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// `p + q√d`; `d = 1` (with `q = 0`) for rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticNumber {
    p: BigRational,
    q: BigRational,
    d: u64,
}

fn squarefree_split(n: u64) -> (u64, u64) {
    // n = s^2 * r with r squarefree.
    let (mut s, mut r, mut x) = (1u64, 1u64, n);
    let mut f = 2u64;
    while f * f <= x {
        let mut e = 0;
        while x % f == 0 {
            x /= f;
            e += 1;
        }
        s *= f.pow(e / 2);
        if e % 2 == 1 {
            r *= f;
        }
        f += 1;
    }
    (s, r * x)
}

impl QuadraticNumber {
    pub fn rational(p: BigRational) -> Self {
        QuadraticNumber {
            p,
            q: BigRational::zero(),
            d: 1,
        }
    }

    pub fn integer(v: i64) -> Self {
        Self::rational(BigRational::from_integer(BigInt::from(v)))
    }

    /// `√n` for `n ≥ 0`.
    pub fn sqrt(n: u64) -> Self {
        let (s, r) = squarefree_split(n);
        let s = BigRational::from_integer(BigInt::from(s));
        if r == 1 || n == 0 {
            let v = if n == 0 { BigRational::zero() } else { s };
            return Self::rational(v);
        }
        QuadraticNumber {
            p: BigRational::zero(),
            q: s,
            d: r,
        }
    }

    /// `p + q√d` from parts; `d` is reduced to its squarefree kernel.
    pub fn new(p: BigRational, q: BigRational, d: u64) -> Self {
        Self::rational(p).add(&Self::sqrt(d).mul(&Self::rational(q)).expect("rational factor"))
            .expect("same field")
    }

    pub fn is_rational(&self) -> bool {
        self.q.is_zero()
    }

    pub fn parts(&self) -> (&BigRational, &BigRational, u64) {
        (&self.p, &self.q, self.d)
    }

    fn normalize(mut self) -> Self {
        if self.q.is_zero() {
            self.d = 1;
        }
        self
    }

    fn field(&self, other: &Self) -> Result<u64> {
        match (self.is_rational(), other.is_rational()) {
            (true, _) => Ok(other.d),
            (_, true) => Ok(self.d),
            _ if self.d == other.d => Ok(self.d),
            _ => Err(Error::InvalidInput(format!(
                "cannot mix sqrt({}) and sqrt({})",
                self.d, other.d
            ))),
        }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        let d = self.field(o)?;
        Ok(QuadraticNumber {
            p: &self.p + &o.p,
            q: &self.q + &o.q,
            d,
        }
        .normalize())
    }

    pub fn neg(&self) -> Self {
        QuadraticNumber {
            p: -&self.p,
            q: -&self.q,
            d: self.d,
        }
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        let d = self.field(o)?;
        let dr = BigRational::from_integer(BigInt::from(d));
        Ok(QuadraticNumber {
            p: &self.p * &o.p + &self.q * &o.q * dr,
            q: &self.p * &o.q + &self.q * &o.p,
            d,
        }
        .normalize())
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        // 1/(a + b√d) = (a − b√d)/(a² − b²d), nonzero since √d is irrational.
        let dr = BigRational::from_integer(BigInt::from(o.d));
        let norm = &o.p * &o.p - &o.q * &o.q * dr;
        if norm.is_zero() {
            return Err(Error::InvalidInput("division by zero".into()));
        }
        let inv = QuadraticNumber {
            p: &o.p / &norm,
            q: -&o.q / &norm,
            d: o.d,
        };
        self.mul(&inv.normalize())
    }

    /// Common-denominator form `(a + b√d) / c` with `c > 0`.
    pub fn integer_form(&self) -> (BigInt, BigInt, BigInt) {
        let c = self.p.denom().lcm(self.q.denom());
        let a = self.p.numer() * (&c / self.p.denom());
        let b = self.q.numer() * (&c / self.q.denom());
        (a, b, c)
    }

    pub fn signum(&self) -> Ordering {
        let (a, b, _) = self.integer_form();
        sign_of(&a, &b, self.d)
    }

    pub fn cmp_exact(&self, o: &Self) -> Result<Ordering> {
        Ok(self.sub(o)?.signum())
    }

    pub fn floor(&self) -> BigInt {
        let (a, b, c) = self.integer_form();
        (a + floor_sqrt_mul(&b, self.d)).div_floor(&c)
    }

    pub fn to_f64(&self) -> f64 {
        let p = self.p.to_f64().unwrap_or(f64::NAN);
        let q = self.q.to_f64().unwrap_or(f64::NAN);
        p + q * (self.d as f64).sqrt()
    }
}

/// `⌊b√d⌋`.
pub(crate) fn floor_sqrt_mul(b: &BigInt, d: u64) -> BigInt {
    let sq = b * b * BigInt::from(d);
    let r = sq.sqrt();
    if !b.is_negative() {
        r
    } else if &r * &r == sq {
        -r
    } else {
        -r - 1
    }
}

/// Sign of `u + v√d`.
pub(crate) fn sign_of(u: &BigInt, v: &BigInt, d: u64) -> Ordering {
    let su = u.sign();
    let sv = v.sign();
    use num_bigint::Sign::*;
    match (su, sv) {
        (NoSign, NoSign) => Ordering::Equal,
        (Plus, Plus) | (Plus, NoSign) | (NoSign, Plus) => Ordering::Greater,
        (Minus, Minus) | (Minus, NoSign) | (NoSign, Minus) => Ordering::Less,
        (Plus, Minus) => (u * u).cmp(&(v * v * BigInt::from(d))),
        (Minus, Plus) => (v * v * BigInt::from(d)).cmp(&(u * u)),
    }
}

impl fmt::Display for QuadraticNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_rational() {
            write!(f, "{}", self.p)
        } else {
            write!(f, "{} + {}*sqrt({})", self.p, self.q, self.d)
        }
    }
}

/// Parses `+ - * /`, parentheses, decimals and `sqrt(<integer>)`.
impl FromStr for QuadraticNumber {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        let v = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(v)
    }
}

/// An exact decimal such as `0.25` or `-3`.
pub fn parse_decimal(s: &str) -> Result<BigRational> {
    let v: QuadraticNumber = s.parse()?;
    let bad = || Error::InvalidInput(format!("expected a decimal number, got {s:?}"));
    if !v.is_rational() || s.contains("sqrt") || s.contains('/') || s.contains('*') {
        return Err(bad());
    }
    Ok(v.p)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, what: &str) -> Error {
        Error::InvalidInput(format!(
            "{what} at offset {} in {:?}",
            self.pos,
            String::from_utf8_lossy(self.src)
        ))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<QuadraticNumber> {
        let mut v = self.term()?;
        loop {
            if self.eat(b'+') {
                v = v.add(&self.term()?)?;
            } else if self.eat(b'-') {
                v = v.sub(&self.term()?)?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<QuadraticNumber> {
        let mut v = self.unary()?;
        loop {
            if self.eat(b'*') {
                v = v.mul(&self.unary()?)?;
            } else if self.eat(b'/') {
                v = v.div(&self.unary()?)?;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<QuadraticNumber> {
        if self.eat(b'-') {
            return Ok(self.unary()?.neg());
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<QuadraticNumber> {
        self.skip_ws();
        if self.eat(b'(') {
            let v = self.expr()?;
            if !self.eat(b')') {
                return Err(self.error("expected ')'"));
            }
            return Ok(v);
        }
        if self.src[self.pos..].starts_with(b"sqrt") {
            self.pos += 4;
            if !self.eat(b'(') {
                return Err(self.error("expected '(' after sqrt"));
            }
            self.skip_ws();
            let n = self.number()?;
            if !n.is_integer() || n.is_negative() {
                return Err(self.error("sqrt takes a nonnegative integer"));
            }
            if !self.eat(b')') {
                return Err(self.error("expected ')'"));
            }
            let n = n.to_integer().to_u64().ok_or_else(|| self.error("sqrt argument too large"))?;
            return Ok(QuadraticNumber::sqrt(n));
        }
        Ok(QuadraticNumber::rational(self.number()?))
    }

    fn number(&mut self) -> Result<BigRational> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let (int, frac) = text.split_once('.').unwrap_or((text, ""));
        if int.is_empty() && frac.is_empty() || frac.contains('.') {
            return Err(self.error("expected a number"));
        }
        let digits: BigInt = format!("0{int}{frac}").parse().map_err(|_| self.error("bad number"))?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        Ok(BigRational::new(digits, den))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> QuadraticNumber {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_evaluate() {
        let phi = q("(sqrt(5)-1)/2");
        assert!((phi.to_f64() - 0.6180339887498949).abs() < 1e-15);
        assert!(!phi.is_rational());
        assert_eq!(q("sqrt(8)"), q("2*sqrt(2)"));
        assert!(q("sqrt(16)").is_rational());
        assert_eq!(q("1/(sqrt(2)-1)"), q("sqrt(2)+1"));
        assert_eq!(q(" -0.25 "), QuadraticNumber::rational(BigRational::new(BigInt::from(-1), BigInt::from(4))));
        assert!("sqrt(2)+sqrt(3)".parse::<QuadraticNumber>().is_err());
        assert!("1/0".parse::<QuadraticNumber>().is_err());
        assert!("2 3".parse::<QuadraticNumber>().is_err());
        assert!(parse_decimal("0.1").is_ok());
        assert!(parse_decimal("sqrt(2)").is_err());
    }

    #[test]
    fn exact_floor_and_sign() {
        assert_eq!(q("sqrt(2)").floor(), BigInt::from(1));
        assert_eq!(q("-sqrt(2)").floor(), BigInt::from(-2));
        assert_eq!(q("1000*sqrt(2)").floor(), BigInt::from(1414));
        assert_eq!(q("7/2").floor(), BigInt::from(3));
        assert_eq!(q("-7/2").floor(), BigInt::from(-4));
        assert_eq!(q("sqrt(2) - 1.41421356").signum(), Ordering::Greater);
        assert_eq!(q("sqrt(2) - 1.41421357").signum(), Ordering::Less);
        assert_eq!(q("(sqrt(5)-1)/2").cmp_exact(&q("0.618")).unwrap(), Ordering::Greater);
    }

    #[test]
    fn floor_matches_f64_for_moderate_values() {
        let a = q("(sqrt(5)-1)/2");
        for n in 0..2000i64 {
            let x = a.mul(&QuadraticNumber::integer(n)).unwrap().add(&q("0.3")).unwrap();
            assert_eq!(x.floor(), BigInt::from((n as f64 * 0.6180339887498949 + 0.3).floor() as i64), "n={n}");
        }
    }
}
