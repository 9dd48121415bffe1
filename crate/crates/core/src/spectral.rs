//! Exponential sums, discrepancy of finite point sets, and rational
//! approximation by continued fractions.
//!
//! Sums are reproducible bit for bit: phases are reduced mod 1 with error-free
//! products, terms are accumulated with Neumaier compensation inside fixed
//! 4096-term chunks, and the chunk partials are combined left to right.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::certified_eval::{torus_point, ExponentSpec, PrecisionPolicy};
use crate::error::{Error, Result};
use crate::subword_complexity::QuadraticNumber;

const SUM_CHUNK: usize = 4096;

/// Points above this count are refused by [`discrepancy_md_brute`].
pub const BRUTE_FORCE_LIMIT: usize = 2000;

#[derive(Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn absorb(&mut self, other: Neumaier) {
        self.add(other.sum);
        self.add(other.comp);
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Clone, Copy, Default)]
struct ComplexAcc {
    re: Neumaier,
    im: Neumaier,
}

impl ComplexAcc {
    fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }
}

/// `Σ term(i)` for `i < count`, independent of the thread count. The first
/// failing index (in index order) determines the error.
pub(crate) fn compensated_sum<F>(count: usize, term: F) -> Result<Complex64>
where
    F: Fn(usize) -> Result<Complex64> + Sync,
{
    let partials: Vec<Result<ComplexAcc>> = (0..count.div_ceil(SUM_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = ComplexAcc::default();
            for i in c * SUM_CHUNK..((c + 1) * SUM_CHUNK).min(count) {
                acc.add(term(i)?);
            }
            Ok(acc)
        })
        .collect();
    let mut total = ComplexAcc::default();
    for p in partials {
        let p = p?;
        total.re.absorb(p.re);
        total.im.absorb(p.im);
    }
    Ok(Complex64::new(total.re.value(), total.im.value()))
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

/// `α·k mod 1`, reduced to `[-1/2, 1/2]`, with absolute error a few units of
/// `2^-53` for any `k`.
///
/// `k` is split into 26-bit digits; each digit times the (exact) fractional
/// part of `α·2^(26i)` is an exact two-term product.
pub fn frac_mul(alpha: f64, k: i128) -> f64 {
    let neg = k < 0;
    let mut k = k.unsigned_abs();
    let mut a = frac(alpha);
    let mut acc = 0.0f64;
    while k != 0 {
        let d = (k & 0x3ff_ffff) as f64;
        let p = d * a;
        let e = d.mul_add(a, -p);
        acc += (p - p.round()) + e;
        acc -= acc.round();
        k >>= 26;
        a = frac(a * 67_108_864.0);
    }
    if neg {
        -acc
    } else {
        acc
    }
}

/// `e(t) = exp(2πit)`; exact at multiples of `1/4`.
pub fn unit(t: f64) -> Complex64 {
    let t = t - t.round();
    let q = (4.0 * t).round();
    let (s, c) = (TAU * (t - q / 4.0)).sin_cos();
    match (q as i64).rem_euclid(4) {
        0 => Complex64::new(c, s),
        1 => Complex64::new(-s, c),
        2 => Complex64::new(-c, -s),
        _ => Complex64::new(s, -c),
    }
}

/// Integer frequency vector `h`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrequencyVector(pub Vec<i64>);

impl FrequencyVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm_inf(&self) -> u64 {
        self.0.iter().map(|h| h.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&h| h == 0)
    }

    /// `r(h) = Π max(1, |h_i|)`.
    pub fn r(&self) -> f64 {
        self.0.iter().map(|h| h.unsigned_abs().max(1) as f64).product()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpSumResult {
    pub value: Complex64,
    pub n: u64,
    /// `|value| / n`, clamped to `[0, 1]` against rounding.
    pub normalized: f64,
}

impl ExpSumResult {
    pub fn new(value: Complex64, n: u64) -> Self {
        let normalized = if n == 0 { 0.0 } else { (value.norm() / n as f64).min(1.0) };
        ExpSumResult { value, n, normalized }
    }
}

/// Points of `[0,1)^dim`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: coords.len() % dim.max(1),
            });
        }
        check_unit(&coords)?;
        Ok(PointSet { dim, coords })
    }

    pub fn from_1d(xs: Vec<f64>) -> Result<Self> {
        Self::new(1, xs)
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(1, Vec::len);
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        Self::new(dim, points.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
}

fn check_unit(xs: &[f64]) -> Result<()> {
    match xs.iter().position(|x| !(0.0..1.0).contains(x)) {
        Some(i) => Err(Error::InvalidInput(format!(
            "coordinate {} at position {i} is outside [0, 1)",
            xs[i]
        ))),
        None => Ok(()),
    }
}

/// `Σ_n e(h·x_n)` in index order.
pub fn exp_sum(points: &PointSet, h: &FrequencyVector) -> Result<ExpSumResult> {
    if h.dim() != points.dim() {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            got: h.dim(),
        });
    }
    let value = compensated_sum(points.len(), |i| {
        let x = points.point(i);
        let t: f64 = x.iter().zip(&h.0).map(|(&x, &h)| frac_mul(x, h.into())).sum();
        Ok(unit(t))
    })?;
    Ok(ExpSumResult::new(value, points.len() as u64))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsecutiveSum {
    pub sum: ExpSumResult,
    /// `N^(-‖c‖/2^(c+1))`, the decay rate the sum is compared against.
    pub decay_benchmark: f64,
    /// `N^(1-{c}) / ln N`, the largest admissible `‖h‖∞`.
    pub cutoff: f64,
}

/// `Σ_{N ≤ n < 2N} e((1/m) Σ_ℓ h_ℓ (n+ℓ)^c)` with `ℓ < ⌊c⌋ + 1`.
pub fn consecutive_exp_sum(
    c: &ExponentSpec,
    m: u64,
    h: &FrequencyVector,
    n: u64,
    policy: &PrecisionPolicy,
) -> Result<ConsecutiveSum> {
    let l = c.consecutive_terms();
    if h.dim() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            got: h.dim(),
        });
    }
    if h.is_zero() {
        return Err(Error::ZeroFrequency);
    }
    if n == 0 {
        return Err(Error::PreconditionViolation("N must be at least 1".into()));
    }
    let nf = n as f64;
    let cutoff = nf.powf(1.0 - c.fractional_part()) / nf.ln();
    if h.norm_inf() as f64 > cutoff {
        return Err(Error::HypothesisViolation(format!(
            "‖h‖∞ = {} exceeds N^(1-{{c}})/ln N = {cutoff:.4}",
            h.norm_inf()
        )));
    }
    let terms = n as usize + l - 1;
    if n.checked_add(terms as u64).is_none() {
        return Err(Error::PreconditionViolation("index range overflows".into()));
    }
    let values: Vec<Result<Vec<f64>>> = (0..terms.div_ceil(SUM_CHUNK))
        .into_par_iter()
        .map(|chunk| {
            (chunk * SUM_CHUNK..((chunk + 1) * SUM_CHUNK).min(terms))
                .map(|j| Ok(torus_point(n + j as u64, c, m, policy)?.value()))
                .collect()
        })
        .collect();
    let mut xs = Vec::with_capacity(terms);
    for v in values {
        xs.extend(v?);
    }
    let value = compensated_sum(n as usize, |j| {
        let t: f64 = h.0.iter().enumerate().map(|(l, &hl)| frac_mul(xs[j + l], hl.into())).sum();
        Ok(unit(t))
    })?;
    let decay = c.distance_to_integer() / 2f64.powf(c.to_f64() + 1.0);
    Ok(ConsecutiveSum {
        sum: ExpSumResult::new(value, n),
        decay_benchmark: nf.powf(-decay),
        cutoff,
    })
}

/// `Σ_{1 ≤ n ≤ N} e(h P(n))` for `P(n) = Σ α_j n^j`.
pub fn weyl_sum(coeffs: &[f64], h: i64, n: u64) -> Result<ExpSumResult> {
    if coeffs.len() < 2 {
        return Err(Error::DegreeZero);
    }
    if h < 1 {
        return Err(Error::PreconditionViolation("h must be positive".into()));
    }
    if let Some(a) = coeffs.iter().find(|a| !a.is_finite()) {
        return Err(Error::InvalidInput(format!("coefficient {a} is not finite")));
    }
    let d = coeffs.len() as u32 - 1;
    let fits = i128::from(n)
        .checked_pow(d)
        .and_then(|p| p.checked_mul(h.into()))
        .is_some();
    if !fits {
        return Err(Error::InvalidInput("h·N^degree exceeds 128 bits".into()));
    }
    let value = compensated_sum(n as usize, |i| {
        let x = i as i128 + 1;
        let mut pow = i128::from(h);
        let mut t = frac_mul(coeffs[0], pow);
        for &a in &coeffs[1..] {
            pow *= x;
            t += frac_mul(a, pow);
        }
        Ok(unit(t))
    })?;
    Ok(ExpSumResult::new(value, n))
}

/// `(1/R + q/N)^(1/2^(k-1))`, after checking `2 h k! R^(2 - 1/2^(k-2)) ≤ q`
/// and `N ≥ R`.
pub fn weyl_bound(k: u32, q: u64, r: u64, n: u64, h: u64) -> Result<f64> {
    if k == 0 || q == 0 || r == 0 || h == 0 {
        return Err(Error::SideConditionViolated("k, q, R and h must be positive".into()));
    }
    let k_fact: f64 = (1..=k).map(f64::from).product();
    let lhs = 2.0 * h as f64 * k_fact * (r as f64).powf(2.0 - 2f64.powi(2 - k as i32));
    if lhs > q as f64 {
        return Err(Error::SideConditionViolated(format!(
            "2·h·k!·R^(2-1/2^(k-2)) = {lhs} exceeds q = {q}"
        )));
    }
    if n < r {
        return Err(Error::SideConditionViolated(format!("N = {n} is below R = {r}")));
    }
    Ok((1.0 / r as f64 + q as f64 / n as f64).powf(2f64.powi(1 - k as i32)))
}

fn sorted_unit(points: &[f64]) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    check_unit(points)?;
    let mut xs = points.to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

/// Extreme discrepancy `sup_{[a,b) ⊆ [0,1)} |#{x ∈ [a,b)}/N − (b − a)|` of
/// points in `[0,1)`, from the sorted points:
/// `1/N + max_i (i/N − x_(i)) − min_i (i/N − x_(i))`.
pub fn discrepancy_1d_exact(points: &[f64]) -> Result<f64> {
    let xs = sorted_unit(points)?;
    let n = xs.len() as f64;
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for (i, &x) in xs.iter().enumerate() {
        let d = (i + 1) as f64 / n - x;
        hi = hi.max(d);
        lo = lo.min(d);
    }
    Ok(1.0 / n + hi - lo)
}

/// Star discrepancy (intervals `[0, b)`); `D* ≤ D ≤ 2 D*`.
pub fn star_discrepancy_1d(points: &[f64]) -> Result<f64> {
    let xs = sorted_unit(points)?;
    let n = xs.len() as f64;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy)]
enum Lower {
    Zero,
    Above(f64),
}

#[derive(Clone, Copy)]
enum Upper {
    Below(f64),
    One,
}

/// Candidate intervals for one coordinate: closed `[a, b]` with data
/// endpoints (the limits of `[a, b + δ)`), and open intervals whose
/// endpoints sit just above / just below data values, or at 0 and 1.
struct Candidates {
    closed: Vec<(f64, f64)>,
    open: Vec<(Lower, Upper)>,
}

impl Candidates {
    fn new(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        v.dedup();
        let mut closed = Vec::new();
        for (i, &a) in v.iter().enumerate() {
            for &b in &v[i..] {
                closed.push((a, b));
            }
        }
        let lowers = std::iter::once(Lower::Zero).chain(v.iter().map(|&a| Lower::Above(a)));
        let mut open = Vec::new();
        for lo in lowers {
            let a = match lo {
                Lower::Zero => 0.0,
                Lower::Above(a) => a,
            };
            for hi in v.iter().map(|&b| Upper::Below(b)).chain(std::iter::once(Upper::One)) {
                let b = match hi {
                    Upper::Below(b) => b,
                    Upper::One => 1.0,
                };
                if b > a {
                    open.push((lo, hi));
                }
            }
        }
        Candidates { closed, open }
    }
}

fn open_contains(lo: Lower, hi: Upper, x: f64) -> bool {
    let above = match lo {
        Lower::Zero => true,
        Lower::Above(a) => x > a,
    };
    let below = match hi {
        Upper::Below(b) => x < b,
        Upper::One => true,
    };
    above && below
}

fn open_len(lo: Lower, hi: Upper) -> f64 {
    let a = match lo {
        Lower::Zero => 0.0,
        Lower::Above(a) => a,
    };
    let b = match hi {
        Upper::Below(b) => b,
        Upper::One => 1.0,
    };
    b - a
}

/// Exact extreme discrepancy over boxes in `[0,1)^k`, `k ≤ 3`, `N ≤ 2000`.
///
/// Boxes in all but the last coordinate are enumerated from data coordinates
/// and `{0, 1}`; the last coordinate is optimised by a running maximum over
/// the points ordered by that coordinate.
pub fn discrepancy_md_brute(points: &PointSet) -> Result<f64> {
    let (n, k) = (points.len(), points.dim());
    if n == 0 {
        return Err(Error::EmptySet);
    }
    if k > 3 {
        return Err(Error::PreconditionViolation(format!("dimension {k} exceeds 3")));
    }
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let last = k - 1;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points.point(a)[last].total_cmp(&points.point(b)[last]));
    let cands: Vec<Candidates> = (0..last)
        .map(|j| Candidates::new(&(0..n).map(|i| points.point(i)[j]).collect::<Vec<_>>()))
        .collect();
    let ctx = BruteCtx {
        points,
        cands: &cands,
        inv_n: 1.0 / n as f64,
    };
    let excess = ctx.closed(0, &order, 1.0);
    let deficit = ctx.open(0, &order, 1.0);
    Ok(excess.max(deficit))
}

struct BruteCtx<'a> {
    points: &'a PointSet,
    cands: &'a [Candidates],
    inv_n: f64,
}

impl BruteCtx<'_> {
    fn y(&self, i: usize) -> f64 {
        self.points.point(i)[self.cands.len()]
    }

    /// Largest `count/N − volume` over closed boxes.
    fn closed(&self, dim: usize, active: &[usize], vol: f64) -> f64 {
        if active.is_empty() {
            return 0.0;
        }
        if dim == self.cands.len() {
            let mut best = f64::NEG_INFINITY;
            let mut run = f64::NEG_INFINITY;
            for (j, &p) in active.iter().enumerate() {
                let y = self.y(p);
                run = run.max(vol * y - j as f64 * self.inv_n);
                best = best.max((j + 1) as f64 * self.inv_n - vol * y + run);
            }
            return best;
        }
        let mut best = 0.0f64;
        let mut sub = Vec::with_capacity(active.len());
        for &(a, b) in &self.cands[dim].closed {
            sub.clear();
            sub.extend(active.iter().copied().filter(|&p| {
                let x = self.points.point(p)[dim];
                a <= x && x <= b
            }));
            best = best.max(self.closed(dim + 1, &sub, vol * (b - a)));
        }
        best
    }

    /// Largest `volume − count/N` over open boxes.
    fn open(&self, dim: usize, active: &[usize], vol: f64) -> f64 {
        if dim == self.cands.len() {
            // Sentinels at 0 (index -1) and 1 (index len).
            let len = active.len();
            let y = |j: usize| if j == len { 1.0 } else { self.y(active[j]) };
            let mut best = vol * y(0);
            let mut run = -self.inv_n;
            for j in 0..len {
                run = run.max(j as f64 * self.inv_n - vol * y(j));
                best = best.max(vol * y(j + 1) - j as f64 * self.inv_n + run);
            }
            return best;
        }
        let mut best = 0.0f64;
        let mut sub = Vec::with_capacity(active.len());
        for &(lo, hi) in &self.cands[dim].open {
            sub.clear();
            sub.extend(
                active
                    .iter()
                    .copied()
                    .filter(|&p| open_contains(lo, hi, self.points.point(p)[dim])),
            );
            best = best.max(self.open(dim + 1, &sub, vol * open_len(lo, hi)));
        }
        best
    }
}

/// Right-hand side of the Erdős–Turán–Koksma inequality:
/// `(3/2)^k (2/(H+1) + Σ_{0<‖h‖∞≤H} |(1/N) Σ e(h·x_n)| / r(h))`.
pub fn etks_bound(points: &PointSet, big_h: u32) -> Result<f64> {
    if big_h == 0 {
        return Err(Error::PreconditionViolation("H must be at least 1".into()));
    }
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    let k = points.dim();
    let side = 2 * big_h as usize + 1;
    let total = side
        .checked_pow(k as u32)
        .ok_or_else(|| Error::PreconditionViolation("too many frequencies".into()))?;
    // h and -h give conjugate sums: keep those whose first nonzero entry is
    // positive and count them twice.
    let freqs: Vec<FrequencyVector> = (0..total)
        .map(|mut code| {
            let h: Vec<i64> = (0..k)
                .map(|_| {
                    let d = (code % side) as i64 - i64::from(big_h);
                    code /= side;
                    d
                })
                .collect();
            FrequencyVector(h)
        })
        .filter(|h| h.0.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0))
        .collect();
    let terms: Vec<Result<f64>> = freqs
        .par_iter()
        .map(|h| Ok(exp_sum(points, h)?.normalized / h.r()))
        .collect();
    let mut acc = Neumaier::default();
    for t in terms {
        acc.add(2.0 * t?);
    }
    Ok(1.5f64.powi(k as i32) * (2.0 / (f64::from(big_h) + 1.0) + acc.value()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub d_x: f64,
    pub d_y: f64,
    pub delta: f64,
    /// `D(y) ≤ 2 D(x) + 2δ`.
    pub holds: bool,
}

/// Compares the discrepancy of `x` with that of `y = x + η mod 1`.
pub fn perturbation_check(x: &[f64], eta: &[f64], delta: f64) -> Result<PerturbationReport> {
    if eta.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: eta.len(),
        });
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!("delta {delta} must be finite and non-negative")));
    }
    if let Some(index) = eta.iter().position(|e| !(e.abs() <= delta)) {
        return Err(Error::DeltaViolated { index });
    }
    let y: Vec<f64> = x
        .iter()
        .zip(eta)
        .map(|(&x, &e)| {
            let v = (x + e).rem_euclid(1.0);
            // A tiny negative sum rounds up to 1.0.
            if v >= 1.0 {
                0.0
            } else {
                v
            }
        })
        .collect();
    let d_x = discrepancy_1d_exact(x)?;
    let d_y = discrepancy_1d_exact(&y)?;
    Ok(PerturbationReport {
        d_x,
        d_y,
        delta,
        holds: d_y <= 2.0 * d_x + 2.0 * delta,
    })
}

struct LastConvergent {
    p: BigInt,
    q: BigInt,
    p_prev: BigInt,
    q_prev: BigInt,
}

/// Walks the continued fraction of `alpha` up to the last convergent with
/// denominator at most `q_max`.
fn last_convergent(alpha: &QuadraticNumber, q_max: &BigInt) -> Result<LastConvergent> {
    let (mut p2, mut q2) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let mut x = alpha.clone();
    loop {
        let a = x.floor();
        let q = &a * &q1 + &q2;
        if &q > q_max {
            break;
        }
        let p = &a * &p1 + &p2;
        let rest = x.sub(&QuadraticNumber::rational(BigRational::from_integer(a)))?;
        (p2, q2, p1, q1) = (p1, q1, p, q);
        if rest.signum() == Ordering::Equal {
            break;
        }
        x = QuadraticNumber::integer(1).div(&rest)?;
    }
    Ok(LastConvergent {
        p: p1,
        q: q1,
        p_prev: p2,
        q_prev: q2,
    })
}

fn check_q(q_max: u64) -> Result<BigInt> {
    if q_max == 0 {
        return Err(Error::PreconditionViolation("Q must be at least 1".into()));
    }
    Ok(BigInt::from(q_max))
}

/// `(p, q)` with `gcd(p, q) = 1`, `1 ≤ q ≤ Q` and `|α − p/q| ≤ 1/(qQ)`: the
/// last continued-fraction convergent with denominator at most `Q`.
pub fn dirichlet_approx(alpha: &QuadraticNumber, q_max: u64) -> Result<(BigInt, u64)> {
    let c = last_convergent(alpha, &check_q(q_max)?)?;
    Ok((c.p, c.q.to_u64().expect("q ≤ Q")))
}

/// The fraction closest to `α` among those with denominator at most `Q`
/// (the smaller denominator on ties).
pub fn best_approximation(alpha: &QuadraticNumber, q_max: u64) -> Result<(BigInt, u64)> {
    let qm = check_q(q_max)?;
    let c = last_convergent(alpha, &qm)?;
    let mut best = (c.p.clone(), c.q.clone());
    if !c.q.is_zero() {
        let t = (&qm - &c.q_prev) / &c.q;
        if t.is_positive() {
            let semi = (&c.p_prev + &t * &c.p, &c.q_prev + &t * &c.q);
            if approx_distance(alpha, &semi.0, &semi.1)?.cmp_exact(&approx_distance(alpha, &c.p, &c.q)?)?
                == Ordering::Less
            {
                best = semi;
            }
        }
    }
    Ok((best.0, best.1.to_u64().expect("q ≤ Q")))
}

/// `|α − p/q|`.
pub fn approx_distance(alpha: &QuadraticNumber, p: &BigInt, q: &BigInt) -> Result<QuadraticNumber> {
    let d = alpha.sub(&QuadraticNumber::rational(BigRational::new(p.clone(), q.clone())))?;
    Ok(if d.signum() == Ordering::Less { d.neg() } else { d })
}

/// `p/q` approximating a coefficient, with the denominator bound `Q` it was
/// chosen for.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RationalApprox {
    #[serde(serialize_with = "crate::serialize_display")]
    pub p: BigInt,
    pub q: u64,
    pub bound: u64,
}

impl RationalApprox {
    /// Checks `gcd(p, q) = 1`, `1 ≤ q ≤ Q` and `|α − p/q| ≤ 1/(qQ)` exactly.
    pub fn validate(&self, alpha: &QuadraticNumber) -> Result<()> {
        let bad = |why: String| Err(Error::BadApproximation(why));
        if self.q == 0 || self.q > self.bound {
            return bad(format!("need 1 ≤ q ≤ Q, got q = {}, Q = {}", self.q, self.bound));
        }
        let q = BigInt::from(self.q);
        if !self.p.gcd(&q).is_one() {
            return bad(format!("{}/{} is not in lowest terms", self.p, self.q));
        }
        let limit = QuadraticNumber::rational(BigRational::new(
            BigInt::one(),
            BigInt::from(u128::from(self.q) * u128::from(self.bound)),
        ));
        if approx_distance(alpha, &self.p, &q)?.cmp_exact(&limit)? == Ordering::Greater {
            return bad(format!("|α − {}/{}| exceeds 1/(qQ)", self.p, self.q));
        }
        Ok(())
    }
}

/// `q^k log(e q_k) (q_k^(-1/2) + q_k/N)^(1/2^(k-1)) + q_k^(1/2^k) Σ_{i>k} N^i/Q_i`
/// with `q = Π_{i>k} q_i`, for `P(x) = Σ_{i ≤ d} α_i x^i`. `approx[i-1]`
/// approximates `α_i`.
pub fn poly_disc_bound(coeffs: &[QuadraticNumber], approx: &[RationalApprox], k: usize, n: u64) -> Result<f64> {
    let d = coeffs.len().saturating_sub(1);
    if d == 0 {
        return Err(Error::DegreeZero);
    }
    if approx.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: approx.len(),
        });
    }
    if k == 0 || k > d {
        return Err(Error::PreconditionViolation(format!("pivot k = {k} must lie in [1, {d}]")));
    }
    if n == 0 {
        return Err(Error::PreconditionViolation("N must be at least 1".into()));
    }
    for (a, alpha) in approx.iter().zip(&coeffs[1..]) {
        a.validate(alpha)?;
    }
    let nf = n as f64;
    let qk = approx[k - 1].q as f64;
    let q: f64 = approx[k..].iter().map(|a| a.q as f64).product();
    let head = q.powi(k as i32)
        * (std::f64::consts::E * qk).ln()
        * (qk.powf(-0.5) + qk / nf).powf(2f64.powi(1 - k as i32));
    let tail: f64 = approx[k..]
        .iter()
        .enumerate()
        .map(|(j, a)| nf.powi((k + 1 + j) as i32) / a.bound as f64)
        .sum();
    Ok(head + qk.powf(2f64.powi(-(k as i32))) * tail)
}

#[cfg(test)]
mod tests;
