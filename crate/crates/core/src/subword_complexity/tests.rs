use super::*;
use crate::certified_eval::{ExponentSpec, PrecisionPolicy};
use crate::sources::{ConstantSequence, PsSequence};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn q(s: &str) -> QuadraticNumber {
    s.parse().unwrap()
}

fn rat(s: &str) -> BigRational {
    parse_decimal(s).unwrap()
}

/// Fibonacci word from the substitution 0 → 01, 1 → 0.
fn fibonacci_word(len: usize) -> Vec<Residue> {
    let mut w = vec![0];
    while w.len() < len {
        w = w.iter().flat_map(|&s| if s == 0 { vec![0, 1] } else { vec![0] }).collect();
    }
    w.truncate(len);
    w
}

fn distinct_windows(seq: &[Residue], k: usize) -> usize {
    seq.windows(k).collect::<BTreeSet<_>>().len()
}

fn balanced_by_enumeration(k: u32) -> u128 {
    (0..1u32 << k)
        .filter(|w| {
            let word: Vec<Residue> = (0..k).map(|i| (w >> i) & 1).collect();
            // Direct pairwise check over factors of each length.
            (1..=k as usize).all(|len| {
                let counts: Vec<u32> = word.windows(len).map(|f| f.iter().sum()).collect();
                counts.iter().all(|a| counts.iter().all(|b| a.abs_diff(*b) <= 1))
            })
        })
        .count() as u128
}

#[test]
fn beatty_examples() {
    let zero = QuadraticNumber::integer(0);
    assert_eq!(beatty_residues(&q("1"), &zero, 2, 0, 6).unwrap(), vec![0, 1, 0, 1, 0, 1]);
    assert_eq!(beatty_residues(&q("0.5"), &zero, 2, 0, 5).unwrap(), vec![0, 0, 1, 1, 0]);
    assert_eq!(beatty_residues(&q("-0.5"), &zero, 3, 0, 4).unwrap(), vec![0, 2, 2, 1]);
    assert!(beatty_residues(&q("sqrt(2)"), &q("sqrt(3)"), 2, 0, 4).is_err());
}

#[test]
fn beatty_differences_give_the_fibonacci_word() {
    // Slope (√5−1)/2 yields the Fibonacci word with 0 and 1 exchanged.
    let line = BeattyLine::new(q("(sqrt(5)-1)/2"), QuadraticNumber::integer(0)).unwrap();
    let diffs: Vec<Residue> = (1..=10_000u64)
        .map(|n| (line.floor(n + 1) - line.floor(n)).to_u32().unwrap())
        .collect();
    let fib = fibonacci_word(10_000);
    assert!(diffs.iter().zip(&fib).all(|(d, f)| *d == 1 - f));
}

#[test]
fn fast_and_exact_paths_agree() {
    let line = BeattyLine::new(q("sqrt(2)-1"), q("0.3")).unwrap();
    let t = rat("0.9");
    for n in (0..2_000_000u64).step_by(997) {
        assert_eq!(line.floor(n), line.exact_floor(n));
        let x = line.alpha().mul(&QuadraticNumber::integer(n as i64)).unwrap().add(line.beta()).unwrap();
        let frac = x.sub(&QuadraticNumber::rational(BigRational::from_integer(x.floor()))).unwrap();
        let want = frac.cmp_exact(&QuadraticNumber::rational(t.clone())).unwrap() != Ordering::Less;
        assert_eq!(line.frac_at_least(n, &t, 0.9), want, "n={n}");
    }
}

#[test]
fn rational_threshold_hits_are_exact() {
    // n/4 has fractional part exactly 3/4 at n ≡ 3 (mod 4).
    let line = BeattyLine::new(q("0.25"), QuadraticNumber::integer(0)).unwrap();
    let t = rat("0.75");
    let hits: Vec<u64> = (0..12).filter(|&n| line.frac_at_least(n, &t, 0.75)).collect();
    assert_eq!(hits, vec![3, 7, 11]);
}

#[test]
fn sturmian_counts() {
    assert_eq!(sturmian_factor_count(1), 2);
    assert_eq!(sturmian_factor_count(2), 4);
    assert_eq!(sturmian_factor_count(3), 8);
    assert_eq!(sturmian_factor_count(4), 14);
    for k in 1..=12 {
        assert_eq!(sturmian_factor_count(k as u64), balanced_by_enumeration(k), "k={k}");
    }
}

#[test]
fn balance_examples() {
    assert!(!is_balanced(&[0, 0, 1, 1]).unwrap());
    assert!(is_balanced(&[0, 1, 0, 1]).unwrap());
    assert!(is_balanced(&[0, 1, 0, 0, 1, 0]).unwrap());
    assert!(is_balanced(&[1]).unwrap());
    assert!(is_balanced(&[]).is_err());
    assert!(is_balanced(&[0, 2]).is_err());
    // Every factor of a Sturmian word is balanced.
    let fib = fibonacci_word(200);
    assert!(is_balanced(&fib).unwrap());
}

#[test]
fn three_gap_examples() {
    let zero = QuadraticNumber::integer(0);
    let g = three_gap_analysis(&q("(sqrt(5)-1)/2"), &zero, &rat("0.25"), 1000).unwrap();
    assert!(g.three_gap_holds(), "{g:?}");
    assert!(g.hits > 200 && g.hits < 300);
    let g = three_gap_analysis(&q("sqrt(2)-1"), &q("0.3"), &rat("0.1"), 10_000).unwrap();
    assert!(g.three_gap_holds(), "{g:?}");
    assert_eq!(g.multiplicities.iter().sum::<u64>(), g.hits - 1);
    assert!(matches!(
        three_gap_analysis(&q("sqrt(2)-1"), &zero, &rat("0.001"), 5),
        Err(Error::EmptyHitSet)
    ));
    assert!(matches!(three_gap_analysis(&q("0.5"), &zero, &rat("0.1"), 100), Err(Error::RationalAlpha)));
    assert!(three_gap_analysis(&q("sqrt(2)"), &zero, &rat("1"), 100).is_err());
}

#[test]
fn three_gap_hits_match_direct_definition() {
    let a = q("(sqrt(5)-1)/2");
    let g = three_gap_analysis(&a, &QuadraticNumber::integer(0), &rat("0.25"), 300).unwrap();
    let hits: Vec<u64> = (0..300u64)
        .filter(|&n| {
            let x = n as f64 * 0.6180339887498949;
            x - x.floor() >= 0.75
        })
        .collect();
    assert_eq!(g.hits as usize, hits.len());
    assert_eq!(g.first_hit, hits[0]);
}

#[test]
fn profile_examples() {
    let p = complexity_profile(&[0; 50], 2, 10).unwrap();
    assert!(p.entries.iter().all(|&(_, l)| l == 1));
    let p = complexity_profile(&[1, 0, 1], 2, 2).unwrap();
    assert_eq!(p.l(2), Some(2));
    assert!(matches!(complexity_profile(&[1, 0], 2, 3), Err(Error::WindowTooShort { .. })));
}

#[test]
fn fibonacci_complexity_is_k_plus_one() {
    let fib = fibonacci_word(10_000);
    let p = complexity_profile(&fib, 2, 10).unwrap();
    for k in 1..=10 {
        assert_eq!(distinct_windows(&fib, k) as u64, k as u64 + 1);
        assert_eq!(p.l(k), Some(k as u64 + 1));
    }
}

#[test]
fn growth_fits() {
    let constant = ConstantSequence::new(2, 0).unwrap();
    let e = ps_complexity_experiment(&constant, 1000, 20).unwrap();
    assert_eq!(e.slope, Some(0.0));
    assert_eq!(e.deficient_from, Some(1));

    let beatty = BeattySequence::new(q("(sqrt(5)-1)/2"), QuadraticNumber::integer(0), 2).unwrap();
    let e = ps_complexity_experiment(&beatty, 100_000, 30).unwrap();
    // L_k = k + 2 here (k + 1 for the difference word); log-log slope ≈ 1.
    let slope = e.slope.unwrap();
    assert!((0.8..1.05).contains(&slope), "{slope}");

    let ps = PsSequence::new(ExponentSpec::parse("2.5").unwrap(), 2, PrecisionPolicy::default()).unwrap();
    let e = ps_complexity_experiment(&ps, 10_000, 12).unwrap();
    assert!(e.warning.is_some());
    assert_eq!(e.upper_exponent, None);
}

#[test]
fn ps_profile_invariants() {
    let ps = PsSequence::new(ExponentSpec::parse("1.5").unwrap(), 2, PrecisionPolicy::default()).unwrap();
    let n = 200_000;
    let e = ps_complexity_experiment(&ps, n, 24).unwrap();
    assert_eq!(e.upper_exponent, Some(8.0));
    let p = &e.profile;
    assert!(p.l(1).unwrap() <= 2);
    for &(k, l) in &p.entries {
        assert!(l as f64 <= p.block_space(k).min((n - k + 1) as f64));
        if k > 1 {
            assert!(l >= p.l(k - 1).unwrap(), "k={k}");
        }
    }
    let seq = ps.residues(1, n).unwrap();
    for k in [1, 5, 13, 24] {
        assert_eq!(p.l(k).unwrap() as usize, distinct_windows(&seq, k));
    }
}

proptest! {
    #[test]
    fn factor_counts_grow_by_at_least_minus_one(seq in proptest::collection::vec(0u32..2, 2..300)) {
        // A length-k factor extends right unless it occurs only as the suffix,
        // and left unless it occurs only as the prefix.
        let k_max = seq.len().min(12);
        let p = complexity_profile(&seq, 2, k_max).unwrap();
        for k in 1..k_max {
            prop_assert!(p.l(k + 1).unwrap() + 1 >= p.l(k).unwrap());
        }
    }

    #[test]
    fn three_gap_structure(
        d in prop::sample::select(vec![2u64, 3, 5, 7, 11, 13]),
        num in 1i64..50,
        beta_milli in 0i64..1000,
        eps_milli in 1i64..999,
        n in 2u64..3000,
    ) {
        let alpha = QuadraticNumber::sqrt(d).mul(&QuadraticNumber::integer(num)).unwrap();
        let beta = QuadraticNumber::rational(BigRational::new(BigInt::from(beta_milli), BigInt::from(1000)));
        let eps = BigRational::new(BigInt::from(eps_milli), BigInt::from(1000));
        match three_gap_analysis(&alpha, &beta, &eps, n) {
            Ok(g) => prop_assert!(g.three_gap_holds(), "{:?}", g),
            Err(e) => prop_assert_eq!(e, Error::EmptyHitSet),
        }
    }
}
