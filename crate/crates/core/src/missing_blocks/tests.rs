use super::*;
use crate::certified_eval::{ExponentSpec, PrecisionPolicy};
use crate::sources::{ConstantSequence, PsSequence};
use crate::subword_complexity::BeattySequence;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

fn spec(m: u64, d: u64, f: u64, n: usize, v: BlockVariant) -> ForbiddenBlockSpec {
    ForbiddenBlockSpec {
        m,
        d,
        m_factorial: f,
        n,
        variant: v,
    }
}

fn ps(c: &str, m: u64) -> PsSequence {
    PsSequence::new(ExponentSpec::parse(c).unwrap(), m, PrecisionPolicy::default()).unwrap()
}

#[test]
fn block_a_examples() {
    let b = construct_block_a(&spec(3, 1, 2, 10, BlockVariant::ThreeSymbol)).unwrap();
    assert_eq!(b.0, vec![2, 2, 1, 1, 0, 0, 0, 0, 0, 0]);
    let b = construct_block_a(&spec(5, 1, 1, 3, BlockVariant::ThreeSymbol)).unwrap();
    assert_eq!(b.0, vec![2, 1, 0]);
    assert!(matches!(
        construct_block_a(&spec(2, 1, 1, 3, BlockVariant::ThreeSymbol)),
        Err(Error::ModulusTooSmall { m: 2, min: 3 })
    ));
    assert!(matches!(
        construct_block_a(&spec(3, 1, 2, 3, BlockVariant::ThreeSymbol)),
        Err(Error::LengthTooShort { len: 3, needed: 4 })
    ));
    assert!(construct_block_a(&spec(3, 1, 1, 5, BlockVariant::TwoSymbol)).is_err());
}

#[test]
fn block_b_examples() {
    let b = construct_block_b(&spec(2, 1, 2, 10, BlockVariant::TwoSymbol)).unwrap();
    assert_eq!(b.0, vec![0, 0, 0, 1, 0, 0, 0, 1, 0, 0]);
    let b = construct_block_b(&spec(2, 1, 1, 5, BlockVariant::TwoSymbol)).unwrap();
    assert_eq!(b.0, vec![0, 1, 0, 1, 0]);
    assert!(matches!(
        construct_block_b(&spec(2, 1, 1, 3, BlockVariant::TwoSymbol)),
        Err(Error::LengthTooShort { len: 3, needed: 4 })
    ));
    // The last one sits exactly at position 4dM!.
    let b = construct_block_b(&spec(2, 2, 3, 24, BlockVariant::TwoSymbol)).unwrap();
    let ones: Vec<usize> = (0..24).filter(|&i| b.0[i] == 1).map(|i| i + 1).collect();
    assert_eq!(ones, vec![6, 12, 18, 24]);
}

#[test]
fn block_search_examples() {
    assert_eq!(block_occurs(&[1, 0, 1], &[0, 1]), Some(1));
    assert_eq!(block_occurs(&[1, 0, 1], &[1, 1]), None);
    assert_eq!(block_occurs(&[1, 0, 1], &[]), Some(0));
    assert_eq!(block_occurs(&[1], &[1, 1]), None);
    assert_eq!(block_occurs(&[0, 0, 0, 1], &[0, 0, 1]), Some(1));
}

#[test]
fn block_search_across_chunk_boundaries() {
    let mut seq = vec![0 as Residue; 3 * SEARCH_CHUNK];
    let at = SEARCH_CHUNK - 2;
    seq[at..at + 5].copy_from_slice(&[1, 2, 1, 2, 2]);
    assert_eq!(block_occurs(&seq, &[1, 2, 1, 2, 2]), Some(at));
    assert_eq!(block_occurs(&seq, &[2, 2, 0]), Some(at + 3));
}

/// `⌊n^1.5⌋ mod m` via the exact integer square root of `n³`.
fn ps15_oracle(n_max: u64, m: u64) -> Vec<Residue> {
    (1..=n_max)
        .map(|n| {
            let cube = u128::from(n).pow(3);
            let mut r = (cube as f64).sqrt() as u128;
            while r * r > cube {
                r -= 1;
            }
            while (r + 1) * (r + 1) <= cube {
                r += 1;
            }
            (r % u128::from(m)) as Residue
        })
        .collect()
}

#[test]
fn block_a_scans_against_exact_floors() {
    let oracle = ps15_oracle(1_000_000, 3);
    let naive = |b: &[Residue]| oracle.windows(b.len()).position(|w| w == b).map(|p| p as u64 + 1);
    // With the stand-in M! = 2 the block does occur, early.
    let s = spec(3, 1, 2, 10, BlockVariant::ThreeSymbol);
    let r = missing_block_search(&s, &ps("1.5", 3), 1_000_000).unwrap();
    assert_eq!(r.first_occurrence, Some(135));
    assert_eq!(r.first_occurrence, naive(&construct_block_a(&s).unwrap().0));
    // M! = 3, N = 12 is not found up to 10^6.
    let s = spec(3, 1, 3, 12, BlockVariant::ThreeSymbol);
    let r = missing_block_search(&s, &ps("1.5", 3), 1_000_000).unwrap();
    assert_eq!(r.first_occurrence, None);
    assert_eq!(naive(&construct_block_a(&s).unwrap().0), None);
}

#[test]
fn report_positions_are_one_indexed() {
    let s = spec(2, 1, 1, 5, BlockVariant::TwoSymbol);
    // Block [0,1,0,1,0] occurs in ⌊n^1.5⌋ mod 2 somewhere early.
    let source = ps("1.5", 2);
    let r = missing_block_search(&s, &source, 100_000).unwrap();
    let p = r.first_occurrence.expect("occurs");
    let seq = source.residues(p, 5).unwrap();
    assert_eq!(seq, vec![0, 1, 0, 1, 0]);
}

#[test]
fn constant_sequence_saturates() {
    let c = ConstantSequence::new(2, 0).unwrap();
    let r = saturation_scan(&c, 2, &[10, 100, 1000]).unwrap();
    assert!(r.rows.iter().all(|row| row.count == 1));
    assert!(r.saturated);
    assert_eq!(r.missing, BigUint::from(3u32));
}

#[test]
fn beatty_saturation_is_sturmian() {
    let b = BeattySequence::new("(sqrt(5)-1)/2".parse().unwrap(), QuadraticNumber::integer(0), 2).unwrap();
    let r = saturation_scan(&b, 5, &[1000, 10_000, 100_000]).unwrap();
    // ⌊nα⌋ mod 2 codes a rotation by α/2 with two intervals: at most 2k blocks.
    assert!(r.final_count() <= 2 * 5 && r.final_count() < 32, "{}", r.final_count());
    assert!(r.saturated);
}

#[test]
fn saturation_counts_match_direct_enumeration() {
    let source = ps("1.5", 2);
    let schedule = [50u64, 500, 5000, 20_000];
    let seq = source.residues(1, 20_000).unwrap();
    for r in saturation_sweep(&source, &[1, 3, 7, 12], &schedule).unwrap() {
        let mut prev = 0;
        for row in &r.rows {
            let want = seq[..row.n as usize].windows(r.k).collect::<BTreeSet<_>>().len() as u64;
            assert_eq!(row.count, want, "k={} N={}", r.k, row.n);
            assert!(row.count >= prev);
            assert!(row.count <= (row.n - r.k as u64 + 1).min(1 << r.k));
            prev = row.count;
        }
    }
    assert!(saturation_scan(&source, 3, &[100, 100]).is_err());
    assert!(saturation_scan(&source, 3, &[2, 100]).is_err());
    assert!(saturation_scan(&source, 0, &[100]).is_err());
}

#[test]
fn absent_blocks_are_not_present() {
    let source = ps("1.5", 2);
    let n = 30_000;
    let k = 8;
    let present: BTreeSet<Block> = present_blocks(&source, k, n).unwrap().into_iter().collect();
    let seq = source.residues(1, n as usize).unwrap();
    let report = saturation_scan(&source, k, &[n]).unwrap();
    assert_eq!(report.final_count() as usize, present.len());
    let mut absent = 0;
    for code in 0..1u32 << k {
        let block: Vec<Residue> = (0..k).map(|i| (code >> (k - 1 - i)) & 1).collect();
        let occurs = block_occurs(&seq, &block);
        assert_eq!(occurs.is_some(), present.contains(&Block(block)));
        absent += usize::from(occurs.is_none());
    }
    assert_eq!(absent, 256 - present.len());
}

#[test]
fn triple_examples() {
    assert!(monotone_triple_check(0.5, 1.2, 1.4, 2).unwrap());
    assert!(monotone_triple_check(1.4, 1.2, 0.5, 3).unwrap());
    assert!(matches!(
        monotone_triple_check(0.5, 1.6, 1.2, 2),
        Err(Error::PreconditionViolation(_))
    ));
    assert!(matches!(
        monotone_triple_check(0.5, 1.0, 1.5, 2),
        Err(Error::PreconditionViolation(_))
    ));
    assert!(monotone_triple_check(f64::NAN, 0.0, 0.0, 2).is_err());
}

#[test]
fn monotone_triples_never_alternate() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for i in 0..100_000 {
        let m = [2u64, 3, 5][i % 3];
        let base: f64 = rng.gen_range(-1000.0..1000.0);
        let span: f64 = rng.gen_range(0.0..1.0);
        let mut t = [base, base + rng.gen::<f64>() * span, base + span];
        t.sort_by(f64::total_cmp);
        if rng.gen_bool(0.5) {
            t.reverse();
        }
        if (t[2] - t[0]).abs() >= 1.0 {
            continue;
        }
        assert!(monotone_triple_check(t[0], t[1], t[2], m).unwrap(), "{t:?}");
    }
}

#[test]
fn coefficient_probe_examples() {
    let half = vec![QuadraticNumber::integer(0), "0.5".parse().unwrap()];
    let p = dirichlet_coeff_probe(&half, 1_000_000).unwrap();
    assert_eq!((p[0].p.clone(), p[0].q, p[0].error), (BigInt::from(1), 2, 0.0));
    assert!(p[0].within);

    let golden = vec![QuadraticNumber::integer(0), "(sqrt(5)-1)/2".parse().unwrap()];
    let p = dirichlet_coeff_probe(&golden, 1_000_000).unwrap();
    // d = 1: N_1 = ⌊√N + 1⌋ = 1001, Q_1 = ⌊1001^(5/6) + 1⌋.
    assert_eq!(p[0].n_i, 1001);
    assert_eq!(p[0].q_bound, (1001f64.powf(5.0 / 6.0) + 1.0).floor() as u64);
    let fib = [1u64, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610];
    let q_want = *fib.iter().filter(|&&f| f <= p[0].q_bound).next_back().unwrap();
    assert_eq!(p[0].q, q_want);
    assert!(p[0].error > 0.0 && p[0].error <= 1.0 / (p[0].q * p[0].q_bound) as f64);

    let near = vec![QuadraticNumber::integer(0), "0.500000001".parse().unwrap()];
    let p = dirichlet_coeff_probe(&near, 1_000_000).unwrap();
    assert_eq!((p[0].p.clone(), p[0].q), (BigInt::from(1), 2));
    assert!(p[0].within && (p[0].error - 1e-9).abs() < 1e-20);

    assert!(matches!(dirichlet_coeff_probe(&[QuadraticNumber::integer(1)], 10), Err(Error::DegreeZero)));
}

#[test]
fn coefficient_probe_schedule_for_higher_degree() {
    // d = 2: exponents (i+2)!/(2·4!) are 1/8 and 1/2.
    let coeffs = vec![
        QuadraticNumber::integer(0),
        "sqrt(2)".parse().unwrap(),
        "sqrt(3)".parse().unwrap(),
    ];
    let n = 100_000_000u64;
    let p = dirichlet_coeff_probe(&coeffs, n).unwrap();
    assert_eq!(p[0].n_i, (1e8f64.powf(0.125) + 1.0).floor() as u64);
    assert_eq!(p[1].n_i, 10_001);
    assert!((p[1].bound - 1e-4).abs() < 1e-18);
}

proptest! {
    #[test]
    fn constructors_emit_the_specified_multiset(f in 1u64..20, d in 1u64..4, extra in 0usize..30) {
        let a = spec(3, d, f, 2 * f as usize + extra, BlockVariant::ThreeSymbol);
        let b = construct_block_a(&a).unwrap();
        prop_assert_eq!(b.len(), a.n);
        prop_assert_eq!(b.0.iter().filter(|&&s| s == 2).count() as u64, f);
        prop_assert_eq!(b.0.iter().filter(|&&s| s == 1).count() as u64, f);

        let s = spec(2, d, f, (4 * d * f) as usize + extra, BlockVariant::TwoSymbol);
        let b = construct_block_b(&s).unwrap();
        prop_assert_eq!(b.len(), s.n);
        prop_assert_eq!(b.0.iter().filter(|&&x| x == 1).count() as u64, 2 * d);
    }

    #[test]
    fn block_search_matches_naive(seq in proptest::collection::vec(0u32..3, 0..200), block in proptest::collection::vec(0u32..3, 1..5)) {
        let want = seq.windows(block.len()).position(|w| w == block.as_slice());
        prop_assert_eq!(block_occurs(&seq, &block), want);
    }
}
