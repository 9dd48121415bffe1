use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(s: &str) -> QuadraticNumber {
    s.parse().unwrap()
}

/// Direct enumeration of intervals `[a, b)` whose endpoints are 0, 1, the
/// points, and the next float above each point.
fn brute_1d(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut ends: Vec<f64> = vec![0.0, 1.0];
    for &x in xs {
        ends.push(x);
        ends.push(x.next_up());
    }
    ends.sort_by(f64::total_cmp);
    ends.dedup();
    let below: Vec<usize> = ends.iter().map(|&e| s.partition_point(|&x| x < e)).collect();
    let mut best = 0.0f64;
    for (i, &a) in ends.iter().enumerate() {
        for (j, &b) in ends.iter().enumerate().skip(i + 1) {
            let count = (below[j] - below[i]) as f64;
            best = best.max((count / n - (b - a)).abs());
        }
    }
    best
}

/// Enumeration of all boxes `Π [a_i, b_i)` with endpoints drawn from 0, 1,
/// the coordinates and the float just above each coordinate.
fn brute_boxes(points: &[Vec<f64>]) -> f64 {
    let k = points[0].len();
    let ends: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut e = vec![0.0, 1.0];
            for p in points {
                e.push(p[j]);
                e.push(p[j].next_up());
            }
            e.sort_by(f64::total_cmp);
            e.dedup();
            e
        })
        .collect();
    let n = points.len() as f64;
    let mut best = 0.0f64;
    let mut stack = vec![(0usize, Vec::<(f64, f64)>::new())];
    while let Some((dim, sides)) = stack.pop() {
        if dim == k {
            let vol: f64 = sides.iter().map(|(a, b)| b - a).product();
            let count = points
                .iter()
                .filter(|p| p.iter().zip(&sides).all(|(x, (a, b))| a <= x && x < b))
                .count() as f64;
            best = best.max((count / n - vol).abs());
            continue;
        }
        for (i, &a) in ends[dim].iter().enumerate() {
            for &b in &ends[dim][i + 1..] {
                let mut s = sides.clone();
                s.push((a, b));
                stack.push((dim + 1, s));
            }
        }
    }
    best
}

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            // Mix continuous values with a coarse grid so ties occur.
            if rng.gen_bool(0.3) {
                f64::from(rng.gen_range(0..16u32)) / 16.0
            } else {
                rng.gen::<f64>()
            }
        })
        .collect()
}

#[test]
fn unit_is_exact_on_quarters() {
    assert_eq!(unit(0.0), Complex64::new(1.0, 0.0));
    assert_eq!(unit(0.25), Complex64::new(0.0, 1.0));
    assert_eq!(unit(0.5), Complex64::new(-1.0, 0.0));
    assert_eq!(unit(-0.25), Complex64::new(0.0, -1.0));
    assert_eq!(unit(3.0), Complex64::new(1.0, 0.0));
    let z = unit(0.1);
    assert!((z.re - (TAU * 0.1).cos()).abs() < 1e-15 && (z.im - (TAU * 0.1).sin()).abs() < 1e-15);
}

#[test]
fn exp_sum_examples() {
    let pts = PointSet::from_1d((0..1000).map(|i| f64::from(i) / 1000.0).collect()).unwrap();
    let s = exp_sum(&pts, &FrequencyVector(vec![0])).unwrap();
    assert_eq!(s.value, Complex64::new(1000.0, 0.0));
    assert_eq!(s.normalized, 1.0);

    let halves = PointSet::from_1d((1..=200).map(|n| (f64::from(n) / 2.0).fract()).collect()).unwrap();
    let s = exp_sum(&halves, &FrequencyVector(vec![1])).unwrap();
    assert_eq!(s.value, Complex64::new(0.0, 0.0));

    let g = 0.5 * (5f64.sqrt() - 1.0);
    let golden = PointSet::from_1d((1..=10_000).map(|n| (f64::from(n) * g).fract()).collect()).unwrap();
    assert!(exp_sum(&golden, &FrequencyVector(vec![1])).unwrap().normalized < 0.01);

    assert!(matches!(
        exp_sum(&golden, &FrequencyVector(vec![1, 1])),
        Err(Error::DimensionMismatch { .. })
    ));
    assert!(PointSet::from_1d(vec![1.0]).is_err());
}

#[test]
fn sums_do_not_depend_on_thread_count() {
    let pts: Vec<Vec<f64>> = {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        (0..50_000).map(|_| vec![rng.gen(), rng.gen()]).collect()
    };
    let pts = PointSet::from_points(&pts).unwrap();
    let h = FrequencyVector(vec![3, -5]);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| exp_sum(&pts, &h).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn consecutive_sum_basics() {
    let c = ExponentSpec::parse("1.5").unwrap();
    let p = PrecisionPolicy::default();
    let s = consecutive_exp_sum(&c, 2, &FrequencyVector(vec![1, -1]), 1, &p).unwrap();
    assert_eq!(s.sum.n, 1);
    assert!((s.sum.normalized - 1.0).abs() < 1e-15);
    assert!(matches!(
        consecutive_exp_sum(&c, 2, &FrequencyVector(vec![0, 0]), 100, &p),
        Err(Error::ZeroFrequency)
    ));
    assert!(matches!(
        consecutive_exp_sum(&c, 2, &FrequencyVector(vec![1]), 100, &p),
        Err(Error::DimensionMismatch { .. })
    ));
    // N^(1/2)/ln N ≈ 4.6 at N = 1000.
    assert!(matches!(
        consecutive_exp_sum(&c, 2, &FrequencyVector(vec![5, 0]), 1000, &p),
        Err(Error::HypothesisViolation(_))
    ));
}

#[test]
fn consecutive_sum_matches_direct_phases() {
    // Phase (n+1)^1.5/2 − n^1.5/2 computed independently in exact-ish f64.
    let c = ExponentSpec::parse("1.5").unwrap();
    let n = 500u64;
    let s = consecutive_exp_sum(&c, 2, &FrequencyVector(vec![1, -1]), n, &PrecisionPolicy::default()).unwrap();
    let mut want = Complex64::new(0.0, 0.0);
    for j in n..2 * n {
        let (a, b) = (j as f64, (j + 1) as f64);
        let t = (a * a.sqrt() - b * b.sqrt()) / 2.0;
        want += Complex64::from_polar(1.0, TAU * t);
    }
    assert!((s.sum.value - want).norm() < 1e-8, "{:?} vs {want}", s.sum.value);
}

#[test]
fn frac_mul_matches_exact_rationals() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..2000 {
        let a: f64 = rng.gen::<f64>() * 4.0 - 2.0;
        let k: i128 = rng.gen::<i64>() as i128 * rng.gen_range(-1_000_000i128..1_000_000);
        let exact = BigRational::from_float(a).unwrap() * BigRational::from_integer(k.into());
        let fr = &exact - BigRational::from_integer(exact.round().to_integer());
        let got = frac_mul(a, k);
        let diff = (fr.to_f64().unwrap() - got).abs();
        assert!(diff.min(1.0 - diff) < 1e-14, "a={a} k={k}");
    }
}

#[test]
fn weyl_examples() {
    let s = weyl_sum(&[0.0, 0.5], 1, 10).unwrap();
    assert_eq!(s.value, Complex64::new(0.0, 0.0));
    let s = weyl_sum(&[0.0, 0.0, 2f64.sqrt()], 1, 10_000).unwrap();
    assert!(s.normalized < 0.05, "{}", s.normalized);
    let s = weyl_sum(&[0.5, 3.0, 0.5], 2, 1000).unwrap();
    assert_eq!(s.value, Complex64::new(1000.0, 0.0));
    assert!(matches!(weyl_sum(&[1.0], 1, 10), Err(Error::DegreeZero)));
    assert!(weyl_sum(&[0.0, 1.0], 0, 10).is_err());
}

#[test]
fn weyl_bound_examples() {
    let b = weyl_bound(2, 10_000, 100, 1_000_000, 1).unwrap();
    assert!((b - 0.02f64.sqrt()).abs() < 1e-12);
    let n = 1000;
    let b = weyl_bound(1, n, n, n, 1).unwrap();
    assert!((b - (1.0 / n as f64 + 1.0)).abs() < 1e-12);
    assert!(matches!(weyl_bound(2, 100, 100, 1000, 1), Err(Error::SideConditionViolated(_))));
    assert!(matches!(weyl_bound(2, 10_000, 100, 50, 1), Err(Error::SideConditionViolated(_))));
}

#[test]
fn weyl_sums_stay_within_a_fixed_multiple_of_the_bound() {
    // Leading coefficient p/q + tiny, with R as large as the side condition allows.
    for &(p, qq) in &[(1i64, 101u64), (37, 211), (100, 401), (333, 1009), (1234, 4099)] {
        for h in 1..=3u64 {
            let r = qq / (4 * h);
            let alpha = p as f64 / qq as f64 + 1e-9;
            let n = 20_000;
            let s = weyl_sum(&[0.3, 0.7, alpha], h as i64, n).unwrap();
            let b = weyl_bound(2, qq, r, n, h).unwrap();
            assert!(s.normalized <= 50.0 * b, "q={qq} h={h}: {} vs {b}", s.normalized);
        }
    }
}

#[test]
fn discrepancy_examples() {
    assert_eq!(discrepancy_1d_exact(&[0.5]).unwrap(), 1.0);
    assert_eq!(discrepancy_1d_exact(&[0.0; 7]).unwrap(), 1.0);
    let n = 64;
    let grid: Vec<f64> = (1..=n).map(|i| (2 * i - 1) as f64 / (2 * n) as f64).collect();
    assert!((discrepancy_1d_exact(&grid).unwrap() - 1.0 / n as f64).abs() < 1e-15);
    assert!(matches!(discrepancy_1d_exact(&[]), Err(Error::EmptySet)));
    let s = star_discrepancy_1d(&grid).unwrap();
    assert!((s - 0.5 / n as f64).abs() < 1e-15);
}

#[test]
fn sorted_formula_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let n = rng.gen_range(1..150);
        let xs = random_points(&mut rng, n);
        let exact = discrepancy_1d_exact(&xs).unwrap();
        assert!((exact - brute_1d(&xs)).abs() < 1e-12);
        let md = discrepancy_md_brute(&PointSet::from_1d(xs.clone()).unwrap()).unwrap();
        assert!((exact - md).abs() < 1e-12);
        let star = star_discrepancy_1d(&xs).unwrap();
        assert!(star <= exact + 1e-15 && exact <= 2.0 * star + 1e-15);
    }
}

#[test]
fn box_discrepancy_matches_enumeration() {
    assert_eq!(discrepancy_md_brute(&PointSet::from_points(&[vec![0.5, 0.5]]).unwrap()).unwrap(), 1.0);
    let origin = PointSet::from_points(&vec![vec![0.0, 0.0]; 5]).unwrap();
    assert_eq!(discrepancy_md_brute(&origin).unwrap(), 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..60 {
        let k = if trial % 3 == 0 { 3 } else { 2 };
        let n = rng.gen_range(1..if k == 3 { 4 } else { 7 });
        let pts: Vec<Vec<f64>> = (0..n).map(|_| random_points(&mut rng, k)).collect();
        let got = discrepancy_md_brute(&PointSet::from_points(&pts).unwrap()).unwrap();
        let want = brute_boxes(&pts);
        assert!((got - want).abs() < 1e-12, "{pts:?}: {got} vs {want}");
    }
    let big = PointSet::from_1d(vec![0.1; 2001]).unwrap();
    assert!(matches!(discrepancy_md_brute(&big), Err(Error::TooLarge { .. })));
}

#[test]
fn etks_dominates_discrepancy() {
    let pts = PointSet::from_1d((0..100).map(|i| f64::from(i) / 100.0).collect()).unwrap();
    let d = discrepancy_1d_exact(&(0..100).map(|i| f64::from(i) / 100.0).collect::<Vec<_>>()).unwrap();
    let b = etks_bound(&pts, 10).unwrap();
    // Only h that are multiples of 100 see these points; none for H = 10.
    assert!((b - 1.5 * 2.0 / 11.0).abs() < 1e-12);
    assert!(b >= d);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let pts: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let set = PointSet::from_points(&pts).unwrap();
        assert!(etks_bound(&set, 4).unwrap() >= discrepancy_md_brute(&set).unwrap());
    }
    assert!(etks_bound(&pts, 0).is_err());
}

#[test]
fn perturbation_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let x: Vec<f64> = (0..500).map(|_| rng.gen()).collect();
    let r = perturbation_check(&x, &[0.0; 500], 0.0).unwrap();
    assert_eq!(r.d_x, r.d_y);
    assert!(r.holds);
    // Pull everything toward 0.5 by up to 0.1.
    let eta: Vec<f64> = x.iter().map(|&v| (0.5 - v).clamp(-0.1, 0.1)).collect();
    assert!(perturbation_check(&x, &eta, 0.1).unwrap().holds);
    let mut bad = vec![0.0; 500];
    bad[17] = 0.2;
    assert!(matches!(perturbation_check(&x, &bad, 0.1), Err(Error::DeltaViolated { index: 17 })));
}

#[test]
fn dirichlet_examples() {
    assert_eq!(dirichlet_approx(&q("0.5"), 10).unwrap(), (BigInt::from(1), 2));
    let pi = QuadraticNumber::rational(BigRational::from_float(std::f64::consts::PI).unwrap());
    assert_eq!(dirichlet_approx(&pi, 10).unwrap(), (BigInt::from(22), 7));
    assert_eq!(dirichlet_approx(&q("(sqrt(5)-1)/2"), 100).unwrap(), (BigInt::from(55), 89));
    assert_eq!(dirichlet_approx(&q("-2.5"), 1).unwrap(), (BigInt::from(-3), 1));
    assert!(dirichlet_approx(&pi, 0).is_err());
}

/// Closest fraction with denominator ≤ Q by trying every denominator.
fn best_by_search(alpha: &BigRational, q_max: u64) -> (BigInt, u64) {
    let mut best: Option<(BigRational, BigInt, u64)> = None;
    for qq in 1..=q_max {
        let scaled = alpha * BigRational::from_integer(qq.into());
        for p in [scaled.floor().to_integer(), scaled.ceil().to_integer()] {
            let err = (alpha - BigRational::new(p.clone(), qq.into())).abs();
            if best.as_ref().is_none_or(|(e, _, _)| &err < e) {
                best = Some((err, p, qq));
            }
        }
    }
    let (_, p, qq) = best.unwrap();
    let g = p.gcd(&BigInt::from(qq));
    (p / &g, qq / g.to_u64().unwrap())
}

#[test]
fn best_approximation_matches_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..300 {
        let a = BigRational::new(rng.gen_range(-5000i64..5000).into(), rng.gen_range(1i64..3000).into());
        let qm = rng.gen_range(1..60);
        let got = best_approximation(&QuadraticNumber::rational(a.clone()), qm).unwrap();
        assert_eq!(got, best_by_search(&a, qm), "{a} Q={qm}");
    }
}

#[test]
fn poly_bound_examples() {
    let coeffs = vec![q("0"), q("sqrt(2)"), q("sqrt(3)")];
    let approx = |alpha: &QuadraticNumber, bound: u64| {
        let (p, qq) = dirichlet_approx(alpha, bound).unwrap();
        RationalApprox { p, q: qq, bound }
    };
    let a1 = approx(&coeffs[1], 1000);
    let a2 = approx(&coeffs[2], 500);
    let n = 10_000u64;
    let got = poly_disc_bound(&coeffs, &[a1.clone(), a2.clone()], 2, n).unwrap();
    let q2 = a2.q as f64;
    let want = (std::f64::consts::E * q2).ln() * (q2.powf(-0.5) + q2 / n as f64).sqrt();
    assert!((got - want).abs() < 1e-12 * want);

    let got = poly_disc_bound(&coeffs, &[a1.clone(), a2.clone()], 1, n).unwrap();
    let q1 = a1.q as f64;
    let want = q2 * (std::f64::consts::E * q1).ln() * (q1.powf(-0.5) + q1 / n as f64)
        + q1.sqrt() * (n as f64).powi(2) / 500.0;
    assert!((got - want).abs() < 1e-12 * want);

    let wrong = RationalApprox {
        p: BigInt::from(3),
        q: 2,
        bound: 10,
    };
    assert!(matches!(
        poly_disc_bound(&coeffs, &[wrong, a2], 1, n),
        Err(Error::BadApproximation(_))
    ));
    assert!(matches!(poly_disc_bound(&coeffs[..1], &[], 1, n), Err(Error::DegreeZero)));
}

proptest! {
    #[test]
    fn dirichlet_inequality_holds(bits in any::<u64>(), exp in -20i32..20, q_max in 1u64..1_000_000) {
        let a = (bits >> 11) as f64 / (1u64 << 53) as f64 * 2f64.powi(exp);
        let alpha = QuadraticNumber::rational(BigRational::from_float(a).unwrap());
        let (p, qq) = dirichlet_approx(&alpha, q_max).unwrap();
        let approx = RationalApprox { p, q: qq, bound: q_max };
        prop_assert!(approx.validate(&alpha).is_ok());
    }

    #[test]
    fn surd_convergents_satisfy_dirichlet(d in 2u64..50, num in -20i64..20, q_max in 1u64..100_000) {
        let alpha = QuadraticNumber::sqrt(d).add(&QuadraticNumber::integer(num)).unwrap();
        let (p, qq) = dirichlet_approx(&alpha, q_max).unwrap();
        let approx = RationalApprox { p, q: qq, bound: q_max };
        prop_assert!(approx.validate(&alpha).is_ok());
    }

    #[test]
    fn exp_sum_is_bounded_by_n(xs in proptest::collection::vec(0.0f64..1.0, 1..300), h in -50i64..50) {
        let pts = PointSet::from_1d(xs).unwrap();
        let s = exp_sum(&pts, &FrequencyVector(vec![h])).unwrap();
        prop_assert!(s.value.norm() <= pts.len() as f64 * (1.0 + 1e-12));
    }
}
