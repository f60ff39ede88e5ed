use mindetect::construction::build_b;
use mindetect::detector::{build_umd_detector, eval_detector, order_vertices, FunctionKind, Monomial};
use mindetect::metric::{d_euclid, dbar_block, fraction_string, parse_rational, Letter};
use mindetect::symbolic::{dbar_truncated, hit_positions, witness_check};
use mindetect::toeplitz::{enumerate_rationals, rationals, toeplitz_term, two_adic_level, v_enumeration};
use mindetect::{build_toy, build_x, Block, FunctionSpec, LazySequence, Point2, Rational, Space, UnitRational};
use num_bigint::BigUint;
use proptest::prelude::*;

const TOL: f64 = 1e-12;

fn point() -> impl Strategy<Value = Point2> {
    (1i64..=64, 1i64..=64).prop_flat_map(|(dx, dy)| {
        (0..=dx, 0..=dy).prop_map(move |(nx, ny)| Point2::from_fractions(nx, dx, ny, dy).unwrap())
    })
}

fn points(len: usize) -> impl Strategy<Value = Block<Point2>> {
    prop::collection::vec(point(), len).prop_map(|v| Block::new(v).unwrap())
}

fn unit_rational() -> impl Strategy<Value = UnitRational> {
    (1i64..=1000).prop_flat_map(|q| (0..=q).prop_map(move |p| UnitRational::new(Rational::new(p, q)).unwrap()))
}

/// Polynomials with distinct corner values inside (0,1) plus terms that
/// vanish at every corner.
fn polynomial() -> impl Strategy<Value = FunctionSpec> {
    (
        prop::sample::subsequence((1..100).collect::<Vec<u32>>(), 3).prop_shuffle(),
        -2.0f64..2.0,
        -2.0f64..2.0,
    )
        .prop_map(|(corners, xy, x2y)| {
            let v: Vec<f64> = corners.iter().map(|&c| c as f64 / 100.0).collect();
            let term = |coeff, x_pow, y_pow| Monomial { coeff, x_pow, y_pow };
            let terms = vec![
                term(v[0], 0, 0),
                term(v[1] - v[0], 1, 0),
                term(v[2] - v[0], 0, 1),
                term(xy, 1, 1),
                term(x2y, 2, 1),
            ];
            FunctionSpec::new(FunctionKind::Polynomial { terms }, "").unwrap()
        })
}

proptest! {
    #[test]
    fn euclid_is_a_metric(p in point(), q in point(), r in point()) {
        prop_assert_eq!(d_euclid(&p, &p), 0.0);
        prop_assert_eq!(d_euclid(&p, &q) == 0.0, p == q);
        prop_assert!((d_euclid(&p, &q) - d_euclid(&q, &p)).abs() <= TOL);
        prop_assert!(d_euclid(&p, &r) <= d_euclid(&p, &q) + d_euclid(&q, &r) + TOL);
        prop_assert!(d_euclid(&p, &q) <= Space::Square.diameter() + TOL);
    }

    #[test]
    fn dbar_is_a_bounded_metric(
        (a, b, c) in (1usize..12).prop_flat_map(|len| (points(len), points(len), points(len)))
    ) {
        let d = |x: &Block<Point2>, y: &Block<Point2>| dbar_block(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() <= TOL);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + TOL);
        let cap = Space::Square.diameter() * (1.0 - 0.5f64.powi(a.len() as i32));
        prop_assert!(d(&a, &b) <= cap + TOL);
    }

    #[test]
    fn truncated_dbar_intervals_refine(m in 0u64..1 << 30, n in 0u64..1 << 30, depth in 1u32..40) {
        let s = build_x().sequence().clone();
        let coarse = dbar_truncated(&s.shift(m), &s.shift(n), depth).unwrap();
        let fine = dbar_truncated(&s.shift(m), &s.shift(n), depth + 1).unwrap();
        prop_assert!(coarse.contains(&fine, TOL), "{coarse:?} vs {fine:?}");
        prop_assert!(coarse.lo <= coarse.hi);
    }

    #[test]
    fn shift_composes_additively(m in 0u64..1 << 40, n in 0u64..1 << 40, j in 1u64..1 << 20, c in unit_rational()) {
        let x = build_x().sequence().clone();
        prop_assert_eq!(x.shift(m).shift(n).term(j), x.shift(m + n).term(j));
        let toy = build_toy(c).sequence().clone();
        prop_assert_eq!(toy.shift(m).shift(n).term(j), toy.shift(m + n).term(j));
        let big = BigUint::from(m) << 80u32;
        prop_assert_eq!(
            x.shift_big(&big).shift(n).term_big(&BigUint::from(j)),
            x.shift_big(&(&big + n)).term_big(&BigUint::from(j))
        );
    }

    #[test]
    fn toeplitz_blocks_recur_with_their_level_period(start in 1u64..1 << 20, len in 1u64..24, reps in 1u64..8) {
        let b = v_enumeration();
        let level = (start..start + len).map(|k| two_adic_level(k).unwrap()).max().unwrap();
        let period = 1u64 << (level + 1);
        for k in start..start + len {
            let here = toeplitz_term(&b, k).unwrap();
            prop_assert_eq!(&here, &toeplitz_term(&b, k + reps * period).unwrap());
            if k > reps * period {
                prop_assert_eq!(&here, &toeplitz_term(&b, k - reps * period).unwrap());
            }
        }
    }

    #[test]
    fn level_matches_the_congruence(j in 1u64..u64::MAX) {
        let p = two_adic_level(j).unwrap();
        prop_assert_eq!(j % (1u64 << (p - 1)), 0);
        prop_assert!(p == 64 || j % (1u64 << p) != 0);
    }

    #[test]
    fn enumerated_rationals_lie_in_the_unit_interval(n in 1u64..1 << 32) {
        let q = enumerate_rationals(n);
        prop_assert!(q >= Rational::from_integer(0) && q <= Rational::from_integer(1));
        prop_assert_eq!(rationals().item(n).get(), q);
    }

    #[test]
    fn fractions_round_trip(c in unit_rational()) {
        prop_assert_eq!(parse_rational(&fraction_string(&c.get())).unwrap(), c.get());
    }

    #[test]
    fn scan_and_witness_agree(
        c in unit_rational(),
        start in 1u64..64,
        len in 1usize..5,
        eps in 0.001f64..0.5,
        prefix in 80u64..400,
    ) {
        let s = build_toy(c).sequence().clone();
        let target = s.block_at(start, len).unwrap();
        let hits = hit_positions(&s, &target, eps, prefix);
        let window_start = start + 1;
        let report = witness_check(&s, &target, eps, window_start, prefix - start).unwrap();
        let later = hits.iter().filter(|&&h| h >= window_start).count() as u64;
        prop_assert_eq!(report.hits, later);
        prop_assert_eq!(report.verdict == mindetect::Verdict::WitnessFound, later == 0);
        prop_assert!(hits.contains(&start));
    }

    #[test]
    fn vertex_order_survives_increasing_reparameterization(spec in polynomial()) {
        let order = order_vertices(&spec);
        let [lo, mid, hi] = order.values;
        prop_assert!(lo < mid && mid < hi);
        let squared = FunctionSpec::new(
            FunctionKind::CompositionClamped { inner: Box::new(spec.kind.clone()), outer: vec![0.0, 0.0, 1.0] },
            "",
        )
        .unwrap();
        let reordered = order_vertices(&squared);
        prop_assert_eq!((order.lo, order.mid, order.hi), (reordered.lo, reordered.mid, reordered.hi));
        prop_assert_eq!(order.surrogate_edge, reordered.surrogate_edge);
    }

    #[test]
    fn detector_matches_values_on_balls_and_vanishes_off_support(
        start in 1u64..2000,
        len in 1usize..6,
        angle in 0.0f64..std::f64::consts::TAU,
        frac in 0.0f64..=1.0,
        probe in point(),
    ) {
        let s = build_x().sequence().clone();
        let d = build_umd_detector(&s, start, len).unwrap();
        let f = &d.f_ext;
        for (center, value) in f.centers.iter().zip(&f.values) {
            let at_center = eval_detector(&d, center);
            prop_assert_eq!(at_center.f, *value);
            prop_assert_eq!(at_center.g, 0.0);
            let (cx, cy) = center.to_f64();
            let r = frac * f.inner_radius;
            let (px, py) = (cx + r * angle.cos(), cy + r * angle.sin());
            if (0.0..=1.0).contains(&px) && (0.0..=1.0).contains(&py) {
                prop_assert!((f.eval(&approx_point(px, py)) - value).abs() <= TOL);
            }
        }
        let pair = eval_detector(&d, &probe);
        prop_assert!((0.0..=1.0).contains(&pair.g));
        prop_assert!((0.0..=1.0).contains(&pair.f));
        let far = f.centers.iter().all(|c| d_euclid(c, &probe) > f.outer_radius);
        if far {
            prop_assert_eq!(pair.f, 0.0);
        }
    }
}

/// Nearest point with denominator 2^40 that stays inside the ball it was
/// drawn from, up to rounding far below the tolerance.
fn approx_point(x: f64, y: f64) -> Point2 {
    let den = 1i64 << 40;
    let n = |v: f64| ((v * den as f64).round() as i64).clamp(0, den);
    Point2::from_fractions(n(x), den, n(y), den).unwrap()
}

#[test]
fn letter_spaces_are_tagged() {
    assert_eq!(<Point2 as Letter>::SPACE, Space::Square);
    assert_eq!(<UnitRational as Letter>::SPACE, Space::Interval);
    assert_eq!(build_b().term(1).points().len(), 3);
    let _: LazySequence<Point2> = build_x().sequence().clone();
}
