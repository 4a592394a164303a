use std::sync::Arc;

use brsl::discretize::{conjugate_weight, midpoint_nodes, BoxGrid, Conjugation, OperatorMatrix, SpaceTag};
use brsl::experiment::ExperimentConfig;
use brsl::kernels::{symbol_h, symbols::ratio_bounds, HalfSpacePoint};
use brsl::matrix_io::{read_matrix_from, write_matrix_to};
use brsl::special_fn::{bessel_j, gamma};
use brsl::spectra::{singular_values_of, submajorize_check, weak_quasinorm, weyl_fit, SingularValueSeq};
use brsl::symbol::Symbol;
use faer::Mat;
use proptest::prelude::*;

fn seq() -> impl Strategy<Value = SingularValueSeq> {
    prop::collection::vec(0.0..10.0f64, 1..40).prop_map(|v| SingularValueSeq::from_unsorted(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sorted_after_construction(s in seq()) {
        prop_assert!(s.values().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn quasinorm_is_homogeneous(s in seq(), c in 0.0..5.0f64, p in 0.5..4.0f64) {
        let a = weak_quasinorm(&s.scaled(c), p).unwrap();
        let b = c * weak_quasinorm(&s, p).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
    }

    #[test]
    fn quasinorm_dominates_largest(s in seq(), p in 0.5..4.0f64) {
        prop_assert!(weak_quasinorm(&s, p).unwrap() >= s.values()[0]);
    }

    #[test]
    fn submajorization_is_reflexive_and_monotone(s in seq(), c in 0.0..1.0f64) {
        prop_assert!(submajorize_check(&s, &s));
        prop_assert!(submajorize_check(&s.scaled(c), &s));
    }

    #[test]
    fn submajorization_is_transitive(a in seq(), b in seq(), c in seq()) {
        if submajorize_check(&a, &b) && submajorize_check(&b, &c) {
            prop_assert!(submajorize_check(&a, &c));
        }
    }

    #[test]
    fn fit_recovers_power_laws(c in 0.1..10.0f64, e in -2.0..-0.1f64, len in 50usize..400) {
        let s = SingularValueSeq::new((0..len).map(|k| c * ((k + 1) as f64).powf(e)).collect()).unwrap();
        let fit = weyl_fit(&s, -1.0 / e, (3, len - 1)).unwrap();
        prop_assert!((fit.exponent - e).abs() < 1e-10);
        prop_assert!((fit.coefficient / c - 1.0).abs() < 1e-9);
        prop_assert!((fit.pinned_coefficient / c - 1.0).abs() < 1e-9);
    }

    #[test]
    fn midpoint_cells_tile_the_interval(a in -5.0..5.0f64, len in 0.01..10.0f64, m in 1usize..200) {
        let (nodes, weights) = midpoint_nodes(a, a + len, m).unwrap();
        prop_assert!((weights.iter().sum::<f64>() - len).abs() < 1e-12 * len.max(1.0));
        prop_assert!(nodes.iter().all(|x| *x > a && *x < a + len));
        prop_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn gamma_recurrence(x in 0.1..20.0f64) {
        let (a, b) = (gamma(x + 1.0), x * gamma(x));
        prop_assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn bessel_recurrence(nu in 1.0..6.0f64, x in 0.5..60.0f64) {
        let lhs = bessel_j(nu - 1.0, x).unwrap() + bessel_j(nu + 1.0, x).unwrap();
        let rhs = 2.0 * nu / x * bessel_j(nu, x).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-11 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn small_h_pins_the_height_ratio(
        x1 in -3.0..3.0f64, x2 in 0.01..100.0f64, dx in -1.0..1.0f64, u in -1.2..1.2f64,
    ) {
        let x = HalfSpacePoint::new(vec![x1, x2]).unwrap();
        let y = HalfSpacePoint::new(vec![x1 + dx * x2, x2 * u.exp()]).unwrap();
        if symbol_h(&x, &y) <= 1.0 {
            let (lo, hi) = ratio_bounds();
            let r = x.last() / y.last();
            prop_assert!(r >= lo && r <= hi);
        }
    }

    #[test]
    fn matrix_files_round_trip(m in 1usize..5, vals in prop::collection::vec(-1e3..1e3f64, 625), weighted: bool) {
        let grid = Arc::new(BoxGrid::uniform(&[(0.0, 1.0), (0.5, 1.0)], m).unwrap());
        let n = grid.len();
        let entries = Mat::from_fn(n, n, |i, j| vals[i * n + j]);
        let space = if weighted { SpaceTag::Weighted } else { SpaceTag::Unweighted };
        let a = OperatorMatrix::from_entries(entries.clone(), grid, space, 1.3).unwrap();
        let mut buf = Vec::new();
        write_matrix_to(&mut buf, &a).unwrap();
        let back = read_matrix_from(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(back.space, space);
        prop_assert_eq!(back.entries, entries);
    }

    #[test]
    fn conjugation_keeps_singular_values(vals in prop::collection::vec(-1.0..1.0f64, 81), lambda in 0.1..3.0f64) {
        let grid = Arc::new(BoxGrid::uniform(&[(0.0, 1.0), (0.2, 3.0)], 3).unwrap());
        let a = OperatorMatrix::from_entries(Mat::from_fn(9, 9, |i, j| vals[9 * i + j]), grid, SpaceTag::Weighted, lambda).unwrap();
        let b = conjugate_weight(&a, Conjugation::ToUnweighted).unwrap();
        let (sa, sb) = (singular_values_of(a.entries()).unwrap(), singular_values_of(b.entries()).unwrap());
        for (x, y) in sa.values().iter().zip(sb.values()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        let back = conjugate_weight(&b, Conjugation::ToWeighted).unwrap();
        prop_assert!(back.linear_combination(1.0, &a, -1.0).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn symbols_round_trip_and_scale(
        c1 in 0.2..0.8f64, c2 in 0.7..1.3f64, r in 0.05..0.2f64, factor in -3.0..3.0f64,
        px in 0.0..1.0f64, py in 0.5..1.5f64,
    ) {
        let f = Symbol::Sum { terms: vec![Symbol::cosine(vec![c1, c2], r), Symbol::gaussian(vec![c2 - 0.5, c1 + 0.5], r)] };
        let back: Symbol = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        let x = [px, py];
        prop_assert_eq!(back.value(&x), f.value(&x));
        let scaled = f.clone().scaled(factor).value(&x);
        prop_assert!((scaled - factor * f.value(&x)).abs() < 1e-14);
    }

    #[test]
    fn config_hash_tracks_content(seed: u64, lo in 0.1..0.4f64) {
        let mut a = ExperimentConfig::default_experiment();
        a.seed = seed;
        let b = ExperimentConfig::from_json(&a.to_json()).unwrap();
        prop_assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.fit.lo_exponent = lo;
        prop_assert_ne!(a.hash(), c.hash());
    }
}
