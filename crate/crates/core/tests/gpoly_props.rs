mod common;

use std::collections::BTreeSet;

use common::{box_points, graphic_points_by_definition, in_tables, int_in_tables, paramodular_by_definition, rng};
use mvtsp::gpoly::{graphic_mvtsp_border, BorderPair, GpolyError, GroundSet, IntVector};
use mvtsp::instances::gen_paramodular_with_point;
use mvtsp::oracles::{integer_points, OracleBudget};
use mvtsp::rational::{ratio, Ext, Rational};
use proptest::prelude::*;
use rand::Rng;

fn tables(pair: &BorderPair) -> (Vec<Ext>, Vec<Ext>) {
    pair.tables().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn contraction_adds_back(seed in 0u64..10_000, size in 1usize..=4, xs in prop::collection::vec(-3i64..=3, 4)) {
        let (pair, z) = gen_paramodular_with_point(seed, size);
        let contracted = pair.contract(&z).unwrap();
        let x = IntVector(xs[..size].to_vec());
        let (p, b) = tables(&pair);
        if contracted.contains(&x).unwrap() {
            prop_assert!(int_in_tables(&p, &b, &x.add(&z)));
        }
        // The contracted pair is again paramodular.
        let (cp, cb) = tables(&contracted);
        prop_assert!(paramodular_by_definition(&cp, &cb));
    }

    #[test]
    fn deletion_is_projection(seed in 0u64..10_000, size in 2usize..=4, which in 0usize..4) {
        let (pair, point) = gen_paramodular_with_point(seed, size);
        let lo: Vec<i64> = point.0.iter().map(|v| v - 2).collect();
        let hi: Vec<i64> = point.0.iter().map(|v| v + 2).collect();
        let fin = |v: &[i64]| v.iter().map(|&x| Ext::Fin(x)).collect::<Vec<_>>();
        let bounded = pair.intersect_box(&fin(&lo), &fin(&hi)).unwrap();
        let s = which % size;
        let deleted = bounded.delete(1 << s);
        let (p, b) = tables(&bounded);
        let projected: BTreeSet<Vec<i64>> = box_points(&lo, &hi)
            .into_iter()
            .filter(|x| int_in_tables(&p, &b, x))
            .map(|x| x.0.iter().enumerate().filter(|&(i, _)| i != s).map(|(_, &v)| v).collect())
            .collect();
        let got: BTreeSet<Vec<i64>> =
            integer_points(&deleted, &OracleBudget::default()).unwrap().into_iter().map(|x| x.0).collect();
        prop_assert_eq!(got, projected);
    }

    #[test]
    fn box_intersection_matches_filtering(seed in 0u64..10_000, size in 1usize..=4) {
        let (pair, point) = gen_paramodular_with_point(seed, size);
        let mut r = rng(seed ^ 0xb0c5);
        let lo: Vec<i64> = point.0.iter().map(|v| v - r.gen_range(0..=3)).collect();
        let hi: Vec<i64> = lo.iter().map(|v| v + r.gen_range(0..=3)).collect();
        let fin = |v: &[i64]| v.iter().map(|&x| Ext::Fin(x)).collect::<Vec<_>>();
        let (p, b) = tables(&pair);
        let want: BTreeSet<Vec<i64>> =
            box_points(&lo, &hi).into_iter().filter(|x| int_in_tables(&p, &b, x)).map(|x| x.0).collect();
        match pair.intersect_box(&fin(&lo), &fin(&hi)) {
            Ok(q) => {
                let got: BTreeSet<Vec<i64>> =
                    integer_points(&q, &OracleBudget::default()).unwrap().into_iter().map(|x| x.0).collect();
                prop_assert_eq!(got, want);
            }
            Err(GpolyError::EmptyIntersection { .. }) => prop_assert!(want.is_empty()),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn paramodularity_check_agrees(seed in 0u64..100_000) {
        // Random integer tables on three elements; most are not paramodular.
        let mut r = rng(seed);
        let mut p = vec![Ext::Fin(0); 8];
        let mut b = vec![Ext::Fin(0); 8];
        for y in 1..8 {
            let lo = r.gen_range(-3..=2);
            p[y] = Ext::Fin(lo);
            b[y] = Ext::Fin(lo + r.gen_range(0..=3));
        }
        let ours = paramodular_by_definition(&p, &b);
        let lib = BorderPair::explicit(GroundSet::indexed(3), p, b);
        prop_assert_eq!(lib.is_ok(), ours);
    }
}

#[test]
fn finds_cross_inequality_violations() {
    // Search for tables with submodular b and supermodular p whose only
    // failure is the cross-inequality, and check they are rejected.
    let mut found = 0;
    for seed in 0..20_000u64 {
        let mut r = rng(seed);
        let b: Vec<Ext> = (0..8u32).map(|y| Ext::Fin(y.count_ones() as i64 * 2)).collect();
        let mut p = vec![Ext::Fin(0); 8];
        for y in 1..8 {
            p[y] = Ext::Fin(r.gen_range(0..=4));
        }
        if paramodular_by_definition(&p, &b) {
            continue;
        }
        let super_ok = (0..8).all(|x| (0..8).all(|y| p[x] + p[y] <= p[x | y] + p[x & y]));
        if !super_ok {
            continue;
        }
        found += 1;
        assert!(matches!(
            BorderPair::explicit(GroundSet::indexed(3), p, b.clone()),
            Err(GpolyError::NotParamodular { .. })
        ));
    }
    assert!(found > 0);
}

#[test]
fn rational_points_add_back_after_contraction() {
    for seed in 0..200 {
        let size = 1 + (seed as usize % 4);
        let (pair, z) = gen_paramodular_with_point(seed, size);
        let (cp, cb) = tables(&pair.contract(&z).unwrap());
        let (p, b) = tables(&pair);
        let mut r = rng(seed);
        for _ in 0..20 {
            let x: Vec<Rational> = (0..size).map(|_| ratio(r.gen_range(-6..=6), 2)).collect();
            if in_tables(&cp, &cb, &x) {
                let shifted: Vec<Rational> = x.iter().zip(&z.0).map(|(v, &k)| v + Rational::from_integer(k.into())).collect();
                assert!(in_tables(&p, &b, &shifted), "seed {seed}");
            }
        }
    }
}

#[test]
fn graphic_border_small_cases() {
    for (n, r) in [(1usize, vec![3i64]), (2, vec![1, 1]), (2, vec![2, 3]), (3, vec![1, 1, 1]), (3, vec![2, 1, 2])] {
        let pair = graphic_mvtsp_border(n, &r);
        let got: BTreeSet<Vec<i64>> =
            integer_points(&pair, &OracleBudget::default()).unwrap().into_iter().map(|x| x.0).collect();
        assert_eq!(got, graphic_points_by_definition(n, &r), "n={n} r={r:?}");
        let (p, b) = tables(&pair);
        assert!(paramodular_by_definition(&p, &b));
    }
}
