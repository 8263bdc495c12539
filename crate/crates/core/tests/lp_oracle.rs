mod common;

use common::{lp_feasible, random_bounded_lp, rng, vertex_enumeration_optimum};
use mvtsp::lp::{solve, verify_basic, LinearProgram, LpError};
use mvtsp::rational::{rat, ratio, Rational};
use num_traits::Zero;
use rand::Rng;

#[test]
fn optimum_matches_vertex_enumeration() {
    let mut feasible = 0;
    for seed in 0..100 {
        let lp = random_bounded_lp(seed);
        match (solve(&lp), vertex_enumeration_optimum(&lp)) {
            (Ok(s), Some(best)) => {
                assert!(verify_basic(&lp, &s), "seed {seed}: not a vertex");
                assert_eq!(s.objective_value, best, "seed {seed}");
                feasible += 1;
            }
            (Err(LpError::Infeasible), None) => {}
            (got, want) => panic!("seed {seed}: solver {got:?}, enumeration {want:?}"),
        }
    }
    assert!(feasible >= 60, "only {feasible} feasible LPs in the sample");
}

#[test]
fn weak_duality_spot_checks() {
    // Any feasible point found by sampling the box cannot beat the optimum.
    let mut checked = 0;
    for seed in 0..100 {
        let lp = random_bounded_lp(seed);
        let Ok(s) = solve(&lp) else { continue };
        let mut r = rng(seed + 1000);
        for _ in 0..40 {
            let x: Vec<Rational> = (0..lp.num_vars()).map(|_| ratio(r.gen_range(-12..=20), 4)).collect();
            if lp_feasible(&lp, &x) {
                let v = lp.objective.iter().zip(&x).fold(Rational::zero(), |a, (c, v)| a + c * v);
                assert!(s.objective_value <= v, "seed {seed}");
                checked += 1;
            }
        }
    }
    assert!(checked > 100);
}

#[test]
fn two_vertex_tour_relaxation() {
    // Tours on two vertices with r = (1, 2): x = (loop0, edge, loop1),
    // x(S) = 3, degrees 2·x00 + x01 = 2 and x01 + 2·x11 = 4, x01 ≥ 1.
    let mut lp = LinearProgram::new(vec![rat(6), rat(3), rat(2)]);
    lp.add_row(vec![rat(1), rat(1), rat(1)], Some(rat(3)), Some(rat(3)));
    lp.add_row(vec![rat(2), rat(1), rat(0)], Some(rat(2)), Some(rat(2)));
    lp.add_row(vec![rat(0), rat(1), rat(2)], Some(rat(4)), Some(rat(4)));
    lp.add_row(vec![rat(0), rat(1), rat(0)], Some(rat(1)), None);
    for i in 0..3 {
        let mut c = vec![rat(0); 3];
        c[i] = rat(1);
        lp.add_row(c, Some(rat(0)), None);
    }
    let s = solve(&lp).unwrap();
    assert!(verify_basic(&lp, &s));
    assert_eq!(Some(s.objective_value.clone()), vertex_enumeration_optimum(&lp));
    // The feasible set is the segment x = (t, 2 − 2t, 1 + t), t ∈ [0, 1/2]; cost 8 + 2t.
    assert_eq!(s.values, vec![rat(0), rat(2), rat(1)]);
}

#[test]
fn degenerate_rows_do_not_cycle() {
    // Many redundant rows through the same vertex.
    let mut lp = LinearProgram::new(vec![rat(-1), rat(-1)]);
    for k in 1..=8 {
        lp.add_row(vec![rat(k), rat(1)], None, Some(rat(k)));
        lp.add_row(vec![rat(1), rat(k)], None, Some(rat(k)));
    }
    lp.add_row(vec![rat(1), rat(0)], Some(rat(0)), None);
    lp.add_row(vec![rat(0), rat(1)], Some(rat(0)), None);
    let s = solve(&lp).unwrap();
    assert!(verify_basic(&lp, &s));
    assert_eq!(Some(s.objective_value), vertex_enumeration_optimum(&lp));
}
