mod common;

use common::*;
use dlyap_core::matcore::max_abs;
use dlyap_core::odec::{state_count, OdecOperator};
use dlyap_core::Matrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_diff(a: &dlyap_core::Vector, b: &dlyap_core::Vector) -> f64 {
    (a - b).amax()
}

#[test]
fn operator_matches_block_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=3);
        let n_d = rng.random_range(1..=3);
        let sys = random_system(&mut rng, n, n_d);
        let op = OdecOperator::assemble(&sys).unwrap();
        assert_eq!(op.n_s(), state_count(n, n_d));
        assert_eq!(op.n_s(), 2 * n * n + 4 * n * n_d);

        let w = random_blocks(&mut rng, n, n_d);
        let refs: Vec<&Matrix> = w.iter().collect();
        let d = literal_dynamics(&sys, &w);
        let drefs: Vec<&Matrix> = d.iter().collect();
        worst = worst.max(max_diff(&(op.e() * stack(&refs)), &stack(&drefs)));

        // Rows 2-6 on arbitrary endpoint pairs; row 1 with Ω3(0) = Ω6(h) = 0,
        // which every admissible pair satisfies.
        let mut at0 = random_blocks(&mut rng, n, n_d);
        let mut ath = random_blocks(&mut rng, n, n_d);
        let full = op.f1() * stack(&at0.iter().collect::<Vec<_>>())
            + op.f2() * stack(&ath.iter().collect::<Vec<_>>());
        let lit = literal_boundary(&sys, &at0, &ath);
        let lit = stack(&lit.iter().collect::<Vec<_>>());
        let first = n * n;
        worst = worst.max(max_diff(
            &full.rows(first, full.len() - first).into_owned(),
            &lit.rows(first, lit.len() - first).into_owned(),
        ));

        at0[2].fill(0.0);
        ath[5].fill(0.0);
        let pinned = op.f1() * stack(&at0.iter().collect::<Vec<_>>())
            + op.f2() * stack(&ath.iter().collect::<Vec<_>>());
        let lit = literal_boundary(&sys, &at0, &ath);
        worst = worst.max(max_diff(
            &pinned.rows(0, first).into_owned(),
            &stack(&[&lit[0]]),
        ));
    }
    assert!(worst <= 1e-13, "max deviation {worst:e}");
}

#[test]
fn combined_matrix_is_f1_plus_f2_exp() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let sys = random_system(&mut rng, 2, 1);
        let op = OdecOperator::assemble(&sys).unwrap();
        let expected = op.f1() + op.f2() * taylor_expm(&(op.e() * sys.h));
        assert!(max_abs(&(op.g() - &expected)) <= 1e-11 * max_abs(&expected).max(1.0));
    }
}
