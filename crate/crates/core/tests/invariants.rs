mod common;

use common::*;
use dlyap_core::matcore::max_abs;
use dlyap_core::odec::uniform_grid;
use dlyap_core::{LyapunovSolution, Weight};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn solved(seed: u64, n: usize, n_d: usize) -> LyapunovSolution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sys = stabilize(random_system(&mut rng, n, n_d), 0.3);
    let q = Weight::new(random_symmetric(&mut rng, n)).unwrap();
    LyapunovSolution::solve(&sys, &q).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn p_is_transpose_symmetric(seed in any::<u64>(), n in 1usize..=3, n_d in 1usize..=2, frac in 0.0f64..=1.0) {
        let sol = solved(seed, n, n_d);
        let tau = frac * sol.h();
        let plus = sol.p_at(tau).unwrap();
        let minus = sol.p_at(-tau).unwrap();
        prop_assert_eq!(minus, plus.transpose());
        let p0 = sol.p_at(0.0).unwrap();
        prop_assert!(max_abs(&(&p0 - p0.transpose())) <= 1e-9 * max_abs(&p0).max(1.0));
    }

    #[test]
    fn flip_and_endpoint_invariants(seed in any::<u64>(), n in 1usize..=3, n_d in 1usize..=2) {
        let sol = solved(seed, n, n_d);
        let scale = max_abs(&sol.p_at(0.0).unwrap()).max(1.0);
        let flip = sol.flip_residuals(&uniform_grid(sol.h(), 11)).unwrap();
        prop_assert!(flip.max() <= 1e-8 * scale, "{:?}", flip);
        let ends = sol.endpoint_residuals().unwrap();
        prop_assert!(ends.boundary_max() <= 1e-9 * scale, "{:?}", ends);
    }

    #[test]
    fn solution_is_linear_in_weight(seed in any::<u64>(), alpha in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = stabilize(random_system(&mut rng, 2, 2), 0.3);
        let q1 = random_symmetric(&mut rng, 2);
        let q2 = random_symmetric(&mut rng, 2);
        let s1 = LyapunovSolution::solve(&sys, &Weight::new(q1.clone()).unwrap()).unwrap();
        let s2 = LyapunovSolution::solve(&sys, &Weight::new(q2.clone()).unwrap()).unwrap();
        let combo = LyapunovSolution::solve(&sys, &Weight::new(&q1 * alpha + &q2).unwrap()).unwrap();
        let diff = combo.omega0().stacked() - (s1.omega0().stacked() * alpha + s2.omega0().stacked());
        let scale = s1.omega0().stacked().amax().max(s2.omega0().stacked().amax());
        prop_assert!(diff.amax() <= 1e-10 * scale.max(1e-300) * alpha.abs().max(1.0));
    }
}
