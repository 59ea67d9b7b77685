use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qaxiom::context::{context_from_observable, ContextRegistry};
use qaxiom::ensemble::{born_distribution, QuantumState};
use qaxiom::gns::{GnsSpace, StateFunctional};
use qaxiom::kochen_specker::{is_admissible, ks_noncontextual_search, RaySet};
use qaxiom::oscillator::{fock_oracle_green, default_cutoff, wick_green};
use qaxiom::random::{random_element, random_hermitian, random_unit_vector};
use qaxiom::{AlgebraDescriptor, C64};

fn algebra(sizes: Vec<usize>) -> std::sync::Arc<AlgebraDescriptor> {
    AlgebraDescriptor::new(sizes).unwrap()
}

fn block_sizes() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=3, 1..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cstar_identity(sizes in block_sizes(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_element(&algebra(sizes), &mut rng);
        let n = r.norm();
        let lhs = (&r.adjoint() * &r).norm();
        prop_assert!((lhs - n * n).abs() <= 1e-10 * n.max(1.0).powi(2));
    }

    #[test]
    fn involution_is_antimultiplicative(sizes in block_sizes(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alg = algebra(sizes);
        let r = random_element(&alg, &mut rng);
        let s = random_element(&alg, &mut rng);
        let lhs = (&r * &s).adjoint();
        let rhs = &s.adjoint() * &r.adjoint();
        prop_assert!((&lhs - &rhs).max_abs() < 1e-12);
        prop_assert!((&r.adjoint().adjoint() - &r).max_abs() == 0.0);
    }

    #[test]
    fn born_probabilities_sum_to_one(sizes in block_sizes(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alg = algebra(sizes.clone());
        let registry = ContextRegistry::new();
        let ctx = context_from_observable(&random_hermitian(&alg, &mut rng), &registry).unwrap();
        // a state vector confined to the first block
        let mut v = qaxiom::CVector::zeros(alg.dimension());
        let u = random_unit_vector(sizes[0], &mut rng);
        v.rows_mut(0, sizes[0]).copy_from(&u);
        let psi = QuantumState::new(alg, v).unwrap();
        let p = born_distribution(&psi, &ctx).unwrap();
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gns_reproduces_functional(n in 1usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alg = AlgebraDescriptor::full(n);
        let psi = QuantumState::new(alg.clone(), random_unit_vector(n, &mut rng)).unwrap();
        let f = StateFunctional::from_vector_state(&psi);
        let space = GnsSpace::build(&f);
        prop_assert_eq!(space.rank(), n);
        let s = random_element(&alg, &mut rng);
        let got = space.vacuum_expectation(&s).unwrap();
        prop_assert!((got - f.value(&s)).norm() < 1e-10 * s.norm().max(1.0));
    }

    #[test]
    fn wick_matches_fock(times in prop::collection::vec(-4.0f64..4.0, 2..=4), omega in 0.3f64..3.0) {
        let w = wick_green(&times, omega).unwrap();
        let f = fock_oracle_green(&times, omega, default_cutoff(times.len())).unwrap();
        prop_assert!((w - f).norm() < 1e-9);
        if times.len() % 2 == 1 {
            prop_assert_eq!(w, C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn rotated_triads_are_colourable(a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let (ca, sa, cb, sb) = (a.cos(), a.sin(), b.cos(), b.sin());
        let rays = RaySet::new(vec![
            [ca, sa, 0.0],
            [-sa, ca, 0.0],
            [0.0, 0.0, 1.0],
            [cb, 0.0, sb],
            [-sb, 0.0, cb],
        ]);
        prop_assume!(rays.is_ok());
        let rays = rays.unwrap();
        if rays.triads().is_empty() {
            return Ok(());
        }
        let rep = ks_noncontextual_search(&rays).unwrap();
        prop_assert!(rep.is_sat());
        prop_assert!(is_admissible(&rays, rep.assignment().unwrap()));
    }
}
