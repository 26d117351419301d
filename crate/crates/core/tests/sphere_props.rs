mod common;

use augustin::sphere::QUAD_TOL;
use augustin::*;
use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn averaged_capacity_dominates(ch in sizes().prop_flat_map(|(k, n)| channel(k, n)), a in 0.05f64..0.95, eps in 0.01f64..0.9) {
        let c = ConstrainedCapacity::new(&ch, &ConstraintSet::Simplex).unwrap();
        let av = averaged_capacity(&c, order(a), eps, QUAD_TOL).unwrap();
        prop_assert!(av.value >= c.capacity_at(a).unwrap() - 1e-8);
        prop_assert!(av.quadrature_error_estimate <= 1e-8);
    }

    #[test]
    fn exponents_ordered(ch in channel(2, 2), u in 0.0f64..1.0, eps in 0.01f64..0.3) {
        let c = ConstrainedCapacity::new(&ch, &ConstraintSet::Simplex).unwrap();
        let rate = u * c.capacity_at(1.0).unwrap();
        let e = sphere_packing_exponent(&c, rate).unwrap().exponent.to_f64();
        let ee = averaged_exponent(&c, rate, eps, QUAD_TOL).unwrap().exponent.to_f64();
        prop_assert!(e >= 0.0);
        prop_assert!(ee >= e - 1e-9);
    }

    #[test]
    fn exponent_nonincreasing_in_rate(ch in channel(2, 3), u in 0.0f64..0.9) {
        let c = ConstrainedCapacity::new(&ch, &ConstraintSet::Simplex).unwrap();
        let c1 = c.capacity_at(1.0).unwrap();
        let lo = sphere_packing_exponent(&c, u * c1).unwrap().exponent.to_f64();
        let hi = sphere_packing_exponent(&c, (u + 0.1) * c1).unwrap().exponent.to_f64();
        prop_assert!(hi <= lo + 1e-12);
    }

    #[test]
    fn hypothesis_testing_never_violated(
        comps in (1usize..=3).prop_flat_map(|n| prop::collection::vec((dist(2), dist(2)), n)),
        a in 0.05f64..0.95,
        k in 3u32..=6,
    ) {
        let s = ht_exhaustive(order(a), &comps, k).unwrap();
        prop_assert_eq!(s.violations, 0);
        prop_assert_eq!(s.events, 1u64 << (1u64 << comps.len()));
    }

    #[test]
    fn reference_inequalities(
        comps in prop::collection::vec(channel(2, 2), 2),
        word in prop::collection::vec(0usize..2, 2),
        a in prop_oneof![Just(0.3), Just(0.5), Just(0.7)],
    ) {
        let comps: Vec<Channel> = comps
            .into_iter()
            .map(|c| c.with_cost(vec![vec![0.0], vec![1.0]]).unwrap())
            .collect();
        let rho = 1.5;
        let fam = ReferenceFamily::new(&comps, &[rho], 0.2, 0.3).unwrap();
        let word = if word.iter().sum::<usize>() as f64 > rho { vec![0, word[1]] } else { word };
        let r = fam.check(order(a), 3, &word).unwrap();
        prop_assert!(r.divergence_bound - r.divergence >= -1e-7);
        prop_assert!(r.moment_bound - r.moment >= -1e-7);
    }
}

#[test]
fn oracle_refinement_approaches_solver() {
    let ch = Channel::from_matrix(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]], None).unwrap();
    let p = FiniteDist::new(vec![0.35, 0.65]).unwrap();
    let a = order(0.4);
    let exact = augustin_information(a, &ch, &p).unwrap();
    let mut prev = f64::INFINITY;
    for step in [0.2, 0.1, 0.05, 0.025, 0.0125] {
        let g = GridSpec {
            step,
            refine_rounds: 0,
            refine_factor: 0.1,
        };
        let (v, _) = min_over_q_grid(a, &ch, &p, &g).unwrap();
        assert!(v >= exact - 1e-14);
        assert!(v - exact <= prev - exact + 1e-15, "step {step}");
        prev = v;
    }
    let (v, _) = min_over_q_grid(a, &ch, &p, &GridSpec::default()).unwrap();
    assert!((v - exact).abs() <= 1e-10);
}

#[test]
fn worked_gamma_value() {
    let g = gamma_from_capacities(&[std::f64::consts::LN_2], 0.5, 3).unwrap();
    assert!((g - 9.0 * 3f64.cbrt()).abs() <= 1e-12);
    // saturation at k
    let g = gamma_from_capacities(&[3.0, 3.0], 0.999_999_999, 3).unwrap();
    assert!((g - 3.0 * 6f64.cbrt() * 3.0).abs() <= 1e-6);
    assert!((gamma_tilde(3.0, 2, 0.999_999_999, 3).unwrap() - g).abs() <= 1e-6);
}

#[test]
fn exact_code_examples() {
    let bsc = Channel::bsc(0.1).unwrap();
    let comps = vec![bsc; 3];
    let pe = exact_code_pe(&comps, &[vec![0, 0, 0], vec![1, 1, 1]], 1).unwrap();
    assert!((pe - 0.028).abs() <= 1e-15);
    assert_eq!(exact_code_pe(&comps, &[vec![1, 0, 1]], 1).unwrap(), 0.0);
    assert!(
        (exact_code_pe(&comps, &[vec![0, 0, 0], vec![0, 0, 0]], 1).unwrap() - 0.5).abs() <= 1e-15
    );
}
