use hessflow_core::dynamics::{
    apply_inertia_inverse, check_ha_condition, energy, BodyParams, EulerPoissonFlow, HessChartState,
    InertiaOperator,
};
use hessflow_core::integrate::{integrate, IntegratorConfig, Method};
use hessflow_core::liealg::{
    adjoint, algebra_dim, exp_so, hat, vee, wedge, Rotation, SkewMatrix, SymmetricPairSplit,
};
use hessflow_core::sampling;
use nalgebra::{DMatrix, DVector, Vector3};
use proptest::prelude::*;

fn skew_in(n: usize) -> impl Strategy<Value = SkewMatrix> {
    prop::collection::vec(-2.0..2.0f64, algebra_dim(n))
        .prop_map(move |c| SkewMatrix::from_coords(n, &c).unwrap())
}

fn triple() -> impl Strategy<Value = (SkewMatrix, SkewMatrix, SkewMatrix)> {
    (2usize..8).prop_flat_map(|n| (skew_in(n), skew_in(n), skew_in(n)))
}

fn vec3() -> impl Strategy<Value = Vector3<f64>> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

fn rotation(n: usize, seed: u64) -> Rotation {
    sampling::rotation(&mut sampling::rng(seed), n)
}

fn ha_operator(n: usize, seed: u64) -> InertiaOperator {
    let mut r = sampling::rng(seed);
    let k = algebra_dim(n - 1);
    let a_k = sampling::spd(&mut r, k, 0.6, 2.0);
    let b = DMatrix::from_fn(k, n - 1, |_, _| sampling::uniform(&mut r, 0.4));
    // keeps the Schur complement A_k - B Bᵀ/a positive
    let b = b.scale(0.5 / b.norm().max(0.5));
    InertiaOperator::hess_appelrot(n, a_k, b, 1.3).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn jacobi_identity((x, y, z) in triple()) {
        let j = &(&x.bracket(&y.bracket(&z)) + &y.bracket(&z.bracket(&x))) + &z.bracket(&x.bracket(&y));
        prop_assert!(j.norm() < 1e-12);
    }

    #[test]
    fn bracket_is_antisymmetric((x, y, _) in triple()) {
        prop_assert!((&x.bracket(&y) + &y.bracket(&x)).norm() < 1e-14);
    }

    #[test]
    fn ad_is_killing_skew((x, y, z) in triple()) {
        let lhs = x.bracket(&y).killing(&z);
        let rhs = -y.killing(&x.bracket(&z));
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn killing_is_half_the_frobenius_product((x, y, _) in triple()) {
        let direct = 0.5 * x.as_matrix().component_mul(y.as_matrix()).sum();
        prop_assert!((x.killing(&y) - direct).abs() < 1e-13);
        prop_assert!((x.killing(&x) - x.coords().norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn coordinates_round_trip(x in (2usize..9).prop_flat_map(skew_in)) {
        let back = SkewMatrix::from_coord_vector(x.dim(), &x.coords()).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn hat_vee_and_cross_product(u in vec3(), w in vec3()) {
        prop_assert_eq!(vee(&hat(&u)).unwrap(), u);
        let cross = u.cross(&w);
        let applied = hat(&u).apply(&DVector::from_column_slice(w.as_slice()));
        prop_assert!((applied - DVector::from_column_slice(cross.as_slice())).amax() < 1e-14);
        prop_assert!((vee(&hat(&u).bracket(&hat(&w))).unwrap() - cross).amax() < 1e-14);
    }

    #[test]
    fn wedge_is_antisymmetric(n in 2usize..7, seed in any::<u64>()) {
        let mut r = sampling::rng(seed);
        let (u, v) = (sampling::vector(&mut r, n, 1.0), sampling::vector(&mut r, n, 1.0));
        let uv = wedge(&u, &v).unwrap();
        let expect = &u * v.transpose() - &v * u.transpose();
        prop_assert!((uv.as_matrix() - expect).amax() < 1e-15);
        prop_assert!((&uv + &wedge(&v, &u).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn adjoint_preserves_killing((x, y, _) in triple(), seed in any::<u64>()) {
        let g = rotation(x.dim(), seed);
        let (gx, gy) = (adjoint(&g, &x).unwrap(), adjoint(&g, &y).unwrap());
        prop_assert!((gx.killing(&gy) - x.killing(&y)).abs() < 1e-11);
        // Ad is a Lie algebra homomorphism
        let lhs = adjoint(&g, &x.bracket(&y)).unwrap();
        prop_assert!((&lhs - &gx.bracket(&gy)).norm() < 1e-11);
    }

    #[test]
    fn exponential_is_a_rotation(x in (2usize..8).prop_flat_map(skew_in)) {
        let g = exp_so(&x);
        prop_assert!(g.orthogonality_defect() < 1e-12);
        prop_assert!((g.as_matrix().determinant() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn symmetric_pair_brackets((x, y, _) in (3usize..8).prop_flat_map(|n| (skew_in(n), skew_in(n), skew_in(n)))) {
        let pair = SymmetricPairSplit::new(x.dim());
        let (xk, xd) = pair.split(&x);
        let (yk, yd) = pair.split(&y);
        prop_assert!((&(&xk + &xd) - &x).norm() < 1e-14);
        prop_assert!(pair.project_d(&xk.bracket(&yk)).norm() < 1e-13);
        prop_assert!(pair.project_k(&xk.bracket(&yd)).norm() < 1e-13);
        prop_assert!(pair.project_d(&xd.bracket(&yd)).norm() < 1e-13);
    }

    #[test]
    fn hess_appelrot_operators_are_spd_and_satisfy_the_condition(n in 3usize..7, seed in any::<u64>()) {
        let op = ha_operator(n, seed);
        let (holds, _) = check_ha_condition(&op);
        prop_assert!(holds);
        let mut r = sampling::rng(seed ^ 1);
        let (x, y) = (sampling::skew(&mut r, n, 1.0), sampling::skew(&mut r, n, 1.0));
        prop_assert!(op.quadratic_form(&x) > 0.0);
        let ax = apply_inertia_inverse(&op, &x).unwrap();
        prop_assert!((ax.killing(&y) - x.killing(&op.apply(&y))).abs() < 1e-12);
        let pair = SymmetricPairSplit::new(n);
        let xd = pair.project_d(&x);
        prop_assert!((&pair.project_d(&op.apply(&xd)) - &xd.scale(1.3)).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn euler_poisson_energy_is_conserved(n in 3usize..6, seed in any::<u64>()) {
        let op = ha_operator(n, seed);
        let params = BodyParams::new(0.9, 1.1).unwrap();
        let mut r = sampling::rng(seed.wrapping_add(7));
        let s0 = HessChartState::new(sampling::vector(&mut r, n - 1, 0.8), sampling::unit_vector(&mut r, n))
            .unwrap()
            .to_euler_poisson();
        let flow = EulerPoissonFlow { op: op.clone(), params };
        let cfg = IntegratorConfig::new(Method::Rk4, 1e-3, 2.0).with_stride(100);
        let out = integrate(&flow, &s0.to_phase(), &cfg, &[]).unwrap();
        let e0 = energy(&s0, &op, &params);
        for s in &out.trajectory.states {
            let ep = hessflow_core::dynamics::EulerPoissonState::from_phase(n, s).unwrap();
            prop_assert!((energy(&ep, &op, &params) - e0).abs() < 1e-8);
        }
    }
}
