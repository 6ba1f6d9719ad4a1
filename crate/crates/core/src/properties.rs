//! Randomized invariants across modules.

use nalgebra::DVector;
use proptest::prelude::*;
use rand::RngCore;

use crate::chart::{gradient, square_residual};
use crate::deformation::{deformation_tensor, eigenspace_split, DeformationTolerances, DeformedStructure};
use crate::foliation::solve_z;
use crate::lie::{analytic_ad, build_algebra, AdFunction, AlgebraSpec, LieAlgebraData};
use crate::linalg::max_abs;
use crate::model::{build_model, ComplexModel};
use crate::run::Tolerances;
use crate::sampling::{gaussian_vector, seeded_rng};

fn point(model: &dyn ComplexModel, seed: u64) -> DVector<f64> {
    let mut rng = seeded_rng(seed);
    model.sample(&mut rng as &mut dyn RngCore, 0.2, 1.0)
}

fn algebra(which: u8) -> LieAlgebraData {
    let spec = match which % 3 {
        0 => AlgebraSpec::So(4),
        1 => AlgebraSpec::Su(3),
        _ => AlgebraSpec::So(5),
    };
    build_algebra(spec).unwrap()
}

const STENZEL_MODELS: [&str; 4] = ["sphere(2)", "sphere(3)", "rproj(3)", "cproj(1)"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn killing_form_is_ad_invariant(which in 0u8..3, seed in any::<u64>()) {
        let alg = algebra(which);
        let mut rng = seeded_rng(seed);
        let (x, y, z) = (
            gaussian_vector(&mut rng, alg.dim()),
            gaussian_vector(&mut rng, alg.dim()),
            gaussian_vector(&mut rng, alg.dim()),
        );
        let lhs = alg.killing_form(&alg.bracket(&x, &y), &z);
        let rhs = -alg.killing_form(&y, &alg.bracket(&x, &z));
        let scale = alg.norm(&x) * alg.norm(&y) * alg.norm(&z);
        prop_assert!((lhs - rhs).abs() < 1e-10 * scale.max(1.0));
    }

    #[test]
    fn bracket_is_antisymmetric_and_jacobi(which in 0u8..3, seed in any::<u64>()) {
        let alg = algebra(which);
        let mut rng = seeded_rng(seed);
        let (x, y, z) = (
            gaussian_vector(&mut rng, alg.dim()),
            gaussian_vector(&mut rng, alg.dim()),
            gaussian_vector(&mut rng, alg.dim()),
        );
        prop_assert!((alg.bracket(&x, &y) + alg.bracket(&y, &x)).amax() < 1e-12 * x.norm() * y.norm());
        let jacobi = alg.bracket(&x, &alg.bracket(&y, &z))
            + alg.bracket(&y, &alg.bracket(&z, &x))
            + alg.bracket(&z, &alg.bracket(&x, &y));
        prop_assert!(jacobi.amax() < 1e-11 * (x.norm() * y.norm() * z.norm()).max(1.0));
    }

    #[test]
    fn stenzel_function_inverts(which in 0u8..3, seed in any::<u64>(), scale in 0.05f64..2.0) {
        let alg = algebra(which);
        let x = gaussian_vector(&mut seeded_rng(seed), alg.dim()).normalize() * scale;
        let t = analytic_ad(&alg, &x, AdFunction::Stenzel).unwrap();
        let t_inv = analytic_ad(&alg, &x, AdFunction::StenzelInverse).unwrap();
        let id = nalgebra::DMatrix::<f64>::identity(alg.dim(), alg.dim());
        prop_assert!(max_abs(&(&t * &t_inv - &id)) < 1e-10);
    }

    #[test]
    fn adapted_structure_squares_to_minus_one(m in 0usize..4, seed in any::<u64>()) {
        let model = build_model(STENZEL_MODELS[m]).unwrap();
        let x = point(model.as_ref(), seed);
        prop_assert!(square_residual(&model.j_matrix(&x).unwrap()) < 1e-9);
    }

    #[test]
    fn tau_is_constant_along_the_generator(m in 0usize..4, seed in any::<u64>()) {
        let model = build_model(STENZEL_MODELS[m]).unwrap();
        let x = point(model.as_ref(), seed);
        let tau = |y: &DVector<f64>| model.tau(y);
        let g = gradient(&tau, &x, 1e-5).unwrap();
        let z = model.generator(&x).unwrap();
        prop_assert!(g.dot(&z).abs() < 1e-6 * g.norm() * z.norm());
    }

    #[test]
    fn horizontal_split_is_conjugation_symmetric(m in 0usize..4, seed in any::<u64>()) {
        let model = build_model(STENZEL_MODELS[m]).unwrap();
        let x = point(model.as_ref(), seed);
        let frame = solve_z(model.as_ref(), &x, 1e-3).unwrap();
        let (h10, h01) = eigenspace_split(&model.j_matrix(&x).unwrap(), &frame.h_basis).unwrap();
        prop_assert_eq!(h10.ncols(), model.n() - 1);
        prop_assert_eq!(h01.ncols(), model.n() - 1);
        prop_assert!((h10.conjugate() - &h01).camax() < 1e-10);
    }

    #[test]
    fn unitary_pullback_has_zero_tensor(n in 2usize..4, seed in any::<u64>()) {
        let base = build_model(&format!("euclidean({n})")).unwrap();
        let d = DeformedStructure::from_name(base.as_ref(), "unitary").unwrap();
        let x = point(base.as_ref(), seed);
        let s = deformation_tensor(&d, &x, None, &DeformationTolerances::default()).unwrap();
        prop_assert!(s.regular && s.phi_max_abs() < 1e-12);
    }

    #[test]
    fn fibre_twist_norm_depends_only_on_the_leaf(seed in any::<u64>(), r in 0.5f64..1.5, angle in 0.0f64..std::f64::consts::TAU) {
        let base = build_model("euclidean(2)").unwrap();
        let d = DeformedStructure::from_name(base.as_ref(), "fibre-twist").unwrap();
        let x = point(base.as_ref(), seed);
        prop_assume!(x[0].hypot(x[2]) > 0.2 * x.norm());
        // Multiply z in C^2 by the complex scalar r e^{i angle}.
        let (c, s) = (r * angle.cos(), r * angle.sin());
        let y = DVector::from_fn(4, |i, _| if i < 2 { c * x[i] - s * x[i + 2] } else { s * x[i - 2] + c * x[i] });
        let tol = DeformationTolerances::default();
        let a = deformation_tensor(&d, &x, None, &tol).unwrap();
        let b = deformation_tensor(&d, &y, None, &tol).unwrap();
        prop_assert!((a.phi_norm - b.phi_norm).abs() < 1e-6);
    }

    #[test]
    fn tolerance_override_round_trips(value in 1e-14f64..1.0) {
        let mut t = Tolerances::default();
        t.apply_override(&format!("structure.gauge={value:e}")).unwrap();
        prop_assert_eq!(t.get("structure.gauge"), value);
    }
}

#[test]
fn sphere_split_is_one_dimensional() {
    let model = build_model("sphere(2)").unwrap();
    let x = point(model.as_ref(), 11);
    let frame = solve_z(model.as_ref(), &x, 1e-3).unwrap();
    let j = model.j_matrix(&x).unwrap();
    let (h10, h01) = eigenspace_split(&j, &frame.h_basis).unwrap();
    assert_eq!((h10.ncols(), h01.ncols()), (1, 1));
    let jc = crate::linalg::to_complex(&j);
    let i = num_complex::Complex64::i();
    assert!((&jc * &h10 - h10.map(|v| v * i)).camax() < 1e-10);
    assert!((&jc * &h01 + h01.map(|v| v * i)).camax() < 1e-10);
}
