use proptest::prelude::*;

use anisoperi::body::{
    convexity_defect, cut, glue, support_of_ellipsoid, support_restrict, ConvexBody, CutRegion, Cylinder, Ellipsoid,
    FnSupport, Membership, WulffOracle,
};
use anisoperi::frame::Frame;
use anisoperi::linalg::norm;
use anisoperi::sampling::{gaussian_points, random_rotation, rng, Kronecker};

fn ellipsoid(axes: &[f64], seed: u64) -> Ellipsoid {
    let mut r = rng(seed);
    Ellipsoid::new(axes.to_vec(), random_rotation(axes.len(), &mut r)).unwrap()
}

fn axes_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.4f64..3.0, d)
}

/// Membership of the sampled Wulff shape agrees with the analytic gauge
/// except inside the reported band.
fn check_round_trip(e: &Ellipsoid, points: usize, seed: u64) -> Result<(), TestCaseError> {
    let table = FnSupport::new(e.dim(), |nu: &[f64]| support_of_ellipsoid(e, nu).unwrap().value);
    let oracle = WulffOracle::new(&table, 2000, seed);
    let scale = e.semi_axes()[e.dim() - 1] * 1.3;
    for g in gaussian_points(e.dim(), points, seed) {
        let x: Vec<f64> = g.iter().map(|v| v * scale / 2.0).collect();
        let analytic = e.gauge(&x);
        let rep = oracle.classify(&x);
        match rep.class {
            Membership::Boundary => {}
            Membership::In => {
                // outer approximation: accepted outside points lie in the band
                let dist = norm(&x) * (1.0 - 1.0 / analytic.max(1.0));
                prop_assert!(analytic <= 1.0 || dist <= rep.band + rep.tol, "in-misclassified at distance {dist}");
            }
            Membership::Out => prop_assert!(analytic > 1.0 - 1e-12, "point of E classified out"),
        }
    }
    Ok(())
}

#[test]
fn duality_round_trip_on_1e5_points() {
    let e = ellipsoid(&[0.7, 1.3, 2.1], 9);
    check_round_trip(&e, 100_000, 3).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn duality_round_trip(d in 2usize..=4, axes in axes_strategy(4), seed in 0u64..1000) {
        let e = ellipsoid(&axes[..d], seed);
        check_round_trip(&e, 2000, seed)?;
    }

    #[test]
    fn restricted_wulff_equals_shadow(axes in axes_strategy(3), seed in 0u64..1000) {
        let e = ellipsoid(&axes, seed);
        let mut r = rng(seed ^ 77);
        let basis = random_rotation(3, &mut r).columns(0, 2).into_owned();
        let plane = Frame::new(basis).unwrap();
        let restricted = support_restrict(&e, &plane).unwrap();
        let oracle = WulffOracle::new(&restricted, 2000, seed);
        // analytic shadow: y ∈ proj(E) iff yᵀ (Rᵀ M R)⁻¹ y <= 1
        let m = e.shape_matrix();
        let s = plane.basis().transpose() * &m * plane.basis();
        let s_inv = s.clone().try_inverse().unwrap();
        let reach = e.semi_axes()[2] * 1.2;
        let (mut differ, total) = (0usize, 40_000usize);
        for u in Kronecker::new(2, seed).take_points(total) {
            let y = [(2.0 * u[0] - 1.0) * reach, (2.0 * u[1] - 1.0) * reach];
            let q = y[0] * (s_inv[(0, 0)] * y[0] + s_inv[(0, 1)] * y[1]) + y[1] * (s_inv[(1, 0)] * y[0] + s_inv[(1, 1)] * y[1]);
            let exact = q <= 1.0;
            let sampled = oracle.gauge(&y) <= 1.0;
            differ += (exact != sampled) as usize;
        }
        let box_area = 4.0 * reach * reach;
        let shadow = std::f64::consts::PI * s.determinant().sqrt();
        let sym_diff = box_area * differ as f64 / total as f64;
        prop_assert!(sym_diff <= 0.02 * shadow, "symmetric difference {sym_diff} vs area {shadow}");
    }

    #[test]
    fn glue_and_cut_are_centrally_symmetric(h in 1.0f64..3.0, shrink in 0.3f64..1.0, seed in 0u64..1000) {
        let horizontal = Frame::coordinate(3, &[0, 1]).unwrap();
        let base: ConvexBody = Ellipsoid::axis_aligned(&[1.0, 1.0, 2.0]).unwrap().into();
        let cyl: ConvexBody = Cylinder::new(3, 2, 1.0, h).unwrap().into();
        let glued = glue(base.clone(), horizontal.clone(), cyl).unwrap();
        let trimmed = cut(base, horizontal, CutRegion::Shrink(shrink)).unwrap();
        for x in gaussian_points(3, 500, seed) {
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            prop_assert_eq!(glued.classify(&x).class, glued.classify(&neg).class);
            prop_assert_eq!(trimmed.classify(&x).class, trimmed.classify(&neg).class);
        }
    }

    #[test]
    fn glued_support_is_convex(h in 1.0f64..3.0, seed in 0u64..1000) {
        let horizontal = Frame::coordinate(3, &[0, 1]).unwrap();
        let base: ConvexBody = Ellipsoid::axis_aligned(&[1.0, 1.0, 2.0]).unwrap().into();
        let long: ConvexBody = Ellipsoid::axis_aligned(&[1.0, 1.0, 2.0 + h]).unwrap().into();
        let glued = glue(base, horizontal, long).unwrap();
        prop_assert!(convexity_defect(&glued, 2000, seed) <= 1e-9);
    }
}
