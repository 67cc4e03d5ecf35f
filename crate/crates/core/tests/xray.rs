use proptest::prelude::*;

use anisoperi::body::{ConvexBody, Ellipsoid, HalfspacePolytope};
use anisoperi::xray::{build_program, run_xray, solve, ProgramOptions, SolveMethod, SolveOptions, XrayOptions};

fn disk() -> ConvexBody {
    Ellipsoid::ball(2, 1.0).unwrap().into()
}

#[test]
fn ball_certificate_is_nondecreasing_in_resolution() {
    let mut last = 0.0;
    for res in [16, 32, 64] {
        let run = run_xray(&disk(), &XrayOptions::new(ProgramOptions::new(1, 1, res, 90))).unwrap();
        let c = &run.certificate;
        assert!(c.certified_lower >= last, "res {res}: {} < {last}", c.certified_lower);
        assert!(c.certified_lower <= c.outer_estimate);
        assert!(c.reaudit_within_bound, "res {res}: reaudit {} > {}", c.reaudit_max, c.discretization_bound);
        last = c.certified_lower;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn certificates_are_sound(a in 0.6f64..1.0, b in 1.0f64..2.0, res in 10usize..24, seed in 0u64..1000) {
        let body: ConvexBody = Ellipsoid::axis_aligned(&[a, b]).unwrap().into();
        let mut po = ProgramOptions::new(1, 1, res, 24);
        po.seed = seed;
        let mut opts = XrayOptions::new(po);
        opts.audit_fibers = 2000;
        let run = run_xray(&body, &opts).unwrap();
        let c = &run.certificate;
        prop_assert!(c.certified_lower <= c.sampled_upper + 1e-12);
        prop_assert!(c.certified_lower <= c.outer_estimate, "{} > {}", c.certified_lower, c.outer_estimate);
        prop_assert!(c.sandwich_holds);
        prop_assert!(c.reaudit_within_bound);
    }

    #[test]
    fn iterative_solver_agrees_with_simplex(a in 0.6f64..1.0, b in 1.0f64..2.0, res in 6usize..12, fibers in 8usize..24, cube: bool) {
        let body: ConvexBody = if cube {
            HalfspacePolytope::axis_box(&[a, b, 1.0]).unwrap().into()
        } else {
            Ellipsoid::axis_aligned(&[a, b]).unwrap().into()
        };
        let po = if cube { ProgramOptions::new(2, 1, res.min(7), fibers / 4) } else { ProgramOptions::new(1, 1, res, fibers) };
        let p = build_program(&body, po).unwrap();
        prop_assume!(p.variable_count() <= 2000 && p.constraint_count() <= 4000);
        let exact = solve(&p, &SolveOptions { method: SolveMethod::Simplex, ..Default::default() }).unwrap();
        let mw = solve(&p, &SolveOptions { iterations: 20_000, ..Default::default() }).unwrap();
        prop_assert!((mw.objective / exact.objective - 1.0).abs() <= 0.01, "{} vs {}", mw.objective, exact.objective);
    }
}
