use std::f64::consts::PI;

use proptest::prelude::*;

use anisoperi::body::{ConvexBody, Ellipsoid};
use anisoperi::mesh::{generate, verify_inequality, MeshKind, MeshSurface};

fn ball(r: f64) -> ConvexBody {
    Ellipsoid::ball(3, r).unwrap().into()
}

fn lhs(mesh: &MeshSurface, body: &ConvexBody) -> f64 {
    verify_inequality(mesh, body, 2, 1, 0.0).unwrap().lhs
}

fn surfaces() -> Vec<MeshKind> {
    vec![
        MeshKind::FlatDisk { dim: 3, radius: 1.0 },
        MeshKind::CatenoidPatch { dim: 3, half_height: 0.4 },
        MeshKind::EnneperPatch { dim: 3, radius: 0.7 },
        MeshKind::FlatWulffHomothet { semi_axes: vec![1.0, 2.0, 3.0], scale: 0.5 },
    ]
}

#[test]
fn ratio_is_scale_invariant() {
    let body: ConvexBody = Ellipsoid::axis_aligned(&[1.0, 2.0, 3.0]).unwrap().into();
    for kind in surfaces() {
        let m = generate(&kind, 0.1).unwrap();
        let base = lhs(&m, &body);
        for t in [0.5, 3.0] {
            let s = m.scaled(t).unwrap();
            let p = (s.anisotropic_perimeter(&body).unwrap(), m.anisotropic_perimeter(&body).unwrap());
            assert!((p.0 / (t * p.1) - 1.0).abs() < 1e-12);
            assert!((s.area() / (t * t * m.area()) - 1.0).abs() < 1e-12);
            assert!((lhs(&s, &body) / base - 1.0).abs() < 1e-12, "{kind:?} at t = {t}");
        }
    }
}

#[test]
fn each_component_passes_on_its_own() {
    let a = generate(&MeshKind::FlatDisk { dim: 3, radius: 1.0 }, 0.1).unwrap();
    let b = generate(&MeshKind::CatenoidPatch { dim: 3, half_height: 0.4 }, 0.1).unwrap();
    let offset = a.vertices().len();
    let mut verts: Vec<Vec<f64>> = a.vertices().to_vec();
    verts.extend(b.vertices().iter().map(|v| vec![v[0] + 5.0, v[1], v[2]]));
    let mut tris: Vec<[usize; 3]> = a.triangles().to_vec();
    tris.extend(b.triangles().iter().map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]));
    let union = MeshSurface::new(verts, tris).unwrap();
    let parts = union.components().unwrap();
    assert_eq!(parts.len(), 2);
    for p in parts {
        assert!(verify_inequality(&p, &ball(1.0), 2, 1, PI).unwrap().holds());
    }
}

#[test]
fn flat_domains_converge_at_first_order_or_better() {
    let body: ConvexBody = Ellipsoid::axis_aligned(&[1.0, 2.0, 3.0]).unwrap().into();
    for kind in [MeshKind::FlatDisk { dim: 3, radius: 1.0 }, MeshKind::FlatWulffHomothet { semi_axes: vec![1.0, 2.0, 3.0], scale: 1.0 }] {
        let h = 0.2;
        let l: Vec<f64> = [h, h / 2.0, h / 4.0].iter().map(|&s| lhs(&generate(&kind, s).unwrap(), &body)).collect();
        let slope = ((l[0] - l[1]) / (l[1] - l[2])).abs().log2();
        assert!(slope >= 0.9, "{kind:?}: Richardson slope {slope}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn weight_scaling_scales_both_sides(s in 0.2f64..5.0, pick in 0usize..4) {
        let kind = surfaces().swap_remove(pick);
        let m = generate(&kind, 0.15).unwrap();
        let (b1, bs) = (ball(1.0), ball(s));
        let r1 = verify_inequality(&m, &b1, 2, 1, PI).unwrap();
        let rs = verify_inequality(&m, &bs, 2, 1, PI * s * s).unwrap();
        prop_assert!((rs.lhs / (s * r1.lhs) - 1.0).abs() < 1e-12);
        prop_assert!((rs.rhs_sharp / (s * r1.rhs_sharp) - 1.0).abs() < 1e-12);
        prop_assert!((rs.slack_sharp / rs.lhs - r1.slack_sharp / r1.lhs).abs() < 1e-12);
    }
}
