use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;

use crossfield::mesh::{polygon_with_holes, DEFAULT_CORNER_THRESHOLD};
use crossfield::topology::{interior_target, ph_check};
use crossfield::{boundary_analysis, drill_holes, preset_domain, HoleSpec, Mesh, Preset};

/// Classical count: every corner absorbs its nearest number of quarter turns.
fn classical_u_target(mesh: &Mesh) -> i64 {
    let ba = boundary_analysis(mesh, DEFAULT_CORNER_THRESHOLD);
    let absorbed: i64 = ba.corners.iter().map(|c| (c.delta / FRAC_PI_2).round() as i64).sum();
    4 * mesh.euler_characteristic() - absorbed
}

#[test]
fn named_polygons_match_classical_count() {
    for name in ["square", "lshape", "triangle", "hexagon", "hourglass"] {
        let m = preset_domain(&Preset::parse(&format!("polygon:{name}")).unwrap(), 0.1).unwrap();
        assert_eq!(interior_target(&m).unwrap().u_target, classical_u_target(&m), "{name}");
    }
    let l = preset_domain(&Preset::parse("polygon:lshape").unwrap(), 0.1).unwrap();
    assert_eq!(interior_target(&l).unwrap().u_target, 0);
}

#[test]
fn smooth_domains_give_four_chi() {
    for preset in [Preset::Disk { r: 1.0 }, Preset::Ellipse { a: 2.0, b: 0.6 }, Preset::Annulus { r1: 0.5, r2: 1.0 }] {
        let m = preset_domain(&preset, 0.06).unwrap();
        assert_eq!(interior_target(&m).unwrap().u_target, 4 * m.euler_characteristic(), "{preset:?}");
    }
}

#[test]
fn drilled_holes_do_not_change_the_target() {
    let disk = preset_domain(&Preset::Disk { r: 1.0 }, 0.05).unwrap();
    let m = drill_holes(&disk, &[HoleSpec::disk([0.3, 0.2], 0.1, 3), HoleSpec::disk([-0.4, -0.1], 0.1, 1)]).unwrap();
    let l = ph_check(&m, &m.hole_loops.iter().map(|h| h.spec).collect::<Vec<_>>()).unwrap();
    assert_eq!(l.u_target, 4);
    assert!(l.pass);
}

#[test]
fn hourglass_with_domain_hole() {
    let s = 3f64.sqrt() / 2.0;
    let outer = vec![[0.0, 0.0], [2.0, 0.0], [1.5, s], [2.0, 2.0 * s], [0.0, 2.0 * s], [0.5, s]];
    let circle: Vec<[f64; 2]> = (0..64)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / 64.0;
            [1.0 + 0.2 * t.cos(), s + 0.2 * t.sin()]
        })
        .collect();
    let m = polygon_with_holes(&outer, &[circle], 0.05).unwrap();
    assert_eq!(m.euler_characteristic(), 0);
    assert!(m.hole_loops.is_empty());
    let t = interior_target(&m).unwrap();
    assert!((t.valence - 0.5).abs() < 1e-9);
    assert_eq!(t.u_target, -2);
    let holes = |degrees: &[i32]| -> Vec<HoleSpec> {
        degrees.iter().enumerate().map(|(i, &d)| HoleSpec::disk([0.3 + 0.2 * i as f64, 0.3], 0.01, d)).collect()
    };
    assert!(ph_check(&m, &holes(&[-1, -1])).unwrap().pass);
    let literal = ph_check(&m, &holes(&[1, 1, 1, 1, -1, -1])).unwrap();
    assert!(!literal.pass);
    assert_eq!(literal.deficit, -4);
}

#[test]
fn polygon_holes_must_be_inside_and_disjoint() {
    let sq = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let small = |x: f64, y: f64| vec![[x, y], [x + 0.2, y], [x + 0.2, y + 0.2], [x, y + 0.2]];
    assert!(polygon_with_holes(&sq, &[small(0.9, 0.4)], 0.1).is_err());
    assert!(polygon_with_holes(&sq, &[small(0.3, 0.3), small(0.4, 0.4)], 0.1).is_err());
    let m = polygon_with_holes(&sq, &[small(0.2, 0.2), small(0.6, 0.6)], 0.05).unwrap();
    assert_eq!(m.euler_characteristic(), -1);
    assert!((m.area() - 0.92).abs() < 1e-12);
    assert_eq!(interior_target(&m).unwrap().u_target, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn convex_polygons_match_classical_count(
        angles in proptest::collection::vec(0.0..2.0 * PI, 3..10),
        radii in proptest::collection::vec(0.7..1.3f64, 10),
    ) {
        let mut a = angles.clone();
        a.sort_by(f64::total_cmp);
        a.dedup_by(|x, y| (*x - *y).abs() < 0.1);
        prop_assume!(a.len() >= 3 && (a[0] + 2.0 * PI - a[a.len() - 1]) > 0.1);
        let pts: Vec<[f64; 2]> = a.iter().zip(&radii).map(|(t, r)| [r * t.cos(), r * t.sin()]).collect();
        let m = match preset_domain(&Preset::Polygon { points: pts }, 0.2) {
            Ok(m) => m,
            Err(_) => return Ok(()),
        };
        let ba = boundary_analysis(&m, DEFAULT_CORNER_THRESHOLD);
        prop_assume!(ba.corners.iter().all(|c| {
            let x = c.delta / FRAC_PI_2;
            (x - x.floor() - 0.5).abs() > 1e-6
        }));
        prop_assert_eq!(interior_target(&m).unwrap().u_target, classical_u_target(&m));
    }

    #[test]
    fn verdict_is_invariant_under_rigid_motions(
        rot in 0.0..2.0 * PI, tx in -4.0..4.0f64, ty in -4.0..4.0f64,
        which in prop::sample::select(vec!["square", "lshape", "hexagon", "hourglass", "triangle"]),
        degrees in proptest::collection::vec(-2i32..=2, 0..5),
    ) {
        let m = preset_domain(&Preset::parse(&format!("polygon:{which}")).unwrap(), 0.2).unwrap();
        let (c, s) = (rot.cos(), rot.sin());
        let moved = Mesh::new(
            m.vertices.iter().map(|p| [c * p[0] - s * p[1] + tx, s * p[0] + c * p[1] + ty]).collect(),
            m.triangles.clone(),
        )
        .unwrap();
        let holes: Vec<HoleSpec> = degrees.iter().map(|&d| HoleSpec::disk([0.0, 0.0], 0.01, d)).collect();
        let a = ph_check(&m, &holes).unwrap();
        let b = ph_check(&moved, &holes).unwrap();
        prop_assert_eq!(a.u_target, b.u_target);
        prop_assert_eq!(a.pass, b.pass);
        prop_assert_eq!(a.deficit, b.deficit);
    }
}
