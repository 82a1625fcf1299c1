use std::f64::consts::PI;

use proptest::prelude::*;

use crossfield::energy::{phi_delta_solve, BoundaryFlux, SingularityConfig};
use crossfield::hfield::{default_levels, iso_lines, solve_hfield, triangle_gradient, HSource};
use crossfield::{preset_domain, Error, Mesh, Preset};

fn square(h: f64) -> Mesh {
    preset_domain(&Preset::parse("polygon:square").unwrap(), h).unwrap()
}

fn interpolate(mesh: &Mesh, values: &[f64], p: [f64; 2]) -> f64 {
    let t = mesh.find_triangle(p).expect("point inside");
    let [a, b, c] = mesh.tri_points(t);
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
    let tri = mesh.triangles[t];
    values[tri[0]] * (1.0 - l1 - l2) + values[tri[1]] * l1 + values[tri[2]] * l2
}

#[test]
fn curvature_loads_integrate_to_two_pi_chi() {
    for preset in [Preset::Disk { r: 1.0 }, Preset::Annulus { r1: 0.3, r2: 1.0 }, Preset::parse("polygon:hexagon").unwrap()]
    {
        let m = preset_domain(&preset, 0.1).unwrap();
        let s: f64 = BoundaryFlux::TangentPower(1).nodal_loads(&m).unwrap().iter().sum();
        assert!((s - 2.0 * PI * m.euler_characteristic() as f64).abs() < 1e-9);
    }
}

fn mean_normal_ratio(h: f64) -> f64 {
    let m = square(h);
    let sol = solve_hfield(&m, &[HSource { point: [0.3, 0.6], k: 2 }, HSource { point: [0.7, 0.35], k: 2 }]).unwrap();
    let mut ratios = Vec::new();
    for e in 0..m.edges.len() {
        if !m.is_boundary_edge(e) {
            continue;
        }
        let mid = m.edge_midpoint(e);
        if [mid[0], mid[1], 1.0 - mid[0], 1.0 - mid[1]].iter().filter(|&&d| d < 0.15).count() > 1 {
            continue;
        }
        let g = triangle_gradient(&m, &sol.values, m.edge_tris[e][0]).unwrap();
        let normal = if mid[0] < 1e-9 || mid[0] > 1.0 - 1e-9 { g[0] } else { g[1] };
        ratios.push(normal.abs() / g[0].hypot(g[1]));
    }
    ratios.iter().sum::<f64>() / ratios.len() as f64
}

#[test]
fn iso_lines_meet_straight_edges_at_right_angles() {
    let r: Vec<f64> = [0.04, 0.02, 0.01].into_iter().map(mean_normal_ratio).collect();
    assert!(r[0] > r[1] && r[1] > r[2], "{r:?}");
    assert!(r[2] < 0.1, "{r:?}");
}

#[test]
fn iso_segments_sit_on_their_level() {
    let m = preset_domain(&Preset::Disk { r: 1.0 }, 0.05).unwrap();
    let sol = solve_hfield(&m, &[HSource { point: [0.2, 0.1], k: 4 }]).unwrap();
    let levels = default_levels(&sol.values, 6);
    assert_eq!(levels.len(), 6);
    for line in iso_lines(&m, &sol.values, &levels) {
        assert!(!line.segments.is_empty());
        for seg in &line.segments {
            for p in seg {
                assert!((interpolate(&m, &sol.values, *p) - line.level).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn unbalanced_or_misplaced_sources_are_rejected() {
    let m = preset_domain(&Preset::Disk { r: 1.0 }, 0.1).unwrap();
    let e = solve_hfield(&m, &[HSource { point: [0.0, 0.0], k: 3 }]);
    assert!(matches!(e, Err(Error::Incompatible { .. })));
    let e = solve_hfield(&m, &[HSource { point: [2.0, 0.0], k: 4 }]);
    assert!(matches!(e, Err(Error::Invalid(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn differences_are_source_only_potentials(
        pa in proptest::collection::vec((0.1..0.8f64, 0.0..2.0 * PI), 2),
        pb in proptest::collection::vec((0.1..0.8f64, 0.0..2.0 * PI), 2),
        split in 0i32..=4,
    ) {
        let m = preset_domain(&Preset::Disk { r: 1.0 }, 0.1).unwrap();
        let pts: Vec<[f64; 2]> = pa.iter().chain(&pb).map(|&(r, t)| [r * t.cos(), r * t.sin()]).collect();
        prop_assume!((0..4).all(|i| (0..i).all(|j| (pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]) > 0.25)));
        let a = [split, 4 - split];
        let b = [4 - split, split];
        let src = |p: &[[f64; 2]], k: [i32; 2]| -> Vec<HSource> {
            p.iter().zip(k).map(|(&point, k)| HSource { point, k }).collect()
        };
        let ha = solve_hfield(&m, &src(&pts[..2], a)).unwrap();
        let hb = solve_hfield(&m, &src(&pts[2..], b)).unwrap();
        let cfg = SingularityConfig::new(pts.clone(), vec![a[0], a[1], -b[0], -b[1]]);
        let diff = phi_delta_solve(&m, &cfg, &BoundaryFlux::TangentPower(0)).unwrap();
        for ((a, b), d) in ha.values.iter().zip(&hb.values).zip(&diff) {
            prop_assert!((a - b - d / 4.0).abs() < 1e-10);
        }
    }
}
