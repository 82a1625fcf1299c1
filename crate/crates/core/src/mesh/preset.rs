use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::{dist, orient2d, polygon_area, Mesh, Point};
use crate::error::{Error, Result};

/// Largest triangle count a preset may produce.
pub const MAX_TRIANGLES: f64 = 4.0e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Preset {
    Disk { r: f64 },
    Annulus { r1: f64, r2: f64 },
    Ellipse { a: f64, b: f64 },
    Polygon { points: Vec<Point> },
    QuarterDisk { r: f64 },
}

impl Preset {
    /// Parses `kind:params`, e.g. `disk:1`, `annulus:0.4,1`, `ellipse:2,1`,
    /// `quarterdisk:1`, `polygon:square` or `polygon:0,0;1,0;0,1`.
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let nums = |n: usize| -> Result<Vec<f64>> {
            let v: std::result::Result<Vec<f64>, _> =
                args.split(',').filter(|t| !t.trim().is_empty()).map(|t| t.trim().parse::<f64>()).collect();
            let v = v.map_err(|_| Error::Invalid(format!("bad numeric parameters in preset '{s}'")))?;
            if v.len() != n {
                return Err(Error::Invalid(format!("preset '{kind}' expects {n} parameter(s), got {}", v.len())));
            }
            Ok(v)
        };
        match kind.trim().to_ascii_lowercase().as_str() {
            "disk" => {
                let v = if args.trim().is_empty() { vec![1.0] } else { nums(1)? };
                Ok(Preset::Disk { r: v[0] })
            }
            "annulus" => {
                let v = nums(2)?;
                Ok(Preset::Annulus { r1: v[0], r2: v[1] })
            }
            "ellipse" => {
                let v = nums(2)?;
                Ok(Preset::Ellipse { a: v[0], b: v[1] })
            }
            "quarterdisk" | "quarter_disk" => {
                let v = if args.trim().is_empty() { vec![1.0] } else { nums(1)? };
                Ok(Preset::QuarterDisk { r: v[0] })
            }
            "polygon" => Ok(Preset::Polygon { points: named_polygon(args)? }),
            other => Err(Error::Invalid(format!("unknown preset kind '{other}'"))),
        }
    }
}

fn named_polygon(name: &str) -> Result<Vec<Point>> {
    let s3 = 3f64.sqrt() / 2.0;
    Ok(match name.trim() {
        "square" => vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        "lshape" | "l" => vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]],
        "triangle" => vec![[0.0, 0.0], [1.0, 0.0], [0.5, s3]],
        "hexagon" => (0..6).map(|k| [(k as f64 * PI / 3.0).cos(), (k as f64 * PI / 3.0).sin()]).collect(),
        "hourglass" => vec![[0.0, 0.0], [2.0, 0.0], [1.5, s3], [2.0, 2.0 * s3], [0.0, 2.0 * s3], [0.5, s3]],
        coords => {
            let mut pts = Vec::new();
            for pair in coords.split(';').filter(|p| !p.trim().is_empty()) {
                let xy: std::result::Result<Vec<f64>, _> = pair.split(',').map(|t| t.trim().parse::<f64>()).collect();
                match xy {
                    Ok(v) if v.len() == 2 => pts.push([v[0], v[1]]),
                    _ => return Err(Error::Invalid(format!("bad polygon vertex '{pair}'"))),
                }
            }
            pts
        }
    })
}

/// Synthesizes a triangle mesh of the requested domain with target edge length `h`.
pub fn preset_domain(kind: &Preset, h: f64) -> Result<Mesh> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Invalid(format!("target edge length must be positive, got {h}")));
    }
    let positive = |v: f64, name: &str| -> Result<()> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::Invalid(format!("{name} must be positive, got {v}")))
        }
    };
    let check_size = |area: f64| -> Result<()> {
        let est = area / (0.43 * h * h);
        if est > MAX_TRIANGLES {
            return Err(Error::Invalid(format!("h = {h} would produce about {est:.0} triangles")));
        }
        Ok(())
    };
    match kind {
        Preset::Disk { r } => {
            positive(*r, "radius")?;
            check_size(PI * r * r)?;
            ring_mesh(0.0, *r, h)
        }
        Preset::Annulus { r1, r2 } => {
            positive(*r1, "inner radius")?;
            positive(*r2, "outer radius")?;
            if r1 >= r2 {
                return Err(Error::Invalid(format!("annulus needs r1 < r2, got {r1} >= {r2}")));
            }
            check_size(PI * (r2 * r2 - r1 * r1))?;
            ring_mesh(*r1, *r2, h)
        }
        Preset::Ellipse { a, b } => {
            positive(*a, "semi-axis a")?;
            positive(*b, "semi-axis b")?;
            check_size(PI * a * b)?;
            let s = a.max(*b);
            let mut m = ring_mesh(0.0, 1.0, h / s)?;
            for p in &mut m.vertices {
                *p = [p[0] * a, p[1] * b];
            }
            Mesh::new(m.vertices, m.triangles)
        }
        Preset::Polygon { points } => {
            let area = polygon_area(points).abs();
            check_size(area)?;
            polygon_mesh(points, h, true)
        }
        Preset::QuarterDisk { r } => {
            positive(*r, "radius")?;
            check_size(PI * r * r / 4.0)?;
            let n = ((PI * r / 2.0) / h).ceil().max(2.0) as usize;
            let mut pts = vec![[0.0, 0.0]];
            for j in 0..=n {
                let t = (PI / 2.0) * j as f64 / n as f64;
                let p = if j == 0 {
                    [*r, 0.0]
                } else if j == n {
                    [0.0, *r]
                } else {
                    [r * t.cos(), r * t.sin()]
                };
                pts.push(p);
            }
            polygon_mesh(&pts, h, true)
        }
    }
}

fn ring_count(radius: f64, h: f64) -> usize {
    4 * ((PI * radius / (2.0 * h)).round() as usize).max(2)
}

/// Concentric-ring mesh of a disk (`r_in = 0`) or annulus. Every ring has a
/// multiple of four points starting at angle zero, so the mesh has the
/// quarter-turn symmetry of the domain.
fn ring_mesh(r_in: f64, r_out: f64, h: f64) -> Result<Mesh> {
    let nr = (((r_out - r_in) / h).round() as usize).max(1);
    let mut vertices: Vec<Point> = Vec::new();
    let mut rings: Vec<(usize, usize)> = Vec::new();
    if r_in == 0.0 {
        vertices.push([0.0, 0.0]);
    }
    let first = if r_in == 0.0 { 1 } else { 0 };
    for k in first..=nr {
        let r = if k == nr { r_out } else { r_in + (r_out - r_in) * k as f64 / nr as f64 };
        let n = ring_count(r, h);
        let start = vertices.len();
        for i in 0..n {
            let t = 2.0 * PI * i as f64 / n as f64;
            vertices.push([r * t.cos(), r * t.sin()]);
        }
        rings.push((start, n));
    }
    let mut triangles = Vec::new();
    if r_in == 0.0 {
        let (s, n) = rings[0];
        for i in 0..n {
            triangles.push([0, s + i, s + (i + 1) % n]);
        }
    }
    for w in rings.windows(2) {
        let (sa, na) = w[0];
        let (sb, nb) = w[1];
        let (mut i, mut j) = (0usize, 0usize);
        while i < na || j < nb {
            let inner = j == nb || (i < na && (i + 1) * nb <= (j + 1) * na);
            if inner {
                triangles.push([sa + i % na, sb + j % nb, sa + (i + 1) % na]);
                i += 1;
            } else {
                triangles.push([sa + i % na, sb + j % nb, sb + (j + 1) % nb]);
                j += 1;
            }
        }
    }
    Mesh::new(vertices, triangles)
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient2d(q1, q2, p1);
    let d2 = orient2d(q1, q2, p2);
    let d3 = orient2d(p1, p2, q1);
    let d4 = orient2d(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: Point, b: Point, c: Point, d: f64| {
        d == 0.0 && c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Checks that a closed polyline is simple.
pub fn validate_polygon(points: &[Point]) -> Result<()> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Geometry(format!("polygon needs at least 3 vertices, got {n}")));
    }
    for (i, p) in points.iter().enumerate() {
        if !(p[0].is_finite() && p[1].is_finite()) {
            return Err(Error::Geometry(format!("polygon vertex {i} is not finite")));
        }
        if dist(*p, points[(i + 1) % n]) == 0.0 {
            return Err(Error::Geometry(format!("polygon vertices {i} and {} coincide", (i + 1) % n)));
        }
    }
    for i in 0..n {
        let (a, b) = (points[i], points[(i + 1) % n]);
        for j in i + 1..n {
            let (c, d) = (points[j], points[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // adjacent edges share one endpoint; they must not fold back onto each other
                let (shared, p, q) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                let cr = orient2d(shared, p, q);
                let dot = (p[0] - shared[0]) * (q[0] - shared[0]) + (p[1] - shared[1]) * (q[1] - shared[1]);
                if cr == 0.0 && dot > 0.0 {
                    return Err(Error::Geometry(format!("polygon edges {i} and {j} overlap")));
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return Err(Error::Geometry(format!("polygon is self-intersecting (edges {i} and {j})")));
            }
        }
    }
    if polygon_area(points) == 0.0 {
        return Err(Error::Geometry("polygon has zero area".into()));
    }
    Ok(())
}

pub(crate) fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let l2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / l2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// Mesh of a simple polygon with polygonal holes. Holes must lie strictly
/// inside `outer` and be pairwise disjoint; every hole loop becomes a domain
/// boundary (not a drilled singularity hole).
pub fn polygon_with_holes(outer: &[Point], holes: &[Vec<Point>], h: f64) -> Result<Mesh> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Invalid(format!("target edge length must be positive, got {h}")));
    }
    let area = polygon_area(outer).abs() - holes.iter().map(|p| polygon_area(p).abs()).sum::<f64>();
    if area / (0.43 * h * h) > MAX_TRIANGLES {
        return Err(Error::Invalid(format!("h = {h} would produce too many triangles")));
    }
    polygon_mesh_with_holes(outer, holes, h, true)
}

fn loops_cross(a: &[Point], b: &[Point]) -> bool {
    let (n, m) = (a.len(), b.len());
    (0..n).any(|i| (0..m).any(|j| segments_intersect(a[i], a[(i + 1) % n], b[j], b[(j + 1) % m])))
}

fn subdivided(poly: &[Point], h: f64, subdivide: bool) -> Vec<Point> {
    let n = poly.len();
    let mut out = Vec::new();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let k = if subdivide { ((dist(a, b) / h) - 1e-9).ceil().max(1.0) as usize } else { 1 };
        for j in 0..k {
            let t = j as f64 / k as f64;
            out.push([a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]);
        }
    }
    out
}

/// Constrained Delaunay mesh of a simple polygon. Long edges are split to
/// spacing `h` and the interior is seeded with a hexagonal lattice.
fn polygon_mesh(points: &[Point], h: f64, subdivide: bool) -> Result<Mesh> {
    polygon_mesh_with_holes(points, &[], h, subdivide)
}

fn polygon_mesh_with_holes(points: &[Point], holes: &[Vec<Point>], h: f64, subdivide: bool) -> Result<Mesh> {
    validate_polygon(points)?;
    let mut poly = points.to_vec();
    if polygon_area(&poly) < 0.0 {
        poly.reverse();
    }
    for (i, hole) in holes.iter().enumerate() {
        validate_polygon(hole)?;
        if loops_cross(&poly, hole) || !point_in_polygon(hole[0], &poly) {
            return Err(Error::Geometry(format!("hole {i} is not strictly inside the outer polygon")));
        }
        for (j, other) in holes[..i].iter().enumerate() {
            if loops_cross(hole, other) || point_in_polygon(hole[0], other) || point_in_polygon(other[0], hole) {
                return Err(Error::Geometry(format!("holes {j} and {i} overlap")));
            }
        }
    }
    let n = poly.len();
    let mut loops = vec![subdivided(&poly, h, subdivide)];
    loops.extend(holes.iter().map(|hole| subdivided(hole, h, subdivide)));

    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let geom = |e: spade::InsertionError| Error::Geometry(format!("triangulation failed: {e:?}"));
    for lp in &loops {
        let mut handles = Vec::with_capacity(lp.len());
        for p in lp {
            handles.push(cdt.insert(Point2::new(p[0], p[1])).map_err(geom)?);
        }
        for i in 0..handles.len() {
            let (a, b) = (handles[i], handles[(i + 1) % handles.len()]);
            if !cdt.can_add_constraint(a, b) {
                return Err(Error::Geometry("boundary segments intersect after subdivision".into()));
            }
            cdt.add_constraint(a, b);
        }
    }
    let near_hole = |p: Point| {
        holes.iter().any(|hole| {
            point_in_polygon(p, hole)
                || (0..hole.len()).any(|k| segment_distance(p, hole[k], hole[(k + 1) % hole.len()]) < 0.5 * h)
        })
    };

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &poly {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let dy = h * 3f64.sqrt() / 2.0;
    let rows = ((hi[1] - lo[1]) / dy).floor() as usize;
    let cols = ((hi[0] - lo[0]) / h).floor() as usize + 1;
    for j in 1..=rows {
        let y = lo[1] + j as f64 * dy;
        let shift = if j % 2 == 1 { 0.5 * h } else { 0.0 };
        for i in 0..=cols {
            let p = [lo[0] + shift + i as f64 * h, y];
            if !point_in_polygon(p, &poly) {
                continue;
            }
            let near = (0..n).any(|k| segment_distance(p, poly[k], poly[(k + 1) % n]) < 0.5 * h) || near_hole(p);
            if !near {
                cdt.insert(Point2::new(p[0], p[1])).map_err(geom)?;
            }
        }
    }

    // Faces reachable from the hull or from inside a hole without crossing a
    // constraint lie outside.
    let mut outside = vec![false; cdt.num_all_faces()];
    let mut stack = Vec::new();
    for f in cdt.inner_faces() {
        let from_hull =
            f.adjacent_edges().iter().any(|e| e.rev().face().is_outer() && !cdt.is_constraint_edge(e.as_undirected().fix()));
        let vs = f.positions();
        let c = [(vs[0].x + vs[1].x + vs[2].x) / 3.0, (vs[0].y + vs[1].y + vs[2].y) / 3.0];
        if from_hull || holes.iter().any(|hole| point_in_polygon(c, hole)) {
            outside[f.fix().index()] = true;
            stack.push(f.fix());
        }
    }
    while let Some(fx) = stack.pop() {
        for e in cdt.face(fx).adjacent_edges() {
            if cdt.is_constraint_edge(e.as_undirected().fix()) {
                continue;
            }
            if let Some(g) = e.rev().face().as_inner() {
                if !outside[g.fix().index()] {
                    outside[g.fix().index()] = true;
                    stack.push(g.fix());
                }
            }
        }
    }
    let vertices: Vec<Point> = cdt.vertices().map(|v| [v.position().x, v.position().y]).collect();
    let mut triangles = Vec::new();
    for f in cdt.inner_faces() {
        if outside[f.fix().index()] {
            continue;
        }
        let vs = f.vertices();
        triangles.push([vs[0].fix().index(), vs[1].fix().index(), vs[2].fix().index()]);
    }
    Mesh::new_compacting(vertices, triangles)
}
