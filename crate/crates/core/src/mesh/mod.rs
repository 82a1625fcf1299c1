//! Planar triangle meshes with boundary loops, corner angles and drilled holes.

mod msh;
mod preset;

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use msh::{parse_msh, write_msh};
pub use preset::{polygon_with_holes, preset_domain, Preset};

pub type Point = [f64; 2];

/// Default threshold on `|delta|` separating feature corners from polyline jitter.
pub const DEFAULT_CORNER_THRESHOLD: f64 = PI / 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleSpec {
    pub center: Point,
    #[serde(default)]
    pub radius: f64,
    #[serde(default)]
    pub single_triangle: bool,
    /// Degree of the representation field around the hole (4 x cross index).
    pub degree: i32,
}

impl HoleSpec {
    pub fn disk(center: Point, radius: f64, degree: i32) -> Self {
        Self { center, radius, single_triangle: false, degree }
    }

    pub fn triangle(center: Point, degree: i32) -> Self {
        Self { center, radius: 0.0, single_triangle: true, degree }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center[0].is_finite() && self.center[1].is_finite()) {
            return Err(Error::Invalid("hole center must be finite".into()));
        }
        if !self.single_triangle && !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Invalid(format!("hole radius must be positive, got {}", self.radius)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoleLoop {
    /// Index into `Mesh::boundary_loops`.
    pub loop_index: usize,
    pub spec: HoleSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerInfo {
    pub vertex: usize,
    pub loop_index: usize,
    /// Total interior angle of the domain at the vertex.
    pub alpha: f64,
    /// Tangent jump `pi - alpha`.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryAnalysis {
    pub corners: Vec<CornerInfo>,
    pub smooth_turning: f64,
    pub chi: i64,
    pub loops: Vec<LoopAnalysis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopAnalysis {
    pub loop_index: usize,
    pub is_hole: bool,
    pub corners: Vec<CornerInfo>,
    pub smooth_turning: f64,
    pub total_turning: f64,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Outer loops counter-clockwise, inner loops clockwise; the domain is always on the left.
    pub boundary_loops: Vec<Vec<usize>>,
    pub hole_loops: Vec<HoleLoop>,
    pub corners: Vec<Vec<CornerInfo>>,
    /// Unique undirected edges `[lo, hi]`.
    pub edges: Vec<[usize; 2]>,
    /// `tri_edges[t][i]` is the edge opposite local vertex `i`.
    pub tri_edges: Vec<[usize; 3]>,
    /// Triangles incident to each edge (one or two).
    pub edge_tris: Vec<Vec<usize>>,
    pub vertex_tris: Vec<Vec<usize>>,
}

pub(crate) enum BuildError {
    Pinch(usize),
    Other(Error),
}

impl From<Error> for BuildError {
    fn from(e: Error) -> Self {
        BuildError::Other(e)
    }
}

#[inline]
pub fn orient2d(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Angle at `b` in triangle `a b c`, in `[0, pi]`.
pub fn corner_angle(a: Point, b: Point, c: Point) -> f64 {
    let u = [a[0] - b[0], a[1] - b[1]];
    let v = [c[0] - b[0], c[1] - b[1]];
    let cross = u[0] * v[1] - u[1] * v[0];
    let dot = u[0] * v[0] + u[1] * v[1];
    cross.abs().atan2(dot)
}

pub fn polygon_area(points: &[Point]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let p = points[i];
            let q = points[(i + 1) % n];
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
        * 0.5
}

impl Mesh {
    /// Builds a mesh from raw data. Negatively oriented triangles are flipped;
    /// every vertex must be used by some triangle.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        Self::build(vertices, triangles).map_err(|e| match e {
            BuildError::Pinch(v) => {
                Error::Topology(format!("boundary is not a set of simple loops (pinched at vertex {v})"))
            }
            BuildError::Other(e) => e,
        })
    }

    /// Like [`Mesh::new`] but drops vertices that no triangle references.
    pub fn new_compacting(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let (v, t) = compact(&vertices, &triangles)?;
        Self::new(v, t)
    }

    pub(crate) fn build(vertices: Vec<Point>, mut triangles: Vec<[usize; 3]>) -> std::result::Result<Self, BuildError> {
        let nv = vertices.len();
        if triangles.is_empty() {
            return Err(Error::Topology("mesh has no triangles".into()).into());
        }
        for (i, p) in vertices.iter().enumerate() {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::Geometry(format!("vertex {i} has non-finite coordinates")).into());
            }
        }
        let mut used = vec![false; nv];
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= nv {
                    return Err(Error::Topology(format!("triangle {t} references missing vertex {v}")).into());
                }
                used[v] = true;
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateTriangle(t).into());
            }
            let area = orient2d(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area == 0.0 {
                return Err(Error::DegenerateTriangle(t).into());
            }
            if area < 0.0 {
                tri.swap(1, 2);
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::Topology(format!("vertex {v} is not used by any triangle")).into());
        }

        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut edges = Vec::new();
        let mut edge_tris: Vec<Vec<usize>> = Vec::new();
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0usize; 3];
            for i in 0..3 {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_tris.push(Vec::with_capacity(2));
                    edges.len() - 1
                });
                edge_tris[e].push(t);
                te[i] = e;
            }
            tri_edges.push(te);
        }
        for (e, ts) in edge_tris.iter().enumerate() {
            if ts.len() > 2 {
                let [a, b] = edges[e];
                return Err(Error::Topology(format!(
                    "non-manifold edge ({a}, {b}) shared by {} triangles",
                    ts.len()
                ))
                .into());
            }
        }

        let mut vertex_tris = vec![Vec::new(); nv];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vertex_tris[v].push(t);
            }
        }

        // directed boundary edges keep the domain on their left
        let mut next = vec![usize::MAX; nv];
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let e = tri_edges[t][i];
                if edge_tris[e].len() == 2 {
                    let other = if edge_tris[e][0] == t { edge_tris[e][1] } else { edge_tris[e][0] };
                    let a = tri[(i + 1) % 3];
                    let b = tri[(i + 2) % 3];
                    let o = triangles[other];
                    let same_dir = (0..3).any(|j| o[j] == a && o[(j + 1) % 3] == b);
                    if same_dir {
                        return Err(Error::Topology(format!("triangles {t} and {other} overlap")).into());
                    }
                    continue;
                }
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                if next[a] != usize::MAX {
                    return Err(BuildError::Pinch(a));
                }
                next[a] = b;
            }
        }

        let mut visited = vec![false; nv];
        let mut loops: Vec<Vec<usize>> = Vec::new();
        for start in 0..nv {
            if next[start] == usize::MAX || visited[start] {
                continue;
            }
            let mut lp = Vec::new();
            let mut v = start;
            loop {
                if visited[v] {
                    if v != start {
                        return Err(BuildError::Pinch(v));
                    }
                    break;
                }
                visited[v] = true;
                lp.push(v);
                v = next[v];
                if v == usize::MAX {
                    return Err(Error::Topology("open boundary chain".into()).into());
                }
            }
            loops.push(lp);
        }

        let mut keyed: Vec<(bool, usize, Vec<usize>)> = loops
            .into_iter()
            .map(|lp| {
                let pts: Vec<Point> = lp.iter().map(|&v| vertices[v]).collect();
                let outer = polygon_area(&pts) > 0.0;
                let min_pos = lp.iter().enumerate().min_by_key(|&(_, v)| *v).map(|(i, _)| i).unwrap();
                let mut lp = lp;
                lp.rotate_left(min_pos);
                (!outer, lp[0], lp)
            })
            .collect();
        keyed.sort_by_key(|a| (a.0, a.1));
        let boundary_loops: Vec<Vec<usize>> = keyed.into_iter().map(|k| k.2).collect();

        let mesh = Mesh {
            vertices,
            triangles,
            boundary_loops,
            hole_loops: Vec::new(),
            corners: Vec::new(),
            edges,
            tri_edges,
            edge_tris,
            vertex_tris,
        };
        if mesh.component_count() != 1 {
            return Err(Error::Topology("mesh is not connected".into()).into());
        }
        let mut mesh = mesh;
        mesh.corners = (0..mesh.boundary_loops.len())
            .map(|l| mesh.loop_corners(l, DEFAULT_CORNER_THRESHOLD))
            .collect();
        Ok(mesh)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    pub fn tri_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn tri_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.tri_points(t);
        0.5 * orient2d(a, b, c)
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.tri_points(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.tri_area(t)).sum()
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edges[e];
        let (p, q) = (self.vertices[a], self.vertices[b]);
        [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        dist(self.vertices[a], self.vertices[b])
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_tris[e].len() == 1
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        let key = [a.min(b), a.max(b)];
        self.vertex_tris[a]
            .iter()
            .flat_map(|&t| self.tri_edges[t])
            .find(|&e| self.edges[e] == key)
    }

    pub fn mean_edge_length(&self) -> f64 {
        if self.edges.is_empty() {
            return 0.0;
        }
        (0..self.edges.len()).map(|e| self.edge_length(e)).sum::<f64>() / self.edges.len() as f64
    }

    /// Mean length of the edges touching vertex `v`.
    pub fn local_edge_length(&self, v: usize) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for &t in &self.vertex_tris[v] {
            for &e in &self.tri_edges[t] {
                let [a, b] = self.edges[e];
                if a == v || b == v {
                    sum += self.edge_length(e);
                    n += 1;
                }
            }
        }
        if n == 0 { 0.0 } else { sum / n as f64 }
    }

    pub fn is_hole_loop(&self, l: usize) -> bool {
        self.hole_loops.iter().any(|h| h.loop_index == l)
    }

    /// Loop per vertex (`None` for interior vertices).
    pub fn vertex_loop(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.vertices.len()];
        for (l, lp) in self.boundary_loops.iter().enumerate() {
            for &v in lp {
                out[v] = Some(l);
            }
        }
        out
    }

    /// Total interior angle of the domain at each vertex of loop `l`.
    pub fn loop_angles(&self, l: usize) -> Vec<f64> {
        self.boundary_loops[l].iter().map(|&v| self.vertex_angle(v)).collect()
    }

    pub fn vertex_angle(&self, v: usize) -> f64 {
        self.vertex_tris[v]
            .iter()
            .map(|&t| {
                let tri = self.triangles[t];
                let i = tri.iter().position(|&w| w == v).unwrap();
                corner_angle(
                    self.vertices[tri[(i + 2) % 3]],
                    self.vertices[v],
                    self.vertices[tri[(i + 1) % 3]],
                )
            })
            .sum()
    }

    fn loop_corners(&self, l: usize, threshold: f64) -> Vec<CornerInfo> {
        self.boundary_loops[l]
            .iter()
            .zip(self.loop_angles(l))
            .filter_map(|(&v, alpha)| {
                let delta = PI - alpha;
                (delta.abs() > threshold).then_some(CornerInfo { vertex: v, loop_index: l, alpha, delta })
            })
            .collect()
    }

    fn component_count(&self) -> usize {
        let n = self.triangles.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for ts in &self.edge_tris {
            if ts.len() == 2 {
                let (a, b) = (find(&mut parent, ts[0]), find(&mut parent, ts[1]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        (0..n).filter(|&t| find(&mut parent, t) == t).count()
    }

    /// Hole loop vertices ordered counter-clockwise around the hole.
    pub fn hole_cycle_vertices(&self, hole: usize) -> Vec<usize> {
        let mut c = self.boundary_loops[self.hole_loops[hole].loop_index].clone();
        c.reverse();
        c
    }

    /// Index of the triangle containing `p`, using a linear scan.
    pub fn find_triangle(&self, p: Point) -> Option<usize> {
        let tol = 1e-12 * self.mean_edge_length().max(1e-300).powi(2);
        (0..self.triangles.len()).find(|&t| {
            let [a, b, c] = self.tri_points(t);
            orient2d(a, b, p) >= -tol && orient2d(b, c, p) >= -tol && orient2d(c, a, p) >= -tol
        })
    }
}

fn compact(vertices: &[Point], triangles: &[[usize; 3]]) -> Result<(Vec<Point>, Vec<[usize; 3]>)> {
    let mut map = vec![usize::MAX; vertices.len()];
    let mut out_v = Vec::new();
    let mut out_t = Vec::with_capacity(triangles.len());
    let mut used = vec![false; vertices.len()];
    for tri in triangles {
        for &v in tri {
            if v >= vertices.len() {
                return Err(Error::Topology(format!("triangle references missing vertex {v}")));
            }
            used[v] = true;
        }
    }
    for (i, &u) in used.iter().enumerate() {
        if u {
            map[i] = out_v.len();
            out_v.push(vertices[i]);
        }
    }
    for tri in triangles {
        out_t.push([map[tri[0]], map[tri[1]], map[tri[2]]]);
    }
    Ok((out_v, out_t))
}

/// Corner angles, smooth turning and Euler characteristic over every boundary loop.
pub fn boundary_analysis(mesh: &Mesh, corner_threshold: f64) -> BoundaryAnalysis {
    let mut corners = Vec::new();
    let mut smooth_turning = 0.0;
    let mut loops = Vec::new();
    for l in 0..mesh.boundary_loops.len() {
        let angles = mesh.loop_angles(l);
        let mut lc = Vec::new();
        let mut smooth = 0.0;
        let mut total = 0.0;
        for (&v, alpha) in mesh.boundary_loops[l].iter().zip(angles) {
            let delta = PI - alpha;
            total += delta;
            if delta.abs() > corner_threshold {
                lc.push(CornerInfo { vertex: v, loop_index: l, alpha, delta });
            } else {
                smooth += delta;
            }
        }
        corners.extend(lc.iter().copied());
        smooth_turning += smooth;
        loops.push(LoopAnalysis {
            loop_index: l,
            is_hole: mesh.is_hole_loop(l),
            corners: lc,
            smooth_turning: smooth,
            total_turning: total,
        });
    }
    BoundaryAnalysis { corners, smooth_turning, chi: mesh.euler_characteristic(), loops }
}

/// Removes the triangles of each hole and records the new boundary loops.
pub fn drill_holes(mesh: &Mesh, holes: &[HoleSpec]) -> Result<Mesh> {
    let nt = mesh.triangles.len();
    let on_boundary = {
        let mut b = vec![false; mesh.vertices.len()];
        for lp in &mesh.boundary_loops {
            for &v in lp {
                b[v] = true;
            }
        }
        b
    };
    let mut owner = vec![usize::MAX; nt];
    let mut vertex_owner = vec![usize::MAX; mesh.vertices.len()];
    for (h, spec) in holes.iter().enumerate() {
        spec.validate()?;
        let removed: Vec<usize> = if spec.single_triangle {
            match mesh.find_triangle(spec.center) {
                Some(t) => vec![t],
                None => {
                    return Err(Error::Placement(format!(
                        "hole {h} center ({}, {}) lies outside the mesh",
                        spec.center[0], spec.center[1]
                    )))
                }
            }
        } else {
            (0..nt).filter(|&t| dist(mesh.centroid(t), spec.center) < spec.radius).collect()
        };
        if removed.is_empty() {
            return Err(Error::Placement(format!(
                "hole {h} removes no triangle (radius {} below mesh resolution or center outside)",
                spec.radius
            )));
        }
        for &t in &removed {
            if owner[t] != usize::MAX {
                return Err(Error::Placement(format!("holes {} and {h} overlap", owner[t])));
            }
            owner[t] = h;
            for &v in &mesh.triangles[t] {
                if on_boundary[v] {
                    return Err(Error::Placement(format!("hole {h} touches the domain boundary")));
                }
                if vertex_owner[v] != usize::MAX && vertex_owner[v] != h {
                    return Err(Error::Placement(format!("holes {} and {h} are not disjoint", vertex_owner[v])));
                }
                vertex_owner[v] = h;
            }
        }
    }

    let kept: Vec<[usize; 3]> = (0..nt).filter(|&t| owner[t] == usize::MAX).map(|t| mesh.triangles[t]).collect();
    if kept.is_empty() {
        return Err(Error::Placement("holes remove the whole mesh".into()));
    }
    let mut map = vec![usize::MAX; mesh.vertices.len()];
    let mut verts = Vec::new();
    for tri in &kept {
        for &v in tri {
            if map[v] == usize::MAX {
                map[v] = 0;
            }
        }
    }
    for (v, m) in map.iter_mut().enumerate() {
        if *m != usize::MAX {
            *m = verts.len();
            verts.push(mesh.vertices[v]);
        }
    }
    let tris: Vec<[usize; 3]> = kept.iter().map(|t| [map[t[0]], map[t[1]], map[t[2]]]).collect();

    let mut out = match Mesh::build(verts, tris) {
        Ok(m) => m,
        Err(BuildError::Pinch(v)) => {
            let old = map.iter().position(|&m| m == v).unwrap();
            let hole = vertex_owner[old];
            if hole == usize::MAX {
                return Err(Error::Topology(format!("boundary pinched at vertex {old}")));
            }
            return Err(Error::RemeshingNeeded { hole });
        }
        Err(BuildError::Other(Error::Topology(msg))) if msg.contains("not connected") => {
            return Err(Error::Topology("hole removal disconnects the domain".into()));
        }
        Err(BuildError::Other(e)) => return Err(e),
    };

    let loop_sets: Vec<Vec<usize>> = out
        .boundary_loops
        .iter()
        .map(|lp| {
            let mut s = lp.clone();
            s.sort_unstable();
            s
        })
        .collect();
    let mut claimed = vec![false; out.boundary_loops.len()];
    let mut hole_loops = Vec::new();
    for hl in &mesh.hole_loops {
        let mut s: Vec<usize> = mesh.boundary_loops[hl.loop_index].iter().map(|&v| map[v]).collect();
        s.sort_unstable();
        let l = loop_sets
            .iter()
            .position(|ls| *ls == s)
            .ok_or_else(|| Error::Placement("a new hole merges with an existing hole".into()))?;
        claimed[l] = true;
        hole_loops.push(HoleLoop { loop_index: l, spec: hl.spec });
    }
    for (l, lp) in mesh.boundary_loops.iter().enumerate() {
        if mesh.is_hole_loop(l) {
            continue;
        }
        let mut s: Vec<usize> = lp.iter().map(|&v| map[v]).collect();
        s.sort_unstable();
        if let Some(i) = loop_sets.iter().position(|ls| *ls == s) {
            claimed[i] = true;
        }
    }
    for (h, spec) in holes.iter().enumerate() {
        let candidates: Vec<usize> = (0..out.boundary_loops.len())
            .filter(|&l| !claimed[l])
            .filter(|&l| {
                out.boundary_loops[l].iter().all(|&v| {
                    let old = map.iter().position(|&m| m == v);
                    old.is_some_and(|o| vertex_owner[o] == h)
                })
            })
            .collect();
        if candidates.len() != 1 {
            return Err(Error::RemeshingNeeded { hole: h });
        }
        claimed[candidates[0]] = true;
        hole_loops.push(HoleLoop { loop_index: candidates[0], spec: *spec });
    }
    if claimed.iter().any(|c| !c) {
        return Err(Error::Topology("hole removal produced unexpected boundary loops".into()));
    }
    out.hole_loops = hole_loops;
    Ok(out)
}
