//! Crouzeix-Raviart and P1 discretizations of the Laplacian with boundary-tangent
//! Dirichlet data `g = t^4`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::sparse::{CsrMatrix, TripletBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum SpaceKind {
    /// Edge-midpoint nonconforming elements.
    #[default]
    #[serde(rename = "CR")]
    Cr,
    #[serde(rename = "P1")]
    P1,
}

impl SpaceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpaceKind::Cr => "CR",
            SpaceKind::P1 => "P1",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CR" => Ok(SpaceKind::Cr),
            "P1" => Ok(SpaceKind::P1),
            other => Err(Error::Invalid(format!("unknown space '{other}', expected CR or P1"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DofSpace {
    pub kind: SpaceKind,
    pub sites: Vec<Point>,
    /// Per-triangle DOFs; for CR entry `i` sits on the edge opposite vertex `i`.
    pub tri_dofs: Vec<[usize; 3]>,
    /// Boundary loop of each site, `None` for interior sites.
    pub site_loop: Vec<Option<usize>>,
    /// DOF cycles of the hole loops, counter-clockwise around each hole.
    pub hole_cycles: Vec<Vec<usize>>,
    pub hole_degrees: Vec<i32>,
}

impl DofSpace {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

/// Representation field `u = c^4`, one 2-vector per DOF site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldU {
    pub space: SpaceKind,
    pub values: Vec<[f64; 2]>,
}

impl FieldU {
    pub fn zeros(space: &DofSpace) -> Self {
        Self { space: space.kind, values: vec![[0.0; 2]; space.len()] }
    }

    pub fn from_fn(space: &DofSpace, f: impl Fn(Point) -> [f64; 2]) -> Self {
        Self { space: space.kind, values: space.sites.iter().map(|&p| f(p)).collect() }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.values.iter().flat_map(|v| [v[0], v[1]]).collect()
    }

    pub fn from_flat(space: SpaceKind, x: &[f64]) -> Self {
        Self { space, values: x.chunks_exact(2).map(|c| [c[0], c[1]]).collect() }
    }
}

#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub kind: SpaceKind,
    /// Scalar stiffness; the vector system uses one copy per component.
    pub stiffness: CsrMatrix,
    /// Right-hand side per component, interleaved like the unknowns.
    pub rhs: Vec<f64>,
    pub dirichlet: Vec<Option<[f64; 2]>>,
    /// Lumped area attached to each site.
    pub weights: Vec<f64>,
    pub tri_dofs: Vec<[usize; 3]>,
    pub local: Vec<[[f64; 3]; 3]>,
    /// Site positions.
    pub sites: Vec<Point>,
}

impl LinearSystem {
    pub fn len(&self) -> usize {
        self.dirichlet.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirichlet.is_empty()
    }

    /// Full `2n x 2n` stiffness with interleaved components.
    pub fn vector_stiffness(&self) -> CsrMatrix {
        let n = self.len();
        let mut b = TripletBuilder::with_capacity(2 * n, 2 * n, 2 * self.stiffness.nnz());
        for (r, c, v) in self.stiffness.triplets() {
            b.push(2 * r, 2 * c, v);
            b.push(2 * r + 1, 2 * c + 1, v);
        }
        b.build()
    }
}

/// Gradients of the barycentric coordinates of triangle `[a, b, c]`, and its area.
pub fn barycentric_gradients(p: [Point; 3]) -> Result<([[f64; 2]; 3], f64)> {
    let [a, b, c] = p;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    if det <= 0.0 || !det.is_finite() {
        return Err(Error::Geometry("non-positive triangle area".into()));
    }
    let area = 0.5 * det;
    let g = [
        [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
        [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
        [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
    ];
    Ok((g, area))
}

/// P1 element stiffness `int grad(l_i) . grad(l_j)`.
pub fn p1_local(p: [Point; 3]) -> Result<[[f64; 3]; 3]> {
    let (g, area) = barycentric_gradients(p)?;
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
        }
    }
    Ok(k)
}

/// Scalar P1 stiffness matrix on the mesh vertices.
pub fn p1_stiffness(mesh: &Mesh) -> Result<CsrMatrix> {
    let n = mesh.num_vertices();
    let mut b = TripletBuilder::with_capacity(n, n, 9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let k = p1_local(mesh.tri_points(t)).map_err(|_| Error::DegenerateTriangle(t))?;
        for i in 0..3 {
            for j in 0..3 {
                b.push(tri[i], tri[j], k[i][j]);
            }
        }
    }
    Ok(b.build())
}

/// Lumped vertex areas (one third of each incident triangle).
pub fn lumped_vertex_areas(mesh: &Mesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let a = mesh.tri_area(t) / 3.0;
        for &v in tri {
            w[v] += a;
        }
    }
    w
}

fn tangent_power4(a: Point, b: Point) -> [f64; 2] {
    let th = (b[1] - a[1]).atan2(b[0] - a[0]);
    [(4.0 * th).cos(), (4.0 * th).sin()]
}

pub fn build_space(mesh: &Mesh, kind: SpaceKind) -> DofSpace {
    let hole_degrees = mesh.hole_loops.iter().map(|h| h.spec.degree).collect();
    match kind {
        SpaceKind::P1 => {
            let site_loop = mesh.vertex_loop();
            let hole_cycles = (0..mesh.hole_loops.len()).map(|h| mesh.hole_cycle_vertices(h)).collect();
            DofSpace {
                kind,
                sites: mesh.vertices.clone(),
                tri_dofs: mesh.triangles.clone(),
                site_loop,
                hole_cycles,
                hole_degrees,
            }
        }
        SpaceKind::Cr => {
            let sites = (0..mesh.edges.len()).map(|e| mesh.edge_midpoint(e)).collect();
            let mut site_loop = vec![None; mesh.edges.len()];
            for (l, lp) in mesh.boundary_loops.iter().enumerate() {
                for i in 0..lp.len() {
                    let e = mesh.edge_between(lp[i], lp[(i + 1) % lp.len()]).expect("loop edge");
                    site_loop[e] = Some(l);
                }
            }
            let hole_cycles = (0..mesh.hole_loops.len())
                .map(|h| {
                    let c = mesh.hole_cycle_vertices(h);
                    (0..c.len()).map(|i| mesh.edge_between(c[i], c[(i + 1) % c.len()]).expect("loop edge")).collect()
                })
                .collect();
            DofSpace { kind, sites, tri_dofs: mesh.tri_edges.clone(), site_loop, hole_cycles, hole_degrees }
        }
    }
}

/// Assembles the stiffness system and the Dirichlet data on every boundary loop
/// that is not a hole.
pub fn assemble(space: &DofSpace, mesh: &Mesh) -> Result<LinearSystem> {
    let n = space.len();
    let scale = match space.kind {
        SpaceKind::P1 => 1.0,
        SpaceKind::Cr => 4.0,
    };
    let mut b = TripletBuilder::with_capacity(n, n, 9 * mesh.num_triangles());
    let mut weights = vec![0.0; n];
    let mut local = Vec::with_capacity(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let mut k = p1_local(mesh.tri_points(t)).map_err(|_| Error::DegenerateTriangle(t))?;
        for row in &mut k {
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
        let d = space.tri_dofs[t];
        let a3 = mesh.tri_area(t) / 3.0;
        for i in 0..3 {
            weights[d[i]] += a3;
            for j in 0..3 {
                b.push(d[i], d[j], k[i][j]);
            }
        }
        local.push(k);
    }

    let mut dirichlet = vec![None; n];
    for (l, lp) in mesh.boundary_loops.iter().enumerate() {
        if mesh.is_hole_loop(l) {
            continue;
        }
        let m = lp.len();
        for i in 0..m {
            let prev = mesh.vertices[lp[(i + m - 1) % m]];
            let cur = mesh.vertices[lp[i]];
            let next = mesh.vertices[lp[(i + 1) % m]];
            match space.kind {
                SpaceKind::P1 => dirichlet[lp[i]] = Some(tangent_power4(prev, cur)),
                SpaceKind::Cr => {
                    let e = mesh.edge_between(lp[i], lp[(i + 1) % m]).expect("loop edge");
                    dirichlet[e] = Some(tangent_power4(cur, next));
                }
            }
        }
    }
    Ok(LinearSystem {
        kind: space.kind,
        stiffness: b.build(),
        rhs: vec![0.0; 2 * n],
        dirichlet,
        weights,
        tri_dofs: space.tri_dofs.clone(),
        local,
        sites: space.sites.clone(),
    })
}
