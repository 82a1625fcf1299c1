//! Uniform-grid point location on a triangle mesh.

use crate::mesh::{dist, orient2d, Mesh, Point};

pub struct Locator<'a> {
    mesh: &'a Mesh,
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<usize>>,
}

impl<'a> Locator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &mesh.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let nt = mesh.triangles.len().max(1);
        let w = (hi[0] - lo[0]).max(1e-12);
        let hgt = (hi[1] - lo[1]).max(1e-12);
        let cell = (w * hgt / nt as f64).sqrt().max(1e-12) * 1.5;
        let nx = ((w / cell).ceil() as usize).max(1);
        let ny = ((hgt / cell).ceil() as usize).max(1);
        let mut cells = vec![Vec::new(); nx * ny];
        let mut loc = Self { mesh, origin: lo, cell, nx, ny, cells: Vec::new() };
        for t in 0..mesh.triangles.len() {
            let pts = mesh.tri_points(t);
            let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in pts {
                for k in 0..2 {
                    a[k] = a[k].min(p[k]);
                    b[k] = b[k].max(p[k]);
                }
            }
            let (i0, j0) = loc.cell_of(a);
            let (i1, j1) = loc.cell_of(b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    cells[j * nx + i].push(t);
                }
            }
        }
        loc.cells = cells;
        loc
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let i = ((p[0] - self.origin[0]) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((p[1] - self.origin[1]) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    /// Containing triangle and barycentric coordinates of `p`, if inside the mesh.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let (i, j) = self.cell_of(p);
        for &t in &self.cells[j * self.nx + i] {
            let [a, b, c] = self.mesh.tri_points(t);
            let area = orient2d(a, b, c);
            let l = [orient2d(b, c, p) / area, orient2d(c, a, p) / area, orient2d(a, b, p) / area];
            let worst = l.iter().cloned().fold(f64::INFINITY, f64::min);
            if worst >= -1e-12 {
                return Some((t, l));
            }
        }
        None
    }

    /// P1 interpolation of per-vertex values at `p`.
    pub fn interpolate(&self, values: &[f64], p: Point) -> Option<f64> {
        let (t, l) = self.locate(p)?;
        let tri = self.mesh.triangles[t];
        Some(l[0] * values[tri[0]] + l[1] * values[tri[1]] + l[2] * values[tri[2]])
    }

    /// Closest vertex, lowest index on ties.
    pub fn nearest_vertex(&self, p: Point) -> usize {
        let mut best = (f64::INFINITY, 0usize);
        for (v, q) in self.mesh.vertices.iter().enumerate() {
            let d = dist(*q, p);
            if d < best.0 {
                best = (d, v);
            }
        }
        best.1
    }
}
