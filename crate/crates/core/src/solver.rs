//! Constrained minimization of the Dirichlet energy with per-hole degree
//! constraints, solved by Newton iteration on the Lagrangian.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use crate::assembly::FieldU;
use crate::assembly::{assemble, build_space, DofSpace, LinearSystem, SpaceKind};
use crate::degree::{hole_constraints, winding_integer, ConstraintForm, MIN_NORM};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::sparse::{norm, solve_lu, solve_spd, CsrMatrix, TripletBuilder};

pub const DEFAULT_GL_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub max_iter: usize,
    /// Relative tolerance on the gradient and constraint residuals.
    pub tol: f64,
    /// Holes whose loop values are constrained to unit norm. Their degree is
    /// carried by the seeded winding rather than the quadratic constraint.
    pub unit_norm_holes: Vec<usize>,
    /// Ginzburg-Landau penalty parameter; `None` disables the penalty.
    pub gl_penalty: Option<f64>,
    /// Put ones on the multiplier diagonal when the KKT matrix is singular.
    pub singular_fallback: bool,
    /// Solve even when hole degrees contradict the Poincare-Hopf target.
    pub override_topology: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iter: 30,
            tol: 1e-8,
            unit_norm_holes: Vec::new(),
            gl_penalty: None,
            singular_fallback: true,
            override_topology: false,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self, n_holes: usize) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::Invalid("max_iter must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if let Some(eps) = self.gl_penalty {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::Invalid(format!("gl_penalty epsilon must be positive, got {eps}")));
            }
        }
        if let Some(&h) = self.unit_norm_holes.iter().find(|&&h| h >= n_holes) {
            return Err(Error::Invalid(format!("unit_norm_holes refers to hole {h}, only {n_holes} holes exist")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Linear solves performed, counting the initial Dirichlet solve.
    pub iterations: usize,
    pub converged: bool,
    /// `x^T M_j x - t_j` per hole.
    pub constraint_residuals: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub unit_norm_residual: f64,
    pub gradient_norm: f64,
    pub gradient_scale: f64,
    pub dirichlet_energy: f64,
    pub penalty_energy: f64,
    pub fallback_iterations: usize,
}

struct Problem<'a> {
    sys: &'a LinearSystem,
    cons: &'a [ConstraintForm],
    free: Vec<usize>,
    fidx: Vec<usize>,
    unit_sites: Vec<usize>,
    eps: Option<f64>,
}

struct Residual {
    g: Vec<f64>,
    c: Vec<f64>,
    q: Vec<f64>,
}

impl Residual {
    fn merit(&self) -> f64 {
        (norm(&self.g).powi(2) + norm(&self.c).powi(2) + norm(&self.q).powi(2)).sqrt()
    }
}

struct Trial {
    merit: f64,
    x: Vec<f64>,
    lam: Vec<f64>,
    mu: Vec<f64>,
    res: Residual,
}

impl Problem<'_> {
    fn nf(&self) -> usize {
        self.free.len()
    }

    fn kx_row(&self, x: &[f64], s: usize) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (c, v) in self.sys.stiffness.row(s) {
            out[0] += v * x[2 * c];
            out[1] += v * x[2 * c + 1];
        }
        out
    }

    fn residual(&self, x: &[f64], lam: &[f64], mu: &[f64]) -> Residual {
        let nf = self.nf();
        let mut g = vec![0.0; 2 * nf];
        for (f, &s) in self.free.iter().enumerate() {
            let kx = self.kx_row(x, s);
            g[2 * f] = kx[0] - self.sys.rhs[2 * s];
            g[2 * f + 1] = kx[1] - self.sys.rhs[2 * s + 1];
            if let Some(eps) = self.eps {
                let u = [x[2 * s], x[2 * s + 1]];
                let r = u[0] * u[0] + u[1] * u[1] - 1.0;
                let w = self.sys.weights[s] / (eps * eps);
                g[2 * f] += w * r * u[0];
                g[2 * f + 1] += w * r * u[1];
            }
        }
        let mut c = Vec::with_capacity(self.cons.len());
        for (j, cf) in self.cons.iter().enumerate() {
            for (r, v) in cf.apply(x) {
                let f = self.fidx[r / 2];
                g[2 * f + r % 2] += 2.0 * lam[j] * v;
            }
            c.push(cf.residual(x));
        }
        let mut q = Vec::with_capacity(self.unit_sites.len());
        for (k, &s) in self.unit_sites.iter().enumerate() {
            let f = self.fidx[s];
            let u = [x[2 * s], x[2 * s + 1]];
            g[2 * f] += 2.0 * mu[k] * u[0];
            g[2 * f + 1] += 2.0 * mu[k] * u[1];
            q.push(u[0] * u[0] + u[1] * u[1] - 1.0);
        }
        Residual { g, c, q }
    }

    /// With `convex` the negative part of the penalty curvature is dropped.
    fn kkt(&self, x: &[f64], lam: &[f64], mu: &[f64], fallback: bool, convex: bool) -> CsrMatrix {
        let nf = self.nf();
        let nc = self.cons.len();
        let dim = 2 * nf + nc + self.unit_sites.len();
        let mut b = TripletBuilder::with_capacity(dim, dim, 2 * self.sys.stiffness.nnz() + 8 * nf);
        for (f, &s) in self.free.iter().enumerate() {
            for (c, v) in self.sys.stiffness.row(s) {
                let fc = self.fidx[c];
                if fc != usize::MAX {
                    b.push(2 * f, 2 * fc, v);
                    b.push(2 * f + 1, 2 * fc + 1, v);
                }
            }
            if let Some(eps) = self.eps {
                let u = [x[2 * s], x[2 * s + 1]];
                let r = u[0] * u[0] + u[1] * u[1] - 1.0;
                let r = if convex { r.max(0.0) } else { r };
                let w = self.sys.weights[s] / (eps * eps);
                b.push(2 * f, 2 * f, w * (r + 2.0 * u[0] * u[0]));
                b.push(2 * f, 2 * f + 1, w * 2.0 * u[0] * u[1]);
                b.push(2 * f + 1, 2 * f, w * 2.0 * u[0] * u[1]);
                b.push(2 * f + 1, 2 * f + 1, w * (r + 2.0 * u[1] * u[1]));
            }
        }
        for (j, cf) in self.cons.iter().enumerate() {
            let row = 2 * nf + j;
            for r in cf.cycle_rows() {
                let fr = 2 * self.fidx[r / 2] + r % 2;
                for (c, v) in cf.matrix.row(r) {
                    let fc = 2 * self.fidx[c / 2] + c % 2;
                    b.push(fr, fc, 2.0 * lam[j] * v);
                }
            }
            for (r, v) in cf.apply(x) {
                let fr = 2 * self.fidx[r / 2] + r % 2;
                b.push(fr, row, 2.0 * v);
                b.push(row, fr, 2.0 * v);
            }
            if fallback {
                b.push(row, row, 1.0);
            }
        }
        for (k, &s) in self.unit_sites.iter().enumerate() {
            let row = 2 * nf + nc + k;
            let f = self.fidx[s];
            b.push(2 * f, 2 * f, 2.0 * mu[k]);
            b.push(2 * f + 1, 2 * f + 1, 2.0 * mu[k]);
            b.push(2 * f, row, 2.0 * x[2 * s]);
            b.push(row, 2 * f, 2.0 * x[2 * s]);
            b.push(2 * f + 1, row, 2.0 * x[2 * s + 1]);
            b.push(row, 2 * f + 1, 2.0 * x[2 * s + 1]);
            if fallback {
                b.push(row, row, 1.0);
            }
        }
        b.build()
    }

    /// Backtracking on the KKT residual norm. Unit-norm sites are projected
    /// back to the circle and steps that change a hole winding are rejected.
    fn line_search(
        &self,
        x: &[f64],
        lam: &[f64],
        mu: &[f64],
        step: &[f64],
        m0: f64,
        unit_cycles: &[(&[usize], i64)],
    ) -> Option<Trial> {
        let (nf, nc, nu) = (self.nf(), self.cons.len(), self.unit_sites.len());
        let mut best: Option<Trial> = None;
        let mut alpha = 1.0;
        for _ in 0..=8 {
            let mut xt = x.to_vec();
            for (f, &s) in self.free.iter().enumerate() {
                xt[2 * s] += alpha * step[2 * f];
                xt[2 * s + 1] += alpha * step[2 * f + 1];
            }
            for &s in &self.unit_sites {
                let nrm = xt[2 * s].hypot(xt[2 * s + 1]);
                if nrm > 1e-12 {
                    xt[2 * s] /= nrm;
                    xt[2 * s + 1] /= nrm;
                }
            }
            for cf in self.cons {
                let v = cf.value(&xt);
                if v > 0.0 && cf.target > 0.0 {
                    let k = (cf.target / v).sqrt();
                    for &s in &cf.cycle {
                        xt[2 * s] *= k;
                        xt[2 * s + 1] *= k;
                    }
                }
            }
            let lt: Vec<f64> = (0..nc).map(|j| lam[j] + alpha * step[2 * nf + j]).collect();
            let mt: Vec<f64> = (0..nu).map(|k| mu[k] + alpha * step[2 * nf + nc + k]).collect();
            let rt = self.residual(&xt, &lt, &mt);
            let merit = rt.merit();
            let keeps_winding = unit_cycles.iter().all(|(cyc, w)| cycle_winding(&xt, cyc) == Some(*w));
            if merit.is_finite() && keeps_winding {
                if best.as_ref().is_none_or(|b| merit < b.merit) {
                    best = Some(Trial { merit, x: xt, lam: lt, mu: mt, res: rt });
                }
                if merit <= m0 {
                    break;
                }
            }
            alpha *= 0.5;
        }
        best
    }

    fn converged(&self, r: &Residual, gscale: f64, tol: f64) -> bool {
        norm(&r.g) <= tol * gscale
            && r.c.iter().zip(self.cons).all(|(c, cf)| c.abs() <= tol * cf.target.abs().max(1.0))
            && r.q.iter().all(|q| q.abs() <= tol)
    }
}

/// Stationary point of `1/2 x^T K x - b^T x + sum_j lambda_j (x^T M_j x - t_j)`
/// with optional unit-norm hole constraints and Ginzburg-Landau penalty.
pub fn solve(sys: &LinearSystem, constraints: &[ConstraintForm], opts: &SolveOptions) -> Result<(FieldU, SolveReport)> {
    let n_holes = constraints.iter().map(|c| c.hole + 1).max().unwrap_or(0);
    opts.validate(n_holes)?;
    let n = sys.len();
    let mut x = vec![0.0; 2 * n];
    let mut free = Vec::new();
    let mut fidx = vec![usize::MAX; n];
    for s in 0..n {
        match sys.dirichlet[s] {
            Some(g) => {
                x[2 * s] = g[0];
                x[2 * s + 1] = g[1];
            }
            None => {
                fidx[s] = free.len();
                free.push(s);
            }
        }
    }
    for cf in constraints {
        if let Some(&s) = cf.cycle.iter().find(|&&s| fidx[s] == usize::MAX) {
            return Err(Error::Invalid(format!("hole {} cycle contains Dirichlet site {s}", cf.hole)));
        }
    }
    let mut unit_sites: Vec<usize> = Vec::new();
    for &h in &opts.unit_norm_holes {
        for cf in constraints.iter().filter(|c| c.hole == h) {
            unit_sites.extend(cf.cycle.iter().copied());
        }
    }
    unit_sites.sort_unstable();
    unit_sites.dedup();

    let active: Vec<ConstraintForm> =
        constraints.iter().filter(|c| !opts.unit_norm_holes.contains(&c.hole)).cloned().collect();
    let prob = Problem { sys, cons: &active, free, fidx, unit_sites, eps: opts.gl_penalty };
    let nf = prob.nf();
    let nc = active.len();
    let nu = prob.unit_sites.len();

    let mut fixed: Vec<bool> = (0..n).map(|s| prob.fidx[s] == usize::MAX).collect();
    let gscale = harmonic_fill(sys, &mut x, &fixed)?;
    let mut iterations = usize::from(nf > 0);
    if prob.eps.is_some() || nu > 0 {
        for cf in constraints {
            seed_hole(sys, cf, &mut x);
            for &s in &cf.cycle {
                fixed[s] = true;
            }
        }
        harmonic_fill(sys, &mut x, &fixed)?;
    }
    if prob.eps.is_some() {
        for &s in &prob.free {
            let nrm = x[2 * s].hypot(x[2 * s + 1]);
            if nrm > 1e-12 {
                x[2 * s] /= nrm;
                x[2 * s + 1] /= nrm;
            }
        }
    }

    let unit_cycles: Vec<(&[usize], i64)> = constraints
        .iter()
        .filter(|c| opts.unit_norm_holes.contains(&c.hole))
        .filter_map(|c| cycle_winding(&x, &c.cycle).map(|w| (c.cycle.as_slice(), w)))
        .collect();
    let mut lam = vec![0.0; nc];
    let mut mu = vec![0.0; nu];
    let mut res = prob.residual(&x, &lam, &mu);
    let mut converged = prob.converged(&res, gscale, opts.tol);
    let mut fallback_iterations = 0;
    while !converged && iterations < opts.max_iter && nf > 0 {
        let rhs_k: Vec<f64> = res.g.iter().chain(&res.c).chain(&res.q).map(|v| -v).collect();
        let m0 = res.merit();
        let mut best: Option<Trial> = None;
        for convex in [false, true] {
            if convex && (prob.eps.is_none() || best.as_ref().is_some_and(|b| b.merit <= 0.9 * m0)) {
                break;
            }
            let step = match solve_lu(&prob.kkt(&x, &lam, &mu, false, convex), &rhs_k) {
                Ok(s) => s,
                Err(e) => {
                    if !opts.singular_fallback {
                        return Err(e);
                    }
                    fallback_iterations += 1;
                    solve_lu(&prob.kkt(&x, &lam, &mu, true, convex), &rhs_k)?
                }
            };
            if let Some(t) = prob.line_search(&x, &lam, &mu, &step, m0, &unit_cycles) {
                if best.as_ref().is_none_or(|b| t.merit < b.merit) {
                    best = Some(t);
                }
            }
        }
        iterations += 1;
        let t = best.ok_or_else(|| Error::Solver("no finite, winding-preserving Newton step".into()))?;
        x = t.x;
        lam = t.lam;
        mu = t.mu;
        res = t.res;
        converged = prob.converged(&res, gscale, opts.tol);
    }

    let field = FieldU::from_flat(sys.kind, &x);
    let dirichlet = dirichlet_energy(&field, sys);
    let penalty = match prob.eps {
        Some(eps) => (0..n)
            .map(|s| {
                let r = x[2 * s].powi(2) + x[2 * s + 1].powi(2) - 1.0;
                sys.weights[s] * r * r / (4.0 * eps * eps)
            })
            .sum(),
        None => 0.0,
    };
    let report = SolveReport {
        iterations,
        converged,
        constraint_residuals: constraints.iter().map(|c| c.residual(&x)).collect(),
        multipliers: constraints
            .iter()
            .map(|c| active.iter().position(|a| a.hole == c.hole).map_or(0.0, |j| lam[j]))
            .collect(),
        unit_norm_residual: res.q.iter().fold(0.0, |a: f64, b| a.max(b.abs())),
        gradient_norm: norm(&res.g),
        gradient_scale: gscale,
        dirichlet_energy: dirichlet,
        penalty_energy: penalty,
        fallback_iterations,
    };
    Ok((field, report))
}

fn cycle_winding(x: &[f64], cycle: &[usize]) -> Option<i64> {
    let vals: Vec<[f64; 2]> = cycle.iter().map(|&s| [x[2 * s], x[2 * s + 1]]).collect();
    winding_integer(&vals).ok()
}

/// Solves `K x = b` on the sites not marked `fixed`, keeping the others.
/// Returns the norm of the lifted right-hand side.
fn harmonic_fill(sys: &LinearSystem, x: &mut [f64], fixed: &[bool]) -> Result<f64> {
    let n = sys.len();
    let mut fidx = vec![usize::MAX; n];
    let mut free = Vec::new();
    for s in 0..n {
        if !fixed[s] {
            fidx[s] = free.len();
            free.push(s);
        }
    }
    let nf = free.len();
    let mut rhs = [vec![0.0; nf], vec![0.0; nf]];
    let mut kff = TripletBuilder::with_capacity(nf, nf, sys.stiffness.nnz());
    for (f, &s) in free.iter().enumerate() {
        rhs[0][f] = sys.rhs[2 * s];
        rhs[1][f] = sys.rhs[2 * s + 1];
        for (c, v) in sys.stiffness.row(s) {
            if fidx[c] == usize::MAX {
                rhs[0][f] -= v * x[2 * c];
                rhs[1][f] -= v * x[2 * c + 1];
            } else {
                kff.push(f, fidx[c], v);
            }
        }
    }
    let scale = (norm(&rhs[0]).powi(2) + norm(&rhs[1]).powi(2)).sqrt().max(1.0);
    if nf > 0 {
        let kff = kff.build();
        for comp in 0..2 {
            let y = solve_spd(&kff, &rhs[comp])?;
            for (f, &s) in free.iter().enumerate() {
                x[2 * s + comp] = y[f];
            }
        }
    }
    Ok(scale)
}

/// Overwrites a hole cycle with unit values `e^{i(d theta + phi)}` around the
/// cycle centroid, `phi` fitted to the current values.
fn seed_hole(sys: &LinearSystem, cf: &ConstraintForm, x: &mut [f64]) {
    let m = cf.cycle.len() as f64;
    let c = cf.cycle.iter().fold([0.0, 0.0], |a, &s| [a[0] + sys.sites[s][0] / m, a[1] + sys.sites[s][1] / m]);
    let d = cf.degree as f64;
    let theta: Vec<f64> = cf.cycle.iter().map(|&s| (sys.sites[s][1] - c[1]).atan2(sys.sites[s][0] - c[0])).collect();
    let mut z = [0.0, 0.0];
    for (&s, &t) in cf.cycle.iter().zip(&theta) {
        let (co, si) = ((d * t).cos(), (d * t).sin());
        z[0] += x[2 * s] * co + x[2 * s + 1] * si;
        z[1] += x[2 * s + 1] * co - x[2 * s] * si;
    }
    let phi = if z[0].hypot(z[1]) > 1e-12 { z[1].atan2(z[0]) } else { 0.0 };
    for (&s, &t) in cf.cycle.iter().zip(&theta) {
        x[2 * s] = (d * t + phi).cos();
        x[2 * s + 1] = (d * t + phi).sin();
    }
}

/// `1/2 x^T K x - b^T x + sum_j lambda_j (x^T M_j x - t_j)` plus the optional
/// penalty, over all sites (Dirichlet sites included).
pub fn lagrangian(sys: &LinearSystem, constraints: &[ConstraintForm], x: &[f64], lam: &[f64], eps: Option<f64>) -> f64 {
    let mut l = 0.5 * sys.vector_stiffness().quad_form(x) - crate::sparse::dot(&sys.rhs, x);
    for (cf, &lj) in constraints.iter().zip(lam) {
        l += lj * cf.residual(x);
    }
    if let Some(eps) = eps {
        for s in 0..sys.len() {
            let r = x[2 * s].powi(2) + x[2 * s + 1].powi(2) - 1.0;
            l += sys.weights[s] * r * r / (4.0 * eps * eps);
        }
    }
    l
}

/// Gradient of [`lagrangian`] with respect to `x`, as assembled by the solver.
pub fn lagrangian_gradient(
    sys: &LinearSystem,
    constraints: &[ConstraintForm],
    x: &[f64],
    lam: &[f64],
    eps: Option<f64>,
) -> Vec<f64> {
    let n = sys.len();
    let prob = Problem { sys, cons: constraints, free: (0..n).collect(), fidx: (0..n).collect(), unit_sites: Vec::new(), eps };
    prob.residual(x, lam, &[]).g
}

/// `x^T K x`, the full gradient energy of the field.
pub fn dirichlet_energy(field: &FieldU, sys: &LinearSystem) -> f64 {
    triangle_energies(field, sys).iter().sum()
}

/// Per-triangle contributions to [`dirichlet_energy`].
pub fn triangle_energies(field: &FieldU, sys: &LinearSystem) -> Vec<f64> {
    sys.local
        .iter()
        .zip(&sys.tri_dofs)
        .map(|(k, d)| {
            let mut e = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    let (a, b) = (field.values[d[i]], field.values[d[j]]);
                    e += k[i][j] * (a[0] * b[0] + a[1] * b[1]);
                }
            }
            e
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cross {
    /// Representative branch angle in `[0, pi/2)`.
    pub angle: f64,
    /// `|u|^(1/4)`.
    pub norm: f64,
    pub degenerate: bool,
}

pub fn cross_of(u: [f64; 2]) -> Cross {
    let n = u[0].hypot(u[1]);
    let angle = (u[1].atan2(u[0]) / 4.0).rem_euclid(PI / 2.0);
    let angle = if angle >= PI / 2.0 { 0.0 } else { angle };
    Cross { angle, norm: n.powf(0.25), degenerate: n < MIN_NORM }
}

pub fn extract_crosses(field: &FieldU) -> Vec<Cross> {
    field.values.iter().map(|&u| cross_of(u)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularCell {
    /// Triangle index, or vertex index for vertex cells.
    pub id: usize,
    pub winding: i64,
    /// Cross index, `winding / 4`.
    pub index: f64,
    pub position: Point,
    /// Vertex cell cut by the domain boundary.
    pub boundary: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SingularityScan {
    pub singular: Vec<SingularCell>,
    /// Cells with a (numerically) zero value on their cycle.
    pub unknown: Vec<usize>,
}

impl SingularityScan {
    pub fn total_winding(&self) -> i64 {
        self.singular.iter().map(|c| c.winding).sum()
    }
}

fn tri_dofs_of(field: &FieldU, mesh: &Mesh) -> Vec<[usize; 3]> {
    match field.space {
        SpaceKind::Cr => mesh.tri_edges.clone(),
        SpaceKind::P1 => mesh.triangles.clone(),
    }
}

/// Triangles around whose DOF cycle the field winds.
pub fn detect_singular_triangles(field: &FieldU, mesh: &Mesh) -> SingularityScan {
    let mut scan = SingularityScan::default();
    for (t, d) in tri_dofs_of(field, mesh).iter().enumerate() {
        let vals = [field.values[d[0]], field.values[d[1]], field.values[d[2]]];
        match winding_integer(&vals) {
            Ok(0) => {}
            Ok(w) => scan.singular.push(SingularCell {
                id: t,
                winding: w,
                index: w as f64 / 4.0,
                position: mesh.centroid(t),
                boundary: false,
            }),
            Err(_) => scan.unknown.push(t),
        }
    }
    scan
}

/// For edge-midpoint fields: windings on the midpoint polygons around each
/// vertex. Together with the triangle cells these tile the domain.
pub fn detect_singular_vertices(field: &FieldU, mesh: &Mesh) -> SingularityScan {
    let mut scan = SingularityScan::default();
    if field.space != SpaceKind::Cr {
        return scan;
    }
    for v in 0..mesh.num_vertices() {
        let mut next = std::collections::HashMap::new();
        let mut has_prev = std::collections::HashSet::new();
        for &t in &mesh.vertex_tris[v] {
            let tri = mesh.triangles[t];
            let i = tri.iter().position(|&w| w == v).unwrap();
            let e_a = mesh.tri_edges[t][(i + 2) % 3];
            let e_b = mesh.tri_edges[t][(i + 1) % 3];
            next.insert(e_a, e_b);
            has_prev.insert(e_b);
        }
        let start = next.keys().copied().filter(|e| !has_prev.contains(e)).min();
        let boundary = start.is_some();
        let mut e = start.unwrap_or_else(|| *next.keys().min().unwrap());
        let first = e;
        let mut cyc = vec![e];
        while let Some(&n) = next.get(&e) {
            if n == first {
                break;
            }
            cyc.push(n);
            e = n;
        }
        if cyc.len() < 3 {
            continue;
        }
        let vals: Vec<[f64; 2]> = cyc.iter().map(|&e| field.values[e]).collect();
        match winding_integer(&vals) {
            Ok(0) => {}
            Ok(w) => scan.singular.push(SingularCell {
                id: v,
                winding: w,
                index: w as f64 / 4.0,
                position: mesh.vertices[v],
                boundary,
            }),
            Err(_) => scan.unknown.push(v),
        }
    }
    scan
}

/// Everything produced by a solve on a mesh.
#[derive(Debug, Clone)]
pub struct Solution {
    pub space: DofSpace,
    pub system: LinearSystem,
    pub constraints: Vec<ConstraintForm>,
    pub field: FieldU,
    pub report: SolveReport,
}

/// Builds the space and system on a drilled mesh, checks the Poincare-Hopf
/// balance of the hole degrees and solves.
pub fn solve_on_mesh(mesh: &Mesh, kind: SpaceKind, opts: &SolveOptions) -> Result<Solution> {
    let holes: Vec<_> = mesh.hole_loops.iter().map(|h| h.spec).collect();
    let ledger = crate::topology::ph_check(mesh, &holes)?;
    if !ledger.pass && !opts.override_topology {
        return Err(Error::Infeasible { target: ledger.u_target, placed: ledger.placed });
    }
    let space = build_space(mesh, kind);
    let system = assemble(&space, mesh)?;
    let constraints = hole_constraints(&space)?;
    let (field, report) = solve(&system, &constraints, opts)?;
    Ok(Solution { space, system, constraints, field, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_examples() {
        let c = cross_of([1.0, 0.0]);
        assert_eq!((c.angle, c.norm), (0.0, 1.0));
        let c = cross_of([0.0, 1.0]);
        assert!((c.angle - PI / 8.0).abs() < 1e-15 && (c.norm - 1.0).abs() < 1e-15);
        let c = cross_of([-4.0, 0.0]);
        assert!((c.angle - PI / 4.0).abs() < 1e-15 && (c.norm - 2f64.sqrt()).abs() < 1e-15);
        let c = cross_of([0.0, -1.0]);
        assert!((c.angle - 3.0 * PI / 8.0).abs() < 1e-15);
        assert!(cross_of([0.0, 0.0]).degenerate);
    }

    #[test]
    fn options_validation() {
        let mut o = SolveOptions::default();
        assert!(o.validate(0).is_ok());
        o.gl_penalty = Some(0.0);
        assert!(o.validate(0).is_err());
        o.gl_penalty = None;
        o.unit_norm_holes = vec![2];
        assert!(o.validate(2).is_err());
    }
}
