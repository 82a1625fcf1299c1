//! Ginzburg-Landau energy evaluators: the hole energy `E_rho`, the Neumann
//! potential `Phi` with point sources and the renormalized energy `W`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::assembly::{lumped_vertex_areas, p1_stiffness};
use crate::error::{Error, Result};
use crate::locate::Locator;
use crate::mesh::{dist, drill_holes, HoleSpec, Mesh, Point};
use crate::sparse::{solve_spd, TripletBuilder};

/// Number of probe points on the ring used to evaluate the regular part `R`.
pub const PROBE_POINTS: usize = 32;
/// Probe ring radius as a multiple of the local edge length.
pub const PROBE_RADIUS_FACTOR: f64 = 2.0;
const COMPAT_TOL: f64 = 1e-6;

/// Point singularities with degrees in `u` units and optional core radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularityConfig {
    pub points: Vec<Point>,
    pub degrees: Vec<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
}

impl SingularityConfig {
    pub fn new(points: Vec<Point>, degrees: Vec<i32>) -> Self {
        Self { points, degrees, radii: None }
    }

    pub fn total_degree(&self) -> i64 {
        self.degrees.iter().map(|&d| d as i64).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() != self.degrees.len() {
            return Err(Error::Invalid(format!(
                "degrees: expected {} entries, got {}",
                self.points.len(),
                self.degrees.len()
            )));
        }
        if let Some(r) = &self.radii {
            if r.len() != self.points.len() {
                return Err(Error::Invalid(format!("radii: expected {} entries, got {}", self.points.len(), r.len())));
            }
            if let Some(x) = r.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                return Err(Error::Invalid(format!("radii: {x} is not a positive radius")));
            }
        }
        for (i, p) in self.points.iter().enumerate() {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::Invalid(format!("points[{i}] is not finite")));
            }
            for j in 0..i {
                if dist(*p, self.points[j]) == 0.0 {
                    return Err(Error::Invalid(format!("points[{i}] coincides with points[{j}]")));
                }
            }
        }
        Ok(())
    }
}

/// Boundary data `g x d g / d tau` of the Neumann problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum BoundaryFlux {
    /// `g = tau^n` on every boundary loop: the flux is `n` times the discrete curvature.
    TangentPower(i32),
    /// Constant density per unit length.
    Uniform(f64),
    /// Density per vertex, integrated with half the adjacent boundary edge lengths.
    Density(Vec<f64>),
}

impl BoundaryFlux {
    /// Nodal loads `\int flux psi_v` on the boundary vertices.
    pub fn nodal_loads(&self, mesh: &Mesh) -> Result<Vec<f64>> {
        let n = mesh.num_vertices();
        let mut f = vec![0.0; n];
        match self {
            BoundaryFlux::TangentPower(p) => {
                for l in 0..mesh.boundary_loops.len() {
                    for (&v, a) in mesh.boundary_loops[l].iter().zip(mesh.loop_angles(l)) {
                        f[v] += *p as f64 * (PI - a);
                    }
                }
            }
            BoundaryFlux::Uniform(c) => {
                for (v, w) in boundary_half_lengths(mesh).into_iter().enumerate() {
                    f[v] = c * w;
                }
            }
            BoundaryFlux::Density(d) => {
                if d.len() != n {
                    return Err(Error::Invalid(format!("flux density needs {n} vertex values, got {}", d.len())));
                }
                for (v, w) in boundary_half_lengths(mesh).into_iter().enumerate() {
                    f[v] = d[v] * w;
                }
            }
        }
        Ok(f)
    }
}

fn boundary_half_lengths(mesh: &Mesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.num_vertices()];
    for lp in &mesh.boundary_loops {
        for i in 0..lp.len() {
            let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
            let len = dist(mesh.vertices[a], mesh.vertices[b]);
            w[a] += 0.5 * len;
            w[b] += 0.5 * len;
        }
    }
    w
}

/// Hole energy with degrees taken from the hole specs of the mesh.
pub fn hole_energy_of(mesh: &Mesh) -> Result<f64> {
    let d: Vec<i32> = mesh.hole_loops.iter().map(|h| h.spec.degree).collect();
    hole_energy(mesh, &d)
}

/// `\int |grad Phi|^2` where `Phi` is harmonic, zero on the outer boundary
/// loops and an unknown constant on each hole loop with flux `2 pi d`.
pub fn hole_energy(mesh: &Mesh, degrees: &[i32]) -> Result<f64> {
    Ok(hole_potential(mesh, degrees)?.1)
}

/// Potential per vertex and energy of the hole problem.
pub fn hole_potential(mesh: &Mesh, degrees: &[i32]) -> Result<(Vec<f64>, f64)> {
    hole_problem(mesh, degrees, None)
}

/// Hole problem with Neumann data `flux` on the non-hole loops instead of
/// `Phi = 0`; the potential is normalized to zero mean.
pub fn hole_energy_neumann(mesh: &Mesh, degrees: &[i32], flux: &BoundaryFlux) -> Result<f64> {
    Ok(hole_problem(mesh, degrees, Some(flux))?.1)
}

fn hole_problem(mesh: &Mesh, degrees: &[i32], flux: Option<&BoundaryFlux>) -> Result<(Vec<f64>, f64)> {
    let nh = mesh.hole_loops.len();
    if degrees.len() != nh {
        return Err(Error::Invalid(format!("expected {nh} hole degrees, got {}", degrees.len())));
    }
    let n = mesh.num_vertices();
    if flux.is_none() && (nh == 0 || degrees.iter().all(|&d| d == 0)) {
        return Ok((vec![0.0; n], 0.0));
    }
    const FIXED: usize = usize::MAX;
    const UNSET: usize = usize::MAX - 1;
    let mut map = vec![UNSET; n];
    let outer_loads = match flux {
        Some(f) => Some(f.nodal_loads(mesh)?),
        None => {
            for (l, lp) in mesh.boundary_loops.iter().enumerate() {
                if !mesh.is_hole_loop(l) {
                    for &v in lp {
                        map[v] = FIXED;
                    }
                }
            }
            None
        }
    };
    for (h, hl) in mesh.hole_loops.iter().enumerate() {
        for &v in &mesh.boundary_loops[hl.loop_index] {
            map[v] = h;
        }
    }
    let mut next = nh;
    for m in map.iter_mut() {
        if *m == UNSET {
            *m = next;
            next += 1;
        }
    }
    let mut f = vec![0.0; next];
    for (h, &d) in degrees.iter().enumerate() {
        f[h] = -2.0 * PI * d as f64;
    }
    if let Some(loads) = &outer_loads {
        for (v, l) in loads.iter().enumerate() {
            if map[v] >= nh {
                f[map[v]] += l;
            }
        }
        let (src, fl) = (-f[..nh].iter().sum::<f64>(), f[nh..].iter().sum::<f64>());
        if (src - fl).abs() > COMPAT_TOL * 1f64.max(src.abs()).max(fl.abs()) {
            return Err(Error::Incompatible { sources: src, flux: fl });
        }
    }
    // With Neumann data the last unknown is pinned to remove the constant mode.
    let pinned = outer_loads.is_some().then_some(next - 1);
    let dim = next - usize::from(pinned.is_some());
    let k = p1_stiffness(mesh)?;
    let mut b = TripletBuilder::with_capacity(dim, dim, k.nnz());
    for (r, c, v) in k.triplets() {
        let (mr, mc) = (map[r], map[c]);
        if mr != FIXED && mc != FIXED && Some(mr) != pinned && Some(mc) != pinned {
            b.push(mr, mc, v);
        }
    }
    let mut phi_r = solve_spd(&b.build(), &f[..dim])?;
    phi_r.resize(next, 0.0);
    let energy: f64 = f.iter().zip(&phi_r).map(|(a, b)| a * b).sum();
    let mut phi: Vec<f64> = map.iter().map(|&m| if m == FIXED { 0.0 } else { phi_r[m] }).collect();
    if outer_loads.is_some() {
        let w = lumped_vertex_areas(mesh);
        let mean = phi.iter().zip(&w).map(|(p, w)| p * w).sum::<f64>() / w.iter().sum::<f64>();
        for p in &mut phi {
            *p -= mean;
        }
    }
    Ok((phi, energy))
}

/// Radius of the circle with the same mean log-distance as the hole loop vertices.
pub fn effective_hole_radius(mesh: &Mesh, hole: usize) -> f64 {
    let hl = &mesh.hole_loops[hole];
    let lp = &mesh.boundary_loops[hl.loop_index];
    let c = hl.spec.center;
    (lp.iter().map(|&v| dist(mesh.vertices[v], c).ln()).sum::<f64>() / lp.len() as f64).exp()
}

/// Mean-zero solution of `Delta Phi = 2 pi sum d_i delta_{b_i}` with the given
/// Neumann data, sources lumped at the nearest vertex.
pub fn phi_delta_solve(mesh: &Mesh, config: &SingularityConfig, flux: &BoundaryFlux) -> Result<Vec<f64>> {
    config.validate()?;
    let loads = flux.nodal_loads(mesh)?;
    let loc = Locator::new(mesh);
    let sources: Vec<(usize, f64)> =
        config.points.iter().zip(&config.degrees).map(|(&p, &d)| (loc.nearest_vertex(p), 2.0 * PI * d as f64)).collect();
    phi_from_loads(mesh, &sources, &loads)
}

fn phi_from_loads(mesh: &Mesh, sources: &[(usize, f64)], loads: &[f64]) -> Result<Vec<f64>> {
    let n = mesh.num_vertices();
    let src_total: f64 = sources.iter().map(|s| s.1).sum();
    let flux_total: f64 = loads.iter().sum();
    let scale = 1.0f64.max(src_total.abs()).max(flux_total.abs());
    if (src_total - flux_total).abs() > COMPAT_TOL * scale {
        return Err(Error::Incompatible { sources: src_total, flux: flux_total });
    }
    let mut f = loads.to_vec();
    for &(v, s) in sources {
        f[v] -= s;
    }
    let k = p1_stiffness(mesh)?;
    let pin = 0usize;
    let mut b = TripletBuilder::with_capacity(n - 1, n - 1, k.nnz());
    for (r, c, v) in k.triplets() {
        if r != pin && c != pin {
            b.push(r - 1, c - 1, v);
        }
    }
    let sol = solve_spd(&b.build(), &f[1..])?;
    let mut phi = Vec::with_capacity(n);
    phi.push(0.0);
    phi.extend(sol);
    let w = lumped_vertex_areas(mesh);
    let mean = phi.iter().zip(&w).map(|(p, w)| p * w).sum::<f64>() / w.iter().sum::<f64>();
    for p in &mut phi {
        *p -= mean;
    }
    Ok(phi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_rho: Option<f64>,
    /// `pi sum d_i^2 |log rho_i|`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub core_energy: Option<f64>,
    pub w: f64,
    pub pair_term: f64,
    pub boundary_term: f64,
    pub r_term: f64,
    /// Regular part of `Phi` at each point.
    pub r_values: Vec<f64>,
    /// Vertex positions the points were snapped to.
    pub snapped_points: Vec<Point>,
    pub signed: bool,
}

/// Renormalized energy of a configuration of point singularities.
///
/// Without `signed`, every degree must be `+1`. Points are snapped to their
/// nearest mesh vertex and all log terms use the snapped positions.
pub fn renormalized_energy(mesh: &Mesh, config: &SingularityConfig, flux: &BoundaryFlux, signed: bool) -> Result<EnergyReport> {
    config.validate()?;
    if config.points.is_empty() {
        return Err(Error::Invalid("points: at least one singularity is required".into()));
    }
    if !signed {
        if let Some(i) = config.degrees.iter().position(|&d| d != 1) {
            return Err(Error::Invalid(format!(
                "degrees[{i}] = {}: only unit degrees are supported outside signed mode",
                config.degrees[i]
            )));
        }
    }
    let loc = Locator::new(mesh);
    let mut snapped_v = Vec::with_capacity(config.points.len());
    for (i, &p) in config.points.iter().enumerate() {
        if loc.locate(p).is_none() {
            return Err(Error::Evaluation(format!("points[{i}] lies outside the mesh")));
        }
        let v = loc.nearest_vertex(p);
        if snapped_v.contains(&v) {
            return Err(Error::Evaluation(format!("points[{i}] snaps to the same vertex as another point; refine the mesh")));
        }
        snapped_v.push(v);
    }
    let b: Vec<Point> = snapped_v.iter().map(|&v| mesh.vertices[v]).collect();
    let d: Vec<f64> = config.degrees.iter().map(|&x| x as f64).collect();
    let loads = flux.nodal_loads(mesh)?;
    let sources: Vec<(usize, f64)> = snapped_v.iter().zip(&d).map(|(&v, &di)| (v, 2.0 * PI * di)).collect();
    let phi = phi_from_loads(mesh, &sources, &loads)?;

    let mut pair = 0.0;
    for i in 0..b.len() {
        for j in 0..b.len() {
            if i != j {
                pair -= PI * d[i] * d[j] * dist(b[i], b[j]).ln();
            }
        }
    }
    let boundary = 0.5 * phi.iter().zip(&loads).map(|(p, f)| p * f).sum::<f64>();
    let mut r_values = Vec::with_capacity(b.len());
    for (i, &bi) in b.iter().enumerate() {
        let rad = PROBE_RADIUS_FACTOR * mesh.local_edge_length(snapped_v[i]);
        let mut acc = 0.0;
        for s in 0..PROBE_POINTS {
            let t = 2.0 * PI * s as f64 / PROBE_POINTS as f64;
            let p = [bi[0] + rad * t.cos(), bi[1] + rad * t.sin()];
            let val = loc.interpolate(&phi, p).ok_or_else(|| {
                Error::Evaluation(format!("probe ring around points[{i}] leaves the domain; refine the mesh or move the point inward"))
            })?;
            acc += val - b.iter().zip(&d).map(|(bj, dj)| dj * dist(p, *bj).ln()).sum::<f64>();
        }
        r_values.push(acc / PROBE_POINTS as f64);
    }
    let r_term = -PI * r_values.iter().zip(&d).map(|(r, di)| di * r).sum::<f64>();
    Ok(EnergyReport {
        e_rho: None,
        core_energy: None,
        w: pair + boundary + r_term,
        pair_term: pair,
        boundary_term: boundary,
        r_term,
        r_values,
        snapped_points: b,
        signed,
    })
}

/// `pi sum d_i^2 |log rho|`.
pub fn core_energy(degrees: &[i32], rho: f64) -> f64 {
    PI * degrees.iter().map(|&d| (d as f64).powi(2)).sum::<f64>() * rho.ln().abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRow {
    pub rho: f64,
    /// Per hole, the radius used in the core term.
    pub effective_radii: Vec<f64>,
    pub e_rho: f64,
    pub core_energy: f64,
    pub w: f64,
    /// `E_rho / 2 - core - W`.
    pub residual: f64,
}

/// Residual of the small-radius expansion for each hole radius in `rhos`.
///
/// Holes are drilled on `mesh` at the snapped singularity positions. `E_rho`
/// uses the same Neumann data as `W`, and the core term uses the effective
/// radius of each drilled hole.
pub fn expansion_check(mesh: &Mesh, config: &SingularityConfig, flux: &BoundaryFlux, rhos: &[f64]) -> Result<Vec<ExpansionRow>> {
    let rep = renormalized_energy(mesh, config, flux, config.degrees.iter().any(|&d| d != 1))?;
    let mut rows = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let holes: Vec<HoleSpec> =
            rep.snapped_points.iter().zip(&config.degrees).map(|(&c, &d)| HoleSpec::disk(c, rho, d)).collect();
        let drilled = drill_holes(mesh, &holes)?;
        let e_rho = hole_energy_neumann(&drilled, &config.degrees, flux)?;
        let radii: Vec<f64> = (0..holes.len()).map(|h| effective_hole_radius(&drilled, h)).collect();
        let core: f64 = config.degrees.iter().zip(&radii).map(|(&d, &r)| core_energy(&[d], r)).sum();
        rows.push(ExpansionRow {
            rho,
            effective_radii: radii,
            e_rho,
            core_energy: core,
            w: rep.w,
            residual: 0.5 * e_rho - core - rep.w,
        });
    }
    Ok(rows)
}

pub fn expansion_csv(rows: &[ExpansionRow]) -> String {
    let mut s = String::from("rho,e_rho,core_energy,w,residual\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            crate::export::fmt_g(r.rho),
            crate::export::fmt_g(r.e_rho),
            crate::export::fmt_g(r.core_energy),
            crate::export::fmt_g(r.w),
            crate::export::fmt_g(r.residual)
        ));
    }
    s
}
