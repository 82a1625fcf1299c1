//! Harmonic scalar `H` with quarter-index point sources and curvature Neumann data.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::assembly::barycentric_gradients;
use crate::energy::{phi_delta_solve, BoundaryFlux, SingularityConfig};
use crate::error::{Error, Result};
use crate::locate::Locator;
use crate::mesh::{Mesh, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HSource {
    pub point: Point,
    /// Index in quarters (`1` is a quarter singularity).
    pub k: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HSolution {
    /// Mean-zero vertex values.
    pub values: Vec<f64>,
    pub sources: Vec<HSource>,
    /// `sum k_j`.
    pub source_quarters: i64,
    pub chi: i64,
}

/// Solves `Delta H = 2 pi sum (k_j / 4) delta_j` with `dH/dn = kappa`.
pub fn solve_hfield(mesh: &Mesh, sources: &[HSource]) -> Result<HSolution> {
    let chi = mesh.euler_characteristic();
    let total: i64 = sources.iter().map(|s| s.k as i64).sum();
    if total != 4 * chi {
        return Err(Error::Incompatible { sources: 2.0 * PI * total as f64 / 4.0, flux: 2.0 * PI * chi as f64 });
    }
    let loc = Locator::new(mesh);
    for (i, s) in sources.iter().enumerate() {
        if loc.locate(s.point).is_none() {
            return Err(Error::Invalid(format!("sources[{i}] lies outside the domain")));
        }
    }
    // Sources are lumped at the nearest vertex with weight 2 pi k/4, which is
    // the same as a quarter-scaled point configuration with the curvature flux.
    let scaled = SingularityConfig::new(sources.iter().map(|s| s.point).collect(), sources.iter().map(|s| s.k).collect());
    let mut values = phi_delta_solve(mesh, &scaled, &BoundaryFlux::TangentPower(4))?;
    for v in &mut values {
        *v /= 4.0;
    }
    Ok(HSolution { values, sources: sources.to_vec(), source_quarters: total, chi })
}

/// Constant gradient of a P1 function on triangle `t`.
pub fn triangle_gradient(mesh: &Mesh, values: &[f64], t: usize) -> Result<[f64; 2]> {
    let (g, _) = barycentric_gradients(mesh.tri_points(t))?;
    let tri = mesh.triangles[t];
    let mut out = [0.0; 2];
    for i in 0..3 {
        out[0] += values[tri[i]] * g[i][0];
        out[1] += values[tri[i]] * g[i][1];
    }
    Ok(out)
}

/// Iso-line segments of a P1 function at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoLine {
    pub level: f64,
    pub segments: Vec<[Point; 2]>,
}

/// Marching triangles over `levels`.
pub fn iso_lines(mesh: &Mesh, values: &[f64], levels: &[f64]) -> Vec<IsoLine> {
    levels
        .iter()
        .map(|&level| {
            let mut segments = Vec::new();
            for tri in &mesh.triangles {
                let mut pts = Vec::with_capacity(2);
                for i in 0..3 {
                    let (a, b) = (tri[i], tri[(i + 1) % 3]);
                    let (fa, fb) = (values[a] - level, values[b] - level);
                    if (fa < 0.0) != (fb < 0.0) {
                        let t = fa / (fa - fb);
                        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
                        pts.push([pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]);
                    }
                }
                if pts.len() == 2 {
                    segments.push([pts[0], pts[1]]);
                }
            }
            IsoLine { level, segments }
        })
        .collect()
}

/// `n` levels evenly spaced strictly inside the value range.
pub fn default_levels(values: &[f64], n: usize) -> Vec<f64> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi.is_nan() || lo.is_nan() || hi <= lo {
        return Vec::new();
    }
    (1..=n).map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64).collect()
}
