//! Discrete Brouwer degree on closed cycles and the quadratic hole constraints.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::assembly::{DofSpace, FieldU};
use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Smallest value norm for which a direction is considered defined.
pub const MIN_NORM: f64 = 1e-8;

/// Ordered values of a field sampled on a closed cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleField {
    pub sites: Vec<usize>,
    pub values: Vec<[f64; 2]>,
}

impl CycleField {
    pub fn from_field(field: &FieldU, sites: &[usize]) -> Self {
        Self { sites: sites.to_vec(), values: sites.iter().map(|&s| field.values[s]).collect() }
    }

    pub fn degree(&self) -> Result<f64> {
        winding_degree(&self.values)
    }
}

fn normalized(values: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    if values.len() < 3 {
        return Err(Error::InvalidCycle(format!("cycle needs at least 3 sites, got {}", values.len())));
    }
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let n = v[0].hypot(v[1]);
            if n.is_nan() || n < MIN_NORM {
                Err(Error::DegenerateField(format!("value {i} on the cycle has norm {n:.3e}")))
            } else {
                Ok([v[0] / n, v[1] / n])
            }
        })
        .collect()
}

/// Centered-difference winding number of a cycle of 2-vectors, in turns.
///
/// For `m` equally spaced samples of `e^{i theta}` this evaluates to
/// `m sin(2 pi / m) / (2 pi)`.
pub fn winding_degree(values: &[[f64; 2]]) -> Result<f64> {
    let v = normalized(values)?;
    let m = v.len();
    let mut s = 0.0;
    for i in 0..m {
        let next = v[(i + 1) % m];
        let prev = v[(i + m - 1) % m];
        s += 0.5 * (v[i][0] * (next[1] - prev[1]) - v[i][1] * (next[0] - prev[0]));
    }
    Ok(s / (2.0 * PI))
}

/// Exact integer winding from summed principal angle increments.
pub fn winding_integer(values: &[[f64; 2]]) -> Result<i64> {
    let v = normalized(values)?;
    let m = v.len();
    let mut total = 0.0;
    for i in 0..m {
        let a = v[i];
        let b = v[(i + 1) % m];
        total += (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]);
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

/// Quadratic constraint `x^T M x = target` on one hole cycle.
#[derive(Debug, Clone)]
pub struct ConstraintForm {
    pub hole: usize,
    pub degree: i32,
    pub cycle: Vec<usize>,
    /// Symmetric matrix over the interleaved unknowns `(v1, v2)` of every site.
    pub matrix: CsrMatrix,
    pub target: f64,
}

/// Scale between `x^T M x` and `2 pi deg`, fixed by the unit winding-one field.
pub const CONSTRAINT_SCALE: f64 = 2.0;

impl ConstraintForm {
    /// `x^T M x` evaluated on the cycle rows only.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.cycle_rows().map(|r| x[r] * self.matrix.row(r).map(|(c, v)| v * x[c]).sum::<f64>()).sum()
    }

    /// Nonzero entries of `M x` as `(row, value)`.
    pub fn apply(&self, x: &[f64]) -> Vec<(usize, f64)> {
        self.cycle_rows().map(|r| (r, self.matrix.row(r).map(|(c, v)| v * x[c]).sum())).collect()
    }

    pub fn residual(&self, x: &[f64]) -> f64 {
        self.value(x) - self.target
    }

    pub fn cycle_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.cycle.iter().flat_map(|&s| [2 * s, 2 * s + 1])
    }
}

/// Builds the antisymmetric-pair coupling matrix of a counter-clockwise DOF cycle
/// with target `CONSTRAINT_SCALE * 2 pi * degree`.
pub fn hole_constraint_matrix(n_sites: usize, hole: usize, cycle: &[usize], degree: i32) -> Result<ConstraintForm> {
    let m = cycle.len();
    if m < 3 {
        return Err(Error::InvalidCycle(format!("hole cycle needs at least 3 sites, got {m}")));
    }
    let mut seen = cycle.to_vec();
    seen.sort_unstable();
    if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidCycle(format!("site {} appears twice in the cycle", w[0])));
    }
    if let Some(&s) = cycle.iter().find(|&&s| s >= n_sites) {
        return Err(Error::InvalidCycle(format!("site {s} out of range")));
    }
    let mut b = TripletBuilder::with_capacity(2 * n_sites, 2 * n_sites, 4 * m);
    for i in 0..m {
        let s = cycle[i];
        let next = cycle[(i + 1) % m];
        let prev = cycle[(i + m - 1) % m];
        b.push(2 * s, 2 * next + 1, 1.0);
        b.push(2 * next + 1, 2 * s, 1.0);
        b.push(2 * s, 2 * prev + 1, -1.0);
        b.push(2 * prev + 1, 2 * s, -1.0);
    }
    Ok(ConstraintForm {
        hole,
        degree,
        cycle: cycle.to_vec(),
        matrix: b.build(),
        target: CONSTRAINT_SCALE * 2.0 * PI * degree as f64,
    })
}

/// Constraint forms for every hole of a space.
pub fn hole_constraints(space: &DofSpace) -> Result<Vec<ConstraintForm>> {
    space
        .hole_cycles
        .iter()
        .zip(&space.hole_degrees)
        .enumerate()
        .map(|(h, (c, &d))| hole_constraint_matrix(space.len(), h, c, d))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleDegree {
    pub hole: usize,
    pub prescribed: i32,
    /// `None` when some value on the loop is (numerically) zero.
    pub degree: Option<f64>,
    pub min_norm: f64,
    pub max_norm: f64,
}

/// Winding degree of the field on every hole cycle.
pub fn measured_hole_degrees(field: &FieldU, space: &DofSpace) -> Vec<HoleDegree> {
    space
        .hole_cycles
        .iter()
        .enumerate()
        .map(|(h, cyc)| {
            let vals: Vec<[f64; 2]> = cyc.iter().map(|&s| field.values[s]).collect();
            let norms = vals.iter().map(|v| v[0].hypot(v[1]));
            let min_norm = norms.clone().fold(f64::INFINITY, f64::min);
            let max_norm = norms.fold(0.0, f64::max);
            HoleDegree {
                hole: h,
                prescribed: space.hole_degrees[h],
                degree: winding_degree(&vals).ok(),
                min_norm,
                max_norm,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(m: usize, k: i32) -> Vec<[f64; 2]> {
        (0..m)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / m as f64 * k as f64;
                [t.cos(), t.sin()]
            })
            .collect()
    }

    #[test]
    fn unit_vortex_quadrature() {
        let d = winding_degree(&circle(64, 1)).unwrap();
        let expect = 64.0 * (2.0 * PI / 64.0).sin() / (2.0 * PI);
        assert!((d - expect).abs() < 1e-14);
        assert!((d - 0.9984).abs() < 1e-4);
    }

    #[test]
    fn saddle_and_constant() {
        let saddle: Vec<[f64; 2]> = circle(64, 1).iter().map(|v| [v[0], -v[1]]).collect();
        assert!((winding_degree(&saddle).unwrap() + 1.0).abs() < 0.01);
        assert_eq!(winding_degree(&[[1.0, 0.0]; 10]).unwrap(), 0.0);
    }

    #[test]
    fn zero_value_is_degenerate() {
        let mut v = circle(8, 1);
        v[3] = [0.0, 0.0];
        assert!(matches!(winding_degree(&v), Err(Error::DegenerateField(_))));
    }

    #[test]
    fn constraint_on_winding_one_samples() {
        let c = hole_constraint_matrix(8, 0, &(0..8).collect::<Vec<_>>(), 1).unwrap();
        let x: Vec<f64> = circle(8, 1).iter().flat_map(|v| [v[0], v[1]]).collect();
        assert!((c.value(&x) - 2.0 * 8.0 * (PI / 4.0).sin()).abs() < 1e-12);
        assert!((c.value(&x) - c.matrix.quad_form(&x)).abs() < 1e-12);
        assert!((c.target - 4.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn duplicate_site_rejected() {
        assert!(hole_constraint_matrix(5, 0, &[0, 1, 2, 1], 1).is_err());
        assert!(hole_constraint_matrix(5, 0, &[0, 1], 1).is_err());
    }
}
