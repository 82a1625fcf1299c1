//! Valence, generalized Poincare-Hopf bookkeeping and interior degree targets.
//!
//! All index quantities are in cross units (a quarter singularity has index 1/4)
//! unless the name says `u`, in which case they are in units of the
//! representation field `u = c^4` (four times larger).

use std::f64::consts::{FRAC_PI_2, PI};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{boundary_analysis, CornerInfo, HoleSpec, Mesh, DEFAULT_CORNER_THRESHOLD};

const TIE_TOL: f64 = 1e-9;
const QUARTER_TOL: f64 = 1e-6;

/// Number of quarter turns absorbed by a corner with turning angle `delta`.
///
/// Exact half-quarter ties resolve to the smaller count, which keeps the
/// residual in `(-pi/4, pi/4]`.
pub fn quarter_turns(delta: f64) -> i64 {
    let x = delta / FRAC_PI_2;
    let lower = (x - 0.5).ceil();
    if (x - 0.5 - (lower - 1.0)).abs() < TIE_TOL {
        return (lower - 1.0) as i64;
    }
    lower as i64
}

/// Turning left over after removing the nearest multiple of `pi/2`.
pub fn corner_residual(delta: f64) -> f64 {
    delta - FRAC_PI_2 * quarter_turns(delta) as f64
}

/// Valence of a tangent-aligned cross field, in index units.
pub fn valence(corners: &[CornerInfo]) -> f64 {
    corners.iter().map(|c| corner_residual(c.delta)).sum::<f64>() / (2.0 * PI)
}

/// `x` as an integer count of quarters, if it is one within `1e-6`.
pub fn as_quarters(x: f64) -> Option<i64> {
    let q = (4.0 * x).round();
    ((4.0 * x - q).abs() <= QUARTER_TOL).then_some(q as i64)
}

pub fn quarters_to_rational(q: i64) -> Rational64 {
    Rational64::new(q, 4)
}

/// Required interior index sum of a domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteriorTarget {
    pub valence: f64,
    /// Smooth boundary turning divided by `2 pi`.
    pub smooth_index: f64,
    /// Sum of interior indices in cross units.
    pub cross_target: f64,
    /// `4 * cross_target`, i.e. the sum of hole degrees of `u`.
    pub u_target: i64,
}

impl InteriorTarget {
    pub fn cross_rational(&self) -> Rational64 {
        quarters_to_rational(self.u_target)
    }
}

/// Interior index target from the domain boundary; drilled hole loops are ignored.
pub fn interior_target(mesh: &Mesh) -> Result<InteriorTarget> {
    let ba = boundary_analysis(mesh, DEFAULT_CORNER_THRESHOLD);
    let mut corners = Vec::new();
    let mut smooth = 0.0;
    for l in ba.loops.iter().filter(|l| !l.is_hole) {
        corners.extend(l.corners.iter().copied());
        smooth += l.smooth_turning;
    }
    let v = valence(&corners);
    let smooth_index = smooth / (2.0 * PI);
    let cross = v + smooth_index;
    let u_target = as_quarters(cross).ok_or_else(|| {
        Error::Geometry(format!(
            "interior index target {cross:.9} is not a multiple of 1/4; adjust the corner threshold or refine the boundary"
        ))
    })?;
    Ok(InteriorTarget { valence: v, smooth_index, cross_target: cross, u_target })
}

/// Poincare-Hopf balance between the domain target and the placed hole degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PHLedger {
    pub valence: f64,
    pub smooth_index: f64,
    pub cross_target: f64,
    pub u_target: i64,
    /// Sum of the hole degrees in `u` units.
    pub placed: i64,
    /// `u_target - placed`.
    pub deficit: i64,
    pub pass: bool,
    pub verdict: String,
}

pub fn ph_check(mesh: &Mesh, holes: &[HoleSpec]) -> Result<PHLedger> {
    let t = interior_target(mesh)?;
    let placed: i64 = holes.iter().map(|h| h.degree as i64).sum();
    let deficit = t.u_target - placed;
    let pass = deficit == 0;
    Ok(PHLedger {
        valence: t.valence,
        smooth_index: t.smooth_index,
        cross_target: t.cross_target,
        u_target: t.u_target,
        placed,
        deficit,
        pass,
        verdict: if pass { "pass" } else { "fail" }.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{preset_domain, Preset};

    fn corner(delta: f64) -> CornerInfo {
        CornerInfo { vertex: 0, loop_index: 0, alpha: PI - delta, delta }
    }

    #[test]
    fn residual_range_and_ties() {
        assert_eq!(quarter_turns(FRAC_PI_2), 1);
        assert_eq!(quarter_turns(PI / 4.0), 0);
        assert_eq!(quarter_turns(-PI / 4.0), -1);
        assert!((corner_residual(PI / 4.0) - PI / 4.0).abs() < 1e-15);
        assert!((corner_residual(-PI / 4.0) - PI / 4.0).abs() < 1e-15);
        assert!((corner_residual(PI / 3.0) + PI / 6.0).abs() < 1e-15);
    }

    #[test]
    fn polygon_valences() {
        assert_eq!(valence(&[corner(FRAC_PI_2); 4]), 0.0);
        assert!((valence(&[corner(PI / 3.0); 6]) + 0.5).abs() < 1e-12);
        assert!((valence(&[corner(2.0 * PI / 3.0); 3]) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn targets_of_smooth_domains() {
        let disk = preset_domain(&Preset::Disk { r: 1.0 }, 0.2).unwrap();
        let t = interior_target(&disk).unwrap();
        assert_eq!(t.u_target, 4);
        assert_eq!(t.cross_rational(), Rational64::from_integer(1));
        let ann = preset_domain(&Preset::Annulus { r1: 0.4, r2: 1.0 }, 0.2).unwrap();
        assert_eq!(interior_target(&ann).unwrap().u_target, 0);
    }

    #[test]
    fn ledger_deficit() {
        let disk = preset_domain(&Preset::Disk { r: 1.0 }, 0.2).unwrap();
        let l = ph_check(&disk, &[HoleSpec::disk([0.0, 0.0], 0.1, 3)]).unwrap();
        assert!(!l.pass);
        assert_eq!(l.deficit, 1);
        assert_eq!(l.verdict, "fail");
    }
}
