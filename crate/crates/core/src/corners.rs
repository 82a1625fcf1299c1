//! Boundary singularity energy and the three-scenario corner index classification.
//!
//! Indices are stored as integer quarters (`k = quarters / 4`).

use std::f64::consts::PI;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible index magnitude, in quarters.
pub const MAX_QUARTERS: i64 = 2;
const ENDPOINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Balanced,
    Scarce,
    Excess,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Balanced, Scenario::Scarce, Scenario::Excess];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::Balanced => "balanced",
            Scenario::Scarce => "scarce",
            Scenario::Excess => "excess",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "balanced" => Ok(Scenario::Balanced),
            "scarce" => Ok(Scenario::Scarce),
            "excess" => Ok(Scenario::Excess),
            _ => Err(Error::Invalid(format!("unknown scenario {s:?}"))),
        }
    }

    /// Slopes (in sixteenths) of the lower and upper bounds against `alpha / pi`.
    fn slopes(&self) -> (i64, i64) {
        match self {
            Scenario::Balanced => (9, 7),
            Scenario::Scarce => (7, 7),
            Scenario::Excess => (9, 9),
        }
    }

    /// Closed interval `[lo, hi]` of admissible `k` for the angle `alpha = q pi`.
    pub fn bounds_exact(&self, q: Rational64) -> (Rational64, Rational64) {
        let (sl, su) = self.slopes();
        (Rational64::new(3, 8) - Rational64::new(sl, 16) * q, Rational64::new(5, 8) - Rational64::new(su, 16) * q)
    }

    pub fn bounds(&self, alpha: f64) -> (f64, f64) {
        let (sl, su) = self.slopes();
        let q = alpha / PI;
        (0.375 - sl as f64 / 16.0 * q, 0.625 - su as f64 / 16.0 * q)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 * PI {
        Ok(())
    } else {
        Err(Error::Invalid(format!("corner angle {alpha} outside (0, 2pi)")))
    }
}

/// Admissible quarter counts `k * 4` for a corner of interior angle `alpha`.
pub fn admissible_quarters(alpha: f64, scenario: Scenario) -> Vec<i64> {
    let (lo, hi) = scenario.bounds(alpha);
    (-MAX_QUARTERS..=MAX_QUARTERS)
        .filter(|&n| {
            let k = n as f64 / 4.0;
            k >= lo - ENDPOINT_TOL && k <= hi + ENDPOINT_TOL
        })
        .collect()
}

/// Admissible indices for a corner of interior angle `alpha`.
pub fn classify_corner(alpha: f64, scenario: Scenario) -> Vec<f64> {
    admissible_quarters(alpha, scenario).into_iter().map(|n| n as f64 / 4.0).collect()
}

/// Exact classification for an angle given as `alpha = q pi`.
pub fn classify_corner_exact(q: Rational64, scenario: Scenario) -> Vec<Rational64> {
    let (lo, hi) = scenario.bounds_exact(q);
    (-MAX_QUARTERS..=MAX_QUARTERS)
        .map(|n| Rational64::new(n, 4))
        .filter(|k| *k >= lo && *k <= hi)
        .collect()
}

/// `(pi - alpha - 2 pi k)^2 / (2 alpha)`.
pub fn corner_energy(alpha: f64, k: f64) -> f64 {
    let r = PI - alpha - 2.0 * PI * k;
    r * r / (2.0 * alpha)
}

/// `(2 pi l)^2 / (2 pi)`.
pub fn interior_energy(l: f64) -> f64 {
    2.0 * PI * l * l
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerAssignment {
    pub alphas: Vec<f64>,
    pub quarters: Vec<i64>,
    pub scenario: Scenario,
}

impl CornerAssignment {
    pub fn indices(&self) -> Vec<f64> {
        self.quarters.iter().map(|&n| n as f64 / 4.0).collect()
    }

    pub fn quarter_sum(&self) -> i64 {
        self.quarters.iter().sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteriorPlan {
    pub quarters: Vec<i64>,
}

impl InteriorPlan {
    /// Fewest quarter singularities closing `sum k + sum l = chi`.
    pub fn completing(chi: i64, boundary_quarters: i64) -> Self {
        let missing = 4 * chi - boundary_quarters;
        Self { quarters: vec![missing.signum(); missing.unsigned_abs() as usize] }
    }

    pub fn indices(&self) -> Vec<f64> {
        self.quarters.iter().map(|&n| n as f64 / 4.0).collect()
    }

    pub fn quarter_sum(&self) -> i64 {
        self.quarters.iter().sum()
    }
}

/// Total corner and interior singular energy.
pub fn boundary_singular_energy(assignment: &CornerAssignment, interior: &InteriorPlan) -> Result<f64> {
    if assignment.alphas.len() != assignment.quarters.len() {
        return Err(Error::Invalid("one index per corner angle is required".into()));
    }
    let mut e = 0.0;
    for (&a, &n) in assignment.alphas.iter().zip(&assignment.quarters) {
        check_alpha(a)?;
        e += corner_energy(a, n as f64 / 4.0);
    }
    Ok(e + interior.indices().into_iter().map(interior_energy).sum::<f64>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioCandidate {
    pub scenario: Scenario,
    pub quarters: Vec<i64>,
    pub interior: InteriorPlan,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentResult {
    /// Final assignment after splitting half indices.
    pub assignment: CornerAssignment,
    pub interior: InteriorPlan,
    pub energy: f64,
    /// Energy of the winning scenario before splitting.
    pub scenario_energy: f64,
    pub candidates: Vec<ScenarioCandidate>,
    pub split_halves: usize,
}

fn best_quarter(alpha: f64, admissible: &[i64]) -> Option<i64> {
    let mut best: Option<(f64, i64)> = None;
    for &n in admissible {
        let e = corner_energy(alpha, n as f64 / 4.0);
        let better = match best {
            None => true,
            Some((be, bn)) => e < be - 1e-12 || ((e - be).abs() <= 1e-12 && n.abs() < bn.abs()),
        };
        if better {
            best = Some((e, n));
        }
    }
    best.map(|b| b.1)
}

/// Lowest-energy scenario assignment completed by the forced interior plan.
pub fn assign_boundary_singularities(alphas: &[f64], chi: i64) -> Result<AssignmentResult> {
    for &a in alphas {
        check_alpha(a)?;
    }
    let mut candidates = Vec::new();
    for s in Scenario::ALL {
        let picks: Option<Vec<i64>> = alphas.iter().map(|&a| best_quarter(a, &admissible_quarters(a, s))).collect();
        let Some(quarters) = picks else { continue };
        let interior = InteriorPlan::completing(chi, quarters.iter().sum());
        let asg = CornerAssignment { alphas: alphas.to_vec(), quarters: quarters.clone(), scenario: s };
        let energy = boundary_singular_energy(&asg, &interior)?;
        candidates.push(ScenarioCandidate { scenario: s, quarters, interior, energy });
    }
    let mut win = candidates.first().ok_or_else(|| Error::Invalid("no scenario admits these angles".into()))?;
    for c in &candidates[1..] {
        if c.energy < win.energy - 1e-12 {
            win = c;
        }
    }
    let mut quarters = win.quarters.clone();
    let mut interior = win.interior.clone();
    let mut split_halves = 0;
    for n in quarters.iter_mut() {
        if n.abs() == 2 {
            *n = n.signum();
            interior.quarters.push(n.signum());
            split_halves += 1;
        }
    }
    let assignment = CornerAssignment { alphas: alphas.to_vec(), quarters, scenario: win.scenario };
    let energy = boundary_singular_energy(&assignment, &interior)?;
    Ok(AssignmentResult {
        assignment,
        interior,
        energy,
        scenario_energy: win.energy,
        candidates: candidates.clone(),
        split_halves,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerReportEntry {
    pub alpha: f64,
    pub scenario: Scenario,
    pub admissible_k: Vec<f64>,
    pub chosen_k: f64,
}

/// Per-corner classification report of an assignment.
pub fn corner_report(result: &AssignmentResult) -> Vec<CornerReportEntry> {
    let a = &result.assignment;
    a.alphas
        .iter()
        .zip(&a.quarters)
        .map(|(&alpha, &n)| CornerReportEntry {
            alpha,
            scenario: a.scenario,
            admissible_k: classify_corner(alpha, a.scenario),
            chosen_k: n as f64 / 4.0,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn energy_examples() {
        let one = |a: f64, n: i64| {
            let asg = CornerAssignment { alphas: vec![a], quarters: vec![n], scenario: Scenario::Balanced };
            boundary_singular_energy(&asg, &InteriorPlan::default()).unwrap()
        };
        assert!((one(PI, 1) - PI / 8.0).abs() < 1e-14);
        assert!(one(FRAC_PI_2, 1).abs() < 1e-14);
        assert!(one(1.5 * PI, -1).abs() < 1e-14);
        let empty = CornerAssignment { alphas: vec![], quarters: vec![], scenario: Scenario::Balanced };
        let e = boundary_singular_energy(&empty, &InteriorPlan { quarters: vec![1] }).unwrap();
        assert!((e - PI / 8.0).abs() < 1e-14);
        let bad = CornerAssignment { alphas: vec![0.0], quarters: vec![0], scenario: Scenario::Balanced };
        assert!(boundary_singular_energy(&bad, &InteriorPlan::default()).is_err());
    }

    #[test]
    fn balanced_overlap() {
        for q in [r(2, 3), r(3, 4), r(6, 7)] {
            assert_eq!(classify_corner_exact(q, Scenario::Balanced), vec![r(0, 1), r(1, 4)]);
        }
    }

    #[test]
    fn scarce_partition() {
        let s = Scenario::Scarce;
        assert_eq!(classify_corner_exact(r(1, 7), s), vec![r(1, 2)]);
        assert_eq!(classify_corner_exact(r(2, 7), s), vec![r(1, 4), r(1, 2)]);
        assert_eq!(classify_corner_exact(r(4, 7), s), vec![r(1, 4)]);
        assert_eq!(classify_corner_exact(r(8, 7), s), vec![r(0, 1)]);
        assert_eq!(classify_corner_exact(r(12, 7), s), vec![r(-1, 4)]);
    }

    #[test]
    fn excess_partition() {
        let s = Scenario::Excess;
        assert_eq!(classify_corner_exact(r(3, 4), s), vec![r(0, 1)]);
        assert_eq!(classify_corner_exact(r(1, 2), s), vec![r(1, 4)]);
        assert_eq!(classify_corner_exact(r(2, 3), s), vec![r(0, 1), r(1, 4)]);
        assert_eq!(classify_corner_exact(r(10, 9), s), vec![r(-1, 4), r(0, 1)]);
    }

    #[test]
    fn standard_domains() {
        let sq = assign_boundary_singularities(&[FRAC_PI_2; 4], 1).unwrap();
        assert_eq!(sq.assignment.quarters, vec![1; 4]);
        assert!(sq.interior.quarters.is_empty());
        assert!(sq.energy.abs() < 1e-14);

        let tri = assign_boundary_singularities(&[PI / 3.0; 3], 1).unwrap();
        assert_eq!(tri.assignment.quarters, vec![1; 3]);
        assert_eq!(tri.interior.quarters, vec![1]);
        assert!((tri.energy - PI / 4.0).abs() < 1e-12);

        let mut l = vec![FRAC_PI_2; 5];
        l.push(1.5 * PI);
        let ls = assign_boundary_singularities(&l, 1).unwrap();
        assert_eq!(ls.assignment.quarters, vec![1, 1, 1, 1, 1, -1]);
        assert!(ls.interior.quarters.is_empty());
    }

    #[test]
    fn half_index_is_split() {
        let res = assign_boundary_singularities(&[0.3, 0.3], 1).unwrap();
        assert!(res.assignment.quarters.iter().all(|n| n.abs() <= 1));
        assert_eq!(res.assignment.quarter_sum() + res.interior.quarter_sum(), 4);
        assert!(res.split_halves > 0);
    }
}
