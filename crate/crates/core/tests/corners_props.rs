use std::f64::consts::PI;

use num_rational::Rational64;
use proptest::prelude::*;

use crossfield::corners::{
    assign_boundary_singularities, boundary_singular_energy, classify_corner, classify_corner_exact, corner_energy,
    Scenario,
};

fn alpha_strategy() -> impl Strategy<Value = f64> {
    0.05..(2.0 * PI - 0.05)
}

#[test]
fn right_angle_square_needs_no_interior_singularities() {
    let r = assign_boundary_singularities(&[PI / 2.0; 4], 1).unwrap();
    assert_eq!(r.assignment.quarters, vec![1; 4]);
    assert!(r.interior.quarters.is_empty());
    assert!(r.energy.abs() < 1e-15);
}

#[test]
fn flat_boundary_point_is_regular() {
    for s in Scenario::ALL {
        assert!(classify_corner(PI, s).contains(&0.0), "{s:?}");
    }
    assert_eq!(corner_energy(PI, 0.0), 0.0);
}

proptest! {
    #[test]
    fn balanced_contains_the_other_scenarios(alpha in alpha_strategy()) {
        let b = classify_corner(alpha, Scenario::Balanced);
        prop_assert!(!b.is_empty());
        for s in [Scenario::Scarce, Scenario::Excess] {
            let ks = classify_corner(alpha, s);
            prop_assert!((1..=2).contains(&ks.len()), "{s:?} {ks:?}");
            for k in &ks {
                prop_assert!(b.contains(k));
            }
        }
        let sc = classify_corner(alpha, Scenario::Scarce);
        let ex = classify_corner(alpha, Scenario::Excess);
        prop_assert!(sc.last() >= ex.last() && sc.first() >= ex.first());
    }

    #[test]
    fn admissible_indices_decrease_with_angle(a in alpha_strategy(), b in alpha_strategy()) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        for s in Scenario::ALL {
            let (x, y) = (classify_corner(lo, s), classify_corner(hi, s));
            prop_assert!(x.first() >= y.first() && x.last() >= y.last(), "{s:?}");
        }
    }

    #[test]
    fn float_and_exact_tables_agree(n in 1i64..96, s in prop::sample::select(Scenario::ALL.to_vec())) {
        let q = Rational64::new(n, 48);
        let exact: Vec<f64> = classify_corner_exact(q, s).iter().map(|k| *k.numer() as f64 / *k.denom() as f64).collect();
        prop_assert_eq!(classify_corner(PI * n as f64 / 48.0, s), exact);
    }

    #[test]
    fn corner_energy_vanishes_only_at_natural_index(alpha in alpha_strategy(), n in -8i64..8) {
        let k = n as f64 / 4.0;
        let e = corner_energy(alpha, k);
        prop_assert!(e >= 0.0);
        let natural = 0.5 - alpha / (2.0 * PI);
        prop_assert!((e - PI * (natural - k).powi(2) * 2.0 * PI / alpha).abs() < 1e-9 * e.max(1.0));
    }

    #[test]
    fn assignment_balances_euler_characteristic(
        alphas in proptest::collection::vec(alpha_strategy(), 1..8), chi in -2i64..=1
    ) {
        let r = assign_boundary_singularities(&alphas, chi).unwrap();
        prop_assert_eq!(r.assignment.quarter_sum() + r.interior.quarter_sum(), 4 * chi);
        prop_assert!(r.assignment.quarters.iter().all(|q| q.abs() <= 1 || q.abs() > 2));
        prop_assert!(r.interior.quarters.iter().all(|q| q.abs() == 1));
        let e = boundary_singular_energy(&r.assignment, &r.interior).unwrap();
        prop_assert!((e - r.energy).abs() < 1e-12);
        for c in &r.candidates {
            prop_assert!(r.scenario_energy <= c.energy + 1e-12);
            for (&a, &q) in alphas.iter().zip(&c.quarters) {
                prop_assert!(classify_corner(a, c.scenario).contains(&(q as f64 / 4.0)));
            }
        }
    }
}
