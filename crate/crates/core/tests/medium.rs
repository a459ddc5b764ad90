mod common;

use periodica_core::medium::*;
use proptest::prelude::*;

const PERTURBED: &str = r#"{"dimension": 2,
    "G": {"type": "expression", "expr": "1 + 0.25*cos(2*PI*x) + 0.25*cos(2*PI*y)"},
    "w": {"type": "constant", "value": 1.0},
    "a": {"type": "expression", "expr": "1 + 0.5*cos(2*PI*x)"},
    "perturbation": {"G": {"decay_constant": 0.3,
                           "profile": {"type": "bump", "amplitude": 0.3, "radius": 3.0}}}}"#;

#[test]
fn compact_perturbation_leaves_the_far_field_periodic() {
    let m = common::medium(PERTURBED);
    assert!(m.is_perturbed());
    let far = [7.3, -4.1];
    assert_eq!(m.g(&far).quad([1.0, 0.4]), m.g_p(&far).quad([1.0, 0.4]));
    let p = m.periodic_part();
    assert!(!p.is_perturbed());
    assert!(m.bounds().g_max > m.periodic_bounds().g_max);
}

#[test]
fn tables_match_pointwise_evaluation() {
    let m = common::medium(PERTURBED);
    let g = TorusGrid::new(2, 4, 16).unwrap();
    let t = sample_on_grid(&m, &g).unwrap();
    assert!(t.wrap_residual < WRAP_TOLERANCE);
    for idx in [0, 17, 300, g.len() - 1] {
        let x = g.centered_coords(idx);
        assert_eq!(t.w[idx], m.w(&x));
        assert_eq!(t.b[idx], m.w(&x) * m.a(&x));
    }
}

#[test]
fn configuration_errors_name_the_problem() {
    let bad = r#"{"dimension": 1, "G": {"type": "constant", "value": 1.0},
                  "w": {"type": "constant", "value": 1.0},
                  "a": {"type": "constant", "value": 1.0}, "colour": 3}"#;
    let err = MediumConfig::from_json(bad).unwrap_err();
    assert!(err.to_string().contains("colour"), "{err}");
    let neg = r#"{"dimension": 1, "G": {"type": "constant", "value": -1.0},
                  "w": {"type": "constant", "value": 1.0},
                  "a": {"type": "constant", "value": 1.0}}"#;
    assert!(build_medium(&MediumConfig::from_json(neg).unwrap()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn periodic_part_is_lattice_periodic(x in -5.0f64..5.0, y in -5.0f64..5.0, k in -3i32..3, l in -3i32..3) {
        let m = common::oscillating_2d();
        let p = [x, y];
        let q = [x + k as f64, y + l as f64];
        let (a, b) = (m.g_p(&p), m.g_p(&q));
        prop_assert!((a.quad([1.0, 0.0]) - b.quad([1.0, 0.0])).abs() < 1e-12);
        prop_assert!((a.quad([0.3, 1.0]) - b.quad([0.3, 1.0])).abs() < 1e-12);
        prop_assert!((m.w_p(&p) - m.w_p(&q)).abs() < 1e-12);
        prop_assert!((m.a_p(&p) - m.a_p(&q)).abs() < 1e-12);
    }
}
