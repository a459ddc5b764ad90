#![allow(dead_code)]

use periodica_core::medium::{build_medium, Medium, MediumConfig};

pub fn medium(text: &str) -> Medium {
    build_medium(&MediumConfig::from_json(text).unwrap()).unwrap()
}

/// `G_p = 1 + 0.5cos(2πx)`, `w_p = 1 + 0.25sin(2πx)`, `a_p = 1 + 0.9cos(2πx)`.
pub fn reference_1d() -> Medium {
    medium(
        r#"{"dimension": 1,
            "G": {"type": "cosine-series", "mean": 1.0, "terms": [{"k": [1], "cos": 0.5}]},
            "w": {"type": "cosine-series", "mean": 1.0, "terms": [{"k": [1], "sin": 0.25}]},
            "a": {"type": "cosine-series", "mean": 1.0, "terms": [{"k": [1], "cos": 0.9}]}}"#,
    )
}

pub fn constant_1d(g: f64, w: f64, a: f64) -> Medium {
    medium(&format!(
        r#"{{"dimension": 1, "G": {{"type": "constant", "value": {g}}},
            "w": {{"type": "constant", "value": {w}}}, "a": {{"type": "constant", "value": {a}}}}}"#
    ))
}

pub fn constant_2d(g: f64, w: f64, a: f64) -> Medium {
    medium(&format!(
        r#"{{"dimension": 2, "G": {{"type": "constant", "value": {g}}},
            "w": {{"type": "constant", "value": {w}}}, "a": {{"type": "constant", "value": {a}}}}}"#
    ))
}

/// Anisotropic smooth 2D medium with a full conductivity matrix.
pub fn oscillating_2d() -> Medium {
    medium(
        r#"{"dimension": 2,
            "G": {"type": "matrix", "entries": [
                [{"type": "expression", "expr": "1 + 0.3*cos(2*PI*x)*cos(2*PI*y)"},
                 {"type": "expression", "expr": "0.1*sin(2*PI*(x+y))"}],
                [{"type": "expression", "expr": "0.1*sin(2*PI*(x+y))"},
                 {"type": "expression", "expr": "1.2 + 0.2*sin(2*PI*x)"}]]},
            "w": {"type": "expression", "expr": "1 + 0.2*cos(2*PI*y)"},
            "a": {"type": "expression", "expr": "1 + 0.5*sin(2*PI*x)*cos(2*PI*y)"}}"#,
    )
}

/// Log-uniform radii in `[lo, hi]`.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
