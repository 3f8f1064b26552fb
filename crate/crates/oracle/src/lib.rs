//! Independent reference implementations used as oracles by the test
//! suites. Everything here is deliberately naive — dense matrices, O(n³)
//! solves, straight sequential loops — and shares no code with the
//! implementations it checks. This crate is a dev-dependency only.

pub mod dense;
pub mod gen;
pub mod ldu_ref;

/// Maximum relative difference between two slices, normalized by the
/// largest magnitude seen in either (absolute difference if both are ~0).
pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "max_rel_diff on mismatched lengths");
    let scale = a
        .iter()
        .chain(b.iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    let max_abs = a
        .iter()
        .zip(b.iter())
        .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()));
    if scale > 0.0 {
        max_abs / scale
    } else {
        max_abs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rel_diff_basics() {
        assert_eq!(max_rel_diff(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert!((max_rel_diff(&[2.0], &[1.0]) - 0.5).abs() < 1e-15);
        assert_eq!(max_rel_diff(&[0.0], &[0.0]), 0.0);
    }
}
