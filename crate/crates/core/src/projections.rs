//! Projection onto the sphere `{v : ‖v‖ = radius}`.

use crate::vecops::norm;

/// Nearest point of the sphere of `radius` to `v`.
///
/// The zero vector has no unique nearest point; it maps to
/// `radius * tie_break`. `radius = 0` yields the zero vector.
pub fn project_sphere(v: &[f64], radius: f64, tie_break: &[f64]) -> Vec<f64> {
    let len = norm(v);
    if len > 0.0 {
        let scale = radius / len;
        v.iter().map(|vi| scale * vi).collect()
    } else {
        tie_break.iter().map(|t| radius * t).collect()
    }
}

/// In-place variant with the fixed `e₁` tie-break used by the solvers.
pub fn project_sphere_in_place(v: &mut [f64], radius: f64) {
    let len = norm(v);
    if len > 0.0 {
        let scale = radius / len;
        v.iter_mut().for_each(|vi| *vi *= scale);
    } else {
        v.fill(0.0);
        if let Some(first) = v.first_mut() {
            *first = radius;
        }
    }
}
