//! Closed-form helpers for 2x2 symmetric matrices.

use crate::robot_model::{Mat2, Vec2};

/// Smallest eigenvalue of a symmetric 2x2 matrix and a unit eigenvector.
pub fn sym2_min_eigen(s: &Mat2) -> (f64, Vec2) {
    let (a, b, d) = (s[(0, 0)], 0.5 * (s[(0, 1)] + s[(1, 0)]), s[(1, 1)]);
    let mean = 0.5 * (a + d);
    let half_gap = 0.5 * (a - d);
    let r = half_gap.hypot(b);
    let lambda = mean - r;
    // pick the better conditioned of the two candidate null vectors
    let v1 = Vec2::new(b, lambda - a);
    let v2 = Vec2::new(lambda - d, b);
    let v = if v1.norm_squared() >= v2.norm_squared() { v1 } else { v2 };
    let n = v.norm();
    let v = if n > 0.0 {
        v / n
    } else if a <= d {
        Vec2::new(1.0, 0.0)
    } else {
        Vec2::new(0.0, 1.0)
    };
    (lambda, v)
}

pub fn sym2_min_eigenvalue(s: &Mat2) -> f64 {
    sym2_min_eigen(s).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn diagonal_and_identity() {
        assert_eq!(sym2_min_eigenvalue(&Mat2::identity()), 1.0);
        let (l, v) = sym2_min_eigen(&Mat2::new(3.0, 0.0, 0.0, 2.0));
        assert_eq!(l, 2.0);
        assert_relative_eq!(v.abs(), Vec2::new(0.0, 1.0));
        assert_eq!(sym2_min_eigenvalue(&Mat2::zeros()), 0.0);
    }

    proptest! {
        #[test]
        fn matches_general_eigensolver(a in -5.0..5.0f64, b in -5.0..5.0f64, d in -5.0..5.0f64) {
            let s = Mat2::new(a, b, b, d);
            let (l, v) = sym2_min_eigen(&s);
            let reference = s.symmetric_eigenvalues().min();
            prop_assert!((l - reference).abs() < 1e-12);
            prop_assert!((s * v - l * v).norm() < 1e-10);
            prop_assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }
}
