//! Independent reference formulas shared by the integration tests. They are
//! written from the physical parameters directly, not from the lumped
//! basis used by the library.

#![allow(dead_code)]

use tdsync::robot_model::{Mat2, RobotParams, Vec2};

pub fn fk(theta: &Vec2, l1: f64, l2: f64) -> Vec2 {
    let (a, b) = (theta[0], theta[0] + theta[1]);
    Vec2::new(l1 * a.cos() + l2 * b.cos(), l1 * a.sin() + l2 * b.sin())
}

pub fn jac(theta: &Vec2, l1: f64, l2: f64) -> Mat2 {
    let (a, b) = (theta[0], theta[0] + theta[1]);
    Mat2::new(
        -l1 * a.sin() - l2 * b.sin(),
        -l2 * b.sin(),
        l1 * a.cos() + l2 * b.cos(),
        l2 * b.cos(),
    )
}

/// Inertia of point masses at the link tips.
pub fn inertia(rp: &RobotParams, theta: &Vec2) -> Mat2 {
    let c2 = theta[1].cos();
    let (m1, m2, l1, l2) = (rp.m1, rp.m2, rp.l1, rp.l2);
    let m11 = (m1 + m2) * l1 * l1 + m2 * l2 * l2 + 2.0 * m2 * l1 * l2 * c2;
    let m12 = m2 * l2 * l2 + m2 * l1 * l2 * c2;
    Mat2::new(m11, m12, m12, m2 * l2 * l2)
}

/// `dM/dtheta_k`; only the elbow angle enters the inertia.
fn inertia_partial(rp: &RobotParams, theta: &Vec2, k: usize) -> Mat2 {
    if k == 0 {
        return Mat2::zeros();
    }
    let d = -rp.m2 * rp.l1 * rp.l2 * theta[1].sin();
    Mat2::new(2.0 * d, d, d, 0.0)
}

/// Coriolis matrix from the Christoffel symbols of the inertia.
pub fn coriolis(rp: &RobotParams, theta: &Vec2, theta_dot: &Vec2) -> Mat2 {
    let dm = [inertia_partial(rp, theta, 0), inertia_partial(rp, theta, 1)];
    Mat2::from_fn(|k, j| {
        (0..2)
            .map(|i| 0.5 * (dm[i][(k, j)] + dm[j][(k, i)] - dm[k][(i, j)]) * theta_dot[i])
            .sum()
    })
}

pub fn inertia_rate(rp: &RobotParams, theta: &Vec2, theta_dot: &Vec2) -> Mat2 {
    inertia_partial(rp, theta, 0) * theta_dot[0] + inertia_partial(rp, theta, 1) * theta_dot[1]
}

/// Gradient of the potential `(m1+m2) g l1 sin(q1) + m2 g l2 sin(q1+q2)`.
pub fn gravity(rp: &RobotParams, theta: &Vec2) -> Vec2 {
    let (a, b) = (theta[0], theta[0] + theta[1]);
    let g2 = rp.m2 * rp.g * rp.l2 * b.cos();
    Vec2::new((rp.m1 + rp.m2) * rp.g * rp.l1 * a.cos() + g2, g2)
}

pub fn friction(rp: &RobotParams, theta_dot: &Vec2) -> Vec2 {
    Vec2::new(rp.fv1 * theta_dot[0], rp.fv2 * theta_dot[1])
}
