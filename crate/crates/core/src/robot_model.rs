//! Planar two-link arm: ground-truth plant, kinematics and the
//! linear-in-parameters regressors consumed by the controller.
//!
//! The dynamic model uses point masses at the link tips and viscous joint
//! friction. The seven lumped parameters are ordered
//!
//! ```text
//! [ (m1+m2) l1^2,  m2 l2^2,  m2 l1 l2,  fv1,  g (m1+m2) l1,  g m2 l2,  fv2 ]
//! ```
//!
//! Gravity is folded into entries 4 and 5 so that every entry is a torque
//! coefficient of the regressor.

use nalgebra::{Matrix2, SMatrix, SVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;
pub type Vec7 = SVector<f64, 7>;
pub type Mat2x7 = SMatrix<f64, 2, 7>;

/// Number of lumped dynamic parameters.
pub const DYN_PARAMS: usize = 7;

pub mod idx {
    pub const INERTIA_1: usize = 0;
    pub const INERTIA_2: usize = 1;
    pub const COUPLING: usize = 2;
    pub const FRICTION_1: usize = 3;
    pub const GRAVITY_1: usize = 4;
    pub const GRAVITY_2: usize = 5;
    pub const FRICTION_2: usize = 6;
}

/// Physical parameters of the simulated arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotParams {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub g: f64,
    pub fv1: f64,
    pub fv2: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            m1: 0.558,
            m2: 0.291,
            l1: 0.85,
            l2: 1.3,
            g: 9.81,
            fv1: 0.1,
            fv2: 0.1,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("m1", self.m1),
            ("m2", self.m2),
            ("l1", self.l1),
            ("l2", self.l2),
            ("g", self.g),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ModelError::InvalidParameter { name, value: v });
            }
        }
        for (name, v) in [("fv1", self.fv1), ("fv2", self.fv2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ModelError::InvalidParameter { name, value: v });
            }
        }
        Ok(())
    }

    pub fn kinematic_params(&self) -> KinematicParams {
        KinematicParams::new(self.l1, self.l2)
    }

    /// Maps the physical parameters onto the lumped regressor basis.
    pub fn true_dynamic_params(&self) -> DynamicParams {
        let Self {
            m1,
            m2,
            l1,
            l2,
            g,
            fv1,
            fv2,
        } = *self;
        DynamicParams(Vec7::from_column_slice(&[
            (m1 + m2) * l1 * l1,
            m2 * l2 * l2,
            m2 * l1 * l2,
            fv1,
            g * (m1 + m2) * l1,
            g * m2 * l2,
            fv2,
        ]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState {
    pub theta: Vec2,
    pub theta_dot: Vec2,
    pub t: f64,
}

impl JointState {
    pub fn new(theta: Vec2, theta_dot: Vec2, t: f64) -> Self {
        Self {
            theta,
            theta_dot,
            t,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().chain(self.theta_dot.iter()).all(|v| v.is_finite()) && self.t.is_finite()
    }
}

/// Kinematic parameters: the two link lengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicParams(pub Vec2);

impl KinematicParams {
    pub fn new(l1: f64, l2: f64) -> Self {
        Self(Vec2::new(l1, l2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicParams(pub Vec7);

impl DynamicParams {
    pub fn from_slice(v: &[f64]) -> Self {
        Self(Vec7::from_column_slice(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsEval {
    pub m: Mat2,
    pub c: Mat2,
    pub g: Vec2,
    pub f: Vec2,
}

struct Trig {
    s1: f64,
    c1: f64,
    s2: f64,
    c2: f64,
    s12: f64,
    c12: f64,
}

impl Trig {
    fn of(theta: &Vec2) -> Self {
        let (s1, c1) = theta[0].sin_cos();
        let (s2, c2) = theta[1].sin_cos();
        let (s12, c12) = (theta[0] + theta[1]).sin_cos();
        Self {
            s1,
            c1,
            s2,
            c2,
            s12,
            c12,
        }
    }
}

pub fn mass_matrix(theta: &Vec2, zy: &DynamicParams) -> Mat2 {
    let p = &zy.0;
    let c2 = theta[1].cos();
    let (a1, a2, a3) = (p[idx::INERTIA_1], p[idx::INERTIA_2], p[idx::COUPLING]);
    let off = a2 + a3 * c2;
    Mat2::new(a1 + a2 + 2.0 * a3 * c2, off, off, a2)
}

/// Time derivative of the inertia matrix along the motion.
pub fn mass_matrix_rate(js: &JointState, zy: &DynamicParams) -> Mat2 {
    let k = -zy.0[idx::COUPLING] * js.theta[1].sin() * js.theta_dot[1];
    Mat2::new(2.0 * k, k, k, 0.0)
}

/// Coriolis/centripetal matrix from the Christoffel symbols of the inertia
/// matrix, so that `Mdot - 2C` is skew-symmetric.
pub fn coriolis_matrix(js: &JointState, zy: &DynamicParams) -> Mat2 {
    let h = zy.0[idx::COUPLING] * js.theta[1].sin();
    let (w1, w2) = (js.theta_dot[0], js.theta_dot[1]);
    Mat2::new(-h * w2, -h * (w1 + w2), h * w1, 0.0)
}

pub fn dynamics_eval(js: &JointState, zy: &DynamicParams) -> DynamicsEval {
    let p = &zy.0;
    let tr = Trig::of(&js.theta);
    let g = Vec2::new(
        p[idx::GRAVITY_1] * tr.c1 + p[idx::GRAVITY_2] * tr.c12,
        p[idx::GRAVITY_2] * tr.c12,
    );
    let f = Vec2::new(
        p[idx::FRICTION_1] * js.theta_dot[0],
        p[idx::FRICTION_2] * js.theta_dot[1],
    );
    DynamicsEval {
        m: mass_matrix(&js.theta, zy),
        c: coriolis_matrix(js, zy),
        g,
        f,
    }
}

/// Joint torque required to realise `theta_ddot` from the given state.
pub fn inverse_dynamics(js: &JointState, theta_ddot: &Vec2, zy: &DynamicParams) -> Vec2 {
    let d = dynamics_eval(js, zy);
    d.m * theta_ddot + d.c * js.theta_dot + d.f + d.g
}

pub fn forward_dynamics(js: &JointState, tau: &Vec2, zy: &DynamicParams) -> Result<Vec2, ModelError> {
    if !js.is_finite() || !tau.iter().all(|v| v.is_finite()) {
        return Err(ModelError::NonFinite("forward_dynamics input"));
    }
    let d = dynamics_eval(js, zy);
    let rhs = tau - d.c * js.theta_dot - d.f - d.g;
    let chol = d.m.cholesky().ok_or(ModelError::SingularInertia)?;
    Ok(chol.solve(&rhs))
}

pub fn forward_kinematics(theta: &Vec2, zj: &KinematicParams) -> Vec2 {
    let tr = Trig::of(theta);
    let (l1, l2) = (zj.0[0], zj.0[1]);
    Vec2::new(l1 * tr.c1 + l2 * tr.c12, l1 * tr.s1 + l2 * tr.s12)
}

pub fn jacobian(theta: &Vec2, zj: &KinematicParams) -> Mat2 {
    let tr = Trig::of(theta);
    let (l1, l2) = (zj.0[0], zj.0[1]);
    Mat2::new(
        -l1 * tr.s1 - l2 * tr.s12,
        -l2 * tr.s12,
        l1 * tr.c1 + l2 * tr.c12,
        l2 * tr.c12,
    )
}

/// `dJ/dt = (dJ/dtheta) theta_dot + (dJ/dzeta) zeta_dot`.
pub fn jacobian_time_derivative(js: &JointState, zj: &KinematicParams, zj_dot: &Vec2) -> Mat2 {
    let tr = Trig::of(&js.theta);
    let (l1, l2) = (zj.0[0], zj.0[1]);
    let w1 = js.theta_dot[0];
    let w12 = js.theta_dot[0] + js.theta_dot[1];
    let motion = Mat2::new(
        -l1 * tr.c1 * w1 - l2 * tr.c12 * w12,
        -l2 * tr.c12 * w12,
        -l1 * tr.s1 * w1 - l2 * tr.s12 * w12,
        -l2 * tr.s12 * w12,
    );
    let (d1, d2) = (zj_dot[0], zj_dot[1]);
    let drift = Mat2::new(
        -tr.s1 * d1 - tr.s12 * d2,
        -tr.s12 * d2,
        tr.c1 * d1 + tr.c12 * d2,
        tr.c12 * d2,
    );
    motion + drift
}

/// `W_j(theta, theta_dot)` with `W_j zeta_j = J(theta) theta_dot`.
pub fn kinematic_regressor(js: &JointState) -> Mat2 {
    let tr = Trig::of(&js.theta);
    let w1 = js.theta_dot[0];
    let w12 = js.theta_dot[0] + js.theta_dot[1];
    Mat2::new(-tr.s1 * w1, -tr.s12 * w12, tr.c1 * w1, tr.c12 * w12)
}

/// Reference joint acceleration `d/dt[Jinv (v_h + k1 phi e)]` evaluated from
/// measurable signals.
///
/// `jinv_rate` is the time derivative of the (possibly damped) inverse and
/// `e_dot` the estimated rate of the delayed error.
#[allow(clippy::too_many_arguments)]
pub fn reference_acceleration(
    jinv: &Mat2,
    jinv_rate: &Mat2,
    v_h: &Vec2,
    a_h: &Vec2,
    e: &Vec2,
    e_dot: &Vec2,
    phi: &Vec2,
    k1: f64,
) -> Vec2 {
    let phi_e = phi.component_mul(e);
    let phi_e_rate = barrier_product_rate(e, e_dot, phi);
    jinv_rate * (v_h + k1 * phi_e) + jinv * (a_h + k1 * phi_e_rate)
}

/// `d/dt (phi_i e_i) = phi_i e_dot_i (1 + 2 e_i^2 phi_i)` for the barrier
/// weight `phi_i = 1 / (k_i^2 - e_i^2)`.
pub fn barrier_product_rate(e: &Vec2, e_dot: &Vec2, phi: &Vec2) -> Vec2 {
    Vec2::from_fn(|i, _| phi[i] * e_dot[i] * (1.0 + 2.0 * e[i] * e[i] * phi[i]))
}

/// `W` such that `W zeta = M a + C (theta_dot + eta) + f + G`.
pub fn dynamic_regressor(js: &JointState, accel: &Vec2, eta: &Vec2) -> Mat2x7 {
    let tr = Trig::of(&js.theta);
    let (w1, w2) = (js.theta_dot[0], js.theta_dot[1]);
    let v = js.theta_dot + eta;
    let (a0, a1) = (accel[0], accel[1]);
    let mut w = Mat2x7::zeros();
    w[(0, idx::INERTIA_1)] = a0;
    w[(0, idx::INERTIA_2)] = a0 + a1;
    w[(1, idx::INERTIA_2)] = a0 + a1;
    w[(0, idx::COUPLING)] =
        tr.c2 * (2.0 * a0 + a1) - tr.s2 * w2 * v[0] - tr.s2 * (w1 + w2) * v[1];
    w[(1, idx::COUPLING)] = tr.c2 * a0 + tr.s2 * w1 * v[0];
    w[(0, idx::FRICTION_1)] = w1;
    w[(1, idx::FRICTION_2)] = w2;
    w[(0, idx::GRAVITY_1)] = tr.c1;
    w[(0, idx::GRAVITY_2)] = tr.c12;
    w[(1, idx::GRAVITY_2)] = tr.c12;
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Elbow {
    Positive,
    Negative,
}

pub fn inverse_kinematics(p: &Vec2, zj: &KinematicParams, elbow: Elbow) -> Result<Vec2, ModelError> {
    let (l1, l2) = (zj.0[0], zj.0[1]);
    let r2 = p.norm_squared();
    let r = r2.sqrt();
    let tol = 1e-12 * (l1 + l2);
    if !r.is_finite() || r > l1 + l2 + tol || r < (l1 - l2).abs() - tol {
        return Err(ModelError::Unreachable {
            x: p[0],
            y: p[1],
            inner: (l1 - l2).abs(),
            outer: l1 + l2,
        });
    }
    let c2 = ((r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
    let mut t2 = c2.acos();
    if elbow == Elbow::Negative {
        t2 = -t2;
    }
    let t1 = p[1].atan2(p[0]) - (l2 * t2.sin()).atan2(l1 + l2 * t2.cos());
    Ok(Vec2::new(t1, t2))
}
