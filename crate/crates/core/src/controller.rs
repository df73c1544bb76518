//! Barrier-weighted synchronization errors, the delayed auxiliary error,
//! the control torque and the gradient law for the dynamic parameters.

use std::fmt::Debug;

use nalgebra::SMatrix;

use crate::error::ControlError;
use crate::human_trajectory::TaskPoint;
use crate::linalg::sym2_min_eigen;
use crate::robot_model::{
    dynamic_regressor, jacobian, jacobian_time_derivative, kinematic_regressor, reference_acceleration,
    JointState, KinematicParams, Mat2, Mat2x7, Vec2, Vec7,
};

pub type Mat7 = SMatrix<f64, 7, 7>;

/// Per-axis bounds: human `k_h`, robot `k_r` and the error bound
/// `k_m = k_r - k_h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierBounds {
    pub k_m: Vec2,
    pub k_h: Vec2,
    pub k_r_bound: Vec2,
}

impl BarrierBounds {
    pub fn from_limits(k_h: Vec2, k_r_bound: Vec2) -> Self {
        Self {
            k_m: k_r_bound - k_h,
            k_h,
            k_r_bound,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.k_m.iter().all(|&k| k.is_finite() && k > 0.0)
    }
}

impl Default for BarrierBounds {
    fn default() -> Self {
        Self::from_limits(Vec2::new(0.75, 0.45), Vec2::new(1.15, 1.85))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gains {
    pub k_r: f64,
    pub k_phi: f64,
    pub k_1: f64,
    /// Concurrent-learning gain `k`.
    pub k_icl: f64,
    pub gamma1: Mat2,
    pub gamma2: Mat7,
    /// Leakage on the dynamic-parameter estimate.
    pub alpha_s4: f64,
    /// History stack size.
    pub n_windows: usize,
    /// Integration window length (s).
    pub window: f64,
    /// Human measurement delay (s).
    pub delay: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Self {
            k_r: 0.1,
            k_phi: 1.0,
            k_1: 0.8,
            k_icl: 100.0,
            gamma1: Mat2::identity(),
            gamma2: Mat7::identity() * 0.5,
            alpha_s4: 0.002,
            n_windows: 25,
            window: 0.2,
            delay: 0.45,
        }
    }
}

pub fn sync_error(p: &Vec2, p_h: &Vec2) -> Vec2 {
    p_h - p
}

/// Diagonal of `phi(e)`, `phi_i = 1 / (k_m,i^2 - e_i^2)`.
pub fn barrier_weights(e: &Vec2, bb: &BarrierBounds) -> Result<Vec2, ControlError> {
    let mut phi = Vec2::zeros();
    for i in 0..2 {
        let k = bb.k_m[i];
        if !(e[i].abs() < k) {
            return Err(ControlError::BarrierViolation {
                axis: i,
                error: e[i],
                bound: k,
            });
        }
        phi[i] = 1.0 / (k * k - e[i] * e[i]);
    }
    Ok(phi)
}

/// An evaluated (possibly regularized) inverse of the Jacobian estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseEval {
    pub inv: Mat2,
    /// Damping `lambda^2` added to `J J^T`; zero on the exact branch.
    pub damping: f64,
    /// Rate of change of `damping` per unit rate of `sigma_min^2`.
    damping_slope: f64,
}

impl InverseEval {
    pub fn damped(&self) -> bool {
        self.damping > 0.0
    }
}

/// Strategy for inverting the estimated Jacobian near singular poses.
pub trait JacobianInverse: Send + Sync + Debug {
    fn invert(&self, j: &Mat2) -> InverseEval;

    /// Time derivative of the inverse returned by [`Self::invert`].
    fn rate(&self, j: &Mat2, j_dot: &Mat2, eval: &InverseEval) -> Mat2 {
        if !eval.damped() {
            return -eval.inv * j_dot * eval.inv;
        }
        let a = j * j.transpose() + Mat2::identity() * eval.damping;
        let a_inv = a.try_inverse().unwrap_or_else(Mat2::zeros);
        let sym = j_dot * j.transpose() + j * j_dot.transpose();
        let damping_rate = if eval.damping_slope != 0.0 {
            let (_, w) = sym2_min_eigen(&(j * j.transpose()));
            eval.damping_slope * w.dot(&(sym * w))
        } else {
            0.0
        };
        let a_dot = sym + Mat2::identity() * damping_rate;
        j_dot.transpose() * a_inv - j.transpose() * a_inv * a_dot * a_inv
    }
}

fn exact(j: &Mat2) -> Option<InverseEval> {
    j.try_inverse().map(|inv| InverseEval {
        inv,
        damping: 0.0,
        damping_slope: 0.0,
    })
}

fn damped_inverse(j: &Mat2, damping: f64, damping_slope: f64) -> InverseEval {
    let a = j * j.transpose() + Mat2::identity() * damping;
    let inv = j.transpose() * a.try_inverse().unwrap_or_else(Mat2::zeros);
    InverseEval {
        inv,
        damping,
        damping_slope,
    }
}

/// Exact inverse unless `|det J| < det_threshold`, then a fixed damped
/// least-squares inverse `J^T (J J^T + damping I)^-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchedInverse {
    pub det_threshold: f64,
    pub damping: f64,
}

impl Default for SwitchedInverse {
    fn default() -> Self {
        Self {
            det_threshold: 1e-3,
            damping: 1e-6,
        }
    }
}

impl JacobianInverse for SwitchedInverse {
    fn invert(&self, j: &Mat2) -> InverseEval {
        if j.determinant().abs() >= self.det_threshold {
            if let Some(e) = exact(j) {
                return e;
            }
        }
        damped_inverse(j, self.damping, 0.0)
    }
}

/// Damped least-squares inverse whose damping grows smoothly as the
/// smallest singular value drops below `sigma_threshold`:
/// `lambda^2 = max_damping^2 (1 - sigma_min^2 / sigma_threshold^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothDampedInverse {
    pub sigma_threshold: f64,
    pub max_damping: f64,
}

impl Default for SmoothDampedInverse {
    fn default() -> Self {
        Self {
            sigma_threshold: 0.3,
            max_damping: 0.11,
        }
    }
}

impl JacobianInverse for SmoothDampedInverse {
    fn invert(&self, j: &Mat2) -> InverseEval {
        let (s2, _) = sym2_min_eigen(&(j * j.transpose()));
        let eps2 = self.sigma_threshold * self.sigma_threshold;
        if s2 >= eps2 {
            if let Some(e) = exact(j) {
                return e;
            }
        }
        let lmax2 = self.max_damping * self.max_damping;
        let damping = lmax2 * (1.0 - s2.max(0.0) / eps2);
        damped_inverse(j, damping.max(f64::MIN_POSITIVE), -lmax2 / eps2)
    }
}

/// `Jhat(theta)^-1` under the given regularization policy.
pub fn jp_hat_inverse(theta: &Vec2, zj_hat: &KinematicParams, policy: &dyn JacobianInverse) -> InverseEval {
    policy.invert(&jacobian(theta, zj_hat))
}

/// `eta_T = Jinv (v_hT + k1 phi_T e_pT) - theta_dot`. The same expression
/// with undelayed signals gives the current-time auxiliary error.
pub fn eta(theta_dot: &Vec2, jinv: &Mat2, v_h: &Vec2, phi: &Vec2, e: &Vec2, k_1: f64) -> Vec2 {
    jinv * (v_h + k_1 * phi.component_mul(e)) - theta_dot
}

/// `tau = W zeta_y_hat + k_r eta_T + k_phi Jhat^T phi_T e_pT`.
pub fn control_torque(
    w_yt: &Mat2x7,
    zeta_y_hat: &Vec7,
    eta_t: &Vec2,
    jp_hat: &Mat2,
    phi_t: &Vec2,
    e_pt: &Vec2,
    g: &Gains,
) -> Vec2 {
    w_yt * zeta_y_hat + g.k_r * eta_t + g.k_phi * jp_hat.transpose() * phi_t.component_mul(e_pt)
}

/// Gradient law with leakage: `Gamma2 W^T eta_T - alpha_s4 Gamma2 zeta_y_hat`.
pub fn zeta_y_derivative(w_yt: &Mat2x7, eta_t: &Vec2, zeta_y_hat: &Vec7, g: &Gains) -> Vec7 {
    g.gamma2 * (w_yt.transpose() * eta_t) - g.alpha_s4 * (g.gamma2 * zeta_y_hat)
}

/// Whether the estimated-Jacobian rate includes the drift of the
/// kinematic estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianRate {
    Full,
    JointOnly,
}

/// Every signal the controller produces for one control instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub tau: Vec2,
    pub e_pt: Vec2,
    pub eta_t: Vec2,
    pub phi_t: Vec2,
    pub zeta_y_dot: Vec7,
    pub zeta_j_dot: Vec2,
    pub w_yt: Mat2x7,
    pub w_j: Mat2,
    pub jp_hat: Mat2,
    pub jp_inv: Mat2,
    pub accel_ref: Vec2,
    /// Task-space velocity estimate `Jhat theta_dot`.
    pub p_dot_est: Vec2,
    pub damped: bool,
}

/// Stateless control law; the estimates are owned by the caller.
#[derive(Debug)]
pub struct Controller {
    pub gains: Gains,
    pub bounds: BarrierBounds,
    pub inverse: Box<dyn JacobianInverse>,
    pub rate: JacobianRate,
}

impl Controller {
    /// Evaluates the torque and both adaptation rates. `icl_correction` is
    /// the history-stack term `sum Y^T (U - Y zeta_j_hat)`.
    pub fn compute(
        &self,
        js: &JointState,
        p: &Vec2,
        delayed: &TaskPoint,
        zeta_j_hat: &KinematicParams,
        zeta_y_hat: &Vec7,
        icl_correction: &Vec2,
    ) -> Result<ControlOutput, ControlError> {
        let g = &self.gains;
        let e_pt = sync_error(p, &delayed.p);
        let phi_t = barrier_weights(&e_pt, &self.bounds)?;
        let jp_hat = jacobian(&js.theta, zeta_j_hat);
        let inv = self.inverse.invert(&jp_hat);
        let eta_t = eta(&js.theta_dot, &inv.inv, &delayed.p_dot, &phi_t, &e_pt, g.k_1);

        let w_j = kinematic_regressor(js);
        let zeta_j_dot = crate::icl::zeta_j_derivative(&w_j, &phi_t, &e_pt, icl_correction, g);

        let drift = match self.rate {
            JacobianRate::Full => zeta_j_dot,
            JacobianRate::JointOnly => Vec2::zeros(),
        };
        let j_dot = jacobian_time_derivative(js, zeta_j_hat, &drift);
        let inv_rate = self.inverse.rate(&jp_hat, &j_dot, &inv);
        let p_dot_est = jp_hat * js.theta_dot;
        let e_dot = delayed.p_dot - p_dot_est;
        let accel_ref = reference_acceleration(
            &inv.inv,
            &inv_rate,
            &delayed.p_dot,
            &delayed.p_ddot,
            &e_pt,
            &e_dot,
            &phi_t,
            g.k_1,
        );
        let w_yt = dynamic_regressor(js, &accel_ref, &eta_t);
        let tau = control_torque(&w_yt, zeta_y_hat, &eta_t, &jp_hat, &phi_t, &e_pt, g);
        let zeta_y_dot = zeta_y_derivative(&w_yt, &eta_t, zeta_y_hat, g);
        Ok(ControlOutput {
            tau,
            e_pt,
            eta_t,
            phi_t,
            zeta_y_dot,
            zeta_j_dot,
            w_yt,
            w_j,
            jp_hat,
            jp_inv: inv.inv,
            accel_ref,
            p_dot_est,
            damped: inv.damped(),
        })
    }
}
