//! Fixed-step explicit integrators for the plant.

use std::fmt::Debug;

use nalgebra::SVector;

use crate::error::ModelError;
use crate::robot_model::{forward_dynamics, DynamicParams, JointState, Vec2};

/// `[theta_1, theta_2, theta_dot_1, theta_dot_2]`.
pub type State4 = SVector<f64, 4>;

pub type Rhs<'a> = dyn Fn(f64, &State4) -> Result<State4, ModelError> + 'a;

pub trait Integrator: Send + Sync + Debug {
    /// Nominal order of accuracy.
    fn order(&self) -> u32;
    fn step(&self, f: &Rhs<'_>, t: f64, x: &State4, h: f64) -> Result<State4, ModelError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Rk4;

impl Integrator for Rk4 {
    fn order(&self) -> u32 {
        4
    }

    fn step(&self, f: &Rhs<'_>, t: f64, x: &State4, h: f64) -> Result<State4, ModelError> {
        let k1 = f(t, x)?;
        let k2 = f(t + 0.5 * h, &(x + k1 * (0.5 * h)))?;
        let k3 = f(t + 0.5 * h, &(x + k2 * (0.5 * h)))?;
        let k4 = f(t + h, &(x + k3 * h))?;
        Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
    }
}

/// Explicit midpoint rule.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rk2;

impl Integrator for Rk2 {
    fn order(&self) -> u32 {
        2
    }

    fn step(&self, f: &Rhs<'_>, t: f64, x: &State4, h: f64) -> Result<State4, ModelError> {
        let k1 = f(t, x)?;
        let k2 = f(t + 0.5 * h, &(x + k1 * (0.5 * h)))?;
        Ok(x + k2 * h)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Euler;

impl Integrator for Euler {
    fn order(&self) -> u32 {
        1
    }

    fn step(&self, f: &Rhs<'_>, t: f64, x: &State4, h: f64) -> Result<State4, ModelError> {
        Ok(x + f(t, x)? * h)
    }
}

pub fn pack(js: &JointState) -> State4 {
    State4::new(js.theta[0], js.theta[1], js.theta_dot[0], js.theta_dot[1])
}

pub fn unpack(x: &State4, t: f64) -> JointState {
    JointState::new(Vec2::new(x[0], x[1]), Vec2::new(x[2], x[3]), t)
}

/// Advances the arm by `dt` under a constant torque using `substeps`
/// equal steps.
pub fn integrate_plant(
    integrator: &dyn Integrator,
    js: &JointState,
    tau: &Vec2,
    params: &DynamicParams,
    dt: f64,
    substeps: usize,
) -> Result<JointState, ModelError> {
    let substeps = substeps.max(1);
    let h = dt / substeps as f64;
    let rhs = |t: f64, x: &State4| -> Result<State4, ModelError> {
        let s = unpack(x, t);
        let acc = forward_dynamics(&s, tau, params)?;
        Ok(State4::new(x[2], x[3], acc[0], acc[1]))
    };
    let mut x = pack(js);
    for k in 0..substeps {
        x = integrator.step(&rhs, js.t + k as f64 * h, &x, h)?;
    }
    Ok(unpack(&x, js.t + dt))
}
