//! Integral concurrent learning for the kinematic parameters.
//!
//! Task-space displacement over a window is linear in the link lengths:
//! `p(t_end) - p(t_start) = (int W_j dt) zeta_j`, so recorded windows give
//! an estimation error that needs no velocity measurement.

use std::collections::VecDeque;
use std::fmt::Debug;

use crate::controller::Gains;
use crate::error::IclError;
use crate::linalg::sym2_min_eigenvalue;
use crate::robot_model::{Mat2, Vec2};

/// Excitation level above which the stack counts as informative.
pub const EXCITATION_THRESHOLD: f64 = 1e-4;

/// One recorded window: `Y = int W_j dt`, `U = p(t_end) - p(t_start)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IclWindow {
    pub t_start: f64,
    pub t_end: f64,
    pub y: Mat2,
    pub u: Vec2,
}

impl IclWindow {
    pub fn residual(&self, zj: &Vec2) -> Vec2 {
        self.u - self.y * zj
    }
}

/// Decides which window to evict once the stack is full.
pub trait StackPolicy: Send + Sync + Debug {
    fn insert(&self, stack: &mut VecDeque<IclWindow>, w: IclWindow, capacity: usize);
}

/// Oldest window out first.
#[derive(Debug, Clone, Copy, Default)]
pub struct FifoPolicy;

impl StackPolicy for FifoPolicy {
    fn insert(&self, stack: &mut VecDeque<IclWindow>, w: IclWindow, capacity: usize) {
        stack.push_back(w);
        while stack.len() > capacity {
            stack.pop_front();
        }
    }
}

/// Keeps a new window only if swapping it in raises the minimum
/// eigenvalue of `sum Y^T Y`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MaxEigPolicy;

impl StackPolicy for MaxEigPolicy {
    fn insert(&self, stack: &mut VecDeque<IclWindow>, w: IclWindow, capacity: usize) {
        if stack.len() < capacity {
            stack.push_back(w);
            return;
        }
        if capacity == 0 {
            return;
        }
        let total: Mat2 = stack.iter().map(|s| s.y.transpose() * s.y).sum();
        let mut best = (sym2_min_eigenvalue(&total), None);
        let add = w.y.transpose() * w.y;
        for (i, s) in stack.iter().enumerate() {
            let cand = sym2_min_eigenvalue(&(total - s.y.transpose() * s.y + add));
            if cand > best.0 {
                best = (cand, Some(i));
            }
        }
        if let Some(i) = best.1 {
            stack.remove(i);
            stack.push_back(w);
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct OpenWindow {
    t_start: f64,
    p_start: Vec2,
    t_last: f64,
    w_last: Mat2,
    y: Mat2,
}

/// History stack of non-overlapping, back-to-back windows.
#[derive(Debug)]
pub struct IclStack {
    windows: VecDeque<IclWindow>,
    open: Option<OpenWindow>,
    capacity: usize,
    window: f64,
    policy: Box<dyn StackPolicy>,
    first_excited: Option<f64>,
}

impl IclStack {
    pub fn new(capacity: usize, window: f64, policy: Box<dyn StackPolicy>) -> Self {
        Self {
            windows: VecDeque::with_capacity(capacity + 1),
            open: None,
            capacity,
            window,
            policy,
            first_excited: None,
        }
    }

    pub fn windows(&self) -> impl Iterator<Item = &IclWindow> {
        self.windows.iter()
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Time at which the excitation first exceeded the threshold.
    pub fn first_excited(&self) -> Option<f64> {
        self.first_excited
    }

    /// Adds a measurement of the task position and the kinematic regressor.
    /// Integrates `W_j` by the trapezoid rule and closes the window once its
    /// span reaches the configured length.
    pub fn push_sample(&mut self, t: f64, p: &Vec2, w_j: &Mat2) -> Result<(), IclError> {
        let Some(mut open) = self.open else {
            self.open = Some(OpenWindow {
                t_start: t,
                p_start: *p,
                t_last: t,
                w_last: *w_j,
                y: Mat2::zeros(),
            });
            return Ok(());
        };
        if !(t > open.t_last) {
            return Err(IclError::TimeRegression { t, last: open.t_last });
        }
        open.y += (open.w_last + w_j) * (0.5 * (t - open.t_last));
        open.t_last = t;
        open.w_last = *w_j;
        if t - open.t_start >= self.window - 1e-9 * self.window.max(1.0) {
            let done = IclWindow {
                t_start: open.t_start,
                t_end: t,
                y: open.y,
                u: p - open.p_start,
            };
            self.policy.insert(&mut self.windows, done, self.capacity);
            open = OpenWindow {
                t_start: t,
                p_start: *p,
                t_last: t,
                w_last: *w_j,
                y: Mat2::zeros(),
            };
            if self.first_excited.is_none() && self.excitation() > EXCITATION_THRESHOLD {
                self.first_excited = Some(t);
            }
        }
        self.open = Some(open);
        Ok(())
    }

    /// `sum Y^T (U - Y zeta_j_hat)`.
    pub fn correction(&self, zj_hat: &Vec2) -> Vec2 {
        icl_correction(self.windows.iter(), zj_hat)
    }

    /// Minimum eigenvalue of `sum Y^T Y`.
    pub fn excitation(&self) -> f64 {
        excitation(self.windows.iter())
    }
}

pub fn icl_correction<'a>(windows: impl IntoIterator<Item = &'a IclWindow>, zj_hat: &Vec2) -> Vec2 {
    windows
        .into_iter()
        .map(|w| w.y.transpose() * w.residual(zj_hat))
        .sum()
}

pub fn excitation<'a>(windows: impl IntoIterator<Item = &'a IclWindow>) -> f64 {
    let s: Mat2 = windows.into_iter().map(|w| w.y.transpose() * w.y).sum();
    sym2_min_eigenvalue(&s)
}

/// `-Gamma1 W_j^T phi e + k Gamma1 sum Y^T (U - Y zeta_j_hat)`.
pub fn zeta_j_derivative(w_j: &Mat2, phi: &Vec2, e: &Vec2, correction: &Vec2, g: &Gains) -> Vec2 {
    g.gamma1 * (-(w_j.transpose() * phi.component_mul(e)) + g.k_icl * correction)
}
