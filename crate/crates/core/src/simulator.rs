//! Closed-loop fixed-step simulation: zero-order-hold torque, RK plant
//! substeps, explicit first-order adaptation and ICL bookkeeping.

use std::time::Instant;

use crate::config::SimConfig;
use crate::controller::{barrier_weights, eta, sync_error, BarrierBounds, Controller};
use crate::diagnostics::{blf_value, skew_residual, LkHistory, LkSample};
use crate::error::{ControlError, SimError};
use crate::human_trajectory::{DelayLine, TaskPoint, TrajectorySource};
use crate::icl::IclStack;
use crate::integrator::{integrate_plant, Integrator};
use crate::registry::{icl_policies, Strategies};
use crate::robot_model::{
    barrier_product_rate, forward_kinematics, inverse_kinematics, jacobian, kinematic_regressor, DynamicParams,
    JointState, KinematicParams, Vec2, Vec7,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Completed,
    BarrierViolation,
    NumericFailure,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Completed => "completed",
            Status::BarrierViolation => "barrier_violation",
            Status::NumericFailure => "numeric_failure",
        }
    }
}

/// Optional analysis columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagColumns {
    pub p_lk: [f64; 3],
    pub skew_residual: f64,
}

/// One control step's worth of signals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRecord {
    pub t: f64,
    pub theta: Vec2,
    pub theta_dot: Vec2,
    pub p: Vec2,
    pub p_h: Vec2,
    pub p_ht: Vec2,
    pub e_p: Vec2,
    pub e_pt: Vec2,
    pub eta: Vec2,
    pub eta_t: Vec2,
    pub tau: Vec2,
    pub zeta_j_hat: Vec2,
    pub zeta_y_hat: Vec7,
    pub norm_e_p: f64,
    pub norm_e_pt: f64,
    pub v1: f64,
    pub lambda_min: f64,
    pub constraint_margin: Vec2,
    pub window_count: usize,
    /// True end-effector velocity `J theta_dot`.
    pub p_dot: Vec2,
    /// Estimated velocity `Jhat theta_dot`.
    pub p_dot_est: Vec2,
    pub p_h_dot: Vec2,
    pub p_h_ddot: Vec2,
    pub diag: Option<DiagColumns>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub t: f64,
    pub axis: usize,
    pub error: f64,
    pub bound: f64,
    /// Whether the delayed (measurable) error or the current error crossed.
    pub delayed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub status: Status,
    pub steps: usize,
    pub t_end: f64,
    pub final_norm_e_p: f64,
    pub final_norm_e_pt: f64,
    pub peak_norm_e_p: f64,
    pub peak_norm_e_pt: f64,
    pub max_abs_e_p: Vec2,
    pub min_margin: Vec2,
    pub zeta_j_hat: Vec2,
    pub zeta_y_hat: Vec7,
    pub first_excited: Option<f64>,
    pub damped_steps: usize,
    pub violation: Option<Violation>,
    pub wall_clock: f64,
}

#[derive(Debug)]
pub struct SimState {
    pub js: JointState,
    pub zeta_j_hat: KinematicParams,
    pub zeta_y_hat: Vec7,
    pub delay_line: DelayLine,
    pub icl: IclStack,
    pub step: usize,
}

/// What a step produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Continue(LogRecord),
    Stop(Status, Option<LogRecord>, Option<Violation>),
}

/// A configured closed loop; owns the strategies and the true plant.
#[derive(Debug)]
pub struct Simulator {
    cfg: SimConfig,
    controller: Controller,
    integrator: Box<dyn Integrator>,
    trajectory: Box<dyn TrajectorySource>,
    plant: DynamicParams,
    zj_true: KinematicParams,
    bounds: BarrierBounds,
    dt: f64,
    lk: Option<LkHistory>,
    damped_steps: usize,
}

fn violation(e: ControlError, t: f64, delayed: bool) -> Option<Violation> {
    match e {
        ControlError::BarrierViolation { axis, error, bound } => Some(Violation {
            t,
            axis,
            error,
            bound,
            delayed,
        }),
        _ => None,
    }
}

impl Simulator {
    pub fn new(cfg: &SimConfig, diagnostics: bool) -> Result<Self, SimError> {
        cfg.validate()?;
        let Strategies {
            inverse,
            rate,
            integrator,
            trajectory,
            ..
        } = Strategies::resolve(cfg)?;
        let controller = Controller {
            gains: cfg.gains(),
            bounds: cfg.bounds(),
            inverse,
            rate,
        };
        Ok(Self {
            controller,
            plant: cfg.robot.true_dynamic_params(),
            zj_true: cfg.robot.kinematic_params(),
            bounds: cfg.bounds(),
            dt: cfg.sim.dt,
            lk: diagnostics.then(|| LkHistory::new(cfg.gains.delay)),
            damped_steps: 0,
            integrator,
            trajectory,
            cfg: cfg.clone(),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    fn human(&self, t: f64) -> TaskPoint {
        self.trajectory.eval(t)
    }

    /// Initial state: arm at `p0` at rest, estimates from the config, delay
    /// line and ICL stack primed with the `t = 0` samples.
    pub fn init(&self) -> Result<SimState, SimError> {
        let theta = inverse_kinematics(&self.cfg.p0(), &self.zj_true, self.cfg.sim.elbow)?;
        let js = JointState::new(theta, Vec2::zeros(), 0.0);
        let mut delay_line = DelayLine::new(self.cfg.gains.delay, self.dt);
        delay_line.push(0.0, self.human(0.0))?;
        let g = &self.controller.gains;
        let mut icl = IclStack::new(
            g.n_windows,
            g.window,
            icl_policies().build(&self.cfg.strategies.icl_policy, &self.cfg)?,
        );
        let p = forward_kinematics(&theta, &self.zj_true);
        icl.push_sample(0.0, &p, &kinematic_regressor(&js))?;
        let e_pt = sync_error(&p, &delay_line.delayed(0.0)?.p);
        barrier_weights(&e_pt, &self.bounds)?;
        Ok(SimState {
            js,
            zeta_j_hat: self.cfg.zeta_j0(),
            zeta_y_hat: self.cfg.zeta_y0(),
            delay_line,
            icl,
            step: 0,
        })
    }

    /// Advances one control period.
    pub fn step(&mut self, st: &mut SimState) -> Result<StepOutcome, SimError> {
        let t = st.step as f64 * self.dt;
        let hp = self.human(t);
        if st.step > 0 {
            st.delay_line.push(t, hp)?;
        }
        let ht = st.delay_line.delayed(t)?;
        let js = st.js;
        let p = forward_kinematics(&js.theta, &self.zj_true);
        let e_p = sync_error(&p, &hp.p);
        let phi = match barrier_weights(&e_p, &self.bounds) {
            Ok(phi) => phi,
            Err(e) => return Ok(StepOutcome::Stop(Status::BarrierViolation, None, violation(e, t, false))),
        };
        let correction = st.icl.correction(&st.zeta_j_hat.0);
        let out = match self
            .controller
            .compute(&js, &p, &ht, &st.zeta_j_hat, &st.zeta_y_hat, &correction)
        {
            Ok(o) => o,
            Err(e) => return Ok(StepOutcome::Stop(Status::BarrierViolation, None, violation(e, t, true))),
        };
        if out.damped {
            self.damped_steps += 1;
        }
        let k_1 = self.controller.gains.k_1;
        let eta_now = eta(&js.theta_dot, &out.jp_inv, &hp.p_dot, &phi, &e_p, k_1);
        let (v1, _) = blf_value(&e_p, &self.bounds);
        let p_dot = jacobian(&js.theta, &self.zj_true) * js.theta_dot;

        let diag = match self.lk.as_mut() {
            Some(lk) => {
                let e_dot = hp.p_dot - p_dot;
                let rate = barrier_product_rate(&e_p, &e_dot, &phi);
                lk.push(LkSample {
                    t,
                    g: [hp.p_ddot.norm_squared(), rate.norm_squared(), hp.p_dot.norm_squared()],
                });
                Some(DiagColumns {
                    p_lk: lk.evaluate(&self.cfg.diagnostics),
                    skew_residual: skew_residual(&js, &self.plant, &out.eta_t),
                })
            }
            None => None,
        };

        let record = LogRecord {
            t,
            theta: js.theta,
            theta_dot: js.theta_dot,
            p,
            p_h: hp.p,
            p_ht: ht.p,
            e_p,
            e_pt: out.e_pt,
            eta: eta_now,
            eta_t: out.eta_t,
            tau: out.tau,
            zeta_j_hat: st.zeta_j_hat.0,
            zeta_y_hat: st.zeta_y_hat,
            norm_e_p: e_p.norm(),
            norm_e_pt: out.e_pt.norm(),
            v1,
            lambda_min: st.icl.excitation(),
            constraint_margin: self.bounds.k_m - e_p.abs(),
            window_count: st.icl.len(),
            p_dot,
            p_dot_est: out.p_dot_est,
            p_h_dot: hp.p_dot,
            p_h_ddot: hp.p_ddot,
            diag,
        };

        let next = integrate_plant(
            self.integrator.as_ref(),
            &js,
            &out.tau,
            &self.plant,
            self.dt,
            self.cfg.sim.plant_substeps,
        );
        let next = match next {
            Ok(n) if n.is_finite() => n,
            _ => return Ok(StepOutcome::Stop(Status::NumericFailure, Some(record), None)),
        };
        st.zeta_j_hat.0 += self.dt * out.zeta_j_dot;
        st.zeta_y_hat += self.dt * out.zeta_y_dot;
        st.step += 1;
        let t_next = st.step as f64 * self.dt;
        st.js = JointState { t: t_next, ..next };
        let p_next = forward_kinematics(&next.theta, &self.zj_true);
        st.icl.push_sample(t_next, &p_next, &kinematic_regressor(&st.js))?;
        if !(st.zeta_j_hat.0.iter().chain(st.zeta_y_hat.iter()).all(|v| v.is_finite())) {
            return Ok(StepOutcome::Stop(Status::NumericFailure, Some(record), None));
        }
        Ok(StepOutcome::Continue(record))
    }

    /// Runs the configured number of steps or until the run terminates.
    pub fn run(&mut self) -> Result<(Vec<LogRecord>, RunSummary), SimError> {
        let started = Instant::now();
        let steps = self.cfg.steps();
        let mut log = Vec::with_capacity(steps);
        let mut status = Status::Completed;
        let mut violated = None;
        let mut st = match self.init() {
            Ok(st) => st,
            Err(SimError::Control(e)) => {
                let mut s = self.summarize(&[], None, Status::BarrierViolation, violation(e, 0.0, true));
                s.wall_clock = started.elapsed().as_secs_f64();
                return Ok((log, s));
            }
            Err(e) => return Err(e),
        };
        while st.step < steps {
            match self.step(&mut st)? {
                StepOutcome::Continue(r) => log.push(r),
                StepOutcome::Stop(s, r, v) => {
                    log.extend(r);
                    status = s;
                    violated = v;
                    break;
                }
            }
        }
        let mut summary = self.summarize(&log, Some(&st), status, violated);
        summary.wall_clock = started.elapsed().as_secs_f64();
        Ok((log, summary))
    }

    fn summarize(
        &self,
        log: &[LogRecord],
        st: Option<&SimState>,
        status: Status,
        violation: Option<Violation>,
    ) -> RunSummary {
        let mut max_abs = Vec2::zeros();
        let (mut peak_p, mut peak_pt) = (0.0f64, 0.0f64);
        for r in log {
            max_abs = max_abs.zip_map(&r.e_p, |m, e| m.max(e.abs()));
            peak_p = peak_p.max(r.norm_e_p);
            peak_pt = peak_pt.max(r.norm_e_pt);
        }
        let last = log.last();
        RunSummary {
            status,
            steps: log.len(),
            t_end: last.map_or(0.0, |r| r.t),
            final_norm_e_p: last.map_or(0.0, |r| r.norm_e_p),
            final_norm_e_pt: last.map_or(0.0, |r| r.norm_e_pt),
            peak_norm_e_p: peak_p,
            peak_norm_e_pt: peak_pt,
            max_abs_e_p: max_abs,
            min_margin: self.bounds.k_m - max_abs,
            zeta_j_hat: st.map_or(self.cfg.zeta_j0().0, |s| s.zeta_j_hat.0),
            zeta_y_hat: st.map_or(self.cfg.zeta_y0(), |s| s.zeta_y_hat),
            first_excited: st.and_then(|s| s.icl.first_excited()),
            damped_steps: self.damped_steps,
            violation,
            wall_clock: 0.0,
        }
    }
}

/// Convenience wrapper: build, initialize and run.
pub fn run(cfg: &SimConfig, diagnostics: bool) -> Result<(Vec<LogRecord>, RunSummary), SimError> {
    Simulator::new(cfg, diagnostics)?.run()
}
