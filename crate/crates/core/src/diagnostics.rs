//! Analysis quantities computed alongside a run: barrier Lyapunov value,
//! Lyapunov-Krasovskii functionals over the delay interval, the
//! skew-symmetry residual and the safe-set radius.

use std::collections::VecDeque;

use crate::config::DiagnosticsConfig;
use crate::controller::BarrierBounds;
use crate::robot_model::{coriolis_matrix, mass_matrix_rate, DynamicParams, JointState, Vec2};

/// `V1 = 1/2 sum log(k_m^2 / (k_m^2 - e^2))`. Returns `(inf, true)` on or
/// beyond the barrier.
pub fn blf_value(e_p: &Vec2, bb: &BarrierBounds) -> (f64, bool) {
    let mut v = 0.0;
    for i in 0..2 {
        let k2 = bb.k_m[i] * bb.k_m[i];
        let gap = k2 - e_p[i] * e_p[i];
        if !(gap > 0.0) {
            return (f64::INFINITY, true);
        }
        // ln(k^2 / gap) = -ln(1 - e^2/k^2), accurate for small errors
        v += -(-(e_p[i] * e_p[i]) / k2).ln_1p();
    }
    (0.5 * v, false)
}

/// `x^T (Mdot - 2C) x`, zero up to rounding for a correctly built `C`.
pub fn skew_residual(js: &JointState, zy: &DynamicParams, x: &Vec2) -> f64 {
    let n = mass_matrix_rate(js, zy) - 2.0 * coriolis_matrix(js, zy);
    x.dot(&(n * x))
}

/// Integrands of the three functionals at one instant:
/// `|p_h_ddot|^2`, `|d/dt (phi e_p)|^2`, `|p_h_dot|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LkSample {
    pub t: f64,
    pub g: [f64; 3],
}

/// `int_{q}^{t} int_{s}^{t} g(l) dl ds` with `q = max(t - T, 0)`, both
/// integrals by the trapezoid rule over the sample times.
pub fn nested_integral(samples: &[(f64, f64)]) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    // inner integral from each sample time to the end
    let mut inner = vec![0.0; n];
    for k in (0..n - 1).rev() {
        let (t0, g0) = samples[k];
        let (t1, g1) = samples[k + 1];
        inner[k] = inner[k + 1] + 0.5 * (g0 + g1) * (t1 - t0);
    }
    (0..n - 1)
        .map(|k| 0.5 * (inner[k] + inner[k + 1]) * (samples[k + 1].0 - samples[k].0))
        .sum()
}

/// `P_i = (K_LK,i omega_i / 2) int int g_i` over the samples in
/// `[max(t - T, 0), t]`, where `t` is the time of the last sample.
pub fn lk_functionals(history: &[LkSample], delay: f64, dc: &DiagnosticsConfig) -> [f64; 3] {
    let Some(last) = history.last() else {
        return [0.0; 3];
    };
    let lower = (last.t - delay).max(0.0);
    let tol = 1e-9 * delay.max(1.0);
    let window: Vec<&LkSample> = history.iter().filter(|s| s.t >= lower - tol).collect();
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        let series: Vec<(f64, f64)> = window.iter().map(|s| (s.t, s.g[i])).collect();
        *o = 0.5 * dc.k_lk[i] * dc.omega[i] * nested_integral(&series);
    }
    out
}

/// Rolling buffer that keeps just enough history for the functionals.
#[derive(Debug, Clone)]
pub struct LkHistory {
    samples: VecDeque<LkSample>,
    delay: f64,
}

impl LkHistory {
    pub fn new(delay: f64) -> Self {
        Self {
            samples: VecDeque::new(),
            delay,
        }
    }

    pub fn push(&mut self, s: LkSample) {
        self.samples.push_back(s);
        let lower = s.t - self.delay - 1e-9 * self.delay.max(1.0);
        while self.samples.len() > 1 && self.samples[1].t <= lower {
            self.samples.pop_front();
        }
    }

    pub fn evaluate(&mut self, dc: &DiagnosticsConfig) -> [f64; 3] {
        lk_functionals(self.samples.make_contiguous(), self.delay, dc)
    }
}

/// Safe-set radius `k_m sqrt(1 - exp(-rho))` with
/// `rho = -2 (V0 exp(-beta1 t) + (eps1 / beta1)(1 - exp(-beta1 t)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafeRadius {
    pub rho: f64,
    /// NaN where the formula leaves the real domain.
    pub radius: Vec2,
    pub in_domain: bool,
}

pub fn safe_radius_from_rho(rho: f64, bb: &BarrierBounds) -> SafeRadius {
    let arg = -(-rho).exp_m1();
    let in_domain = arg >= 0.0;
    let radius = if in_domain {
        bb.k_m * arg.sqrt()
    } else {
        Vec2::from_element(f64::NAN)
    };
    SafeRadius { rho, radius, in_domain }
}

pub fn safe_radius(v0: f64, epsilon1: f64, beta1: f64, t: f64, bb: &BarrierBounds) -> SafeRadius {
    let decay = (-beta1 * t).exp();
    let rho = -2.0 * (v0 * decay + (epsilon1 / beta1) * (1.0 - decay));
    safe_radius_from_rho(rho, bb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot_model::RobotParams;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn bb() -> BarrierBounds {
        BarrierBounds::default()
    }

    #[test]
    fn blf_examples() {
        assert_eq!(blf_value(&Vec2::zeros(), &bb()), (0.0, false));
        let (v, bad) = blf_value(&Vec2::new(0.2, 0.0), &bb());
        assert!(!bad);
        assert_relative_eq!(v, 0.5 * (0.16f64 / 0.12).ln(), epsilon = 1e-15);
        assert_relative_eq!(v, 0.143841, epsilon = 1e-6);
        let mut last = 0.0;
        for k in 1..=6 {
            let e = 0.4 - 10f64.powi(-k);
            let (v, _) = blf_value(&Vec2::new(e, 0.0), &bb());
            assert!(v > last);
            last = v;
        }
        assert!(last > 2.0);
        assert_eq!(blf_value(&Vec2::new(0.4, 0.0), &bb()), (f64::INFINITY, true));
    }

    proptest! {
        #[test]
        fn blf_even_and_monotone(a in -0.39..0.39f64, b in -1.39..1.39f64, s in 0.0..1.0f64) {
            let (v, _) = blf_value(&Vec2::new(a, b), &bb());
            let (w, _) = blf_value(&Vec2::new(-a, -b), &bb());
            prop_assert_eq!(v, w);
            let (u, _) = blf_value(&Vec2::new(a * s, b), &bb());
            prop_assert!(u <= v);
            prop_assert!(v >= 0.0);
        }
    }

    #[test]
    fn skew_residual_examples() {
        let zy = RobotParams::default().true_dynamic_params();
        let x = Vec2::new(0.7, -1.3);
        let still = JointState::new(Vec2::new(0.4, 1.1), Vec2::zeros(), 0.0);
        assert_eq!(skew_residual(&still, &zy, &x), 0.0);
        let moving = JointState::new(Vec2::new(0.4, 1.1), Vec2::new(2.0, -3.0), 0.0);
        let r1 = skew_residual(&moving, &zy, &x);
        let r2 = skew_residual(&moving, &zy, &(2.0 * x));
        assert!(r1.abs() < 1e-12);
        assert!((r2 - 4.0 * r1).abs() < 1e-12);
    }

    fn grid(dt: f64, t_end: f64, g: impl Fn(f64) -> [f64; 3]) -> Vec<LkSample> {
        let n = (t_end / dt).round() as usize;
        (0..=n).map(|k| {
            let t = k as f64 * dt;
            LkSample { t, g: g(t) }
        })
        .collect()
    }

    #[test]
    fn static_human_has_zero_functionals() {
        let h = grid(0.01, 2.0, |_| [0.0; 3]);
        assert_eq!(lk_functionals(&h, 0.45, &DiagnosticsConfig::default()), [0.0; 3]);
    }

    #[test]
    fn constant_speed_closed_form() {
        // |p_h_dot| = 0.1 everywhere on the reference circle
        let h = grid(0.01, 5.0, |_| [0.0025, 0.0, 0.01]);
        let p = lk_functionals(&h, 0.45, &DiagnosticsConfig {
            k_lk: [1.0; 3],
            omega: [1.0; 3],
            lambda_threshold: 1e-4,
        });
        let closed = 0.5 * 0.01 * 0.45 * 0.45 / 2.0;
        assert_relative_eq!(p[2], closed, epsilon = 1e-15);
        assert_relative_eq!(p[2], 5.0625e-4, epsilon = 1e-15);
        assert_relative_eq!(p[0], 0.25 * closed, epsilon = 1e-15);
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn functionals_scale_linearly_in_gains() {
        let h = grid(0.01, 3.0, |t| [t.sin().powi(2), t, 1.0 + t.cos()]);
        let base = DiagnosticsConfig::default();
        let p = lk_functionals(&h, 0.45, &base);
        let doubled = DiagnosticsConfig {
            k_lk: [2.0; 3],
            omega: [1.0; 3],
            ..base
        };
        let q = lk_functionals(&h, 0.45, &doubled);
        for i in 0..3 {
            assert!(p[i] >= 0.0);
            assert_relative_eq!(q[i], 4.0 * p[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn nested_integral_matches_weighted_form() {
        // int_0^1 int_s^1 l dl ds = int_0^1 l * l dl = 1/3
        let s: Vec<(f64, f64)> = (0..=1000).map(|k| (k as f64 * 1e-3, k as f64 * 1e-3)).collect();
        assert_relative_eq!(nested_integral(&s), 1.0 / 3.0, epsilon = 1e-6);
    }

    #[test]
    fn startup_clamps_lower_limit() {
        let h = grid(0.01, 0.2, |_| [1.0; 3]);
        let p = lk_functionals(&h, 0.45, &DiagnosticsConfig::default());
        // only [0, 0.2] is available
        assert_relative_eq!(p[0], 0.5 * 0.5 * 0.2 * 0.2 / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn rolling_history_matches_full_history() {
        let h = grid(0.01, 3.0, |t| [t, t * t, 1.0]);
        let mut roll = LkHistory::new(0.45);
        for s in &h {
            roll.push(*s);
        }
        let dc = DiagnosticsConfig::default();
        assert_eq!(roll.evaluate(&dc), lk_functionals(&h, 0.45, &dc));
    }

    #[test]
    fn safe_radius_limits() {
        let r = safe_radius_from_rho(0.0, &bb());
        assert_eq!(r.radius, Vec2::zeros());
        let r = safe_radius_from_rho(50.0, &bb());
        assert_relative_eq!(r.radius, bb().k_m, epsilon = 1e-15);
        let r = safe_radius(0.1, 0.05, 1.0, 1e3, &bb());
        assert_relative_eq!(r.rho, -0.1, epsilon = 1e-12);
        assert!(!r.in_domain);
        assert!(r.radius[0].is_nan());
    }
}
