//! Human hand trajectory sources and the delay line that models the
//! measurement latency.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::TrajectoryError;
use crate::robot_model::Vec2;

/// Position, velocity and acceleration of the hand.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TaskPoint {
    pub p: Vec2,
    pub p_dot: Vec2,
    pub p_ddot: Vec2,
}

impl TaskPoint {
    pub fn lerp(&self, other: &TaskPoint, w: f64) -> TaskPoint {
        TaskPoint {
            p: self.p.lerp(&other.p, w),
            p_dot: self.p_dot.lerp(&other.p_dot, w),
            p_ddot: self.p_ddot.lerp(&other.p_ddot, w),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().chain(self.p_dot.iter()).chain(self.p_ddot.iter()).all(|v| v.is_finite())
    }
}

pub trait TrajectorySource: Send + Sync + std::fmt::Debug {
    fn eval(&self, t: f64) -> TaskPoint;
}

/// Ellipse `center + radius .* [cos(wt), sin(wt)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleTrajectory {
    pub center: [f64; 2],
    pub radius: [f64; 2],
    pub omega: f64,
}

impl Default for CircleTrajectory {
    fn default() -> Self {
        Self {
            center: [0.55, 0.25],
            radius: [0.2, 0.2],
            omega: 0.5,
        }
    }
}

impl TrajectorySource for CircleTrajectory {
    fn eval(&self, t: f64) -> TaskPoint {
        let (s, c) = (self.omega * t).sin_cos();
        let [rx, ry] = self.radius;
        let w = self.omega;
        TaskPoint {
            p: Vec2::new(self.center[0] + rx * c, self.center[1] + ry * s),
            p_dot: Vec2::new(-rx * w * s, ry * w * c),
            p_ddot: Vec2::new(-rx * w * w * c, -ry * w * w * s),
        }
    }
}

/// Replays a recorded trajectory with columns `t px py vx vy ax ay`,
/// interpolating linearly and holding the end values outside the table.
#[derive(Debug, Clone)]
pub struct TabulatedTrajectory {
    times: Vec<f64>,
    points: Vec<TaskPoint>,
}

impl TabulatedTrajectory {
    pub fn new(rows: Vec<(f64, TaskPoint)>) -> Result<Self, TrajectoryError> {
        if rows.is_empty() {
            return Err(TrajectoryError::Table("no rows".into()));
        }
        for w in rows.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(TrajectoryError::NonMonotonic {
                    t: w[1].0,
                    last: w[0].0,
                });
            }
        }
        let (times, points) = rows.into_iter().unzip();
        Ok(Self { times, points })
    }

    pub fn parse(text: &str) -> Result<Self, TrajectoryError> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let parsed: Result<Vec<f64>, _> = fields.iter().map(|s| s.parse::<f64>()).collect();
            let vals = match parsed {
                Ok(v) => v,
                // a header row is allowed before the first data row
                Err(_) if rows.is_empty() => continue,
                Err(e) => {
                    return Err(TrajectoryError::Table(format!("line {}: {e}", lineno + 1)));
                }
            };
            if vals.len() != 7 {
                return Err(TrajectoryError::Table(format!(
                    "line {}: expected 7 columns, found {}",
                    lineno + 1,
                    vals.len()
                )));
            }
            rows.push((
                vals[0],
                TaskPoint {
                    p: Vec2::new(vals[1], vals[2]),
                    p_dot: Vec2::new(vals[3], vals[4]),
                    p_ddot: Vec2::new(vals[5], vals[6]),
                },
            ));
        }
        Self::new(rows)
    }

    pub fn load(path: &Path) -> Result<Self, TrajectoryError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TrajectoryError::Table(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

impl TrajectorySource for TabulatedTrajectory {
    fn eval(&self, t: f64) -> TaskPoint {
        let n = self.times.len();
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            return self.points[0];
        }
        if i == n {
            return self.points[n - 1];
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        self.points[i - 1].lerp(&self.points[i], (t - t0) / (t1 - t0))
    }
}

/// Fixed-delay buffer of human samples. Queries before the first sample
/// plus the delay return the first sample.
#[derive(Debug, Clone)]
pub struct DelayLine {
    samples: VecDeque<(f64, TaskPoint)>,
    capacity: usize,
    delay: f64,
}

impl DelayLine {
    pub fn new(delay: f64, dt: f64) -> Self {
        let capacity = (delay / dt).ceil() as usize + 2;
        Self {
            samples: VecDeque::with_capacity(capacity + 1),
            capacity,
            delay,
        }
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn push(&mut self, t: f64, tp: TaskPoint) -> Result<(), TrajectoryError> {
        if let Some(&(last, _)) = self.samples.back() {
            if t <= last {
                return Err(TrajectoryError::NonMonotonic { t, last });
            }
        }
        self.samples.push_back((t, tp));
        while self.samples.len() > self.capacity {
            self.samples.pop_front();
        }
        Ok(())
    }

    /// Sample at `max(t - delay, 0)`.
    pub fn delayed(&self, t: f64) -> Result<TaskPoint, TrajectoryError> {
        let (&(t_first, first), &(t_last, last)) = match (self.samples.front(), self.samples.back()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(TrajectoryError::EmptyBuffer),
        };
        let q = (t - self.delay).max(0.0);
        if q <= t_first {
            return Ok(first);
        }
        if q >= t_last {
            return Ok(last);
        }
        let i = self.samples.partition_point(|&(s, _)| s <= q);
        let (t0, p0) = self.samples[i - 1];
        let (t1, p1) = self.samples[i];
        let span = t1 - t0;
        let w = (q - t0) / span;
        // snap grid-aligned queries onto the stored sample
        if w < 1e-9 {
            return Ok(p0);
        }
        if w > 1.0 - 1e-9 {
            return Ok(p1);
        }
        Ok(p0.lerp(&p1, w))
    }
}

/// Per-axis margin `k_h,i - |p_i|`; negative entries flag a violation.
pub fn verify_bounds(tp: &TaskPoint, k_h: &Vec2) -> (Vec2, bool) {
    let margin = Vec2::from_fn(|i, _| k_h[i] - tp.p[i].abs());
    let violated = margin.iter().any(|&m| m < 0.0);
    (margin, violated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn circle_at_start() {
        let tp = CircleTrajectory::default().eval(0.0);
        assert_relative_eq!(tp.p, Vec2::new(0.75, 0.25), epsilon = 1e-15);
        assert_relative_eq!(tp.p_dot, Vec2::new(0.0, 0.1), epsilon = 1e-15);
        assert_relative_eq!(tp.p_ddot, Vec2::new(-0.05, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn circle_quarter_turn() {
        let tp = CircleTrajectory::default().eval(PI);
        assert_relative_eq!(tp.p, Vec2::new(0.55, 0.45), epsilon = 1e-15);
    }

    #[test]
    fn circle_derivatives_match_finite_differences() {
        let c = CircleTrajectory::default();
        let h = 1e-5;
        for k in 0..50 {
            let t = 0.37 * k as f64;
            let fd_v = (c.eval(t + h).p - c.eval(t - h).p) / (2.0 * h);
            let fd_a = (c.eval(t + h).p_dot - c.eval(t - h).p_dot) / (2.0 * h);
            assert_relative_eq!(fd_v, c.eval(t).p_dot, epsilon = 1e-9);
            assert_relative_eq!(fd_a, c.eval(t).p_ddot, epsilon = 1e-9);
        }
    }

    fn primed(delay: f64, dt: f64, until: f64) -> (DelayLine, CircleTrajectory) {
        let c = CircleTrajectory::default();
        let mut dl = DelayLine::new(delay, dt);
        let n = (until / dt).round() as usize;
        for k in 0..=n {
            let t = k as f64 * dt;
            dl.push(t, c.eval(t)).unwrap();
        }
        (dl, c)
    }

    #[test]
    fn delay_clamps_to_first_sample() {
        let (dl, c) = primed(0.45, 0.01, 0.2);
        assert_eq!(dl.delayed(0.2).unwrap(), c.eval(0.0));
    }

    #[test]
    fn delay_matches_analytic_signal() {
        let (dl, c) = primed(0.45, 0.01, 10.0);
        let got = dl.delayed(10.0).unwrap();
        assert_relative_eq!(got.p, c.eval(9.55).p, epsilon = 1e-12);
        // off-grid query: linear interpolation error is O(dt^2)
        let got = dl.delayed(9.995).unwrap();
        let err = (got.p - c.eval(9.545).p).norm();
        assert!(err < 0.25 * 0.05 * 0.01f64.powi(2), "err = {err}");
    }

    #[test]
    fn zero_delay_is_pass_through() {
        let (dl, c) = primed(0.0, 0.01, 3.0);
        assert_eq!(dl.delayed(3.0).unwrap(), c.eval(3.0));
        assert!(dl.capacity() >= 2);
    }

    #[test]
    fn empty_delay_line_errors() {
        let dl = DelayLine::new(0.45, 0.01);
        assert_eq!(dl.delayed(1.0), Err(TrajectoryError::EmptyBuffer));
    }

    #[test]
    fn delay_line_rejects_time_regression() {
        let mut dl = DelayLine::new(0.45, 0.01);
        dl.push(0.1, TaskPoint::default()).unwrap();
        assert!(dl.push(0.1, TaskPoint::default()).is_err());
    }

    #[test]
    fn delay_line_capacity_is_bounded() {
        let (dl, _) = primed(0.45, 0.01, 5.0);
        assert_eq!(dl.len(), dl.capacity());
        assert_eq!(dl.capacity(), 47);
    }

    #[test]
    fn bounds_margin() {
        let k_h = Vec2::new(0.75, 0.45);
        let (m, bad) = verify_bounds(&TaskPoint::default(), &k_h);
        assert_eq!(m, k_h);
        assert!(!bad);
        let tp = TaskPoint {
            p: Vec2::new(1.0, 0.0),
            ..TaskPoint::default()
        };
        let (m, bad) = verify_bounds(&tp, &k_h);
        assert!(bad && m[0] < 0.0 && m[1] > 0.0);
    }

    #[test]
    fn reference_circle_touches_its_bound() {
        let c = CircleTrajectory::default();
        let k_h = Vec2::new(0.75, 0.45);
        let min = (0..=5000)
            .map(|k| verify_bounds(&c.eval(k as f64 * 0.01), &k_h).0.min())
            .fold(f64::INFINITY, f64::min);
        assert!(min.abs() < 1e-12, "min margin {min}");
        assert_eq!(verify_bounds(&c.eval(0.0), &k_h).0[0], 0.0);
    }

    #[test]
    fn delayed_offset_is_bounded_by_speed_times_delay() {
        let c = CircleTrajectory::default();
        for k in 0..500 {
            let t = 0.45 + 0.1 * k as f64;
            let d = (c.eval(t).p - c.eval(t - 0.45).p).norm();
            assert!(d <= 0.1 * 0.45 + 1e-15);
        }
    }

    #[test]
    fn table_parses_and_interpolates() {
        let text = "t,px,py,vx,vy,ax,ay\n0 0 0 1 0 0 0\n1 1 0 1 0 0 0\n# trailing comment\n2 1 1 0 1 0 0\n";
        let tab = TabulatedTrajectory::parse(text).unwrap();
        assert_relative_eq!(tab.eval(0.5).p, Vec2::new(0.5, 0.0));
        assert_relative_eq!(tab.eval(1.5).p, Vec2::new(1.0, 0.5));
        assert_eq!(tab.eval(-1.0).p, Vec2::zeros());
        assert_eq!(tab.eval(9.0).p, Vec2::new(1.0, 1.0));
    }

    #[test]
    fn table_rejects_bad_rows() {
        assert!(TabulatedTrajectory::parse("0 0 0 0 0 0 0\n0 1 1 1 1 1 1\n").is_err());
        assert!(TabulatedTrajectory::parse("0 0 0\n").is_err());
        assert!(TabulatedTrajectory::parse("").is_err());
    }
}
