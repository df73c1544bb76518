//! Named, runtime-selectable strategies. Each family maps a name from the
//! `[strategies]` (or `[trajectory]`) config section to a factory.

use crate::config::SimConfig;
use crate::controller::{JacobianInverse, JacobianRate, SmoothDampedInverse, SwitchedInverse};
use crate::error::{RegistryError, SimError, TrajectoryError};
use crate::human_trajectory::{TabulatedTrajectory, TrajectorySource};
use crate::icl::{FifoPolicy, MaxEigPolicy, StackPolicy};
use crate::integrator::{Euler, Integrator, Rk2, Rk4};

pub type Factory<T> = fn(&SimConfig) -> Result<Box<T>, SimError>;

pub struct Registry<T: ?Sized> {
    family: &'static str,
    entries: Vec<(&'static str, Factory<T>)>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(family: &'static str) -> Self {
        Self {
            family,
            entries: Vec::new(),
        }
    }

    /// Adds or replaces a named factory.
    pub fn register(&mut self, name: &'static str, factory: Factory<T>) -> &mut Self {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, factory));
        self
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn build(&self, name: &str, cfg: &SimConfig) -> Result<Box<T>, SimError> {
        let factory = self
            .entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, f)| f)
            .ok_or_else(|| RegistryError::Unknown {
                family: self.family,
                name: name.to_string(),
                known: self.names().join(", "),
            })?;
        factory(cfg)
    }
}

pub fn jacobian_inverses() -> Registry<dyn JacobianInverse> {
    let mut r: Registry<dyn JacobianInverse> = Registry::new("jacobian_inverse");
    r.register("dls", |c| {
        Ok(Box::new(SmoothDampedInverse {
            sigma_threshold: c.strategies.dls_sigma,
            max_damping: c.strategies.dls_lambda,
        }))
    })
    .register("switched", |c| {
        Ok(Box::new(SwitchedInverse {
            det_threshold: c.strategies.switch_det,
            damping: c.strategies.switch_damping,
        }))
    });
    r
}

pub fn jacobian_rates() -> Registry<JacobianRate> {
    let mut r = Registry::new("jacobian_rate");
    r.register("full", |_| Ok(Box::new(JacobianRate::Full)))
        .register("joint-only", |_| Ok(Box::new(JacobianRate::JointOnly)));
    r
}

pub fn icl_policies() -> Registry<dyn StackPolicy> {
    let mut r: Registry<dyn StackPolicy> = Registry::new("icl_policy");
    r.register("fifo", |_| Ok(Box::new(FifoPolicy)))
        .register("max-eig", |_| Ok(Box::new(MaxEigPolicy)));
    r
}

pub fn integrators() -> Registry<dyn Integrator> {
    let mut r: Registry<dyn Integrator> = Registry::new("integrator");
    r.register("rk4", |_| Ok(Box::new(Rk4)))
        .register("rk2", |_| Ok(Box::new(Rk2)))
        .register("euler", |_| Ok(Box::new(Euler)));
    r
}

pub fn trajectories() -> Registry<dyn TrajectorySource> {
    let mut r: Registry<dyn TrajectorySource> = Registry::new("trajectory");
    r.register("circle", |c| Ok(Box::new(c.trajectory.circle())))
        .register("table", |c| {
            let path = c
                .trajectory
                .table
                .as_ref()
                .ok_or_else(|| TrajectoryError::Table("trajectory.table is not set".into()))?;
            Ok(Box::new(TabulatedTrajectory::load(path)?))
        });
    r
}

/// All strategies a run needs, resolved from one config.
#[derive(Debug)]
pub struct Strategies {
    pub inverse: Box<dyn JacobianInverse>,
    pub rate: JacobianRate,
    pub icl_policy: Box<dyn StackPolicy>,
    pub integrator: Box<dyn Integrator>,
    pub trajectory: Box<dyn TrajectorySource>,
}

impl Strategies {
    pub fn resolve(cfg: &SimConfig) -> Result<Self, SimError> {
        let s = &cfg.strategies;
        Ok(Self {
            inverse: jacobian_inverses().build(&s.jacobian_inverse, cfg)?,
            rate: *jacobian_rates().build(&s.jacobian_rate, cfg)?,
            icl_policy: icl_policies().build(&s.icl_policy, cfg)?,
            integrator: integrators().build(&s.integrator, cfg)?,
            trajectory: trajectories().build(&cfg.trajectory.source, cfg)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot_model::Mat2;

    #[test]
    fn defaults_resolve() {
        let s = Strategies::resolve(&SimConfig::default()).unwrap();
        assert_eq!(s.rate, JacobianRate::Full);
        assert_eq!(s.integrator.order(), 4);
        let p = s.trajectory.eval(0.0).p;
        assert!((p[0] - 0.75).abs() < 1e-15 && (p[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn every_registered_name_builds() {
        let cfg = SimConfig::default();
        for n in jacobian_inverses().names() {
            let inv = jacobian_inverses().build(n, &cfg).unwrap();
            assert!(inv.invert(&Mat2::identity()).inv == Mat2::identity());
        }
        for n in jacobian_rates().names() {
            jacobian_rates().build(n, &cfg).unwrap();
        }
        for n in icl_policies().names() {
            icl_policies().build(n, &cfg).unwrap();
        }
        let orders: Vec<u32> = integrators()
            .names()
            .into_iter()
            .map(|n| integrators().build(n, &cfg).unwrap().order())
            .collect();
        assert_eq!(orders, vec![4, 2, 1]);
    }

    #[test]
    fn unknown_name_lists_known_ones() {
        let err = integrators().build("rk45", &SimConfig::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("rk45") && msg.contains("rk4, rk2, euler"), "{msg}");
    }

    #[test]
    fn table_source_requires_path() {
        let mut cfg = SimConfig::default();
        cfg.trajectory.source = "table".into();
        assert!(matches!(
            Strategies::resolve(&cfg),
            Err(SimError::Trajectory(TrajectoryError::Table(_)))
        ));
    }

    #[test]
    fn registering_same_name_replaces() {
        let mut r = integrators();
        r.register("rk4", |_| Ok(Box::new(Euler)));
        assert_eq!(r.names().len(), 3);
        assert_eq!(r.build("rk4", &SimConfig::default()).unwrap().order(), 1);
    }
}
