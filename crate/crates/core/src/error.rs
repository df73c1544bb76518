use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid robot parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("inertia matrix is not positive definite")]
    SingularInertia,
    #[error("target ({x}, {y}) outside the reachable annulus [{inner}, {outer}]")]
    Unreachable { x: f64, y: f64, inner: f64, outer: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("delay line is empty")]
    EmptyBuffer,
    #[error("sample time {t} does not follow {last}")]
    NonMonotonic { t: f64, last: f64 },
    #[error("trajectory table: {0}")]
    Table(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    /// `|e_i| >= k_m,i`: the barrier weight is undefined.
    #[error("barrier violated on axis {axis}: |e| = {error} >= k_m = {bound}")]
    BarrierViolation { axis: usize, error: f64, bound: f64 },
    #[error("Jacobian estimate is singular (|det| = {det})")]
    Singular { det: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IclError {
    #[error("sample at t = {t} precedes the previous sample at t = {last}")]
    TimeRegression { t: f64, last: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("unknown {family} strategy `{name}` (known: {known})")]
    Unknown {
        family: &'static str,
        name: String,
        known: String,
    },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid override `{0}`: expected KEY=VALUE")]
    Override(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Icl(#[from] IclError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}
