use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no equilibrium: {0}")]
    NoEquilibrium(String),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParams { name: &'static str, reason: String },
    #[error("eigenvalue iteration did not converge within {0} sweeps")]
    ConvergenceFailure(usize),
}

#[derive(Debug, Error, PartialEq)]
pub enum FuzzyError {
    #[error("aggregated output set is empty (all grades zero)")]
    EmptySet,
    #[error("invalid fuzzy configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown linguistic label `{0}`")]
    UnknownLabel(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum GaError {
    #[error("chromosome length {actual} does not match gene layout ({expected} bits)")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("all shifted fitnesses are zero; roulette selection is undefined")]
    DegenerateFitness,
    #[error("invalid GA configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("damping fit failed: {0}")]
    FitFailed(String),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Failures surfaced by configuration loading and the benchmark front end.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

/// Anything the benchmark front end can fail with.
#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ga(#[from] GaError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    MissingTuned(String),
}
