use thiserror::Error;

/// Best iterate reached by a solver that did not converge.
#[derive(Debug, Clone, PartialEq)]
pub struct NonConvergence {
    pub iterations: usize,
    /// Infinity norm of the residual at the best iterate.
    pub residual: f64,
    /// Flattened unknown vector of the best iterate.
    pub best: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("Euler-angle singularity: |cos(pitch)| = {cos_pitch:e} below {eps:e}")]
    Singularity { cos_pitch: f64, eps: f64 },

    #[error("matrix is not skew-symmetric (||M + M^T|| = {0:e})")]
    NotSkew(f64),

    #[error("rotation undefined: {0}")]
    Degenerate(&'static str),

    #[error("vehicle is not controllable: rank(B) = {0} < 3")]
    Controllability(usize),

    #[error("allocation matrix has rank {found}, expected {expected}")]
    Rank { found: usize, expected: usize },

    #[error("hover solve failed: {0}")]
    NoHover(String),

    #[error("time {t} outside trajectory domain [0, {tf}]")]
    OutOfDomain { t: f64, tf: f64 },

    #[error("singular linear system: {0}")]
    SingularSystem(&'static str),

    #[error("thrust demand vanishes (free fall): ||acc - g|| = {0:e}")]
    FreeFall(f64),

    #[error(
        "solver did not converge after {} iterations (best residual {:e})",
        .0.iterations,
        .0.residual
    )]
    NonConvergence(Box<NonConvergence>),

    #[error("KKT system singular: constraint Jacobian lost row rank")]
    SingularKkt,

    #[error("method incompatible with vehicle: {0}")]
    InfeasibleMethod(String),

    #[error("simulation diverged at t = {t}: |P| = {norm:e} m")]
    Diverged { t: f64, norm: f64 },

    #[error("invalid vehicle: {0}")]
    InvalidVehicle(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
