use alloc::boxed::Box;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    Validation {
        field: &'static str,
        reason: &'static str,
    },

    #[error("linkage assembly did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("mass matrix is not positive definite")]
    IllConditioned,

    #[error("guide points {0} coincide, force direction undefined")]
    CoincidentGuide(&'static str),

    #[error("trajectory too short: need {needed} samples, have {available}")]
    TrajectoryTooShort { needed: usize, available: usize },

    #[error("trajectory is empty or does not cover the cost horizon")]
    IncompleteTrajectory,

    #[error("all {0} objective evaluations failed")]
    AllEvaluationsFailed(usize),

    #[error("{module} failed at t = {t} s: {source}")]
    Step {
        t: f64,
        module: &'static str,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, t: f64, module: &'static str) -> Self {
        match self {
            e @ Error::Step { .. } => e,
            e => Error::Step {
                t,
                module,
                source: Box::new(e),
            },
        }
    }
}
