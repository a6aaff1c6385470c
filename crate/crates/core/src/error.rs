use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("measure r^{exponent} dr diverges at the origin")]
    DivergentMeasure { exponent: f64 },
    #[error("function has unbounded support")]
    UnboundedSupport,
    #[error("derivatives up to order {need} required, {have} available")]
    InsufficientDerivatives { need: usize, have: usize },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("unregistered integrand tag: {0}")]
    Unregistered(String),
    #[error("did not converge: {0}")]
    NonConvergence(String),
    #[error("cap polynomial is not monotone: min phi' = {0:e}")]
    NotMonotone(f64),
    #[error("normalization check failed: gradient norm {0}")]
    Normalization(f64),
}

impl Error {
    /// True for errors caused by inputs outside the theorems' hypotheses.
    pub fn is_hypothesis(&self) -> bool {
        matches!(
            self,
            Error::Hypothesis(_) | Error::Domain(_) | Error::DivergentMeasure { .. } | Error::Infeasible(_)
        )
    }

    pub fn is_convergence(&self) -> bool {
        matches!(self, Error::NonConvergence(_) | Error::Normalization(_) | Error::NotMonotone(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}

pub(crate) fn hypothesis<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Hypothesis(msg.into()))
}
