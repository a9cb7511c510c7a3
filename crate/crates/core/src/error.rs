use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("Gauss-Legendre Newton iteration stalled at order {0}")]
    GaussLegendre(usize),

    #[error("quadrature did not converge (coarse {coarse:e}, refined {refined:e})")]
    Quadrature { coarse: f64, refined: f64 },

    #[error("matrix is not symmetric (max deviation {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not orthogonal (max deviation {0:e})")]
    NotOrthogonal(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("Gram matrix is numerically singular (eigenvalues in [{min:e}, {max:e}]); basis is linearly dependent")]
    SingularGram { min: f64, max: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid point group: {0}")]
    Group(String),

    #[error("representation paths disagree by {0:e}")]
    RepresentationMismatch(f64),

    #[error("projector is not idempotent (residual {0:e})")]
    NotIdempotent(f64),

    #[error("B and P do not commute (residual {0:e}); group does not match geometry")]
    Commutation(f64),

    #[error("Temple's inequality is inapplicable: mean {mean} is not below mu2_lb {mu2_lb}")]
    TempleInapplicable { mean: f64, mu2_lb: f64 },

    #[error("negative variance {0:e}")]
    NegativeVariance(f64),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
