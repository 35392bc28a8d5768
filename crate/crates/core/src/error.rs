use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("stencil violation at node {node}: neighbor {neighbor} is exterior")]
    StencilViolation { node: usize, neighbor: usize },
    #[error("domain violation: sample point {0:?} lies outside the source domain")]
    DomainViolation(Vec<f64>),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
