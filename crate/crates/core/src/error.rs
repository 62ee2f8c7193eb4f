use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("Gu/Gs unavailable: no autonomous limit at the {0} end for l = {1}")]
    NoAutonomousLimit(&'static str, f64),
    #[error("non-finite value at t = {0}")]
    NonFinite(f64),
    #[error("angle undefined at the origin (sample {0})")]
    OriginSample(usize),
    #[error("degenerate triangle")]
    DegenerateTriangle,
    #[error("quadrature did not converge at x = {0}")]
    Quadrature(f64),
    #[error("section empty: no sample reached tau = {0}")]
    SectionEmpty(f64),
    #[error("curves live on different sections (tau {0} vs {1})")]
    SectionMismatch(f64, f64),
    #[error("hypothesis {name} fails: {detail}")]
    Hypothesis { name: String, detail: String },
    #[error("search failed: {0}")]
    Search(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
