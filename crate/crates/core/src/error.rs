//! Error types shared across the crate.

use crate::geom::Vec2;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("point ({}, {}) outside chart domain: {reason}", q.x, q.y)]
    DomainViolation { q: Vec2, reason: String },
    #[error("inner Legendre solver did not converge after {iters} iterations (|grad| = {grad_norm:.3e})")]
    LegendreNoConvergence { iters: usize, grad_norm: f64 },
    #[error("model validation failed: {0}")]
    Validation(String),
    #[error("unknown model id `{0}`")]
    UnknownModel(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("node {index} at ({}, {}) outside chart domain", q.x, q.y)]
    NodeOutsideDomain { index: usize, q: Vec2 },
    #[error("total time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("need at least 2 segments, got {0}")]
    TooFewSegments(usize),
    #[error("operation requires a flat-torus chart")]
    TorusRequired,
    #[error("path serialization: {0}")]
    Serialization(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("operation supported only for the torus magnetic model")]
    TorusMagneticRequired,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CriticalError {
    #[error("operation requires a flat-torus chart (grid estimator is torus-only)")]
    TorusRequired,
    #[error("boundary submanifolds do not intersect; isolating threshold undefined")]
    EmptyIntersection,
    #[error("search interval [{lo}, {hi}] does not bracket the value: {detail}")]
    IntervalDoesNotBracket { lo: f64, hi: f64, detail: String },
    #[error("critical-value chain violated: {0}")]
    ChainViolation(String),
    #[error(transparent)]
    Path(#[from] PathError),
}
