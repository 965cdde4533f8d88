//! Numerical toolkit for Euler-Lagrange orbits between two submanifolds of a
//! 2-D surface under conormal boundary conditions, and for the critical
//! energy values that govern when such orbits exist.
//!
//! The crate is organized along the pipeline:
//!
//! - [`models`]: Tonelli Lagrangians on chart surfaces (flat torus,
//!   hyperbolic half plane, plane patches) with analytic derivatives.
//! - [`pathspace`]: discretized free-time paths, the action functional
//!   A_k and its exact discrete gradient, and component bookkeeping.
//! - [`flow`]: an independent Runge-Kutta oracle for the Euler-Lagrange
//!   flow, residual reports, and conserved-quantity certificates.
//! - [`solvers`]: action minimization (multistart conjugate descent) and
//!   an elastic-string mountain-pass search with a monotone energy scan.
//! - [`critical`]: estimators and certified brackets for the critical
//!   energy values, with a chain-of-inequalities audit.

pub mod critical;
pub mod error;
pub mod flow;
pub mod geom;
pub mod models;
pub mod pathspace;
pub mod solvers;

pub use error::{CriticalError, FlowError, ModelError, PathError};
pub use geom::{ChartKind, Rect, SymMat2, Vec2};
pub use models::{ModelFamily, PhiProfile, PsiProfile, SurfaceModel};
