//! Numerical tensor calculus for warped-product and standard static
//! metrics.
//!
//! The crate builds pseudo-Riemannian metrics from a small expression DSL,
//! evaluates connections, curvature and first/second Lie derivatives of the
//! metric at sampled points, and compares intrinsic (coordinate) values
//! against closed-form expressions, reporting each comparison as a residual
//! check with an explicit tolerance and witness point.
//!
//! Module map:
//!
//! - [`expr`] — the scalar DSL: parsing, evaluation, second-order jets.
//! - [`geometry`] — pointwise machinery on a single chart: metric,
//!   Christoffel symbols, brackets, Lie derivatives, curvature.
//! - [`warped`] — warped-product construction and closed-form identities.
//! - [`killing`] — defect predicates and theorem-level scenario checks.
//! - [`spacetime`] — standard static spacetimes and their closed forms.
//! - [`scenario`] — the scenario file format, check runner and reports.
//! - [`catalog`] — bundled, named example scenarios.

pub mod catalog;
pub mod expr;
pub mod geometry;
pub mod killing;
pub mod scenario;
pub mod spacetime;
pub mod tensor;
pub mod warped;

pub use expr::{fd_oracle, Chart, Expr, ExprError, FdOrder, Jet2, Point};
pub use geometry::{GeomError, Manifold, VectorFieldSpec};
pub use killing::{CheckResult, CheckStatus, SampleSpec};
pub use tensor::{SymMat, Tensor3, Tensor4};
pub use warped::{FiberSign, Residual, SplitField, WarpedProduct};
