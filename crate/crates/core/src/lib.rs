//! Curvature, σ_k-curvature and quotient Yamabe soliton toolkit for metrics
//! given in coordinates.
//!
//! The pipeline starts from a [`curvature::MetricChart`] whose components are
//! [`expr::Expr`] formulas. Components are expanded as truncated Taylor series
//! ([`taylor::TaylorScalar`]) so every derivative of curvature is exact up to
//! roundoff.

pub mod curvature;
pub mod expr;
pub mod flow;
pub mod hodge;
pub mod models;
pub mod sigma;
pub mod soliton;
pub mod taylor;
pub mod tensor;
