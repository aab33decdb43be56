//! Shared numeric building blocks: polynomials, quadrature, normal law.

pub mod normal;
pub mod poly;
pub mod quad;
