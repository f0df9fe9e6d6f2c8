//! Special functions and quadrature rules used by the analytic solvers.

pub mod quadrature;
pub mod special;

pub use quadrature::GaussLegendre;
