//! Numerical models of collapsing hyperkahler 4-manifolds and gravitational
//! instanton ends: Gibbons-Hawking geometries, definite-triple deformations,
//! special Kahler singularity models, SL(2,Z) monodromy classification, and
//! the spectral Poisson solvers on flat cones and on the Calabi model space.

pub mod calabi;
pub mod chart;
pub mod cone;
pub mod curvature;
pub mod ends;
pub mod error;
pub mod field;
pub mod fieldio;
pub mod forms;
pub mod integrate;
pub mod linalg;
pub mod metric;
pub mod gauge;
pub mod gh;
pub mod monodromy;
pub mod operator;
pub mod quad;
pub mod special_kahler;
pub mod triple;

pub use chart::GridChart;
pub use error::{Error, Result};
pub use field::ScalarField;
pub use forms::FormField;
pub use metric::MetricField;
