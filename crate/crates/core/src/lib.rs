//! Potential theory of discrete Schrödinger operators on Gromov hyperbolic
//! graphs: Green functions and resolvents, reduits, Martin kernels, boundary
//! Harnack checks and quasi-hyperbolic unfoldings of planar domains.

// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod builders;
pub mod cli;
pub mod config;
pub mod error;
pub mod hyperbolic;
pub mod linalg;
pub mod metric_graph;
pub mod pipeline;
pub mod potential;
pub mod schrodinger;
pub mod stats;
pub mod unfold;
pub mod verify;

pub use error::{Error, Result};
pub use metric_graph::{Edge, GeometryConstants, MetricGraph};
pub use schrodinger::{Domain, SchrodingerOperator};
