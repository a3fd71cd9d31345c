//! Tensor-network geometry lab: random homogeneous MPS and MERA states, the
//! graphs they live on, and the geodesic and min-cut quantities that bound
//! their correlations and entanglement.

pub mod error;
pub mod holo;
pub mod linalg;
pub mod mera;
pub mod mps;
pub mod netgraph;
pub mod stats;
pub mod statevec;
pub mod tensor;

pub use error::{Error, Result};
pub use linalg::{Mat, C64};
pub use tensor::{contract, LocalOperator, Tensor};
