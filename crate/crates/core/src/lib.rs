//! Maximal flows of first passage percolation on boxes of `Z^d`: exact
//! lattice max-flow with cut certificates, pinned cut values `τ(S,k)`,
//! junctions of discrete streams, and Monte Carlo estimators of the flow
//! constant `ν` and the upper large-deviation rate function `ψ`.

pub mod capacity;
pub mod cuts;
pub mod error;
pub mod estimators;
pub mod flow;
pub mod junction;
pub mod lattice;
pub mod rational;
pub mod rng;
pub mod verify;

pub use capacity::{CapacityField, DistributionSpec, DEFAULT_RESOLUTION};
pub use error::{CapacityError, CutError, EstimateError, FlowError, JunctionError, LatticeError};
pub use flow::{max_flow, MaxFlowResult, Stream};
pub use lattice::{BoxGraph, BoxSpec, Edge, Point, RectSpec};
pub use rational::Exact;
