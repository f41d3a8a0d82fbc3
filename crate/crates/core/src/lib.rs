//! Learned problem reduction for weighted set cover.
//!
//! Instances are encoded as a tripartite graph with structural and spectral
//! node features, a GraphSAGE model scores every column, and a percentile
//! threshold picks a reduced sub-instance that an exact branch-and-bound
//! solver finishes off. The threshold is lowered until the objective target
//! is met.

// numeric kernels walk several parallel arrays by index
#![allow(clippy::needless_range_loop)]

pub mod graphrep;
pub mod instance;
pub mod neural;
pub mod pipeline;
pub mod solver;
