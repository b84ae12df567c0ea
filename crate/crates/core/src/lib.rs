//! Exact enumeration and verification for hard-core and antiferromagnetic
//! Ising models on regular bipartite graphs.

pub mod audit;
pub mod closed_forms;
pub mod cluster;
pub mod error;
pub mod exact;
pub mod graph;
pub mod model;
pub mod polymer;
pub mod vertex_set;

pub use audit::{PropertyConstants, PsiFamily};
pub use closed_forms::{ExpansionEstimate, Family};
pub use cluster::{Cluster, KpOutcome, SmallGraph};
pub use error::{Error, Result};
pub use exact::{Rational, Real};
pub use graph::{BipartiteGraph, Budget, GraphFile, Side};
pub use model::{MeasureTable, ModelParams};
pub use polymer::{DecoratedPolymer, Polymer, PolymerSystem};
pub use vertex_set::VertexSet;
