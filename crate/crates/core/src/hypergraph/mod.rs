//! Labeled policy hypergraph: vertices, assignment and association hyperedges,
//! and a per-vertex incidence index.

mod document;
mod permissions;
mod policy;
mod types;
mod validate;

pub use document::{HyperedgeDoc, PolicyDocument, VertexDoc};
pub use permissions::{
    Permission, PermissionSet, PermissionUniverse, DEFAULT_PERMISSIONS, MAX_PERMISSIONS,
};
pub use policy::{Incidence, PolicyError, PolicyHypergraph};
pub use types::{
    legal_assignment, ConstraintSpec, EdgeKind, Hyperedge, HyperedgeId, Tags, Vertex, VertexId,
    VertexKind,
};
pub use validate::Violation;

/// Builds a tag map from `(key, value)` pairs.
pub fn tags<const N: usize>(pairs: [(&str, &str); N]) -> Tags {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}
