use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use super::EvaluationContext;
use crate::hypergraph::{HyperedgeId, Permission, PolicyHypergraph, VertexId, VertexKind};

pub const DEFAULT_MAX_DEPTH: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("no vertex named {0:?}")]
    UnknownName(String),
    #[error("{vertex} is a {actual}, expected a {expected}")]
    WrongKind {
        vertex: VertexId,
        expected: VertexKind,
        actual: VertexKind,
    },
    #[error("unknown permission {0:?}")]
    UnknownPermission(String),
    #[error("max_depth must be at least 1")]
    InvalidDepth,
    #[error("sensitive tag must be key=value with both parts non-empty")]
    InvalidTag,
    #[error("ground truth does not match policy: {0}")]
    GroundTruthMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivilegeQuery {
    pub user: VertexId,
    pub op: Permission,
    pub resource: VertexId,
    pub ctx: EvaluationContext,
}

impl PrivilegeQuery {
    pub fn new(user: VertexId, op: Permission, resource: VertexId, ctx: EvaluationContext) -> Self {
        PrivilegeQuery { user, op, resource, ctx }
    }

    /// Resolves user, permission and resource names against `policy`.
    pub fn by_name(
        policy: &PolicyHypergraph,
        user: &str,
        op: &str,
        resource: &str,
        ctx: EvaluationContext,
    ) -> Result<Self, QueryError> {
        let u = policy
            .lookup(VertexKind::User, user)
            .ok_or_else(|| QueryError::UnknownName(user.to_string()))?;
        let r = policy
            .lookup(VertexKind::Resource, resource)
            .ok_or_else(|| QueryError::UnknownName(resource.to_string()))?;
        let p = policy
            .universe()
            .lookup(op)
            .ok_or_else(|| QueryError::UnknownPermission(op.to_string()))?;
        Ok(PrivilegeQuery::new(u, p, r, ctx))
    }

    /// Checks vertex kinds and the permission index against `policy`.
    pub fn check_against(&self, policy: &PolicyHypergraph) -> Result<(), QueryError> {
        expect_kind(policy, self.user, VertexKind::User)?;
        expect_kind(policy, self.resource, VertexKind::Resource)?;
        if self.op.0 as usize >= policy.universe().len() {
            return Err(QueryError::UnknownPermission(format!("#{}", self.op.0)));
        }
        Ok(())
    }
}

pub(crate) fn expect_kind(
    policy: &PolicyHypergraph,
    v: VertexId,
    kind: VertexKind,
) -> Result<(), QueryError> {
    let actual = policy.kind(v).ok_or(QueryError::UnknownVertex(v))?;
    if actual != kind {
        return Err(QueryError::WrongKind { vertex: v, expected: kind, actual });
    }
    Ok(())
}

/// Alternating sequence `v0, e1, v1, ..., ek, vk`, stored as two parallel lists.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct AccessPath {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<HyperedgeId>,
}

impl AccessPath {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Ordering used for witnesses: length, then edge ids, then vertex ids.
    pub fn rank_key(&self) -> (usize, &[HyperedgeId], &[VertexId]) {
        (self.edges.len(), &self.edges, &self.vertices)
    }

    pub fn render(&self, policy: &PolicyHypergraph) -> String {
        let mut s = String::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if i > 0 {
                let _ = write!(s, " -{}-> ", self.edges[i - 1]);
            }
            s.push_str(policy.name(*v));
        }
        s
    }

    pub fn user_attributes(&self, policy: &PolicyHypergraph) -> Vec<VertexId> {
        self.vertices
            .iter()
            .copied()
            .filter(|v| policy.kind(*v) == Some(VertexKind::UserAttribute))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessDecision {
    pub allowed: bool,
    /// Present for hypergraph decisions that allow. Baselines do not build witnesses.
    pub witness: Option<AccessPath>,
    pub traversal_ops: u64,
}

impl AccessDecision {
    pub fn deny(traversal_ops: u64) -> Self {
        AccessDecision { allowed: false, witness: None, traversal_ops }
    }
}

/// Result of `find_access_paths`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSet {
    pub paths: Vec<AccessPath>,
    pub truncated: bool,
}

/// Common query contract for the hypergraph engine and the baselines.
pub trait DecisionModel: Sync {
    fn name(&self) -> &'static str;
    fn check(&self, q: &PrivilegeQuery) -> Result<AccessDecision, QueryError>;
    /// Edge or hyperedge count of the model's representation.
    fn graph_size(&self) -> usize;
}
