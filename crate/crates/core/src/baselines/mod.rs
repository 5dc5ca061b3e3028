//! Baseline models sharing the hypergraph engine's query contract: a flat
//! attribute-tag graph and a binary-edge NGAC DAG.

mod abac;
mod dag;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

pub use abac::{abac_check, build_abac, AbacGraph, GrantEdge};
pub use dag::{build_dag, dag_check, AssociationRecord, NgacDag};

use crate::hypergraph::{PolicyHypergraph, VertexId};
use crate::query::{
    AccessDecision, DecisionModel, HyperModel, PrivilegeQuery, QueryError, DEFAULT_MAX_DEPTH,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BaselineError {
    #[error("assignment graph has a cycle through {} vertices", .0.len())]
    CycleDetected(Vec<VertexId>),
    #[error("workload is empty")]
    EmptyWorkload,
    #[error(transparent)]
    Query(#[from] QueryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Abac,
    Dag,
    Hyper,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Abac, ModelKind::Dag, ModelKind::Hyper];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Abac => "abac",
            ModelKind::Dag => "dag",
            ModelKind::Hyper => "hyper",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "abac" => Ok(ModelKind::Abac),
            "dag" | "ngac-dag" => Ok(ModelKind::Dag),
            "hyper" | "hypergraph" => Ok(ModelKind::Hyper),
            other => Err(format!("unknown model {other:?} (expected abac, dag or hyper)")),
        }
    }
}

/// A model ready to answer queries.
pub enum BuiltModel<'a> {
    Abac(AbacGraph),
    Dag(NgacDag),
    Hyper(HyperModel<'a>),
}

impl DecisionModel for BuiltModel<'_> {
    fn name(&self) -> &'static str {
        match self {
            BuiltModel::Abac(g) => g.name(),
            BuiltModel::Dag(d) => d.name(),
            BuiltModel::Hyper(h) => h.name(),
        }
    }

    fn check(&self, q: &PrivilegeQuery) -> Result<AccessDecision, QueryError> {
        match self {
            BuiltModel::Abac(g) => abac_check(g, q),
            BuiltModel::Dag(d) => dag_check(d, q),
            BuiltModel::Hyper(h) => h.check(q),
        }
    }

    fn graph_size(&self) -> usize {
        match self {
            BuiltModel::Abac(g) => g.graph_size(),
            BuiltModel::Dag(d) => d.graph_size(),
            BuiltModel::Hyper(h) => h.graph_size(),
        }
    }
}

pub fn build_model(kind: ModelKind, policy: &PolicyHypergraph) -> Result<BuiltModel<'_>, BaselineError> {
    Ok(match kind {
        ModelKind::Abac => BuiltModel::Abac(build_abac(policy)),
        ModelKind::Dag => BuiltModel::Dag(build_dag(policy)?),
        ModelKind::Hyper => BuiltModel::Hyper(HyperModel {
            policy,
            max_depth: DEFAULT_MAX_DEPTH,
        }),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionRun {
    pub decisions: Vec<bool>,
    pub total_traversal_ops: u64,
    pub wall_time: Duration,
}

/// Runs `workload` in order against an already built model.
pub fn run_workload(
    model: &dyn DecisionModel,
    workload: &[PrivilegeQuery],
) -> Result<DetectionRun, BaselineError> {
    if workload.is_empty() {
        return Err(BaselineError::EmptyWorkload);
    }
    let mut decisions = Vec::with_capacity(workload.len());
    let mut total = 0;
    let t0 = Instant::now();
    for q in workload {
        let d = model.check(q)?;
        total += d.traversal_ops;
        decisions.push(d.allowed);
    }
    let wall_time = t0.elapsed();
    Ok(DetectionRun { decisions, total_traversal_ops: total, wall_time })
}

/// Builds `kind` from `policy`, then runs the workload. Build time is not
/// part of `wall_time`.
pub fn detect_all(
    kind: ModelKind,
    policy: &PolicyHypergraph,
    workload: &[PrivilegeQuery],
) -> Result<DetectionRun, BaselineError> {
    if workload.is_empty() {
        return Err(BaselineError::EmptyWorkload);
    }
    let model = build_model(kind, policy)?;
    run_workload(&model, workload)
}

#[cfg(test)]
mod tests;
