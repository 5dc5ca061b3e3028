use std::collections::VecDeque;

use super::BaselineError;
use crate::hypergraph::{
    ConstraintSpec, HyperedgeId, PermissionSet, PolicyHypergraph, VertexId, VertexKind,
};
use crate::query::{AccessDecision, DecisionModel, EvaluationContext, PrivilegeQuery, QueryError};

#[derive(Debug, Clone)]
struct DagEdge {
    to: VertexId,
    constraints: Vec<ConstraintSpec>,
    account: Option<String>,
}

/// Binary association record `(ua, ra, pc, λ)` with the non-temporal
/// constraints of its source association.
#[derive(Debug, Clone)]
pub struct AssociationRecord {
    pub ua: VertexId,
    pub ra: VertexId,
    pub pc: VertexId,
    pub perms: PermissionSet,
    pub constraints: Vec<ConstraintSpec>,
    pub account: Option<String>,
    pub source: HyperedgeId,
}

/// Directed-acyclic NGAC graph. Time windows are not represented.
#[derive(Debug, Clone)]
pub struct NgacDag {
    kinds: Vec<VertexKind>,
    up: Vec<Vec<DagEdge>>,
    associations: Vec<AssociationRecord>,
    edge_count: usize,
}

fn strip_time(cs: &[ConstraintSpec]) -> Vec<ConstraintSpec> {
    cs.iter().filter(|c| !c.is_time_window()).cloned().collect()
}

pub fn build_dag(policy: &PolicyHypergraph) -> Result<NgacDag, BaselineError> {
    let n = policy.vertex_count();
    let kinds: Vec<VertexKind> = policy.vertices().iter().map(|v| v.kind).collect();
    let mut up: Vec<Vec<DagEdge>> = vec![Vec::new(); n];
    let mut indegree = vec![0usize; n];
    let mut edge_count = 0;
    let mut associations = Vec::new();
    for e in policy.edges().filter(|e| e.active) {
        let constraints = strip_time(&e.constraints);
        let account = policy.shared_account(e).map(str::to_string);
        if e.is_assignment() {
            up[e.from().index()].push(DagEdge { to: e.to(), constraints, account });
            indegree[e.to().index()] += 1;
            edge_count += 1;
            continue;
        }
        let pc = e
            .members
            .iter()
            .copied()
            .find(|m| kinds[m.index()] == VertexKind::PolicyClass)
            .expect("association has a policy class");
        for &s in e.members.iter().filter(|m| kinds[m.index()].is_subject()) {
            for &b in e.members.iter().filter(|m| kinds[m.index()].is_object()) {
                associations.push(AssociationRecord {
                    ua: s,
                    ra: b,
                    pc,
                    perms: e.permissions,
                    constraints: constraints.clone(),
                    account: account.clone(),
                    source: e.id,
                });
            }
        }
    }

    // Kahn's algorithm over the assignment digraph.
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut remaining = indegree.clone();
    let mut visited = 0;
    while let Some(v) = queue.pop_front() {
        visited += 1;
        for d in &up[v] {
            let t = d.to.index();
            remaining[t] -= 1;
            if remaining[t] == 0 {
                queue.push_back(t);
            }
        }
    }
    if visited < n {
        let cyclic = (0..n)
            .filter(|&v| remaining[v] > 0)
            .map(|v| VertexId(v as u32))
            .collect();
        return Err(BaselineError::CycleDetected(cyclic));
    }
    edge_count += associations.len();
    Ok(NgacDag { kinds, up, associations, edge_count })
}

impl NgacDag {
    pub fn associations(&self) -> &[AssociationRecord] {
        &self.associations
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    fn closure(&self, start: VertexId, ctx: &EvaluationContext, ops: &mut u64) -> Vec<VertexId> {
        let mut seen = vec![start];
        let mut i = 0;
        while i < seen.len() {
            let v = seen[i];
            i += 1;
            *ops += 1;
            for d in &self.up[v.index()] {
                if !seen.contains(&d.to) && holds(ctx, &d.constraints, d.account.as_deref()) {
                    seen.push(d.to);
                }
            }
        }
        seen.sort();
        seen
    }
}

fn holds(ctx: &EvaluationContext, cs: &[ConstraintSpec], account: Option<&str>) -> bool {
    cs.iter().all(|c| ctx.satisfies(c, account))
}

/// Computes both up-closures, then scans every association record.
pub fn dag_check(d: &NgacDag, q: &PrivilegeQuery) -> Result<AccessDecision, QueryError> {
    if d.kinds.get(q.user.index()) != Some(&VertexKind::User) {
        return Err(QueryError::UnknownVertex(q.user));
    }
    if d.kinds.get(q.resource.index()) != Some(&VertexKind::Resource) {
        return Err(QueryError::UnknownVertex(q.resource));
    }
    let mut ops = 0u64;
    let subjects = d.closure(q.user, &q.ctx, &mut ops);
    let objects = d.closure(q.resource, &q.ctx, &mut ops);
    let mut allowed = false;
    for a in &d.associations {
        ops += 1;
        if a.perms.contains(q.op)
            && subjects.binary_search(&a.ua).is_ok()
            && objects.binary_search(&a.ra).is_ok()
            && holds(&q.ctx, &a.constraints, a.account.as_deref())
        {
            allowed = true;
        }
    }
    Ok(AccessDecision { allowed, witness: None, traversal_ops: ops })
}

impl DecisionModel for NgacDag {
    fn name(&self) -> &'static str {
        "dag"
    }

    fn check(&self, q: &PrivilegeQuery) -> Result<AccessDecision, QueryError> {
        dag_check(self, q)
    }

    fn graph_size(&self) -> usize {
        self.edge_count
    }
}
