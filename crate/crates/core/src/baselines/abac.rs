use std::collections::HashMap;

use crate::hypergraph::{HyperedgeId, PermissionSet, PolicyHypergraph, VertexId, VertexKind};
use crate::query::{AccessDecision, DecisionModel, PrivilegeQuery, QueryError};

/// One `(tag, resource, permissions)` grant produced by flattening a rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrantEdge {
    pub tag: VertexId,
    pub resource: VertexId,
    pub perms: PermissionSet,
    pub source: HyperedgeId,
}

/// Flat attribute-tag graph. Users carry the transitive closure of their
/// attributes as tags; every association becomes one grant edge per
/// (subject tag, matched resource). Policy classes and constraints are dropped.
#[derive(Debug, Clone)]
pub struct AbacGraph {
    kinds: Vec<VertexKind>,
    user_tags: Vec<Vec<VertexId>>,
    grants: Vec<GrantEdge>,
    user_tag_edges: usize,
}

impl AbacGraph {
    /// Attribute tags of `user`, in id order.
    pub fn tags_of(&self, user: VertexId) -> &[VertexId] {
        self.user_tags.get(user.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn grants(&self) -> &[GrantEdge] {
        &self.grants
    }

    pub fn user_tag_edges(&self) -> usize {
        self.user_tag_edges
    }

    pub fn edge_count(&self) -> usize {
        self.user_tag_edges + self.grants.len()
    }
}

fn closure_up(policy: &PolicyHypergraph, start: VertexId) -> Vec<VertexId> {
    let mut seen = vec![start];
    let mut i = 0;
    while i < seen.len() {
        let v = seen[i];
        i += 1;
        for &eid in &policy.incidence(v).outgoing {
            let e = policy.edge(eid).expect("incidence lists live edges");
            if e.active && !seen.contains(&e.to()) {
                seen.push(e.to());
            }
        }
    }
    seen.remove(0);
    seen.sort();
    seen
}

fn resources_under(policy: &PolicyHypergraph, start: VertexId) -> Vec<VertexId> {
    let mut seen = vec![start];
    let mut i = 0;
    while i < seen.len() {
        let v = seen[i];
        i += 1;
        for &eid in &policy.incidence(v).incoming {
            let e = policy.edge(eid).expect("incidence lists live edges");
            if e.active && !seen.contains(&e.from()) {
                seen.push(e.from());
            }
        }
    }
    seen.retain(|v| policy.kind(*v) == Some(VertexKind::Resource));
    seen
}

pub fn build_abac(policy: &PolicyHypergraph) -> AbacGraph {
    let kinds: Vec<VertexKind> = policy.vertices().iter().map(|v| v.kind).collect();
    let mut user_tags = vec![Vec::new(); kinds.len()];
    let mut user_tag_edges = 0;
    for u in policy.vertices_of_kind(VertexKind::User) {
        let tags = closure_up(policy, u.id);
        user_tag_edges += tags.len();
        user_tags[u.id.index()] = tags;
    }
    let mut under: HashMap<VertexId, Vec<VertexId>> = HashMap::new();
    let mut grants = Vec::new();
    for e in policy.edges().filter(|e| e.active && e.is_association()) {
        let mut matched: Vec<VertexId> = Vec::new();
        for &b in &e.members {
            if !kinds[b.index()].is_object() {
                continue;
            }
            let rs = under.entry(b).or_insert_with(|| resources_under(policy, b));
            for r in rs.iter() {
                if !matched.contains(r) {
                    matched.push(*r);
                }
            }
        }
        matched.sort();
        for &s in &e.members {
            if !kinds[s.index()].is_subject() {
                continue;
            }
            for &r in &matched {
                grants.push(GrantEdge { tag: s, resource: r, perms: e.permissions, source: e.id });
            }
        }
    }
    AbacGraph { kinds, user_tags, grants, user_tag_edges }
}

/// Explores every (tag, grant) combination without early exit or indexing.
pub fn abac_check(g: &AbacGraph, q: &PrivilegeQuery) -> Result<AccessDecision, QueryError> {
    match g.kinds.get(q.user.index()) {
        Some(VertexKind::User) => {}
        Some(_) | None => return Err(QueryError::UnknownVertex(q.user)),
    }
    match g.kinds.get(q.resource.index()) {
        Some(VertexKind::Resource) => {}
        Some(_) | None => return Err(QueryError::UnknownVertex(q.resource)),
    }
    let mut ops = 0u64;
    let mut allowed = false;
    // The user itself acts as a tag for rules naming users directly.
    let tags = std::iter::once(q.user).chain(g.tags_of(q.user).iter().copied());
    for t in tags {
        ops += 1;
        for ge in &g.grants {
            ops += 1;
            allowed |= ge.tag == t && ge.resource == q.resource && ge.perms.contains(q.op);
        }
    }
    Ok(AccessDecision { allowed, witness: None, traversal_ops: ops })
}

impl DecisionModel for AbacGraph {
    fn name(&self) -> &'static str {
        "abac"
    }

    fn check(&self, q: &PrivilegeQuery) -> Result<AccessDecision, QueryError> {
        abac_check(self, q)
    }

    fn graph_size(&self) -> usize {
        self.edge_count()
    }
}
