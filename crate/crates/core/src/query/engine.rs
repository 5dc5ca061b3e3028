use std::collections::HashMap;

use super::types::expect_kind;
use super::{
    AccessDecision, AccessPath, DecisionModel, EvaluationContext, PathSet, PrivilegeQuery,
    QueryError, DEFAULT_MAX_DEPTH,
};
use crate::hypergraph::{
    Hyperedge, HyperedgeId, Permission, PermissionSet, PolicyHypergraph, VertexId, VertexKind,
};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Node {
    pub vertex: VertexId,
    pub depth: u32,
    /// Subject side: parent node and the edge used to reach this node.
    /// Object side: next node toward the resource and the edge leading there.
    pub link: Option<(u32, HyperedgeId)>,
}

/// Breadth-first closure over assignment edges, following `from -> to`.
#[derive(Debug, Clone)]
pub(crate) struct Reach {
    pub nodes: Vec<Node>,
    pub index: HashMap<VertexId, u32>,
}

pub(crate) fn usable<'a>(
    policy: &'a PolicyHypergraph,
    ctx: &EvaluationContext,
    id: HyperedgeId,
) -> Option<&'a Hyperedge> {
    let e = policy.edge(id)?;
    (e.active && ctx.admits(policy, e)).then_some(e)
}

impl Reach {
    /// Up-closure of a user or user attribute. Each node keeps the
    /// lexicographically smallest shortest path from the start.
    pub fn subject(
        policy: &PolicyHypergraph,
        start: VertexId,
        ctx: &EvaluationContext,
        limit: u32,
        ops: &mut u64,
    ) -> Reach {
        Self::build(policy, start, ctx, limit, ops, false)
    }

    /// Up-closure of a resource. Each node keeps the first hop of the
    /// lexicographically smallest shortest forward path back to the resource.
    pub fn object(
        policy: &PolicyHypergraph,
        start: VertexId,
        ctx: &EvaluationContext,
        limit: u32,
        ops: &mut u64,
    ) -> Reach {
        Self::build(policy, start, ctx, limit, ops, true)
    }

    fn build(
        policy: &PolicyHypergraph,
        start: VertexId,
        ctx: &EvaluationContext,
        limit: u32,
        ops: &mut u64,
        prefer_min_hop: bool,
    ) -> Reach {
        let mut nodes = vec![Node { vertex: start, depth: 0, link: None }];
        let mut index = HashMap::new();
        index.insert(start, 0u32);
        let mut layer_start = 0;
        while layer_start < nodes.len() {
            let layer_end = nodes.len();
            for i in layer_start..layer_end {
                let Node { vertex, depth, .. } = nodes[i];
                if depth >= limit {
                    continue;
                }
                *ops += 1;
                for &eid in &policy.incidence(vertex).outgoing {
                    *ops += 1;
                    let Some(e) = usable(policy, ctx, eid) else { continue };
                    let to = e.to();
                    match index.get(&to) {
                        None => {
                            index.insert(to, nodes.len() as u32);
                            nodes.push(Node {
                                vertex: to,
                                depth: depth + 1,
                                link: Some((i as u32, eid)),
                            });
                        }
                        Some(&j) if prefer_min_hop => {
                            let n = &mut nodes[j as usize];
                            if n.depth == depth + 1 && n.link.is_some_and(|(_, old)| eid < old) {
                                n.link = Some((i as u32, eid));
                            }
                        }
                        Some(_) => {}
                    }
                }
            }
            layer_start = layer_end;
        }
        Reach { nodes, index }
    }

    /// Path from the start to node `i` (subject closures).
    pub fn path_to(&self, i: u32) -> (Vec<VertexId>, Vec<HyperedgeId>) {
        let mut vs = Vec::new();
        let mut es = Vec::new();
        let mut cur = i;
        loop {
            let n = self.nodes[cur as usize];
            vs.push(n.vertex);
            match n.link {
                Some((p, e)) => {
                    es.push(e);
                    cur = p;
                }
                None => break,
            }
        }
        vs.reverse();
        es.reverse();
        (vs, es)
    }

    /// Forward path from node `i` back to the start (object closures).
    pub fn path_from(&self, i: u32) -> (Vec<VertexId>, Vec<HyperedgeId>) {
        let mut vs = Vec::new();
        let mut es = Vec::new();
        let mut cur = i;
        loop {
            let n = self.nodes[cur as usize];
            vs.push(n.vertex);
            match n.link {
                Some((next, e)) => {
                    es.push(e);
                    cur = next;
                }
                None => break,
            }
        }
        (vs, es)
    }

    pub fn depth_of(&self, v: VertexId) -> Option<u32> {
        self.index.get(&v).map(|&i| self.nodes[i as usize].depth)
    }
}

fn join_path(
    subj: &Reach,
    i: u32,
    edge: HyperedgeId,
    obj: &Reach,
    j: u32,
) -> AccessPath {
    let (mut vertices, mut edges) = subj.path_to(i);
    let (ov, oe) = obj.path_from(j);
    edges.push(edge);
    edges.extend(oe);
    vertices.extend(ov);
    AccessPath { vertices, edges }
}

/// Decides `q` and returns the shortest valid witness within `max_depth`
/// hyperedges, ties broken by edge-id sequence.
pub fn check_privilege(
    policy: &PolicyHypergraph,
    q: &PrivilegeQuery,
    max_depth: usize,
) -> Result<AccessDecision, QueryError> {
    if max_depth == 0 {
        return Err(QueryError::InvalidDepth);
    }
    q.check_against(policy)?;
    let mut ops = 0u64;
    let side_limit = (max_depth - 1) as u32;
    let subj = Reach::subject(policy, q.user, &q.ctx, side_limit, &mut ops);
    let obj = Reach::object(policy, q.resource, &q.ctx, side_limit, &mut ops);

    let mut best: Option<AccessPath> = None;
    for (i, node) in subj.nodes.iter().enumerate() {
        ops += 1;
        for &eid in &policy.incidence(node.vertex).associations {
            ops += 1;
            let Some(e) = policy.edge(eid) else { continue };
            if !e.active || !e.permissions.contains(q.op) || !q.ctx.admits(policy, e) {
                continue;
            }
            for &b in &e.members {
                let Some(&j) = obj.index.get(&b) else { continue };
                let total = node.depth as usize + 1 + obj.nodes[j as usize].depth as usize;
                if total > max_depth {
                    continue;
                }
                if let Some(cur) = &best {
                    if total > cur.len() {
                        continue;
                    }
                }
                let cand = join_path(&subj, i as u32, eid, &obj, j);
                if best.as_ref().is_none_or(|cur| cand.rank_key() < cur.rank_key()) {
                    best = Some(cand);
                }
            }
        }
    }
    Ok(AccessDecision {
        allowed: best.is_some(),
        witness: best,
        traversal_ops: ops,
    })
}

/// Union of permissions over every valid path within `max_depth`.
pub fn effective_permissions(
    policy: &PolicyHypergraph,
    user: VertexId,
    resource: VertexId,
    ctx: &EvaluationContext,
    max_depth: usize,
) -> Result<PermissionSet, QueryError> {
    if max_depth == 0 {
        return Err(QueryError::InvalidDepth);
    }
    policy.vertex(user).ok_or(QueryError::UnknownVertex(user))?;
    policy.vertex(resource).ok_or(QueryError::UnknownVertex(resource))?;
    let mut ops = 0;
    let limit = (max_depth - 1) as u32;
    let subj = Reach::subject(policy, user, ctx, limit, &mut ops);
    let obj = Reach::object(policy, resource, ctx, limit, &mut ops);
    let full = policy.universe().full();
    let mut acc = PermissionSet::empty();
    for node in &subj.nodes {
        for &eid in &policy.incidence(node.vertex).associations {
            let Some(e) = usable(policy, ctx, eid) else { continue };
            if e.permissions.is_subset(acc) {
                continue;
            }
            let reaches = e.members.iter().any(|b| {
                obj.depth_of(*b)
                    .is_some_and(|d| node.depth as usize + 1 + d as usize <= max_depth)
            });
            if reaches {
                acc = acc | e.permissions;
                if acc == full {
                    return Ok(acc);
                }
            }
        }
    }
    Ok(acc)
}

/// Intersection of labels over active hyperedges containing both vertices.
/// An empty family yields the full universe.
pub fn co_membership_permissions(
    policy: &PolicyHypergraph,
    user: VertexId,
    resource: VertexId,
) -> Result<PermissionSet, QueryError> {
    policy.vertex(user).ok_or(QueryError::UnknownVertex(user))?;
    policy.vertex(resource).ok_or(QueryError::UnknownVertex(resource))?;
    let a = policy.incidence(user).all();
    let b = policy.incidence(resource).all();
    let mut acc = policy.universe().full();
    for eid in a.intersection(&b) {
        if let Some(e) = policy.edge(*eid) {
            if e.active {
                acc = acc & e.permissions;
            }
        }
    }
    Ok(acc)
}

fn simple_paths_up(
    policy: &PolicyHypergraph,
    start: VertexId,
    ctx: &EvaluationContext,
    limit: usize,
) -> Vec<(Vec<VertexId>, Vec<HyperedgeId>)> {
    fn go(
        policy: &PolicyHypergraph,
        ctx: &EvaluationContext,
        limit: usize,
        vs: &mut Vec<VertexId>,
        es: &mut Vec<HyperedgeId>,
        out: &mut Vec<(Vec<VertexId>, Vec<HyperedgeId>)>,
    ) {
        out.push((vs.clone(), es.clone()));
        if es.len() >= limit {
            return;
        }
        let cur = *vs.last().expect("non-empty path");
        for &eid in &policy.incidence(cur).outgoing {
            let Some(e) = usable(policy, ctx, eid) else { continue };
            let to = e.to();
            if vs.contains(&to) {
                continue;
            }
            vs.push(to);
            es.push(eid);
            go(policy, ctx, limit, vs, es, out);
            vs.pop();
            es.pop();
        }
    }
    let mut out = Vec::new();
    go(policy, ctx, limit, &mut vec![start], &mut Vec::new(), &mut out);
    out
}

/// Every distinct valid simple path up to `max_depth`, shortest first.
pub fn find_access_paths(
    policy: &PolicyHypergraph,
    q: &PrivilegeQuery,
    max_depth: usize,
    max_paths: usize,
) -> Result<PathSet, QueryError> {
    if max_depth == 0 {
        return Err(QueryError::InvalidDepth);
    }
    q.check_against(policy)?;
    let limit = max_depth - 1;
    let subj = simple_paths_up(policy, q.user, &q.ctx, limit);
    let mut by_end: HashMap<VertexId, Vec<(Vec<VertexId>, Vec<HyperedgeId>)>> = HashMap::new();
    for (mut vs, mut es) in simple_paths_up(policy, q.resource, &q.ctx, limit) {
        vs.reverse();
        es.reverse();
        by_end.entry(vs[0]).or_default().push((vs, es));
    }
    let mut paths = Vec::new();
    for (svs, ses) in &subj {
        let a = *svs.last().expect("non-empty path");
        for &eid in &policy.incidence(a).associations {
            let Some(e) = usable(policy, &q.ctx, eid) else { continue };
            if !e.permissions.contains(q.op) {
                continue;
            }
            for b in &e.members {
                for (ovs, oes) in by_end.get(b).into_iter().flatten() {
                    if ses.len() + 1 + oes.len() > max_depth {
                        continue;
                    }
                    let mut vertices = svs.clone();
                    vertices.extend_from_slice(ovs);
                    let mut edges = ses.clone();
                    edges.push(eid);
                    edges.extend_from_slice(oes);
                    paths.push(AccessPath { vertices, edges });
                }
            }
        }
    }
    paths.sort_by(|x, y| x.rank_key().cmp(&y.rank_key()));
    paths.dedup();
    let truncated = paths.len() > max_paths;
    paths.truncate(max_paths);
    Ok(PathSet { paths, truncated })
}

/// Independent check that `path` satisfies every witness invariant for `q`.
pub fn validate_path(
    policy: &PolicyHypergraph,
    q: &PrivilegeQuery,
    path: &AccessPath,
    max_depth: usize,
) -> Result<(), String> {
    let vs = &path.vertices;
    let es = &path.edges;
    if vs.len() != es.len() + 1 || es.is_empty() {
        return Err("malformed alternation".into());
    }
    if es.len() > max_depth {
        return Err("path exceeds depth budget".into());
    }
    if vs[0] != q.user || *vs.last().unwrap() != q.resource {
        return Err("endpoints do not match query".into());
    }
    for (i, v) in vs.iter().enumerate() {
        if vs[..i].contains(v) {
            return Err(format!("vertex {v} repeats"));
        }
    }
    let mut associations = 0;
    for (k, eid) in es.iter().enumerate() {
        let e = policy.edge(*eid).ok_or(format!("{eid} missing"))?;
        if !e.active {
            return Err(format!("{eid} inactive"));
        }
        if !q.ctx.admits(policy, e) {
            return Err(format!("{eid} constraint fails"));
        }
        let (a, b) = (vs[k], vs[k + 1]);
        if !e.contains(a) || !e.contains(b) {
            return Err(format!("{eid} does not contain both {a} and {b}"));
        }
        let (ka, kb) = (policy.kind(a).unwrap(), policy.kind(b).unwrap());
        if e.is_association() {
            associations += 1;
            if !e.permissions.contains(q.op) {
                return Err(format!("{eid} lacks the operation"));
            }
            if !ka.is_subject() || !kb.is_object() {
                return Err(format!("{eid} crossed in the wrong direction"));
            }
        } else if ka.is_subject() {
            if e.from() != a || e.to() != b {
                return Err(format!("{eid} traversed against subject direction"));
            }
        } else if e.from() != b || e.to() != a {
            return Err(format!("{eid} traversed against object direction"));
        }
    }
    if associations != 1 {
        return Err("path must cross exactly one association".into());
    }
    Ok(())
}

/// The hypergraph engine behind the shared `DecisionModel` contract.
#[derive(Debug, Clone, Copy)]
pub struct HyperModel<'a> {
    pub policy: &'a PolicyHypergraph,
    pub max_depth: usize,
}

impl<'a> HyperModel<'a> {
    pub fn new(policy: &'a PolicyHypergraph) -> Self {
        HyperModel { policy, max_depth: DEFAULT_MAX_DEPTH }
    }
}

impl DecisionModel for HyperModel<'_> {
    fn name(&self) -> &'static str {
        "hyper"
    }

    fn check(&self, q: &PrivilegeQuery) -> Result<AccessDecision, QueryError> {
        check_privilege(self.policy, q, self.max_depth)
    }

    fn graph_size(&self) -> usize {
        self.policy.edge_count()
    }
}

/// Every permission for which `check_privilege` allows, computed one op at a time.
pub fn permissions_by_query(
    policy: &PolicyHypergraph,
    user: VertexId,
    resource: VertexId,
    ctx: &EvaluationContext,
    max_depth: usize,
) -> Result<PermissionSet, QueryError> {
    expect_kind(policy, user, VertexKind::User)?;
    let mut acc = PermissionSet::empty();
    for i in 0..policy.universe().len() {
        let q = PrivilegeQuery::new(user, Permission(i as u8), resource, ctx.clone());
        if check_privilege(policy, &q, max_depth)?.allowed {
            acc.insert(Permission(i as u8));
        }
    }
    Ok(acc)
}
