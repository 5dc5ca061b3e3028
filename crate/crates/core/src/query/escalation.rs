use std::collections::{BTreeMap, HashMap};

use super::engine::{usable, Reach};
use super::{AccessPath, EvaluationContext, QueryError};
use crate::hypergraph::{HyperedgeId, PermissionSet, PolicyHypergraph, VertexId, VertexKind};

/// `key=value` selector for sensitive resources.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagFilter {
    pub key: String,
    pub value: String,
}

impl TagFilter {
    pub fn new(key: impl Into<String>, value: impl Into<String>) -> Result<Self, QueryError> {
        let (key, value) = (key.into(), value.into());
        if key.is_empty() || value.is_empty() {
            return Err(QueryError::InvalidTag);
        }
        Ok(TagFilter { key, value })
    }

    pub fn parse(s: &str) -> Result<Self, QueryError> {
        let (k, v) = s.split_once('=').ok_or(QueryError::InvalidTag)?;
        Self::new(k.trim(), v.trim())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EscalationFinding {
    pub user: VertexId,
    pub target: VertexId,
    pub path: AccessPath,
    /// User attributes on the path, in path order.
    pub chained_attributes: Vec<VertexId>,
    /// Permissions on the target that only chaining paths provide.
    pub permissions: PermissionSet,
    pub flags: Vec<String>,
    pub remediation: String,
}

type Route = (Vec<VertexId>, Vec<HyperedgeId>);

fn better(a: &Route, b: &Route) -> bool {
    (a.1.len(), &a.1, &a.0) < (b.1.len(), &b.1, &b.0)
}

/// Finds users who reach a sensitive resource with permissions that their
/// direct attributes alone do not give them.
///
/// A chaining path crosses at least one attribute-to-attribute assignment, so
/// it visits two or more user attributes. One finding is emitted per
/// `(user, target)` pair, carrying the shortest chaining path that grants one
/// of the escalated permissions.
pub fn detect_escalations(
    policy: &PolicyHypergraph,
    sensitive: &TagFilter,
    ctx: &EvaluationContext,
    max_depth: usize,
) -> Vec<EscalationFinding> {
    if max_depth < 3 {
        return Vec::new();
    }
    let targets: Vec<VertexId> = policy
        .vertices_of_kind(VertexKind::Resource)
        .filter(|v| v.has_tag(&sensitive.key, &sensitive.value))
        .map(|v| v.id)
        .collect();
    if targets.is_empty() {
        return Vec::new();
    }
    let limit = (max_depth - 1) as u32;
    let mut ops = 0;
    let reaches: Vec<Reach> = targets
        .iter()
        .map(|&t| Reach::object(policy, t, ctx, limit, &mut ops))
        .collect();
    // Object-side vertex -> (target index, node index) for every closure it appears in.
    let mut hits: HashMap<VertexId, Vec<(usize, u32)>> = HashMap::new();
    for (ti, r) in reaches.iter().enumerate() {
        for (j, n) in r.nodes.iter().enumerate() {
            hits.entry(n.vertex).or_default().push((ti, j as u32));
        }
    }
    let obj_depth = |ti: usize, j: u32| reaches[ti].nodes[j as usize].depth as usize;

    let mut findings = Vec::new();
    for user in policy.vertices_of_kind(VertexKind::User) {
        let u = user.id;
        let direct: Vec<(HyperedgeId, VertexId)> = policy
            .incidence(u)
            .outgoing
            .iter()
            .filter_map(|&e| usable(policy, ctx, e).map(|x| (e, x.to())))
            .collect();
        if direct.is_empty() {
            continue;
        }

        let mut direct_ops: BTreeMap<usize, PermissionSet> = BTreeMap::new();
        let starts = std::iter::once((u, 0usize)).chain(direct.iter().map(|&(_, a)| (a, 1)));
        for (s, d) in starts {
            for &eid in &policy.incidence(s).associations {
                let Some(e) = usable(policy, ctx, eid) else { continue };
                for b in &e.members {
                    for &(ti, j) in hits.get(b).into_iter().flatten() {
                        if d + 1 + obj_depth(ti, j) <= max_depth {
                            *direct_ops.entry(ti).or_default() =
                                direct_ops.get(&ti).copied().unwrap_or_default() | e.permissions;
                        }
                    }
                }
            }
        }

        // Best chaining route to each attribute reachable through at least one
        // attribute-to-attribute hop.
        let mut chained: BTreeMap<VertexId, Route> = BTreeMap::new();
        for &(e1, a1) in &direct {
            let sub = Reach::subject(policy, a1, ctx, limit - 1, &mut ops);
            for (i, n) in sub.nodes.iter().enumerate() {
                if n.depth == 0 {
                    continue;
                }
                let (mut vs, mut es) = sub.path_to(i as u32);
                vs.insert(0, u);
                es.insert(0, e1);
                let route = (vs, es);
                match chained.get(&n.vertex) {
                    Some(cur) if !better(&route, cur) => {}
                    _ => {
                        chained.insert(n.vertex, route);
                    }
                }
            }
        }
        if chained.is_empty() {
            continue;
        }

        let mut chained_ops: BTreeMap<usize, PermissionSet> = BTreeMap::new();
        let mut candidates: BTreeMap<usize, Vec<(PermissionSet, AccessPath)>> = BTreeMap::new();
        for (ak, (vs, es)) in &chained {
            for &eid in &policy.incidence(*ak).associations {
                let Some(e) = usable(policy, ctx, eid) else { continue };
                for b in &e.members {
                    for &(ti, j) in hits.get(b).into_iter().flatten() {
                        if es.len() + 1 + obj_depth(ti, j) > max_depth {
                            continue;
                        }
                        *chained_ops.entry(ti).or_default() =
                            chained_ops.get(&ti).copied().unwrap_or_default() | e.permissions;
                        let (ov, oe) = reaches[ti].path_from(j);
                        let mut vertices = vs.clone();
                        vertices.extend(ov);
                        let mut edges = es.clone();
                        edges.push(eid);
                        edges.extend(oe);
                        candidates
                            .entry(ti)
                            .or_default()
                            .push((e.permissions, AccessPath { vertices, edges }));
                    }
                }
            }
        }

        let mut user_findings = Vec::new();
        for (ti, ops_via_chain) in chained_ops {
            let esc = ops_via_chain - direct_ops.get(&ti).copied().unwrap_or_default();
            if esc.is_empty() {
                continue;
            }
            let path = candidates[&ti]
                .iter()
                .filter(|(p, _)| p.intersects(esc))
                .map(|(_, path)| path)
                .min_by(|a, b| a.rank_key().cmp(&b.rank_key()))
                .expect("escalated permission has a witness")
                .clone();
            let chained_attributes = path.user_attributes(policy);
            let flags = flags_for(policy, esc);
            let remediation = remediation_for(policy, &path);
            user_findings.push(EscalationFinding {
                user: u,
                target: targets[ti],
                path,
                chained_attributes,
                permissions: esc,
                flags,
                remediation,
            });
        }
        user_findings.sort_by(|a, b| a.path.rank_key().cmp(&b.path.rank_key()));
        findings.extend(user_findings);
    }
    findings
}

fn flags_for(policy: &PolicyHypergraph, esc: PermissionSet) -> Vec<String> {
    let uni = policy.universe();
    let has = |n: &str| uni.lookup(n).is_some_and(|p| esc.contains(p));
    let mut flags = Vec::new();
    if has("PassRole") && has("RunInstances") {
        flags.push("pass_role_run_instances".to_string());
    }
    if has("Write") || has("Delete") {
        flags.push("write_access".to_string());
    }
    flags
}

fn remediation_for(policy: &PolicyHypergraph, path: &AccessPath) -> String {
    // The first attribute-to-attribute hop is the link that enables the chain.
    for (k, eid) in path.edges.iter().enumerate() {
        let (a, b) = (path.vertices[k], path.vertices[k + 1]);
        if policy.kind(a) == Some(VertexKind::UserAttribute)
            && policy.kind(b) == Some(VertexKind::UserAttribute)
        {
            return format!(
                "remove assignment {} -> {} ({eid})",
                policy.name(a),
                policy.name(b)
            );
        }
    }
    String::new()
}
