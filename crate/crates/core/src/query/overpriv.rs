use std::collections::{BTreeMap, HashMap};

use super::engine::{usable, Reach};
use super::{EvaluationContext, QueryError};
use crate::hypergraph::{PermissionSet, PolicyHypergraph, VertexId, VertexKind};

pub type PermissionMap = BTreeMap<VertexId, PermissionSet>;

/// Required permissions per subject (user or user attribute) and resource.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RequiredPermissions {
    pub subjects: BTreeMap<VertexId, PermissionMap>,
}

impl RequiredPermissions {
    pub fn require(&mut self, subject: VertexId, resource: VertexId, perms: PermissionSet) {
        let m = self.subjects.entry(subject).or_default();
        let cur = m.get(&resource).copied().unwrap_or_default();
        if !(cur | perms).is_empty() {
            m.insert(resource, cur | perms);
        }
    }

    /// Declares a subject with no permissions required yet.
    pub fn declare(&mut self, subject: VertexId) {
        self.subjects.entry(subject).or_default();
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverPrivilegeFinding {
    pub subject: VertexId,
    pub granted: PermissionMap,
    pub required: PermissionMap,
    /// Non-empty granted-minus-required sets, per resource.
    pub excess: PermissionMap,
}

impl OverPrivilegeFinding {
    pub fn excess_union(&self) -> PermissionSet {
        self.excess.values().fold(PermissionSet::empty(), |a, b| a | *b)
    }
}

/// Effective permissions of `subject` on every resource it can reach.
pub fn permission_map(
    policy: &PolicyHypergraph,
    subject: VertexId,
    ctx: &EvaluationContext,
    max_depth: usize,
) -> PermissionMap {
    let mut out = PermissionMap::new();
    if max_depth == 0 {
        return out;
    }
    let limit = (max_depth - 1) as u32;
    let mut ops = 0;
    let subj = Reach::subject(policy, subject, ctx, limit, &mut ops);
    let mut down: HashMap<VertexId, Vec<(VertexId, u32)>> = HashMap::new();
    for node in &subj.nodes {
        for &eid in &policy.incidence(node.vertex).associations {
            let Some(e) = usable(policy, ctx, eid) else { continue };
            for &b in &e.members {
                let Some(kind) = policy.kind(b) else { continue };
                if !kind.is_object() {
                    continue;
                }
                let below = down
                    .entry(b)
                    .or_insert_with(|| resources_below(policy, b, ctx, limit));
                for &(r, d) in below.iter() {
                    if node.depth + 1 + d <= max_depth as u32 {
                        let cur = out.get(&r).copied().unwrap_or_default();
                        out.insert(r, cur | e.permissions);
                    }
                }
            }
        }
    }
    out
}

/// Resources under an object vertex, reached by following assignments in
/// reverse, with their distance.
fn resources_below(
    policy: &PolicyHypergraph,
    start: VertexId,
    ctx: &EvaluationContext,
    limit: u32,
) -> Vec<(VertexId, u32)> {
    let mut seen: HashMap<VertexId, u32> = HashMap::new();
    seen.insert(start, 0);
    let mut frontier = vec![start];
    let mut order = vec![(start, 0u32)];
    let mut depth = 0;
    while !frontier.is_empty() && depth < limit {
        depth += 1;
        let mut next = Vec::new();
        for v in frontier {
            for &eid in &policy.incidence(v).incoming {
                let Some(e) = usable(policy, ctx, eid) else { continue };
                let from = e.from();
                if let std::collections::hash_map::Entry::Vacant(slot) = seen.entry(from) {
                    slot.insert(depth);
                    order.push((from, depth));
                    next.push(from);
                }
            }
        }
        frontier = next;
    }
    order
        .into_iter()
        .filter(|(v, _)| policy.kind(*v) == Some(VertexKind::Resource))
        .collect()
}

/// Reports every subject whose effective permissions exceed what `required`
/// lists for it.
pub fn detect_over_privileged(
    policy: &PolicyHypergraph,
    required: &RequiredPermissions,
    ctx: &EvaluationContext,
    max_depth: usize,
) -> Result<Vec<OverPrivilegeFinding>, QueryError> {
    for (s, m) in &required.subjects {
        match policy.kind(*s) {
            Some(VertexKind::User | VertexKind::UserAttribute) => {}
            Some(k) => {
                return Err(QueryError::GroundTruthMismatch(format!("subject {s} is a {k}")))
            }
            None => return Err(QueryError::GroundTruthMismatch(format!("unknown subject {s}"))),
        }
        for r in m.keys() {
            if policy.kind(*r) != Some(VertexKind::Resource) {
                return Err(QueryError::GroundTruthMismatch(format!(
                    "{r} is not a resource of this policy"
                )));
            }
        }
    }
    let mut findings = Vec::new();
    for (&subject, req) in &required.subjects {
        let granted = permission_map(policy, subject, ctx, max_depth);
        let mut excess = PermissionMap::new();
        for (r, g) in &granted {
            let x = *g - req.get(r).copied().unwrap_or_default();
            if !x.is_empty() {
                excess.insert(*r, x);
            }
        }
        if !excess.is_empty() {
            findings.push(OverPrivilegeFinding {
                subject,
                granted,
                required: req.clone(),
                excess,
            });
        }
    }
    Ok(findings)
}
