use rand::seq::SliceRandom;
use rand::Rng;

use super::truth::{add_grant, add_hierarchy, Provenance};
use super::{ChainDescriptor, ExcessDescriptor, GenError, GroundTruth};
use crate::hypergraph::{PermissionSet, PolicyHypergraph, VertexId, VertexKind};

fn first_policy_class(policy: &PolicyHypergraph) -> Result<VertexId, GenError> {
    policy
        .vertices_of_kind(VertexKind::PolicyClass)
        .map(|v| v.id)
        .next()
        .ok_or_else(|| GenError::InsufficientEntities("policy has no policy class".into()))
}

fn tier(policy: &PolicyHypergraph, v: VertexId) -> Option<&str> {
    policy.vertex(v).and_then(|x| x.tags.get("tier")).map(String::as_str)
}

/// Links `lower -> upper` so that `user`, a member of `lower`, reaches
/// `target` through `upper`. Adds a Read/Write grant for `upper` on the
/// target's resource type when `upper` has no usable grant there yet.
pub fn add_escalation_chain(
    policy: &mut PolicyHypergraph,
    gt: &mut GroundTruth,
    user: VertexId,
    lower: VertexId,
    upper: VertexId,
    target: VertexId,
) -> Result<ChainDescriptor, GenError> {
    let idx = gt.chains.len();
    let pc = first_policy_class(policy)?;
    let ra = *gt
        .types_of_resource(target)
        .first()
        .ok_or_else(|| GenError::InsufficientEntities("target has no resource type".into()))?;
    let association = if gt.role_permissions(upper, target, true).is_empty() {
        let rw = policy
            .universe()
            .set_of(["Read", "Write"])
            .map_err(|p| GenError::InsufficientEntities(format!("universe lacks {p}")))?;
        Some(add_grant(policy, gt, &[upper], &[ra], pc, rw, Vec::new(), Provenance::Chain(idx))?)
    } else {
        None
    };
    let assignment = add_hierarchy(policy, gt, lower, upper, Provenance::Chain(idx))?;
    let desc = ChainDescriptor {
        user,
        lower,
        upper,
        target,
        assignment,
        association,
        path: vec![user, lower, upper, ra, target],
    };
    gt.chains.push(desc.clone());
    Ok(desc)
}

/// Picks a production resource, a role that reaches it, and a user of another
/// role who does not, then chains the two roles.
///
/// When roles carry a `tier` tag the lower role is standard and the upper
/// privileged. The lower role never has juniors of its own.
pub fn inject_escalation_chain<R: Rng + ?Sized>(
    policy: &mut PolicyHypergraph,
    gt: &mut GroundTruth,
    rng: &mut R,
) -> Result<ChainDescriptor, GenError> {
    let roles = gt.roles().to_vec();
    if roles.len() < 2 {
        return Err(GenError::InsufficientEntities("need at least two roles".into()));
    }
    let mut targets: Vec<VertexId> = gt
        .resources()
        .iter()
        .copied()
        .filter(|r| policy.vertex(*r).is_some_and(|v| v.has_tag("env", "production")))
        .collect();
    if targets.is_empty() {
        return Err(GenError::InsufficientEntities("no production resource".into()));
    }
    let tiered = roles.iter().any(|r| tier(policy, *r).is_some());
    let upper_ok = |r: VertexId| !tiered || tier(policy, r) == Some("privileged");
    let lower_ok = |r: VertexId| (!tiered || tier(policy, r) == Some("standard")) && !gt.has_juniors(r);

    targets.shuffle(rng);
    for &t in &targets {
        let mut uppers: Vec<VertexId> = roles
            .iter()
            .copied()
            .filter(|&r| upper_ok(r) && !gt.role_permissions(r, t, true).is_empty())
            .collect();
        if uppers.is_empty() {
            uppers = roles.iter().copied().filter(|&r| upper_ok(r)).collect();
        }
        uppers.shuffle(rng);
        for &upper in &uppers {
            let above = gt.seniors_of(upper);
            let mut feasible: Vec<(VertexId, VertexId)> = Vec::new();
            for &u in gt.users() {
                let mut lowers: Vec<VertexId> = gt
                    .direct_roles(u)
                    .into_iter()
                    .filter(|&a| a != upper && lower_ok(a) && !above.contains(&a))
                    .filter(|&a| !gt.seniors_of(a).contains(&upper))
                    .collect();
                if lowers.is_empty() || !gt.actual_permissions(u, t).is_empty() {
                    continue;
                }
                lowers.sort();
                feasible.push((u, lowers[0]));
            }
            if feasible.is_empty() {
                continue;
            }
            let (u, lower) = feasible[rng.random_range(0..feasible.len())];
            return add_escalation_chain(policy, gt, u, lower, upper, t);
        }
    }
    Err(GenError::InsufficientEntities(
        "no user can be given an unintended path to a production resource".into(),
    ))
}

/// Grants `perms` to `role` on `resource_attr` as a labeled excess grant.
pub fn add_excess(
    policy: &mut PolicyHypergraph,
    gt: &mut GroundTruth,
    role: VertexId,
    resource_attr: VertexId,
    perms: PermissionSet,
) -> Result<ExcessDescriptor, GenError> {
    let idx = gt.excess.len();
    let pc = first_policy_class(policy)?;
    let association =
        add_grant(policy, gt, &[role], &[resource_attr], pc, perms, Vec::new(), Provenance::Excess(idx))?;
    let desc = ExcessDescriptor { role, resource_attr, permissions: perms, association };
    gt.excess.push(desc.clone());
    Ok(desc)
}

/// Gives one role Write (Delete if the universe lacks Write) on a
/// development resource type where none of its requirements include it.
pub fn inject_excess<R: Rng + ?Sized>(
    policy: &mut PolicyHypergraph,
    gt: &mut GroundTruth,
    rng: &mut R,
) -> Result<ExcessDescriptor, GenError> {
    let uni = policy.universe();
    let op = uni
        .lookup("Write")
        .or_else(|| uni.lookup("Delete"))
        .ok_or_else(|| GenError::InsufficientEntities("universe lacks Write and Delete".into()))?;
    let tiered = gt.roles().iter().any(|r| tier(policy, *r).is_some());
    let taken: Vec<VertexId> = gt.excess.iter().map(|x| x.role).collect();
    let mut roles: Vec<VertexId> = gt
        .roles()
        .iter()
        .copied()
        .filter(|&r| !taken.contains(&r) && !gt.has_juniors(r))
        .filter(|&r| !tiered || tier(policy, r) == Some("standard"))
        .collect();
    let mut types: Vec<VertexId> = gt
        .populated_types()
        .into_iter()
        .filter(|t| !policy.vertex(*t).is_some_and(|v| v.has_tag("env", "production")))
        .collect();
    if roles.is_empty() || types.is_empty() {
        return Err(GenError::InsufficientEntities("no role or type eligible for excess".into()));
    }
    roles.shuffle(rng);
    for role in roles {
        let required = gt.role_required_map(role);
        types.shuffle(rng);
        let fresh = types.iter().copied().find(|&t| {
            gt.resources_of_type(t)
                .iter()
                .all(|r| !required.get(r).is_some_and(|p| p.contains(op)))
        });
        if let Some(t) = fresh {
            return add_excess(policy, gt, role, t, PermissionSet::single(op));
        }
    }
    Err(GenError::InsufficientEntities("every role already holds the excess permission".into()))
}
