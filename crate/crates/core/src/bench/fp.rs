use super::BenchError;
use crate::gen::GroundTruth;
use crate::hypergraph::{PermissionSet, PolicyHypergraph, VertexKind};
use crate::query::{DecisionModel, EvaluationContext, PrivilegeQuery};

fn fp_over<'a>(
    model: &dyn DecisionModel,
    gt: &GroundTruth,
    queries: impl Iterator<Item = &'a PrivilegeQuery>,
) -> Result<f64, BenchError> {
    let (mut flagged, mut wrong) = (0u64, 0u64);
    for q in queries {
        if model.check(q)?.allowed {
            flagged += 1;
            if !gt.actual_permissions(q.user, q.resource).contains(q.op) {
                wrong += 1;
            }
        }
    }
    Ok(if flagged == 0 { 0.0 } else { wrong as f64 / flagged as f64 })
}

fn check_truth(policy: &PolicyHypergraph, gt: &GroundTruth, ctx: &EvaluationContext) -> Result<(), BenchError> {
    gt.check_policy(policy).map_err(BenchError::GroundTruthMismatch)?;
    if *ctx != gt.context {
        return Err(BenchError::GroundTruthMismatch(
            "evaluation context differs from the one the ground truth was labeled under".into(),
        ));
    }
    Ok(())
}

/// Share of granted accesses the model reports that the ground truth does not
/// hold under `ctx`. Probes every (user, resource) pair with every operation
/// that appears on some association; other operations are denied by all models.
pub fn measure_fp(
    model: &dyn DecisionModel,
    policy: &PolicyHypergraph,
    gt: &GroundTruth,
    ctx: &EvaluationContext,
) -> Result<f64, BenchError> {
    check_truth(policy, gt, ctx)?;
    let ops = policy
        .edges()
        .filter(|e| e.is_association())
        .fold(PermissionSet::empty(), |acc, e| acc | e.permissions);
    let users: Vec<_> = policy.vertices_of_kind(VertexKind::User).map(|v| v.id).collect();
    let resources: Vec<_> = policy.vertices_of_kind(VertexKind::Resource).map(|v| v.id).collect();
    let mut queries = Vec::with_capacity(users.len() * resources.len() * ops.len());
    for &u in &users {
        for &r in &resources {
            for op in ops.iter() {
                queries.push(PrivilegeQuery::new(u, op, r, ctx.clone()));
            }
        }
    }
    fp_over(model, gt, queries.iter())
}

/// Same ratio restricted to a workload.
pub fn measure_fp_on(
    model: &dyn DecisionModel,
    policy: &PolicyHypergraph,
    gt: &GroundTruth,
    workload: &[PrivilegeQuery],
) -> Result<f64, BenchError> {
    gt.check_policy(policy).map_err(BenchError::GroundTruthMismatch)?;
    if let Some(q) = workload.iter().find(|q| q.ctx != gt.context) {
        check_truth(policy, gt, &q.ctx)?;
    }
    fp_over(model, gt, workload.iter())
}

/// Fraction of allowed decisions the ground truth rejects, given decisions
/// already computed for `workload`.
pub fn fp_of_decisions(gt: &GroundTruth, workload: &[PrivilegeQuery], decisions: &[bool]) -> f64 {
    let mut flagged = 0u64;
    let mut wrong = 0u64;
    for (q, &allowed) in workload.iter().zip(decisions) {
        if allowed {
            flagged += 1;
            if !gt.actual_permissions(q.user, q.resource).contains(q.op) {
                wrong += 1;
            }
        }
    }
    if flagged == 0 {
        0.0
    } else {
        wrong as f64 / flagged as f64
    }
}
