#![allow(dead_code)]

use std::collections::BTreeSet;

use chrono::{DateTime, Duration, TimeZone, Utc};
use hyperpam::hypergraph::{
    ConstraintSpec, Hyperedge, Permission, PermissionSet, PolicyHypergraph, VertexId, VertexKind,
};
use hyperpam::query::{AccessPath, EvaluationContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2025, 3, 1, 9, 0, 0).unwrap()
}

/// Constraint truth, written out again rather than borrowed from the engine.
fn holds(policy: &PolicyHypergraph, e: &Hyperedge, ctx: &EvaluationContext) -> bool {
    e.active
        && e.constraints.iter().all(|c| match c {
            ConstraintSpec::TimeWindow { start, end } => *start <= ctx.timestamp && ctx.timestamp <= *end,
            ConstraintSpec::ApprovalRequired { tag } => ctx.approvals.contains(tag),
            ConstraintSpec::SameAccount => {
                let accts: BTreeSet<&str> = e
                    .members
                    .iter()
                    .filter(|m| policy.kind(**m) != Some(VertexKind::PolicyClass))
                    .map(|m| policy.vertex(*m).unwrap().account.as_str())
                    .collect();
                accts.len() == 1 && accts.contains(ctx.acting_account.as_str())
            }
        })
}

fn is_subject(k: VertexKind) -> bool {
    matches!(k, VertexKind::User | VertexKind::UserAttribute)
}

fn is_object(k: VertexKind) -> bool {
    matches!(k, VertexKind::Resource | VertexKind::ResourceAttribute)
}

struct Search<'a> {
    policy: &'a PolicyHypergraph,
    ctx: &'a EvaluationContext,
    op: Permission,
    target: VertexId,
    max_depth: usize,
    edges: Vec<&'a Hyperedge>,
    out: Vec<AccessPath>,
}

impl Search<'_> {
    fn subject(&mut self, vs: &mut Vec<VertexId>, es: &mut Vec<hyperpam::hypergraph::HyperedgeId>) {
        if es.len() >= self.max_depth {
            return;
        }
        let v = *vs.last().unwrap();
        for i in 0..self.edges.len() {
            let e = self.edges[i];
            if !e.members.contains(&v) {
                continue;
            }
            if e.is_assignment() {
                let to = e.members[1];
                if e.members[0] == v && !vs.contains(&to) && is_subject(self.policy.kind(to).unwrap()) {
                    vs.push(to);
                    es.push(e.id);
                    self.subject(vs, es);
                    vs.pop();
                    es.pop();
                }
            } else if e.permissions.contains(self.op) {
                for &b in &e.members {
                    if is_object(self.policy.kind(b).unwrap()) && !vs.contains(&b) {
                        vs.push(b);
                        es.push(e.id);
                        self.object(vs, es);
                        vs.pop();
                        es.pop();
                    }
                }
            }
        }
    }

    fn object(&mut self, vs: &mut Vec<VertexId>, es: &mut Vec<hyperpam::hypergraph::HyperedgeId>) {
        let v = *vs.last().unwrap();
        if v == self.target {
            self.out.push(AccessPath { vertices: vs.clone(), edges: es.clone() });
            return;
        }
        if es.len() >= self.max_depth {
            return;
        }
        for i in 0..self.edges.len() {
            let e = self.edges[i];
            if e.is_assignment() && e.members[1] == v {
                let from = e.members[0];
                if !vs.contains(&from) && is_object(self.policy.kind(from).unwrap()) {
                    vs.push(from);
                    es.push(e.id);
                    self.object(vs, es);
                    vs.pop();
                    es.pop();
                }
            }
        }
    }
}

/// Every simple alternating path from `user` to `resource` with at most
/// `max_depth` hyperedges: assignments upward, one association carrying `op`,
/// assignments downward. Scans the edge list directly, no incidence index.
pub fn oracle_paths(
    policy: &PolicyHypergraph,
    user: VertexId,
    op: Permission,
    resource: VertexId,
    ctx: &EvaluationContext,
    max_depth: usize,
) -> Vec<AccessPath> {
    let edges: Vec<&Hyperedge> = policy.edges().filter(|e| holds(policy, e, ctx)).collect();
    let mut s = Search { policy, ctx, op, target: resource, max_depth, edges, out: Vec::new() };
    let mut vs = vec![user];
    let mut es = Vec::new();
    s.subject(&mut vs, &mut es);
    let mut out = s.out;
    out.sort_by(|a, b| a.rank_key().cmp(&b.rank_key()));
    out.dedup();
    out
}

/// Shortest path, ties broken by edge sequence then vertex sequence.
pub fn oracle_witness(paths: &[AccessPath]) -> Option<&AccessPath> {
    paths.iter().min_by(|a, b| a.rank_key().cmp(&b.rank_key()))
}

pub fn oracle_permissions(
    policy: &PolicyHypergraph,
    user: VertexId,
    resource: VertexId,
    ctx: &EvaluationContext,
    max_depth: usize,
) -> PermissionSet {
    let mut acc = PermissionSet::empty();
    for i in 0..policy.universe().len() {
        let op = Permission(i as u8);
        if !oracle_paths(policy, user, op, resource, ctx, max_depth).is_empty() {
            acc.insert(op);
        }
    }
    acc
}

pub struct RandomPolicy {
    pub policy: PolicyHypergraph,
    pub contexts: Vec<EvaluationContext>,
    pub users: Vec<VertexId>,
    pub resources: Vec<VertexId>,
    pub max_depth: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub acyclic: bool,
    pub constraints: bool,
    /// Allow users and resources as direct association members.
    pub direct_members: bool,
    /// Deactivate or delete a few edges.
    pub churn: bool,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { acyclic: false, constraints: true, direct_members: true, churn: true }
    }
}

fn pick<R: Rng>(rng: &mut R, v: &[VertexId]) -> VertexId {
    v[rng.random_range(0..v.len())]
}

fn window<R: Rng>(rng: &mut R) -> ConstraintSpec {
    let t = t0();
    let (start, end) = match rng.random_range(0..3) {
        0 => (t - Duration::hours(1), t + Duration::hours(1)),
        1 => (t - Duration::hours(3), t - Duration::hours(2)),
        _ => (t + Duration::hours(1), t + Duration::hours(2)),
    };
    ConstraintSpec::TimeWindow { start, end }
}

fn constraints<R: Rng>(rng: &mut R, on: bool) -> Vec<ConstraintSpec> {
    let mut cs = Vec::new();
    if !on {
        return cs;
    }
    if rng.random_bool(0.25) {
        cs.push(window(rng));
    }
    if rng.random_bool(0.15) {
        cs.push(ConstraintSpec::SameAccount);
    }
    if rng.random_bool(0.1) {
        cs.push(ConstraintSpec::ApprovalRequired { tag: "ok".into() });
    }
    cs
}

/// Seeded policy with at most 50 vertices over the first four permissions.
pub fn random_policy(seed: u64, shape: Shape) -> RandomPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = PolicyHypergraph::default();
    let accts = ["a0", "a1"];
    let add = |p: &mut PolicyHypergraph, rng: &mut ChaCha8Rng, kind, prefix: &str, k: usize| -> Vec<VertexId> {
        (0..k)
            .map(|i| {
                let a = accts[rng.random_range(0..2)];
                p.add_vertex(kind, format!("{prefix}{i}"), a, Default::default()).unwrap()
            })
            .collect()
    };
    let counts = [
        rng.random_range(1..=8),
        rng.random_range(1..=12),
        rng.random_range(1..=8),
        rng.random_range(1..=12),
        rng.random_range(1..=2),
    ];
    let users = add(&mut p, &mut rng, VertexKind::User, "u", counts[0]);
    let uas = add(&mut p, &mut rng, VertexKind::UserAttribute, "ua", counts[1]);
    let resources = add(&mut p, &mut rng, VertexKind::Resource, "r", counts[2]);
    let ras = add(&mut p, &mut rng, VertexKind::ResourceAttribute, "ra", counts[3]);
    let pcs = add(&mut p, &mut rng, VertexKind::PolicyClass, "pc", counts[4]);
    assert!(p.vertex_count() <= 50);

    let mut pairs = BTreeSet::new();
    let mut link = |p: &mut PolicyHypergraph, rng: &mut ChaCha8Rng, from: VertexId, to: VertexId| {
        if from == to || !pairs.insert((from, to)) {
            return;
        }
        let cs = if shape.constraints && rng.random_bool(0.1) { vec![window(rng)] } else { vec![] };
        p.add_assignment_with(from, to, cs).unwrap();
    };
    for &u in &users {
        for _ in 0..rng.random_range(0..=3) {
            let a = pick(&mut rng, &uas);
            link(&mut p, &mut rng, u, a);
        }
    }
    for (i, &a) in uas.iter().enumerate() {
        for _ in 0..rng.random_range(0..=2) {
            let j = rng.random_range(0..uas.len());
            if !shape.acyclic || j > i {
                link(&mut p, &mut rng, a, uas[j]);
            }
        }
    }
    for &r in &resources {
        for _ in 0..rng.random_range(0..=2) {
            let a = pick(&mut rng, &ras);
            link(&mut p, &mut rng, r, a);
        }
    }
    for (i, &a) in ras.iter().enumerate() {
        for _ in 0..rng.random_range(0..=2) {
            let j = rng.random_range(0..ras.len());
            if !shape.acyclic || j > i {
                link(&mut p, &mut rng, a, ras[j]);
            }
        }
    }
    for _ in 0..rng.random_range(1..=8) {
        let mut subj: Vec<VertexId> = (0..rng.random_range(1..=2)).map(|_| pick(&mut rng, &uas)).collect();
        let mut obj: Vec<VertexId> = (0..rng.random_range(1..=2)).map(|_| pick(&mut rng, &ras)).collect();
        if shape.direct_members && rng.random_bool(0.2) {
            subj.push(pick(&mut rng, &users));
        }
        if shape.direct_members && rng.random_bool(0.2) {
            obj.push(pick(&mut rng, &resources));
        }
        subj.sort();
        subj.dedup();
        obj.sort();
        obj.dedup();
        let mut perms = PermissionSet::from_bits(rng.random_range(1..16u64));
        if perms.is_empty() {
            perms.insert(Permission(0));
        }
        let pc = pick(&mut rng, &pcs);
        let cs = constraints(&mut rng, shape.constraints);
        p.add_grant(&subj, &obj, pc, perms, cs).unwrap();
    }
    if shape.churn {
        let ids: Vec<_> = p.edges().map(|e| e.id).collect();
        for id in ids {
            match rng.random_range(0..20) {
                0 => {
                    p.set_active(id, false).unwrap();
                }
                1 => {
                    p.remove_hyperedge(id).unwrap();
                }
                _ => {}
            }
        }
    }
    let mut contexts = Vec::new();
    for k in 0..2 {
        let mut c = EvaluationContext::new(t0(), accts[k]);
        if rng.random_bool(0.5) {
            c = c.with_approval("ok");
        }
        contexts.push(c);
    }
    let max_depth = rng.random_range(1..=6);
    RandomPolicy { policy: p, contexts, users, resources, max_depth }
}
