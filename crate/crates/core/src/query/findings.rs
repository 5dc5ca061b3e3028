use serde::Serialize;

use super::{AccessPath, EscalationFinding, OverPrivilegeFinding};
use crate::hypergraph::{PolicyHypergraph, VertexId};

#[derive(Serialize)]
struct PathLine<'a> {
    vertices: &'a [VertexId],
    edges: &'a [crate::hypergraph::HyperedgeId],
}

#[derive(Serialize)]
struct EscalationLine<'a> {
    kind: &'static str,
    subject: VertexId,
    subject_name: &'a str,
    target: VertexId,
    target_name: &'a str,
    path: PathLine<'a>,
    chained_attributes: &'a [VertexId],
    permissions: Vec<String>,
    flags: &'a [String],
    remediation: &'a str,
    rendering: String,
}

#[derive(Serialize)]
struct ExcessLine<'a> {
    resource: VertexId,
    resource_name: &'a str,
    permissions: Vec<String>,
}

#[derive(Serialize)]
struct OverPrivilegeLine<'a> {
    kind: &'static str,
    subject: VertexId,
    subject_name: &'a str,
    path: Option<PathLine<'a>>,
    excess: Vec<ExcessLine<'a>>,
    rendering: String,
}

pub fn escalation_line(policy: &PolicyHypergraph, f: &EscalationFinding) -> String {
    let uni = policy.universe();
    let line = EscalationLine {
        kind: "escalation",
        subject: f.user,
        subject_name: policy.name(f.user),
        target: f.target,
        target_name: policy.name(f.target),
        path: path_line(&f.path),
        chained_attributes: &f.chained_attributes,
        permissions: uni.names_of(f.permissions),
        flags: &f.flags,
        remediation: &f.remediation,
        rendering: format!(
            "{} can reach {} with {} via {}",
            policy.name(f.user),
            policy.name(f.target),
            uni.render(f.permissions),
            f.path.render(policy)
        ),
    };
    serde_json::to_string(&line).expect("finding serializes")
}

pub fn over_privilege_line(policy: &PolicyHypergraph, f: &OverPrivilegeFinding) -> String {
    let uni = policy.universe();
    let excess: Vec<ExcessLine> = f
        .excess
        .iter()
        .map(|(r, p)| ExcessLine {
            resource: *r,
            resource_name: policy.name(*r),
            permissions: uni.names_of(*p),
        })
        .collect();
    let line = OverPrivilegeLine {
        kind: "over_privileged",
        subject: f.subject,
        subject_name: policy.name(f.subject),
        path: None,
        rendering: format!(
            "{} holds {} beyond its requirements on {} resource(s)",
            policy.name(f.subject),
            uni.render(f.excess_union()),
            excess.len()
        ),
        excess,
    };
    serde_json::to_string(&line).expect("finding serializes")
}

fn path_line(p: &AccessPath) -> PathLine<'_> {
    PathLine { vertices: &p.vertices, edges: &p.edges }
}
