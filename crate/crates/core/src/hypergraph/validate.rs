use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::types::legal_assignment;
use super::{EdgeKind, HyperedgeId, PolicyHypergraph, VertexId, VertexKind};

/// One broken well-formedness rule, naming the offending edge or vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Violation {
    IncidenceMismatch { vertex: VertexId, edge: HyperedgeId },
    DanglingMember { edge: HyperedgeId, vertex: VertexId },
    DuplicateMember { edge: HyperedgeId, vertex: VertexId },
    AssignmentArity { edge: HyperedgeId, members: usize },
    IllegalAssignment { edge: HyperedgeId, from: VertexKind, to: VertexKind },
    AssignmentWithPermissions { edge: HyperedgeId },
    EmptyPermissions { edge: HyperedgeId },
    PermissionOutsideUniverse { edge: HyperedgeId },
    MissingUserAttribute { edge: HyperedgeId },
    MissingResourceAttribute { edge: HyperedgeId },
    MissingPolicyClass { edge: HyperedgeId },
    MultiplePolicyClasses { edge: HyperedgeId, count: usize },
    IllegalAssociationMember { edge: HyperedgeId, vertex: VertexId },
    InvalidTimeWindow { edge: HyperedgeId },
    EmptyApprovalTag { edge: HyperedgeId },
    EmptyName { vertex: VertexId },
    DuplicateName { vertex: VertexId, kind: VertexKind, name: String },
    PermissionVertex { vertex: VertexId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            IncidenceMismatch { vertex, edge } => {
                write!(f, "incidence of {vertex} disagrees with membership of {edge}")
            }
            DanglingMember { edge, vertex } => write!(f, "{edge} references missing {vertex}"),
            DuplicateMember { edge, vertex } => write!(f, "{edge} lists {vertex} twice"),
            AssignmentArity { edge, members } => {
                write!(f, "assignment {edge} has {members} members, expected 2")
            }
            IllegalAssignment { edge, from, to } => {
                write!(f, "assignment {edge} links {from} -> {to}")
            }
            AssignmentWithPermissions { edge } => write!(f, "assignment {edge} carries permissions"),
            EmptyPermissions { edge } => write!(f, "association {edge} has no permissions"),
            PermissionOutsideUniverse { edge } => {
                write!(f, "{edge} has permissions outside the universe")
            }
            MissingUserAttribute { edge } => write!(f, "association {edge} has no user attribute"),
            MissingResourceAttribute { edge } => {
                write!(f, "association {edge} has no resource attribute")
            }
            MissingPolicyClass { edge } => write!(f, "association {edge} has no policy class"),
            MultiplePolicyClasses { edge, count } => {
                write!(f, "association {edge} has {count} policy classes")
            }
            IllegalAssociationMember { edge, vertex } => {
                write!(f, "association {edge} has illegal member {vertex}")
            }
            InvalidTimeWindow { edge } => write!(f, "{edge} has a time window with start >= end"),
            EmptyApprovalTag { edge } => write!(f, "{edge} has an empty approval tag"),
            EmptyName { vertex } => write!(f, "{vertex} has an empty name"),
            DuplicateName { vertex, kind, name } => {
                write!(f, "{vertex} repeats {kind} name {name:?}")
            }
            PermissionVertex { vertex } => write!(f, "{vertex} is a permission vertex"),
        }
    }
}

impl PolicyHypergraph {
    /// Checks every structural invariant. An empty list means well-formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.vertices.len();

        let mut seen_names = HashSet::new();
        for v in &self.vertices {
            if v.name.is_empty() {
                out.push(Violation::EmptyName { vertex: v.id });
            }
            if v.kind == VertexKind::Permission {
                out.push(Violation::PermissionVertex { vertex: v.id });
            }
            if !seen_names.insert((v.kind, v.name.as_str())) {
                out.push(Violation::DuplicateName {
                    vertex: v.id,
                    kind: v.kind,
                    name: v.name.clone(),
                });
            }
        }

        for e in self.edges() {
            let mut seen = Vec::with_capacity(e.members.len());
            for &m in &e.members {
                if m.index() >= n {
                    out.push(Violation::DanglingMember { edge: e.id, vertex: m });
                } else if seen.contains(&m) {
                    out.push(Violation::DuplicateMember { edge: e.id, vertex: m });
                }
                seen.push(m);
            }
            if !self.universe.contains_set(e.permissions) {
                out.push(Violation::PermissionOutsideUniverse { edge: e.id });
            }
            for c in &e.constraints {
                match c {
                    super::ConstraintSpec::TimeWindow { start, end } if start >= end => {
                        out.push(Violation::InvalidTimeWindow { edge: e.id })
                    }
                    super::ConstraintSpec::ApprovalRequired { tag } if tag.is_empty() => {
                        out.push(Violation::EmptyApprovalTag { edge: e.id })
                    }
                    _ => {}
                }
            }
            match e.kind {
                EdgeKind::Assignment => {
                    if e.members.len() != 2 {
                        out.push(Violation::AssignmentArity {
                            edge: e.id,
                            members: e.members.len(),
                        });
                    } else if let (Some(f), Some(t)) = (self.kind(e.members[0]), self.kind(e.members[1])) {
                        if !legal_assignment(f, t) || e.members[0] == e.members[1] {
                            out.push(Violation::IllegalAssignment { edge: e.id, from: f, to: t });
                        }
                    }
                    if !e.permissions.is_empty() {
                        out.push(Violation::AssignmentWithPermissions { edge: e.id });
                    }
                }
                EdgeKind::Association => {
                    if e.permissions.is_empty() {
                        out.push(Violation::EmptyPermissions { edge: e.id });
                    }
                    let (mut ua, mut ra, mut pc) = (0, 0, 0);
                    for &m in &e.members {
                        match self.kind(m) {
                            Some(VertexKind::UserAttribute) => ua += 1,
                            Some(VertexKind::ResourceAttribute) => ra += 1,
                            Some(VertexKind::PolicyClass) => pc += 1,
                            Some(VertexKind::User | VertexKind::Resource) | None => {}
                            Some(VertexKind::Permission) => out.push(
                                Violation::IllegalAssociationMember { edge: e.id, vertex: m },
                            ),
                        }
                    }
                    if ua == 0 {
                        out.push(Violation::MissingUserAttribute { edge: e.id });
                    }
                    if ra == 0 {
                        out.push(Violation::MissingResourceAttribute { edge: e.id });
                    }
                    if pc == 0 {
                        out.push(Violation::MissingPolicyClass { edge: e.id });
                    } else if pc > 1 {
                        out.push(Violation::MultiplePolicyClasses { edge: e.id, count: pc });
                    }
                }
            }
        }

        // Incidence exactness, checked from both directions.
        for e in self.edges() {
            for (pos, &m) in e.members.iter().enumerate() {
                if m.index() >= n {
                    continue;
                }
                let inc = &self.incidence[m.index()];
                let ok = match e.kind {
                    EdgeKind::Assignment => match pos {
                        0 => inc.outgoing.contains(&e.id),
                        1 => inc.incoming.contains(&e.id),
                        _ => inc.all().contains(&e.id),
                    },
                    EdgeKind::Association => inc.associations.contains(&e.id),
                };
                if !ok {
                    out.push(Violation::IncidenceMismatch { vertex: m, edge: e.id });
                }
            }
        }
        for v in &self.vertices {
            let inc = &self.incidence[v.id.index()];
            let buckets = [
                (&inc.outgoing, Some((EdgeKind::Assignment, 0usize))),
                (&inc.incoming, Some((EdgeKind::Assignment, 1))),
                (&inc.associations, None),
            ];
            for (set, expect) in buckets {
                for &eid in set {
                    let ok = match self.edge(eid) {
                        None => false,
                        Some(e) => match expect {
                            Some((k, pos)) => e.kind == k && e.members.get(pos) == Some(&v.id),
                            None => e.kind == EdgeKind::Association && e.contains(v.id),
                        },
                    };
                    if !ok {
                        out.push(Violation::IncidenceMismatch { vertex: v.id, edge: eid });
                    }
                }
            }
        }
        out
    }
}
