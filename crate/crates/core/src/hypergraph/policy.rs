use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use super::types::legal_assignment;
use super::validate::Violation;
use super::{
    ConstraintSpec, EdgeKind, Hyperedge, HyperedgeId, PermissionSet, PermissionUniverse, Tags,
    Vertex, VertexId, VertexKind,
};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("duplicate {kind} name {name:?}")]
    DuplicateName { kind: VertexKind, name: String },
    #[error("vertex name must be non-empty")]
    EmptyName,
    #[error("permission vertices are not stored; permissions are edge labels")]
    PermissionVertex,
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("unknown or removed hyperedge {0}")]
    UnknownEdge(HyperedgeId),
    #[error("kind mismatch: {0}")]
    KindMismatch(String),
    #[error("association permissions must be non-empty")]
    EmptyPermissions,
    #[error("permission set is outside the policy universe")]
    PermissionOutsideUniverse,
    #[error("unknown permission {0:?}")]
    UnknownPermission(String),
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("invalid permission universe")]
    InvalidUniverse,
    #[error("malformed policy document: {0}")]
    Document(String),
    #[error("policy failed validation: {}", summarize(.0))]
    Invalid(Vec<Violation>),
    #[error("policy JSON: {0}")]
    Json(#[from] serde_json::Error),
}

fn summarize(v: &[Violation]) -> String {
    let mut s: Vec<String> = v.iter().take(3).map(|x| x.to_string()).collect();
    if v.len() > 3 {
        s.push(format!("and {} more", v.len() - 3));
    }
    s.join("; ")
}

/// Hyperedge ids incident to one vertex, split by role so traversals can
/// fetch just the bucket they need.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Incidence {
    /// Assignments where the vertex is the assigned member.
    pub outgoing: BTreeSet<HyperedgeId>,
    /// Assignments where the vertex is the attribute assigned to.
    pub incoming: BTreeSet<HyperedgeId>,
    pub associations: BTreeSet<HyperedgeId>,
}

impl Incidence {
    pub fn all(&self) -> BTreeSet<HyperedgeId> {
        let mut s = self.outgoing.clone();
        s.extend(self.incoming.iter().copied());
        s.extend(self.associations.iter().copied());
        s
    }

    pub fn len(&self) -> usize {
        self.outgoing.len() + self.incoming.len() + self.associations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
pub struct PolicyHypergraph {
    pub(crate) universe: PermissionUniverse,
    pub(crate) vertices: Vec<Vertex>,
    pub(crate) edges: Vec<Option<Hyperedge>>,
    pub(crate) incidence: Vec<Incidence>,
    pub(crate) names: HashMap<(VertexKind, String), VertexId>,
    pub(crate) live_edges: usize,
}

impl Default for PolicyHypergraph {
    fn default() -> Self {
        Self::new(PermissionUniverse::default())
    }
}

impl PolicyHypergraph {
    pub fn new(universe: PermissionUniverse) -> Self {
        PolicyHypergraph {
            universe,
            vertices: Vec::new(),
            edges: Vec::new(),
            incidence: Vec::new(),
            names: HashMap::new(),
            live_edges: 0,
        }
    }

    pub fn universe(&self) -> &PermissionUniverse {
        &self.universe
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Number of live (not removed) hyperedges, active or not.
    pub fn edge_count(&self) -> usize {
        self.live_edges
    }

    /// One past the largest hyperedge id ever issued.
    pub fn edge_id_bound(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertices_of_kind(&self, kind: VertexKind) -> impl Iterator<Item = &Vertex> + '_ {
        self.vertices.iter().filter(move |v| v.kind == kind)
    }

    pub fn count_kind(&self, kind: VertexKind) -> usize {
        self.vertices_of_kind(kind).count()
    }

    pub fn vertex(&self, id: VertexId) -> Option<&Vertex> {
        self.vertices.get(id.index())
    }

    pub fn try_vertex(&self, id: VertexId) -> Result<&Vertex, PolicyError> {
        self.vertex(id).ok_or(PolicyError::UnknownVertex(id))
    }

    pub fn kind(&self, id: VertexId) -> Option<VertexKind> {
        self.vertex(id).map(|v| v.kind)
    }

    pub fn name(&self, id: VertexId) -> &str {
        self.vertex(id).map(|v| v.name.as_str()).unwrap_or("?")
    }

    pub fn lookup(&self, kind: VertexKind, name: &str) -> Option<VertexId> {
        self.names.get(&(kind, name.to_string())).copied()
    }

    /// Resolves a name across all kinds; the lowest-id match wins.
    pub fn lookup_any(&self, name: &str) -> Option<VertexId> {
        self.vertices.iter().find(|v| v.name == name).map(|v| v.id)
    }

    /// Live hyperedge by id.
    pub fn edge(&self, id: HyperedgeId) -> Option<&Hyperedge> {
        self.edges.get(id.index()).and_then(Option::as_ref)
    }

    pub fn try_edge(&self, id: HyperedgeId) -> Result<&Hyperedge, PolicyError> {
        self.edge(id).ok_or(PolicyError::UnknownEdge(id))
    }

    /// Live hyperedges in id order.
    pub fn edges(&self) -> impl Iterator<Item = &Hyperedge> + '_ {
        self.edges.iter().filter_map(Option::as_ref)
    }

    pub fn incidence(&self, v: VertexId) -> &Incidence {
        &self.incidence[v.index()]
    }

    /// Account shared by every non-policy-class member of `edge`, if there is one.
    pub fn shared_account(&self, edge: &Hyperedge) -> Option<&str> {
        let mut acct: Option<&str> = None;
        for &m in &edge.members {
            let v = self.vertex(m)?;
            if v.kind == VertexKind::PolicyClass {
                continue;
            }
            match acct {
                None => acct = Some(&v.account),
                Some(a) if a == v.account => {}
                Some(_) => return None,
            }
        }
        acct
    }

    pub fn add_vertex(
        &mut self,
        kind: VertexKind,
        name: impl Into<String>,
        account: impl Into<String>,
        tags: Tags,
    ) -> Result<VertexId, PolicyError> {
        let name = name.into();
        if name.is_empty() {
            return Err(PolicyError::EmptyName);
        }
        if kind == VertexKind::Permission {
            return Err(PolicyError::PermissionVertex);
        }
        let key = (kind, name);
        if self.names.contains_key(&key) {
            return Err(PolicyError::DuplicateName {
                kind,
                name: key.1,
            });
        }
        let id = VertexId(self.vertices.len() as u32);
        self.vertices.push(Vertex {
            id,
            kind,
            name: key.1.clone(),
            account: account.into(),
            tags,
        });
        self.incidence.push(Incidence::default());
        self.names.insert(key, id);
        Ok(id)
    }

    pub fn add_assignment(
        &mut self,
        from: VertexId,
        to: VertexId,
    ) -> Result<HyperedgeId, PolicyError> {
        self.add_assignment_with(from, to, Vec::new())
    }

    /// Assignment carrying constraints (e.g. a time-boxed role membership).
    pub fn add_assignment_with(
        &mut self,
        from: VertexId,
        to: VertexId,
        constraints: Vec<ConstraintSpec>,
    ) -> Result<HyperedgeId, PolicyError> {
        let fk = self.try_vertex(from)?.kind;
        let tk = self.try_vertex(to)?.kind;
        if from == to {
            return Err(PolicyError::KindMismatch(format!(
                "self-assignment on {from}"
            )));
        }
        if !legal_assignment(fk, tk) {
            return Err(PolicyError::KindMismatch(format!(
                "{fk} -> {tk} is not a legal assignment"
            )));
        }
        check_constraints(&constraints)?;
        Ok(self.insert_edge(EdgeKind::Assignment, vec![from, to], PermissionSet::empty(), constraints))
    }

    /// Association between user attributes and resource attributes under one
    /// policy class.
    pub fn add_association(
        &mut self,
        user_attrs: &[VertexId],
        res_attrs: &[VertexId],
        pc: VertexId,
        perms: PermissionSet,
        constraints: Vec<ConstraintSpec>,
    ) -> Result<HyperedgeId, PolicyError> {
        for &v in user_attrs {
            self.expect_kind(v, &[VertexKind::UserAttribute])?;
        }
        for &v in res_attrs {
            self.expect_kind(v, &[VertexKind::ResourceAttribute])?;
        }
        self.add_grant(user_attrs, res_attrs, pc, perms, constraints)
    }

    /// Association form that also admits users and resources as direct members,
    /// e.g. `{u, ua, r, ra, pc}`. At least one UA and one RA are still required.
    pub fn add_grant(
        &mut self,
        subjects: &[VertexId],
        objects: &[VertexId],
        pc: VertexId,
        perms: PermissionSet,
        constraints: Vec<ConstraintSpec>,
    ) -> Result<HyperedgeId, PolicyError> {
        if perms.is_empty() {
            return Err(PolicyError::EmptyPermissions);
        }
        if !self.universe.contains_set(perms) {
            return Err(PolicyError::PermissionOutsideUniverse);
        }
        let mut has_ua = false;
        let mut has_ra = false;
        for &v in subjects {
            has_ua |= self.expect_kind(v, &[VertexKind::User, VertexKind::UserAttribute])?
                == VertexKind::UserAttribute;
        }
        for &v in objects {
            has_ra |= self.expect_kind(v, &[VertexKind::Resource, VertexKind::ResourceAttribute])?
                == VertexKind::ResourceAttribute;
        }
        self.expect_kind(pc, &[VertexKind::PolicyClass])?;
        if !has_ua {
            return Err(PolicyError::KindMismatch(
                "association needs at least one user attribute".into(),
            ));
        }
        if !has_ra {
            return Err(PolicyError::KindMismatch(
                "association needs at least one resource attribute".into(),
            ));
        }
        check_constraints(&constraints)?;
        let mut members: Vec<VertexId> = Vec::with_capacity(subjects.len() + objects.len() + 1);
        for &v in subjects.iter().chain(objects).chain(std::iter::once(&pc)) {
            if !members.contains(&v) {
                members.push(v);
            }
        }
        Ok(self.insert_edge(EdgeKind::Association, members, perms, constraints))
    }

    fn expect_kind(&self, v: VertexId, allowed: &[VertexKind]) -> Result<VertexKind, PolicyError> {
        let k = self.try_vertex(v)?.kind;
        if allowed.contains(&k) {
            Ok(k)
        } else {
            Err(PolicyError::KindMismatch(format!(
                "{v} has kind {k}, expected one of {allowed:?}"
            )))
        }
    }

    fn insert_edge(
        &mut self,
        kind: EdgeKind,
        members: Vec<VertexId>,
        permissions: PermissionSet,
        constraints: Vec<ConstraintSpec>,
    ) -> HyperedgeId {
        let id = HyperedgeId(self.edges.len() as u32);
        let edge = Hyperedge {
            id,
            kind,
            members,
            permissions,
            constraints,
            active: true,
        };
        self.index_edge(&edge);
        self.edges.push(Some(edge));
        self.live_edges += 1;
        id
    }

    pub(crate) fn index_edge(&mut self, edge: &Hyperedge) {
        let n = self.incidence.len();
        match edge.kind {
            EdgeKind::Assignment => {
                if let Some(&f) = edge.members.first() {
                    if f.index() < n {
                        self.incidence[f.index()].outgoing.insert(edge.id);
                    }
                }
                if let Some(&t) = edge.members.get(1) {
                    if t.index() < n {
                        self.incidence[t.index()].incoming.insert(edge.id);
                    }
                }
            }
            EdgeKind::Association => {
                for &m in &edge.members {
                    if m.index() < n {
                        self.incidence[m.index()].associations.insert(edge.id);
                    }
                }
            }
        }
    }

    /// Deletes a hyperedge. Touches only the edge's own members.
    pub fn remove_hyperedge(&mut self, id: HyperedgeId) -> Result<Hyperedge, PolicyError> {
        let edge = self
            .edges
            .get_mut(id.index())
            .and_then(Option::take)
            .ok_or(PolicyError::UnknownEdge(id))?;
        // Only the bucket the edge was indexed under; a role's incoming set
        // grows with its membership and must not be touched here.
        for (i, &m) in edge.members.iter().enumerate() {
            if let Some(inc) = self.incidence.get_mut(m.index()) {
                match (edge.kind, i) {
                    (EdgeKind::Assignment, 0) => inc.outgoing.remove(&id),
                    (EdgeKind::Assignment, _) => inc.incoming.remove(&id),
                    (EdgeKind::Association, _) => inc.associations.remove(&id),
                };
            }
        }
        self.live_edges -= 1;
        Ok(edge)
    }

    pub fn set_active(&mut self, id: HyperedgeId, active: bool) -> Result<(), PolicyError> {
        let edge = self
            .edges
            .get_mut(id.index())
            .and_then(Option::as_mut)
            .ok_or(PolicyError::UnknownEdge(id))?;
        edge.active = active;
        Ok(())
    }

    /// Hyperedges whose members include `v`, in id order.
    pub fn incident_edges(
        &self,
        v: VertexId,
        live_only: bool,
    ) -> Result<BTreeSet<HyperedgeId>, PolicyError> {
        self.try_vertex(v)?;
        let mut all = self.incidence[v.index()].all();
        if live_only {
            all.retain(|e| self.edge(*e).is_some_and(|x| x.active));
        }
        Ok(all)
    }

    /// Test hook: direct access to the incidence table for fault injection.
    #[doc(hidden)]
    pub fn incidence_mut(&mut self, v: VertexId) -> &mut Incidence {
        &mut self.incidence[v.index()]
    }
}

fn check_constraints(cs: &[ConstraintSpec]) -> Result<(), PolicyError> {
    for c in cs {
        match c {
            ConstraintSpec::TimeWindow { start, end } if start >= end => {
                return Err(PolicyError::InvalidConstraint(format!(
                    "time window start {start} is not before end {end}"
                )))
            }
            ConstraintSpec::ApprovalRequired { tag } if tag.is_empty() => {
                return Err(PolicyError::InvalidConstraint(
                    "approval tag must be non-empty".into(),
                ))
            }
            _ => {}
        }
    }
    Ok(())
}
