use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{
    ConstraintSpec, EdgeKind, Hyperedge, HyperedgeId, Incidence, PermissionUniverse,
    PolicyError, PolicyHypergraph, Tags, Vertex, VertexId, VertexKind,
};

/// On-disk JSON shape of a policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyDocument {
    pub permission_universe: Vec<String>,
    pub vertices: Vec<VertexDoc>,
    pub hyperedges: Vec<HyperedgeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexDoc {
    pub id: u32,
    pub kind: VertexKind,
    pub name: String,
    pub account: String,
    #[serde(default)]
    pub tags: Tags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperedgeDoc {
    pub id: u32,
    pub kind: EdgeKind,
    pub members: Vec<u32>,
    #[serde(default)]
    pub permissions: Vec<String>,
    #[serde(default)]
    pub constraints: Vec<ConstraintSpec>,
    #[serde(default = "yes")]
    pub active: bool,
}

fn yes() -> bool {
    true
}

impl PolicyHypergraph {
    pub fn to_document(&self) -> PolicyDocument {
        PolicyDocument {
            permission_universe: self.universe.names().to_vec(),
            vertices: self
                .vertices
                .iter()
                .map(|v| VertexDoc {
                    id: v.id.0,
                    kind: v.kind,
                    name: v.name.clone(),
                    account: v.account.clone(),
                    tags: v.tags.clone(),
                })
                .collect(),
            hyperedges: self
                .edges()
                .map(|e| HyperedgeDoc {
                    id: e.id.0,
                    kind: e.kind,
                    members: e.members.iter().map(|m| m.0).collect(),
                    permissions: self.universe.names_of(e.permissions),
                    constraints: e.constraints.clone(),
                    active: e.active,
                })
                .collect(),
        }
    }

    /// Builds a policy from a document and rejects it unless `validate` is clean.
    pub fn from_document(doc: PolicyDocument) -> Result<Self, PolicyError> {
        let p = Self::from_document_unchecked(doc)?;
        let violations = p.validate();
        if violations.is_empty() {
            Ok(p)
        } else {
            Err(PolicyError::Invalid(violations))
        }
    }

    /// Builds a policy without running `validate`, so malformed structure can be
    /// inspected. Only errors that make the document unrepresentable are raised.
    pub fn from_document_unchecked(doc: PolicyDocument) -> Result<Self, PolicyError> {
        let universe =
            PermissionUniverse::new(doc.permission_universe).ok_or(PolicyError::InvalidUniverse)?;
        let mut vertices = Vec::with_capacity(doc.vertices.len());
        let mut names = HashMap::with_capacity(doc.vertices.len());
        for (i, v) in doc.vertices.into_iter().enumerate() {
            if v.id as usize != i {
                return Err(PolicyError::Document(format!(
                    "vertex ids must be dense and ordered; found id {} at position {i}",
                    v.id
                )));
            }
            names.entry((v.kind, v.name.clone())).or_insert(VertexId(v.id));
            vertices.push(Vertex {
                id: VertexId(v.id),
                kind: v.kind,
                name: v.name,
                account: v.account,
                tags: v.tags,
            });
        }
        let mut edges: Vec<Option<Hyperedge>> = Vec::new();
        for e in doc.hyperedges {
            let idx = e.id as usize;
            if idx >= edges.len() {
                edges.resize(idx + 1, None);
            }
            if edges[idx].is_some() {
                return Err(PolicyError::Document(format!("duplicate hyperedge id {}", e.id)));
            }
            let permissions = universe
                .set_of(e.permissions.iter().map(String::as_str))
                .map_err(PolicyError::UnknownPermission)?;
            edges[idx] = Some(Hyperedge {
                id: HyperedgeId(e.id),
                kind: e.kind,
                members: e.members.into_iter().map(VertexId).collect(),
                permissions,
                constraints: e.constraints,
                active: e.active,
            });
        }
        let mut p = PolicyHypergraph {
            universe,
            incidence: vec![Incidence::default(); vertices.len()],
            vertices,
            live_edges: edges.iter().filter(|e| e.is_some()).count(),
            edges: Vec::new(),
            names,
        };
        for e in edges.iter().flatten() {
            p.index_edge(e);
        }
        p.edges = edges;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("policy document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, PolicyError> {
        let doc: PolicyDocument = serde_json::from_str(s)?;
        Self::from_document(doc)
    }

    pub fn from_json_slice(b: &[u8]) -> Result<Self, PolicyError> {
        let doc: PolicyDocument = serde_json::from_slice(b)?;
        Self::from_document(doc)
    }
}
