//! Simplified cloud-IAM documents: users, assumable roles, typed resources
//! and per-role permission policies.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergraph::{
    ConstraintSpec, PermissionSet, PolicyError, PolicyHypergraph, Tags, VertexId, VertexKind,
};

/// Documents above this size are rejected before parsing.
pub const MAX_DOCUMENT_BYTES: usize = 64 * 1024 * 1024;

pub const DEFAULT_POLICY_CLASS: &str = "PC:AWS";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("document is {size} bytes, limit is {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError { line: usize, column: usize, message: String },
    #[error("schema error at {path} (line {line}, column {column}): {message}")]
    SchemaError { path: String, line: usize, column: usize, message: String },
    #[error("unresolved reference: {0}")]
    UnresolvedReference(String),
    #[error("unknown action {action:?} in policy for role {role:?}")]
    UnknownAction { role: String, action: String },
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IamUser {
    pub name: String,
    #[serde(default)]
    pub account: String,
    #[serde(default)]
    pub tags: Tags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IamRole {
    pub name: String,
    #[serde(default)]
    pub account: String,
    /// Users or roles allowed to assume this role.
    #[serde(default)]
    pub assumable_by: Vec<String>,
    #[serde(default)]
    pub tags: Tags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IamResource {
    pub name: String,
    #[serde(default)]
    pub account: String,
    #[serde(rename = "type")]
    pub resource_type: String,
    #[serde(default)]
    pub tags: Tags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IamPolicy {
    pub role: String,
    pub actions: Vec<String>,
    /// Exact resource names or `prefix*` patterns.
    pub resources: Vec<String>,
    #[serde(default = "default_pc")]
    pub policy_class: String,
    #[serde(default)]
    pub constraints: Vec<ConstraintSpec>,
}

fn default_pc() -> String {
    DEFAULT_POLICY_CLASS.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IamDocument {
    pub users: Vec<IamUser>,
    pub roles: Vec<IamRole>,
    pub resources: Vec<IamResource>,
    pub policies: Vec<IamPolicy>,
}

/// Action strings accepted in policies, matched case-insensitively.
/// Bare permission names from the universe (`Read`, `PassRole`) are also
/// accepted.
pub const ACTION_MAP: &[(&str, &str)] = &[
    ("s3:GetObject", "Read"),
    ("s3:PutObject", "Write"),
    ("s3:DeleteObject", "Delete"),
    ("s3:DeleteBucket", "Delete"),
    ("s3:ListBucket", "List"),
    ("s3:ListAllMyBuckets", "List"),
    ("ec2:DescribeInstances", "List"),
    ("ec2:StartInstances", "Execute"),
    ("ec2:StopInstances", "Execute"),
    ("ec2:RunInstances", "RunInstances"),
    ("ec2:TerminateInstances", "Delete"),
    ("rds:DescribeDBInstances", "List"),
    ("rds-db:connect", "Read"),
    ("rds:ModifyDBInstance", "Write"),
    ("rds:DeleteDBInstance", "Delete"),
    ("dynamodb:GetItem", "Read"),
    ("dynamodb:Query", "Read"),
    ("dynamodb:PutItem", "Write"),
    ("dynamodb:DeleteItem", "Delete"),
    ("lambda:InvokeFunction", "Execute"),
    ("iam:PassRole", "PassRole"),
    ("sts:AssumeRole", "AssumeRole"),
];

pub fn map_action(action: &str) -> Option<&'static str> {
    ACTION_MAP
        .iter()
        .find(|(a, _)| a.eq_ignore_ascii_case(action))
        .map(|(_, p)| *p)
}

fn line_col(bytes: &[u8], offset: usize) -> (usize, usize) {
    let upto = &bytes[..offset.min(bytes.len())];
    let line = upto.iter().filter(|&&b| b == b'\n').count() + 1;
    let column = upto.iter().rev().take_while(|&&b| b != b'\n').count() + 1;
    (line, column)
}

pub fn parse_iam(bytes: &[u8]) -> Result<IamDocument, IngestError> {
    if bytes.len() > MAX_DOCUMENT_BYTES {
        return Err(IngestError::TooLarge { size: bytes.len(), limit: MAX_DOCUMENT_BYTES });
    }
    if let Err(e) = std::str::from_utf8(bytes) {
        let (line, column) = line_col(bytes, e.valid_up_to());
        return Err(IngestError::ParseError { line, column, message: "invalid UTF-8".into() });
    }
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let doc = match serde_path_to_error::deserialize::<_, IamDocument>(&mut de) {
        Ok(d) => d,
        Err(e) => {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let (line, column) = (inner.line(), inner.column());
            let message = inner.to_string();
            if inner.classify() != serde_json::error::Category::Data {
                return Err(IngestError::ParseError { line, column, message });
            }
            // Point at the missing key itself rather than its parent.
            let missing = message.strip_prefix("missing field `").and_then(|m| m.split('`').next());
            let path = match missing {
                Some(field) if path == "." => field.to_string(),
                Some(field) => format!("{path}.{field}"),
                None => path,
            };
            return Err(IngestError::SchemaError { path, line, column, message });
        }
    };
    de.end().map_err(|e| IngestError::ParseError {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ok(doc)
}

fn pattern_matches(pattern: &str, name: &str) -> bool {
    match pattern.strip_suffix('*') {
        Some(prefix) => name.starts_with(prefix),
        None => pattern == name,
    }
}

/// Builds the hypergraph: `assumable_by` entries become assignments into the
/// role, each resource is assigned to its type, and each policy yields one
/// association per (role, resource type, policy class) among the resources
/// its patterns match.
pub fn to_hypergraph(doc: &IamDocument) -> Result<PolicyHypergraph, IngestError> {
    let mut p = PolicyHypergraph::default();
    let unresolved = |s: String| IngestError::UnresolvedReference(s);

    for u in &doc.users {
        p.add_vertex(VertexKind::User, &u.name, &u.account, u.tags.clone())?;
    }
    for r in &doc.roles {
        p.add_vertex(VertexKind::UserAttribute, &r.name, &r.account, r.tags.clone())?;
    }
    let mut types: BTreeMap<&str, VertexId> = BTreeMap::new();
    for r in &doc.resources {
        if r.resource_type.is_empty() {
            return Err(unresolved(format!("resource {:?} has an empty type", r.name)));
        }
        if !types.contains_key(r.resource_type.as_str()) {
            let ra = p.add_vertex(
                VertexKind::ResourceAttribute,
                &r.resource_type,
                &r.account,
                Tags::new(),
            )?;
            types.insert(&r.resource_type, ra);
        }
    }
    let mut res_ids = Vec::with_capacity(doc.resources.len());
    for r in &doc.resources {
        res_ids.push(p.add_vertex(VertexKind::Resource, &r.name, &r.account, r.tags.clone())?);
    }
    let mut pcs: BTreeMap<&str, VertexId> = BTreeMap::new();
    for pol in &doc.policies {
        if !pcs.contains_key(pol.policy_class.as_str()) {
            let pc = p.add_vertex(VertexKind::PolicyClass, &pol.policy_class, "", Tags::new())?;
            pcs.insert(&pol.policy_class, pc);
        }
    }

    for r in &doc.roles {
        let role = p.lookup(VertexKind::UserAttribute, &r.name).expect("role vertex");
        for who in &r.assumable_by {
            if who == &r.name {
                return Err(unresolved(format!("role {who:?} is assumable by itself")));
            }
            let from = p
                .lookup(VertexKind::User, who)
                .or_else(|| p.lookup(VertexKind::UserAttribute, who))
                .ok_or_else(|| unresolved(format!("role {:?} is assumable by unknown {who:?}", r.name)))?;
            p.add_assignment(from, role)?;
        }
    }
    for (r, &id) in doc.resources.iter().zip(&res_ids) {
        p.add_assignment(id, types[r.resource_type.as_str()])?;
    }

    for pol in &doc.policies {
        let role = p
            .lookup(VertexKind::UserAttribute, &pol.role)
            .ok_or_else(|| unresolved(format!("policy for unknown role {:?}", pol.role)))?;
        let mut perms = PermissionSet::empty();
        for a in &pol.actions {
            let name = map_action(a).unwrap_or(a);
            let op = p.universe().lookup(name).ok_or_else(|| IngestError::UnknownAction {
                role: pol.role.clone(),
                action: a.clone(),
            })?;
            perms.insert(op);
        }
        if perms.is_empty() {
            return Err(IngestError::Policy(PolicyError::EmptyPermissions));
        }
        // Types in vertex order, so edge numbering follows the document.
        let mut hit: Vec<VertexId> = Vec::new();
        for pat in &pol.resources {
            let before = hit.len();
            for r in doc.resources.iter().filter(|r| pattern_matches(pat, &r.name)) {
                hit.push(types[r.resource_type.as_str()]);
            }
            if hit.len() == before {
                return Err(unresolved(format!("pattern {pat:?} in policy for {:?} matches no resource", pol.role)));
            }
        }
        hit.sort();
        hit.dedup();
        let pc = pcs[pol.policy_class.as_str()];
        for ra in hit {
            p.add_association(&[role], &[ra], pc, perms, pol.constraints.clone())?;
        }
    }

    let violations = p.validate();
    if !violations.is_empty() {
        return Err(IngestError::Policy(PolicyError::Invalid(violations)));
    }
    Ok(p)
}

pub fn ingest_bytes(bytes: &[u8]) -> Result<PolicyHypergraph, IngestError> {
    to_hypergraph(&parse_iam(bytes)?)
}
