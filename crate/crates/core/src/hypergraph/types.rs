use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::PermissionSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperedgeId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl HyperedgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for HyperedgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VertexKind {
    #[serde(rename = "user")]
    User,
    #[serde(rename = "user_attr")]
    UserAttribute,
    #[serde(rename = "resource")]
    Resource,
    #[serde(rename = "resource_attr")]
    ResourceAttribute,
    #[serde(rename = "policy_class")]
    PolicyClass,
    /// Part of the kind partition for completeness. Permissions are carried as
    /// edge labels, so the policy refuses to store vertices of this kind.
    #[serde(rename = "permission")]
    Permission,
}

impl VertexKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VertexKind::User => "user",
            VertexKind::UserAttribute => "user_attr",
            VertexKind::Resource => "resource",
            VertexKind::ResourceAttribute => "resource_attr",
            VertexKind::PolicyClass => "policy_class",
            VertexKind::Permission => "permission",
        }
    }

    /// Users and user attributes.
    pub fn is_subject(self) -> bool {
        matches!(self, VertexKind::User | VertexKind::UserAttribute)
    }

    /// Resources and resource attributes.
    pub fn is_object(self) -> bool {
        matches!(self, VertexKind::Resource | VertexKind::ResourceAttribute)
    }
}

impl fmt::Display for VertexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether `from → to` is a legal assignment.
pub fn legal_assignment(from: VertexKind, to: VertexKind) -> bool {
    use VertexKind::*;
    matches!(
        (from, to),
        (User, UserAttribute)
            | (Resource, ResourceAttribute)
            | (UserAttribute, UserAttribute)
            | (ResourceAttribute, ResourceAttribute)
    )
}

pub type Tags = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    pub id: VertexId,
    pub kind: VertexKind,
    pub name: String,
    pub account: String,
    pub tags: Tags,
}

impl Vertex {
    pub fn has_tag(&self, key: &str, value: &str) -> bool {
        self.tags.get(key).is_some_and(|v| v == value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintSpec {
    SameAccount,
    TimeWindow {
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    },
    ApprovalRequired {
        tag: String,
    },
}

impl ConstraintSpec {
    pub fn window(&self) -> Option<(DateTime<Utc>, DateTime<Utc>)> {
        match self {
            ConstraintSpec::TimeWindow { start, end } => Some((*start, *end)),
            _ => None,
        }
    }

    pub fn is_time_window(&self) -> bool {
        matches!(self, ConstraintSpec::TimeWindow { .. })
    }
}

impl fmt::Display for ConstraintSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintSpec::SameAccount => f.write_str("same_account"),
            ConstraintSpec::TimeWindow { start, end } => {
                write!(f, "time_window[{}, {}]", start.to_rfc3339(), end.to_rfc3339())
            }
            ConstraintSpec::ApprovalRequired { tag } => write!(f, "approval_required({tag})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Assignment,
    Association,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hyperedge {
    pub id: HyperedgeId,
    pub kind: EdgeKind,
    /// Assignments keep `[from, to]`; associations keep insertion order.
    pub members: Vec<VertexId>,
    pub permissions: PermissionSet,
    pub constraints: Vec<ConstraintSpec>,
    pub active: bool,
}

impl Hyperedge {
    pub fn is_assignment(&self) -> bool {
        self.kind == EdgeKind::Assignment
    }

    pub fn is_association(&self) -> bool {
        self.kind == EdgeKind::Association
    }

    /// Source of an assignment (the member being assigned).
    pub fn from(&self) -> VertexId {
        self.members[0]
    }

    /// Target of an assignment (the attribute it is assigned to).
    pub fn to(&self) -> VertexId {
        self.members[1]
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.members.contains(&v)
    }

    pub fn time_windows(&self) -> impl Iterator<Item = (DateTime<Utc>, DateTime<Utc>)> + '_ {
        self.constraints.iter().filter_map(ConstraintSpec::window)
    }
}
