//! Privilege queries over a policy hypergraph and the detections built on them.
//!
//! Paths climb from the user through assignments (`user -> attr -> attr`),
//! cross exactly one association, then descend to the resource through
//! assignments walked in reverse (`attr -> attr -> resource`). Only the
//! association must carry the queried operation.

mod context;
mod engine;
mod escalation;
mod findings;
mod overpriv;
mod types;
mod window;

pub use context::EvaluationContext;
pub use engine::{
    check_privilege, co_membership_permissions, effective_permissions, find_access_paths,
    permissions_by_query, validate_path, HyperModel,
};
pub use escalation::{detect_escalations, EscalationFinding, TagFilter};
pub use findings::{escalation_line, over_privilege_line};
pub use overpriv::{
    detect_over_privileged, permission_map, OverPrivilegeFinding, PermissionMap,
    RequiredPermissions,
};
pub use types::{
    AccessDecision, AccessPath, DecisionModel, PathSet, PrivilegeQuery, QueryError,
    DEFAULT_MAX_DEPTH,
};
pub use window::{attack_window_report, revoke_expired, WindowReport};

#[cfg(test)]
mod tests;
