use std::collections::BTreeSet;

use chrono::{DateTime, Utc};

use crate::hypergraph::{ConstraintSpec, Hyperedge, PolicyHypergraph};

/// Runtime facts that decide constraint satisfaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationContext {
    pub timestamp: DateTime<Utc>,
    pub acting_account: String,
    pub approvals: BTreeSet<String>,
}

impl EvaluationContext {
    pub fn new(timestamp: DateTime<Utc>, acting_account: impl Into<String>) -> Self {
        EvaluationContext {
            timestamp,
            acting_account: acting_account.into(),
            approvals: BTreeSet::new(),
        }
    }

    pub fn with_approval(mut self, tag: impl Into<String>) -> Self {
        self.approvals.insert(tag.into());
        self
    }

    /// `shared_account` is the account common to the edge's non-policy-class
    /// members, or `None` when they disagree.
    pub fn satisfies(&self, c: &ConstraintSpec, shared_account: Option<&str>) -> bool {
        match c {
            ConstraintSpec::SameAccount => shared_account == Some(self.acting_account.as_str()),
            ConstraintSpec::TimeWindow { start, end } => {
                *start <= self.timestamp && self.timestamp <= *end
            }
            ConstraintSpec::ApprovalRequired { tag } => self.approvals.contains(tag),
        }
    }

    /// Whether every constraint on `edge` holds.
    pub fn admits(&self, policy: &PolicyHypergraph, edge: &Hyperedge) -> bool {
        if edge.constraints.is_empty() {
            return true;
        }
        let needs_account = edge
            .constraints
            .iter()
            .any(|c| matches!(c, ConstraintSpec::SameAccount));
        let acct = if needs_account { policy.shared_account(edge) } else { None };
        edge.constraints.iter().all(|c| self.satisfies(c, acct))
    }
}
