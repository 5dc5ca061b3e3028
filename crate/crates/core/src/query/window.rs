use chrono::{DateTime, Duration, Utc};

use crate::hypergraph::{HyperedgeId, PolicyHypergraph};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WindowReport {
    /// Active edges with a time window that ended before `now`.
    pub expired: Vec<HyperedgeId>,
    /// Active, not yet expired edges whose window ends within the horizon.
    pub expiring: Vec<HyperedgeId>,
}

pub fn attack_window_report(
    policy: &PolicyHypergraph,
    now: DateTime<Utc>,
    within: Duration,
) -> WindowReport {
    let horizon = now + within;
    let mut report = WindowReport::default();
    for e in policy.edges().filter(|e| e.active) {
        let mut expired = false;
        let mut expiring = false;
        for (_, end) in e.time_windows() {
            if end < now {
                expired = true;
            } else if end <= horizon {
                expiring = true;
            }
        }
        if expired {
            report.expired.push(e.id);
        } else if expiring {
            report.expiring.push(e.id);
        }
    }
    report
}

/// Removes every expired edge and returns how many were removed.
pub fn revoke_expired(policy: &mut PolicyHypergraph, now: DateTime<Utc>) -> usize {
    let expired = attack_window_report(policy, now, Duration::zero()).expired;
    for id in &expired {
        policy
            .remove_hyperedge(*id)
            .expect("expired edge listed from live edges");
    }
    expired.len()
}
