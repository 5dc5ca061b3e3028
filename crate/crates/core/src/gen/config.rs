use std::fmt;
use std::str::FromStr;

use super::GenError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Profile {
    /// Roles scale as `attr_ratio * n`; each role receives Zipf-distributed grants.
    Experiment,
    /// `ceil(sqrt(n))` user groups, resource groups and policy classes with one
    /// association per (user group, resource group, policy class).
    SqrtGrouping,
}

impl Profile {
    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Experiment => "experiment",
            Profile::SqrtGrouping => "sqrt-grouping",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "experiment" => Ok(Profile::Experiment),
            "sqrt-grouping" | "sqrt" => Ok(Profile::SqrtGrouping),
            other => Err(format!("unknown profile {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub profile: Profile,
    pub n_users: usize,
    pub n_roles: usize,
    pub n_resources: usize,
    /// Inclusive range, drawn uniformly.
    pub assignments_per_user: (u32, u32),
    /// Inclusive range, Zipf-distributed over its span.
    pub perms_per_role: (u32, u32),
    pub zipf_s: f64,
    pub attr_ratio: f64,
    pub n_resource_types: usize,
    /// Resource types named by one grant, inclusive range drawn uniformly.
    pub ra_per_grant: (u32, u32),
    /// Operations per grant, inclusive range drawn uniformly.
    pub ops_per_grant: (u32, u32),
    pub n_accounts: usize,
    pub pct_temporal: f64,
    pub pct_same_account: f64,
    pub pct_approval: f64,
    /// Share of roles that may target production resource types.
    pub pct_privileged: f64,
    /// Share of standard roles that inherit from another standard role.
    pub pct_hierarchy: f64,
    pub injected_chains: usize,
    pub injected_excess: usize,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig::for_users(200, 0)
    }
}

impl GenConfig {
    /// Scaled defaults: `ceil(attr_ratio * n)` roles and `n / 2` resources.
    pub fn for_users(n_users: usize, seed: u64) -> Self {
        let attr_ratio = 0.1;
        GenConfig {
            profile: Profile::Experiment,
            n_users,
            n_roles: ((n_users as f64) * attr_ratio).ceil() as usize,
            n_resources: n_users / 2,
            assignments_per_user: (1, 5),
            perms_per_role: (1, 10),
            zipf_s: 1.0,
            attr_ratio,
            n_resource_types: 15,
            ra_per_grant: (1, 4),
            ops_per_grant: (1, 2),
            n_accounts: 4,
            pct_temporal: 0.2,
            pct_same_account: 0.1,
            pct_approval: 0.05,
            pct_privileged: 0.2,
            pct_hierarchy: 0.1,
            injected_chains: 0,
            injected_excess: 0,
            seed,
        }
    }

    /// Re-derives the scaled counts for a new user count, keeping every other knob.
    pub fn scaled_to(&self, n_users: usize) -> Self {
        let mut c = self.clone();
        c.n_users = n_users;
        c.n_roles = ((n_users as f64) * self.attr_ratio).ceil() as usize;
        c.n_resources = n_users / 2;
        c
    }

    /// Same policy shape with every constraint switched off.
    pub fn constraint_free(mut self) -> Self {
        self.pct_temporal = 0.0;
        self.pct_same_account = 0.0;
        self.pct_approval = 0.0;
        self
    }

    pub fn has_constraints(&self) -> bool {
        self.pct_temporal > 0.0 || self.pct_same_account > 0.0 || self.pct_approval > 0.0
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::ConfigInvalid(m.to_string()));
        for (name, (lo, hi)) in [
            ("assignments_per_user", self.assignments_per_user),
            ("perms_per_role", self.perms_per_role),
            ("ra_per_grant", self.ra_per_grant),
            ("ops_per_grant", self.ops_per_grant),
        ] {
            if lo == 0 || lo > hi {
                return bad(&format!("{name} must be a non-empty range starting at 1 or more"));
            }
        }
        if !(self.zipf_s > 0.0 && self.zipf_s.is_finite()) {
            return bad("zipf_s must be positive");
        }
        if !(self.attr_ratio > 0.0 && self.attr_ratio.is_finite()) {
            return bad("attr_ratio must be positive");
        }
        for (name, f) in [
            ("pct_temporal", self.pct_temporal),
            ("pct_same_account", self.pct_same_account),
            ("pct_approval", self.pct_approval),
            ("pct_privileged", self.pct_privileged),
            ("pct_hierarchy", self.pct_hierarchy),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        if self.n_accounts == 0 {
            return bad("n_accounts must be at least 1");
        }
        if self.ops_per_grant.1 > 4 {
            return bad("ops_per_grant cannot exceed the 4 grantable operations");
        }
        if self.profile == Profile::Experiment
            && self.n_users > 0
            && (self.n_roles == 0 || self.n_resource_types == 0)
        {
            return bad("users need at least one role and one resource type");
        }
        Ok(())
    }
}
