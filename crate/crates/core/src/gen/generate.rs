use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::inject::{inject_escalation_chain, inject_excess};
use super::truth::{PolicyBuilder, Provenance};
use super::{GenConfig, GenError, GroundTruth, Profile, Zipf};
use crate::hypergraph::{
    tags, ConstraintSpec, Permission, PermissionSet, PolicyHypergraph, VertexId,
};
use crate::query::EvaluationContext;

// One ChaCha stream per entity class, so resizing one class leaves the
// others' draws unchanged.
pub(crate) const STREAM_USERS: u64 = 1;
pub(crate) const STREAM_ROLES: u64 = 2;
pub(crate) const STREAM_RESOURCES: u64 = 3;
pub(crate) const STREAM_GRANTS: u64 = 4;
pub(crate) const STREAM_CONSTRAINTS: u64 = 5;
pub(crate) const STREAM_INJECT: u64 = 6;
pub(crate) const STREAM_WORKLOAD: u64 = 7;
pub(crate) const STREAM_HIERARCHY: u64 = 8;

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Evaluation instant used by generated policies.
pub fn base_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2025, 1, 1, 12, 0, 0).unwrap()
}

pub fn base_context() -> EvaluationContext {
    EvaluationContext::new(base_time(), "acct-0")
}

pub const APPROVAL_TAG: &str = "change-approval";

/// Grants draw operations from the first four universe entries
/// (Read, Write, Execute, List).
const GRANTABLE: u32 = 4;

struct ConstraintRoller {
    rng: ChaCha8Rng,
    temporal: f64,
    same_account: f64,
    approval: f64,
    now: DateTime<Utc>,
}

impl ConstraintRoller {
    fn new(cfg: &GenConfig) -> Self {
        ConstraintRoller {
            rng: stream(cfg.seed, STREAM_CONSTRAINTS),
            temporal: cfg.pct_temporal,
            same_account: cfg.pct_same_account,
            approval: cfg.pct_approval,
            now: base_time(),
        }
    }

    fn roll(&mut self) -> Vec<ConstraintSpec> {
        let mut cs = Vec::new();
        if self.temporal > 0.0 && self.rng.random_bool(self.temporal) {
            // Half the windows are live at the evaluation instant, half have lapsed.
            let (start, end) = if self.rng.random_bool(0.5) {
                (self.now - Duration::hours(1), self.now + Duration::hours(1))
            } else {
                (self.now - Duration::hours(26), self.now - Duration::hours(2))
            };
            cs.push(ConstraintSpec::TimeWindow { start, end });
        }
        if self.same_account > 0.0 && self.rng.random_bool(self.same_account) {
            cs.push(ConstraintSpec::SameAccount);
        }
        if self.approval > 0.0 && self.rng.random_bool(self.approval) {
            cs.push(ConstraintSpec::ApprovalRequired { tag: APPROVAL_TAG.to_string() });
        }
        cs
    }
}

fn pick_sorted<R: Rng + ?Sized>(rng: &mut R, len: usize, amount: usize) -> Vec<usize> {
    let mut v = sample(rng, len, amount.min(len)).into_vec();
    v.sort_unstable();
    v
}

fn random_ops<R: Rng + ?Sized>(rng: &mut R, range: (u32, u32)) -> PermissionSet {
    let count = rng.random_range(range.0..=range.1).min(GRANTABLE) as usize;
    pick_sorted(rng, GRANTABLE as usize, count)
        .into_iter()
        .map(|i| Permission(i as u8))
        .collect()
}

/// Seeded synthetic policy plus its ground truth.
pub fn generate(cfg: &GenConfig) -> Result<(PolicyHypergraph, GroundTruth), GenError> {
    cfg.validate()?;
    let (mut policy, mut truth) = match cfg.profile {
        Profile::Experiment => experiment_profile(cfg)?,
        Profile::SqrtGrouping => sqrt_grouping(cfg)?,
    };
    let mut rng = stream(cfg.seed, STREAM_INJECT);
    for _ in 0..cfg.injected_chains {
        inject_escalation_chain(&mut policy, &mut truth, &mut rng)?;
    }
    for _ in 0..cfg.injected_excess {
        inject_excess(&mut policy, &mut truth, &mut rng)?;
    }
    Ok((policy, truth))
}

fn accounts(cfg: &GenConfig) -> Vec<String> {
    (0..cfg.n_accounts).map(|i| format!("acct-{i}")).collect()
}

fn env_of(i: usize) -> &'static str {
    // Every third resource type holds production assets.
    if i % 3 == 0 {
        "production"
    } else {
        "development"
    }
}

fn add_users<R: Rng>(
    b: &mut PolicyBuilder,
    rng: &mut R,
    cfg: &GenConfig,
    accts: &[String],
    roles: &[VertexId],
) -> Result<(), GenError> {
    let mut users = Vec::with_capacity(cfg.n_users);
    let mut has_member = vec![false; roles.len()];
    for i in 0..cfg.n_users {
        let acct = &accts[rng.random_range(0..accts.len())];
        let u = b.user(&format!("user-{i:05}"), acct, Default::default())?;
        users.push(u);
        if roles.is_empty() {
            continue;
        }
        let (lo, hi) = cfg.assignments_per_user;
        let k = rng.random_range(lo..=hi) as usize;
        for j in pick_sorted(rng, roles.len(), k) {
            b.assign(u, roles[j])?;
            has_member[j] = true;
        }
    }
    if !users.is_empty() {
        for (j, &role) in roles.iter().enumerate() {
            if !has_member[j] {
                let u = users[rng.random_range(0..users.len())];
                b.assign(u, role)?;
            }
        }
    }
    Ok(())
}

fn add_resources<R: Rng>(
    b: &mut PolicyBuilder,
    rng: &mut R,
    n: usize,
    types: &[(VertexId, String, &'static str, String)],
) -> Result<(), GenError> {
    if types.is_empty() {
        return Ok(());
    }
    for i in 0..n {
        let t = rng.random_range(0..types.len());
        let (ra, name, env, acct) = &types[t];
        b.resource(
            &format!("res-{i:05}"),
            acct,
            tags([("env", env), ("type", name)]),
            &[*ra],
        )?;
    }
    Ok(())
}

fn experiment_profile(cfg: &GenConfig) -> Result<(PolicyHypergraph, GroundTruth), GenError> {
    let accts = accounts(cfg);
    let mut b = PolicyBuilder::new(base_context());
    let pc = b.policy_class("PC:AWS")?;

    let mut types = Vec::with_capacity(cfg.n_resource_types);
    for i in 0..cfg.n_resource_types {
        let name = format!("rt-{i:02}");
        let acct = accts[i % accts.len()].clone();
        let env = env_of(i);
        let ra = b.resource_type(&name, &acct, tags([("env", env)]))?;
        types.push((ra, name, env, acct));
    }
    add_resources(&mut b, &mut stream(cfg.seed, STREAM_RESOURCES), cfg.n_resources, &types)?;

    let mut rng = stream(cfg.seed, STREAM_ROLES);
    let mut tiers: Vec<bool> = Vec::with_capacity(cfg.n_roles);
    let mut role_accts = Vec::with_capacity(cfg.n_roles);
    for _ in 0..cfg.n_roles {
        tiers.push(cfg.pct_privileged > 0.0 && rng.random_bool(cfg.pct_privileged));
        role_accts.push(accts[rng.random_range(0..accts.len())].clone());
    }
    if cfg.n_roles >= 2 {
        if !tiers.iter().any(|&t| t) && cfg.pct_privileged > 0.0 {
            *tiers.last_mut().unwrap() = true;
        }
        if tiers.iter().all(|&t| t) {
            tiers[0] = false;
        }
    }
    let mut roles = Vec::with_capacity(cfg.n_roles);
    for i in 0..cfg.n_roles {
        let tier = if tiers[i] { "privileged" } else { "standard" };
        roles.push(b.role(&format!("role-{i:04}"), &role_accts[i], tags([("tier", tier)]))?);
    }

    // Two-level intended hierarchy among standard roles.
    let mut rng = stream(cfg.seed, STREAM_HIERARCHY);
    let standard: Vec<usize> = (0..roles.len()).filter(|&i| !tiers[i]).collect();
    let mut junior = vec![false; roles.len()];
    let mut senior = vec![false; roles.len()];
    if cfg.pct_hierarchy > 0.0 && standard.len() >= 2 {
        for &i in &standard {
            if senior[i] || !rng.random_bool(cfg.pct_hierarchy) {
                continue;
            }
            let candidates: Vec<usize> =
                standard.iter().copied().filter(|&j| j != i && !junior[j]).collect();
            if candidates.is_empty() {
                continue;
            }
            let j = candidates[rng.random_range(0..candidates.len())];
            b.inherit(roles[i], roles[j], Provenance::Intended)?;
            junior[i] = true;
            senior[j] = true;
        }
    }

    add_users(&mut b, &mut stream(cfg.seed, STREAM_USERS), cfg, &accts, &roles)?;

    let mut rng = stream(cfg.seed, STREAM_GRANTS);
    let mut roller = ConstraintRoller::new(cfg);
    let zipf = Zipf::new(cfg.perms_per_role.1 - cfg.perms_per_role.0 + 1, cfg.zipf_s);
    let all: Vec<VertexId> = types.iter().map(|t| t.0).collect();
    let dev: Vec<VertexId> = types.iter().filter(|t| t.2 != "production").map(|t| t.0).collect();
    for (i, &role) in roles.iter().enumerate() {
        let pool = if tiers[i] || dev.is_empty() { &all } else { &dev };
        if pool.is_empty() {
            continue;
        }
        let k = cfg.perms_per_role.0 - 1 + zipf.sample(&mut rng);
        for _ in 0..k {
            let m = rng.random_range(cfg.ra_per_grant.0..=cfg.ra_per_grant.1) as usize;
            let ras: Vec<VertexId> = pick_sorted(&mut rng, pool.len(), m).into_iter().map(|j| pool[j]).collect();
            let perms = random_ops(&mut rng, cfg.ops_per_grant);
            b.grant(&[role], &ras, pc, perms, roller.roll(), Provenance::Intended)?;
        }
    }
    Ok(b.finish())
}

fn sqrt_grouping(cfg: &GenConfig) -> Result<(PolicyHypergraph, GroundTruth), GenError> {
    let accts = accounts(cfg);
    let g = ((cfg.n_users as f64).sqrt().ceil() as usize).max(1);
    let mut b = PolicyBuilder::new(base_context());
    let mut pcs = Vec::with_capacity(g);
    for k in 0..g {
        pcs.push(b.policy_class(&format!("PC-{k:03}"))?);
    }
    let mut types = Vec::with_capacity(g);
    for j in 0..g {
        let name = format!("rg-{j:03}");
        let acct = accts[j % accts.len()].clone();
        let env = env_of(j);
        let ra = b.resource_type(&name, &acct, tags([("env", env)]))?;
        types.push((ra, name, env, acct));
    }
    add_resources(&mut b, &mut stream(cfg.seed, STREAM_RESOURCES), cfg.n_resources, &types)?;
    let mut rng = stream(cfg.seed, STREAM_ROLES);
    let mut roles = Vec::with_capacity(g);
    for i in 0..g {
        let acct = &accts[rng.random_range(0..accts.len())];
        roles.push(b.role(&format!("ug-{i:03}"), acct, Default::default())?);
    }
    add_users(&mut b, &mut stream(cfg.seed, STREAM_USERS), cfg, &accts, &roles)?;

    let mut rng = stream(cfg.seed, STREAM_GRANTS);
    let mut roller = ConstraintRoller::new(cfg);
    for &pc in &pcs {
        for &role in &roles {
            for t in &types {
                let perms = random_ops(&mut rng, cfg.ops_per_grant);
                b.grant(&[role], &[t.0], pc, perms, roller.roll(), Provenance::Intended)?;
            }
        }
    }
    Ok(b.finish())
}
