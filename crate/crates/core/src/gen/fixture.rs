use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::inject::{add_escalation_chain, add_excess};
use super::truth::{PolicyBuilder, Provenance};
use super::{GenError, GroundTruth};
use crate::hypergraph::{tags, ConstraintSpec, PermissionSet, PolicyHypergraph, VertexId};
use crate::query::EvaluationContext;

pub const FIXTURE_ACCOUNT: &str = "acct-dev";
pub const DEFAULT_FIXTURE_EXCESS: usize = 8;

pub fn fixture_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2025, 6, 1, 12, 0, 0).unwrap()
}

pub fn fixture_context() -> EvaluationContext {
    EvaluationContext::new(fixture_time(), FIXTURE_ACCOUNT)
}

const S3_TYPES: [&str; 6] = [
    "S3:Logs",
    "S3:Artifacts",
    "S3:Media",
    "S3:Bucket",
    "S3:Backups",
    "S3:DataLake",
];
const EC2_TYPES: [&str; 8] = [
    "EC2:Web",
    "EC2:Worker",
    "EC2:Batch",
    "EC2:CI",
    "EC2:Bastion",
    "EC2:Cache",
    "EC2:Analytics",
    "EC2:Prod",
];
const PRODUCTION_TYPES: [&str; 3] = ["S3:Backups", "EC2:Prod", "RDS:Prod"];

/// Cloud account scenario: 250 users, 45 roles, 400 resources in 15 resource
/// types, one policy class. Alice's Developer role is chained to PowerUser,
/// which can read and write ProductionDB, and eight team roles hold an
/// extra Write grant.
pub fn make_fixture_usecase() -> (PolicyHypergraph, GroundTruth) {
    make_fixture_with_excess(DEFAULT_FIXTURE_EXCESS).expect("fixture construction")
}

pub fn make_fixture_with_excess(excess: usize) -> Result<(PolicyHypergraph, GroundTruth), GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e_c0de);
    let t0 = fixture_time();
    let mut b = PolicyBuilder::new(fixture_context());
    let acct = FIXTURE_ACCOUNT;
    let pc = b.policy_class("PC:AWS")?;
    let uni = b.policy.universe().clone();
    let set = |names: &[&str]| uni.set_of(names.iter().copied()).expect("fixture permissions");

    let mut ty = std::collections::BTreeMap::new();
    for name in S3_TYPES.iter().chain(EC2_TYPES.iter()).chain(std::iter::once(&"RDS:Prod")) {
        let env = if PRODUCTION_TYPES.contains(name) { "production" } else { "development" };
        ty.insert(*name, b.resource_type(name, acct, tags([("env", env)]))?);
    }
    let env_of = |t: &str| if PRODUCTION_TYPES.contains(&t) { "production" } else { "development" };
    for i in 0..180 {
        let t = S3_TYPES[i % S3_TYPES.len()];
        b.resource(&format!("Bucket{i:03}"), acct, tags([("env", env_of(t)), ("type", t)]), &[ty[t]])?;
    }
    for i in 0..219 {
        let t = EC2_TYPES[i % EC2_TYPES.len()];
        b.resource(&format!("i-{i:04}"), acct, tags([("env", env_of(t)), ("type", t)]), &[ty[t]])?;
    }
    let db = b.resource(
        "ProductionDB",
        acct,
        tags([("env", "production"), ("type", "RDS:Prod")]),
        &[ty["RDS:Prod"]],
    )?;

    let std_tag = || tags([("tier", "standard")]);
    let priv_tag = || tags([("tier", "privileged")]);
    let developer = b.role("Developer", acct, std_tag())?;
    let power = b.role("PowerUser", acct, priv_tag())?;
    let admin = b.role("Admin", acct, priv_tag())?;
    let dba = b.role("DBA", acct, priv_tag())?;
    let sre = b.role("SRE", acct, priv_tag())?;
    let auditor = b.role("Auditor", acct, priv_tag())?;
    let mut teams = Vec::new();
    for i in 1..=39 {
        teams.push(b.role(&format!("Team{i:02}"), acct, std_tag())?);
    }

    // Users: Alice and twelve colleagues on Developer; the privileged roles
    // get two dedicated members each; everyone else sits on team roles.
    let alice = b.user("Alice", acct, Default::default())?;
    b.assign(alice, developer)?;
    let mut users = vec![alice];
    for i in 1..250 {
        users.push(b.user(&format!("user-{i:03}"), acct, Default::default())?);
    }
    let privileged = [power, admin, dba, sre, auditor];
    for (i, &u) in users.iter().enumerate().skip(1) {
        if i <= 12 {
            b.assign(u, developer)?;
            b.assign(u, teams[rng.random_range(0..teams.len())])?;
        } else if i >= 240 {
            b.assign(u, privileged[(i - 240) / 2])?;
            b.assign(u, teams[rng.random_range(0..teams.len())])?;
        } else {
            let k = rng.random_range(1..=3);
            let mut picks = sample(&mut rng, teams.len(), k).into_vec();
            picks.sort_unstable();
            for j in picks {
                b.assign(u, teams[j])?;
            }
        }
    }

    // Intended inheritance: Team01..Team03 inherit Team20..Team22.
    for k in 0..3 {
        b.inherit(teams[k], teams[19 + k], Provenance::Intended)?;
    }

    let intended = Provenance::Intended;
    b.grant(&[developer], &[ty["S3:Bucket"]], pc, set(&["Read"]), vec![], intended)?;
    b.grant(&[developer], &[ty["EC2:CI"]], pc, set(&["Read", "Execute"]), vec![], intended)?;
    b.grant(&[power], &[ty["RDS:Prod"]], pc, set(&["Read", "Write"]), vec![], intended)?;
    b.grant(&[admin], &[ty["EC2:Prod"]], pc, set(&["Read", "Write", "Execute"]), vec![], intended)?;
    b.grant(&[admin], &[ty["S3:Backups"]], pc, set(&["Read", "Write"]), vec![], intended)?;
    b.grant(
        &[admin],
        &[ty["EC2:Prod"]],
        pc,
        set(&["PassRole", "RunInstances"]),
        vec![ConstraintSpec::ApprovalRequired { tag: "change-approval".into() }],
        intended,
    )?;
    b.grant(&[dba], &[ty["RDS:Prod"]], pc, set(&["Read"]), vec![], intended)?;
    // Lapsed emergency access and a live two-hour JIT window.
    b.grant(
        &[dba],
        &[ty["RDS:Prod"]],
        pc,
        set(&["Write", "Delete"]),
        vec![ConstraintSpec::TimeWindow { start: t0 - Duration::hours(5), end: t0 - Duration::hours(3) }],
        intended,
    )?;
    b.grant(
        &[sre],
        &[ty["EC2:Bastion"]],
        pc,
        set(&["Read", "Execute"]),
        vec![ConstraintSpec::TimeWindow { start: t0 - Duration::hours(1), end: t0 + Duration::hours(1) }],
        intended,
    )?;
    b.grant(&[sre], &[ty["EC2:Prod"]], pc, set(&["Read", "Execute"]), vec![], intended)?;
    b.grant(&[auditor], &[ty["S3:Logs"]], pc, set(&["Read", "List"]), vec![], intended)?;

    let dev_types: Vec<VertexId> = S3_TYPES
        .iter()
        .chain(EC2_TYPES.iter())
        .filter(|t| !PRODUCTION_TYPES.contains(t))
        .map(|t| ty[*t])
        .collect();
    let grantable = ["Read", "Execute", "List"];
    for &team in &teams {
        let k = rng.random_range(1..=3);
        for _ in 0..k {
            let t = dev_types[rng.random_range(0..dev_types.len())];
            let op = grantable[rng.random_range(0..grantable.len())];
            b.grant(&[team], &[t], pc, set(&[op]), vec![], intended)?;
        }
    }

    if excess > teams.len() - 29 {
        return Err(GenError::ConfigInvalid(format!(
            "fixture supports at most {} excess grants",
            teams.len() - 29
        )));
    }
    let (mut policy, mut gt) = b.finish();
    add_escalation_chain(&mut policy, &mut gt, alice, developer, power, db)?;

    // Excess Write for team roles outside the inheritance pairs.
    let write = PermissionSet::single(uni.lookup("Write").expect("Write in default universe"));
    for (n, &team) in teams.iter().skip(29).take(excess).enumerate() {
        let t = dev_types[n % dev_types.len()];
        add_excess(&mut policy, &mut gt, team, t, write)?;
    }
    Ok((policy, gt))
}
