use chrono::{Duration, TimeZone, Utc};

use super::*;
use crate::hypergraph::*;

struct Mini {
    p: PolicyHypergraph,
    alice: VertexId,
    dev: VertexId,
    power: VertexId,
    db: VertexId,
    bucket: VertexId,
    pc: VertexId,
    prod: VertexId,
    s3: VertexId,
}

fn mini() -> Mini {
    let mut p = PolicyHypergraph::default();
    let alice = p.add_vertex(VertexKind::User, "Alice", "acct-dev", Tags::new()).unwrap();
    let dev = p.add_vertex(VertexKind::UserAttribute, "Developer", "acct-dev", Tags::new()).unwrap();
    let power = p.add_vertex(VertexKind::UserAttribute, "PowerUser", "acct-dev", Tags::new()).unwrap();
    let prod = p
        .add_vertex(VertexKind::ResourceAttribute, "RDS:Prod", "acct-dev", tags([("env", "production")]))
        .unwrap();
    let s3 = p.add_vertex(VertexKind::ResourceAttribute, "S3:Bucket", "acct-dev", Tags::new()).unwrap();
    let db = p
        .add_vertex(VertexKind::Resource, "ProductionDB", "acct-dev", tags([("env", "production")]))
        .unwrap();
    let bucket = p.add_vertex(VertexKind::Resource, "Bucket123", "acct-dev", Tags::new()).unwrap();
    let pc = p.add_vertex(VertexKind::PolicyClass, "PC:AWS", "", Tags::new()).unwrap();
    p.add_assignment(alice, dev).unwrap();
    p.add_assignment(db, prod).unwrap();
    p.add_assignment(bucket, s3).unwrap();
    let read = p.universe().set_of(["Read"]).unwrap();
    let rw = p.universe().set_of(["Read", "Write"]).unwrap();
    p.add_association(&[dev], &[s3], pc, read, vec![]).unwrap();
    p.add_association(&[power], &[prod], pc, rw, vec![]).unwrap();
    Mini { p, alice, dev, power, db, bucket, pc, prod, s3 }
}

fn ctx() -> EvaluationContext {
    EvaluationContext::new(Utc.with_ymd_and_hms(2025, 6, 1, 12, 0, 0).unwrap(), "acct-dev")
}

fn op(p: &PolicyHypergraph, name: &str) -> Permission {
    p.universe().lookup(name).unwrap()
}

fn q(m: &Mini, name: &str, r: VertexId) -> PrivilegeQuery {
    PrivilegeQuery::new(m.alice, op(&m.p, name), r, ctx())
}

#[test]
fn direct_grant_has_two_plus_hop_witness() {
    let m = mini();
    let d = check_privilege(&m.p, &q(&m, "Read", m.bucket), 8).unwrap();
    assert!(d.allowed);
    let w = d.witness.unwrap();
    assert_eq!(w.vertices, vec![m.alice, m.dev, m.s3, m.bucket]);
    validate_path(&m.p, &q(&m, "Read", m.bucket), &w, 8).unwrap();
    assert!(d.traversal_ops > 0);
    assert!(!check_privilege(&m.p, &q(&m, "Write", m.bucket), 8).unwrap().allowed);
}

#[test]
fn chaining_reaches_production() {
    let mut m = mini();
    assert!(!check_privilege(&m.p, &q(&m, "Read", m.db), 8).unwrap().allowed);
    let chain = m.p.add_assignment(m.dev, m.power).unwrap();
    let d = check_privilege(&m.p, &q(&m, "Read", m.db), 8).unwrap();
    let w = d.witness.unwrap();
    assert_eq!(w.vertices, vec![m.alice, m.dev, m.power, m.prod, m.db]);
    assert_eq!(w.render(&m.p), format!("Alice -e0-> Developer -{chain}-> PowerUser -e4-> RDS:Prod -e1-> ProductionDB"));
    // Depth budget excludes the 4-hop path.
    assert!(!check_privilege(&m.p, &q(&m, "Read", m.db), 3).unwrap().allowed);
    assert_eq!(
        check_privilege(&m.p, &q(&m, "Read", m.db), 0),
        Err(QueryError::InvalidDepth)
    );

    let f = detect_escalations(&m.p, &TagFilter::parse("env=production").unwrap(), &ctx(), 8);
    assert_eq!(f.len(), 1);
    assert_eq!(f[0].user, m.alice);
    assert_eq!(f[0].target, m.db);
    assert_eq!(f[0].chained_attributes, vec![m.dev, m.power]);
    assert!(f[0].remediation.contains("Developer -> PowerUser"));
    let line = escalation_line(&m.p, &f[0]);
    assert!(line.starts_with(r#"{"kind":"escalation","subject":0"#));

    m.p.remove_hyperedge(chain).unwrap();
    assert!(detect_escalations(&m.p, &TagFilter::parse("env=production").unwrap(), &ctx(), 8).is_empty());
}

#[test]
fn escalation_ignores_access_already_held_directly() {
    let mut m = mini();
    m.p.add_assignment(m.dev, m.power).unwrap();
    m.p.add_assignment(m.alice, m.power).unwrap();
    let f = detect_escalations(&m.p, &TagFilter::parse("env=production").unwrap(), &ctx(), 8);
    assert!(f.is_empty());
}

#[test]
fn empty_policy_denies() {
    let mut p = PolicyHypergraph::default();
    let u = p.add_vertex(VertexKind::User, "u", "a", Tags::new()).unwrap();
    let r = p.add_vertex(VertexKind::Resource, "r", "a", Tags::new()).unwrap();
    let d = check_privilege(&p, &PrivilegeQuery::new(u, Permission(0), r, ctx()), 8).unwrap();
    assert!(!d.allowed && d.witness.is_none());
    assert!(effective_permissions(&p, u, r, &ctx(), 8).unwrap().is_empty());
}

#[test]
fn query_errors() {
    let m = mini();
    let bad = PrivilegeQuery::new(VertexId(999), Permission(0), m.db, ctx());
    assert_eq!(check_privilege(&m.p, &bad, 8), Err(QueryError::UnknownVertex(VertexId(999))));
    let wrong = PrivilegeQuery::new(m.dev, Permission(0), m.db, ctx());
    assert!(matches!(check_privilege(&m.p, &wrong, 8), Err(QueryError::WrongKind { .. })));
    let perm = PrivilegeQuery::new(m.alice, Permission(40), m.db, ctx());
    assert!(matches!(check_privilege(&m.p, &perm, 8), Err(QueryError::UnknownPermission(_))));
    assert!(matches!(
        PrivilegeQuery::by_name(&m.p, "Alice", "Fly", "ProductionDB", ctx()),
        Err(QueryError::UnknownPermission(_))
    ));
}

#[test]
fn deactivation_and_removal_revoke() {
    let mut m = mini();
    let e1 = m.p.incident_edges(m.alice, false).unwrap().into_iter().next().unwrap();
    m.p.set_active(e1, false).unwrap();
    assert!(!check_privilege(&m.p, &q(&m, "Read", m.bucket), 8).unwrap().allowed);
    m.p.set_active(e1, true).unwrap();
    assert!(check_privilege(&m.p, &q(&m, "Read", m.bucket), 8).unwrap().allowed);
    let e2 = m.p.incident_edges(m.s3, false).unwrap().into_iter().find(|e| m.p.edge(*e).unwrap().is_association()).unwrap();
    m.p.remove_hyperedge(e2).unwrap();
    assert!(!check_privilege(&m.p, &q(&m, "Read", m.bucket), 8).unwrap().allowed);
}

#[test]
fn time_window_is_inclusive() {
    let mut m = mini();
    let t0 = ctx().timestamp;
    let rw = m.p.universe().set_of(["Read", "Write"]).unwrap();
    let jit = m
        .p
        .add_association(
            &[m.dev],
            &[m.prod],
            m.pc,
            rw,
            vec![ConstraintSpec::TimeWindow { start: t0, end: t0 + Duration::hours(2) }],
        )
        .unwrap();
    let at = |t| PrivilegeQuery::new(m.alice, op(&m.p, "Write"), m.db, EvaluationContext::new(t, "acct-dev"));
    assert!(check_privilege(&m.p, &at(t0 + Duration::hours(1)), 8).unwrap().allowed);
    assert!(check_privilege(&m.p, &at(t0 + Duration::hours(2)), 8).unwrap().allowed);
    assert!(!check_privilege(&m.p, &at(t0 + Duration::hours(3)), 8).unwrap().allowed);
    assert!(!check_privilege(&m.p, &at(t0 - Duration::seconds(1)), 8).unwrap().allowed);

    let report = attack_window_report(&m.p, t0 + Duration::hours(3), Duration::hours(1));
    assert_eq!(report.expired, vec![jit]);
    let report = attack_window_report(&m.p, t0 + Duration::hours(1), Duration::hours(2));
    assert_eq!(report.expiring, vec![jit]);
    assert!(report.expired.is_empty());
    let boundary = attack_window_report(&m.p, t0 + Duration::hours(2) + Duration::seconds(1), Duration::zero());
    assert_eq!(boundary.expired, vec![jit]);

    assert_eq!(revoke_expired(&mut m.p, t0 + Duration::hours(3)), 1);
    assert_eq!(revoke_expired(&mut m.p, t0 + Duration::hours(3)), 0);
    assert!(m.p.edge(jit).is_none());
}

#[test]
fn approval_and_account_constraints() {
    let mut m = mini();
    let w = m.p.universe().set_of(["Delete"]).unwrap();
    m.p.add_association(
        &[m.dev],
        &[m.s3],
        m.pc,
        w,
        vec![ConstraintSpec::ApprovalRequired { tag: "cab".into() }, ConstraintSpec::SameAccount],
    )
    .unwrap();
    let base = q(&m, "Delete", m.bucket);
    assert!(!check_privilege(&m.p, &base, 8).unwrap().allowed);
    let mut approved = base.clone();
    approved.ctx = approved.ctx.with_approval("cab");
    assert!(check_privilege(&m.p, &approved, 8).unwrap().allowed);
    approved.ctx.acting_account = "acct-prod".into();
    assert!(!check_privilege(&m.p, &approved, 8).unwrap().allowed);
}

#[test]
fn co_membership_is_an_intersection() {
    let mut p = PolicyHypergraph::default();
    let u = p.add_vertex(VertexKind::User, "u", "a", Tags::new()).unwrap();
    let ua1 = p.add_vertex(VertexKind::UserAttribute, "ua1", "a", Tags::new()).unwrap();
    let ua2 = p.add_vertex(VertexKind::UserAttribute, "ua2", "a", Tags::new()).unwrap();
    let r = p.add_vertex(VertexKind::Resource, "r", "a", Tags::new()).unwrap();
    let ra = p.add_vertex(VertexKind::ResourceAttribute, "ra", "a", Tags::new()).unwrap();
    let pc = p.add_vertex(VertexKind::PolicyClass, "pc", "", Tags::new()).unwrap();
    let full = p.universe().full();
    assert_eq!(co_membership_permissions(&p, u, r).unwrap(), full);
    let read = p.universe().set_of(["Read"]).unwrap();
    let rw = p.universe().set_of(["Read", "Write"]).unwrap();
    p.add_grant(&[u, ua1, ua2], &[r, ra], pc, read, vec![]).unwrap();
    assert_eq!(co_membership_permissions(&p, u, r).unwrap(), read);
    p.add_grant(&[u, ua1], &[r, ra], pc, rw, vec![]).unwrap();
    assert_eq!(co_membership_permissions(&p, u, r).unwrap(), read);
    // The path semantics take the union instead.
    assert_eq!(effective_permissions(&p, u, r, &ctx(), 8).unwrap(), rw);
    assert_eq!(permissions_by_query(&p, u, r, &ctx(), 8).unwrap(), rw);
}

#[test]
fn find_paths_lists_all_routes_shortest_first() {
    let mut m = mini();
    m.p.add_assignment(m.dev, m.power).unwrap();
    let read = m.p.universe().set_of(["Read"]).unwrap();
    m.p.add_association(&[m.dev], &[m.prod], m.pc, read, vec![]).unwrap();
    let set = find_access_paths(&m.p, &q(&m, "Read", m.db), 8, 10).unwrap();
    assert_eq!(set.paths.len(), 2);
    assert!(!set.truncated);
    assert!(set.paths[0].len() < set.paths[1].len());
    for p in &set.paths {
        validate_path(&m.p, &q(&m, "Read", m.db), p, 8).unwrap();
    }
    let one = find_access_paths(&m.p, &q(&m, "Read", m.db), 8, 1).unwrap();
    assert!(one.truncated && one.paths.len() == 1);
    assert_eq!(one.paths[0], check_privilege(&m.p, &q(&m, "Read", m.db), 8).unwrap().witness.unwrap());
}

#[test]
fn over_privilege_reports_exact_excess() {
    let m = mini();
    let mut req = RequiredPermissions::default();
    let read = m.p.universe().set_of(["Read"]).unwrap();
    req.require(m.dev, m.bucket, read);
    assert!(detect_over_privileged(&m.p, &req, &ctx(), 8).unwrap().is_empty());

    let mut req = RequiredPermissions::default();
    req.require(m.power, m.db, read);
    let f = detect_over_privileged(&m.p, &req, &ctx(), 8).unwrap();
    assert_eq!(f.len(), 1);
    assert_eq!(f[0].excess[&m.db], m.p.universe().set_of(["Write"]).unwrap());
    assert!(over_privilege_line(&m.p, &f[0]).contains(r#""permissions":["Write"]"#));

    let mut bad = RequiredPermissions::default();
    bad.declare(VertexId(500));
    assert!(matches!(
        detect_over_privileged(&m.p, &bad, &ctx(), 8),
        Err(QueryError::GroundTruthMismatch(_))
    ));
}

#[test]
fn tag_filter_parsing() {
    assert!(TagFilter::parse("env").is_err());
    assert!(TagFilter::parse("=x").is_err());
    assert_eq!(TagFilter::parse("env=production").unwrap().value, "production");
}
