use chrono::{Duration, TimeZone, Utc};

use super::*;
use crate::hypergraph::*;
use crate::query::{check_privilege, EvaluationContext};

fn ctx() -> EvaluationContext {
    EvaluationContext::new(Utc.with_ymd_and_hms(2025, 6, 1, 12, 0, 0).unwrap(), "acct-dev")
}

struct Chain {
    p: PolicyHypergraph,
    alice: VertexId,
    dev: VertexId,
    power: VertexId,
    prod: VertexId,
    db: VertexId,
    pc: VertexId,
}

fn chain() -> Chain {
    let mut p = PolicyHypergraph::default();
    let alice = p.add_vertex(VertexKind::User, "Alice", "acct-dev", Tags::new()).unwrap();
    let dev = p.add_vertex(VertexKind::UserAttribute, "Developer", "acct-dev", Tags::new()).unwrap();
    let power = p.add_vertex(VertexKind::UserAttribute, "PowerUser", "acct-dev", Tags::new()).unwrap();
    let prod = p.add_vertex(VertexKind::ResourceAttribute, "RDS:Prod", "acct-dev", Tags::new()).unwrap();
    let db = p.add_vertex(VertexKind::Resource, "ProductionDB", "acct-dev", Tags::new()).unwrap();
    let pc = p.add_vertex(VertexKind::PolicyClass, "PC:AWS", "", Tags::new()).unwrap();
    p.add_assignment(alice, dev).unwrap();
    p.add_assignment(dev, power).unwrap();
    p.add_assignment(db, prod).unwrap();
    let rw = p.universe().set_of(["Read", "Write"]).unwrap();
    p.add_association(&[power], &[prod], pc, rw, vec![]).unwrap();
    Chain { p, alice, dev, power, prod, db, pc }
}

fn query(c: &Chain, op: &str) -> PrivilegeQuery {
    PrivilegeQuery::new(c.alice, c.p.universe().lookup(op).unwrap(), c.db, ctx())
}

#[test]
fn abac_flattens_attribute_closure() {
    let c = chain();
    let g = build_abac(&c.p);
    assert_eq!(g.tags_of(c.alice), &[c.dev, c.power]);
    assert_eq!(g.grants().len(), 1);
    assert_eq!(g.edge_count(), 3);
    assert!(abac_check(&g, &query(&c, "Read")).unwrap().allowed);
    assert!(!abac_check(&g, &query(&c, "Delete")).unwrap().allowed);
}

#[test]
fn abac_without_associations_denies_everything() {
    let mut c = chain();
    let assoc = c.p.incidence(c.prod).associations.iter().next().copied().unwrap();
    c.p.remove_hyperedge(assoc).unwrap();
    let g = build_abac(&c.p);
    assert!(g.grants().is_empty());
    assert_eq!(g.user_tag_edges(), 2);
    assert!(!abac_check(&g, &query(&c, "Read")).unwrap().allowed);
}

#[test]
fn untagged_user_is_denied() {
    let mut c = chain();
    let bob = c.p.add_vertex(VertexKind::User, "Bob", "acct-dev", Tags::new()).unwrap();
    let g = build_abac(&c.p);
    assert!(g.tags_of(bob).is_empty());
    let mut q = query(&c, "Read");
    q.user = bob;
    assert!(!abac_check(&g, &q).unwrap().allowed);
    q.user = c.dev;
    assert_eq!(abac_check(&g, &q), Err(QueryError::UnknownVertex(c.dev)));
}

#[test]
fn dag_allows_the_chain_and_rejects_cycles() {
    let mut c = chain();
    let d = build_dag(&c.p).unwrap();
    assert!(dag_check(&d, &query(&c, "Read")).unwrap().allowed);
    assert!(!dag_check(&d, &query(&c, "Execute")).unwrap().allowed);
    assert_eq!(d.associations().len(), 1);
    c.p.add_assignment(c.power, c.dev).unwrap();
    assert!(matches!(build_dag(&c.p), Err(BaselineError::CycleDetected(v)) if v.contains(&c.dev)));
}

#[test]
fn expired_window_separates_the_models() {
    let mut c = chain();
    let t = ctx().timestamp;
    let w = c.p.universe().set_of(["Delete"]).unwrap();
    c.p.add_association(
        &[c.dev],
        &[c.prod],
        c.pc,
        w,
        vec![ConstraintSpec::TimeWindow { start: t - Duration::hours(3), end: t - Duration::hours(1) }],
    )
    .unwrap();
    let q = query(&c, "Delete");
    assert!(!check_privilege(&c.p, &q, 8).unwrap().allowed);
    assert!(dag_check(&build_dag(&c.p).unwrap(), &q).unwrap().allowed);
    assert!(abac_check(&build_abac(&c.p), &q).unwrap().allowed);
}

#[test]
fn same_account_kept_by_dag_dropped_by_abac() {
    let mut c = chain();
    let x = c.p.universe().set_of(["Execute"]).unwrap();
    c.p.add_association(&[c.dev], &[c.prod], c.pc, x, vec![ConstraintSpec::SameAccount]).unwrap();
    let mut q = query(&c, "Execute");
    q.ctx.acting_account = "acct-other".into();
    assert!(!check_privilege(&c.p, &q, 8).unwrap().allowed);
    assert!(!dag_check(&build_dag(&c.p).unwrap(), &q).unwrap().allowed);
    assert!(abac_check(&build_abac(&c.p), &q).unwrap().allowed);
}

#[test]
fn detect_all_totals_and_errors() {
    let c = chain();
    let q = query(&c, "Read");
    for kind in ModelKind::ALL {
        let run = detect_all(kind, &c.p, std::slice::from_ref(&q)).unwrap();
        let model = build_model(kind, &c.p).unwrap();
        assert_eq!(run.decisions, vec![true]);
        assert_eq!(run.total_traversal_ops, model.check(&q).unwrap().traversal_ops);
        assert_eq!(detect_all(kind, &c.p, &[]), Err(BaselineError::EmptyWorkload));
    }
    assert_eq!("ngac-dag".parse::<ModelKind>(), Ok(ModelKind::Dag));
    assert!("graph".parse::<ModelKind>().is_err());
    let _ = c.power;
}
