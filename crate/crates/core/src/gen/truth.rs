use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::GenError;
use crate::hypergraph::{
    ConstraintSpec, HyperedgeId, Permission, PermissionSet, PolicyHypergraph, Tags, VertexId,
    VertexKind,
};
use crate::query::{EvaluationContext, RequiredPermissions};

/// Why a policy element exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Intended,
    /// Part of the injected escalation chain with this index.
    Chain(usize),
    /// The injected excess grant with this index.
    Excess(usize),
}

impl Provenance {
    pub fn is_intended(self) -> bool {
        self == Provenance::Intended
    }
}

#[derive(Debug, Clone)]
pub(crate) struct RefGrant {
    pub edge: HyperedgeId,
    pub subjects: Vec<VertexId>,
    pub objects: Vec<VertexId>,
    pub perms: PermissionSet,
    pub constraints: Vec<ConstraintSpec>,
    pub account: Option<String>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainDescriptor {
    pub user: VertexId,
    pub lower: VertexId,
    pub upper: VertexId,
    pub target: VertexId,
    pub assignment: HyperedgeId,
    /// Association added for the upper role when it had no grant on the target.
    pub association: Option<HyperedgeId>,
    /// `user, lower, upper, resource attribute, target`.
    pub path: Vec<VertexId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExcessDescriptor {
    pub role: VertexId,
    pub resource_attr: VertexId,
    pub permissions: PermissionSet,
    pub association: HyperedgeId,
}

/// Reference model recorded while a policy is generated, plus the labels of
/// every injected violation.
///
/// The reference keeps the generator's own view (memberships, role hierarchy,
/// grants and resource types with provenance) and answers access questions
/// without touching the hypergraph engine.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub context: EvaluationContext,
    pub chains: Vec<ChainDescriptor>,
    pub excess: Vec<ExcessDescriptor>,
    pub(crate) users: Vec<VertexId>,
    pub(crate) roles: Vec<VertexId>,
    pub(crate) resources: Vec<VertexId>,
    memberships: HashMap<VertexId, Vec<(VertexId, Provenance)>>,
    seniors: HashMap<VertexId, Vec<(VertexId, Provenance)>>,
    juniors: HashMap<VertexId, Vec<VertexId>>,
    pub(crate) grants: Vec<RefGrant>,
    grants_by_subject: HashMap<VertexId, Vec<usize>>,
    types_of: HashMap<VertexId, Vec<VertexId>>,
    members_of_type: HashMap<VertexId, Vec<VertexId>>,
}

impl GroundTruth {
    pub fn new(context: EvaluationContext) -> Self {
        GroundTruth {
            context,
            chains: Vec::new(),
            excess: Vec::new(),
            users: Vec::new(),
            roles: Vec::new(),
            resources: Vec::new(),
            memberships: HashMap::new(),
            seniors: HashMap::new(),
            juniors: HashMap::new(),
            grants: Vec::new(),
            grants_by_subject: HashMap::new(),
            types_of: HashMap::new(),
            members_of_type: HashMap::new(),
        }
    }

    pub fn users(&self) -> &[VertexId] {
        &self.users
    }

    pub fn roles(&self) -> &[VertexId] {
        &self.roles
    }

    pub fn resources(&self) -> &[VertexId] {
        &self.resources
    }

    pub(crate) fn note_user(&mut self, u: VertexId) {
        self.users.push(u);
    }

    pub(crate) fn note_role(&mut self, r: VertexId) {
        self.roles.push(r);
    }

    pub(crate) fn note_resource(&mut self, r: VertexId, types: &[VertexId]) {
        self.resources.push(r);
        self.types_of.insert(r, types.to_vec());
        for t in types {
            self.members_of_type.entry(*t).or_default().push(r);
        }
    }

    pub(crate) fn note_membership(&mut self, user: VertexId, role: VertexId, p: Provenance) {
        self.memberships.entry(user).or_default().push((role, p));
    }

    pub(crate) fn note_hierarchy(&mut self, lower: VertexId, upper: VertexId, p: Provenance) {
        self.seniors.entry(lower).or_default().push((upper, p));
        self.juniors.entry(upper).or_default().push(lower);
    }

    pub(crate) fn note_grant(&mut self, g: RefGrant) {
        let idx = self.grants.len();
        for s in &g.subjects {
            self.grants_by_subject.entry(*s).or_default().push(idx);
        }
        self.grants.push(g);
    }

    pub fn direct_roles(&self, user: VertexId) -> Vec<VertexId> {
        self.memberships
            .get(&user)
            .map(|v| v.iter().map(|(r, _)| *r).collect())
            .unwrap_or_default()
    }

    pub fn members_of(&self, role: VertexId) -> Vec<VertexId> {
        let mut out: Vec<VertexId> = self
            .memberships
            .iter()
            .filter(|(_, rs)| rs.iter().any(|(r, _)| *r == role))
            .map(|(u, _)| *u)
            .collect();
        out.sort();
        out
    }

    pub fn has_juniors(&self, role: VertexId) -> bool {
        self.juniors.get(&role).is_some_and(|v| !v.is_empty())
    }

    pub fn resources_of_type(&self, ra: VertexId) -> &[VertexId] {
        self.members_of_type.get(&ra).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Roles reachable from `start` (itself included) through hierarchy edges
    /// admitted by `include`.
    fn role_closure(&self, start: &[VertexId], include: &dyn Fn(Provenance) -> bool) -> Vec<VertexId> {
        let mut seen: Vec<VertexId> = start.to_vec();
        let mut i = 0;
        while i < seen.len() {
            let v = seen[i];
            i += 1;
            for &(up, p) in self.seniors.get(&v).into_iter().flatten() {
                if include(p) && !seen.contains(&up) {
                    seen.push(up);
                }
            }
        }
        seen
    }

    fn subject_closure(&self, user: VertexId, include: &dyn Fn(Provenance) -> bool) -> Vec<VertexId> {
        let mut start = vec![user];
        for &(r, p) in self.memberships.get(&user).into_iter().flatten() {
            if include(p) && !start.contains(&r) {
                start.push(r);
            }
        }
        self.role_closure(&start, include)
    }

    fn grant_holds(&self, g: &RefGrant) -> bool {
        g.constraints.iter().all(|c| match c {
            ConstraintSpec::SameAccount => g.account.as_deref() == Some(self.context.acting_account.as_str()),
            ConstraintSpec::TimeWindow { start, end } => {
                *start <= self.context.timestamp && self.context.timestamp <= *end
            }
            ConstraintSpec::ApprovalRequired { tag } => self.context.approvals.contains(tag),
        })
    }

    fn grant_covers(&self, g: &RefGrant, resource: VertexId) -> bool {
        if g.objects.contains(&resource) {
            return true;
        }
        self.types_of
            .get(&resource)
            .is_some_and(|ts| ts.iter().any(|t| g.objects.contains(t)))
    }

    fn permissions_from(
        &self,
        subjects: &[VertexId],
        resource: VertexId,
        include: &dyn Fn(Provenance) -> bool,
    ) -> PermissionSet {
        let mut acc = PermissionSet::empty();
        for s in subjects {
            for &gi in self.grants_by_subject.get(s).into_iter().flatten() {
                let g = &self.grants[gi];
                if include(g.provenance) && self.grant_holds(g) && self.grant_covers(g, resource) {
                    acc = acc | g.perms;
                }
            }
        }
        acc
    }

    /// Permissions the user holds on the resource through intended elements only.
    pub fn intended_permissions(&self, user: VertexId, resource: VertexId) -> PermissionSet {
        let f = |p: Provenance| p.is_intended();
        self.permissions_from(&self.subject_closure(user, &f), resource, &f)
    }

    /// Permissions including injected elements.
    pub fn actual_permissions(&self, user: VertexId, resource: VertexId) -> PermissionSet {
        let f = |_: Provenance| true;
        self.permissions_from(&self.subject_closure(user, &f), resource, &f)
    }

    pub fn is_intended(&self, user: VertexId, op: Permission, resource: VertexId) -> bool {
        self.intended_permissions(user, resource).contains(op)
    }

    /// Access that exists only because of an injected element.
    pub fn is_violation(&self, user: VertexId, op: Permission, resource: VertexId) -> bool {
        let actual = self.actual_permissions(user, resource);
        actual.contains(op) && !self.intended_permissions(user, resource).contains(op)
    }

    /// Intended permissions per resource for one user, computed by expanding grants.
    pub fn intended_map(&self, user: VertexId) -> BTreeMap<VertexId, PermissionSet> {
        let f = |p: Provenance| p.is_intended();
        self.expand(&self.subject_closure(user, &f), &f)
    }

    fn expand(
        &self,
        subjects: &[VertexId],
        include: &dyn Fn(Provenance) -> bool,
    ) -> BTreeMap<VertexId, PermissionSet> {
        let mut out: BTreeMap<VertexId, PermissionSet> = BTreeMap::new();
        for s in subjects {
            for &gi in self.grants_by_subject.get(s).into_iter().flatten() {
                let g = &self.grants[gi];
                if !include(g.provenance) || !self.grant_holds(g) {
                    continue;
                }
                for o in &g.objects {
                    let rs: Vec<VertexId> = if self.types_of.contains_key(o) {
                        vec![*o]
                    } else {
                        self.resources_of_type(*o).to_vec()
                    };
                    for r in rs {
                        *out.entry(r).or_default() = out.get(&r).copied().unwrap_or_default() | g.perms;
                    }
                }
            }
        }
        out
    }

    pub fn types_of_resource(&self, r: VertexId) -> &[VertexId] {
        self.types_of.get(&r).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Roles reachable from `role` through any hierarchy edge, `role` included.
    pub fn seniors_of(&self, role: VertexId) -> Vec<VertexId> {
        self.role_closure(&[role], &|_| true)
    }

    /// What `role` holds on `resource`, optionally counting injected elements.
    pub fn role_permissions(&self, role: VertexId, resource: VertexId, with_injected: bool) -> PermissionSet {
        let f = move |p: Provenance| with_injected || p.is_intended();
        self.permissions_from(&self.role_closure(&[role], &f), resource, &f)
    }

    /// Intended permissions of `role` per resource.
    pub fn role_required_map(&self, role: VertexId) -> BTreeMap<VertexId, PermissionSet> {
        let f = |p: Provenance| p.is_intended();
        self.expand(&self.role_closure(&[role], &f), &f)
    }

    /// Resource attributes that hold at least one resource, in id order.
    pub fn populated_types(&self) -> Vec<VertexId> {
        let mut v: Vec<VertexId> = self
            .members_of_type
            .iter()
            .filter(|(_, rs)| !rs.is_empty())
            .map(|(t, _)| *t)
            .collect();
        v.sort();
        v
    }

    /// Role-level requirements: what each role needs through intended grants
    /// and intended inheritance.
    pub fn required_permissions(&self) -> RequiredPermissions {
        let f = |p: Provenance| p.is_intended();
        let mut req = RequiredPermissions::default();
        for &role in &self.roles {
            req.declare(role);
            for (r, perms) in self.expand(&self.role_closure(&[role], &f), &f) {
                req.require(role, r, perms);
            }
        }
        req
    }

    /// Confirms that every vertex this ground truth mentions exists in `policy`
    /// with the expected kind.
    pub fn check_policy(&self, policy: &PolicyHypergraph) -> Result<(), String> {
        let expect = |v: VertexId, k: VertexKind| -> Result<(), String> {
            match policy.kind(v) {
                Some(actual) if actual == k => Ok(()),
                Some(actual) => Err(format!("{v} is a {actual}, ground truth expects {k}")),
                None => Err(format!("{v} does not exist in the policy")),
            }
        };
        for &u in &self.users {
            expect(u, VertexKind::User)?;
        }
        for &r in &self.roles {
            expect(r, VertexKind::UserAttribute)?;
        }
        for &r in &self.resources {
            expect(r, VertexKind::Resource)?;
        }
        for g in &self.grants {
            if policy.edge(g.edge).is_none() {
                return Err(format!("grant {} is not in the policy", g.edge));
            }
        }
        Ok(())
    }

    /// Every intended `(user, op, resource)` fact.
    pub fn intended_facts(&self) -> Vec<(VertexId, Permission, VertexId)> {
        let mut out = Vec::new();
        for &u in &self.users {
            for (r, perms) in self.intended_map(u) {
                for p in perms.iter() {
                    out.push((u, p, r));
                }
            }
        }
        out
    }

    pub fn to_file(&self, policy: &PolicyHypergraph) -> GroundTruthFile {
        let name = |v: VertexId| policy.name(v).to_string();
        let uni = policy.universe();
        let intended = self
            .intended_facts()
            .into_iter()
            .map(|(u, p, r)| [name(u), uni.name(p).to_string(), name(r)])
            .collect();
        let mut required = BTreeMap::new();
        for (s, m) in self.required_permissions().subjects {
            let m: BTreeMap<String, Vec<String>> =
                m.into_iter().map(|(r, p)| (name(r), uni.names_of(p))).collect();
            required.insert(name(s), m);
        }
        GroundTruthFile {
            context: ContextDoc {
                timestamp: self.context.timestamp,
                acting_account: self.context.acting_account.clone(),
                approvals: self.context.approvals.iter().cloned().collect(),
            },
            intended,
            required,
            violations: ViolationsDoc {
                chains: self
                    .chains
                    .iter()
                    .map(|c| ChainDoc {
                        user: name(c.user),
                        lower: name(c.lower),
                        upper: name(c.upper),
                        target: name(c.target),
                        assignment: c.assignment.0,
                        association: c.association.map(|e| e.0),
                        path: c.path.iter().map(|v| name(*v)).collect(),
                    })
                    .collect(),
                excess: self
                    .excess
                    .iter()
                    .map(|x| ExcessDoc {
                        role: name(x.role),
                        resource_attr: name(x.resource_attr),
                        permissions: uni.names_of(x.permissions),
                        association: x.association.0,
                    })
                    .collect(),
            },
        }
    }

    pub fn to_json(&self, policy: &PolicyHypergraph) -> String {
        serde_json::to_string_pretty(&self.to_file(policy)).expect("ground truth serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextDoc {
    pub timestamp: chrono::DateTime<chrono::Utc>,
    pub acting_account: String,
    #[serde(default)]
    pub approvals: Vec<String>,
}

impl ContextDoc {
    pub fn to_context(&self) -> EvaluationContext {
        EvaluationContext {
            timestamp: self.timestamp,
            acting_account: self.acting_account.clone(),
            approvals: self.approvals.iter().cloned().collect::<BTreeSet<_>>(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDoc {
    pub user: String,
    pub lower: String,
    pub upper: String,
    pub target: String,
    pub assignment: u32,
    pub association: Option<u32>,
    pub path: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcessDoc {
    pub role: String,
    pub resource_attr: String,
    pub permissions: Vec<String>,
    pub association: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolationsDoc {
    pub chains: Vec<ChainDoc>,
    pub excess: Vec<ExcessDoc>,
}

/// Companion JSON written next to a generated policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthFile {
    pub context: ContextDoc,
    #[serde(default)]
    pub intended: Vec<[String; 3]>,
    #[serde(default)]
    pub required: BTreeMap<String, BTreeMap<String, Vec<String>>>,
    #[serde(default)]
    pub violations: ViolationsDoc,
}

impl GroundTruthFile {
    /// Resolves the `required` section against `policy`. Subjects are looked up
    /// as user attributes first, then users.
    pub fn required_for(&self, policy: &PolicyHypergraph) -> Result<RequiredPermissions, GenError> {
        let uni = policy.universe();
        let mut req = RequiredPermissions::default();
        for (s, m) in &self.required {
            let sid = policy
                .lookup(VertexKind::UserAttribute, s)
                .or_else(|| policy.lookup(VertexKind::User, s))
                .ok_or_else(|| GenError::GroundTruthMismatch(format!("unknown subject {s:?}")))?;
            req.declare(sid);
            for (r, perms) in m {
                let rid = policy
                    .lookup(VertexKind::Resource, r)
                    .ok_or_else(|| GenError::GroundTruthMismatch(format!("unknown resource {r:?}")))?;
                let set = uni
                    .set_of(perms.iter().map(String::as_str))
                    .map_err(|p| GenError::GroundTruthMismatch(format!("unknown permission {p:?}")))?;
                req.require(sid, rid, set);
            }
        }
        Ok(req)
    }
}

/// Adds policy elements while keeping the reference model in step.
pub struct PolicyBuilder {
    pub policy: PolicyHypergraph,
    pub truth: GroundTruth,
}

impl PolicyBuilder {
    pub fn new(context: EvaluationContext) -> Self {
        PolicyBuilder {
            policy: PolicyHypergraph::default(),
            truth: GroundTruth::new(context),
        }
    }

    pub fn user(&mut self, name: &str, account: &str, tags: Tags) -> Result<VertexId, GenError> {
        let v = self.policy.add_vertex(VertexKind::User, name, account, tags)?;
        self.truth.note_user(v);
        Ok(v)
    }

    pub fn role(&mut self, name: &str, account: &str, tags: Tags) -> Result<VertexId, GenError> {
        let v = self.policy.add_vertex(VertexKind::UserAttribute, name, account, tags)?;
        self.truth.note_role(v);
        Ok(v)
    }

    pub fn resource_type(&mut self, name: &str, account: &str, tags: Tags) -> Result<VertexId, GenError> {
        Ok(self.policy.add_vertex(VertexKind::ResourceAttribute, name, account, tags)?)
    }

    pub fn policy_class(&mut self, name: &str) -> Result<VertexId, GenError> {
        Ok(self.policy.add_vertex(VertexKind::PolicyClass, name, "", Tags::new())?)
    }

    pub fn resource(
        &mut self,
        name: &str,
        account: &str,
        tags: Tags,
        types: &[VertexId],
    ) -> Result<VertexId, GenError> {
        let v = self.policy.add_vertex(VertexKind::Resource, name, account, tags)?;
        for &t in types {
            self.policy.add_assignment(v, t)?;
        }
        self.truth.note_resource(v, types);
        Ok(v)
    }

    pub fn assign(&mut self, user: VertexId, role: VertexId) -> Result<HyperedgeId, GenError> {
        let e = self.policy.add_assignment(user, role)?;
        self.truth.note_membership(user, role, Provenance::Intended);
        Ok(e)
    }

    pub fn inherit(
        &mut self,
        lower: VertexId,
        upper: VertexId,
        provenance: Provenance,
    ) -> Result<HyperedgeId, GenError> {
        add_hierarchy(&mut self.policy, &mut self.truth, lower, upper, provenance)
    }

    pub fn grant(
        &mut self,
        subjects: &[VertexId],
        objects: &[VertexId],
        pc: VertexId,
        perms: PermissionSet,
        constraints: Vec<ConstraintSpec>,
        provenance: Provenance,
    ) -> Result<HyperedgeId, GenError> {
        add_grant(&mut self.policy, &mut self.truth, subjects, objects, pc, perms, constraints, provenance)
    }

    pub fn finish(self) -> (PolicyHypergraph, GroundTruth) {
        (self.policy, self.truth)
    }
}

pub(crate) fn add_hierarchy(
    policy: &mut PolicyHypergraph,
    truth: &mut GroundTruth,
    lower: VertexId,
    upper: VertexId,
    provenance: Provenance,
) -> Result<HyperedgeId, GenError> {
    let e = policy.add_assignment(lower, upper)?;
    truth.note_hierarchy(lower, upper, provenance);
    Ok(e)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn add_grant(
    policy: &mut PolicyHypergraph,
    truth: &mut GroundTruth,
    subjects: &[VertexId],
    objects: &[VertexId],
    pc: VertexId,
    perms: PermissionSet,
    constraints: Vec<ConstraintSpec>,
    provenance: Provenance,
) -> Result<HyperedgeId, GenError> {
    let e = policy.add_grant(subjects, objects, pc, perms, constraints.clone())?;
    let account = policy
        .shared_account(policy.edge(e).expect("edge just added"))
        .map(str::to_string);
    truth.note_grant(RefGrant {
        edge: e,
        subjects: subjects.to_vec(),
        objects: objects.to_vec(),
        perms,
        constraints,
        account,
        provenance,
    });
    Ok(e)
}
