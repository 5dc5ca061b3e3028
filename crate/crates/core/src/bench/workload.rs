use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use super::BenchError;
use crate::gen::{stream, STREAM_WORKLOAD};
use crate::hypergraph::{Permission, PolicyHypergraph, VertexId, VertexKind};
use crate::query::{EvaluationContext, PrivilegeQuery};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkloadMode {
    /// Every user queries one resource drawn from a pool of `ceil(sqrt(n))`.
    PerUser,
    /// Every (user, resource) pair, optionally sampled down.
    AllPairs,
}

impl WorkloadMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WorkloadMode::PerUser => "per-user",
            WorkloadMode::AllPairs => "all-pairs",
        }
    }
}

impl fmt::Display for WorkloadMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WorkloadMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('_', "-").as_str() {
            "per-user" => Ok(WorkloadMode::PerUser),
            "all-pairs" | "all-pairs-sampled" => Ok(WorkloadMode::AllPairs),
            other => Err(format!("unknown workload mode {other:?} (expected per-user or all-pairs)")),
        }
    }
}

/// Read 60%, Write 30%, Execute 10%.
const OP_MIX: [(&str, f64); 3] = [("Read", 0.6), ("Write", 0.3), ("Execute", 0.1)];

struct OpMix([Permission; 3]);

impl OpMix {
    fn new(policy: &PolicyHypergraph) -> Result<Self, BenchError> {
        let look = |name: &str| {
            policy
                .universe()
                .lookup(name)
                .ok_or_else(|| BenchError::ConfigInvalid(format!("permission universe lacks {name}")))
        };
        Ok(OpMix([look(OP_MIX[0].0)?, look(OP_MIX[1].0)?, look(OP_MIX[2].0)?]))
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Permission {
        let x: f64 = rng.random();
        if x < OP_MIX[0].1 {
            self.0[0]
        } else if x < OP_MIX[0].1 + OP_MIX[1].1 {
            self.0[1]
        } else {
            self.0[2]
        }
    }
}

fn sorted_sample<R: Rng + ?Sized>(rng: &mut R, len: usize, amount: usize) -> Vec<usize> {
    let mut v = sample(rng, len, amount.min(len)).into_vec();
    v.sort_unstable();
    v
}

/// Seed-derived query list over the policy's users and resources, in user id
/// order. `limit` caps the number of queries by sampling users (per-user) or
/// pairs (all-pairs).
pub fn build_workload(
    policy: &PolicyHypergraph,
    mode: WorkloadMode,
    seed: u64,
    ctx: &EvaluationContext,
    limit: Option<usize>,
) -> Result<Vec<PrivilegeQuery>, BenchError> {
    let users: Vec<VertexId> = policy.vertices_of_kind(VertexKind::User).map(|v| v.id).collect();
    let resources: Vec<VertexId> = policy.vertices_of_kind(VertexKind::Resource).map(|v| v.id).collect();
    if users.is_empty() || resources.is_empty() {
        return Err(BenchError::ConfigInvalid("workload needs at least one user and one resource".into()));
    }
    let mix = OpMix::new(policy)?;
    let mut rng = stream(seed, STREAM_WORKLOAD);
    let q = |u, op, r| PrivilegeQuery::new(u, op, r, ctx.clone());
    Ok(match mode {
        WorkloadMode::PerUser => {
            let k = ((users.len() as f64).sqrt().ceil() as usize).max(1);
            let pool: Vec<VertexId> = sorted_sample(&mut rng, resources.len(), k)
                .into_iter()
                .map(|i| resources[i])
                .collect();
            let chosen: Vec<VertexId> = match limit {
                Some(l) if l < users.len() => {
                    sorted_sample(&mut rng, users.len(), l).into_iter().map(|i| users[i]).collect()
                }
                _ => users,
            };
            chosen
                .into_iter()
                .map(|u| {
                    let r = pool[rng.random_range(0..pool.len())];
                    q(u, mix.draw(&mut rng), r)
                })
                .collect()
        }
        WorkloadMode::AllPairs => {
            let total = users.len() * resources.len();
            let pairs: Vec<usize> = match limit {
                Some(l) if l < total => sorted_sample(&mut rng, total, l),
                _ => (0..total).collect(),
            };
            pairs
                .into_iter()
                .map(|i| {
                    let (u, r) = (users[i / resources.len()], resources[i % resources.len()]);
                    q(u, mix.draw(&mut rng), r)
                })
                .collect()
        }
    })
}

#[derive(Serialize)]
struct QueryLine<'a> {
    user: &'a str,
    op: &'a str,
    resource: &'a str,
}

/// Name-based rendering used for dumps and the fairness hash.
pub fn workload_json(policy: &PolicyHypergraph, workload: &[PrivilegeQuery]) -> String {
    let lines: Vec<QueryLine> = workload
        .iter()
        .map(|q| QueryLine {
            user: policy.name(q.user),
            op: policy.universe().name(q.op),
            resource: policy.name(q.resource),
        })
        .collect();
    serde_json::to_string_pretty(&lines).expect("workload serializes")
}
