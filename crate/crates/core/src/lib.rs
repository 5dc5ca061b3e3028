//! Privilege analysis over NGAC policy hypergraphs, with ABAC and DAG
//! baselines, a seeded policy generator, IAM ingest and a scaling harness.

pub mod hypergraph;
pub mod query;
pub mod baselines;
pub mod gen;
pub mod ingest;
pub mod bench;
pub mod cli;
