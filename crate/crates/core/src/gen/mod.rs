//! Seeded synthetic policies with ground-truth labels, plus the fixed
//! cloud-account scenario used by the acceptance tests.

mod config;
mod fixture;
mod generate;
mod inject;
mod truth;
mod zipf;

use thiserror::Error;

pub use config::{GenConfig, Profile};
pub use fixture::{
    fixture_context, fixture_time, make_fixture_usecase, make_fixture_with_excess,
    DEFAULT_FIXTURE_EXCESS, FIXTURE_ACCOUNT,
};
pub use generate::{base_context, base_time, generate, stream, APPROVAL_TAG};
pub(crate) use generate::STREAM_WORKLOAD;
pub use inject::{add_escalation_chain, add_excess, inject_escalation_chain, inject_excess};
pub use truth::{
    ChainDescriptor, ChainDoc, ContextDoc, ExcessDescriptor, ExcessDoc, GroundTruth,
    GroundTruthFile, PolicyBuilder, Provenance, ViolationsDoc,
};
pub use zipf::{zipf_sample, Zipf};

use crate::hypergraph::PolicyError;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator configuration: {0}")]
    ConfigInvalid(String),
    #[error("cannot inject: {0}")]
    InsufficientEntities(String),
    #[error("ground truth does not match policy: {0}")]
    GroundTruthMismatch(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}
