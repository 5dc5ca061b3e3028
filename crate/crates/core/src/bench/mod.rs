//! Scaling sweeps across the three models, false-positive measurement,
//! power-law fits and CSV/Markdown output.

mod fp;
mod report;
mod stats;
mod sweep;
mod workload;

use thiserror::Error;

pub use fp::{fp_of_decisions, measure_fp, measure_fp_on};
pub use report::{
    csv_string, emit_csv, emit_report, fit_models, parse_csv, read_csv, reference_exponent,
    report_markdown, strip_timing, Metric, ModelFit, CSV_HEADER, TIMING_COLUMNS,
};
pub use stats::{fit_power_law, median, spearman, RegressionFit};
pub use sweep::{
    aggregate_medians, run_sweep, run_sweep_with_artifacts, BenchRecord, PointArtifacts,
    SweepConfig, THREADS_ENV,
};
pub use workload::{build_workload, workload_json, WorkloadMode};

use crate::baselines::BaselineError;
use crate::gen::GenError;
use crate::hypergraph::PolicyError;
use crate::query::QueryError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid sweep configuration: {0}")]
    ConfigInvalid(String),
    #[error("cannot fit: {0}")]
    DegenerateInput(String),
    #[error("ground truth does not match policy: {0}")]
    GroundTruthMismatch(String),
    #[error("models disagree: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{build_model, ModelKind};
    use crate::gen::{generate, GenConfig};

    fn small(models: Vec<ModelKind>) -> SweepConfig {
        let mut c = SweepConfig::new(models, 100, 200, 100, 3);
        c.repeats = 3;
        c.threads = Some(1);
        c
    }

    #[test]
    fn one_record_per_model_n_repeat() {
        let recs = run_sweep(&small(vec![ModelKind::Hyper])).unwrap();
        assert_eq!(recs.len(), 6);
        let med = aggregate_medians(&recs);
        assert_eq!(med.len(), 2);
        let csv = csv_string(&med[..1]).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(csv.lines().next().unwrap(), CSV_HEADER.join(","));
    }

    #[test]
    fn constraint_free_models_agree_and_csv_is_reproducible() {
        let mut cfg = small(ModelKind::ALL.to_vec());
        cfg.template = cfg.template.clone().constraint_free();
        let a = aggregate_medians(&run_sweep(&cfg).unwrap());
        let b = aggregate_medians(&run_sweep(&cfg).unwrap());
        assert_eq!(a.len(), 6);
        let (ca, cb) = (csv_string(&a).unwrap(), csv_string(&b).unwrap());
        assert_eq!(strip_timing(&ca), strip_timing(&cb));
        let back = parse_csv(&ca).unwrap();
        assert_eq!(back.len(), 6);
        assert_eq!(back[0].seed, a[0].seed);
        assert!(a.iter().all(|r| r.fp_rate == 0.0));
    }

    #[test]
    fn sweep_threads_do_not_change_results() {
        let mut cfg = small(vec![ModelKind::Hyper, ModelKind::Dag]);
        let (one, arts1) = run_sweep_with_artifacts(&cfg).unwrap();
        cfg.threads = Some(2);
        let (two, arts2) = run_sweep_with_artifacts(&cfg).unwrap();
        let key = |r: &BenchRecord| (r.model, r.n, r.seed.clone(), r.traversal_ops, r.graph_size);
        assert_eq!(one.iter().map(key).collect::<Vec<_>>(), two.iter().map(key).collect::<Vec<_>>());
        for (x, y) in arts1.iter().zip(&arts2) {
            assert_eq!(x.decisions, y.decisions);
            assert_eq!(x.workload_json, y.workload_json);
        }
    }

    #[test]
    fn invalid_sweeps() {
        let mut c = small(vec![ModelKind::Hyper]);
        c.n_step = 0;
        assert!(matches!(run_sweep(&c), Err(BenchError::ConfigInvalid(_))));
        let mut c = small(vec![ModelKind::Hyper]);
        c.n_start = 500;
        assert!(matches!(run_sweep(&c), Err(BenchError::ConfigInvalid(_))));
        let mut c = small(vec![ModelKind::Hyper]);
        c.repeats = 0;
        assert!(matches!(run_sweep(&c), Err(BenchError::ConfigInvalid(_))));
    }

    #[test]
    fn hyper_fp_is_zero_on_generated_policy() {
        let (p, gt) = generate(&GenConfig::for_users(60, 9)).unwrap();
        let m = build_model(ModelKind::Hyper, &p).unwrap();
        assert_eq!(measure_fp(&m, &p, &gt, &gt.context).unwrap(), 0.0);
        let other = crate::query::EvaluationContext::new(gt.context.timestamp, "acct-9");
        assert!(matches!(measure_fp(&m, &p, &gt, &other), Err(BenchError::GroundTruthMismatch(_))));
    }

    #[test]
    fn per_user_workload_shape() {
        let (p, gt) = generate(&GenConfig::for_users(100, 2)).unwrap();
        let w = build_workload(&p, WorkloadMode::PerUser, 2, &gt.context, None).unwrap();
        assert_eq!(w.len(), 100);
        let distinct: std::collections::BTreeSet<_> = w.iter().map(|q| q.resource).collect();
        assert!(distinct.len() <= 10);
        let all = build_workload(&p, WorkloadMode::AllPairs, 2, &gt.context, None).unwrap();
        assert_eq!(all.len(), 100 * 50);
        let some = build_workload(&p, WorkloadMode::AllPairs, 2, &gt.context, Some(77)).unwrap();
        assert_eq!(some.len(), 77);
    }
}
