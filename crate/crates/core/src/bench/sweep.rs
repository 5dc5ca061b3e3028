use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use sha2::{Digest, Sha256};

use super::fp::fp_of_decisions;
use super::stats::median;
use super::workload::{build_workload, workload_json, WorkloadMode};
use super::BenchError;
use crate::baselines::{build_model, run_workload, ModelKind};
use crate::gen::{generate, GenConfig};
use crate::hypergraph::PolicyHypergraph;
use crate::query::{DecisionModel, PrivilegeQuery};

pub const THREADS_ENV: &str = "HYPERPAM_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub model: ModelKind,
    pub n: usize,
    /// `seed:hash`, the hash covering the serialized policy and workload.
    pub seed: String,
    pub build_time_s: f64,
    pub detect_time_s: f64,
    pub traversal_ops: u64,
    pub graph_size: usize,
    pub fp_rate: f64,
    /// Workload length; not part of the CSV, so 0 after reading one back.
    pub queries: usize,
}

impl BenchRecord {
    pub fn ops_per_query(&self) -> f64 {
        if self.queries == 0 {
            f64::NAN
        } else {
            self.traversal_ops as f64 / self.queries as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub models: Vec<ModelKind>,
    pub n_start: usize,
    pub n_end: usize,
    pub n_step: usize,
    /// Generator settings; counts are rescaled to each `n`.
    pub template: GenConfig,
    pub workload_mode: WorkloadMode,
    pub queries_per_n: Option<usize>,
    pub repeats: usize,
    pub warmup: bool,
    /// ABAC points above this `n` are skipped.
    pub abac_cap: Option<usize>,
    /// Dumps policy, workload and decisions per point when set.
    pub dump_dir: Option<PathBuf>,
    /// Parallel sweep points; `None` reads `HYPERPAM_THREADS`, default 1.
    pub threads: Option<usize>,
}

impl SweepConfig {
    pub fn new(models: Vec<ModelKind>, n_start: usize, n_end: usize, n_step: usize, seed: u64) -> Self {
        SweepConfig {
            models,
            n_start,
            n_end,
            n_step,
            template: GenConfig::for_users(n_start, seed),
            workload_mode: WorkloadMode::PerUser,
            queries_per_n: None,
            repeats: 5,
            warmup: true,
            abac_cap: None,
            dump_dir: None,
            threads: None,
        }
    }

    pub fn points(&self) -> Vec<usize> {
        (self.n_start..=self.n_end).step_by(self.n_step.max(1)).collect()
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::ConfigInvalid(m.to_string()));
        if self.models.is_empty() {
            return bad("no models selected");
        }
        if self.n_step == 0 {
            return bad("n_step must be positive");
        }
        if self.n_start == 0 || self.n_start > self.n_end {
            return bad("need 0 < n_start <= n_end");
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1");
        }
        if self.queries_per_n == Some(0) {
            return bad("queries_per_n must be positive");
        }
        self.template.validate()?;
        Ok(())
    }

    fn thread_count(&self) -> Result<usize, BenchError> {
        if let Some(t) = self.threads {
            return Ok(t.max(1));
        }
        match std::env::var(THREADS_ENV) {
            Err(_) => Ok(1),
            Ok(s) => s
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|&t| t > 0)
                .ok_or_else(|| BenchError::ConfigInvalid(format!("{THREADS_ENV}={s:?} is not a positive integer"))),
        }
    }
}

/// What one sweep point produced besides its records.
#[derive(Debug, Clone)]
pub struct PointArtifacts {
    pub n: usize,
    pub policy_json: String,
    pub workload_json: String,
    pub decisions: BTreeMap<ModelKind, Vec<bool>>,
}

fn hash16(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn decisions_json(d: &[bool]) -> String {
    let s: String = d.iter().map(|&b| if b { '1' } else { '0' }).collect();
    serde_json::to_string(&s).expect("string serializes")
}

fn run_point(cfg: &SweepConfig, n: usize) -> Result<(Vec<BenchRecord>, PointArtifacts), BenchError> {
    let gen_cfg = cfg.template.scaled_to(n);
    let (policy, gt) = generate(&gen_cfg)?;
    let policy_json = policy.to_json();
    let workload: Vec<PrivilegeQuery> =
        build_workload(&policy, cfg.workload_mode, gen_cfg.seed, &gt.context, cfg.queries_per_n)?;
    let wl_json = workload_json(&policy, &workload);
    let seed = format!("{}:{}", gen_cfg.seed, hash16(&[&policy_json, &wl_json]));

    let mut records = Vec::new();
    let mut decisions = BTreeMap::new();
    for &kind in &cfg.models {
        if kind == ModelKind::Abac && cfg.abac_cap.is_some_and(|cap| n > cap) {
            continue;
        }
        let runs = cfg.repeats + usize::from(cfg.warmup);
        let mut build = Vec::with_capacity(runs);
        let mut detect = Vec::with_capacity(runs);
        let mut ops = 0;
        let mut size = 0;
        let mut first: Option<Vec<bool>> = None;
        for rep in 0..runs {
            // Every model starts from the same serialized policy.
            let t0 = Instant::now();
            let p = PolicyHypergraph::from_json(&policy_json)?;
            let model = build_model(kind, &p)?;
            let bt = t0.elapsed().as_secs_f64();
            let run = run_workload(&model, &workload)?;
            match &first {
                None => first = Some(run.decisions),
                Some(d) if *d != run.decisions => {
                    return Err(BenchError::Inconsistent(format!("{kind} changed its decisions between repeats at n={n}")))
                }
                Some(_) => {}
            }
            ops = run.total_traversal_ops;
            size = model.graph_size();
            if cfg.warmup && rep == 0 {
                continue;
            }
            build.push(bt);
            detect.push(run.wall_time.as_secs_f64());
        }
        let d = first.expect("at least one run");
        let fp_rate = fp_of_decisions(&gt, &workload, &d);
        for (b, t) in build.iter().zip(&detect) {
            records.push(BenchRecord {
                model: kind,
                n,
                seed: seed.clone(),
                build_time_s: *b,
                detect_time_s: *t,
                traversal_ops: ops,
                graph_size: size,
                fp_rate,
                queries: workload.len(),
            });
        }
        decisions.insert(kind, d);
    }

    if !gen_cfg.has_constraints() {
        let mut it = decisions.iter();
        if let Some((k0, d0)) = it.next() {
            for (k, d) in it {
                if d != d0 {
                    let at = d.iter().zip(d0).position(|(a, b)| a != b).unwrap_or(0);
                    return Err(BenchError::Inconsistent(format!(
                        "{k} and {k0} disagree on query {at} of the constraint-free workload at n={n}"
                    )));
                }
            }
        }
    }

    let art = PointArtifacts { n, policy_json, workload_json: wl_json, decisions };
    if let Some(dir) = &cfg.dump_dir {
        let d = dir.join(format!("n{n:05}"));
        std::fs::create_dir_all(&d)?;
        std::fs::write(d.join("policy.json"), &art.policy_json)?;
        std::fs::write(d.join("workload.json"), &art.workload_json)?;
        for (k, v) in &art.decisions {
            std::fs::write(d.join(format!("decisions-{k}.json")), decisions_json(v))?;
        }
    }
    Ok((records, art))
}

/// Runs every configured point and returns one record per (model, n, repeat),
/// ordered by n, then model, then repeat.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<BenchRecord>, BenchError> {
    Ok(run_sweep_with_artifacts(cfg)?.0)
}

pub fn run_sweep_with_artifacts(cfg: &SweepConfig) -> Result<(Vec<BenchRecord>, Vec<PointArtifacts>), BenchError> {
    cfg.validate()?;
    let points = cfg.points();
    let threads = cfg.thread_count()?.min(points.len());
    let mut slots: Vec<Option<Result<(Vec<BenchRecord>, PointArtifacts), BenchError>>> =
        (0..points.len()).map(|_| None).collect();
    if threads <= 1 {
        for (i, &n) in points.iter().enumerate() {
            slots[i] = Some(run_point(cfg, n));
        }
    } else {
        let next = AtomicUsize::new(0);
        let out = Mutex::new(&mut slots);
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= points.len() {
                        break;
                    }
                    let r = run_point(cfg, points[i]);
                    out.lock().expect("sweep worker poisoned")[i] = Some(r);
                });
            }
        });
    }
    let mut records = Vec::new();
    let mut arts = Vec::new();
    for slot in slots {
        let (r, a) = slot.expect("every point ran")?;
        records.extend(r);
        arts.push(a);
    }
    Ok((records, arts))
}

/// Collapses repeats into one row per (model, n) holding the median times.
/// Output is ordered by model, then n.
pub fn aggregate_medians(records: &[BenchRecord]) -> Vec<BenchRecord> {
    let mut groups: BTreeMap<(ModelKind, usize), Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.model, r.n)).or_default().push(r);
    }
    groups
        .into_values()
        .map(|g| {
            let build: Vec<f64> = g.iter().map(|r| r.build_time_s).collect();
            let detect: Vec<f64> = g.iter().map(|r| r.detect_time_s).collect();
            let mut ops: Vec<u64> = g.iter().map(|r| r.traversal_ops).collect();
            ops.sort_unstable();
            BenchRecord {
                build_time_s: median(&build),
                detect_time_s: median(&detect),
                traversal_ops: ops[ops.len() / 2],
                ..g[0].clone()
            }
        })
        .collect()
}
