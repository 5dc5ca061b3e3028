use std::fmt::Write as _;
use std::path::Path;

use super::stats::{fit_power_law, RegressionFit};
use super::sweep::BenchRecord;
use super::BenchError;
use crate::baselines::ModelKind;

pub const CSV_HEADER: [&str; 8] = [
    "model",
    "n",
    "seed",
    "build_time_s",
    "detect_time_s",
    "traversal_ops",
    "graph_size",
    "fp_rate",
];

/// Columns that hold wall-clock measurements.
pub const TIMING_COLUMNS: [usize; 2] = [3, 4];

pub fn csv_string(records: &[BenchRecord]) -> Result<String, BenchError> {
    if records.is_empty() {
        return Err(BenchError::ConfigInvalid("no records to write".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.model.as_str().to_string(),
            r.n.to_string(),
            r.seed.clone(),
            format!("{:.9}", r.build_time_s),
            format!("{:.9}", r.detect_time_s),
            r.traversal_ops.to_string(),
            r.graph_size.to_string(),
            format!("{:.6}", r.fp_rate),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn emit_csv(records: &[BenchRecord], path: &Path) -> Result<(), BenchError> {
    std::fs::write(path, csv_string(records)?)?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<BenchRecord>, BenchError> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(BenchError::ConfigInvalid(format!("unexpected CSV header {header:?}")));
    }
    let bad = |line: usize, col: &str| BenchError::ConfigInvalid(format!("row {line}: bad {col}"));
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row?;
        let f = |k: usize| row.get(k).unwrap_or("");
        let line = i + 2;
        out.push(BenchRecord {
            model: f(0).parse().map_err(|_| bad(line, "model"))?,
            n: f(1).parse().map_err(|_| bad(line, "n"))?,
            seed: f(2).to_string(),
            build_time_s: f(3).parse().map_err(|_| bad(line, "build_time_s"))?,
            detect_time_s: f(4).parse().map_err(|_| bad(line, "detect_time_s"))?,
            traversal_ops: f(5).parse().map_err(|_| bad(line, "traversal_ops"))?,
            graph_size: f(6).parse().map_err(|_| bad(line, "graph_size"))?,
            fp_rate: f(7).parse().map_err(|_| bad(line, "fp_rate"))?,
            queries: 0,
        });
    }
    Ok(out)
}

pub fn read_csv(path: &Path) -> Result<Vec<BenchRecord>, BenchError> {
    parse_csv(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    DetectTime,
    BuildTime,
    TraversalOps,
    GraphSize,
    FpRate,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::DetectTime => "detect_time",
            Metric::BuildTime => "build_time",
            Metric::TraversalOps => "traversal_ops",
            Metric::GraphSize => "graph_size",
            Metric::FpRate => "fp_rate",
        }
    }

    pub fn of(self, r: &BenchRecord) -> f64 {
        match self {
            Metric::DetectTime => r.detect_time_s,
            Metric::BuildTime => r.build_time_s,
            Metric::TraversalOps => r.traversal_ops as f64,
            Metric::GraphSize => r.graph_size as f64,
            Metric::FpRate => r.fp_rate,
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s.trim_end_matches("_s") {
            "detect_time" => Metric::DetectTime,
            "build_time" => Metric::BuildTime,
            "traversal_ops" => Metric::TraversalOps,
            "graph_size" => Metric::GraphSize,
            "fp_rate" => Metric::FpRate,
            other => return Err(format!("unknown metric {other:?}")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFit {
    pub model: ModelKind,
    pub metric: Metric,
    pub points: usize,
    pub fit: RegressionFit,
}

/// Fits `metric` against n for each model present in `records` (one row per
/// (model, n) expected, e.g. from `aggregate_medians`).
pub fn fit_models(records: &[BenchRecord], metric: Metric) -> Result<Vec<ModelFit>, BenchError> {
    let mut out = Vec::new();
    for model in ModelKind::ALL {
        let pts: Vec<(f64, f64)> = records
            .iter()
            .filter(|r| r.model == model)
            .map(|r| (r.n as f64, metric.of(r)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        out.push(ModelFit { model, metric, points: pts.len(), fit: fit_power_law(&pts)? });
    }
    Ok(out)
}

/// Detection-time exponents reported for the original three-model evaluation.
pub fn reference_exponent(model: ModelKind) -> f64 {
    match model {
        ModelKind::Abac => 2.94,
        ModelKind::Dag => 1.87,
        ModelKind::Hyper => 1.12,
    }
}

pub fn report_markdown(records: &[BenchRecord], fits: &[ModelFit]) -> Result<String, BenchError> {
    if records.is_empty() {
        return Err(BenchError::ConfigInvalid("no records to report".into()));
    }
    let mut s = String::new();
    let _ = writeln!(s, "# Scaling report\n");
    let _ = writeln!(s, "## Fitted power laws\n");
    let _ = writeln!(s, "| model | metric | points | a | b | R² | reference b |");
    let _ = writeln!(s, "|---|---|---:|---:|---:|---:|---:|");
    for f in fits {
        let reference = if f.metric == Metric::DetectTime {
            format!("{:.2}", reference_exponent(f.model))
        } else {
            "-".to_string()
        };
        let _ = writeln!(
            s,
            "| {} | {} | {} | {:.4e} | {:.3} | {:.4} | {} |",
            f.model,
            f.metric.as_str(),
            f.points,
            f.fit.a,
            f.fit.b,
            f.fit.r2,
            reference
        );
    }
    let detect: Vec<&ModelFit> = fits.iter().filter(|f| f.metric == Metric::DetectTime).collect();
    if !detect.is_empty() {
        let _ = writeln!(s, "\n## Summary\n");
        for f in detect {
            let delta = f.fit.b - reference_exponent(f.model);
            let _ = writeln!(
                s,
                "- {}: detection exponent {:.3} (R² {:.3}), {:+.3} from the reference {:.2}.",
                f.model,
                f.fit.b,
                f.fit.r2,
                delta,
                reference_exponent(f.model)
            );
        }
    }
    let _ = writeln!(s, "\n## Measurements\n");
    let _ = writeln!(s, "| model | n | build s | detect s | ops | size | fp |");
    let _ = writeln!(s, "|---|---:|---:|---:|---:|---:|---:|");
    for r in records {
        let _ = writeln!(
            s,
            "| {} | {} | {:.6} | {:.6} | {} | {} | {:.4} |",
            r.model, r.n, r.build_time_s, r.detect_time_s, r.traversal_ops, r.graph_size, r.fp_rate
        );
    }
    Ok(s)
}

pub fn emit_report(records: &[BenchRecord], fits: &[ModelFit], path: &Path) -> Result<(), BenchError> {
    std::fs::write(path, report_markdown(records, fits)?)?;
    Ok(())
}

/// Drops the timing columns so two CSVs can be compared for determinism.
pub fn strip_timing(csv_text: &str) -> String {
    csv_text
        .lines()
        .map(|l| {
            l.split(',')
                .enumerate()
                .filter(|(i, _)| !TIMING_COLUMNS.contains(i))
                .map(|(_, c)| c)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}
