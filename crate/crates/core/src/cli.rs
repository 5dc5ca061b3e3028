//! `hyperpam` command line.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use clap::{Args, Parser, Subcommand};

use crate::baselines::ModelKind;
use crate::bench::{
    aggregate_medians, build_workload, csv_string, emit_report, fit_models, fit_power_law,
    read_csv, run_sweep, workload_json, Metric, ModelFit, SweepConfig, WorkloadMode,
};
use crate::gen::{generate, make_fixture_usecase, GenConfig, GroundTruthFile, Profile};
use crate::hypergraph::PolicyHypergraph;
use crate::ingest::ingest_bytes;
use crate::query::{
    attack_window_report, check_privilege, detect_escalations, detect_over_privileged,
    escalation_line, over_privilege_line, revoke_expired, EvaluationContext, PrivilegeQuery,
    TagFilter, DEFAULT_MAX_DEPTH,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "hyperpam", version, about = "Privilege analysis over policy hypergraphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic policy and its ground truth.
    Generate(GenerateArgs),
    /// Convert an IAM JSON document into a policy.
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Answer one privilege query.
    Check(CheckArgs),
    /// Report privilege-escalation chains to sensitive resources.
    Escalations {
        #[arg(long)]
        policy: PathBuf,
        /// Tag selecting sensitive resources, as key=value.
        #[arg(long, default_value = "env=production")]
        sensitive: String,
        #[command(flatten)]
        ctx: CtxArgs,
    },
    /// Report subjects holding permissions beyond their requirements.
    Overprivileged {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        ground_truth: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
        max_depth: usize,
    },
    /// List expired and soon-expiring time-boxed edges.
    Window {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        at: Option<DateTime<Utc>>,
        /// Horizon such as 90s, 30m, 2h or 1d.
        #[arg(long, default_value = "0s")]
        expiring_within: String,
    },
    /// Remove expired time-boxed edges.
    RevokeExpired {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        at: Option<DateTime<Utc>>,
        /// Defaults to rewriting the input file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scaling sweep and write per-(model, n) medians as CSV.
    Bench(BenchArgs),
    /// Fit a power law to one CSV column.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "detect_time")]
        metric: String,
        #[arg(long)]
        model: Option<String>,
    },
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, default_value_t = 200)]
    users: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "experiment")]
    profile: String,
    #[arg(long)]
    roles: Option<usize>,
    #[arg(long)]
    resources: Option<usize>,
    #[arg(long, default_value_t = 0)]
    chains: usize,
    #[arg(long, default_value_t = 0)]
    excess: usize,
    #[arg(long)]
    constraint_free: bool,
    /// Write the fixed cloud-account scenario instead of a random policy.
    #[arg(long)]
    fixture: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Also write the benchmark workload for this policy.
    #[arg(long)]
    workload: Option<PathBuf>,
    #[arg(long, default_value = "per-user")]
    mode: String,
}

#[derive(Args, Debug)]
struct CtxArgs {
    /// Evaluation instant (RFC 3339); defaults to now.
    #[arg(long)]
    at: Option<DateTime<Utc>>,
    #[arg(long, default_value = "")]
    account: String,
    /// Approval tag present in the context; repeatable.
    #[arg(long)]
    approve: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    max_depth: usize,
}

impl CtxArgs {
    fn context(&self) -> EvaluationContext {
        let mut ctx = EvaluationContext::new(self.at.unwrap_or_else(Utc::now), self.account.clone());
        for a in &self.approve {
            ctx = ctx.with_approval(a.clone());
        }
        ctx
    }
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long)]
    user: String,
    #[arg(long)]
    op: String,
    #[arg(long)]
    resource: String,
    /// Exit 1 when access is allowed instead of when it is denied.
    #[arg(long)]
    expect_deny: bool,
    #[command(flatten)]
    ctx: CtxArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "abac,dag,hyper")]
    models: Vec<String>,
    #[arg(long, default_value_t = 200)]
    n_start: usize,
    #[arg(long, default_value_t = 4000)]
    n_end: usize,
    #[arg(long, default_value_t = 200)]
    n_step: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value = "per-user")]
    mode: String,
    #[arg(long)]
    queries_per_n: Option<usize>,
    #[arg(long, default_value = "experiment")]
    profile: String,
    #[arg(long)]
    constraint_free: bool,
    #[arg(long)]
    no_warmup: bool,
    #[arg(long)]
    abac_cap: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    dump_dir: Option<PathBuf>,
}

/// Failure that maps to exit code 2.
#[derive(Debug)]
struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

type Res = Result<i32, Usage>;

fn read(path: &Path) -> Result<Vec<u8>, Usage> {
    std::fs::read(path).map_err(|e| Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Usage> {
    std::fs::write(path, contents).map_err(|e| Usage(format!("{}: {e}", path.display())))
}

fn load_policy(path: &Path) -> Result<PolicyHypergraph, Usage> {
    PolicyHypergraph::from_json_slice(&read(path)?).map_err(|e| Usage(format!("{}: {e}", path.display())))
}

/// Parses `90s`, `30m`, `2h`, `1d` or bare seconds.
pub fn parse_duration(s: &str) -> Result<Duration, String> {
    let s = s.trim();
    let (num, unit) = s.split_at(s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len()));
    let k: i64 = num.parse().map_err(|_| format!("bad duration {s:?}"))?;
    Ok(match unit {
        "" | "s" => Duration::seconds(k),
        "m" => Duration::minutes(k),
        "h" => Duration::hours(k),
        "d" => Duration::days(k),
        _ => return Err(format!("bad duration unit in {s:?}")),
    })
}

fn cmd_generate(a: &GenerateArgs) -> Res {
    let mode: WorkloadMode = a.mode.parse()?;
    let (policy, gt, seed) = if a.fixture {
        let (p, g) = make_fixture_usecase();
        (p, g, a.seed)
    } else {
        let mut cfg = GenConfig::for_users(a.users, a.seed);
        cfg.profile = a.profile.parse::<Profile>()?;
        if let Some(r) = a.roles {
            cfg.n_roles = r;
        }
        if let Some(r) = a.resources {
            cfg.n_resources = r;
        }
        cfg.injected_chains = a.chains;
        cfg.injected_excess = a.excess;
        if a.constraint_free {
            cfg = cfg.constraint_free();
        }
        let (p, g) = generate(&cfg)?;
        (p, g, cfg.seed)
    };
    write(&a.out, &policy.to_json())?;
    if let Some(t) = &a.truth {
        write(t, &gt.to_json(&policy))?;
    }
    if let Some(w) = &a.workload {
        let wl = build_workload(&policy, mode, seed, &gt.context, None)?;
        write(w, &workload_json(&policy, &wl))?;
    }
    println!(
        "wrote {} vertices, {} hyperedges to {}",
        policy.vertex_count(),
        policy.edge_count(),
        a.out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_check(a: &CheckArgs) -> Res {
    let policy = match &a.policy {
        Some(p) => load_policy(p)?,
        None => PolicyHypergraph::default(),
    };
    let ctx = a.ctx.context();
    let decision = match PrivilegeQuery::by_name(&policy, &a.user, &a.op, &a.resource, ctx) {
        Ok(q) => Some(check_privilege(&policy, &q, a.ctx.max_depth)?),
        // Names absent from the policy cannot be reached.
        Err(crate::query::QueryError::UnknownName(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let allowed = match decision.as_ref().and_then(|d| d.witness.as_ref()) {
        Some(w) => {
            println!("allow: {}", w.render(&policy));
            true
        }
        None => {
            println!("deny: no path");
            false
        }
    };
    Ok(if allowed == a.expect_deny { EXIT_FINDINGS } else { EXIT_OK })
}

fn cmd_bench(a: &BenchArgs) -> Res {
    let models = a
        .models
        .iter()
        .map(|m| m.parse::<ModelKind>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut cfg = SweepConfig::new(models, a.n_start, a.n_end, a.n_step, a.seed);
    cfg.template.profile = a.profile.parse()?;
    if a.constraint_free {
        cfg.template = cfg.template.clone().constraint_free();
    }
    cfg.workload_mode = a.mode.parse()?;
    cfg.queries_per_n = a.queries_per_n;
    cfg.repeats = a.repeats;
    cfg.warmup = !a.no_warmup;
    cfg.abac_cap = a.abac_cap;
    cfg.threads = a.threads;
    cfg.dump_dir = a.dump_dir.clone();
    let med = aggregate_medians(&run_sweep(&cfg)?);
    let csv = csv_string(&med)?;
    match &a.out {
        Some(p) => write(p, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(rp) = &a.report {
        let mut fits: Vec<ModelFit> = Vec::new();
        for m in [Metric::DetectTime, Metric::TraversalOps, Metric::GraphSize] {
            match fit_models(&med, m) {
                Ok(f) => fits.extend(f),
                Err(e) => eprintln!("skipping {} fit: {e}", m.as_str()),
            }
        }
        emit_report(&med, &fits, rp)?;
    }
    Ok(EXIT_OK)
}

fn cmd_fit(input: &Path, metric: &str, model: Option<&str>) -> Res {
    let metric: Metric = metric.parse()?;
    let model: Option<ModelKind> = model.map(str::parse).transpose()?;
    let recs = read_csv(input)?;
    let mut any = false;
    for kind in ModelKind::ALL {
        if model.is_some_and(|m| m != kind) {
            continue;
        }
        let pts: Vec<(f64, f64)> = recs
            .iter()
            .filter(|r| r.model == kind)
            .map(|r| (r.n as f64, metric.of(r)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let f = fit_power_law(&pts)?;
        println!("{kind} {} a={:.6e} b={:.6} r2={:.6}", metric.as_str(), f.a, f.b, f.r2);
        any = true;
    }
    if !any {
        return Err(Usage(format!("no rows for the requested model in {}", input.display())));
    }
    Ok(EXIT_OK)
}

fn dispatch(cmd: Command) -> Res {
    match cmd {
        Command::Generate(a) => cmd_generate(&a),
        Command::Ingest { input, out } => {
            let p = ingest_bytes(&read(&input)?).map_err(|e| Usage(format!("{}: {e}", input.display())))?;
            write(&out, &p.to_json())?;
            println!("wrote {} vertices, {} hyperedges to {}", p.vertex_count(), p.edge_count(), out.display());
            Ok(EXIT_OK)
        }
        Command::Check(a) => cmd_check(&a),
        Command::Escalations { policy, sensitive, ctx } => {
            let p = load_policy(&policy)?;
            let filter = TagFilter::parse(&sensitive).map_err(|e| Usage(format!("--sensitive: {e}")))?;
            let found = detect_escalations(&p, &filter, &ctx.context(), ctx.max_depth);
            for f in &found {
                println!("{}", escalation_line(&p, f));
            }
            Ok(if found.is_empty() { EXIT_OK } else { EXIT_FINDINGS })
        }
        Command::Overprivileged { policy, ground_truth, max_depth } => {
            let p = load_policy(&policy)?;
            let gt: GroundTruthFile = serde_json::from_slice(&read(&ground_truth)?)
                .map_err(|e| Usage(format!("{}: {e}", ground_truth.display())))?;
            let req = gt.required_for(&p)?;
            let found = detect_over_privileged(&p, &req, &gt.context.to_context(), max_depth)?;
            for f in &found {
                println!("{}", over_privilege_line(&p, f));
            }
            Ok(if found.is_empty() { EXIT_OK } else { EXIT_FINDINGS })
        }
        Command::Window { policy, at, expiring_within } => {
            let p = load_policy(&policy)?;
            let within = parse_duration(&expiring_within).map_err(|e| Usage(format!("--expiring-within: {e}")))?;
            let r = attack_window_report(&p, at.unwrap_or_else(Utc::now), within);
            let mut out = std::io::stdout().lock();
            for (label, ids) in [("expired", &r.expired), ("expiring", &r.expiring)] {
                for id in ids {
                    let e = p.edge(*id).expect("reported edge exists");
                    let names: Vec<&str> = e.members.iter().map(|m| p.name(*m)).collect();
                    let _ = writeln!(out, "{label} {id} {{{}}}", names.join(", "));
                }
            }
            Ok(if r.expired.is_empty() && r.expiring.is_empty() { EXIT_OK } else { EXIT_FINDINGS })
        }
        Command::RevokeExpired { policy, at, out } => {
            let mut p = load_policy(&policy)?;
            let k = revoke_expired(&mut p, at.unwrap_or_else(Utc::now));
            let dest = out.unwrap_or(policy);
            write(&dest, &p.to_json())?;
            println!("revoked {k} expired hyperedge(s)");
            Ok(EXIT_OK)
        }
        Command::Bench(a) => cmd_bench(&a),
        Command::Fit { input, metric, model } => cmd_fit(&input, &metric, model.as_deref()),
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}
