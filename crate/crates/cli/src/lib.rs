//! The `gea` command line: simulate, analyze, sweep, compare.
//!
//! A run lives in `<out>/<run_id>/`:
//!
//! ```text
//! config.toml        resolved configuration, rubric inlined
//! cohort.jsonl       one student profile per line
//! records.jsonl      append-only record store
//! sessions.csv       routing replay at the configured theta
//! manifest-NNN.json  one per simulate invocation that added entries
//! report/            analyze and sweep outputs
//! ```
//!
//! The run id is derived from the resolved config, so the same config and
//! seeds always land in the same directory and a rerun resumes it.

pub mod manifest;

use std::collections::BTreeSet;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::Utc;
use clap::{Args, Parser, Subcommand};
use gea_core::analytics::{self, compare_runs, threshold_sweep, Benchmark, GeaReport, ModelComparison, SweepTable};
use gea_core::backends::mock::{MockFixture, MockServer};
use gea_core::backends::{build_backends, BackendKind};
use gea_core::cohort::{read_cohort, sample_cohort, write_cohort, RNG_ALGORITHM};
use gea_core::engine::{read_store, successful, write_sessions_csv, Engine, Mode, RecordStore, StoreEntry};
use gea_core::{GeaConfig, GeaError, TransportError};
use thiserror::Error;

use manifest::{
    backend_info, file_hashes, Counts, RunManifest, COHORT_FILE, CONFIG_FILE, MANIFEST_SCHEMA, RECORDS_FILE,
    REPORT_DIR, SESSIONS_FILE,
};

pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 1;
    pub const DATA: u8 = 2;
    pub const TRANSPORT: u8 = 3;
    pub const BENCHMARK: u8 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] GeaError),
    #[error("pooled r {r} does not clear the {benchmark:?} benchmark")]
    Benchmark { r: String, benchmark: Benchmark },
    #[error("all {0} attempted task(s) failed with transport errors")]
    TransportExhausted(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Benchmark { .. } => exit::BENCHMARK,
            CliError::TransportExhausted(_) => exit::TRANSPORT,
            CliError::Core(e) => match e {
                GeaError::Config { .. } | GeaError::Template(_) | GeaError::NotFound(_) | GeaError::Io { .. } => {
                    exit::USAGE
                }
                GeaError::Transport(TransportError::MissingCredential(_)) => exit::USAGE,
                GeaError::Transport(_) => exit::TRANSPORT,
                _ => exit::DATA,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "gea", version, about = "Generative-evaluative agreement harness")]
pub struct Cli {
    /// Directory holding run directories.
    #[arg(long, global = true, default_value = "runs")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a cohort and run generate-then-score sessions.
    Simulate(SimulateArgs),
    /// Compute the agreement report for a run.
    Analyze {
        /// Run id under --out, or a path to a run directory.
        run: String,
    },
    /// Re-route a full-coverage run at several thresholds.
    Sweep {
        run: String,
        /// Comma-separated thresholds; defaults to `analysis.sweep_thetas`.
        #[arg(long)]
        thetas: Option<String>,
    },
    /// Compare two analyzed runs.
    Compare { a: String, b: String },
    /// Write or validate a config file.
    #[command(subcommand)]
    Config(ConfigCommand),
    /// Serve a mock chat-completion endpoint from a fixture file.
    MockServer {
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum ConfigCommand {
    /// Write the default config and rubric into a directory.
    Init {
        #[arg(default_value = ".")]
        dir: PathBuf,
    },
    /// Validate a config file and print its hash.
    Check { path: PathBuf },
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    /// Config file; the shipped defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `seeds.cohort`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `simulation.mode`.
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Overrides `routing.theta`.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Overrides `backend.kind`.
    #[arg(long)]
    pub backend: Option<BackendKind>,
    /// Continue an existing run directory (the default).
    #[arg(long, overrides_with = "no_resume")]
    pub resume: bool,
    /// Fail if the run directory already exists.
    #[arg(long, overrides_with = "resume")]
    pub no_resume: bool,
    /// Concurrent tasks; not part of the config hash.
    #[arg(long)]
    pub parallelism: Option<usize>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Simulate(args) => {
            let out = cmd_simulate(&args, &cli.out)?;
            let _ = writeln!(stdout, "{}", out.run_id);
        }
        Command::Analyze { run } => {
            let dir = resolve_run(&cli.out, &run)?;
            let report = cmd_analyze(&dir)?;
            let _ = write!(stdout, "{}", render_report(&report));
            if !report.benchmark_passed {
                return Err(CliError::Benchmark {
                    r: analytics::fmt_na(report.pooled_r),
                    benchmark: report.benchmark,
                });
            }
        }
        Command::Sweep { run, thetas } => {
            let dir = resolve_run(&cli.out, &run)?;
            let thetas = thetas.as_deref().map(parse_thetas).transpose()?;
            let table = cmd_sweep(&dir, thetas.as_deref())?;
            let _ = write!(stdout, "{}", render_sweep(&table));
        }
        Command::Compare { a, b } => {
            let (a, b) = (resolve_run(&cli.out, &a)?, resolve_run(&cli.out, &b)?);
            let (cmp, path) = cmd_compare(&a, &b, &cli.out)?;
            let _ = write!(stdout, "{}", render_comparison(&cmp));
            let _ = writeln!(stdout, "written to {}", path.display());
        }
        Command::Config(ConfigCommand::Init { dir }) => {
            let path = cmd_config_init(&dir)?;
            let _ = writeln!(stdout, "{}", path.display());
        }
        Command::Config(ConfigCommand::Check { path }) => {
            let cfg = GeaConfig::load(&path)?;
            let _ = writeln!(stdout, "ok taxonomy={} sha256={}", cfg.taxonomy.version, cfg.hash());
        }
        Command::MockServer { fixture, addr } => {
            let server = MockServer::bind(&addr, MockFixture::load(&fixture)?)?;
            let _ = writeln!(stdout, "{}", server.url());
            let _ = stdout.flush();
            server.wait();
        }
    }
    Ok(())
}

/// `run` as a directory path if it is one, else a run id under `out`.
pub fn resolve_run(out: &Path, run: &str) -> CliResult<PathBuf> {
    let direct = PathBuf::from(run);
    if direct.join(CONFIG_FILE).is_file() {
        return Ok(direct);
    }
    let under = out.join(run);
    if under.join(CONFIG_FILE).is_file() {
        return Ok(under);
    }
    Err(GeaError::NotFound(format!(
        "run `{run}` (looked in {} and {})",
        direct.display(),
        under.display()
    ))
    .into())
}

pub fn parse_thetas(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if parts.is_empty() {
        return Err(CliError::Usage("--thetas needs at least one value".into()));
    }
    parts
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|t| t.is_finite())
                .ok_or_else(|| CliError::Usage(format!("bad threshold `{s}`")))
        })
        .collect()
}

/// Config with the command-line overrides applied.
pub fn resolve_config(args: &SimulateArgs) -> CliResult<GeaConfig> {
    let base = match &args.config {
        Some(p) => GeaConfig::load(p)?,
        None => GeaConfig::default_config()?,
    };
    if args.seed.is_none() && args.mode.is_none() && args.theta.is_none() && args.backend.is_none() {
        return Ok(base);
    }
    Ok(base.with(|f| {
        if let Some(s) = args.seed {
            f.seeds.cohort = s;
        }
        if let Some(m) = args.mode {
            f.simulation.mode = m;
        }
        if let Some(t) = args.theta {
            f.routing.theta = t;
        }
        if let Some(k) = args.backend {
            f.backend.kind = k;
        }
    })?)
}

pub fn run_id(cfg: &GeaConfig) -> String {
    format!("run-{}", &cfg.hash()[..12])
}

#[derive(Clone, Debug)]
pub struct SimulateOutcome {
    pub run_id: String,
    pub dir: PathBuf,
    pub manifest: Option<RunManifest>,
    pub new_records: usize,
    pub new_failures: usize,
    pub skipped: usize,
}

pub fn cmd_simulate(args: &SimulateArgs, out: &Path) -> CliResult<SimulateOutcome> {
    let cfg = resolve_config(args)?;
    let id = run_id(&cfg);
    let dir = out.join(&id);
    let toml = cfg.to_toml();

    let cohort = if dir.join(CONFIG_FILE).exists() {
        if args.no_resume {
            return Err(GeaError::State(format!(
                "{} already exists; runs are immutable, resume it or pick another --out",
                dir.display()
            ))
            .into());
        }
        let saved =
            std::fs::read_to_string(dir.join(CONFIG_FILE)).map_err(|e| GeaError::io(dir.join(CONFIG_FILE), e))?;
        if saved != toml {
            return Err(GeaError::State(format!("{} holds a different config", dir.display())).into());
        }
        tracing::info!(run = %id, "resuming");
        read_cohort(&dir.join(COHORT_FILE))?
    } else {
        std::fs::create_dir_all(&dir).map_err(|e| GeaError::io(&dir, e))?;
        let sim = cfg.simulation();
        let cohort = sample_cohort(sim.students, cfg.seeds().cohort, &cfg.cohort, &cfg.taxonomy);
        write_cohort(&dir.join(COHORT_FILE), &cohort)?;
        // config last: its presence marks a complete run directory
        std::fs::write(dir.join(CONFIG_FILE), &toml).map_err(|e| GeaError::io(dir.join(CONFIG_FILE), e))?;
        cohort
    };

    let (generator, scorer) = build_backends(cfg.backend(), cfg.seeds().backend)?;
    let mut store = RecordStore::open(&dir.join(RECORDS_FILE))?;
    let before = store.entries().len();
    let mut engine = Engine::new(&cfg, generator.as_ref(), scorer.as_ref());
    if let Some(p) = args.parallelism {
        engine = engine.with_parallelism(p);
    }
    let theta = cfg.routing().theta;
    let mode = cfg.simulation().mode;
    let outcome = match mode {
        Mode::FullCoverage => engine.run_full_coverage(&cohort, &mut store)?,
        Mode::Adaptive => engine.run_adaptive(&cohort, theta, &mut store)?,
    };
    tracing::info!(
        run = %id,
        new_records = outcome.new_records,
        new_failures = outcome.new_failures,
        skipped = outcome.skipped,
        "simulation finished"
    );

    let mut result = SimulateOutcome {
        run_id: id.clone(),
        dir: dir.clone(),
        manifest: None,
        new_records: outcome.new_records,
        new_failures: outcome.new_failures,
        skipped: outcome.skipped,
    };
    let added = &store.entries()[before..];
    let previous = manifest::latest(&dir)?;
    if !added.is_empty() || previous.is_none() {
        write_sessions_csv(&dir.join(SESSIONS_FILE), &outcome.sessions, &cohort)?;
        let entries = store.entries();
        let done: BTreeSet<_> = successful(entries)
            .iter()
            .map(|r| (r.student_id.clone(), r.slot))
            .collect();
        let failed: BTreeSet<_> = entries
            .iter()
            .filter(|e| e.as_result().is_none())
            .map(|e| (e.student_id().to_string(), e.slot()))
            .filter(|k| !done.contains(k))
            .collect();
        let m = RunManifest {
            schema: MANIFEST_SCHEMA,
            run_id: id,
            revision: previous.map_or(1, |p| p.revision + 1),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_at: Utc::now(),
            mode,
            theta,
            seeds: cfg.seeds().clone(),
            rng: RNG_ALGORITHM.to_string(),
            taxonomy_version: cfg.taxonomy.version.clone(),
            config_sha256: cfg.hash(),
            files: file_hashes(&dir)?,
            backend: backend_info(&cfg, generator.identity(), scorer.identity()),
            counts: Counts {
                students: cohort.len(),
                records: done.len(),
                failures: failed.len(),
                new_records: outcome.new_records,
                new_failures: outcome.new_failures,
                skipped: outcome.skipped,
            },
        };
        m.write(&dir)?;
        result.manifest = Some(m);
    }

    let transport_only = !added.is_empty()
        && added
            .iter()
            .all(|e| matches!(e, StoreEntry::Failure(f) if f.error_kind == "transport"));
    if transport_only {
        return Err(CliError::TransportExhausted(added.len()));
    }
    Ok(result)
}

struct LoadedRun {
    cfg: GeaConfig,
    manifest: RunManifest,
    cohort: Vec<gea_core::cohort::StudentProfile>,
    records: Vec<gea_core::engine::ResultRecord>,
}

fn load_run(dir: &Path) -> CliResult<LoadedRun> {
    let cfg = GeaConfig::load(&dir.join(CONFIG_FILE))?;
    let manifest = manifest::latest(dir)?
        .ok_or_else(|| GeaError::State(format!("{} has no manifest; simulate did not finish", dir.display())))?;
    let cohort = read_cohort(&dir.join(COHORT_FILE))?;
    let records = successful(&read_store(&dir.join(RECORDS_FILE))?);
    Ok(LoadedRun {
        cfg,
        manifest,
        cohort,
        records,
    })
}

fn report_for(run: &LoadedRun) -> CliResult<GeaReport> {
    Ok(analytics::analyze(
        &run.cfg,
        &run.cohort,
        &run.records,
        run.manifest.metadata(),
    )?)
}

/// Writes `report/` beside the record store and returns the report.
pub fn cmd_analyze(dir: &Path) -> CliResult<GeaReport> {
    let run = load_run(dir)?;
    let report = report_for(&run)?;
    analytics::write_report(&dir.join(REPORT_DIR), &report)?;
    Ok(report)
}

pub fn cmd_sweep(dir: &Path, thetas: Option<&[f64]>) -> CliResult<SweepTable> {
    let run = load_run(dir)?;
    let a = run.cfg.analysis();
    let thetas = thetas.unwrap_or(&a.sweep_thetas);
    if thetas.is_empty() {
        return Err(CliError::Usage("no thresholds to sweep".into()));
    }
    let table = threshold_sweep(
        &run.records,
        &run.cohort,
        thetas,
        a.baseline_theta,
        &a.expected_terminal,
    )?;
    let out = dir.join(REPORT_DIR);
    std::fs::create_dir_all(&out).map_err(|e| GeaError::io(&out, e))?;
    analytics::write_sweep(&out.join("sweep.csv"), &table, &run.manifest.metadata())?;
    Ok(table)
}

/// Writes the comparison under `<out>/comparisons/`, outside both runs.
pub fn cmd_compare(a: &Path, b: &Path, out: &Path) -> CliResult<(ModelComparison, PathBuf)> {
    let (ra, rb) = (load_run(a)?, load_run(b)?);
    let cmp = compare_runs(&report_for(&ra)?, &report_for(&rb)?)?;
    let dir = out.join("comparisons");
    std::fs::create_dir_all(&dir).map_err(|e| GeaError::io(&dir, e))?;
    let path = dir.join(format!("{}__{}.json", ra.manifest.run_id, rb.manifest.run_id));
    analytics::write_json(&path, &cmp)?;
    Ok((cmp, path))
}

pub fn cmd_config_init(dir: &Path) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| GeaError::io(dir, e))?;
    let cfg = dir.join("gea.toml");
    let rubric = dir.join("rubric.md");
    for p in [&cfg, &rubric] {
        if p.exists() {
            return Err(GeaError::State(format!("{} exists; not overwriting", p.display())).into());
        }
    }
    std::fs::write(&cfg, GeaConfig::default_toml()).map_err(|e| GeaError::io(&cfg, e))?;
    std::fs::write(&rubric, GeaConfig::default_rubric()).map_err(|e| GeaError::io(&rubric, e))?;
    Ok(cfg)
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.digits$}"))
}

pub fn render_report(r: &GeaReport) -> String {
    let mut s = String::new();
    let ci = r
        .pooled_r_ci
        .map_or_else(|| "n/a".into(), |(lo, hi)| format!("[{lo:.3}, {hi:.3}]"));
    s += &format!("run            {}\n", r.metadata.run_id);
    s += &format!("students       {}\n", r.students);
    s += &format!("records        {}\n", r.records);
    s += &format!("observations   {}\n", r.observations);
    s += &format!("pooled r       {} {ci}\n", opt(r.pooled_r, 3));
    s += &format!(
        "mean bias      {:+.3} [{:+.3}, {:+.3}]\n",
        r.pooled_bias, r.pooled_bias_ci.0, r.pooled_bias_ci.1
    );
    s += &format!("exact match    {:.1}%\n", 100.0 * r.accuracy.exact);
    s += &format!("adjacent (±1)  {:.1}%\n", 100.0 * r.accuracy.adjacent);
    s += &format!("record-level r {}\n", opt(r.record_level_r, 3));
    s += &format!(
        "BH significant {} of {}\n",
        r.significant_skills,
        r.per_skill.iter().filter(|p| p.p_value.is_some()).count()
    );
    s += &format!(
        "benchmark      {:?} {}\n\n",
        r.benchmark,
        if r.benchmark_passed { "passed" } else { "NOT met" }
    );
    s += "skill  n      r       bias    tier\n";
    for p in &r.per_skill {
        s += &format!(
            "{}    {:<6} {:<7} {:<7} {}\n",
            p.skill,
            p.n,
            opt(p.r, 3),
            p.bias.map_or_else(|| "n/a".into(), |b| format!("{b:+.3}")),
            p.tier
        );
    }
    s
}

pub fn render_sweep(t: &SweepTable) -> String {
    let mut s = format!("included {} excluded {}\n", t.included, t.excluded);
    s += "theta  flip%  adv%   int%   beg%   misaligned%\n";
    for r in &t.rows {
        s += &format!(
            "{:<6} {:<6.1} {:<6.1} {:<6.1} {:<6.1} {:.1}{}\n",
            r.theta,
            r.flip_pct,
            r.advanced_pct,
            r.intermediate_pct,
            r.beginner_pct,
            r.misaligned_pct,
            if r.baseline { "  (baseline)" } else { "" }
        );
    }
    s
}

pub fn render_comparison(c: &ModelComparison) -> String {
    let mut s = String::new();
    s += &format!("                {:<24} {:<24}\n", c.a.run_id, c.b.run_id);
    s += &format!(
        "pooled r        {:<24} {:<24}\n",
        opt(c.a.pooled_r, 3),
        opt(c.b.pooled_r, 3)
    );
    s += &format!(
        "mean bias       {:<+24.3} {:<+24.3}\n",
        c.a.pooled_bias, c.b.pooled_bias
    );
    s += &format!(
        "record-level r  {:<24} {:<24}\n",
        opt(c.a.record_level_r, 3),
        opt(c.b.record_level_r, 3)
    );
    s += &format!(
        "advanced %      {:<24.1} {:<24.1}\n",
        c.a.advanced_pct, c.b.advanced_pct
    );
    s += &format!(
        "fisher z {}  p {}\n",
        opt(c.fisher_z, 2),
        c.p_value.map_or("n/a".into(), |p| format!("{p:.3e}"))
    );
    if let Some(n) = &c.note {
        s += &format!("note: {n}\n");
    }
    s
}
