//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use gea_core::analytics::stats::{benjamini_hochberg, fisher_z};
use gea_core::analytics::{
    analyze, bootstrap_ci, extract_pairs, split, threshold_sweep, write_report, BootstrapSpec, GeaReport,
    PairedObservation, ResampleUnit, RunMetadata, Statistic, Tier,
};
use gea_core::backends::mock::{MockFixture, MockServer};
use gea_core::backends::SyntheticScorerModel;
use gea_core::backends::{build_backends, ChatClient, ChatEndpointConfig, ChatGenerator, ChatScorer, RetryPolicy};
use gea_core::cohort::{sample_cohort, StudentProfile};
use gea_core::engine::{
    aggregate_score, route_stage1, terminal_level, Engine, RecordStore, ResultRecord, Rounding, StoreEntry, Terminal,
};
use gea_core::taxonomy::{Path as RoutePath, SkillId, SlotKey, Stage};
use gea_core::GeaConfig;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

type Check = Result<String, String>;
type Criterion = (&'static str, Option<Duration>, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// shared fixtures

struct SyntheticRun {
    cfg: GeaConfig,
    cohort: Vec<StudentProfile>,
    records: Vec<ResultRecord>,
    failures: usize,
}

fn synthetic_run(model: SyntheticScorerModel, students: usize) -> Result<SyntheticRun, String> {
    let cfg = GeaConfig::default_config()
        .and_then(|c| {
            c.with(|f| {
                f.backend.synthetic = model;
                f.simulation.students = students;
            })
        })
        .map_err(|e| e.to_string())?;
    let cohort = sample_cohort(students, cfg.seeds().cohort, &cfg.cohort, &cfg.taxonomy);
    let (g, s) = build_backends(cfg.backend(), cfg.seeds().backend).map_err(|e| e.to_string())?;
    let mut store = RecordStore::in_memory();
    let out = Engine::new(&cfg, g.as_ref(), s.as_ref())
        .run_full_coverage(&cohort, &mut store)
        .map_err(|e| e.to_string())?;
    Ok(SyntheticRun {
        records: store.results(),
        failures: out.new_failures,
        cfg,
        cohort,
    })
}

fn metadata(run: &SyntheticRun) -> RunMetadata {
    RunMetadata {
        run_id: "acceptance".into(),
        taxonomy_version: run.cfg.taxonomy.version.clone(),
        generator: "synthetic-generator/v1".into(),
        scorer: "synthetic-scorer/v1".into(),
        seeds: run.cfg.seeds().clone(),
        config_sha256: run.cfg.hash(),
    }
}

fn report(run: &SyntheticRun) -> Result<GeaReport, String> {
    analyze(&run.cfg, &run.cohort, &run.records, metadata(run)).map_err(|e| e.to_string())
}

fn pairs(run: &SyntheticRun) -> Result<Vec<PairedObservation>, String> {
    extract_pairs(&run.records, &run.cohort, &run.cfg.taxonomy).map_err(|e| e.to_string())
}

/// Textbook Pearson r, independent of the library's implementation.
fn naive_r(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

// ---------------------------------------------------------------------------
// 1

fn scale_and_routing() -> Check {
    let cfg = GeaConfig::default_config().map_err(|e| e.to_string())?;
    let scale = &cfg.taxonomy.scale;
    // lower bound and midpoint of every level of the published scale
    let table = [
        ("Not Demonstrated", 0.00, 0.025),
        ("Beginning", 0.05, 0.15),
        ("Emerging", 0.25, 0.35),
        ("Developing", 0.45, 0.525),
        ("Approaching", 0.60, 0.65),
        ("Proficient", 0.70, 0.75),
        ("Advanced", 0.80, 0.85),
        ("Mastered", 0.90, 0.95),
    ];
    let mut probes = 0;
    for (name, lower, mid) in table {
        for x in [lower, mid] {
            let got = scale.to_proficiency(x).map_err(|e| e.to_string())?;
            ensure(scale.name(got) == name, || {
                format!("{x} -> {} (expected {name})", scale.name(got))
            })?;
            probes += 1;
        }
    }
    ensure(scale.name(scale.to_proficiency(1.0).unwrap()) == "Mastered", || {
        "1.0 not Mastered".into()
    })?;

    let mut cases = 0;
    for theta in [0.0, 30.0, 50.0, 50.5, 70.0, 100.0] {
        let means = [0.0, theta - 0.5, theta, theta + 0.5, 100.0];
        for &m1 in &means {
            let path = route_stage1(m1, theta);
            let expected_path = if m1 >= theta { RoutePath::High } else { RoutePath::Low };
            ensure(path == expected_path, || format!("route({m1}, {theta}) = {path:?}"))?;
            for p in [RoutePath::High, RoutePath::Low] {
                for &m2 in &means {
                    let t = terminal_level(Some(p), m2, theta).map_err(|e| e.to_string())?;
                    let expected = match (p, m2 >= theta) {
                        (RoutePath::High, true) => Terminal::Advanced,
                        (RoutePath::High, false) | (RoutePath::Low, true) => Terminal::Intermediate,
                        (RoutePath::Low, false) => Terminal::Beginner,
                    };
                    ensure(t == expected, || format!("terminal({p:?}, {m2}, {theta}) = {t:?}"))?;
                    cases += 1;
                }
            }
        }
        ensure(terminal_level(None, 60.0, theta).is_err(), || {
            "undecided path accepted".into()
        })?;
    }
    Ok(format!("{probes} scale probes, {cases} routing cases"))
}

// ---------------------------------------------------------------------------
// 2

fn aggregation() -> Check {
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(2);
    let mut checked = 0;
    for i in 0..10_000 {
        let n = rng.random_range(1..=24usize);
        let mut entries = vec![-1.0f64; 24];
        let mut positions: Vec<usize> = (0..24).collect();
        for k in 0..n {
            let j = rng.random_range(k..24);
            positions.swap(k, j);
        }
        let got;
        let expected;
        if i % 2 == 0 {
            // three-decimal values: the oracle rounds exactly in integers
            let ks: Vec<u64> = (0..n).map(|_| rng.random_range(0..=1000u64)).collect();
            for (k, &p) in ks.iter().zip(&positions) {
                entries[p] = *k as f64 / 1000.0;
            }
            let sum: u64 = ks.iter().sum();
            // round_half_up(sum / (10 n))
            expected = ((2 * sum + 10 * n as u64) / (20 * n as u64)) as u32;
            got = aggregate_score(&entries, Rounding::HalfUp).map_err(|e| e.to_string())?;
        } else {
            let vs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            for (v, &p) in vs.iter().zip(&positions) {
                entries[p] = *v;
            }
            let x = vs.iter().sum::<f64>() / n as f64 * 100.0;
            if (x.fract() - 0.5).abs() < 1e-6 {
                continue;
            }
            expected = x.round() as u32;
            got = aggregate_score(&entries, Rounding::HalfUp).map_err(|e| e.to_string())?;
        }
        ensure(got == expected, || format!("vector {entries:?}: {got} != {expected}"))?;
        checked += 1;
    }
    ensure(aggregate_score(&[-1.0f64; 24], Rounding::HalfUp).is_err(), || {
        "all-sentinel accepted".into()
    })?;
    ensure(aggregate_score(&[0.5, 1.2], Rounding::HalfUp).is_err(), || {
        "out-of-range accepted".into()
    })?;
    ensure(aggregate_score(&[0.335f64], Rounding::HalfUp).ok() == Some(34), || {
        "0.335 did not round to 34".into()
    })?;
    Ok(format!("{checked} vectors match, all-sentinel rejected"))
}

// ---------------------------------------------------------------------------
// 3

fn oracle_identity() -> Check {
    let run = synthetic_run(SyntheticScorerModel::identity(), 150)?;
    ensure(run.records.len() == 900 && run.failures == 0, || {
        format!("{} records, {} failures", run.records.len(), run.failures)
    })?;
    let r = report(&run)?;
    ensure(r.observations == 8250, || format!("{} observations", r.observations))?;
    ensure(r.pooled_r == Some(1.0), || format!("pooled r {:?}", r.pooled_r))?;
    ensure(r.pooled_bias == 0.0, || format!("bias {}", r.pooled_bias))?;
    Ok(format!("900 records, {} pairs, r = 1.0, bias = 0.0", r.observations))
}

// ---------------------------------------------------------------------------
// 4

fn oracle_bias_recovery() -> Check {
    let (b, sigma) = (0.06, 0.10);
    let model = SyntheticScorerModel {
        bias: b,
        sigma,
        ..SyntheticScorerModel::identity()
    };
    let run = synthetic_run(model, 150)?;
    let r = report(&run)?;
    let pairs = pairs(&run)?;
    ensure(pairs.len() >= 8000, || format!("{} pairs", pairs.len()))?;
    let (xs, _) = split(&pairs);

    // Monte Carlo oracle: redraw the scorer's noise on the same true values
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(0x0AC1E);
    let normal = Normal::new(0.0, sigma).unwrap();
    let reps = 100;
    let (mut bias_sum, mut r_sum) = (0.0, 0.0);
    let mut ys = vec![0.0; xs.len()];
    for _ in 0..reps {
        for (y, &x) in ys.iter_mut().zip(&xs) {
            *y = (x + b + normal.sample(&mut rng)).clamp(0.0, 1.0);
        }
        bias_sum += ys.iter().zip(&xs).map(|(y, x)| y - x).sum::<f64>() / xs.len() as f64;
        r_sum += naive_r(&xs, &ys);
    }
    let (oracle_bias, oracle_r) = (bias_sum / reps as f64, r_sum / reps as f64);
    let pooled_r = r.pooled_r.ok_or("pooled r undefined")?;
    ensure((r.pooled_bias - oracle_bias).abs() <= 0.01, || {
        format!("bias {:.4} vs oracle {oracle_bias:.4}", r.pooled_bias)
    })?;
    ensure((pooled_r - oracle_r).abs() <= 0.03, || {
        format!("r {pooled_r:.4} vs oracle {oracle_r:.4}")
    })?;
    Ok(format!(
        "bias {:+.4} (oracle {oracle_bias:+.4}), r {pooled_r:.4} (oracle {oracle_r:.4}), {} pairs",
        r.pooled_bias,
        pairs.len()
    ))
}

// ---------------------------------------------------------------------------
// 5

fn calibration_floor() -> Check {
    let model = SyntheticScorerModel {
        sigma: 0.05,
        floor: 0.20,
        ..SyntheticScorerModel::identity()
    };
    let run = synthetic_run(model, 150)?;
    let r = report(&run)?;
    let nd = r
        .calibration
        .iter()
        .find(|b| b.level == "Not Demonstrated")
        .ok_or("no Not Demonstrated band")?;
    let nd_mean = nd.mean_observed.ok_or("Not Demonstrated band is empty")?;
    ensure((0.17..=0.23).contains(&nd_mean), || {
        format!("Not Demonstrated mean {nd_mean:.4}")
    })?;

    let pairs = pairs(&run)?;
    let scale = &run.cfg.taxonomy.scale;
    let mut worst: f64 = 0.0;
    for band in scale.levels().iter().filter(|l| l.lower >= 0.8) {
        let inside: Vec<&PairedObservation> = pairs
            .iter()
            .filter(|p| scale.name(scale.to_proficiency(p.true_value).unwrap()) == band.name)
            .collect();
        ensure(!inside.is_empty(), || format!("band {} empty", band.name))?;
        let n = inside.len() as f64;
        let t = inside.iter().map(|p| p.true_value).sum::<f64>() / n;
        let o = inside.iter().map(|p| p.observed_value).sum::<f64>() / n;
        worst = worst.max((o - t).abs());
    }
    ensure(worst <= 0.05, || format!("high band off diagonal by {worst:.4}"))?;
    Ok(format!(
        "Not Demonstrated mean {nd_mean:.4} (n = {}), high bands within {worst:.4}",
        nd.n
    ))
}

// ---------------------------------------------------------------------------
// 6

fn degenerate_skill() -> Check {
    let s20 = SkillId::new(20).unwrap();
    let model = SyntheticScorerModel {
        sigma: 0.1,
        degenerate: BTreeMap::from([(s20, 0.4)]),
        ..SyntheticScorerModel::identity()
    };
    let run = synthetic_run(model, 150)?;
    let r = report(&run)?;
    let row = r.per_skill.iter().find(|s| s.skill == s20).ok_or("S20 missing")?;
    ensure(row.r.is_none() && row.tier == Tier::Undefined, || {
        format!("S20 r {:?}", row.r)
    })?;
    ensure(row.p_value.is_none() && !row.significant_bh, || "S20 entered BH".into())?;
    ensure(row.n == 150, || format!("S20 n {}", row.n))?;
    let tested = r.per_skill.iter().filter(|s| s.p_value.is_some()).count();
    ensure(tested == 22, || format!("{tested} skills in BH, expected 22"))?;
    ensure(r.per_skill.len() == 24, || "per-skill table not complete".into())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_report(dir.path(), &r).map_err(|e| e.to_string())?;
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .map_err(|e| e.to_string())?;
    let s20_json = json["per_skill"]
        .as_array()
        .and_then(|a| a.iter().find(|v| v["skill"] == "S20"))
        .ok_or("S20 not in summary.json")?;
    ensure(s20_json["r"] == "n/a", || {
        format!("summary.json S20 r = {}", s20_json["r"])
    })?;
    let csv = std::fs::read_to_string(dir.path().join("per_skill.csv")).unwrap();
    let line = csv
        .lines()
        .find(|l| l.starts_with("S20,"))
        .ok_or("S20 not in per_skill.csv")?;
    ensure(line.split(',').nth(3) == Some("n/a"), || format!("csv row {line}"))?;
    ensure(r.pooled_r.is_some_and(f64::is_finite), || "pooled r not finite".into())?;
    Ok(format!("S20 r = n/a, {tested} skills in BH, report written"))
}

// ---------------------------------------------------------------------------
// 7

fn bh_brute_force(p: &[f64], alpha: f64) -> Vec<bool> {
    let m = p.len();
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    match (1..=m).rev().find(|&k| sorted[k - 1] <= k as f64 * alpha / m as f64) {
        None => vec![false; m],
        Some(k) => p.iter().map(|&x| x <= sorted[k - 1]).collect(),
    }
}

fn statistics() -> Check {
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(7);
    for _ in 0..500 {
        let m = rng.random_range(1..=50usize);
        // mixture of tiny and uniform p-values so rejections actually happen
        let p: Vec<f64> = (0..m)
            .map(|_| {
                if rng.random_bool(0.3) {
                    rng.random::<f64>() * 0.01
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        ensure(benjamini_hochberg(&p, 0.05) == bh_brute_force(&p, 0.05), || {
            format!("BH mismatch on {p:?}")
        })?;
    }

    let (z, p) = fisher_z(0.698f64, 7788, 0.447, 7788).map_err(|e| e.to_string())?;
    ensure((z - 23.8).abs() <= 0.3, || format!("z = {z}"))?;
    ensure(p < 1e-100, || format!("p = {p}"))?;

    let (b, n, reps) = (0.06, 1000, 200);
    let normal = Normal::new(0.0, 0.1).unwrap();
    let mut covered = 0;
    for rep in 0..reps {
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x + b + normal.sample(&mut rng)).collect();
        let spec = BootstrapSpec {
            resamples: 1000,
            level: 0.95,
            seed: 1000 + rep,
            unit: ResampleUnit::Observation,
            max_redraws: 100,
        };
        let ci = bootstrap_ci(&xs, &ys, None, Statistic::Bias, &spec).map_err(|e| e.to_string())?;
        covered += (ci.lo <= b && b <= ci.hi) as usize;
    }
    let coverage = covered as f64 / reps as f64;
    ensure(coverage >= 0.90, || format!("coverage {coverage:.3}"))?;
    Ok(format!(
        "BH 500/500, z = {z:.2}, bootstrap coverage {:.1}%",
        100.0 * coverage
    ))
}

// ---------------------------------------------------------------------------
// 8

fn rank(t: Terminal) -> u8 {
    match t {
        Terminal::Beginner => 0,
        Terminal::Intermediate => 1,
        Terminal::Advanced => 2,
    }
}

fn sweep_contract() -> Check {
    let run = synthetic_run(GeaConfig::default_config().unwrap().backend().synthetic.clone(), 150)?;
    let a = run.cfg.analysis();
    let grid: Vec<f64> = (0..=202).map(|i| i as f64 * 0.5).collect();
    let table = threshold_sweep(&run.records, &run.cohort, &grid, a.baseline_theta, &a.expected_terminal)
        .map_err(|e| e.to_string())?;
    ensure(table.included == 150, || {
        format!("{} students included", table.included)
    })?;
    for row in &table.rows {
        let sum = row.advanced_pct + row.intermediate_pct + row.beginner_pct;
        ensure((sum - 100.0).abs() <= 0.1, || {
            format!("theta {}: terminals sum to {sum}", row.theta)
        })?;
        if row.theta == a.baseline_theta {
            ensure(row.baseline && row.flip_pct == 0.0, || {
                format!("baseline flip {}", row.flip_pct)
            })?;
        }
    }
    for w in table.rows.windows(2) {
        for (i, (lo, hi)) in w[0].terminals.iter().zip(&w[1].terminals).enumerate() {
            ensure(rank(*hi) <= rank(*lo), || {
                format!(
                    "{} rises from {lo:?} to {hi:?} at theta {}",
                    table.students[i], w[1].theta
                )
            })?;
        }
    }
    let first = &table.rows[0];
    ensure(first.beginner_pct == 0.0, || "Beginner terminal at theta 0".into())?;
    let last = table.rows.last().unwrap();
    ensure(last.beginner_pct == 100.0, || {
        "theta 101 did not route everyone to Beginner".into()
    })?;
    Ok(format!(
        "{} thresholds x {} students, baseline flip 0, monotone",
        table.rows.len(),
        table.included
    ))
}

// ---------------------------------------------------------------------------
// 9

fn mock_fixture(name: &str) -> MockFixture {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures/mock")
        .join(name);
    MockFixture::load(&path).unwrap()
}

fn mock_task(fixture: &str, key: SlotKey) -> Result<(StoreEntry, usize), String> {
    let server = MockServer::start(mock_fixture(fixture)).map_err(|e| e.to_string())?;
    let endpoint = ChatEndpointConfig {
        endpoint: server.url(),
        model: "mock".into(),
        temperature: 0.0,
        api_key_env: "UNUSED".into(),
        timeout_secs: 5,
    };
    let retry = RetryPolicy {
        max_retries: 3,
        base_delay_ms: 1,
        max_delay_ms: 4,
    };
    let client = ChatClient::new(endpoint, retry, "key".into()).map_err(|e| e.to_string())?;
    let cfg = GeaConfig::default_config().map_err(|e| e.to_string())?;
    let (g, s) = (ChatGenerator::new(client.clone()), ChatScorer::new(client));
    let profile = &sample_cohort(1, 3, &cfg.cohort, &cfg.taxonomy)[0];
    let entry = Engine::new(&cfg, &g, &s).run_task(profile, key);
    Ok((entry, server.requests().len()))
}

fn expect_failure(fixture: &str, key: SlotKey, kind: &str, needle: &str) -> Result<(), String> {
    match mock_task(fixture, key)?.0 {
        StoreEntry::Failure(f) if f.error_kind == kind && f.message.contains(needle) => Ok(()),
        StoreEntry::Failure(f) => Err(format!("{key}: {} {}", f.error_kind, f.message)),
        StoreEntry::Result(_) => Err(format!("{key}: {fixture} accepted")),
    }
}

fn backend_robustness() -> Check {
    for (i, key) in SlotKey::all().into_iter().enumerate() {
        match mock_task("valid.toml", key)?.0 {
            StoreEntry::Result(r) => ensure(r.score == 30 + 10 * i as u32, || format!("{key}: score {}", r.score))?,
            StoreEntry::Failure(f) => return Err(format!("{key}: {}", f.message)),
        }
    }
    expect_failure(
        "invalid.toml",
        SlotKey::new(Stage::Stage1, 1),
        "validation",
        "expected 24 entries",
    )?;
    expect_failure("invalid.toml", SlotKey::new(Stage::Stage1, 2), "validation", "S05")?;
    expect_failure("invalid.toml", SlotKey::new(Stage::Stage2High, 1), "validation", "S01")?;
    let (entry, calls) = mock_task("flaky.toml", SlotKey::new(Stage::Stage1, 1))?;
    ensure(matches!(entry, StoreEntry::Result(_)), || {
        "no success after 3 transient failures".into()
    })?;
    ensure(calls == 6, || format!("{calls} calls, expected 6"))?;
    match mock_task("malformed.toml", SlotKey::new(Stage::Stage1, 1))?.0 {
        StoreEntry::Failure(f) if f.error_kind == "transport" && f.raw.is_some() => {}
        other => return Err(format!("malformed body: {other:?}")),
    }
    Ok("6 valid slots, 3 typed rejections, 3 retries survived, raw body kept".into())
}

// ---------------------------------------------------------------------------
// 10

fn gea(args: &[&str], cwd: &Path) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_gea"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "error")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "gea {} exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).trim().to_string())
}

fn strip_timestamps(text: &str) -> String {
    text.lines()
        .map(|l| {
            let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
            if let Some(o) = v.as_object_mut() {
                o.remove("started_at");
                o.remove("finished_at");
                o.remove("created_at");
            }
            v.to_string()
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn reproducibility() -> Check {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cwd = root.path();
    gea(&["config", "init", "cfg"], cwd)?;
    let mut dirs = Vec::new();
    for (out, par) in [("a", "1"), ("b", "8")] {
        let id = gea(
            &[
                "simulate",
                "--config",
                "cfg/gea.toml",
                "--out",
                out,
                "--parallelism",
                par,
            ],
            cwd,
        )?;
        gea(&["analyze", "--out", out, &id], cwd)?;
        gea(&["sweep", "--out", out, &id], cwd)?;
        dirs.push(cwd.join(out).join(id));
    }
    let (a, b) = (&dirs[0], &dirs[1]);
    ensure(a.file_name() == b.file_name(), || "run ids differ".into())?;
    let read = |p: PathBuf| std::fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()));
    let mut compared = 0;
    for name in ["config.toml", "cohort.jsonl", "sessions.csv"] {
        ensure(read(a.join(name))? == read(b.join(name))?, || format!("{name} differs"))?;
        compared += 1;
    }
    let (x, y) = (read(a.join("records.jsonl"))?, read(b.join("records.jsonl"))?);
    ensure(strip_timestamps(&x) == strip_timestamps(&y), || {
        "records.jsonl differs beyond timestamps".into()
    })?;
    compared += 1;
    // the manifest hashes records.jsonl as written, timestamps included
    let manifest = |dir: &Path| -> Result<serde_json::Value, String> {
        let mut v: serde_json::Value =
            serde_json::from_str(&read(dir.join("manifest-001.json"))?).map_err(|e| e.to_string())?;
        v.as_object_mut().unwrap().remove("created_at");
        v["files"].as_object_mut().unwrap().remove("records.jsonl");
        Ok(v)
    };
    ensure(manifest(a)? == manifest(b)?, || {
        "manifest-001.json differs beyond timestamps".into()
    })?;
    compared += 1;
    let mut report_files: Vec<_> = std::fs::read_dir(a.join("report"))
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .collect();
    report_files.sort();
    for name in &report_files {
        let (x, y) = (
            std::fs::read(a.join("report").join(name)).unwrap(),
            std::fs::read(b.join("report").join(name)).map_err(|e| e.to_string())?,
        );
        ensure(x == y, || format!("report/{} differs", name.to_string_lossy()))?;
        compared += 1;
    }
    ensure(report_files.len() == 5, || {
        format!("{} report files", report_files.len())
    })?;
    // resuming adds nothing
    let id = a.file_name().unwrap().to_string_lossy().into_owned();
    let before = read(a.join("records.jsonl"))?;
    gea(&["simulate", "--config", "cfg/gea.toml", "--out", "a"], cwd)?;
    ensure(read(a.join("records.jsonl"))? == before, || {
        "resume changed the record store".into()
    })?;
    ensure(!a.join("manifest-002.json").exists(), || {
        "resume wrote a new manifest".into()
    })?;
    Ok(format!(
        "{compared} files identical across two runs of {id} (parallelism 1 vs 8)"
    ))
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "scale/routing exactness",
            Some(Duration::from_secs(1)),
            scale_and_routing,
        ),
        ("aggregation contract", Some(Duration::from_secs(5)), aggregation),
        ("oracle identity", None, oracle_identity),
        (
            "oracle bias recovery",
            Some(Duration::from_secs(30)),
            oracle_bias_recovery,
        ),
        ("calibration-floor reproduction", None, calibration_floor),
        ("degenerate skill handling", None, degenerate_skill),
        ("statistics correctness", Some(Duration::from_secs(120)), statistics),
        ("sweep contract", None, sweep_contract),
        ("backend robustness", None, backend_robustness),
        ("reproducibility", None, reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if elapsed > l => Err(format!("took {elapsed:.2?}, limit {l:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({elapsed:.2?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} ({elapsed:.2?})", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
