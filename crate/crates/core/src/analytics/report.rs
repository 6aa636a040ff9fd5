//! Full agreement report, cross-run comparison and file exports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_ci, BootstrapSpec, Interval, ResampleUnit, Statistic};
use super::pairs::{extract_pairs, split};
use super::stats::{fisher_z, pearson, signed_bias};
use super::sweep::SweepTable;
use super::tables::{
    calibration_curve, confusion_matrix, fmt_na, na, per_skill_table, proficiency_accuracy, Accuracy, CalibrationBand,
    ConfusionMatrix, PerSkillStats,
};
use crate::cohort::StudentProfile;
use crate::config::{GeaConfig, Seeds};
use crate::engine::{sessions_from_records, ResultRecord, Terminal};
use crate::error::{GeaError, Result};

pub const REPORT_SCHEMA: u32 = 1;

/// Tier the pooled r must clear for a run to pass.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    /// r > 0.7
    Strong,
    /// r > 0.4
    Moderate,
    None,
}

impl Benchmark {
    pub fn passes(self, r: Option<f64>) -> bool {
        match self {
            Benchmark::None => true,
            Benchmark::Strong => r.is_some_and(|r| r > 0.7),
            Benchmark::Moderate => r.is_some_and(|r| r > 0.4),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub run_id: String,
    pub taxonomy_version: String,
    pub generator: String,
    pub scorer: String,
    pub seeds: Seeds,
    pub config_sha256: String,
}

impl RunMetadata {
    /// `# key: value` lines prefixed to tabular exports.
    pub fn header(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# run_id: {}", self.run_id);
        let _ = writeln!(s, "# taxonomy_version: {}", self.taxonomy_version);
        let _ = writeln!(s, "# generator: {}", self.generator);
        let _ = writeln!(s, "# scorer: {}", self.scorer);
        let _ = writeln!(
            s,
            "# seeds: cohort={} backend={} bootstrap={}",
            self.seeds.cohort, self.seeds.backend, self.seeds.bootstrap
        );
        let _ = writeln!(s, "# config_sha256: {}", self.config_sha256);
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerminalDistribution {
    pub theta: f64,
    /// Students with a terminal level.
    pub n: usize,
    pub advanced_pct: f64,
    pub intermediate_pct: f64,
    pub beginner_pct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInfo {
    pub resamples: usize,
    pub level: f64,
    pub unit: ResampleUnit,
    pub seed: u64,
    pub redraws_r: usize,
    pub redraws_bias: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeaReport {
    pub schema: u32,
    pub metadata: RunMetadata,
    pub students: usize,
    pub records: usize,
    pub observations: usize,
    #[serde(with = "na")]
    pub pooled_r: Option<f64>,
    pub pooled_r_ci: Option<(f64, f64)>,
    pub pooled_bias: f64,
    pub pooled_bias_ci: (f64, f64),
    pub accuracy: Accuracy,
    #[serde(with = "na")]
    pub record_level_r: Option<f64>,
    pub benchmark: Benchmark,
    pub benchmark_passed: bool,
    pub significant_skills: usize,
    pub per_skill: Vec<PerSkillStats>,
    pub confusion: ConfusionMatrix,
    pub calibration: Vec<CalibrationBand>,
    pub terminal: TerminalDistribution,
    pub bootstrap: BootstrapInfo,
}

fn bootstrap_spec(cfg: &GeaConfig) -> BootstrapSpec {
    let a = cfg.analysis();
    BootstrapSpec {
        resamples: a.bootstrap_resamples,
        level: a.ci_level,
        seed: cfg.seeds().bootstrap,
        unit: a.resample_unit,
        max_redraws: a.max_redraws,
    }
}

/// Correlation of each record's scalar score with the mean true value of
/// the skills it tests.
pub fn record_level_r(records: &[ResultRecord], cohort: &[StudentProfile]) -> Result<Option<f64>> {
    let by_id: BTreeMap<&str, &StudentProfile> = cohort.iter().map(|p| (p.student_id.as_str(), p)).collect();
    let mut xs = Vec::with_capacity(records.len());
    let mut ys = Vec::with_capacity(records.len());
    for r in records {
        let p = by_id
            .get(r.student_id.as_str())
            .ok_or_else(|| GeaError::Join(format!("record for unknown student `{}`", r.student_id)))?;
        let truth: Vec<f64> = r.observed.values().map(|(id, _)| p.skill(id)).collect();
        xs.push(truth.iter().sum::<f64>() / truth.len() as f64);
        ys.push(r.score as f64 / 100.0);
    }
    if xs.len() < 2 {
        return Ok(None);
    }
    pearson(&xs, &ys)
}

pub fn analyze(
    cfg: &GeaConfig,
    cohort: &[StudentProfile],
    records: &[ResultRecord],
    metadata: RunMetadata,
) -> Result<GeaReport> {
    if records.is_empty() {
        return Err(GeaError::InsufficientData("run has no successful records".into()));
    }
    let pairs = extract_pairs(records, cohort, &cfg.taxonomy)?;
    let (xs, ys) = split(&pairs);
    let pooled_r = pearson(&xs, &ys)?;
    let pooled_bias = signed_bias(&xs, &ys)?;

    let spec = bootstrap_spec(cfg);
    let mut ordinal: BTreeMap<&str, usize> = BTreeMap::new();
    let clusters: Vec<usize> = pairs
        .iter()
        .map(|p| {
            let next = ordinal.len();
            *ordinal.entry(p.student_id.as_str()).or_insert(next)
        })
        .collect();
    let r_ci: Option<Interval<f64>> = match pooled_r {
        Some(_) => Some(bootstrap_ci(&xs, &ys, Some(&clusters), Statistic::R, &spec)?),
        None => None,
    };
    let bias_ci = bootstrap_ci(&xs, &ys, Some(&clusters), Statistic::Bias, &spec)?;

    let scale = &cfg.taxonomy.scale;
    let per_skill = per_skill_table(&pairs, &cfg.taxonomy, cfg.analysis().alpha);
    let theta = cfg.routing().theta;
    let sessions = sessions_from_records(records, cohort, theta);
    let terminals: Vec<Terminal> = sessions.iter().filter_map(|s| s.terminal).collect();
    let share = |t: Terminal| {
        if terminals.is_empty() {
            0.0
        } else {
            100.0 * terminals.iter().filter(|&&x| x == t).count() as f64 / terminals.len() as f64
        }
    };
    let benchmark = cfg.analysis().benchmark;
    Ok(GeaReport {
        schema: REPORT_SCHEMA,
        metadata,
        students: records
            .iter()
            .map(|r| r.student_id.as_str())
            .collect::<std::collections::BTreeSet<_>>()
            .len(),
        records: records.len(),
        observations: pairs.len(),
        pooled_r,
        pooled_r_ci: r_ci.map(|c| (c.lo, c.hi)),
        pooled_bias,
        pooled_bias_ci: (bias_ci.lo, bias_ci.hi),
        accuracy: proficiency_accuracy(&pairs, scale)?,
        record_level_r: record_level_r(records, cohort)?,
        benchmark,
        benchmark_passed: benchmark.passes(pooled_r),
        significant_skills: per_skill.iter().filter(|s| s.significant_bh).count(),
        per_skill,
        confusion: confusion_matrix(&pairs, scale)?,
        calibration: calibration_curve(&pairs, scale)?,
        terminal: TerminalDistribution {
            theta,
            n: terminals.len(),
            advanced_pct: share(Terminal::Advanced),
            intermediate_pct: share(Terminal::Intermediate),
            beginner_pct: share(Terminal::Beginner),
        },
        bootstrap: BootstrapInfo {
            resamples: spec.resamples,
            level: spec.level,
            unit: spec.unit,
            seed: spec.seed,
            redraws_r: r_ci.map_or(0, |c| c.redraws),
            redraws_bias: bias_ci.redraws,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSide {
    pub run_id: String,
    pub generator: String,
    pub scorer: String,
    pub observations: usize,
    #[serde(with = "na")]
    pub pooled_r: Option<f64>,
    pub pooled_bias: f64,
    #[serde(with = "na")]
    pub record_level_r: Option<f64>,
    pub advanced_pct: f64,
    pub intermediate_pct: f64,
    pub beginner_pct: f64,
}

impl From<&GeaReport> for RunSide {
    fn from(r: &GeaReport) -> Self {
        RunSide {
            run_id: r.metadata.run_id.clone(),
            generator: r.metadata.generator.clone(),
            scorer: r.metadata.scorer.clone(),
            observations: r.observations,
            pooled_r: r.pooled_r,
            pooled_bias: r.pooled_bias,
            record_level_r: r.record_level_r,
            advanced_pct: r.terminal.advanced_pct,
            intermediate_pct: r.terminal.intermediate_pct,
            beginner_pct: r.terminal.beginner_pct,
        }
    }
}

/// Side-by-side comparison; deltas are `a - b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub taxonomy_version: String,
    pub a: RunSide,
    pub b: RunSide,
    pub bias_delta: f64,
    #[serde(with = "na")]
    pub r_delta: Option<f64>,
    #[serde(with = "na")]
    pub fisher_z: Option<f64>,
    #[serde(with = "na")]
    pub p_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn compare_runs(a: &GeaReport, b: &GeaReport) -> Result<ModelComparison> {
    if a.metadata.taxonomy_version != b.metadata.taxonomy_version {
        return Err(GeaError::Comparability(format!(
            "taxonomy `{}` vs `{}`",
            a.metadata.taxonomy_version, b.metadata.taxonomy_version
        )));
    }
    let (z, p, note) = match (a.pooled_r, b.pooled_r) {
        (Some(ra), Some(rb)) => match fisher_z(ra, a.observations, rb, b.observations) {
            Ok((z, p)) => (Some(z), Some(p), None),
            Err(e) => (None, None, Some(e.to_string())),
        },
        _ => (None, None, Some("pooled r undefined in at least one run".into())),
    };
    Ok(ModelComparison {
        taxonomy_version: a.metadata.taxonomy_version.clone(),
        a: a.into(),
        b: b.into(),
        bias_delta: a.pooled_bias - b.pooled_bias,
        r_delta: a.pooled_r.zip(b.pooled_r).map(|(x, y)| x - y),
        fisher_z: z,
        p_value: p,
        note,
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> GeaError + '_ {
    move |e| GeaError::io(path, std::io::Error::other(e))
}

/// Writes `header` then the CSV rows produced by `fill`.
fn write_csv(
    path: &Path,
    header: &str,
    fill: impl FnOnce(&mut csv::Writer<File>) -> std::result::Result<(), csv::Error>,
) -> Result<()> {
    let mut file = File::create(path).map_err(|e| GeaError::io(path, e))?;
    file.write_all(header.as_bytes()).map_err(|e| GeaError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    fill(&mut w).map_err(csv_err(path))?;
    w.flush().map_err(|e| GeaError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| GeaError::io(path, e))
}

/// `summary.json`, `per_skill.csv`, `confusion.csv` and `calibration.csv`.
pub fn write_report(dir: &Path, report: &GeaReport) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| GeaError::io(dir, e))?;
    write_json(&dir.join("summary.json"), report)?;
    let header = report.metadata.header();

    write_csv(&dir.join("per_skill.csv"), &header, |w| {
        w.write_record(["skill", "name", "n", "r", "bias", "p_value", "significant_bh", "tier"])?;
        for s in &report.per_skill {
            w.write_record([
                s.skill.to_string(),
                s.name.clone(),
                s.n.to_string(),
                fmt_na(s.r),
                fmt_na(s.bias),
                fmt_na(s.p_value),
                s.significant_bh.to_string(),
                s.tier.to_string(),
            ])?;
        }
        Ok(())
    })?;

    let c = &report.confusion;
    write_csv(&dir.join("confusion.csv"), &header, |w| {
        let mut head = vec!["true_level".to_string(), "n".to_string()];
        head.extend(c.levels.iter().cloned());
        w.write_record(&head)?;
        for (i, level) in c.levels.iter().enumerate() {
            let mut row = vec![level.clone(), c.row_counts[i].to_string()];
            match &c.rates[i] {
                Some(rates) => row.extend(rates.iter().map(|x| x.to_string())),
                None => row.extend(c.levels.iter().map(|_| "n/a".to_string())),
            }
            w.write_record(&row)?;
        }
        Ok(())
    })?;

    write_csv(&dir.join("calibration.csv"), &header, |w| {
        w.write_record(["level", "midpoint", "n", "mean_observed", "sd_observed"])?;
        for b in &report.calibration {
            w.write_record([
                b.level.clone(),
                b.midpoint.to_string(),
                b.n.to_string(),
                fmt_na(b.mean_observed),
                fmt_na(b.sd_observed),
            ])?;
        }
        Ok(())
    })
}

pub fn write_sweep(path: &Path, table: &SweepTable, metadata: &RunMetadata) -> Result<()> {
    let header = format!(
        "{}# baseline_theta: {}\n# included: {}\n# excluded: {}\n",
        metadata.header(),
        table.baseline_theta,
        table.included,
        table.excluded
    );
    write_csv(path, &header, |w| {
        w.write_record([
            "theta",
            "baseline",
            "flip_pct",
            "advanced_pct",
            "intermediate_pct",
            "beginner_pct",
            "misaligned_pct",
        ])?;
        for r in &table.rows {
            w.write_record([
                r.theta.to_string(),
                r.baseline.to_string(),
                r.flip_pct.to_string(),
                r.advanced_pct.to_string(),
                r.intermediate_pct.to_string(),
                r.beginner_pct.to_string(),
                r.misaligned_pct.to_string(),
            ])?;
        }
        Ok(())
    })
}
