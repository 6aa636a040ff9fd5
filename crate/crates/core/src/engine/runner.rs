//! Full-coverage and adaptive runs over a cohort.

use std::collections::BTreeMap;
use std::path::Path as FsPath;

use chrono::Utc;

use super::exec::ordered_map;
use super::record::{completed, FailureRecord, ResultRecord, StoreEntry, StoreLine};
use super::routing::SessionState;
use super::scenario::assign_scenario;
use crate::backends::{
    multi_sample_score, parse_score_reply, GenerationRequest, GeneratorBackend, QuestionRequest, ScoreRequest,
    ScorerBackend,
};
use crate::cohort::{describe_profile, StudentProfile};
use crate::config::GeaConfig;
use crate::error::{GeaError, Result, TransportError};
use crate::store::{self, AppendLog};
use crate::taxonomy::{Path, SlotKey, Stage};

/// Entries of a run, optionally mirrored to an append-only file.
pub struct RecordStore {
    entries: Vec<StoreEntry>,
    log: Option<AppendLog>,
}

impl RecordStore {
    pub fn in_memory() -> Self {
        RecordStore {
            entries: Vec::new(),
            log: None,
        }
    }

    /// Opens `path` for appending, loading whatever it already holds.
    pub fn open(path: &FsPath) -> Result<Self> {
        let entries = if path.exists() {
            let lines: Vec<StoreLine> = store::read_lines(path)?;
            lines.into_iter().map(|l| l.entry).collect()
        } else {
            Vec::new()
        };
        Ok(RecordStore {
            entries,
            log: Some(AppendLog::open(path)?),
        })
    }

    pub fn push(&mut self, entry: StoreEntry) -> Result<()> {
        if let Some(log) = &mut self.log {
            log.append(&StoreLine::from(entry.clone()))?;
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[StoreEntry] {
        &self.entries
    }

    fn done(&self) -> BTreeMap<(String, SlotKey), u32> {
        completed(&self.entries)
            .into_iter()
            .map(|(k, r)| (k, r.score))
            .collect()
    }

    /// Latest successful record per `(student, slot)`.
    pub fn results(&self) -> Vec<ResultRecord> {
        super::record::successful(&self.entries)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutcome {
    pub new_records: usize,
    pub new_failures: usize,
    /// Tasks skipped because a successful record already existed.
    pub skipped: usize,
    pub sessions: Vec<SessionState>,
}

pub struct Engine<'a> {
    config: &'a GeaConfig,
    generator: &'a dyn GeneratorBackend,
    scorer: &'a dyn ScorerBackend,
    parallelism: usize,
}

struct Failed {
    error: GeaError,
    raw: Option<String>,
}

impl From<GeaError> for Failed {
    fn from(error: GeaError) -> Self {
        let raw = match &error {
            GeaError::Transport(TransportError::MalformedBody { raw, .. }) => Some(raw.clone()),
            _ => None,
        };
        Failed { error, raw }
    }
}

impl<'a> Engine<'a> {
    pub fn new(config: &'a GeaConfig, generator: &'a dyn GeneratorBackend, scorer: &'a dyn ScorerBackend) -> Self {
        Engine {
            config,
            generator,
            scorer,
            parallelism: config.backend().parallelism,
        }
    }

    pub fn with_parallelism(mut self, parallelism: usize) -> Self {
        self.parallelism = parallelism.max(1);
        self
    }

    /// One generate-then-score task. Never fails: errors become failure entries.
    pub fn run_task(&self, profile: &StudentProfile, key: SlotKey) -> StoreEntry {
        let started_at = Utc::now();
        let outcome = self.attempt(profile, key);
        let finished_at = Utc::now();
        match outcome {
            Ok(mut record) => {
                record.started_at = started_at;
                record.finished_at = finished_at;
                StoreEntry::Result(record)
            }
            Err(Failed { error, raw }) => {
                tracing::warn!(student = %profile.student_id, slot = %key, %error, "task failed");
                StoreEntry::Failure(FailureRecord {
                    student_id: profile.student_id.clone(),
                    slot: key,
                    error_kind: error.kind().to_string(),
                    message: error.to_string(),
                    raw,
                    generator: self.generator.identity(),
                    scorer: self.scorer.identity(),
                    started_at,
                    finished_at,
                })
            }
        }
    }

    fn attempt(&self, profile: &StudentProfile, key: SlotKey) -> std::result::Result<ResultRecord, Failed> {
        let cfg = self.config;
        let slot = cfg.taxonomy.slot(key)?;
        let entity = assign_scenario(&profile.student_id, slot)?.to_string();

        let question = self.generator.question(&QuestionRequest {
            student_id: profile.student_id.clone(),
            slot: slot.clone(),
            entity: entity.clone(),
            prompt: cfg.prompts.render_question(slot, &entity)?,
        })?;

        let lines = describe_profile(profile, slot.applicable, &cfg.taxonomy, &cfg.descriptors)?;
        let artifact = self.generator.generate(&GenerationRequest {
            student_id: profile.student_id.clone(),
            slot: slot.clone(),
            entity: entity.clone(),
            question: question.clone(),
            prompt: cfg.prompts.render_generation(&lines, &question)?,
            profile: lines,
        })?;

        let request = ScoreRequest {
            student_id: profile.student_id.clone(),
            slot: slot.clone(),
            question: question.clone(),
            prompt: cfg.prompts.render_scoring(slot, &question, &artifact)?,
            artifact: artifact.clone(),
            sample: 0,
        };
        let scoring = cfg.scoring();
        let (observed, reported_score, feedback, variance, flagged) = if scoring.samples > 1 {
            let m = multi_sample_score(
                &request,
                scoring.samples,
                self.scorer,
                scoring.variance_tau,
                scoring.rounding,
            )?;
            (m.mean, None, m.feedback, Some(m.variance), m.flagged)
        } else {
            let raw = self.scorer.score(&request)?;
            let parsed = parse_score_reply(&raw, slot.applicable, scoring.rounding).map_err(|error| Failed {
                error,
                raw: Some(raw.clone()),
            })?;
            (parsed.vector, parsed.reported_score, parsed.feedback, None, false)
        };
        let now = Utc::now();
        Ok(ResultRecord {
            student_id: profile.student_id.clone(),
            slot: key,
            scenario: entity,
            question,
            artifact,
            score: observed.score(scoring.rounding),
            observed,
            reported_score,
            feedback,
            samples: scoring.samples,
            flagged,
            variance,
            generator: self.generator.identity(),
            scorer: self.scorer.identity(),
            started_at: now,
            finished_at: now,
        })
    }

    fn run_tasks(
        &self,
        tasks: Vec<(&StudentProfile, SlotKey)>,
        store: &mut RecordStore,
        out: &mut RunOutcome,
    ) -> Result<()> {
        ordered_map(
            &tasks,
            self.parallelism,
            |(p, k)| self.run_task(p, *k),
            |entry| {
                match entry {
                    StoreEntry::Result(_) => out.new_records += 1,
                    StoreEntry::Failure(_) => out.new_failures += 1,
                }
                store.push(entry)
            },
        )
    }

    /// All six slots for every student, in cohort then session order.
    /// Slots that already have a successful record are skipped.
    pub fn run_full_coverage(&self, cohort: &[StudentProfile], store: &mut RecordStore) -> Result<RunOutcome> {
        let done = store.done();
        let mut out = RunOutcome::default();
        let mut tasks = Vec::new();
        for p in cohort {
            for key in SlotKey::all() {
                if done.contains_key(&(p.student_id.clone(), key)) {
                    out.skipped += 1;
                } else {
                    tasks.push((p, key));
                }
            }
        }
        self.run_tasks(tasks, store, &mut out)?;
        out.sessions = sessions_from_records(&store.results(), cohort, self.config.routing().theta);
        Ok(out)
    }

    /// Stage 1 for every student, then each student's routed Stage 2 path.
    pub fn run_adaptive(&self, cohort: &[StudentProfile], theta: f64, store: &mut RecordStore) -> Result<RunOutcome> {
        if !(0.0..=100.0).contains(&theta) {
            return Err(GeaError::Domain(format!("theta {theta} outside [0, 100]")));
        }
        let mut out = RunOutcome::default();
        let stage1 = [SlotKey::new(Stage::Stage1, 1), SlotKey::new(Stage::Stage1, 2)];
        let done = store.done();
        let mut tasks = Vec::new();
        for p in cohort {
            for key in stage1 {
                if done.contains_key(&(p.student_id.clone(), key)) {
                    out.skipped += 1;
                } else {
                    tasks.push((p, key));
                }
            }
        }
        self.run_tasks(tasks, store, &mut out)?;

        let done = store.done();
        let mut tasks = Vec::new();
        for p in cohort {
            let s = |k: SlotKey| done.get(&(p.student_id.clone(), k)).copied();
            let (Some(a), Some(b)) = (s(stage1[0]), s(stage1[1])) else {
                continue;
            };
            let mut session = SessionState::new(p.student_id.clone());
            session.record_stage1(1, a)?;
            session.record_stage1(2, b)?;
            let stage = Stage::stage2(session.route(theta)?);
            for assignment in [1, 2] {
                let key = SlotKey::new(stage, assignment);
                if s(key).is_some() {
                    out.skipped += 1;
                } else {
                    tasks.push((p, key));
                }
            }
        }
        self.run_tasks(tasks, store, &mut out)?;
        out.sessions = sessions_from_records(&store.results(), cohort, theta);
        Ok(out)
    }
}

/// Replays routing at `theta` from stored scores. Students without both
/// Stage 1 scores stay unrouted; students without both scores on their
/// routed path get no terminal level.
pub fn sessions_from_records(records: &[ResultRecord], cohort: &[StudentProfile], theta: f64) -> Vec<SessionState> {
    let scores: BTreeMap<(&str, SlotKey), u32> = records
        .iter()
        .map(|r| ((r.student_id.as_str(), r.slot), r.score))
        .collect();
    cohort
        .iter()
        .map(|p| {
            let s = |stage, a| scores.get(&(p.student_id.as_str(), SlotKey::new(stage, a))).copied();
            let mut session = SessionState::new(p.student_id.clone());
            if let (Some(a), Some(b)) = (s(Stage::Stage1, 1), s(Stage::Stage1, 2)) {
                session.record_stage1(1, a).expect("unrouted");
                session.record_stage1(2, b).expect("unrouted");
                let path = session.route(theta).expect("stage 1 complete");
                let stage = Stage::stage2(path);
                if let Some(a) = s(stage, 1) {
                    session.record_stage2(1, a).expect("routed");
                }
                if let Some(b) = s(stage, 2) {
                    session.record_stage2(2, b).expect("routed");
                }
                let _ = session.finish(theta);
            }
            session
        })
        .collect()
}

pub fn write_sessions_csv(path: &FsPath, sessions: &[SessionState], cohort: &[StudentProfile]) -> Result<()> {
    let archetypes: BTreeMap<&str, &str> = cohort
        .iter()
        .map(|p| (p.student_id.as_str(), p.archetype.as_str()))
        .collect();
    let io = |e: csv::Error| GeaError::io(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record([
        "student_id",
        "archetype",
        "stage1_a1",
        "stage1_a2",
        "stage1_mean",
        "path",
        "stage2_a1",
        "stage2_a2",
        "stage2_mean",
        "terminal",
    ])
    .map_err(io)?;
    let opt = |v: Option<u32>| v.map(|x| x.to_string()).unwrap_or_default();
    let optf = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in sessions {
        w.write_record([
            s.student_id.clone(),
            archetypes.get(s.student_id.as_str()).unwrap_or(&"").to_string(),
            opt(s.stage1[0]),
            opt(s.stage1[1]),
            optf(s.stage1_mean),
            s.path.map(|p: Path| p.to_string()).unwrap_or_default(),
            opt(s.stage2[0]),
            opt(s.stage2[1]),
            optf(s.stage2_mean),
            s.terminal.map(|t| t.to_string()).unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| GeaError::io(path, e))
}
