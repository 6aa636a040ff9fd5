//! Configuration file loading.
//!
//! The file is TOML. Parse errors carry the line of the offending token;
//! semantic errors carry the line of the table that introduced the value
//! when it can be located. A loaded config can be written back as one
//! self-contained document (rubric inlined) whose hash identifies the run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::{Benchmark, ResampleUnit};
use crate::backends::{BackendConfig, PromptBundle};
use crate::cohort::{Archetype, CohortConfig, DescriptorBank};
use crate::engine::{Mode, Rounding, Terminal};
use crate::error::{GeaError, Result};
use crate::taxonomy::{
    LevelDef, ProficiencyScale, SkillDef, SkillId, SkillSet, SlotKey, SlotSpec, Stage, Subgroup, Taxonomy,
};

pub const CONFIG_SCHEMA: u32 = 1;

const DEFAULT_TOML: &str = include_str!("../config/default.toml");
const DEFAULT_RUBRIC: &str = include_str!("../config/rubric.md");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    pub taxonomy: TaxonomyFile,
    pub scale: ScaleFile,
    pub cohort: CohortFile,
    pub descriptors: BTreeMap<SkillId, BTreeMap<String, String>>,
    pub prompts: PromptsFile,
    pub scoring: ScoringConfig,
    pub routing: RoutingConfig,
    pub backend: BackendConfig,
    pub seeds: Seeds,
    pub simulation: SimulationConfig,
    pub analysis: AnalysisConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxonomyFile {
    pub version: String,
    pub skills: Vec<SkillDef>,
    pub slots: Vec<SlotFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotFile {
    pub stage: Stage,
    pub assignment: u8,
    pub content: String,
    /// Skill ids or inclusive ranges such as `"S01-S08"`.
    pub skills: Vec<String>,
    pub scenarios: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleFile {
    pub levels: Vec<LevelDef<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortFile {
    pub rng: String,
    pub noise_sigma: f64,
    pub id_width: usize,
    pub archetypes: Vec<ArchetypeFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchetypeFile {
    pub name: String,
    pub weight: u32,
    #[serde(rename = "A")]
    pub a: (f64, f64),
    #[serde(rename = "B")]
    pub b: (f64, f64),
    #[serde(rename = "C1")]
    pub c1: (f64, f64),
    #[serde(rename = "C2")]
    pub c2: (f64, f64),
    #[serde(rename = "C3")]
    pub c3: (f64, f64),
    #[serde(rename = "D")]
    pub d: (f64, f64),
}

impl ArchetypeFile {
    fn to_archetype(&self) -> Archetype {
        let ranges = Subgroup::ALL
            .into_iter()
            .zip([self.a, self.b, self.c1, self.c2, self.c3, self.d])
            .collect();
        Archetype {
            name: self.name.clone(),
            weight: self.weight,
            ranges,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rubric_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rubric: Option<String>,
    pub generation: String,
    pub scoring: String,
    pub question: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoringConfig {
    pub rounding: Rounding,
    /// Scorer calls per submission; values above 1 enable multi-sample scoring.
    pub samples: u32,
    pub variance_tau: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutingConfig {
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub cohort: u64,
    pub backend: u64,
    pub bootstrap: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub students: usize,
    pub mode: Mode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub bootstrap_resamples: usize,
    pub ci_level: f64,
    pub resample_unit: ResampleUnit,
    /// Bound on redraws of resamples whose statistic is undefined.
    pub max_redraws: usize,
    pub alpha: f64,
    pub benchmark: Benchmark,
    pub baseline_theta: f64,
    pub sweep_thetas: Vec<f64>,
    pub expected_terminal: BTreeMap<String, Terminal>,
}

/// Validated configuration.
#[derive(Clone, Debug)]
pub struct GeaConfig {
    file: ConfigFile,
    /// Where the file was read from, if anywhere.
    pub source: Option<PathBuf>,
    pub taxonomy: Taxonomy,
    pub cohort: CohortConfig,
    pub descriptors: DescriptorBank,
    pub prompts: PromptBundle,
}

impl GeaConfig {
    /// The shipped defaults.
    pub fn default_config() -> Result<Self> {
        Self::parse(DEFAULT_TOML, |name| {
            if name == "rubric.md" {
                Ok(DEFAULT_RUBRIC.to_string())
            } else {
                Err(GeaError::config(format!("unknown embedded rubric `{name}`")))
            }
        })
    }

    pub fn default_toml() -> &'static str {
        DEFAULT_TOML
    }

    pub fn default_rubric() -> &'static str {
        DEFAULT_RUBRIC
    }

    /// Reads a config file; `rubric_file` resolves relative to its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GeaError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut cfg = Self::parse(&text, |name| {
            let p = base.join(name);
            std::fs::read_to_string(&p).map_err(|e| GeaError::io(p, e))
        })?;
        cfg.source = Some(path.to_path_buf());
        Ok(cfg)
    }

    /// Parses TOML text, resolving `rubric_file` through `read_rubric`.
    pub fn parse(text: &str, read_rubric: impl Fn(&str) -> Result<String>) -> Result<Self> {
        let mut file: ConfigFile = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            GeaError::config_at(line, e.message().to_string())
        })?;
        match (&file.prompts.rubric, &file.prompts.rubric_file) {
            (Some(_), Some(_)) => {
                return Err(GeaError::config_at(
                    locate(text, "[prompts]", 0),
                    "set either `rubric` or `rubric_file`, not both",
                ))
            }
            (None, None) => {
                return Err(GeaError::config_at(
                    locate(text, "[prompts]", 0),
                    "one of `rubric` or `rubric_file` is required",
                ))
            }
            (None, Some(name)) => {
                let rubric = read_rubric(name)?;
                file.prompts.rubric = Some(rubric);
                file.prompts.rubric_file = None;
            }
            (Some(_), None) => {}
        }
        Self::build(file, Some(text))
    }

    /// Validates an in-memory file, e.g. after command-line overrides.
    pub fn from_file(file: ConfigFile) -> Result<Self> {
        if file.prompts.rubric.is_none() {
            return Err(GeaError::config("rubric must be inlined in an in-memory config"));
        }
        Self::build(file, None)
    }

    fn build(file: ConfigFile, text: Option<&str>) -> Result<Self> {
        let at = |header: &str, nth: usize| text.and_then(|t| locate(t, header, nth));
        let wrap = |line: Option<usize>, e: GeaError| match e {
            GeaError::Config { line: None, message } => GeaError::config_at(line, message),
            GeaError::Config { .. } => e,
            other => GeaError::config_at(line, other.to_string()),
        };

        if file.schema_version != CONFIG_SCHEMA {
            return Err(GeaError::config_at(
                text.and_then(|t| t.lines().position(|l| l.starts_with("schema_version")).map(|i| i + 1)),
                format!(
                    "unsupported schema_version {}; this build reads {CONFIG_SCHEMA}",
                    file.schema_version
                ),
            ));
        }

        let scale = ProficiencyScale::new(file.scale.levels.clone()).map_err(|e| wrap(at("[[scale.levels]]", 0), e))?;

        let mut slots = Vec::with_capacity(file.taxonomy.slots.len());
        for (i, s) in file.taxonomy.slots.iter().enumerate() {
            let applicable = SkillSet::parse_entries(&s.skills).map_err(|e| wrap(at("[[taxonomy.slots]]", i), e))?;
            if !(1..=2).contains(&s.assignment) {
                return Err(GeaError::config_at(
                    at("[[taxonomy.slots]]", i),
                    format!("assignment must be 1 or 2, found {}", s.assignment),
                ));
            }
            slots.push(SlotSpec {
                key: SlotKey::new(s.stage, s.assignment),
                content: s.content.clone(),
                applicable,
                scenario_pool: s.scenarios.clone(),
            });
        }
        let taxonomy = Taxonomy::new(
            file.taxonomy.version.clone(),
            file.taxonomy.skills.clone(),
            slots,
            scale,
        )
        .map_err(|e| wrap(at("[taxonomy]", 0), e))?;
        for (i, skill) in taxonomy.skills().iter().enumerate() {
            let expected = skill_subgroup_ok(skill);
            if !expected {
                return Err(GeaError::config_at(
                    at("[[taxonomy.skills]]", i),
                    format!(
                        "skill {} has subgroup {:?} outside its group {:?}",
                        skill.id, skill.subgroup, skill.group
                    ),
                ));
            }
        }

        let archetypes: Vec<Archetype> = file.cohort.archetypes.iter().map(ArchetypeFile::to_archetype).collect();
        for (i, a) in archetypes.iter().enumerate() {
            a.validate().map_err(|e| wrap(at("[[cohort.archetypes]]", i), e))?;
        }
        let cohort = CohortConfig::new(
            file.cohort.rng.clone(),
            file.cohort.noise_sigma,
            file.cohort.id_width,
            archetypes,
        )
        .map_err(|e| wrap(at("[cohort]", 0), e))?;

        for (skill, table) in &file.descriptors {
            for level in table.keys() {
                taxonomy
                    .scale
                    .level_by_name(level)
                    .map_err(|e| wrap(at(&format!("[descriptors.{skill}]"), 0), e))?;
            }
        }
        let descriptors = DescriptorBank::new(file.descriptors.clone());

        let p = &file.prompts;
        let prompts = PromptBundle::new(
            &p.generation,
            &p.scoring,
            &p.question,
            p.rubric.as_deref().unwrap_or(""),
        )
        .map_err(|e| wrap(at("[prompts]", 0), e))?;

        let s = &file.scoring;
        if s.samples == 0 || s.variance_tau.is_nan() || s.variance_tau < 0.0 {
            return Err(GeaError::config_at(
                at("[scoring]", 0),
                "scoring.samples must be >= 1 and variance_tau >= 0",
            ));
        }
        if !(0.0..=100.0).contains(&file.routing.theta) {
            return Err(GeaError::config_at(
                at("[routing]", 0),
                "routing.theta must lie in [0, 100]",
            ));
        }
        let b = &file.backend;
        if b.parallelism == 0 {
            return Err(GeaError::config_at(
                at("[backend]", 0),
                "backend.parallelism must be >= 1",
            ));
        }
        b.synthetic
            .validate()
            .map_err(|e| wrap(at("[backend.synthetic]", 0), e))?;

        let a = &file.analysis;
        let bad = if a.bootstrap_resamples == 0 {
            Some("bootstrap_resamples must be >= 1".to_string())
        } else if !(a.ci_level > 0.0 && a.ci_level < 1.0) {
            Some("ci_level must lie in (0, 1)".into())
        } else if !(a.alpha > 0.0 && a.alpha < 1.0) {
            Some("alpha must lie in (0, 1)".into())
        } else if !a.baseline_theta.is_finite() || a.sweep_thetas.iter().any(|t| !t.is_finite()) {
            Some("thresholds must be finite".into())
        } else if let Some(arch) = cohort
            .archetypes
            .iter()
            .find(|x| !a.expected_terminal.contains_key(&x.name))
        {
            Some(format!("expected_terminal has no entry for archetype `{}`", arch.name))
        } else {
            a.expected_terminal
                .keys()
                .find(|k| cohort.archetype(k).is_none())
                .map(|k| format!("expected_terminal names unknown archetype `{k}`"))
        };
        if let Some(message) = bad {
            return Err(GeaError::config_at(at("[analysis]", 0), message));
        }

        Ok(GeaConfig {
            file,
            source: None,
            taxonomy,
            cohort,
            descriptors,
            prompts,
        })
    }

    pub fn file(&self) -> &ConfigFile {
        &self.file
    }

    pub fn scoring(&self) -> &ScoringConfig {
        &self.file.scoring
    }

    pub fn routing(&self) -> &RoutingConfig {
        &self.file.routing
    }

    pub fn backend(&self) -> &BackendConfig {
        &self.file.backend
    }

    pub fn seeds(&self) -> &Seeds {
        &self.file.seeds
    }

    pub fn simulation(&self) -> &SimulationConfig {
        &self.file.simulation
    }

    pub fn analysis(&self) -> &AnalysisConfig {
        &self.file.analysis
    }

    /// Applies `edit` to a copy of the file and revalidates.
    pub fn with(&self, edit: impl FnOnce(&mut ConfigFile)) -> Result<Self> {
        let mut file = self.file.clone();
        edit(&mut file);
        let mut cfg = Self::from_file(file)?;
        cfg.source = self.source.clone();
        Ok(cfg)
    }

    /// Self-contained TOML with the rubric inlined.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.file).expect("config serializes")
    }

    /// SHA-256 of [`to_toml`](Self::to_toml).
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

fn skill_subgroup_ok(skill: &SkillDef) -> bool {
    use crate::taxonomy::SkillGroup as G;
    matches!(
        (skill.group, skill.subgroup),
        (G::A, Subgroup::A)
            | (G::B, Subgroup::B)
            | (G::C, Subgroup::C1 | Subgroup::C2 | Subgroup::C3)
            | (G::D, Subgroup::D)
    )
}

/// 1-based line containing byte `offset`.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// 1-based line of the `nth` (0-based) occurrence of a table header.
fn locate(text: &str, header: &str, nth: usize) -> Option<usize> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| l.trim() == header)
        .nth(nth)
        .map(|(i, _)| i + 1)
}
