//! Prompt templates with `{{name}}` placeholders.

use crate::cohort::ProfileLine;
use crate::error::{GeaError, Result};
use crate::taxonomy::SlotSpec;

const GENERATION_KEYS: &[&str] = &["profile", "assignment"];
const SCORING_KEYS: &[&str] = &["rubric", "stage", "path", "assignment_index", "question", "submission"];
const QUESTION_KEYS: &[&str] = &["rubric", "stage", "path", "assignment_index", "entity"];

/// Substitutes every `{{name}}`. Unknown placeholders and unterminated
/// braces are errors; text outside `{{ }}` is copied verbatim.
pub fn render(template: &str, vars: &[(&str, &str)]) -> Result<String> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after
            .find("}}")
            .ok_or_else(|| GeaError::Template("unterminated `{{` placeholder".into()))?;
        let name = after[..end].trim();
        let value = vars
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| GeaError::Template(format!("unresolved placeholder `{{{{{name}}}}}`")))?;
        out.push_str(value);
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

fn placeholders(template: &str) -> Vec<String> {
    let mut names = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        let after = &rest[start + 2..];
        match after.find("}}") {
            Some(end) => {
                names.push(after[..end].trim().to_string());
                rest = &after[end + 2..];
            }
            None => break,
        }
    }
    names
}

fn check_template(label: &str, template: &str, keys: &[&str]) -> Result<()> {
    let found = placeholders(template);
    for key in keys {
        if !found.iter().any(|f| f == key) {
            return Err(GeaError::Template(format!("{label} template lacks `{{{{{key}}}}}`")));
        }
    }
    if let Some(extra) = found.iter().find(|f| !keys.contains(&f.as_str())) {
        return Err(GeaError::Template(format!(
            "{label} template uses unknown placeholder `{{{{{extra}}}}}`"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PromptBundle {
    generation: String,
    scoring: String,
    question: String,
    rubric: String,
}

impl PromptBundle {
    pub fn new(generation: &str, scoring: &str, question: &str, rubric: &str) -> Result<Self> {
        let tidy = |s: &str| s.trim_matches('\n').to_string();
        let bundle = PromptBundle {
            generation: tidy(generation),
            scoring: tidy(scoring),
            question: tidy(question),
            rubric: rubric.to_string(),
        };
        check_template("generation", &bundle.generation, GENERATION_KEYS)?;
        check_template("scoring", &bundle.scoring, SCORING_KEYS)?;
        check_template("question", &bundle.question, QUESTION_KEYS)?;
        if bundle.rubric.trim().is_empty() {
            return Err(GeaError::Template("rubric document is empty".into()));
        }
        Ok(bundle)
    }

    pub fn rubric(&self) -> &str {
        &self.rubric
    }

    pub fn render_generation(&self, profile: &[ProfileLine], assignment: &str) -> Result<String> {
        if profile.is_empty() {
            return Err(GeaError::Template("generation prompt needs at least one skill".into()));
        }
        let block = profile
            .iter()
            .map(|l| {
                format!(
                    "  - {} {}: {:.2} ({}) \u{2014} {}",
                    l.skill, l.name, l.score, l.level, l.descriptor
                )
            })
            .collect::<Vec<_>>()
            .join("\n");
        render(&self.generation, &[("profile", &block), ("assignment", assignment)])
    }

    pub fn render_scoring(&self, slot: &SlotSpec, question: &str, submission: &str) -> Result<String> {
        for (field, value) in [("question", question), ("submission", submission)] {
            if value.trim().is_empty() {
                return Err(GeaError::validation(field, "empty input to scoring prompt"));
            }
        }
        let (stage, path, index) = slot_labels(slot);
        render(
            &self.scoring,
            &[
                ("rubric", &self.rubric),
                ("stage", &stage),
                ("path", path),
                ("assignment_index", &index),
                ("question", question),
                ("submission", submission),
            ],
        )
    }

    pub fn render_question(&self, slot: &SlotSpec, entity: &str) -> Result<String> {
        if !slot.scenario_pool.iter().any(|e| e == entity) {
            return Err(GeaError::Domain(format!(
                "entity `{entity}` is not in the scenario pool of {}",
                slot.key
            )));
        }
        let (stage, path, index) = slot_labels(slot);
        render(
            &self.question,
            &[
                ("rubric", &self.rubric),
                ("stage", &stage),
                ("path", path),
                ("assignment_index", &index),
                ("entity", entity),
            ],
        )
    }
}

fn slot_labels(slot: &SlotSpec) -> (String, &'static str, String) {
    let path = match slot.key.stage.path() {
        Some(crate::taxonomy::Path::High) => "High",
        Some(crate::taxonomy::Path::Low) => "Low",
        None => "N/A",
    };
    (
        slot.key.stage.number().to_string(),
        path,
        slot.key.assignment.to_string(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GeaConfig;
    use crate::taxonomy::{SkillId, Stage};

    #[test]
    fn render_substitutes_and_rejects_unknowns() {
        assert_eq!(
            render("a {{x}} b {{ y }}", &[("x", "1"), ("y", "2")]).unwrap(),
            "a 1 b 2"
        );
        assert!(render("{{missing}}", &[]).is_err());
        assert!(render("{{open", &[]).is_err());
        assert_eq!(render(r#"{"score": <int>}"#, &[]).unwrap(), r#"{"score": <int>}"#);
    }

    #[test]
    fn bundle_requires_placeholders() {
        let err = PromptBundle::new("{{profile}}", "x", "y", "rubric").unwrap_err();
        assert!(matches!(err, GeaError::Template(_)));
    }

    #[test]
    fn generation_line_format() {
        let cfg = GeaConfig::default_config().unwrap();
        let line = ProfileLine {
            skill: SkillId::new(1).unwrap(),
            name: "Class Definition".into(),
            score: 0.82,
            level: "Advanced".into(),
            descriptor: "Class is well-defined.".into(),
        };
        let p = cfg.prompts.render_generation(&[line], "Build a cinema").unwrap();
        assert!(p.contains("S01 Class Definition: 0.82 (Advanced)"));
        assert!(p.contains("1. Output Python code only"));
        assert!(matches!(
            cfg.prompts.render_generation(&[], "x"),
            Err(GeaError::Template(_))
        ));
    }

    #[test]
    fn scoring_prompt_carries_contract() {
        let cfg = GeaConfig::default_config().unwrap();
        let slot = cfg.taxonomy.slot_for(Stage::Stage2High, 2).unwrap();
        let p = cfg.prompts.render_scoring(slot, "q", "print(1)").unwrap();
        assert!(p.contains("Use -1.0 for skills marked -1.0"));
        assert!(p.contains("round(mean(v_i"));
        assert!(p.contains("- Stage: 2  - Path: High  - Assignment: 2 of 2"));
        assert!(p.contains(cfg.prompts.rubric()));
        assert!(cfg.prompts.render_scoring(slot, "", "x").is_err());
    }

    #[test]
    fn question_prompt_checks_pool() {
        let cfg = GeaConfig::default_config().unwrap();
        let slot = cfg.taxonomy.slot_for(Stage::Stage1, 1).unwrap();
        let p = cfg.prompts.render_question(slot, "cinema").unwrap();
        assert!(p.contains("cinema"));
        assert!(p.contains("ASCII UML class diagram"));
        assert!(cfg.prompts.render_question(slot, "spaceship").is_err());
    }
}
