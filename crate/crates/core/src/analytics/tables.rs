//! Per-skill statistics, proficiency agreement, confusion matrix and
//! calibration curve.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::pairs::{split, PairedObservation};
use super::stats::{benjamini_hochberg, correlation_p_value, mean, pearson, sample_sd, signed_bias};
use crate::error::{GeaError, Result};
use crate::taxonomy::{ProficiencyScale, SkillId, Taxonomy};

/// Agreement tier of a correlation.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Strong,
    Moderate,
    Weak,
    Undefined,
}

impl Tier {
    pub fn of(r: Option<f64>) -> Tier {
        match r {
            None => Tier::Undefined,
            Some(r) if r > 0.7 => Tier::Strong,
            Some(r) if r > 0.4 => Tier::Moderate,
            Some(_) => Tier::Weak,
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Strong => "strong",
            Tier::Moderate => "moderate",
            Tier::Weak => "weak",
            Tier::Undefined => "undefined",
        })
    }
}

/// Serializes `None` as the string `"n/a"`.
pub(crate) mod na {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => x.serialize(s),
            None => s.serialize_str("n/a"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum V {
            N(f64),
            S(String),
        }
        match V::deserialize(d)? {
            V::N(x) => Ok(Some(x)),
            V::S(s) if s == "n/a" => Ok(None),
            V::S(s) => Err(serde::de::Error::custom(format!("expected number or \"n/a\", got {s}"))),
        }
    }
}

pub fn fmt_na(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| x.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerSkillStats {
    pub skill: SkillId,
    pub name: String,
    pub n: usize,
    #[serde(with = "na")]
    pub r: Option<f64>,
    #[serde(with = "na")]
    pub bias: Option<f64>,
    #[serde(with = "na")]
    pub p_value: Option<f64>,
    pub significant_bh: bool,
    pub tier: Tier,
}

/// One row per taxonomy skill, including skills with no observations.
/// Rows are ordered by r descending; undefined r follows, then n = 0, with
/// ties broken by skill id. BH runs over the skills with a defined p-value.
pub fn per_skill_table(pairs: &[PairedObservation], taxonomy: &Taxonomy, alpha: f64) -> Vec<PerSkillStats> {
    let mut groups: BTreeMap<SkillId, Vec<&PairedObservation>> = BTreeMap::new();
    for p in pairs {
        groups.entry(p.skill).or_default().push(p);
    }
    let mut rows: Vec<PerSkillStats> = taxonomy
        .skills()
        .iter()
        .map(|def| {
            let obs: Vec<PairedObservation> = groups
                .get(&def.id)
                .map(|g| g.iter().map(|p| (*p).clone()).collect())
                .unwrap_or_default();
            let (xs, ys) = split(&obs);
            let n = obs.len();
            let r = if n >= 2 { pearson(&xs, &ys).ok().flatten() } else { None };
            let bias = signed_bias(&xs, &ys).ok();
            let p_value = r.and_then(|r| correlation_p_value(r, n));
            PerSkillStats {
                skill: def.id,
                name: def.name.clone(),
                n,
                r,
                bias,
                p_value,
                significant_bh: false,
                tier: Tier::of(r),
            }
        })
        .collect();
    let tested: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].p_value.is_some()).collect();
    let ps: Vec<f64> = tested.iter().map(|&i| rows[i].p_value.expect("filtered")).collect();
    for (&i, flag) in tested.iter().zip(benjamini_hochberg(&ps, alpha)) {
        rows[i].significant_bh = flag;
    }
    rows.sort_by(|a, b| {
        let key = |s: &PerSkillStats| match (s.n, s.r) {
            (0, _) => 2,
            (_, None) => 1,
            _ => 0,
        };
        key(a)
            .cmp(&key(b))
            .then(b.r.unwrap_or(0.0).total_cmp(&a.r.unwrap_or(0.0)))
            .then(a.skill.cmp(&b.skill))
    });
    rows
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub exact: f64,
    pub adjacent: f64,
}

/// Fractions of pairs whose true and observed levels match exactly and
/// within one level.
pub fn proficiency_accuracy(pairs: &[PairedObservation], scale: &ProficiencyScale<f64>) -> Result<Accuracy> {
    if pairs.is_empty() {
        return Err(GeaError::InsufficientData("no paired observations".into()));
    }
    let (mut exact, mut adjacent) = (0usize, 0usize);
    for p in pairs {
        let d = scale
            .to_proficiency(p.true_value)?
            .distance(scale.to_proficiency(p.observed_value)?);
        exact += (d == 0) as usize;
        adjacent += (d <= 1) as usize;
    }
    let n = pairs.len() as f64;
    Ok(Accuracy {
        exact: exact as f64 / n,
        adjacent: adjacent as f64 / n,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub levels: Vec<String>,
    /// `counts[true][observed]`.
    pub counts: Vec<Vec<usize>>,
    pub row_counts: Vec<usize>,
    /// Row-normalized rates; `None` for empty rows.
    pub rates: Vec<Option<Vec<f64>>>,
}

pub fn confusion_matrix(pairs: &[PairedObservation], scale: &ProficiencyScale<f64>) -> Result<ConfusionMatrix> {
    let k = scale.len();
    let mut counts = vec![vec![0usize; k]; k];
    for p in pairs {
        let t = scale.to_proficiency(p.true_value)?.index();
        let o = scale.to_proficiency(p.observed_value)?.index();
        counts[t][o] += 1;
    }
    let row_counts: Vec<usize> = counts.iter().map(|r| r.iter().sum()).collect();
    let rates = counts
        .iter()
        .zip(&row_counts)
        .map(|(row, &n)| (n > 0).then(|| row.iter().map(|&c| c as f64 / n as f64).collect()))
        .collect();
    Ok(ConfusionMatrix {
        levels: scale.levels().iter().map(|l| l.name.clone()).collect(),
        counts,
        row_counts,
        rates,
    })
}

impl ConfusionMatrix {
    /// Exact-match rate recovered from the matrix.
    pub fn trace_rate(&self) -> Option<f64> {
        let total: usize = self.row_counts.iter().sum();
        (total > 0).then(|| (0..self.counts.len()).map(|i| self.counts[i][i]).sum::<usize>() as f64 / total as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBand {
    pub level: String,
    pub midpoint: f64,
    pub n: usize,
    #[serde(with = "na")]
    pub mean_observed: Option<f64>,
    #[serde(with = "na")]
    pub sd_observed: Option<f64>,
}

/// Mean and sample SD of observed values per true-value band. Every band is
/// listed; empty bands carry n = 0.
pub fn calibration_curve(pairs: &[PairedObservation], scale: &ProficiencyScale<f64>) -> Result<Vec<CalibrationBand>> {
    let mut bands: Vec<Vec<f64>> = vec![Vec::new(); scale.len()];
    for p in pairs {
        bands[scale.to_proficiency(p.true_value)?.index()].push(p.observed_value);
    }
    Ok(scale
        .levels()
        .iter()
        .zip(bands)
        .map(|(def, obs)| CalibrationBand {
            level: def.name.clone(),
            midpoint: def.midpoint,
            n: obs.len(),
            mean_observed: mean(&obs),
            sd_observed: sample_sd(&obs),
        })
        .collect())
}
