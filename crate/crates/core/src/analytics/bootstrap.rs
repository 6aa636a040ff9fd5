//! Percentile bootstrap intervals for pooled r and signed bias.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::stats::{pearson, quantile_sorted, signed_bias};
use crate::error::{GeaError, Result};
use crate::num::Real;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    R,
    Bias,
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Statistic::R => "r",
            Statistic::Bias => "bias",
        })
    }
}

/// What a bootstrap draw resamples.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResampleUnit {
    /// Individual paired observations.
    #[default]
    Observation,
    /// Whole students, keeping each student's observations together.
    Student,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapSpec {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
    pub unit: ResampleUnit,
    pub max_redraws: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
    /// Resamples redrawn because the statistic was undefined on them.
    pub redraws: usize,
}

fn statistic<T: Real>(stat: Statistic, xs: &[T], ys: &[T]) -> Result<Option<T>> {
    match stat {
        Statistic::R => pearson(xs, ys),
        Statistic::Bias => signed_bias(xs, ys).map(Some),
    }
}

/// Bootstrap percentile interval. `clusters[i]` is the resampling unit of
/// observation `i` and is required for [`ResampleUnit::Student`]; cluster
/// ids are taken in order of first appearance. Callers should sort the input
/// canonically first so that the result does not depend on input order.
pub fn bootstrap_ci<T: Real>(
    xs: &[T],
    ys: &[T],
    clusters: Option<&[usize]>,
    stat: Statistic,
    spec: &BootstrapSpec,
) -> Result<Interval<T>> {
    if statistic(stat, xs, ys)?.is_none() {
        return Err(GeaError::InsufficientData(format!(
            "{stat} is undefined on the full sample"
        )));
    }
    if !(spec.level > 0.0 && spec.level < 1.0) || spec.resamples == 0 {
        return Err(GeaError::Domain(
            "bootstrap needs resamples >= 1 and level in (0, 1)".into(),
        ));
    }
    let groups: Vec<Vec<usize>> = match spec.unit {
        ResampleUnit::Observation => (0..xs.len()).map(|i| vec![i]).collect(),
        ResampleUnit::Student => {
            let ids =
                clusters.ok_or_else(|| GeaError::validation("clusters", "student resampling needs cluster ids"))?;
            let mut order: Vec<usize> = Vec::new();
            let mut members: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
            for (i, &c) in ids.iter().enumerate() {
                members.entry(c).or_insert_with(|| {
                    order.push(c);
                    Vec::new()
                });
                members.get_mut(&c).expect("inserted").push(i);
            }
            order
                .into_iter()
                .map(|c| members.remove(&c).expect("present"))
                .collect()
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut values = Vec::with_capacity(spec.resamples);
    let (mut bx, mut by) = (Vec::with_capacity(xs.len()), Vec::with_capacity(ys.len()));
    let mut redraws = 0usize;
    while values.len() < spec.resamples {
        bx.clear();
        by.clear();
        for _ in 0..groups.len() {
            for &i in &groups[rng.random_range(0..groups.len())] {
                bx.push(xs[i]);
                by.push(ys[i]);
            }
        }
        match statistic(stat, &bx, &by) {
            Ok(Some(v)) => values.push(v),
            Ok(None) | Err(GeaError::InsufficientData(_)) => {
                redraws += 1;
                if redraws > spec.max_redraws {
                    return Err(GeaError::InsufficientData(format!(
                        "{stat} undefined on more than {} resamples",
                        spec.max_redraws
                    )));
                }
            }
            Err(e) => return Err(e),
        }
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite statistic"));
    let tail = T::lit((1.0 - spec.level) / 2.0);
    Ok(Interval {
        lo: quantile_sorted(&values, tail).expect("nonempty"),
        hi: quantile_sorted(&values, T::one() - tail).expect("nonempty"),
        redraws,
    })
}
