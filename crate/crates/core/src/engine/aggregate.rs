//! Scalar score `s = round(mean(non-sentinel entries) * 100)`.

use serde::{Deserialize, Serialize};

use crate::error::{GeaError, Result};
use crate::num::Real;

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rounding {
    #[default]
    HalfUp,
    HalfEven,
}

impl Rounding {
    /// Rounds a non-negative value. Values within a few ulps of a `.5` tie are
    /// treated as ties so that decimal inputs like 0.335 round as written.
    pub fn round<T: Real>(self, x: T) -> T {
        let floor = x.floor();
        let frac = x - floor;
        let half = T::lit(0.5);
        let tol = tie_tolerance::<T>(x);
        if (frac - half).abs() <= tol {
            match self {
                Rounding::HalfUp => floor + T::one(),
                Rounding::HalfEven => {
                    if (floor / T::lit(2.0)).fract() == T::zero() {
                        floor
                    } else {
                        floor + T::one()
                    }
                }
            }
        } else if frac > half {
            floor + T::one()
        } else {
            floor
        }
    }
}

fn tie_tolerance<T: Real>(x: T) -> T {
    let scale = x.abs().max(T::one());
    (T::epsilon() * T::lit(64.0) * scale).max(T::lit(1e-9).min(T::epsilon() * T::lit(1e6)))
}

/// Aggregates a skill vector. Entries equal to `-1` are skipped; every other
/// entry must lie in `[0, 1]`.
pub fn aggregate_score<T: Real>(entries: &[T], rounding: Rounding) -> Result<u32> {
    let sentinel = -T::one();
    let mut sum = T::zero();
    let mut n = 0usize;
    for (i, &v) in entries.iter().enumerate() {
        if v == sentinel {
            continue;
        }
        if !(v >= T::zero() && v <= T::one()) {
            return Err(GeaError::validation(
                format!("skill_vector[{i}]"),
                format!("value {v} outside [0, 1]"),
            ));
        }
        sum = sum + v;
        n += 1;
    }
    if n == 0 {
        return Err(GeaError::validation(
            "skill_vector",
            "all entries are the not-applicable sentinel",
        ));
    }
    let scaled = sum / T::from_count(n) * T::lit(100.0);
    let rounded = rounding.round(scaled);
    Ok(rounded.to_u32().expect("score within 0..=100"))
}
