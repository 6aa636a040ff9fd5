//! Two-stage routing state machine.
//!
//! Stage means average exactly two integer scores and are kept as exact
//! rationals; a `.5` mean therefore compares exactly against a threshold.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{GeaError, Result};
use crate::num::Real;
use crate::taxonomy::Path;

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Terminal {
    Beginner,
    Intermediate,
    Advanced,
}

impl Terminal {
    pub const ALL: [Terminal; 3] = [Terminal::Advanced, Terminal::Intermediate, Terminal::Beginner];
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Terminal::Beginner => "Beginner",
            Terminal::Intermediate => "Intermediate",
            Terminal::Advanced => "Advanced",
        })
    }
}

/// Mean of the two assignment scores of a stage.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct StageMean(Ratio<u32>);

impl StageMean {
    pub fn of(first: u32, second: u32) -> Self {
        StageMean(Ratio::new(first + second, 2))
    }

    pub fn ratio(self) -> Ratio<u32> {
        self.0
    }

    /// Exact for any score pair: the value is a multiple of 0.5.
    pub fn value<T: Real>(self) -> T {
        T::from_u32(*self.0.numer()).unwrap() / T::from_u32(*self.0.denom()).unwrap()
    }
}

/// High iff `mean >= theta`.
pub fn route_stage1<T: Real>(stage1_mean: T, theta: T) -> Path {
    if stage1_mean >= theta {
        Path::High
    } else {
        Path::Low
    }
}

pub fn terminal_level<T: Real>(path: Option<Path>, stage2_mean: T, theta: T) -> Result<Terminal> {
    let path = path.ok_or_else(|| GeaError::State("stage 2 path is undecided".into()))?;
    let passed = stage2_mean >= theta;
    Ok(match (path, passed) {
        (Path::High, true) => Terminal::Advanced,
        (Path::High, false) | (Path::Low, true) => Terminal::Intermediate,
        (Path::Low, false) => Terminal::Beginner,
    })
}

/// Routing outcome for one student given the four scores along a path.
pub fn route_scores(
    stage1: [u32; 2],
    stage2_for: impl Fn(Path) -> Option<[u32; 2]>,
    theta: f64,
) -> Option<(Path, Terminal)> {
    let path = route_stage1(StageMean::of(stage1[0], stage1[1]).value::<f64>(), theta);
    let s2 = stage2_for(path)?;
    let terminal = terminal_level(Some(path), StageMean::of(s2[0], s2[1]).value::<f64>(), theta).ok()?;
    Some((path, terminal))
}

/// Progress of one adaptive session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub student_id: String,
    pub stage1: [Option<u32>; 2],
    pub stage2: [Option<u32>; 2],
    pub stage1_mean: Option<f64>,
    pub stage2_mean: Option<f64>,
    pub path: Option<Path>,
    pub terminal: Option<Terminal>,
}

impl SessionState {
    pub fn new(student_id: impl Into<String>) -> Self {
        SessionState {
            student_id: student_id.into(),
            stage1: [None; 2],
            stage2: [None; 2],
            stage1_mean: None,
            stage2_mean: None,
            path: None,
            terminal: None,
        }
    }

    fn slot_index(assignment: u8) -> Result<usize> {
        match assignment {
            1 | 2 => Ok(assignment as usize - 1),
            _ => Err(GeaError::State(format!("assignment {assignment} is not 1 or 2"))),
        }
    }

    pub fn record_stage1(&mut self, assignment: u8, score: u32) -> Result<()> {
        if self.path.is_some() {
            return Err(GeaError::State("stage 1 already routed".into()));
        }
        self.stage1[Self::slot_index(assignment)?] = Some(score);
        Ok(())
    }

    /// Decides the path once both Stage 1 scores exist.
    pub fn route(&mut self, theta: f64) -> Result<Path> {
        let [Some(a), Some(b)] = self.stage1 else {
            return Err(GeaError::State("stage 1 incomplete".into()));
        };
        let mean = StageMean::of(a, b);
        let path = route_stage1(mean.value::<f64>(), theta);
        self.stage1_mean = Some(mean.value());
        self.path = Some(path);
        Ok(path)
    }

    pub fn record_stage2(&mut self, assignment: u8, score: u32) -> Result<()> {
        if self.path.is_none() {
            return Err(GeaError::State("stage 2 record before routing".into()));
        }
        self.stage2[Self::slot_index(assignment)?] = Some(score);
        Ok(())
    }

    /// Assigns the terminal level once both Stage 2 scores exist.
    pub fn finish(&mut self, theta: f64) -> Result<Terminal> {
        let [Some(a), Some(b)] = self.stage2 else {
            return Err(GeaError::State("stage 2 incomplete".into()));
        };
        let mean = StageMean::of(a, b);
        let terminal = terminal_level(self.path, mean.value::<f64>(), theta)?;
        self.stage2_mean = Some(mean.value());
        self.terminal = Some(terminal);
        Ok(terminal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage1_examples() {
        assert_eq!(route_stage1(50.0, 50.0), Path::High);
        assert_eq!(route_stage1(49.5, 50.0), Path::Low);
        assert_eq!(route_stage1(100.0, 70.0), Path::High);
        assert_eq!(route_stage1(49.5f32, 49.5f32), Path::High);
    }

    #[test]
    fn terminal_examples() {
        assert_eq!(
            terminal_level(Some(Path::High), 60.0, 50.0).unwrap(),
            Terminal::Advanced
        );
        assert_eq!(
            terminal_level(Some(Path::Low), 60.0, 50.0).unwrap(),
            Terminal::Intermediate
        );
        assert_eq!(terminal_level(Some(Path::Low), 0.0, 50.0).unwrap(), Terminal::Beginner);
        assert_eq!(
            terminal_level(Some(Path::High), 49.0, 50.0).unwrap(),
            Terminal::Intermediate
        );
        assert!(matches!(terminal_level(None, 60.0, 50.0), Err(GeaError::State(_))));
    }

    #[test]
    fn stage_mean_is_exact() {
        let m = StageMean::of(49, 50);
        assert_eq!(m.value::<f64>(), 49.5);
        assert_eq!(route_stage1(m.value::<f64>(), 49.5), Path::High);
        assert_eq!(StageMean::of(100, 100).value::<f32>(), 100.0);
    }

    #[test]
    fn session_state_enforces_order() {
        let mut s = SessionState::new("0001");
        assert!(s.route(50.0).is_err());
        assert!(s.record_stage2(1, 10).is_err());
        s.record_stage1(1, 100).unwrap();
        s.record_stage1(2, 100).unwrap();
        assert_eq!(s.route(50.0).unwrap(), Path::High);
        assert!(s.finish(50.0).is_err());
        s.record_stage2(1, 100).unwrap();
        s.record_stage2(2, 100).unwrap();
        assert_eq!(s.finish(50.0).unwrap(), Terminal::Advanced);
        assert_eq!(s.stage1_mean, Some(100.0));
    }

    #[test]
    fn raising_theta_never_raises_terminal() {
        for s1a in (0..=100).step_by(7) {
            for s1b in (0..=100).step_by(11) {
                let hi = [s1a / 2 + 20, s1b / 3 + 40];
                let lo = [s1a.min(90) + 5, s1b / 2];
                let mut prev: Option<(Path, Terminal)> = None;
                for theta in 0..=101 {
                    let r = route_scores(
                        [s1a, s1b],
                        |p| Some(if p == Path::High { hi } else { lo }),
                        theta as f64,
                    )
                    .unwrap();
                    if let Some((pp, pt)) = prev {
                        assert!(!(pp == Path::Low && r.0 == Path::High));
                        assert!(r.1 <= pt);
                    }
                    prev = Some(r);
                }
            }
        }
    }
}
