//! Scenario configuration (TOML) and initial-condition generation.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coverage::CoverageParams;
use crate::dynamics::{DiState, FwLimits, FwState};
use crate::error::{Error, Result};
use crate::geometry::{rd_heuristic, MovingDomain};
use crate::vec2::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    DoubleIntegrator,
    FixedWing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Safety {
    Off,
    /// Closed-form time-to-collision (double integrator only).
    Analytic,
    /// Value grid loaded from `path`, or solved in process on the default
    /// grid when no path is given (fixed-wing only).
    Grid {
        #[serde(default)]
        path: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HeadingRule {
    /// Uniform in `[0, 2π)` from the scenario seed.
    #[default]
    Random,
    Fixed {
        angle: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Vehicles at `center + (k − (n−1)/2)·spacing·direction̂`, at rest
    /// (double integrator) or at `s_min` (fixed-wing).
    Line {
        center: Vec2,
        direction: Vec2,
        spacing: f64,
        #[serde(default)]
        heading: HeadingRule,
    },
    /// Explicit positions and optional velocities (zero when omitted).
    Explicit {
        positions: Vec<Vec2>,
        #[serde(default)]
        velocities: Vec<Vec2>,
    },
}

fn default_true() -> bool {
    true
}

fn default_record_every() -> usize {
    1
}

/// Everything needed to reproduce one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub model: Model,
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub seed: u64,
    pub t_safety: f64,
    pub safety: Safety,
    /// Apply input bounds and the speed cap (double integrator). Turning it
    /// off integrates the raw coverage force.
    #[serde(default = "default_true")]
    pub threshold: bool,
    /// Write every k-th step to the trajectory file.
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// `r_d = 0` selects `sqrt(area / n)`.
    pub params: CoverageParams,
    #[serde(default)]
    pub limits: Option<FwLimits>,
    pub domain: MovingDomain,
    pub init: InitialCondition,
}

/// Initial states in the representation of the scenario's model.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialStates {
    Di(Vec<DiState>),
    Fw(Vec<FwState>),
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.resolve();
        s.validate()?;
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut s = Self::from_toml_str(&text)?;
        if let Safety::Grid { path: Some(p) } = &mut s.safety {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Fills defaulted fields.
    pub fn resolve(&mut self) {
        if self.params.r_d == 0.0 && self.n > 0 {
            self.params.r_d = rd_heuristic(self.domain.base().area(), self.n);
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.n == 0 {
            return cfg("n must be >= 1".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return cfg("dt and t_end must be positive and finite".into());
        }
        if self.record_every == 0 {
            return cfg("record_every must be >= 1".into());
        }
        if !(self.t_safety >= 0.0) {
            return cfg("t_safety must be >= 0".into());
        }
        self.params.validate()?;
        self.domain.validate()?;
        match (self.model, &self.safety) {
            (Model::DoubleIntegrator, Safety::Grid { .. }) => {
                return cfg("grid safety needs the fixed-wing model".into())
            }
            (Model::FixedWing, Safety::Analytic) => {
                return cfg("analytic safety needs the double-integrator model".into())
            }
            _ => {}
        }
        if self.model == Model::FixedWing {
            match &self.limits {
                Some(l) => l.validate()?,
                None => return cfg("fixed-wing scenarios need [limits]".into()),
            }
        }
        match &self.init {
            InitialCondition::Line {
                direction, spacing, ..
            } => {
                if direction.normalized().is_none() || !(*spacing > 0.0) {
                    return cfg("line init needs a nonzero direction and spacing > 0".into());
                }
            }
            InitialCondition::Explicit {
                positions,
                velocities,
            } => {
                if positions.len() != self.n {
                    return cfg(format!(
                        "explicit init lists {} positions for n = {}",
                        positions.len(),
                        self.n
                    ));
                }
                if !velocities.is_empty() && velocities.len() != self.n {
                    return cfg("explicit velocities must be empty or match n".into());
                }
            }
        }
        Ok(())
    }

    /// Deterministic initial states for the configured seed.
    pub fn initial_states(&self) -> InitialStates {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (positions, velocities, heading) = match &self.init {
            InitialCondition::Line {
                center,
                direction,
                spacing,
                heading,
            } => {
                let d = direction.normalized().unwrap_or(Vec2::new(1.0, 0.0));
                let mid = (self.n as f64 - 1.0) / 2.0;
                let p = (0..self.n)
                    .map(|k| *center + d * ((k as f64 - mid) * spacing))
                    .collect::<Vec<_>>();
                (p, vec![Vec2::ZERO; self.n], Some(*heading))
            }
            InitialCondition::Explicit {
                positions,
                velocities,
            } => {
                let v = if velocities.is_empty() {
                    vec![Vec2::ZERO; self.n]
                } else {
                    velocities.clone()
                };
                (positions.clone(), v, None)
            }
        };
        match self.model {
            Model::DoubleIntegrator => InitialStates::Di(
                positions
                    .into_iter()
                    .zip(velocities)
                    .map(|(p, v)| DiState::new(p, v))
                    .collect(),
            ),
            Model::FixedWing => {
                let l = self.limits.expect("validated");
                InitialStates::Fw(
                    positions
                        .into_iter()
                        .zip(velocities)
                        .map(|(p, v)| match heading {
                            Some(HeadingRule::Random) => {
                                FwState::new(p, rng.gen_range(0.0..TAU), l.s_min)
                            }
                            Some(HeadingRule::Fixed { angle }) => FwState::new(p, angle, l.s_min),
                            None => {
                                let theta = if v == Vec2::ZERO { 0.0 } else { v.y.atan2(v.x) };
                                FwState::new(p, theta, l.clamp_speed(v.norm()))
                            }
                        })
                        .collect(),
                )
            }
        }
    }
}
