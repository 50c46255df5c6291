//! TOML scenario files.
//!
//! ```toml
//! version = 1
//! guideline = "fg1"
//!
//! [setpoints]
//! rho_star = 2.0
//! omega_star = 0.5
//! z_star = 0.0
//!
//! [gains]
//! k_rho = 2.0
//! k_z = 2.0
//! k_phi = 2.5
//!
//! [integrator]
//! dt = 0.001
//! duration = 70.0
//! log_every = 10
//!
//! [[robots]]
//! position = [3.1, 0.4, 0.8]
//! utility = 20.0
//! switches = [[15.0, 1.0]]
//!
//! [[expect]]
//! stage = 1
//! spacing_deg = [62.0, 62.0, 118.0, 118.0]
//! tolerance_deg = 1.0
//! ```
//!
//! Range checks run while deserializing, so a bad value is reported with the
//! line and key it sits on.

use std::path::Path;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};

use super::FileError;
use crate::control::{ControlGains, Setpoints};
use crate::formation::{Guideline, UtilitySchedule};
use crate::geometry::Vec3;
use crate::simulation::{RobotSpec, Scenario, TargetMotion};

pub const FORMAT_VERSION: u32 = 1;

/// Declared result of one constant-utility stage, checked by the run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageExpectation {
    /// One-based stage index, in order of time.
    pub stage: usize,
    /// Final gap of every active robot, ordered by robot id.
    pub spacing_deg: Vec<f64>,
    #[serde(deserialize_with = "positive")]
    pub tolerance_deg: f64,
}

/// A scenario together with the expectations declared next to it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub scenario: Scenario,
    pub expectations: Vec<StageExpectation>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    #[serde(deserialize_with = "version")]
    version: u32,
    guideline: Guideline,
    setpoints: SetpointsSection,
    gains: GainsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<TargetSection>,
    integrator: IntegratorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise: Option<NoiseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none", deserialize_with = "optional_positive")]
    max_speed: Option<f64>,
    #[serde(deserialize_with = "robot_list")]
    robots: Vec<RobotSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    expect: Vec<StageExpectation>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetpointsSection {
    #[serde(deserialize_with = "positive")]
    rho_star: f64,
    #[serde(deserialize_with = "finite")]
    omega_star: f64,
    #[serde(default, deserialize_with = "finite")]
    z_star: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GainsSection {
    #[serde(deserialize_with = "positive")]
    k_rho: f64,
    #[serde(deserialize_with = "positive")]
    k_z: f64,
    #[serde(deserialize_with = "positive")]
    k_phi: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetSection {
    #[serde(deserialize_with = "finite_point")]
    position: [f64; 3],
    /// Present only for a target moving at constant velocity.
    #[serde(default, skip_serializing_if = "Option::is_none", deserialize_with = "optional_point")]
    velocity: Option<[f64; 3]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntegratorSection {
    #[serde(default = "default_dt", deserialize_with = "positive")]
    dt: f64,
    #[serde(deserialize_with = "non_negative")]
    duration: f64,
    #[serde(default = "default_log_every", deserialize_with = "at_least_one")]
    log_every: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseSection {
    #[serde(deserialize_with = "non_negative")]
    std: f64,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotSection {
    #[serde(deserialize_with = "finite_point")]
    position: [f64; 3],
    #[serde(deserialize_with = "non_negative")]
    utility: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty", deserialize_with = "switch_list")]
    switches: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    z_star: Option<f64>,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_log_every() -> usize {
    1
}

fn checked<'de, D: Deserializer<'de>, T>(d: D, ok: impl Fn(&T) -> bool, what: &str) -> Result<T, D::Error>
where
    T: Deserialize<'de> + std::fmt::Debug,
{
    let v = T::deserialize(d)?;
    if ok(&v) {
        Ok(v)
    } else {
        Err(de::Error::custom(format!("{what}, got {v:?}")))
    }
}

fn version<'de, D: Deserializer<'de>>(d: D) -> Result<u32, D::Error> {
    checked(d, |&v: &u32| v == FORMAT_VERSION, &format!("unsupported version (expected {FORMAT_VERSION})"))
}

fn positive<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    checked(d, |&v: &f64| v.is_finite() && v > 0.0, "must be positive")
}

fn optional_positive<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    positive(d).map(Some)
}

fn non_negative<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    checked(d, |&v: &f64| v.is_finite() && v >= 0.0, "must be finite and non-negative")
}

fn finite<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    checked(d, |&v: &f64| v.is_finite(), "must be finite")
}

fn at_least_one<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
    checked(d, |&v: &usize| v >= 1, "must be at least 1")
}

fn finite_point<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; 3], D::Error> {
    checked(d, |p: &[f64; 3]| p.iter().all(|c| c.is_finite()), "coordinates must be finite")
}

fn optional_point<'de, D: Deserializer<'de>>(d: D) -> Result<Option<[f64; 3]>, D::Error> {
    finite_point(d).map(Some)
}

fn switch_list<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(f64, f64)>, D::Error> {
    checked(
        d,
        |s: &Vec<(f64, f64)>| {
            s.iter().all(|&(t, v)| t.is_finite() && t >= 0.0 && v.is_finite() && v >= 0.0)
                && s.windows(2).all(|w| w[1].0 > w[0].0)
        },
        "switches must be [time, utility] pairs with strictly increasing times and non-negative utilities",
    )
}

fn robot_list<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<RobotSection>, D::Error> {
    let robots = Vec::<RobotSection>::deserialize(d)?;
    if robots.len() < 2 {
        return Err(de::Error::custom(format!("need at least 2 robots, got {}", robots.len())));
    }
    Ok(robots)
}

impl Document {
    fn into_file(self) -> Result<ScenarioFile, String> {
        let robots = self
            .robots
            .into_iter()
            .map(|r| RobotSpec {
                position: Vec3::from(r.position),
                schedule: UtilitySchedule {
                    initial: r.utility,
                    switches: r.switches,
                },
                z_star: r.z_star,
            })
            .collect();
        let gains = ControlGains {
            k_rho: self.gains.k_rho,
            k_z: self.gains.k_z,
            k_phi: self.gains.k_phi,
        };
        let setpoints = Setpoints {
            rho_star: self.setpoints.rho_star,
            omega_star: self.setpoints.omega_star,
            z_star: self.setpoints.z_star,
        };
        let mut scenario = Scenario::new(robots, gains, setpoints, self.guideline, self.integrator.duration);
        scenario.dt = self.integrator.dt;
        scenario.log_every = self.integrator.log_every;
        scenario.max_speed = self.max_speed;
        if let Some(target) = self.target {
            let position = Vec3::from(target.position);
            scenario.target = match target.velocity {
                Some(v) => TargetMotion::ConstantVelocity {
                    start: position,
                    velocity: Vec3::from(v),
                },
                None => TargetMotion::Stationary { position },
            };
        }
        if let Some(noise) = self.noise {
            scenario.noise_std = noise.std;
            scenario.seed = noise.seed;
        }
        scenario.validate().map_err(|e| e.to_string())?;
        for (i, e) in self.expect.iter().enumerate() {
            if e.stage == 0 {
                return Err(format!("expect[{i}].stage is one-based, got 0"));
            }
        }
        Ok(ScenarioFile {
            scenario,
            expectations: self.expect,
        })
    }

    fn from_file(file: &ScenarioFile) -> Self {
        let s = &file.scenario;
        let point = |v: &Vec3| [v.x, v.y, v.z];
        let target = match s.target {
            TargetMotion::Stationary { position } if position == Vec3::zeros() => None,
            TargetMotion::Stationary { position } => Some(TargetSection {
                position: point(&position),
                velocity: None,
            }),
            TargetMotion::ConstantVelocity { start, velocity } => Some(TargetSection {
                position: point(&start),
                velocity: Some(point(&velocity)),
            }),
        };
        let noise = (s.noise_std != 0.0 || s.seed != 0).then_some(NoiseSection {
            std: s.noise_std,
            seed: s.seed,
        });
        Self {
            version: FORMAT_VERSION,
            guideline: s.guideline,
            setpoints: SetpointsSection {
                rho_star: s.setpoints.rho_star,
                omega_star: s.setpoints.omega_star,
                z_star: s.setpoints.z_star,
            },
            gains: GainsSection {
                k_rho: s.gains.k_rho,
                k_z: s.gains.k_z,
                k_phi: s.gains.k_phi,
            },
            target,
            integrator: IntegratorSection {
                dt: s.dt,
                duration: s.duration,
                log_every: s.log_every,
            },
            noise,
            max_speed: s.max_speed,
            robots: s
                .robots
                .iter()
                .map(|r| RobotSection {
                    position: point(&r.position),
                    utility: r.schedule.initial,
                    switches: r.schedule.switches.clone(),
                    z_star: r.z_star,
                })
                .collect(),
            expect: file.expectations.clone(),
        }
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let doc: Document = toml::from_str(text).map_err(|e| e.to_string())?;
        doc.into_file()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(&Document::from_file(self)).expect("scenario documents always serialize")
    }

    pub fn load(path: &Path) -> Result<Self, FileError> {
        let text = std::fs::read_to_string(path).map_err(|source| FileError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|message| FileError::Parse {
            path: path.to_path_buf(),
            message,
        })
    }
}
