//! Scenario files: a human-readable TOML description of the measurement
//! geometry, the body, and (for the planner) candidate antenna placements.
//!
//! ```toml
//! sample_rate_hz = 500.0
//! carrier_freq_hz = 5.32e9
//! n_subcarriers = 30
//! subcarrier_spacing_hz = 689655.2
//! tx = [0.0, 0.0, 0.0]
//!
//! [[rx]]
//! position = [0.8, 0.0, 0.0]
//! static_amplitude = 1.0
//! static_phase = 0.0
//! paths = [{ gain = 0.35, reflection = [0.4, 0.3, 0.25] }]
//!
//! [body]
//! point = [0.4, 0.3, 0.25]
//! posture = "supine"
//! breath_depth_m = 0.005
//!
//! [[candidate]]
//! label = "bedside-80cm"
//! tx = [0.0, 0.0, 0.0]
//! rx = [0.8, 0.0, 0.0]
//! ```

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::channel::{Posture, RxChain, ScatterPath, Scene, StaticPath};
use crate::geometry::{AntennaPair, GeometryError, MotionVector, Point3, SPEED_OF_LIGHT};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("scenario invalid: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(default = "defaults::sample_rate")]
    pub sample_rate_hz: f64,
    /// Either the carrier frequency or the wavelength may be given; the
    /// frequency wins when both are present.
    pub carrier_freq_hz: Option<f64>,
    pub wavelength_m: Option<f64>,
    #[serde(default = "defaults::n_subcarriers")]
    pub n_subcarriers: usize,
    #[serde(default = "defaults::subcarrier_spacing")]
    pub subcarrier_spacing_hz: f64,
    pub tx: Option<[f64; 3]>,
    #[serde(default, rename = "rx")]
    pub rx_chains: Vec<RxEntry>,
    pub body: Option<BodyEntry>,
    #[serde(default, rename = "candidate")]
    pub candidates: Vec<CandidateEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RxEntry {
    pub position: [f64; 3],
    #[serde(default = "defaults::unit")]
    pub static_amplitude: f64,
    #[serde(default)]
    pub static_phase: f64,
    #[serde(default)]
    pub paths: Vec<PathEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathEntry {
    pub gain: f64,
    pub reflection: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BodyEntry {
    pub point: [f64; 3],
    #[serde(default = "defaults::posture")]
    pub posture: Posture,
    #[serde(default = "defaults::breath_depth")]
    pub breath_depth_m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateEntry {
    pub label: String,
    pub tx: [f64; 3],
    pub rx: [f64; 3],
}

mod defaults {
    use crate::channel::Posture;

    pub fn sample_rate() -> f64 {
        500.0
    }
    pub fn n_subcarriers() -> usize {
        30
    }
    pub fn subcarrier_spacing() -> f64 {
        20.0e6 / 29.0
    }
    pub fn unit() -> f64 {
        1.0
    }
    pub fn posture() -> Posture {
        Posture::Supine
    }
    pub fn breath_depth() -> f64 {
        0.005
    }
}

fn point(p: [f64; 3]) -> Point3 {
    Point3::new(p[0], p[1], p[2])
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        Ok(toml::from_str(text)?)
    }

    pub fn carrier_freq_hz(&self) -> Result<f64, ScenarioError> {
        match (self.carrier_freq_hz, self.wavelength_m) {
            (Some(f), _) if f > 0.0 => Ok(f),
            (None, Some(l)) if l > 0.0 => Ok(SPEED_OF_LIGHT / l),
            (None, None) => Ok(SPEED_OF_LIGHT / crate::geometry::DEFAULT_WAVELENGTH_M),
            _ => Err(ScenarioError::Invalid(
                "carrier_freq_hz / wavelength_m must be positive".into(),
            )),
        }
    }

    /// Builds the synthesis scene; requires `tx` and at least one `[[rx]]`.
    pub fn to_scene(&self) -> Result<Scene, ScenarioError> {
        let tx = self
            .tx
            .ok_or_else(|| ScenarioError::Invalid("scenario is missing `tx`".into()))?;
        if self.rx_chains.is_empty() {
            return Err(ScenarioError::Invalid(
                "scenario needs at least one [[rx]] entry".into(),
            ));
        }
        let chains = self
            .rx_chains
            .iter()
            .map(|rx| {
                let mut paths: Vec<ScatterPath> = rx
                    .paths
                    .iter()
                    .map(|p| ScatterPath {
                        gain: p.gain,
                        reflection: point(p.reflection),
                    })
                    .collect();
                // An rx without explicit paths reflects off the body point.
                if paths.is_empty() {
                    if let Some(body) = &self.body {
                        paths.push(ScatterPath {
                            gain: 0.3,
                            reflection: point(body.point),
                        });
                    }
                }
                Ok(RxChain {
                    rx_position: point(rx.position),
                    static_path: StaticPath::new(rx.static_amplitude, rx.static_phase)
                        .map_err(|e| ScenarioError::Invalid(e.to_string()))?,
                    paths,
                })
            })
            .collect::<Result<Vec<_>, ScenarioError>>()?;
        Ok(Scene {
            tx_position: point(tx),
            chains,
            sample_rate_hz: self.sample_rate_hz,
            carrier_freq_hz: self.carrier_freq_hz()?,
            n_subcarriers: self.n_subcarriers,
            subcarrier_spacing_hz: self.subcarrier_spacing_hz,
        })
    }

    /// Placement candidates resolved for the planner: the body point, motion
    /// direction and every candidate pair.
    pub fn plan_inputs(&self) -> Result<PlanInputs, ScenarioError> {
        let body = self
            .body
            .as_ref()
            .ok_or_else(|| ScenarioError::Invalid("planner needs a [body] section".into()))?;
        let wavelength = SPEED_OF_LIGHT / self.carrier_freq_hz()?;
        let motion = MotionVector::new(body.posture.motion_direction(), body.breath_depth_m)?;
        let candidates = self
            .candidates
            .iter()
            .map(|c| {
                Ok(PlanCandidate {
                    label: c.label.clone(),
                    pair: AntennaPair::new(point(c.tx), point(c.rx), wavelength)?,
                })
            })
            .collect::<Result<Vec<_>, ScenarioError>>()?;
        Ok(PlanInputs {
            body_point: point(body.point),
            motion,
            candidates,
        })
    }
}

#[derive(Debug, Clone)]
pub struct PlanInputs {
    pub body_point: Point3,
    pub motion: MotionVector,
    pub candidates: Vec<PlanCandidate>,
}

#[derive(Debug, Clone)]
pub struct PlanCandidate {
    pub label: String,
    pub pair: AntennaPair,
}
