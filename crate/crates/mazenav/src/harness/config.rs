//! Run configuration: one TOML document covering the environment, the three
//! model layers, the planner, and the suite.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocentric::HypoParams;
use crate::gridworld::MazeConfig;
use crate::planner::PlanParams;

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Egocentric model knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EgoConfig {
    /// Steps a cell stays remembered without being re-observed.
    pub forget_horizon: u32,
    /// Buffer radius K; the buffer is (2K+1) square. Must be >= 6.
    pub buffer_radius: usize,
}

impl Default for EgoConfig {
    fn default() -> EgoConfig {
        EgoConfig {
            forget_horizon: 20,
            buffer_radius: 6,
        }
    }
}

/// Allocentric layer knobs beyond the hypothesis machinery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlaceConfig {
    /// Canvas side length (odd).
    pub canvas_size: usize,
    /// Mismatch fraction above which the integration loop resets the place.
    pub room_change_threshold: f64,
    /// Minimum overlapping cells for a mismatch score to count.
    pub min_overlap: usize,
    /// Std-dev (tiles) of the odometry-consistency prior on hypotheses.
    pub pose_sigma: f64,
    /// Force a decision after this many hypothesis updates.
    pub max_hypo_updates: u32,
}

impl Default for PlaceConfig {
    fn default() -> PlaceConfig {
        PlaceConfig {
            canvas_size: 17,
            room_change_threshold: 0.35,
            min_overlap: 5,
            pose_sigma: 0.25,
            max_hypo_updates: 6,
        }
    }
}

/// Cognitive-map knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapConfig {
    /// Per-step view-cell activation decay.
    pub decay: f64,
    /// Pose disagreement (tiles) beyond which a localization is duplicated.
    pub dup_radius: f64,
}

impl Default for MapConfig {
    fn default() -> MapConfig {
        MapConfig {
            decay: 0.99,
            dup_radius: 3.0,
        }
    }
}

/// Episode/suite harness knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    /// Exploration success threshold (fraction of visible tiles seen).
    pub coverage_target: f64,
    /// Step cap = this factor times the exploration oracle's forward steps.
    pub step_cap_factor: u32,
    /// Hard floor for the step cap.
    pub step_cap_min: u32,
    /// Seeds evaluated by `suite`.
    pub suite_seeds: Vec<u64>,
}

impl Default for HarnessConfig {
    fn default() -> HarnessConfig {
        HarnessConfig {
            coverage_target: 0.95,
            step_cap_factor: 12,
            step_cap_min: 300,
            suite_seeds: (0..20).collect(),
        }
    }
}

/// Complete run configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub environment: MazeConfig,
    pub egocentric: EgoConfig,
    pub allocentric: PlaceConfig,
    pub hypotheses: HypoParams,
    pub cogmap: MapConfig,
    pub planner: PlanParams,
    pub harness: HarnessConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigFileError> {
        self.environment
            .validate()
            .map_err(|e| ConfigFileError::Invalid(e.to_string()))?;
        if self.egocentric.buffer_radius < 6 {
            return Err(ConfigFileError::Invalid(
                "egocentric.buffer_radius must be >= 6 to hold one observation".into(),
            ));
        }
        if self.allocentric.canvas_size < 9 || self.allocentric.canvas_size % 2 == 0 {
            return Err(ConfigFileError::Invalid(
                "allocentric.canvas_size must be odd and >= 9".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.harness.coverage_target)
            || self.harness.coverage_target == 0.0
        {
            return Err(ConfigFileError::Invalid(
                "harness.coverage_target must be in (0, 1]".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.cogmap.decay) {
            return Err(ConfigFileError::Invalid(
                "cogmap.decay must be in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<RunConfig, ConfigFileError> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<RunConfig, ConfigFileError> {
        RunConfig::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let config = RunConfig::default();
        config.validate().unwrap();
        let text = config.to_toml();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn partial_document_fills_defaults() {
        let config = RunConfig::from_toml(
            "[environment]\nroom_rows = 2\nroom_cols = 2\n\n[egocentric]\nforget_horizon = 15\n",
        )
        .unwrap();
        assert_eq!(config.environment.room_rows, 2);
        assert_eq!(config.egocentric.forget_horizon, 15);
        assert_eq!(config.allocentric.canvas_size, 17);
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(RunConfig::from_toml("[egocentric]\nbuffer_radius = 3\n").is_err());
        assert!(RunConfig::from_toml("[allocentric]\ncanvas_size = 10\n").is_err());
        assert!(RunConfig::from_toml("[environment]\nmin_room = 2\n").is_err());
    }
}
