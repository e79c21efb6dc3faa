//! JSON configuration shared by the command-line tool and the flat-array
//! interface. Unknown keys are rejected and every section is validated
//! when loaded. Angles are in radians, lengths in metres.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{eval_array, Scene, SourcePlacement, Vec3};
use crate::mixture::{CurriculumState, MixtureSpec};
use crate::params::SimParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub room_dims: [f64; 3],
    /// Defaults to the room centre.
    #[serde(default)]
    pub array_origin: Option<Vec3>,
    /// Offsets from the array reference point; defaults to the 4-mic
    /// 4-8-4 cm linear array.
    #[serde(default)]
    pub mics: Option<Vec<Vec3>>,
    pub sources: Vec<SourcePlacement>,
}

impl SceneConfig {
    pub fn to_scene(&self) -> Scene {
        let scene = Scene::new(
            self.room_dims,
            self.mics.clone().unwrap_or_else(eval_array),
            self.sources.clone(),
        );
        match self.array_origin {
            Some(o) => scene.with_origin(o),
            None => scene,
        }
    }
}

impl From<&Scene> for SceneConfig {
    fn from(s: &Scene) -> Self {
        Self {
            room_dims: s.room_dims,
            array_origin: Some(s.array_origin),
            mics: Some(s.mics.clone()),
            sources: s.sources.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    /// One IEEE float WAV file per signal.
    #[default]
    Wav,
    /// A single `FRIR` container.
    Frir,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: OutputFormat,
    /// Also write early-reverberation filters when simulating.
    pub early: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub sim: SimParams,
    pub scene: Option<SceneConfig>,
    pub mixture: Option<MixtureSpec>,
    pub curriculum: Option<CurriculumState>,
    /// Directories of mono WAV files; synthetic signals are used when absent.
    pub speech_dir: Option<PathBuf>,
    pub noise_dir: Option<PathBuf>,
    pub output: OutputConfig,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::InvalidArgument(format!("{}: {j}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if let Some(s) = &self.scene {
            s.to_scene().validate()?;
        }
        if let Some(m) = &self.mixture {
            m.validate()?;
        }
        if let Some(c) = &self.curriculum {
            let ok = c.lower_ms > 0.0
                && c.lower_ms <= c.current_upper_ms
                && c.current_upper_ms <= c.max_ms
                && c.step_ms >= 0.0;
            if !ok {
                return Err(Error::InvalidArgument(format!(
                    "inconsistent curriculum {c:?}"
                )));
            }
        }
        Ok(())
    }
}
