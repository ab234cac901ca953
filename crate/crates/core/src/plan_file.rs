//! Plan documents on disk.
//!
//! A plan file wraps a [`PushPlan`] with the scene's content hash and the
//! planner run that produced it. Wall time is left out unless asked for, so
//! the same scene and seed give byte-identical files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::{HistoryPoint, PlanOutcome, PushPlan};
use crate::scene::Scene;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PlanFileError {
    #[error("cannot access plan file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed plan file: {0}")]
    Parse(String),
    #[error("plan file format version {0} is not supported (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("plan was made for scene {expected}, but the scene hashes to {found}")]
    HashMismatch { expected: String, found: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanMetadata {
    pub seed: u64,
    pub switchover_threshold: usize,
    pub iterations: usize,
    pub tree_size: usize,
    pub history: Vec<HistoryPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

/// Poses are SI: `x`, `z` in m and `theta` in rad.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub format_version: u32,
    pub scene_hash: String,
    pub metadata: PlanMetadata,
    pub plan: PushPlan,
}

impl PlanDocument {
    pub fn new(scene: &Scene, outcome: &PlanOutcome, seed: u64, switchover_threshold: usize) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            scene_hash: scene.content_hash(),
            metadata: PlanMetadata {
                seed,
                switchover_threshold,
                iterations: outcome.stats.iterations,
                tree_size: outcome.stats.tree_size,
                history: outcome.stats.history.clone(),
                wall_time_s: None,
            },
            plan: outcome.plan.clone(),
        }
    }

    pub fn with_wall_time(mut self, seconds: f64) -> Self {
        self.metadata.wall_time_s = Some(seconds);
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan documents serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, PlanFileError> {
        // Read the version first so old files get a precise error.
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let header: Header =
            serde_json::from_str(text).map_err(|e| PlanFileError::Parse(e.to_string()))?;
        if header.format_version != FORMAT_VERSION {
            return Err(PlanFileError::UnsupportedVersion(header.format_version));
        }
        serde_json::from_str(text).map_err(|e| PlanFileError::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PlanFileError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PlanFileError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn check_scene(&self, scene: &Scene) -> Result<(), PlanFileError> {
        let found = scene.content_hash();
        if found == self.scene_hash {
            Ok(())
        } else {
            Err(PlanFileError::HashMismatch {
                expected: self.scene_hash.clone(),
                found,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::plan;
    use crate::scene::tests::square_prism;
    use crate::GraspPose;

    fn doc() -> (Scene, PlanDocument) {
        let s = Scene::from_config(square_prism()).unwrap();
        let out = plan(&s, &GraspPose::default(), &GraspPose::from_mm_deg(0.0, 2.0, 0.0)).unwrap();
        let d = PlanDocument::new(&s, &out, s.planner().seed, 2);
        (s, d)
    }

    #[test]
    fn round_trip_is_exact() {
        let (_, d) = doc();
        let back = PlanDocument::from_json(&d.to_json()).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.to_json(), d.to_json());
    }

    #[test]
    fn wall_time_only_when_requested() {
        let (_, d) = doc();
        assert!(!d.to_json().contains("wall_time_s"));
        assert!(d.with_wall_time(0.5).to_json().contains("\"wall_time_s\": 0.5"));
    }

    #[test]
    fn rejects_other_versions_and_scenes() {
        let (s, d) = doc();
        let text = d.to_json().replace("\"format_version\": 1", "\"format_version\": 9");
        assert!(matches!(
            PlanDocument::from_json(&text),
            Err(PlanFileError::UnsupportedVersion(9))
        ));
        assert!(d.check_scene(&s).is_ok());
        let other = s.with_pusher_mu("bottom", 0.5).unwrap();
        assert!(matches!(
            d.check_scene(&other),
            Err(PlanFileError::HashMismatch { .. })
        ));
    }
}
