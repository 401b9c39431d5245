//! Bundled scene and scenario files.

use super::config::{ScenarioConfig, SceneConfig};
use crate::error::{Error, Result};

pub const SCENE_JSON: &str = include_str!("../../configs/scene.json");

/// `(name, json)` for every bundled scenario.
pub const SCENARIOS: [(&str, &str); 8] = [
    ("scheduled", include_str!("../../configs/scheduled.json")),
    ("fig11", include_str!("../../configs/fig11.json")),
    ("fig11_pure", include_str!("../../configs/fig11_pure.json")),
    ("fig12", include_str!("../../configs/fig12.json")),
    ("fig13", include_str!("../../configs/fig13.json")),
    ("fig14", include_str!("../../configs/fig14.json")),
    ("fig16", include_str!("../../configs/fig16.json")),
    ("fig17", include_str!("../../configs/fig17.json")),
];

pub fn scene() -> Result<SceneConfig> {
    SceneConfig::from_json(SCENE_JSON)
}

pub fn scenario(name: &str) -> Result<ScenarioConfig> {
    let (_, text) = SCENARIOS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        let known: Vec<&str> = SCENARIOS.iter().map(|(n, _)| *n).collect();
        Error::config(format!("no bundled scenario `{name}` (known: {})", known.join(", ")))
    })?;
    ScenarioConfig::from_json(text)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    SCENARIOS.iter().map(|(n, _)| *n)
}
