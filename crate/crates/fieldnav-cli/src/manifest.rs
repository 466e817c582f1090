//! Scene manifests: a JSON index of generated map files.
//!
//! `scene-gen` writes one `.map` file per scene plus a `manifest.json` next
//! to them; `dataset-gen` and `eval` take the manifest path and load every
//! listed scene. Paths are stored relative to the manifest's directory so a
//! scene directory can be moved wholesale.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use fieldnav::grid::SemanticGrid;
use fieldnav::mapfile;
use serde::{Deserialize, Serialize};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub seed: u64,
    /// File name relative to the manifest's directory.
    pub path: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub resolution_m: f64,
    pub width_m: f64,
    pub height_m: f64,
    pub scenes: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }
}

/// Reads a manifest and every scene it lists.
pub fn load_scenes(manifest_path: &Path) -> Result<Vec<(String, Arc<SemanticGrid>)>> {
    let text = fs::read_to_string(manifest_path)
        .with_context(|| format!("cannot read manifest {}", manifest_path.display()))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .with_context(|| format!("invalid manifest {}", manifest_path.display()))?;
    if manifest.version != MANIFEST_VERSION {
        anyhow::bail!(
            "manifest {}: unsupported version {} (expected {MANIFEST_VERSION})",
            manifest_path.display(),
            manifest.version
        );
    }
    if manifest.scenes.is_empty() {
        anyhow::bail!("manifest {} lists no scenes", manifest_path.display());
    }
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut scenes = Vec::with_capacity(manifest.scenes.len());
    for entry in &manifest.scenes {
        let path = dir.join(&entry.path);
        let grid = mapfile::read_map(&path)
            .with_context(|| format!("scene {} ({})", entry.id, path.display()))?;
        scenes.push((entry.id.clone(), Arc::new(grid)));
    }
    Ok(scenes)
}
