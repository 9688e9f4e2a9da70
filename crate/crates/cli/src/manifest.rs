//! Dataset manifests. Paths inside a manifest are relative to the directory
//! holding it, so a dataset tree can be moved or compared byte for byte.

use std::collections::BTreeSet;
use std::path::{Component, Path, PathBuf};

use lesionforge::synth::Placement;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifestKind {
    Detection,
    Tracking,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetIds {
    pub bodies: Vec<String>,
    pub lesions: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub index: usize,
    pub seed: u64,
    pub body_id: String,
    pub image: String,
    pub labels: String,
    pub skin: String,
    pub placements: Vec<Placement>,
    pub dropped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairRecord {
    pub index: usize,
    /// Index of the detection sample the pair was built from.
    pub sample: usize,
    pub seed: u64,
    pub image_a: String,
    pub image_b: String,
    pub labels_a: String,
    pub labels_b: String,
    /// Pixels whose content was rewritten by per-lesion perturbation.
    pub changed: String,
    pub flow: String,
    pub perturbed: Vec<usize>,
    pub dropped: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub kind: ManifestKind,
    pub config_hash: String,
    pub config: Config,
    pub seed: u64,
    pub assets: AssetIds,
    /// SHA-256 of the detection manifest a tracking set was derived from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_manifest: Option<String>,
    pub samples: Vec<SampleRecord>,
    pub pairs: Vec<PairRecord>,
}

fn check_relative(p: &str) -> Result<()> {
    let path = Path::new(p);
    let ok = !p.is_empty() && path.components().all(|c| matches!(c, Component::Normal(_)));
    if ok {
        Ok(())
    } else {
        Err(CliError::Schema(format!("path {p:?} must be relative and stay inside the dataset")))
    }
}

impl DatasetManifest {
    pub fn new(kind: ManifestKind, config: &Config, seed: u64, assets: AssetIds) -> Self {
        DatasetManifest {
            schema_version: SCHEMA_VERSION,
            kind,
            config_hash: config.hash(),
            config: config.clone(),
            seed,
            assets,
            source_manifest: None,
            samples: Vec::new(),
            pairs: Vec::new(),
        }
    }

    pub fn files(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for s in &self.samples {
            out.extend([s.image.as_str(), &s.labels, &s.skin]);
        }
        for p in &self.pairs {
            out.extend([p.image_a.as_str(), &p.image_b, &p.labels_a, &p.labels_b, &p.changed, &p.flow]);
        }
        out
    }

    /// Structural checks plus, when `dir` is given, existence of every referenced file.
    pub fn validate(&self, dir: Option<&Path>) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Schema(format!("schema_version {} (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        self.config.validate()?;
        if self.config.hash() != self.config_hash {
            return Err(CliError::Schema("config_hash does not match the embedded config".into()));
        }
        match self.kind {
            ManifestKind::Detection if !self.pairs.is_empty() => {
                return Err(CliError::Schema("detection manifest lists pairs".into()))
            }
            ManifestKind::Tracking if !self.samples.is_empty() => {
                return Err(CliError::Schema("tracking manifest lists samples".into()))
            }
            _ => {}
        }
        let mut seen = BTreeSet::new();
        for (k, s) in self.samples.iter().enumerate() {
            if s.index != k {
                return Err(CliError::Schema(format!("samples[{k}].index is {}", s.index)));
            }
            if !self.assets.bodies.contains(&s.body_id) {
                return Err(CliError::Schema(format!("samples[{k}].body_id {:?} not in the asset list", s.body_id)));
            }
        }
        for (k, p) in self.pairs.iter().enumerate() {
            if p.index != k {
                return Err(CliError::Schema(format!("pairs[{k}].index is {}", p.index)));
            }
        }
        for f in self.files() {
            check_relative(f)?;
            if !seen.insert(f) {
                return Err(CliError::Schema(format!("file {f:?} referenced twice")));
            }
            if let Some(dir) = dir {
                if !dir.join(f).is_file() {
                    return Err(CliError::Schema(format!("referenced file {f:?} is missing")));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Schema(format!("manifest: {e}")))
    }

    /// Reads and fully validates a manifest; `path` may be the file or its directory.
    pub fn load(path: &Path) -> Result<(DatasetManifest, PathBuf)> {
        let file = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
        let text = std::fs::read_to_string(&file).map_err(CliError::io(&file))?;
        let m = DatasetManifest::from_json(&text)?;
        let dir = file.parent().map(Path::to_path_buf).unwrap_or_default();
        m.validate(Some(&dir))?;
        Ok((m, dir))
    }
}
