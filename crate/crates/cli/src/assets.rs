//! On-disk asset catalog: body photographs with skin masks and lesion crops
//! with support masks, indexed by `catalog.json`.

use std::path::Path;

use lesionforge::imagecore::io::{read_mask_png, read_rgb_png, write_mask_png, write_rgb_png};
use lesionforge::imagecore::LesionClass;
use lesionforge::synth::fixtures::{catalog, FixtureSpec};
use lesionforge::synth::{BodyAsset, LesionAsset};
use serde::{Deserialize, Serialize};

use crate::manifest::AssetIds;
use crate::{CliError, Result};

pub const CATALOG_FILE: &str = "catalog.json";
pub const CATALOG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyRecord {
    pub id: String,
    pub image: String,
    pub skin: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LesionRecord {
    pub id: String,
    pub image: String,
    pub alpha: String,
    pub label: LesionClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetCatalog {
    pub schema_version: u32,
    pub seed: u64,
    pub fixtures: FixtureSpec,
    pub bodies: Vec<BodyRecord>,
    pub lesions: Vec<LesionRecord>,
}

pub struct Assets {
    pub bodies: Vec<BodyAsset>,
    pub lesions: Vec<LesionAsset>,
}

impl Assets {
    pub fn ids(&self) -> AssetIds {
        AssetIds {
            bodies: self.bodies.iter().map(|b| b.id.clone()).collect(),
            lesions: self.lesions.iter().map(|l| l.id.clone()).collect(),
        }
    }
}

/// Writes procedurally generated assets into `dir` (which must exist).
pub fn write_generated(dir: &Path, spec: &FixtureSpec, bodies: usize, lesions: usize, seed: u64) -> Result<AssetCatalog> {
    let (b, l) = catalog(spec, bodies, lesions, seed);
    for sub in ["bodies", "lesions"] {
        let p = dir.join(sub);
        std::fs::create_dir_all(&p).map_err(CliError::io(&p))?;
    }
    let mut cat = AssetCatalog { schema_version: CATALOG_VERSION, seed, fixtures: *spec, bodies: vec![], lesions: vec![] };
    for body in &b {
        let rec = BodyRecord {
            id: body.id.clone(),
            image: format!("bodies/{}.png", body.id),
            skin: format!("bodies/{}_skin.png", body.id),
        };
        write_rgb_png(&body.image, &dir.join(&rec.image)).map_err(|e| CliError::file(&dir.join(&rec.image), e))?;
        write_mask_png(&body.skin, &dir.join(&rec.skin)).map_err(|e| CliError::file(&dir.join(&rec.skin), e))?;
        cat.bodies.push(rec);
    }
    for lesion in &l {
        let rec = LesionRecord {
            id: lesion.id.clone(),
            image: format!("lesions/{}.png", lesion.id),
            alpha: format!("lesions/{}_alpha.png", lesion.id),
            label: lesion.label,
        };
        write_rgb_png(&lesion.image, &dir.join(&rec.image)).map_err(|e| CliError::file(&dir.join(&rec.image), e))?;
        write_mask_png(&lesion.alpha, &dir.join(&rec.alpha)).map_err(|e| CliError::file(&dir.join(&rec.alpha), e))?;
        cat.lesions.push(rec);
    }
    let path = dir.join(CATALOG_FILE);
    let mut text = serde_json::to_string_pretty(&cat).expect("catalog serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(CliError::io(&path))?;
    Ok(cat)
}

/// Loads every asset listed in `dir/catalog.json`. Anything missing or
/// unreadable is reported as missing assets.
pub fn load(dir: &Path) -> Result<Assets> {
    let path = dir.join(CATALOG_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Assets(format!("{}: {e}", path.display())))?;
    let cat: AssetCatalog =
        serde_json::from_str(&text).map_err(|e| CliError::Assets(format!("{}: {e}", path.display())))?;
    if cat.bodies.is_empty() || cat.lesions.is_empty() {
        return Err(CliError::Assets("catalog needs at least one body and one lesion".into()));
    }
    let missing = |p: &str, e: &dyn std::fmt::Display| CliError::Assets(format!("{}: {e}", dir.join(p).display()));
    let mut bodies = Vec::new();
    for r in &cat.bodies {
        let image = read_rgb_png(&dir.join(&r.image)).map_err(|e| missing(&r.image, &e))?;
        let skin = read_mask_png(&dir.join(&r.skin)).map_err(|e| missing(&r.skin, &e))?;
        bodies.push(BodyAsset::new(r.id.clone(), image, skin).map_err(|e| CliError::Assets(e.to_string()))?);
    }
    let mut lesions = Vec::new();
    for r in &cat.lesions {
        let image = read_rgb_png(&dir.join(&r.image)).map_err(|e| missing(&r.image, &e))?;
        let alpha = read_mask_png(&dir.join(&r.alpha)).map_err(|e| missing(&r.alpha, &e))?;
        lesions.push(LesionAsset::new(r.id.clone(), image, alpha, r.label).map_err(|e| CliError::Assets(e.to_string()))?);
    }
    Ok(Assets { bodies, lesions })
}
