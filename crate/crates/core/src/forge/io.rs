//! On-disk sample and manifest format.
//!
//! ```text
//! <root>/<split>/manifest.json
//! <root>/<split>/<sample_id>/image.png
//! <root>/<split>/<sample_id>/wireframe.json
//! ```
//!
//! Floats are written in shortest round-trip decimal form, so every value
//! reloads bit-exactly.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::camera::CameraIntrinsics;
use crate::geom::Vec3;
use crate::wireframe::{validate, JunctionClass, LineVisibility, WireframeGraph};

use super::sample::DataSample;
use super::ForgeError;

pub const SCHEMA_VERSION: u32 = 1;
pub const WIREFRAME_FILE: &str = "wireframe.json";
pub const IMAGE_FILE: &str = "image.png";
pub const MANIFEST_FILE: &str = "manifest.json";

const KNOWN_KEYS: &[&str] = &[
    "schema_version",
    "sample_id",
    "solid_id",
    "view_id",
    "junctions3d",
    "junctions2d",
    "lines",
    "junction_visibility",
    "junction_class",
    "line_visibility",
    "intrinsics",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WireframeFile {
    schema_version: u64,
    sample_id: String,
    solid_id: u64,
    view_id: u32,
    junctions3d: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    junctions2d: Option<Vec<[f64; 2]>>,
    lines: Vec<[usize; 2]>,
    junction_visibility: Vec<u8>,
    junction_class: Vec<JunctionClass>,
    line_visibility: Vec<LineVisibility>,
    intrinsics: CameraIntrinsics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub sample_id: String,
    pub solid_id: u64,
    pub view_id: u32,
    /// Sample directory relative to the split directory.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub split: String,
    pub seed: u64,
    /// Generator configuration used to produce the split.
    pub config: Value,
    pub samples: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn solid_ids(&self) -> BTreeSet<u64> {
        self.samples.iter().map(|s| s.solid_id).collect()
    }

    pub fn check_unique_ids(&self) -> Result<(), ForgeError> {
        let mut seen = BTreeSet::new();
        for s in &self.samples {
            if !seen.insert(&s.sample_id) {
                return Err(ForgeError::InvalidConfig(format!("duplicate sample id {}", s.sample_id)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn write_manifest(manifest: &DatasetManifest, split_dir: &Path) -> Result<PathBuf, ForgeError> {
    manifest.check_unique_ids()?;
    for entry in &manifest.samples {
        let dir = split_dir.join(&entry.path);
        if !dir.join(WIREFRAME_FILE).is_file() {
            return Err(ForgeError::io(
                dir.join(WIREFRAME_FILE),
                std::io::Error::new(std::io::ErrorKind::NotFound, "sample file missing at export time"),
            ));
        }
    }
    let path = split_dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_json()).map_err(|e| ForgeError::io(&path, e))?;
    Ok(path)
}

pub fn read_manifest(split_dir: &Path) -> Result<DatasetManifest, ForgeError> {
    let path = split_dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| ForgeError::io(&path, e))?;
    let manifest: DatasetManifest = serde_json::from_str(&text).map_err(|e| parse_error(&path, &text, &e))?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(ForgeError::SchemaVersion {
            path,
            expected: SCHEMA_VERSION,
            found: manifest.schema_version as u64,
        });
    }
    manifest.check_unique_ids()?;
    Ok(manifest)
}

pub fn wireframe_json(sample: &DataSample) -> String {
    let g = &sample.wireframe;
    let file = WireframeFile {
        schema_version: SCHEMA_VERSION as u64,
        sample_id: sample.sample_id.clone(),
        solid_id: sample.solid_id,
        view_id: sample.view_id,
        junctions3d: g.junctions3d.iter().map(|p| p.to_array()).collect(),
        junctions2d: g.junctions2d.clone(),
        lines: g.lines.iter().map(|&(a, b)| [a, b]).collect(),
        junction_visibility: g.junction_visibility.iter().map(|&v| v as u8).collect(),
        junction_class: g.junction_class.clone(),
        line_visibility: g.line_visibility.clone(),
        intrinsics: sample.intrinsics,
    };
    let mut s = serde_json::to_string_pretty(&file).expect("wireframe serializes");
    s.push('\n');
    s
}

/// Writes `image.png` and `wireframe.json` into `dir` (created if missing).
pub fn serialize_sample(sample: &DataSample, dir: &Path) -> Result<(), ForgeError> {
    fs::create_dir_all(dir).map_err(|e| ForgeError::io(dir, e))?;
    let image = dir.join(IMAGE_FILE);
    fs::write(&image, &sample.image_png).map_err(|e| ForgeError::io(&image, e))?;
    let wf = dir.join(WIREFRAME_FILE);
    fs::write(&wf, wireframe_json(sample)).map_err(|e| ForgeError::io(&wf, e))?;
    Ok(())
}

/// Loaded sample plus any forward-compatibility warnings.
#[derive(Debug, Clone)]
pub struct LoadedSample {
    pub sample: DataSample,
    pub warnings: Vec<String>,
}

pub fn deserialize_sample(dir: &Path) -> Result<DataSample, ForgeError> {
    let loaded = load_sample(dir, true)?;
    for w in &loaded.warnings {
        log::warn!("{}: {w}", dir.display());
    }
    Ok(loaded.sample)
}

/// Reads a sample directory; `with_image` also loads and checks the PNG.
pub fn load_sample(dir: &Path, with_image: bool) -> Result<LoadedSample, ForgeError> {
    let path = dir.join(WIREFRAME_FILE);
    let text = fs::read_to_string(&path).map_err(|e| ForgeError::io(&path, e))?;
    let (sample, warnings) = parse_wireframe(&text, &path)?;
    let mut sample = sample;
    if with_image {
        let image = dir.join(IMAGE_FILE);
        sample.image_png = fs::read(&image).map_err(|e| ForgeError::io(&image, e))?;
        let decoded = image::load_from_memory(&sample.image_png).map_err(|e| ForgeError::Image(e.to_string()))?;
        if (decoded.width(), decoded.height()) != (sample.intrinsics.width, sample.intrinsics.height) {
            return Err(ForgeError::Image(format!(
                "{}: image is {}x{} but intrinsics say {}x{}",
                image.display(),
                decoded.width(),
                decoded.height(),
                sample.intrinsics.width,
                sample.intrinsics.height
            )));
        }
    }
    Ok(LoadedSample { sample, warnings })
}

fn parse_wireframe(text: &str, path: &Path) -> Result<(DataSample, Vec<String>), ForgeError> {
    let value: Value = serde_json::from_str(text).map_err(|e| parse_error(path, text, &e))?;
    let Value::Object(map) = &value else {
        return Err(ForgeError::Parse {
            path: path.into(),
            offset: 0,
            message: "top-level value must be an object".into(),
        });
    };
    let warnings: Vec<String> = map
        .keys()
        .filter(|k| !KNOWN_KEYS.contains(&k.as_str()))
        .map(|k| format!("ignoring unknown field {k:?}"))
        .collect();
    let found = map.get("schema_version").and_then(Value::as_u64).unwrap_or(0);
    if found != SCHEMA_VERSION as u64 {
        return Err(ForgeError::SchemaVersion {
            path: path.into(),
            expected: SCHEMA_VERSION,
            found,
        });
    }
    let file: WireframeFile = serde_json::from_value(value).map_err(|e| ForgeError::Parse {
        path: path.into(),
        offset: 0,
        message: e.to_string(),
    })?;
    let wireframe = WireframeGraph {
        junctions3d: file.junctions3d.into_iter().map(Vec3::from).collect(),
        junctions2d: file.junctions2d,
        lines: file.lines.into_iter().map(|[a, b]| (a, b)).collect(),
        junction_visibility: file.junction_visibility.iter().map(|&v| v != 0).collect(),
        junction_class: file.junction_class,
        line_visibility: file.line_visibility,
    };
    validate(&wireframe).map_err(|violations| ForgeError::InvalidSample {
        sample: file.sample_id.clone(),
        violations,
    })?;
    if file.junction_visibility.iter().any(|&v| v > 1) {
        return Err(ForgeError::Parse {
            path: path.into(),
            offset: 0,
            message: "junction_visibility entries must be 0 or 1".into(),
        });
    }
    file.intrinsics.validate()?;
    Ok((
        DataSample {
            sample_id: file.sample_id,
            solid_id: file.solid_id,
            view_id: file.view_id,
            image_png: Vec::new(),
            wireframe,
            intrinsics: file.intrinsics,
        },
        warnings,
    ))
}

/// Converts serde_json's line/column into a byte offset; truncation reports the end of input.
pub(crate) fn parse_error(path: &Path, text: &str, e: &serde_json::Error) -> ForgeError {
    let offset = if e.is_eof() { text.len() } else { byte_offset(text, e.line(), e.column()) };
    ForgeError::Parse {
        path: path.into(),
        offset,
        message: e.to_string(),
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}
