//! Demonstration directory: `meta.json`, `models/<name>.ply`,
//! `frames/<index>.bin`, and the optional `truth.json` sidecar.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::cloud::{decode_block, encode_block, read_ply, write_ply};
use super::{check_name, check_version, read_text, read_versioned, write_json, FormatError};
use crate::demonstration::{DemoMeta, Demonstration, Frame, HAND};
use crate::geometry::PointCloud;
use crate::scenario::Truth;

pub const DEMO_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct MetaFile {
    version: u32,
    frame_rate: f64,
    objects: Vec<String>,
    /// name -> path relative to the demo directory
    models: BTreeMap<String, String>,
    #[serde(default)]
    symmetry_axes: BTreeMap<String, Vector3<f64>>,
    frames: Vec<FrameEntry>,
}

#[derive(Serialize, Deserialize)]
struct FrameEntry {
    index: usize,
    file: String,
    blocks: Vec<BlockRef>,
}

#[derive(Serialize, Deserialize)]
struct BlockRef {
    name: String,
    /// byte offset of the block's u32 count
    offset: u64,
    count: usize,
}

fn frame_file(index: usize) -> String {
    format!("frames/{index:06}.bin")
}

pub fn save_demo(demo: &Demonstration, dir: &Path) -> Result<(), FormatError> {
    let meta_path = dir.join("meta.json");
    for name in &demo.meta.objects {
        check_name(&meta_path, name)?;
        if name == HAND {
            return Err(FormatError::new(&meta_path, format!("'{HAND}' is reserved for the hand cloud")));
        }
    }
    for sub in ["models", "frames"] {
        let d = dir.join(sub);
        std::fs::create_dir_all(&d).map_err(|e| FormatError::io(&d, e))?;
    }
    let mut models = BTreeMap::new();
    for (name, cloud) in &demo.meta.models {
        check_name(&meta_path, name)?;
        let rel = format!("models/{name}.ply");
        write_ply(&PointCloud::new(name.clone(), cloud.points.clone()), &dir.join(&rel))?;
        models.insert(name.clone(), rel);
    }
    let mut frames = Vec::with_capacity(demo.frames.len());
    for f in &demo.frames {
        let file = frame_file(f.index);
        let mut buf = Vec::new();
        let mut blocks = Vec::new();
        let hand = f.hand.as_ref().map(|h| (HAND.to_string(), h));
        for (name, cloud) in f.clouds.iter().map(|(n, c)| (n.clone(), c)).chain(hand) {
            blocks.push(BlockRef { name, offset: buf.len() as u64, count: cloud.len() });
            encode_block(&cloud.points, &mut buf);
        }
        let path = dir.join(&file);
        std::fs::write(&path, buf).map_err(|e| FormatError::io(&path, e))?;
        frames.push(FrameEntry { index: f.index, file, blocks });
    }
    let meta = MetaFile {
        version: DEMO_VERSION,
        frame_rate: demo.meta.frame_rate,
        objects: demo.meta.objects.clone(),
        models,
        symmetry_axes: demo.meta.symmetry_axes.clone(),
        frames,
    };
    write_json(&meta_path, &meta)
}

pub fn load_demo(dir: &Path) -> Result<Demonstration, FormatError> {
    let meta_path = dir.join("meta.json");
    let text = read_text(&meta_path)?;
    check_version(&meta_path, &text, DEMO_VERSION)?;
    let meta: MetaFile = serde_json::from_str(&text).map_err(|e| FormatError::json(&meta_path, &text, e))?;
    if !(meta.frame_rate > 0.0 && meta.frame_rate.is_finite()) {
        return Err(FormatError::new(&meta_path, format!("frame_rate must be positive, got {}", meta.frame_rate)));
    }
    let mut models = BTreeMap::new();
    for (name, rel) in &meta.models {
        let mut cloud = read_ply(&dir.join(rel))?;
        cloud.label = name.clone();
        models.insert(name.clone(), cloud);
    }
    let mut frames = Vec::with_capacity(meta.frames.len());
    for entry in &meta.frames {
        let path = dir.join(&entry.file);
        let bytes = std::fs::read(&path).map_err(|e| FormatError::io(&path, e))?;
        let mut frame = Frame { index: entry.index, ..Default::default() };
        for b in &entry.blocks {
            if b.name != HAND && !meta.objects.contains(&b.name) {
                return Err(FormatError::new(&path, format!("block '{}' is not a declared object", b.name)));
            }
            let (points, _) = decode_block(&bytes, b.offset as usize, &path)?;
            if points.len() != b.count {
                return Err(FormatError::at(
                    &path,
                    b.offset,
                    format!("block '{}' holds {} points, meta.json says {}", b.name, points.len(), b.count),
                ));
            }
            let cloud = PointCloud::new(b.name.clone(), points);
            if b.name == HAND {
                frame.hand = Some(cloud);
            } else {
                frame.clouds.insert(b.name.clone(), cloud);
            }
        }
        frames.push(frame);
    }
    Ok(Demonstration {
        meta: DemoMeta {
            frame_rate: meta.frame_rate,
            objects: meta.objects,
            models,
            symmetry_axes: meta.symmetry_axes,
        },
        frames,
    })
}

#[derive(Serialize, Deserialize)]
struct TruthFile {
    version: u32,
    #[serde(flatten)]
    truth: Truth,
}

pub fn save_truth(truth: &Truth, dir: &Path) -> Result<(), FormatError> {
    write_json(&dir.join("truth.json"), &TruthFile { version: DEMO_VERSION, truth: truth.clone() })
}

pub fn load_truth(dir: &Path) -> Result<Truth, FormatError> {
    read_versioned::<TruthFile>(&dir.join("truth.json"), DEMO_VERSION).map(|t| t.truth)
}
