//! Versioned policy JSON; model clouds sit beside it as PLY files and are
//! referenced by relative path.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::cloud::{read_ply, write_ply};
use super::{check_name, read_versioned, write_json, FormatError};
use crate::geometry::CollisionModel;
use crate::primitive_learning::{ObjectModel, Policy, Primitive};

pub const POLICY_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct PolicyFile {
    version: u32,
    frame_rate: f64,
    primitives: Vec<Primitive>,
    models: BTreeMap<String, ModelRef>,
}

#[derive(Serialize, Deserialize)]
struct ModelRef {
    cloud: String,
    collision: CollisionModel,
    #[serde(default)]
    symmetry_axis: Option<Vector3<f64>>,
}

/// Writes `path` and a sibling `<stem>.models/` directory of PLY clouds.
pub fn save_policy(policy: &Policy, path: &Path) -> Result<(), FormatError> {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "policy".into());
    let models_dir = format!("{stem}.models");
    let base = path.parent().unwrap_or(Path::new(""));
    let abs_dir = base.join(&models_dir);
    std::fs::create_dir_all(&abs_dir).map_err(|e| FormatError::io(&abs_dir, e))?;
    let mut models = BTreeMap::new();
    for (name, m) in &policy.object_models {
        check_name(path, name)?;
        let rel = format!("{models_dir}/{name}.ply");
        write_ply(&m.cloud, &base.join(&rel))?;
        models.insert(
            name.clone(),
            ModelRef { cloud: rel, collision: m.collision.clone(), symmetry_axis: m.symmetry_axis },
        );
    }
    let file = PolicyFile {
        version: POLICY_VERSION,
        frame_rate: policy.frame_rate,
        primitives: policy.primitives.clone(),
        models,
    };
    write_json(path, &file)
}

pub fn load_policy(path: &Path) -> Result<Policy, FormatError> {
    let file: PolicyFile = read_versioned(path, POLICY_VERSION)?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut object_models = BTreeMap::new();
    for (name, m) in file.models {
        let mut cloud = read_ply(&base.join(&m.cloud))?;
        cloud.label = name.clone();
        object_models.insert(name, ObjectModel { cloud, collision: m.collision, symmetry_axis: m.symmetry_axis });
    }
    for p in &file.primitives {
        if !object_models.contains_key(&p.target) {
            return Err(FormatError::new(path, format!("primitive target '{}' has no model entry", p.target)));
        }
    }
    Ok(Policy { frame_rate: file.frame_rate, primitives: file.primitives, object_models })
}
