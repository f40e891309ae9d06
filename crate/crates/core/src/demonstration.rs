//! In-memory form of a recorded demonstration: per-frame, per-object
//! segmented clouds in the scene frame, plus the object model clouds.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{remove_statistical_outliers, GeometryError, PointCloud};

/// Reserved object name for the demonstrator's hand.
pub const HAND: &str = "hand";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoMeta {
    pub frame_rate: f64,
    pub objects: Vec<String>,
    /// Object clouds in each object's own model frame.
    pub models: BTreeMap<String, PointCloud>,
    /// Rotational symmetry axis in the model frame, through the model origin.
    #[serde(default)]
    pub symmetry_axes: BTreeMap<String, Vector3<f64>>,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Frame {
    pub index: usize,
    pub clouds: BTreeMap<String, PointCloud>,
    pub hand: Option<PointCloud>,
}

impl Frame {
    /// Cloud of `name` in this frame; [`HAND`] addresses the hand cloud.
    pub fn cloud(&self, name: &str) -> Option<&PointCloud> {
        if name == HAND {
            self.hand.as_ref()
        } else {
            self.clouds.get(name)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Demonstration {
    pub meta: DemoMeta,
    pub frames: Vec<Frame>,
}

impl Demonstration {
    pub fn timestamp(&self, frame: usize) -> f64 {
        frame as f64 / self.meta.frame_rate
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn has_object(&self, name: &str) -> bool {
        name == HAND || self.meta.objects.iter().any(|o| o == name)
    }

    /// Object names excluding the hand.
    pub fn objects(&self) -> &[String] {
        &self.meta.objects
    }

    /// Statistical outlier removal applied once to every segmented cloud.
    /// Clouds too small for the neighbourhood statistic are kept as-is.
    pub fn remove_outliers(&self, k: usize, std_ratio: f64) -> Result<Demonstration, GeometryError> {
        let filter = |c: &PointCloud| -> Result<PointCloud, GeometryError> {
            if c.len() > k {
                remove_statistical_outliers(c, k, std_ratio)
            } else {
                Ok(c.clone())
            }
        };
        let mut out = self.clone();
        for f in &mut out.frames {
            for c in f.clouds.values_mut() {
                *c = filter(c)?;
            }
            if let Some(h) = &mut f.hand {
                *h = filter(h)?;
            }
        }
        Ok(out)
    }
}
