use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Point3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{CollisionModel, GeometryError, Pose};
use crate::motion_planning::{Attachment, JointConfig, KinematicChain, PlanningError, Scene, SceneObject};
use crate::scenario::{FaucetSpec, PlacedObject};

pub const SCENE_VERSION: u32 = 1;

/// Execution scene file: objects, optional faucet coupling and the robot's
/// starting configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub version: u32,
    pub objects: Vec<PlacedObject>,
    #[serde(default)]
    pub faucet: Option<FaucetSpec>,
    #[serde(default)]
    pub robot_home: Option<Vec<f64>>,
}

/// A ready pose for the bundled arm, clear of the workspace below it.
pub fn default_home() -> JointConfig {
    vec![0.0, -0.5, 0.0, -2.4, 0.0, 1.9, std::f64::consts::FRAC_PI_4]
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldObject {
    pub name: String,
    pub model: CollisionModel,
    /// Surface samples in the model frame.
    pub surface: Vec<Point3<f64>>,
    pub pose: Pose,
    pub present: bool,
    pub solid: bool,
    pub symmetry_axis: Option<Vector3<f64>>,
}

/// The grasped object and its pose in the tool frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grip {
    pub object: String,
    pub grasp: Pose,
}

#[derive(Clone, Debug, PartialEq)]
struct FaucetState {
    spec: FaucetSpec,
    /// Lever placement on the outlet when off.
    rest: Pose,
    /// Water jet placement relative to the outlet.
    water: Pose,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    pub objects: BTreeMap<String, WorldObject>,
    pub q: JointConfig,
    pub attachment: Option<Grip>,
    pub clock: f64,
    faucet: Option<FaucetState>,
}

#[derive(Debug, thiserror::Error)]
pub enum WorldError {
    #[error("scene version {found} (supported: {SCENE_VERSION})")]
    Version { found: u32 },
    #[error("object '{object}': {source}")]
    Geometry { object: String, source: GeometryError },
    #[error("faucet refers to unknown object '{0}'")]
    UnknownObject(String),
    #[error(transparent)]
    Planning(#[from] PlanningError),
}

impl WorldState {
    pub fn from_scene(spec: &SceneSpec, chain: &KinematicChain) -> Result<Self, WorldError> {
        if spec.version != SCENE_VERSION {
            return Err(WorldError::Version { found: spec.version });
        }
        let mut objects = BTreeMap::new();
        for (i, o) in spec.objects.iter().enumerate() {
            let model = o.spec.collision_model().map_err(|source| WorldError::Geometry { object: o.spec.name.clone(), source })?;
            let mut rng = ChaCha8Rng::seed_from_u64(0x5EED + i as u64);
            let surface = o.spec.sample_surface(o.spec.sample_count(), &mut rng);
            objects.insert(
                o.spec.name.clone(),
                WorldObject {
                    name: o.spec.name.clone(),
                    model,
                    surface,
                    pose: o.pose,
                    present: o.initially_present,
                    solid: o.spec.solid,
                    symmetry_axis: o.spec.symmetry(),
                },
            );
        }
        let faucet = match &spec.faucet {
            Some(f) => {
                let get = |n: &str| objects.get(n).map(|o: &WorldObject| o.pose).ok_or_else(|| WorldError::UnknownObject(n.into()));
                let outlet = get(&f.outlet)?;
                Some(FaucetState { spec: f.clone(), rest: outlet.relative(&get(&f.lever)?), water: outlet.relative(&get(&f.water)?) })
            }
            None => None,
        };
        let q = spec.robot_home.clone().unwrap_or_else(default_home);
        chain.check_dims(&q)?;
        let mut w = WorldState { objects, q, attachment: None, clock: 0.0, faucet };
        w.update_faucet();
        Ok(w)
    }

    pub fn pose(&self, name: &str) -> Option<&Pose> {
        self.objects.get(name).filter(|o| o.present).map(|o| &o.pose)
    }

    pub fn is_present(&self, name: &str) -> bool {
        self.objects.get(name).is_some_and(|o| o.present)
    }

    /// Moves the robot, carrying any attached object, and updates the faucet.
    pub fn set_config(&mut self, chain: &KinematicChain, q: &[f64]) -> Result<(), PlanningError> {
        let tool = chain.tool_pose(q)?;
        self.q = q.to_vec();
        if let Some(g) = &self.attachment {
            if let Some(o) = self.objects.get_mut(&g.object) {
                o.pose = tool * g.grasp;
            }
            self.update_faucet();
        }
        Ok(())
    }

    /// Water is present while the lever is turned past its threshold.
    fn update_faucet(&mut self) {
        let Some(f) = &self.faucet else { return };
        let (Some(outlet), Some(lever)) = (self.objects.get(&f.spec.outlet), self.objects.get(&f.spec.lever)) else { return };
        let on = outlet.present && f.spec.lever_angle(&f.rest, &outlet.pose, &lever.pose) > f.spec.on_angle;
        let water_pose = outlet.pose * f.water;
        if let Some(w) = self.objects.get_mut(&f.spec.water) {
            w.present = on;
            w.pose = water_pose;
        }
    }

    pub fn attach(&mut self, chain: &KinematicChain, object: &str) -> Result<(), PlanningError> {
        let tool = chain.tool_pose(&self.q)?;
        if let Some(o) = self.objects.get(object) {
            self.attachment = Some(Grip { object: object.to_string(), grasp: tool.relative(&o.pose) });
        }
        Ok(())
    }

    pub fn release(&mut self) {
        self.attachment = None;
    }

    /// Planning scene: every present object except the held one, which
    /// travels with the tool instead.
    pub fn planning_scene(&self, touching: &BTreeSet<(String, String)>) -> Scene {
        let held = self.attachment.as_ref().map(|g| g.object.as_str());
        let objects = self
            .objects
            .values()
            .filter(|o| o.present && Some(o.name.as_str()) != held)
            .map(|o| SceneObject { name: o.name.clone(), model: o.model.clone(), pose: o.pose, solid: o.solid })
            .collect();
        let attached = self.attachment.as_ref().and_then(|g| {
            self.objects.get(&g.object).map(|o| Attachment { name: g.object.clone(), model: o.model.clone(), grasp: g.grasp })
        });
        let mut scene = Scene { objects, attached, ..Default::default() };
        for (a, b) in touching {
            scene.allow_touch(a, b);
        }
        scene
    }

    /// Signed distance between two present objects' collision models.
    pub fn separation(&self, a: &str, b: &str) -> Option<f64> {
        let (oa, ob) = (self.objects.get(a).filter(|o| o.present)?, self.objects.get(b).filter(|o| o.present)?);
        Some(oa.model.signed_distance(&oa.pose, &ob.model, &ob.pose))
    }
}
