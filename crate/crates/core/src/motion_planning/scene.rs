use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{FkResult, KinematicChain};
use crate::geometry::{CollisionModel, Pose};

/// Clearance required between any two bodies.
pub const DEFAULT_MARGIN: f64 = 0.002;
/// Penetration tolerated between pairs declared as touching.
pub const DEFAULT_CONTACT_TOLERANCE: f64 = 0.004;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub name: String,
    pub model: CollisionModel,
    pub pose: Pose,
    /// Non-solid bodies (a water jet) never collide.
    pub solid: bool,
}

/// An object carried rigidly by the tool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attachment {
    pub name: String,
    pub model: CollisionModel,
    /// Object pose in the tool frame.
    pub grasp: Pose,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub objects: Vec<SceneObject>,
    pub attached: Option<Attachment>,
    pub margin: f64,
    /// Object-name pairs allowed to touch, checked against
    /// `-contact_tolerance` instead of the margin.
    pub touching: BTreeSet<(String, String)>,
    pub contact_tolerance: f64,
}

impl Default for Scene {
    fn default() -> Self {
        Scene {
            objects: Vec::new(),
            attached: None,
            margin: DEFAULT_MARGIN,
            touching: BTreeSet::new(),
            contact_tolerance: DEFAULT_CONTACT_TOLERANCE,
        }
    }
}

impl Scene {
    pub fn with_objects(objects: Vec<SceneObject>) -> Self {
        Scene { objects, ..Default::default() }
    }

    pub fn allow_touch(&mut self, a: &str, b: &str) {
        self.touching.insert(ordered(a, b));
    }

    pub fn touching(&self, a: &str, b: &str) -> bool {
        self.touching.contains(&ordered(a, b))
    }

    pub fn object(&self, name: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.name == name)
    }
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// Whether the arm at `q` (and anything it carries) intersects the scene or
/// itself, with the scene margin added to every clearance.
pub fn in_collision(chain: &KinematicChain, q: &[f64], scene: &Scene) -> bool {
    match chain.forward_kinematics(q) {
        Ok(fk) => collides(chain, &fk, scene),
        Err(_) => true,
    }
}

pub(crate) fn collides(chain: &KinematicChain, fk: &FkResult, scene: &Scene) -> bool {
    let m = scene.margin;
    let solid: Vec<&SceneObject> = scene.objects.iter().filter(|o| o.solid).collect();
    for (i, (link, pose)) in chain.links.iter().zip(&fk.links).enumerate() {
        if link.parts.is_empty() {
            continue;
        }
        if solid.iter().any(|o| link.closer_than(pose, &o.model, &o.pose, m)) {
            return true;
        }
        for j in i + 1..chain.links.len() {
            if !chain.exempt(i, j) && !chain.links[j].parts.is_empty() && link.closer_than(pose, &chain.links[j], &fk.links[j], m) {
                return true;
            }
        }
    }
    if let Some(att) = &scene.attached {
        let pose = fk.tool * att.grasp;
        let last = chain.links.len() - 1;
        for (i, (link, lp)) in chain.links.iter().zip(&fk.links).enumerate() {
            if i != last && !link.parts.is_empty() && att.model.closer_than(&pose, link, lp, m) {
                return true;
            }
        }
        for o in &solid {
            let limit = if scene.touching(&att.name, &o.name) { -scene.contact_tolerance } else { m };
            if att.model.closer_than(&pose, &o.model, &o.pose, limit) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexShape;
    use nalgebra::{Point3, Vector3};

    fn boxed(name: &str, center: [f64; 3], half: [f64; 3]) -> SceneObject {
        SceneObject {
            name: name.into(),
            model: CollisionModel::single(ConvexShape::cuboid(Point3::origin(), Vector3::from(half))),
            pose: Pose::from_translation(center[0], center[1], center[2]),
            solid: true,
        }
    }

    fn ready() -> Vec<f64> {
        vec![0.0, -0.785, 0.0, -2.356, 0.0, 1.571, 0.785]
    }

    #[test]
    fn floor_below_ready_pose_is_clear() {
        let chain = KinematicChain::franka_like();
        let scene = Scene::with_objects(vec![boxed("floor", [0.0, 0.0, -0.05], [2.0, 2.0, 0.04])]);
        assert!(!in_collision(&chain, &ready(), &scene));
        assert!(!in_collision(&chain, &ready(), &Scene::default()));
    }

    #[test]
    fn tool_inside_table_collides() {
        let chain = KinematicChain::franka_like();
        let tool = chain.tool_pose(&ready()).unwrap().translation;
        // table top 5 cm above the tool point, under the gripper body
        let scene = Scene::with_objects(vec![boxed("table", [tool.x, tool.y, tool.z - 0.2], [0.15, 0.15, 0.25])]);
        assert!(in_collision(&chain, &ready(), &scene));
        let mut water = scene.clone();
        water.objects[0].solid = false;
        assert!(!in_collision(&chain, &ready(), &water));
    }

    #[test]
    fn attached_object_against_wall() {
        let chain = KinematicChain::franka_like();
        let tool = chain.tool_pose(&ready()).unwrap();
        let bowl = CollisionModel::single(ConvexShape::cuboid(Point3::origin(), Vector3::new(0.05, 0.05, 0.03)));
        // object hangs 8 cm below the tool point
        let grasp = Pose::from_translation(0.0, 0.0, 0.08);
        let obj = tool * grasp;
        // wall face 4 cm from the object centre, inside its extent
        let wall_x = obj.translation.x + 0.06;
        let mut scene = Scene::with_objects(vec![boxed("wall", [wall_x, 0.0, obj.translation.z], [0.02, 0.3, 0.05])]);
        scene.attached = Some(Attachment { name: "bowl".into(), model: bowl, grasp });
        assert!(in_collision(&chain, &ready(), &scene));
        scene.objects[0].pose.translation.x += 0.06;
        assert!(!in_collision(&chain, &ready(), &scene));
    }

    #[test]
    fn touching_pair_tolerates_small_overlap() {
        let chain = KinematicChain::franka_like();
        let tool = chain.tool_pose(&ready()).unwrap();
        let grasp = Pose::from_translation(0.0, 0.0, 0.08);
        let obj = tool * grasp;
        let bowl = CollisionModel::single(ConvexShape::cuboid(Point3::origin(), Vector3::new(0.05, 0.05, 0.03)));
        // plate under the bowl along its local z, overlapping by 2 mm
        let floor_center = obj.transform_point(&Point3::new(0.0, 0.0, 0.03 + 0.02 - 0.002));
        let mut sink = boxed("sink", [0.0; 3], [0.1, 0.1, 0.02]);
        sink.pose = Pose::new(obj.rotation, floor_center.coords);
        let mut scene = Scene::with_objects(vec![sink]);
        scene.attached = Some(Attachment { name: "bowl".into(), model: bowl, grasp });
        assert!(in_collision(&chain, &ready(), &scene));
        scene.allow_touch("sink", "bowl");
        assert!(!in_collision(&chain, &ready(), &scene));
    }
}
