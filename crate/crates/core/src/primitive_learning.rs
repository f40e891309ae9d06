//! Make / Maintain / Break-contact segmentation and policy learning.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::contact_analysis::{contact_locations, ContactError, ContactLocation, ContactTimeline, DemoContacts};
use crate::demonstration::Demonstration;
use crate::geometry::{build_collision_model, CollisionModel, GeometryError, PointCloud, Pose};
use crate::pose_estimation::TrackedPose;

/// Per-object, per-frame poses in the scene frame; `None` where unknown.
pub type PoseTracks = BTreeMap<String, Vec<Option<Pose>>>;

pub fn pose_track(tracked: &[TrackedPose]) -> Vec<Option<Pose>> {
    tracked.iter().map(|t| t.pose().copied()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PrimitiveKind {
    MakeContact,
    MaintainContact,
    BreakContact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MakeContactParams {
    pub locations: Vec<ContactLocation>,
    /// Unit direction, model frame, from the hand centroid toward each location.
    pub approaches: Vec<Vector3<f64>>,
    pub manual_override: Option<Vec<ContactLocation>>,
}

impl MakeContactParams {
    /// Override when set, else the learned locations; approaches fall back
    /// to the first learned one.
    pub fn effective(&self) -> Vec<(ContactLocation, Vector3<f64>)> {
        match &self.manual_override {
            Some(locs) => {
                let fallback = self.approaches.first().copied().unwrap_or(-Vector3::z());
                locs.iter().map(|l| (l.clone(), fallback)).collect()
            }
            None => self.locations.iter().cloned().zip(self.approaches.iter().copied()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelativePose {
    pub object: String,
    pub reference: String,
    /// `object` expressed in `reference`'s frame.
    pub pose: Pose,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyMoment {
    pub frame: usize,
    /// Reference chosen for the held object at this frame.
    pub reference: String,
    pub relative_poses: Vec<RelativePose>,
    pub contact_set: BTreeSet<(String, String)>,
    pub timestamp: f64,
}

impl KeyMoment {
    pub fn relative_to(&self, reference: &str) -> Option<&Pose> {
        self.relative_poses.iter().find(|r| r.reference == reference).map(|r| &r.pose)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub timestamp: f64,
    pub frame: usize,
    pub reference: String,
    pub pose: Pose,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaintainContactParams {
    pub key_moments: Vec<KeyMoment>,
    pub dense_track: Vec<TrackSample>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakContactParams {
    pub reference: String,
    pub final_pose: Pose,
    pub manual_override: Option<Pose>,
}

impl BreakContactParams {
    pub fn effective(&self) -> &Pose {
        self.manual_override.as_ref().unwrap_or(&self.final_pose)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrimitiveParams {
    Unlearned,
    Make(MakeContactParams),
    Maintain(MaintainContactParams),
    Break(BreakContactParams),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub kind: PrimitiveKind,
    pub target: String,
    pub span: (usize, usize),
    pub params: PrimitiveParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectModel {
    pub cloud: PointCloud,
    pub collision: CollisionModel,
    pub symmetry_axis: Option<Vector3<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    pub frame_rate: f64,
    pub primitives: Vec<Primitive>,
    pub object_models: BTreeMap<String, ObjectModel>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("'{a}' and '{b}' are both held at frame {frame}")]
    OverlappingContacts { a: String, b: String, frame: usize },
    #[error("no pose for '{object}' at frame {frame}")]
    MissingPoseTrack { object: String, frame: usize },
    #[error("no reference object for '{object}' at frame {frame}")]
    NoReference { object: String, frame: usize },
    #[error("no model for '{0}'")]
    MissingModel(String),
    #[error("no hand cloud near the contact of '{object}' at frame {frame}")]
    MissingHand { object: String, frame: usize },
    #[error("primitive {index} is {found:?}, expected {expected:?}")]
    WrongPrimitiveKind { index: usize, found: PrimitiveKind, expected: PrimitiveKind },
    #[error("primitive index {0} out of range")]
    NoSuchPrimitive(usize),
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error("collision model for '{object}': {source}")]
    Geometry { object: String, source: GeometryError },
}

/// Each maximal hand-contact interval `[s, e]` becomes Make@s, Maintain s..e
/// and Break@e, ordered by frame.
pub fn segment_primitives(hand_timelines: &BTreeMap<String, ContactTimeline>) -> Result<Vec<Primitive>, LearnError> {
    let mut intervals: Vec<(usize, usize, &str)> = hand_timelines
        .iter()
        .flat_map(|(name, tl)| tl.intervals().into_iter().map(move |(s, e)| (s, e, name.as_str())))
        .collect();
    intervals.sort();
    for w in intervals.windows(2) {
        if w[1].0 <= w[0].1 {
            return Err(LearnError::OverlappingContacts { a: w[0].2.to_string(), b: w[1].2.to_string(), frame: w[1].0 });
        }
    }
    let mut out = Vec::with_capacity(intervals.len() * 3);
    for (s, e, name) in intervals {
        for (kind, span) in [
            (PrimitiveKind::MakeContact, (s, s)),
            (PrimitiveKind::MaintainContact, (s, e)),
            (PrimitiveKind::BreakContact, (e, e)),
        ] {
            out.push(Primitive { kind, target: name.to_string(), span, params: PrimitiveParams::Unlearned });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnParams {
    pub d_contact: f64,
    pub cluster_eps: f64,
    pub cluster_min_pts: usize,
    /// Frames searched on either side of MAKE when the hand cloud is missing.
    pub hand_search: usize,
}

impl Default for LearnParams {
    fn default() -> Self {
        LearnParams {
            d_contact: crate::contact_analysis::DEFAULT_D_CONTACT,
            cluster_eps: crate::geometry::DEFAULT_CLUSTER_EPS,
            cluster_min_pts: crate::geometry::DEFAULT_CLUSTER_MIN_PTS,
            hand_search: 3,
        }
    }
}

struct Ctx<'a> {
    demo: &'a Demonstration,
    contacts: &'a DemoContacts,
    tracks: &'a PoseTracks,
}

impl Ctx<'_> {
    fn pose(&self, object: &str, frame: usize) -> Option<&Pose> {
        self.tracks.get(object).and_then(|t| t.get(frame)).and_then(|p| p.as_ref())
    }

    fn require_pose(&self, object: &str, frame: usize) -> Result<&Pose, LearnError> {
        self.pose(object, frame).ok_or_else(|| LearnError::MissingPoseTrack { object: object.to_string(), frame })
    }

    fn present(&self, object: &str, frame: usize) -> bool {
        self.demo.frames[frame].cloud(object).is_some_and(|c| !c.is_empty())
    }

    /// Closest present object, preferring those in contact with `held`.
    fn reference(&self, held: &str, frame: usize) -> Result<String, LearnError> {
        let mut best: Option<(bool, f64, &str)> = None;
        for o in self.demo.objects() {
            if o == held || !self.present(o, frame) || self.pose(o, frame).is_none() {
                continue;
            }
            let Some(series) = self.contacts.pair(held, o) else { continue };
            let Some(d) = series.distances[frame] else { continue };
            let touching = series.timeline.in_contact(frame);
            let better = match best {
                None => true,
                Some((bt, bd, _)) => (touching && !bt) || (touching == bt && d < bd),
            };
            if better {
                best = Some((touching, d, o));
            }
        }
        best.map(|b| b.2.to_string()).ok_or_else(|| LearnError::NoReference { object: held.to_string(), frame })
    }

    fn relative(&self, object: &str, reference: &str, frame: usize) -> Result<Pose, LearnError> {
        let p = self.require_pose(object, frame)?;
        let r = self.require_pose(reference, frame)?;
        Ok(r.relative(p))
    }

    fn presence(&self, frame: usize) -> Vec<bool> {
        self.demo.objects().iter().map(|o| self.present(o, frame)).collect()
    }
}

/// Attaches learned parameters to segmented primitives.
pub fn learn_policy(
    demo: &Demonstration,
    primitives: &[Primitive],
    contacts: &DemoContacts,
    tracks: &PoseTracks,
    params: &LearnParams,
) -> Result<Policy, LearnError> {
    let ctx = Ctx { demo, contacts, tracks };
    let mut out = Vec::with_capacity(primitives.len());
    for prim in primitives {
        let target = prim.target.as_str();
        let params = match prim.kind {
            PrimitiveKind::MakeContact => PrimitiveParams::Make(learn_make(&ctx, target, prim.span.0, params)?),
            PrimitiveKind::MaintainContact => PrimitiveParams::Maintain(learn_maintain(&ctx, target, prim.span)?),
            PrimitiveKind::BreakContact => {
                let frame = prim.span.1;
                let reference = ctx.reference(target, frame)?;
                let final_pose = ctx.relative(target, &reference, frame)?;
                PrimitiveParams::Break(BreakContactParams { reference, final_pose, manual_override: None })
            }
        };
        out.push(Primitive { params, ..prim.clone() });
    }
    let mut object_models = BTreeMap::new();
    for name in demo.objects() {
        let cloud = demo.meta.models.get(name).ok_or_else(|| LearnError::MissingModel(name.clone()))?;
        let collision = build_collision_model(cloud, params.cluster_eps, params.cluster_min_pts)
            .map_err(|source| LearnError::Geometry { object: name.clone(), source })?;
        object_models.insert(
            name.clone(),
            ObjectModel { cloud: cloud.clone(), collision, symmetry_axis: demo.meta.symmetry_axes.get(name).copied() },
        );
    }
    for p in &out {
        if !object_models.contains_key(&p.target) {
            return Err(LearnError::MissingModel(p.target.clone()));
        }
    }
    Ok(Policy { frame_rate: demo.meta.frame_rate, primitives: out, object_models })
}

fn learn_make(ctx: &Ctx, target: &str, frame: usize, params: &LearnParams) -> Result<MakeContactParams, LearnError> {
    let model = ctx.demo.meta.models.get(target).ok_or_else(|| LearnError::MissingModel(target.to_string()))?;
    let n = ctx.demo.len();
    let candidates = (0..=params.hand_search).flat_map(|k| [frame + k, frame.wrapping_sub(k)]).filter(|&f| f < n);
    for f in candidates {
        let (Some(hand), Some(pose)) = (ctx.demo.frames[f].hand.as_ref(), ctx.pose(target, f)) else { continue };
        if hand.is_empty() {
            continue;
        }
        let locations = contact_locations(model, pose, hand, params.d_contact, params.cluster_eps, params.cluster_min_pts)?;
        let hand_c: Point3<f64> = pose.inverse().transform_point(&hand.centroid().expect("non-empty"));
        let approaches = locations
            .iter()
            .map(|l| (l.point - hand_c).try_normalize(1e-12).unwrap_or(-Vector3::z()))
            .collect();
        return Ok(MakeContactParams { locations, approaches, manual_override: None });
    }
    ctx.require_pose(target, frame)?;
    Err(LearnError::MissingHand { object: target.to_string(), frame })
}

fn learn_maintain(ctx: &Ctx, target: &str, (s, e): (usize, usize)) -> Result<MaintainContactParams, LearnError> {
    let dt = 1.0 / ctx.demo.meta.frame_rate;
    let mut frames = vec![s];
    for f in s + 1..=e {
        if ctx.contacts.contact_set(f) != ctx.contacts.contact_set(f - 1) || ctx.presence(f) != ctx.presence(f - 1) {
            frames.push(f);
        }
    }
    if e != s && frames.last() != Some(&e) {
        frames.push(e);
    }
    let mut key_moments = Vec::with_capacity(frames.len());
    for f in frames {
        let reference = ctx.reference(target, f)?;
        let mut relative_poses = Vec::new();
        for o in ctx.demo.objects() {
            if o != target && ctx.present(o, f) && ctx.pose(o, f).is_some() {
                relative_poses.push(RelativePose {
                    object: target.to_string(),
                    reference: o.clone(),
                    pose: ctx.relative(target, o, f)?,
                });
            }
        }
        key_moments.push(KeyMoment {
            frame: f,
            reference,
            relative_poses,
            contact_set: ctx.contacts.contact_set(f),
            timestamp: (f - s) as f64 * dt,
        });
    }
    let mut dense_track = Vec::with_capacity(e - s + 1);
    for f in s..=e {
        let reference = ctx.reference(target, f)?;
        let pose = ctx.relative(target, &reference, f)?;
        dense_track.push(TrackSample { timestamp: (f - s) as f64 * dt, frame: f, reference, pose });
    }
    Ok(MaintainContactParams { key_moments, dense_track })
}

/// Sets the manual place pose of a BreakContact primitive.
pub fn override_place_pose(policy: &Policy, index: usize, pose: Pose) -> Result<Policy, LearnError> {
    let prim = policy.primitives.get(index).ok_or(LearnError::NoSuchPrimitive(index))?;
    let PrimitiveParams::Break(b) = &prim.params else {
        return Err(LearnError::WrongPrimitiveKind {
            index,
            found: prim.kind,
            expected: PrimitiveKind::BreakContact,
        });
    };
    let mut out = policy.clone();
    out.primitives[index].params = PrimitiveParams::Break(BreakContactParams { manual_override: Some(pose), ..b.clone() });
    Ok(out)
}

/// Sets manual grasp locations of a MakeContact primitive.
pub fn override_contact_locations(policy: &Policy, index: usize, locations: Vec<ContactLocation>) -> Result<Policy, LearnError> {
    let prim = policy.primitives.get(index).ok_or(LearnError::NoSuchPrimitive(index))?;
    let PrimitiveParams::Make(m) = &prim.params else {
        return Err(LearnError::WrongPrimitiveKind { index, found: prim.kind, expected: PrimitiveKind::MakeContact });
    };
    let mut out = policy.clone();
    out.primitives[index].params = PrimitiveParams::Make(MakeContactParams { manual_override: Some(locations), ..m.clone() });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn timeline(name: &str, n: usize, on: &[(usize, usize)]) -> (String, ContactTimeline) {
        let states = (0..n).map(|i| on.iter().any(|&(s, e)| s <= i && i <= e)).collect();
        (name.to_string(), ContactTimeline::from_states("hand", name, states))
    }

    fn summary(p: &[Primitive]) -> Vec<(PrimitiveKind, &str, (usize, usize))> {
        p.iter().map(|p| (p.kind, p.target.as_str(), p.span)).collect()
    }

    #[test]
    fn single_hold() {
        let tl: BTreeMap<_, _> = [timeline("bowl", 100, &[(10, 50)])].into();
        let p = segment_primitives(&tl).unwrap();
        use PrimitiveKind::*;
        assert_eq!(summary(&p), vec![(MakeContact, "bowl", (10, 10)), (MaintainContact, "bowl", (10, 50)), (BreakContact, "bowl", (50, 50))]);
    }

    #[test]
    fn no_contact_is_empty() {
        let tl: BTreeMap<_, _> = [timeline("bowl", 100, &[])].into();
        assert!(segment_primitives(&tl).unwrap().is_empty());
    }

    #[test]
    fn two_objects_ordered() {
        let tl: BTreeMap<_, _> = [timeline("faucet", 100, &[(5, 7)]), timeline("bowl", 100, &[(20, 90)])].into();
        let p = segment_primitives(&tl).unwrap();
        assert_eq!(p.len(), 6);
        let targets: Vec<_> = p.iter().map(|p| p.target.as_str()).collect();
        assert_eq!(targets, ["faucet", "faucet", "faucet", "bowl", "bowl", "bowl"]);
    }

    #[test]
    fn short_touch_keeps_three_primitives() {
        let tl: BTreeMap<_, _> = [timeline("cup", 30, &[(12, 12)])].into();
        let p = segment_primitives(&tl).unwrap();
        assert_eq!(p.len(), 3);
        assert!(p.iter().all(|p| p.span == (12, 12)));
    }

    #[test]
    fn simultaneous_holds_rejected() {
        let tl: BTreeMap<_, _> = [timeline("a", 50, &[(5, 20)]), timeline("b", 50, &[(15, 30)])].into();
        assert!(matches!(segment_primitives(&tl), Err(LearnError::OverlappingContacts { .. })));
    }

    #[test]
    fn maintain_spans_cover_contact_frames() {
        let tl: BTreeMap<_, _> = [timeline("a", 80, &[(0, 9), (30, 40)]), timeline("b", 80, &[(50, 79)])].into();
        let p = segment_primitives(&tl).unwrap();
        for (name, t) in &tl {
            let covered: BTreeSet<usize> = p
                .iter()
                .filter(|p| &p.target == name && p.kind == PrimitiveKind::MaintainContact)
                .flat_map(|p| p.span.0..=p.span.1)
                .collect();
            let expected: BTreeSet<usize> = (0..80).filter(|&i| t.states[i]).collect();
            assert_eq!(covered, expected);
        }
    }
}
