//! Contact timelines from per-frame cloud distances.
//!
//! Contact engages when the distance drops below `d_make` and releases only
//! once it rises above `d_break`. The automaton is run forwards and over the
//! reversed series; when the two disagree the result with fewer transitions
//! wins, and ties keep the forward pass.

use serde::{Deserialize, Serialize};

use std::collections::{BTreeMap, BTreeSet};

use crate::demonstration::{Demonstration, HAND};
use crate::geometry::kdtree::KdTree;
use crate::geometry::{cluster, min_distance, PointCloud, Pose};
use nalgebra::{Point3, Vector3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HysteresisParams {
    pub d_make: f64,
    pub d_break: f64,
}

impl Default for HysteresisParams {
    fn default() -> Self {
        HysteresisParams { d_make: 0.005, d_break: 0.010 }
    }
}

impl HysteresisParams {
    pub fn new(d_make: f64, d_break: f64) -> Result<Self, ContactError> {
        let p = HysteresisParams { d_make, d_break };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ContactError> {
        if self.d_make > 0.0 && self.d_break > self.d_make {
            Ok(())
        } else {
            Err(ContactError::InvalidThresholds { d_make: self.d_make, d_break: self.d_break })
        }
    }
}

/// Default radius for selecting model points touched by the hand.
pub const DEFAULT_D_CONTACT: f64 = 0.010;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ContactError {
    #[error("unknown object '{0}'")]
    UnknownObject(String),
    #[error("thresholds must satisfy d_break > d_make > 0 (got {d_make}, {d_break})")]
    InvalidThresholds { d_make: f64, d_break: f64 },
    #[error("no object points within contact distance of the hand")]
    NoContactPoints,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Make,
    Break,
}

/// State change at `frame`: the first frame carrying the new state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContactEvent {
    pub frame: usize,
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactTimeline {
    pub pair: (String, String),
    pub states: Vec<bool>,
    pub events: Vec<ContactEvent>,
}

impl ContactTimeline {
    pub fn from_states(a: &str, b: &str, states: Vec<bool>) -> Self {
        let events = states
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0] != w[1])
            .map(|(i, w)| ContactEvent { frame: i + 1, kind: if w[1] { EventKind::Make } else { EventKind::Break } })
            .collect();
        ContactTimeline { pair: (a.to_string(), b.to_string()), states, events }
    }

    pub fn in_contact(&self, frame: usize) -> bool {
        self.states.get(frame).copied().unwrap_or(false)
    }

    /// Maximal runs of in-contact frames as inclusive `(start, end)`.
    pub fn intervals(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, &s) in self.states.iter().enumerate() {
            match (s, start) {
                (true, None) => start = Some(i),
                (false, Some(s0)) => {
                    out.push((s0, i - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s0) = start {
            out.push((s0, self.states.len() - 1));
        }
        out
    }
}

pub fn transitions(states: &[bool]) -> usize {
    states.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Per-frame minimum distance between two objects' clouds; `None` where
/// either is absent.
pub fn distance_series(demo: &Demonstration, a: &str, b: &str) -> Result<Vec<Option<f64>>, ContactError> {
    for name in [a, b] {
        if !demo.has_object(name) {
            return Err(ContactError::UnknownObject(name.to_string()));
        }
    }
    Ok(demo
        .frames
        .iter()
        .map(|f| match (f.cloud(a), f.cloud(b)) {
            (Some(ca), Some(cb)) if !ca.is_empty() && !cb.is_empty() => min_distance(ca, cb).ok(),
            _ => None,
        })
        .collect())
}

/// Two-threshold automaton. Absent samples hold the current state.
pub fn hysteresis_forward(d: &[Option<f64>], p: &HysteresisParams, initial: bool) -> Vec<bool> {
    let mut state = initial;
    d.iter()
        .map(|sample| {
            if let Some(v) = sample {
                if state {
                    if *v > p.d_break {
                        state = false;
                    }
                } else if *v < p.d_make {
                    state = true;
                }
            }
            state
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BidirectionalOutcome {
    pub forward: Vec<bool>,
    /// Reverse pass, already re-reversed into frame order.
    pub reverse: Vec<bool>,
    pub chosen: Vec<bool>,
}

pub fn bidirectional_detail(d: &[Option<f64>], p: &HysteresisParams) -> BidirectionalOutcome {
    let first = d.iter().flatten().next();
    let last = d.iter().rev().flatten().next();
    let forward = hysteresis_forward(d, p, first.is_some_and(|v| *v < p.d_make));
    let reversed: Vec<Option<f64>> = d.iter().rev().copied().collect();
    let mut reverse = hysteresis_forward(&reversed, p, last.is_some_and(|v| *v < p.d_make));
    reverse.reverse();
    let chosen = if forward != reverse && transitions(&reverse) < transitions(&forward) {
        reverse.clone()
    } else {
        forward.clone()
    };
    BidirectionalOutcome { forward, reverse, chosen }
}

pub fn bidirectional_contacts(d: &[Option<f64>], p: &HysteresisParams) -> Vec<bool> {
    bidirectional_detail(d, p).chosen
}

/// Distance series and bidirectional timeline for one object pair.
pub fn contact_timeline(
    demo: &Demonstration,
    a: &str,
    b: &str,
    p: &HysteresisParams,
) -> Result<(Vec<Option<f64>>, ContactTimeline), ContactError> {
    p.validate()?;
    let d = distance_series(demo, a, b)?;
    let states = bidirectional_contacts(&d, p);
    Ok((d, ContactTimeline::from_states(a, b, states)))
}

/// Distances and timeline for one pair, names ordered as given.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSeries {
    pub distances: Vec<Option<f64>>,
    pub timeline: ContactTimeline,
}

/// Hand-object timelines keyed by object, plus every object-object pair
/// with names in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct DemoContacts {
    pub hand: BTreeMap<String, PairSeries>,
    pub objects: Vec<PairSeries>,
}

impl DemoContacts {
    pub fn pair(&self, a: &str, b: &str) -> Option<&PairSeries> {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.objects.iter().find(|s| s.timeline.pair.0 == a && s.timeline.pair.1 == b)
    }

    pub fn hand_timelines(&self) -> BTreeMap<String, ContactTimeline> {
        self.hand.iter().map(|(k, v)| (k.clone(), v.timeline.clone())).collect()
    }

    /// Object-object pairs in contact at `frame`; a pair with an absent
    /// member is never in the set, whatever state its timeline holds.
    pub fn contact_set(&self, frame: usize) -> BTreeSet<(String, String)> {
        self.objects
            .iter()
            .filter(|s| s.timeline.in_contact(frame) && s.distances.get(frame).is_some_and(|d| d.is_some()))
            .map(|s| s.timeline.pair.clone())
            .collect()
    }
}

pub fn analyze_demo(demo: &Demonstration, p: &HysteresisParams) -> Result<DemoContacts, ContactError> {
    let mut names: Vec<&String> = demo.objects().iter().collect();
    names.sort();
    let series = |a: &str, b: &str| -> Result<PairSeries, ContactError> {
        let (distances, timeline) = contact_timeline(demo, a, b, p)?;
        Ok(PairSeries { distances, timeline })
    };
    let mut hand = BTreeMap::new();
    for n in &names {
        hand.insert(n.to_string(), series(HAND, n)?);
    }
    let mut objects = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            objects.push(series(a, b)?);
        }
    }
    Ok(DemoContacts { hand, objects })
}

/// Where the hand touches an object, in the object's model frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactLocation {
    pub point: Point3<f64>,
    pub support: usize,
}

/// Clusters the model points that lie within `d_contact` of the hand at
/// `object_pose`; each cluster centroid is one location, largest first.
pub fn contact_locations(
    object_model: &PointCloud,
    object_pose: &Pose,
    hand_cloud: &PointCloud,
    d_contact: f64,
    eps: f64,
    min_pts: usize,
) -> Result<Vec<ContactLocation>, ContactError> {
    if hand_cloud.is_empty() {
        return Err(ContactError::NoContactPoints);
    }
    let hand = KdTree::new(&hand_cloud.points);
    let r2 = d_contact * d_contact;
    let selected: Vec<Point3<f64>> = object_model
        .points
        .iter()
        .filter(|p| hand.nearest(&object_pose.transform_point(p)).is_some_and(|(_, d2)| d2 <= r2))
        .copied()
        .collect();
    if selected.is_empty() {
        return Err(ContactError::NoContactPoints);
    }
    let mut groups = cluster(&selected, eps, min_pts).clusters;
    if groups.is_empty() {
        groups.push((0..selected.len()).collect());
    }
    let mut out: Vec<ContactLocation> = groups
        .iter()
        .map(|g| {
            let sum: Vector3<f64> = g.iter().map(|&i| selected[i].coords).sum();
            ContactLocation { point: Point3::from(sum / g.len() as f64), support: g.len() }
        })
        .collect();
    out.sort_by(|a, b| {
        b.support.cmp(&a.support).then_with(|| {
            a.point.x.total_cmp(&b.point.x).then(a.point.y.total_cmp(&b.point.y)).then(a.point.z.total_cmp(&b.point.z))
        })
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demonstration::{DemoMeta, Frame};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn mm(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().map(|x| Some(x / 1000.0)).collect()
    }

    #[test]
    fn forward_hand_evaluated() {
        let p = HysteresisParams::default();
        let got = hysteresis_forward(&mm(&[12.0, 6.0, 4.0, 7.0, 11.0]), &p, false);
        assert_eq!(got, vec![false, false, true, true, false]);
        assert_eq!(hysteresis_forward(&mm(&[20.0, 30.0, 11.0]), &p, false), vec![false; 3]);
        assert_eq!(hysteresis_forward(&mm(&[7.0; 6]), &p, true), vec![true; 6]);
        assert_eq!(hysteresis_forward(&mm(&[7.0; 6]), &p, false), vec![false; 6]);
    }

    #[test]
    fn absent_frames_hold_state() {
        let p = HysteresisParams::default();
        let d = vec![Some(0.001), None, None, Some(0.02), None];
        assert_eq!(hysteresis_forward(&d, &p, false), vec![true, true, true, false, false]);
    }

    #[test]
    fn monotone_descent_single_make() {
        let p = HysteresisParams::default();
        let d = mm(&[30.0, 20.0, 12.0, 4.0, 2.0, 1.0]);
        let out = bidirectional_detail(&d, &p);
        assert_eq!(out.forward, out.reverse);
        let tl = ContactTimeline::from_states("hand", "bowl", out.chosen);
        assert_eq!(tl.events, vec![ContactEvent { frame: 3, kind: EventKind::Make }]);
    }

    #[test]
    fn monotone_descent_through_dead_band_keeps_forward() {
        let p = HysteresisParams::default();
        let d = mm(&[30.0, 20.0, 12.0, 9.0, 6.0, 4.0, 2.0, 1.0]);
        let out = bidirectional_detail(&d, &p);
        // reverse pass releases at 12 mm; equal change counts keep forward
        assert_eq!(transitions(&out.reverse), 1);
        assert_eq!(out.chosen, out.forward);
        let tl = ContactTimeline::from_states("hand", "bowl", out.chosen);
        assert_eq!(tl.events, vec![ContactEvent { frame: 5, kind: EventKind::Make }]);
    }

    #[test]
    fn dead_band_oscillation_prefers_fewer_changes() {
        let p = HysteresisParams::default();
        // forward: contact from frame 1, then out at 4, then the dead band keeps it out
        // reverse: starts in contact at the tail, so the dead band keeps it in
        let d = mm(&[20.0, 3.0, 7.0, 11.0, 7.0, 9.0, 6.0, 8.0, 4.0]);
        let out = bidirectional_detail(&d, &p);
        assert_ne!(out.forward, out.reverse);
        let (tf, tr) = (transitions(&out.forward), transitions(&out.reverse));
        assert_eq!(transitions(&out.chosen), tf.min(tr));
    }

    #[test]
    fn single_frame_below_make() {
        assert_eq!(bidirectional_contacts(&mm(&[1.0]), &HysteresisParams::default()), vec![true]);
    }

    #[test]
    fn invalid_thresholds() {
        assert!(HysteresisParams::new(0.01, 0.005).is_err());
        assert!(HysteresisParams::new(0.0, 0.005).is_err());
    }

    fn demo_with(frames: Vec<Frame>) -> Demonstration {
        Demonstration {
            meta: DemoMeta {
                frame_rate: 30.0,
                objects: vec!["bowl".into(), "sink".into()],
                models: BTreeMap::new(),
                symmetry_axes: BTreeMap::new(),
            },
            frames,
        }
    }

    #[test]
    fn distance_series_marks_absent() {
        let c = |z: f64| PointCloud::new("x", vec![Point3::new(0.0, 0.0, z)]);
        let mut frames = Vec::new();
        for i in 0..4 {
            let mut clouds = BTreeMap::new();
            clouds.insert("sink".to_string(), c(0.0));
            if i != 2 {
                clouds.insert("bowl".to_string(), c(0.001 * i as f64));
            }
            frames.push(Frame { index: i, clouds, hand: Some(c(0.5)) });
        }
        let demo = demo_with(frames);
        let d = distance_series(&demo, "bowl", "sink").unwrap();
        assert_eq!(d, vec![Some(0.0), Some(0.001), None, Some(0.003)]);
        assert_eq!(distance_series(&demo, "hand", "sink").unwrap()[0], Some(0.5));
        assert!(matches!(distance_series(&demo, "cup", "sink"), Err(ContactError::UnknownObject(_))));
    }

    fn ring_model() -> PointCloud {
        // cup wall: cylinder of radius 4 cm, height 8 cm
        let mut pts = Vec::new();
        for i in 0..72 {
            let a = i as f64 * 5f64.to_radians();
            for k in 0..16 {
                pts.push(Point3::new(0.04 * a.cos(), 0.04 * a.sin(), k as f64 * 0.005));
            }
        }
        PointCloud::new("cup", pts)
    }

    fn fingertip(center: Point3<f64>) -> Vec<Point3<f64>> {
        let mut pts = Vec::new();
        for i in -2..=2 {
            for j in -2..=2 {
                for k in -2..=2 {
                    pts.push(center + Vector3::new(i as f64, j as f64, k as f64) * 0.002);
                }
            }
        }
        pts
    }

    #[test]
    fn pinch_gives_two_antipodal_locations() {
        let model = ring_model();
        let pose = Pose::from_xyz_rpy([0.3, 0.1, 0.0], [0.0, 0.0, 0.4]);
        let mut hand = fingertip(pose.transform_point(&Point3::new(0.046, 0.0, 0.06)));
        hand.extend(fingertip(pose.transform_point(&Point3::new(-0.046, 0.0, 0.06))));
        let locs = contact_locations(&model, &pose, &PointCloud::new("hand", hand), 0.01, 0.01, 3).unwrap();
        assert_eq!(locs.len(), 2);
        let mid = (locs[0].point.coords + locs[1].point.coords) / 2.0;
        assert!(mid.xy().norm() < 0.005, "antipodal about the axis");
        assert!((locs[0].point.z - 0.06).abs() < 0.005);
    }

    #[test]
    fn one_sided_touch_and_far_hand() {
        let model = ring_model();
        let hand = PointCloud::new("hand", fingertip(Point3::new(0.0, 0.046, 0.075)));
        let locs = contact_locations(&model, &Pose::identity(), &hand, 0.01, 0.01, 3).unwrap();
        assert_eq!(locs.len(), 1);
        assert!((locs[0].point - Point3::new(0.0, 0.04, 0.075)).norm() < 0.01);
        let far = PointCloud::new("hand", fingertip(Point3::new(0.5, 0.0, 0.0)));
        assert_eq!(
            contact_locations(&model, &Pose::identity(), &far, 0.01, 0.01, 3),
            Err(ContactError::NoContactPoints)
        );
    }

    #[test]
    fn locations_invariant_to_joint_rigid_motion() {
        let model = ring_model();
        let pose = Pose::from_translation(0.2, 0.0, 0.0);
        let hand = PointCloud::new("hand", fingertip(pose.transform_point(&Point3::new(0.046, 0.0, 0.03))));
        let a = contact_locations(&model, &pose, &hand, 0.01, 0.01, 3).unwrap();
        let g = Pose::from_xyz_rpy([1.0, -2.0, 0.5], [0.2, 0.4, -1.0]);
        let b = contact_locations(&model, &(g * pose), &hand.transformed(&g), 0.01, 0.01, 3).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x.point - y.point).norm() < 1e-9);
        }
    }

    /// Independent automaton used as the oracle.
    fn replay(d: &[Option<f64>], make: f64, brk: f64, init: bool) -> Vec<bool> {
        let mut out = Vec::new();
        let mut s = init;
        for x in d {
            s = match (s, x) {
                (_, None) => s,
                (false, Some(v)) => *v < make,
                (true, Some(v)) => *v <= brk,
            };
            out.push(s);
        }
        out
    }

    proptest! {
        #[test]
        fn forward_matches_replay(d in prop::collection::vec(prop::option::weighted(0.9, 0.0..0.02f64), 0..50), init: bool) {
            let p = HysteresisParams::default();
            prop_assert_eq!(hysteresis_forward(&d, &p, init), replay(&d, p.d_make, p.d_break, init));
        }

        #[test]
        fn reversal_symmetry_when_passes_agree(d in prop::collection::vec(0.0..0.02f64, 1..50)) {
            let p = HysteresisParams::default();
            let d: Vec<Option<f64>> = d.into_iter().map(Some).collect();
            let out = bidirectional_detail(&d, &p);
            if out.forward == out.reverse {
                let rev: Vec<_> = d.iter().rev().copied().collect();
                let mut back = bidirectional_contacts(&rev, &p);
                back.reverse();
                prop_assert_eq!(back, out.chosen);
            }
        }

        #[test]
        fn events_are_state_transitions(states in prop::collection::vec(any::<bool>(), 0..40)) {
            let tl = ContactTimeline::from_states("a", "b", states.clone());
            prop_assert_eq!(tl.events.len(), transitions(&states));
            for e in &tl.events {
                prop_assert_eq!(states[e.frame], e.kind == EventKind::Make);
                prop_assert_ne!(states[e.frame - 1], states[e.frame]);
            }
            for w in tl.events.windows(2) {
                prop_assert_ne!(w[0].kind, w[1].kind);
            }
        }
    }
}
