mod common;

use std::collections::BTreeSet;

use contact_lfd::contact_analysis::HysteresisParams;
use contact_lfd::execution_sim::{execute_primitive, ExecParams, WorldState};
use contact_lfd::geometry::Pose;
use contact_lfd::motion_planning::KinematicChain;
use contact_lfd::pipeline::{learn_from_demo, PipelineParams};
use contact_lfd::primitive_learning::*;
use contact_lfd::scenario::{generate_demo, HandSpec, ScenarioSpec, ScriptEvent, SCENARIO_VERSION};
use contact_lfd::scenarios::*;
use contact_lfd::shapes::{ObjectSpec, Shape, ShapePart};

use common::{dishwash, placed};

fn maintain(p: &Primitive) -> &MaintainContactParams {
    match &p.params {
        PrimitiveParams::Maintain(m) => m,
        _ => panic!("{:?} is not a maintain primitive", p.kind),
    }
}

#[test]
fn segmentation_recovers_scripted_primitives() {
    let l = dishwash();
    let got = &l.seg.primitives;
    assert_eq!(got.len(), l.truth.primitives.len());
    for (g, t) in got.iter().zip(&l.truth.primitives) {
        assert_eq!((g.kind, g.target.as_str()), (t.kind, t.target.as_str()));
        assert!(g.span.0.abs_diff(t.span.0) <= 2 && g.span.1.abs_diff(t.span.1) <= 2, "{g:?} vs {t:?}");
    }
}

#[test]
fn place_pose_is_bowl_in_sink_at_release() {
    let l = dishwash();
    let (i, prim) = l
        .policy
        .primitives
        .iter()
        .enumerate()
        .find(|(_, p)| p.kind == PrimitiveKind::BreakContact && p.target == BOWL)
        .unwrap();
    let PrimitiveParams::Break(b) = &prim.params else { unreachable!() };
    assert_eq!(b.reference, SINK, "primitive {i}");
    let f = prim.span.1;
    let truth = l.truth.poses[SINK][f].unwrap().relative(&l.truth.poses[BOWL][f].unwrap());
    assert!(truth.translation_distance(&b.final_pose) < 0.003, "{}", truth.translation_distance(&b.final_pose));
    // the bowl is round: only the tilt is meaningful
    let z = nalgebra::Vector3::z();
    let tilt = |p: &Pose| (p.rotation * z).angle(&z);
    assert!((tilt(&truth) - tilt(&b.final_pose)).abs() < 2f64.to_radians());
    assert!((b.final_pose.translation.x - PLACE_AT[0]).abs() < 0.005);
    assert!((b.final_pose.translation.y - PLACE_AT[1]).abs() < 0.005);
}

#[test]
fn rinse_has_a_water_key_moment() {
    let l = dishwash();
    let rinse = l.policy.primitives.iter().find(|p| p.kind == PrimitiveKind::MaintainContact && p.target == BOWL).unwrap();
    let m = maintain(rinse);
    let wet = (BOWL.to_string(), WATER.to_string());
    let first_wet = m.key_moments.iter().position(|k| k.contact_set.contains(&wet)).expect("bowl meets water");
    assert!(first_wet > 0 && !m.key_moments[first_wet - 1].contact_set.contains(&wet));
    let truth_pair = l.truth.object_contacts.iter().find(|p| p.pair == wet).expect("scripted pair");
    let truth_enter = (rinse.span.0..=rinse.span.1).find(|&f| truth_pair.states[f]).unwrap();
    assert!(m.key_moments[first_wet].frame.abs_diff(truth_enter) <= 2);
    let k = &m.key_moments[first_wet];
    assert!(k.relative_to(WATER).is_some());
}

#[test]
fn key_moment_contact_sets_match_truth() {
    let l = dishwash();
    for p in &l.policy.primitives {
        if p.kind != PrimitiveKind::MaintainContact {
            continue;
        }
        let m = maintain(p);
        assert!(m.key_moments.windows(2).all(|w| w[0].frame < w[1].frame));
        assert!(m.dense_track.windows(2).all(|w| w[0].timestamp < w[1].timestamp));
        assert_eq!(m.key_moments.first().unwrap().frame, p.span.0);
        assert_eq!(m.key_moments.last().unwrap().frame, p.span.1);
        for k in &m.key_moments {
            assert_eq!(k.contact_set, l.seg.contacts.contact_set(k.frame));
            // thresholds on noisy clouds may shift a change by a frame
            let lo = k.frame.saturating_sub(1);
            let hi = (k.frame + 1).min(l.demo.len() - 1);
            assert!(
                (lo..=hi).any(|f| l.truth.contact_set(f) == k.contact_set),
                "frame {}: {:?} vs {:?}",
                k.frame,
                k.contact_set,
                l.truth.contact_set(k.frame)
            );
        }
    }
}

#[test]
fn spans_cover_exactly_the_hand_contact_frames() {
    let l = dishwash();
    for (object, series) in &l.seg.contacts.hand {
        let contact: BTreeSet<usize> = (0..l.demo.len()).filter(|&f| series.timeline.in_contact(f)).collect();
        let covered: BTreeSet<usize> =
            l.seg.primitives.iter().filter(|p| &p.target == object).flat_map(|p| p.span.0..=p.span.1).collect();
        assert_eq!(contact, covered, "{object}");
    }
}

fn slide_spec() -> ScenarioSpec {
    let table = Pose::from_translation(0.5, 0.0, 0.0);
    let block = ObjectSpec::new("block", vec![ShapePart::at(Shape::Box { half_extents: [0.03, 0.03, 0.03] }, 0.0, 0.0, 0.0)]);
    let at = |x: f64| table * Pose::from_translation(x, 0.0, 0.03);
    ScenarioSpec {
        version: SCENARIO_VERSION,
        frame_rate: 30.0,
        frames: 60,
        noise_sigma: 0.0005,
        seed: 4,
        objects: vec![placed(table_spec(), table), placed(block, at(-0.1))],
        events: vec![
            ScriptEvent::Touch { object: "block".into(), touch: 12, release: 48, location: [0.0, 0.0, 0.03], approach: [0.0, 0.0, -1.0] },
            ScriptEvent::Move { object: "block".into(), start: 16, end: 44, to: at(0.1) },
        ],
        hand: HandSpec::default(),
        faucet: None,
        contact_threshold: 0.0075,
    }
}

#[test]
fn slide_without_contact_changes_has_two_key_moments() {
    let (demo, truth) = generate_demo(&slide_spec()).unwrap();
    let (seg, _, policy) = learn_from_demo(&demo, &PipelineParams::default()).unwrap();
    let kinds: Vec<_> = seg.primitives.iter().map(|p| p.kind).collect();
    assert_eq!(kinds, [PrimitiveKind::MakeContact, PrimitiveKind::MaintainContact, PrimitiveKind::BreakContact]);
    let m = maintain(&policy.primitives[1]);
    assert_eq!(m.key_moments.len(), 2);
    let pair = ("block".to_string(), TABLE.to_string());
    assert!(m.key_moments.iter().all(|k| k.contact_set == BTreeSet::from([pair.clone()]) && k.reference == TABLE));
    let (s, e) = policy.primitives[1].span;
    assert_eq!(m.dense_track.len(), e - s + 1);
    assert!(truth.object_contacts.iter().all(|p| p.states.iter().all(|&c| c == p.states[0])));
}

#[test]
fn override_requires_a_break_primitive() {
    let l = dishwash();
    let rinse = l.policy.primitives.iter().position(|p| p.kind == PrimitiveKind::MaintainContact && p.target == BOWL).unwrap();
    match override_place_pose(&l.policy, rinse, Pose::identity()) {
        Err(LearnError::WrongPrimitiveKind { index, found, expected }) => {
            assert_eq!((index, found, expected), (rinse, PrimitiveKind::MaintainContact, PrimitiveKind::BreakContact));
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(override_place_pose(&l.policy, 99, Pose::identity()), Err(LearnError::NoSuchPrimitive(99))));
    assert!(matches!(override_contact_locations(&l.policy, rinse, vec![]), Err(LearnError::WrongPrimitiveKind { .. })));
}

#[test]
fn overriding_with_the_learned_pose_changes_nothing() {
    let chain = KinematicChain::franka_like();
    let (scene, policy) = wrist_flip(2).unwrap();
    let PrimitiveParams::Break(b) = &policy.primitives[1].params else { panic!() };
    let same = override_place_pose(&policy, 1, b.final_pose).unwrap();
    let p = ExecParams::default();
    let w = WorldState::from_scene(&scene, &chain).unwrap();
    let (held, r) = execute_primitive(&policy, 0, &w, &chain, &p);
    assert!(r.outcome == contact_lfd::execution_sim::Outcome::Success);
    let a = execute_primitive(&policy, 1, &held, &chain, &p);
    let b = execute_primitive(&same, 1, &held, &chain, &p);
    assert_eq!(a, b);
}

#[test]
fn segmentation_threshold_parameters_matter() {
    // with d_make below the hand's resting gap nothing is ever grasped
    let l = dishwash();
    let tight = HysteresisParams { d_make: 1e-6, d_break: 2e-6 };
    let seg = contact_lfd::pipeline::segment_demo(&l.demo, &tight).unwrap();
    assert!(seg.primitives.len() < l.seg.primitives.len());
}
