mod common;

use contact_lfd::contact_analysis::*;
use contact_lfd::primitive_learning::{PrimitiveKind, PrimitiveParams};
use contact_lfd::scenarios::{grip_of, bowl_spec, BOWL, SINK};
use proptest::prelude::*;

use common::dishwash;

fn bowl_span() -> (usize, usize) {
    let l = dishwash();
    let make = l.truth.primitives.iter().find(|p| p.target == BOWL && p.kind == PrimitiveKind::MakeContact).unwrap();
    let brk = l.truth.primitives.iter().find(|p| p.target == BOWL && p.kind == PrimitiveKind::BreakContact).unwrap();
    (make.span.0, brk.span.1)
}

#[test]
fn resting_bowl_is_close_to_the_sink() {
    let l = dishwash();
    let d = distance_series(&l.demo, BOWL, SINK).unwrap();
    let h = HysteresisParams::default();
    let (grab, _) = bowl_span();
    // untouched until the grab: resting on the sink floor
    for (f, v) in d[..grab].iter().enumerate() {
        let v = v.expect("bowl and sink always visible");
        assert!(v < h.d_make, "frame {f}: {v}");
    }
    let last = d.last().unwrap().unwrap();
    assert!(last < h.d_make, "put back down: {last}");
}

#[test]
fn hand_distance_falls_then_rises() {
    let l = dishwash();
    let d: Vec<f64> = distance_series(&l.demo, "hand", BOWL).unwrap().into_iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
    let (grab, release) = bowl_span();
    let h = HysteresisParams::default();
    assert!(d[..grab.saturating_sub(8)].iter().all(|&v| v > h.d_break));
    assert!(d[grab..=release].iter().all(|&v| v < h.d_break));
    assert!(d[release + 8..].iter().all(|&v| v > h.d_break));
    // straight final approach and retreat, a few mm of noise allowed
    let approach = &d[grab - 6..=grab];
    assert!(approach.windows(2).all(|w| w[1] <= w[0] + 0.002), "{approach:?}");
    let retreat = &d[release..=release + 6];
    assert!(retreat.windows(2).all(|w| w[1] + 0.002 >= w[0]), "{retreat:?}");
}

#[test]
fn unknown_objects_are_rejected() {
    let l = dishwash();
    assert_eq!(distance_series(&l.demo, BOWL, "spoon"), Err(ContactError::UnknownObject("spoon".into())));
}

#[test]
fn learned_bowl_grasp_is_on_the_rim() {
    let l = dishwash();
    let make = l.policy.primitives.iter().find(|p| p.target == BOWL && p.kind == PrimitiveKind::MakeContact).unwrap();
    let PrimitiveParams::Make(m) = &make.params else { unreachable!() };
    let (loc, _) = grip_of(&bowl_spec(1.0));
    let best = &m.locations[0];
    let err = (best.point - nalgebra::Point3::from(loc)).norm();
    assert!(err < 0.015, "rim location off by {err}");
}

#[test]
fn analyzed_hand_timelines_agree_with_truth() {
    let l = dishwash();
    for (object, series) in &l.seg.contacts.hand {
        let truth = &l.truth.hand_contacts[object];
        let wrong = (0..truth.len()).filter(|&f| series.timeline.in_contact(f) != truth[f]).count();
        assert!(wrong <= 4, "{object}: {wrong} frames differ");
    }
}

fn series() -> impl Strategy<Value = Vec<Option<f64>>> {
    prop::collection::vec(prop_oneof![9 => (0.0..0.02f64).prop_map(Some), 1 => Just(None)], 1..50)
}

fn reversed<T: Clone>(v: &[T]) -> Vec<T> {
    v.iter().rev().cloned().collect()
}

proptest! {
    #[test]
    fn reversal_symmetry_when_passes_agree(d in series()) {
        let p = HysteresisParams::default();
        let detail = bidirectional_detail(&d, &p);
        if detail.forward == detail.reverse {
            prop_assert_eq!(reversed(&bidirectional_contacts(&d, &p)), bidirectional_contacts(&reversed(&d), &p));
        }
    }

    #[test]
    fn chosen_pass_has_the_fewest_changes(d in series()) {
        let p = HysteresisParams::default();
        let o = bidirectional_detail(&d, &p);
        let (f, r, c) = (transitions(&o.forward), transitions(&o.reverse), transitions(&o.chosen));
        if o.forward == o.reverse {
            prop_assert_eq!(&o.chosen, &o.forward);
        } else if f == r {
            prop_assert_eq!(&o.chosen, &o.forward);
        } else {
            prop_assert_eq!(c, f.min(r));
        }
    }

    #[test]
    fn dead_band_never_switches(v in 0.0051..0.0099f64, n in 1usize..40, initial: bool) {
        let d = vec![Some(v); n];
        prop_assert!(hysteresis_forward(&d, &HysteresisParams::default(), initial).iter().all(|&s| s == initial));
    }
}
