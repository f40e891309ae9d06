//! Demonstration to policy in one call: tracking, contact analysis,
//! segmentation and parameter learning.

use crate::contact_analysis::{analyze_demo, ContactError, DemoContacts, HysteresisParams};
use crate::demonstration::Demonstration;
use crate::pose_estimation::{track_poses, IcpParams, PoseError};
use crate::primitive_learning::{learn_policy, pose_track, segment_primitives, LearnError, LearnParams, Policy, PoseTracks, Primitive};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PipelineParams {
    pub hysteresis: HysteresisParams,
    pub icp: IcpParams,
    pub learn: LearnParams,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("pose tracking of '{object}': {source}")]
    Pose { object: String, source: PoseError },
    #[error("no model cloud for '{0}'")]
    MissingModel(String),
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

/// ICP-tracked poses of every object against its model.
pub fn track_all(demo: &Demonstration, icp: &IcpParams) -> Result<PoseTracks, PipelineError> {
    let mut out = PoseTracks::new();
    for name in demo.objects() {
        let model = demo.meta.models.get(name).ok_or_else(|| PipelineError::MissingModel(name.clone()))?;
        let tracked = match track_poses(model, &demo.frames, name, icp) {
            Ok(t) => t,
            Err(PoseError::NeverObserved(_)) => vec![crate::pose_estimation::TrackedPose::Missing; demo.len()],
            Err(source) => return Err(PipelineError::Pose { object: name.clone(), source }),
        };
        out.insert(name.clone(), pose_track(&tracked));
    }
    Ok(out)
}

pub struct Segmentation {
    pub contacts: DemoContacts,
    pub primitives: Vec<Primitive>,
}

pub fn segment_demo(demo: &Demonstration, p: &HysteresisParams) -> Result<Segmentation, PipelineError> {
    let contacts = analyze_demo(demo, p)?;
    let primitives = segment_primitives(&contacts.hand_timelines())?;
    Ok(Segmentation { contacts, primitives })
}

pub fn learn_from_demo(demo: &Demonstration, p: &PipelineParams) -> Result<(Segmentation, PoseTracks, Policy), PipelineError> {
    let seg = segment_demo(demo, &p.hysteresis)?;
    let tracks = track_all(demo, &p.icp)?;
    let policy = learn_policy(demo, &seg.primitives, &seg.contacts, &tracks, &p.learn)?;
    Ok((seg, tracks, policy))
}
