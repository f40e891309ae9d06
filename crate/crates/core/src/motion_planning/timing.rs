use serde::{Deserialize, Serialize};

use super::{JointConfig, JointPath, KinematicChain, PlanningError};

/// Sampling period of parameterized trajectories.
pub const SAMPLE_PERIOD: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedConfig {
    pub time: f64,
    pub q: JointConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointTrajectory {
    pub samples: Vec<TimedConfig>,
}

impl JointTrajectory {
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.time)
    }

    /// Linear interpolation in joint space; clamps outside `[0, duration]`.
    pub fn at(&self, t: f64) -> JointConfig {
        let s = &self.samples;
        if t <= s[0].time {
            return s[0].q.clone();
        }
        if t >= self.duration() {
            return s[s.len() - 1].q.clone();
        }
        let i = s.partition_point(|x| x.time <= t);
        let (a, b) = (&s[i - 1], &s[i]);
        let u = (t - a.time) / (b.time - a.time);
        a.q.iter().zip(&b.q).map(|(x, y)| x + (y - x) * u).collect()
    }

    /// Waypoints only, times dropped.
    pub fn configs(&self) -> impl Iterator<Item = &JointConfig> {
        self.samples.iter().map(|s| &s.q)
    }
}

/// Rest-to-rest profile along `s in [0, 1]`.
#[derive(Clone, Copy, Debug)]
struct Profile {
    v: f64,
    a: f64,
    t_acc: f64,
    t_total: f64,
}

impl Profile {
    fn new(v_max: f64, a_max: f64) -> Self {
        if v_max * v_max / a_max <= 1.0 {
            let t_acc = v_max / a_max;
            Profile { v: v_max, a: a_max, t_acc, t_total: 1.0 / v_max + t_acc }
        } else {
            let t_acc = (1.0 / a_max).sqrt();
            Profile { v: a_max * t_acc, a: a_max, t_acc, t_total: 2.0 * t_acc }
        }
    }

    fn s(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else if t < self.t_acc {
            0.5 * self.a * t * t
        } else if t <= self.t_total - self.t_acc {
            0.5 * self.a * self.t_acc * self.t_acc + self.v * (t - self.t_acc)
        } else if t < self.t_total {
            let r = self.t_total - t;
            1.0 - 0.5 * self.a * r * r
        } else {
            1.0
        }
    }
}

/// Path-parameter velocity and acceleration bounds for a move of `delta`;
/// `None` when nothing moves.
fn scalar_limits(chain: &KinematicChain, delta: &[f64]) -> Option<(f64, f64)> {
    let (mut v, mut a) = (f64::INFINITY, f64::INFINITY);
    for (j, d) in chain.joints.iter().zip(delta) {
        if *d != 0.0 {
            v = v.min(j.vel_limit / d.abs());
            a = a.min(j.acc_limit / d.abs());
        }
    }
    v.is_finite().then_some((v, a))
}

/// Closed-form duration of a rest-to-rest move of `delta` under the chain's limits.
pub fn segment_duration(chain: &KinematicChain, delta: &[f64]) -> f64 {
    scalar_limits(chain, delta).map_or(0.0, |(v, a)| Profile::new(v, a).t_total)
}

/// Synchronized trapezoidal profile per segment, stopping at every
/// waypoint, sampled every millisecond plus the exact end time.
pub fn time_parameterize(path: &JointPath, chain: &KinematicChain) -> Result<JointTrajectory, PlanningError> {
    if path.waypoints.is_empty() {
        return Err(PlanningError::InvalidParameter("path has no waypoints"));
    }
    for w in &path.waypoints {
        chain.check_dims(w)?;
    }
    struct Seg<'a> {
        from: &'a [f64],
        to: &'a [f64],
        start: f64,
        profile: Profile,
    }
    let mut segs = Vec::new();
    let mut t0 = 0.0;
    for w in path.waypoints.windows(2) {
        let delta: Vec<f64> = w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect();
        let Some((v, a)) = scalar_limits(chain, &delta) else { continue };
        let profile = Profile::new(v, a);
        segs.push(Seg { from: &w[0], to: &w[1], start: t0, profile });
        t0 += profile.t_total;
    }
    let total = t0;
    let first = &path.waypoints[0];
    let last = &path.waypoints[path.waypoints.len() - 1];
    if segs.is_empty() || total == 0.0 {
        return Ok(JointTrajectory { samples: vec![TimedConfig { time: 0.0, q: first.clone() }] });
    }
    let eval = |t: f64, k: &mut usize| -> JointConfig {
        while *k + 1 < segs.len() && t >= segs[*k + 1].start {
            *k += 1;
        }
        let seg = &segs[*k];
        let s = seg.profile.s(t - seg.start);
        seg.from.iter().zip(seg.to).map(|(a, b)| a + (b - a) * s).collect()
    };
    let n = (total / SAMPLE_PERIOD).floor() as usize;
    let mut samples = Vec::with_capacity(n + 2);
    let mut k = 0;
    for i in 0..=n {
        let t = i as f64 * SAMPLE_PERIOD;
        if t >= total {
            break;
        }
        samples.push(TimedConfig { time: t, q: eval(t, &mut k) });
    }
    samples.push(TimedConfig { time: total, q: last.clone() });
    Ok(JointTrajectory { samples })
}

/// Stretches `traj` uniformly to `target` seconds; never compresses.
pub fn match_duration(traj: &JointTrajectory, target: f64) -> Result<JointTrajectory, PlanningError> {
    if !(target >= 0.0) {
        return Err(PlanningError::InvalidParameter("target duration must be non-negative"));
    }
    let d = traj.duration();
    if d >= target {
        return Ok(traj.clone());
    }
    if d == 0.0 {
        return Err(PlanningError::DegenerateTrajectory);
    }
    let scale = target / d;
    let mut samples: Vec<TimedConfig> =
        traj.samples.iter().map(|s| TimedConfig { time: s.time * scale, q: s.q.clone() }).collect();
    samples.last_mut().expect("non-empty").time = target;
    Ok(JointTrajectory { samples })
}

/// Commands at `k / rate` for `k = 0..=floor(duration * rate)`.
pub fn resample(traj: &JointTrajectory, rate: f64) -> Result<Vec<TimedConfig>, PlanningError> {
    if !(rate > 0.0) {
        return Err(PlanningError::InvalidParameter("rate must be positive"));
    }
    let d = traj.duration();
    // durations set to a whole number of periods must not lose their last sample to rounding
    let n = (d * rate * (1.0 + 1e-12)).floor() as usize;
    Ok((0..=n)
        .map(|k| {
            let t = (k as f64 / rate).min(d);
            TimedConfig { time: t, q: traj.at(t) }
        })
        .collect())
}
