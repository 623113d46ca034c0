//! Synthetic posture recordings from a parametric body model.
//!
//! Coordinates: x forward, y to the subject's left, z up, origin on the floor
//! between the feet. Each posture fixes a direction for each forearm-to-wrist
//! reach measured from the shoulder, plus an optional squat that lowers the
//! torso. The left arm only moves in `up` and `left`, and those two place the
//! left wrist at almost the same distance from the belly, so the belly/left
//! wrist range alone separates little more than two groups of postures.
//!
//! | class    | left arm            | right arm            | torso  |
//! |----------|---------------------|----------------------|--------|
//! | standby  | down                | down                 | upright|
//! | up       | overhead            | overhead             | upright|
//! | down     | down                | down                 | squat  |
//! | takeoff  | down                | overhead             | upright|
//! | land     | down                | forward, 45° low     | upright|
//! | left     | sideways, 45° high  | down                 | upright|
//! | right    | down                | sideways             | upright|
//! | forward  | down                | forward              | upright|
//! | backward | down                | backward, 45° low    | upright|

use serde::{Deserialize, Serialize};

use super::{Dataset, PostureClass, SubjectRecord};
use crate::ranging::{canonical_pairs, simulate_range, RangeSample, RangingErrorModel, MAX_NODES};
use crate::rng::{self, tag};
use crate::{Error, Real, Result};

/// Acquisition rate of the all-to-all ranging loop.
pub const SAMPLE_RATE_HZ: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SkeletonParams<T> {
    pub body_height: T,
    pub arm_span: T,
    pub stance_width: T,
    /// Each subject's body is scaled by a factor drawn once from
    /// `1 ± per_subject_scale_jitter`.
    pub per_subject_scale_jitter: T,
    /// Standard deviation of per-frame, per-axis node displacement, meters.
    pub per_frame_pose_jitter: T,
    pub seed: u64,
}

impl<T: Real> Default for SkeletonParams<T> {
    fn default() -> Self {
        Self {
            body_height: T::lit(1.75),
            arm_span: T::lit(1.75),
            stance_width: T::lit(0.3),
            per_subject_scale_jitter: T::lit(0.08),
            per_frame_pose_jitter: T::lit(0.02),
            seed: 0,
        }
    }
}

impl<T: Real> SkeletonParams<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.body_height, self.arm_span, self.stance_width];
        let nonneg = [self.per_subject_scale_jitter, self.per_frame_pose_jitter];
        if positive.iter().any(|v| !(*v > T::zero()) || !v.is_finite())
            || nonneg.iter().any(|v| !(*v >= T::zero()) || !v.is_finite())
        {
            return Err(Error::InvalidArgument(
                "skeleton lengths must be positive and jitters nonnegative".into(),
            ));
        }
        if self.per_subject_scale_jitter >= T::one() {
            return Err(Error::InvalidArgument(
                "per-subject scale jitter must be below 1".into(),
            ));
        }
        Ok(())
    }

    /// Same parameters with all randomness in the body model switched off.
    pub fn rigid(self) -> Self {
        Self {
            per_subject_scale_jitter: T::zero(),
            per_frame_pose_jitter: T::zero(),
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Reach {
    Down,
    Overhead,
    SideHigh,
    Side,
    Forward,
    ForwardLow,
    BackwardLow,
}

impl Reach {
    /// Unit direction for the left arm; the right arm mirrors y.
    fn direction(self) -> [f64; 3] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Reach::Down => [0.0, 0.0, -1.0],
            Reach::Overhead => [0.0, 0.0, 1.0],
            Reach::SideHigh => [0.0, h, h],
            Reach::Side => [0.0, 1.0, 0.0],
            Reach::Forward => [1.0, 0.0, 0.0],
            Reach::ForwardLow => [h, 0.0, -h],
            Reach::BackwardLow => [-h, 0.0, -h],
        }
    }
}

fn layout(c: PostureClass) -> (Reach, Reach, bool) {
    use PostureClass::*;
    match c {
        Standby => (Reach::Down, Reach::Down, false),
        Up => (Reach::Overhead, Reach::Overhead, false),
        Down => (Reach::Down, Reach::Down, true),
        Takeoff => (Reach::Down, Reach::Overhead, false),
        Land => (Reach::Down, Reach::ForwardLow, false),
        Left => (Reach::SideHigh, Reach::Down, false),
        Right => (Reach::Down, Reach::Side, false),
        Forward => (Reach::Down, Reach::Forward, false),
        Backward => (Reach::Down, Reach::BackwardLow, false),
    }
}

// Body proportions relative to height or arm span.
const BELLY_FORWARD: f64 = 0.07;
const BELLY_HEIGHT: f64 = 0.60;
const SHOULDER_HEIGHT: f64 = 0.82;
const SHOULDER_HALF_WIDTH: f64 = 0.12;
const ARM_REACH: f64 = 0.335;
const ANKLE_FORWARD: f64 = 0.03;
const ANKLE_HEIGHT: f64 = 0.045;
const SQUAT_DROP: f64 = 0.22;

/// Node positions (indexed by node id) of posture `c` for a body scaled by
/// `scale`.
pub fn posture_template<T: Real>(
    c: PostureClass,
    params: &SkeletonParams<T>,
    scale: T,
) -> [[T; 3]; MAX_NODES] {
    let h = params.body_height.to_f64_lossy() * scale.to_f64_lossy();
    let span = params.arm_span.to_f64_lossy() * scale.to_f64_lossy();
    let stance = params.stance_width.to_f64_lossy() * scale.to_f64_lossy();
    let (left, right, squat) = layout(c);
    let drop = if squat { SQUAT_DROP * h } else { 0.0 };

    let belly = [BELLY_FORWARD * h, 0.0, BELLY_HEIGHT * h - drop];
    let shoulder_z = SHOULDER_HEIGHT * h - drop;
    let shoulder_y = SHOULDER_HALF_WIDTH * span;
    let reach = ARM_REACH * span;
    let wrist = |side: f64, r: Reach| {
        let d = r.direction();
        [
            reach * d[0],
            side * (shoulder_y + reach * d[1]),
            shoulder_z + reach * d[2],
        ]
    };
    let ankle = |side: f64| [ANKLE_FORWARD * h, side * stance / 2.0, ANKLE_HEIGHT * h];

    [
        belly,
        wrist(1.0, left),
        wrist(-1.0, right),
        ankle(1.0),
        ankle(-1.0),
    ]
    .map(|p| p.map(T::lit))
}

/// Generates `subject_count × 9 × samples_per_posture` samples for subjects
/// `S1..Sn`, posture blocks in class order, timestamps advancing at 15 Hz.
pub fn generate_synthetic<T: Real>(
    subject_count: usize,
    samples_per_posture: usize,
    params: &SkeletonParams<T>,
    error: &RangingErrorModel<T>,
) -> Result<Dataset<T>> {
    if subject_count == 0 || samples_per_posture == 0 {
        return Err(Error::InvalidArgument(
            "subject count and samples per posture must be positive".into(),
        ));
    }
    params.validate()?;
    let pairs = canonical_pairs(MAX_NODES)?;
    let scale_seed = rng::derive_seed(params.seed, tag::SUBJECT_SCALE);
    let jitter_seed = rng::derive_seed(params.seed, tag::POSE_JITTER);
    let jitter = params.per_frame_pose_jitter.to_f64_lossy();
    let per_subject = PostureClass::COUNT * samples_per_posture;

    let mut subjects = Vec::with_capacity(subject_count);
    for si in 0..subject_count {
        let id = format!("S{}", si + 1);
        let mut scale_rng = rng::stream(scale_seed, si as u64);
        let scale = 1.0
            + rng::uniform_symmetric(
                &mut scale_rng,
                params.per_subject_scale_jitter.to_f64_lossy(),
            );
        let mut rec = SubjectRecord::new(id.clone());
        rec.samples.reserve(per_subject);
        for (ci, class) in PostureClass::ALL.into_iter().enumerate() {
            let template = posture_template(class, params, T::lit(scale));
            for k in 0..samples_per_posture {
                let local = ci * samples_per_posture + k;
                let frame = (si * per_subject + local) as u64;
                let mut nodes = template;
                if jitter > 0.0 {
                    let mut j = rng::stream(jitter_seed, frame);
                    for p in nodes.iter_mut() {
                        for v in p.iter_mut() {
                            *v += T::lit(jitter * rng::standard_normal(&mut j));
                        }
                    }
                }
                let distances = pairs
                    .iter()
                    .enumerate()
                    .map(|(pi, pair)| {
                        simulate_range(
                            nodes[pair.a().index()],
                            nodes[pair.b().index()],
                            error,
                            frame * pairs.len() as u64 + pi as u64,
                        )
                    })
                    .collect();
                rec.samples.push(RangeSample {
                    timestamp: local as f64 / SAMPLE_RATE_HZ,
                    distances,
                    subject: id.clone(),
                    label: Some(class),
                });
            }
        }
        subjects.push(rec);
    }
    Dataset::new(MAX_NODES, subjects)
}
