//! Turns posture predictions into robot velocity commands and integrates
//! simple kinematic models of an aerial and a ground robot.

mod queue;
mod replay;
mod smoother;

pub use queue::FrameQueue;
pub use replay::{read_stream, replay, LogEntry, ReplayConfig, Replayer, RobotLog, StreamFrame};
pub use smoother::{smooth, Smoother, SmootherConfig};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::PostureClass;
use crate::{Error, Real, Result};

/// Altitude reached instantly by a takeoff, meters.
pub const TAKEOFF_ALTITUDE: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RobotKind {
    Aerial,
    Ground,
}

impl RobotKind {
    pub fn name(self) -> &'static str {
        match self {
            RobotKind::Aerial => "aerial",
            RobotKind::Ground => "ground",
        }
    }
}

impl fmt::Display for RobotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RobotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "aerial" | "drone" => Ok(RobotKind::Aerial),
            "ground" | "rover" => Ok(RobotKind::Ground),
            _ => Err(Error::InvalidArgument(format!("unknown robot kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    #[default]
    None,
    Takeoff,
    Land,
}

/// Body-frame velocity (x forward, y left, z up) and yaw rate, or a discrete
/// action with all velocities zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct VelocityCommand<T> {
    pub linear: [T; 3],
    pub yaw_rate: T,
    pub action: Action,
}

impl<T: Real> VelocityCommand<T> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn action(action: Action) -> Self {
        Self {
            action,
            ..Self::default()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.action == Action::None
            && self.yaw_rate == T::zero()
            && self.linear.iter().all(|v| *v == T::zero())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Speeds<T> {
    /// Forward/backward speed, m/s.
    pub v_lin: T,
    /// Yaw rate, rad/s.
    pub v_yaw: T,
    /// Climb/descent speed, m/s.
    pub v_z: T,
}

impl<T: Real> Default for Speeds<T> {
    fn default() -> Self {
        Self {
            v_lin: T::lit(0.2),
            v_yaw: T::lit(0.5),
            v_z: T::lit(0.2),
        }
    }
}

/// Command for one posture. The ground robot treats the vertical and
/// takeoff/land postures as standby.
pub fn map_posture<T: Real>(
    class: PostureClass,
    kind: RobotKind,
    speeds: &Speeds<T>,
) -> VelocityCommand<T> {
    use PostureClass::*;
    let z = T::zero();
    let vel = |linear: [T; 3], yaw_rate: T| VelocityCommand {
        linear,
        yaw_rate,
        action: Action::None,
    };
    match (class, kind) {
        (Standby, _) => VelocityCommand::zero(),
        (Up | Down | Takeoff | Land, RobotKind::Ground) => VelocityCommand::zero(),
        (Up, RobotKind::Aerial) => vel([z, z, speeds.v_z], z),
        (Down, RobotKind::Aerial) => vel([z, z, -speeds.v_z], z),
        (Takeoff, RobotKind::Aerial) => VelocityCommand::action(Action::Takeoff),
        (Land, RobotKind::Aerial) => VelocityCommand::action(Action::Land),
        (Left, _) => vel([z; 3], speeds.v_yaw),
        (Right, _) => vel([z; 3], -speeds.v_yaw),
        (Forward, _) => vel([speeds.v_lin, z, z], z),
        (Backward, _) => vel([-speeds.v_lin, z, z], z),
    }
}

/// World-frame pose. `airborne` is always false for a ground robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RobotState<T> {
    pub kind: RobotKind,
    pub position: [T; 3],
    pub heading: T,
    pub airborne: bool,
}

impl<T: Real> RobotState<T> {
    pub fn new(kind: RobotKind) -> Self {
        Self {
            kind,
            position: [T::zero(); 3],
            heading: T::zero(),
            airborne: false,
        }
    }
}

/// Advances `state` by `dt` seconds under `cmd` (explicit Euler, heading
/// taken at the start of the step).
pub fn integrate_step<T: Real>(
    state: &RobotState<T>,
    cmd: &VelocityCommand<T>,
    dt: T,
) -> Result<RobotState<T>> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time step {dt} must be positive"
        )));
    }
    let mut next = *state;
    match (state.kind, cmd.action) {
        (RobotKind::Aerial, Action::Takeoff) => {
            next.airborne = true;
            next.position[2] = T::lit(TAKEOFF_ALTITUDE);
            return Ok(next);
        }
        (RobotKind::Aerial, Action::Land) => {
            next.airborne = false;
            next.position[2] = T::zero();
            return Ok(next);
        }
        (RobotKind::Ground, Action::Takeoff | Action::Land) => return Ok(next),
        (RobotKind::Aerial, Action::None) if !state.airborne => return Ok(next),
        _ => {}
    }
    let (sin, cos) = state.heading.sin_cos();
    let [vx, vy, vz] = cmd.linear;
    next.position[0] += (cos * vx - sin * vy) * dt;
    next.position[1] += (sin * vx + cos * vy) * dt;
    next.heading += cmd.yaw_rate * dt;
    match state.kind {
        RobotKind::Ground => next.position[2] = T::zero(),
        RobotKind::Aerial => next.position[2] = (next.position[2] + vz * dt).max(T::zero()),
    }
    Ok(next)
}
