use std::io::BufRead;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    integrate_step, map_posture, RobotKind, RobotState, Smoother, SmootherConfig, Speeds,
    VelocityCommand,
};
use crate::classifiers::ModelBundle;
use crate::dataset::PostureClass;
use crate::ranging::pair_count;
use crate::{Error, Real, Result};

/// One line of a range stream: `{"t": seconds, "d": [meters, ...]}` with the
/// distances in canonical pair order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct StreamFrame<T> {
    pub t: f64,
    pub d: Vec<T>,
}

impl<T: Real> StreamFrame<T> {
    pub fn parse(line: &str, line_no: usize) -> Result<Self> {
        serde_json::from_str(line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })
    }
}

/// Reads a newline-delimited stream, skipping blank lines.
pub fn read_stream<T: Real, R: BufRead>(reader: R) -> Result<Vec<StreamFrame<T>>> {
    let mut frames = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if !line.trim().is_empty() {
            frames.push(StreamFrame::parse(&line, i + 1)?);
        }
    }
    Ok(frames)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ReplayConfig<T> {
    pub robots: Vec<RobotKind>,
    pub smoother: SmootherConfig,
    pub speeds: Speeds<T>,
}

impl<T: Real> Default for ReplayConfig<T> {
    fn default() -> Self {
        Self {
            robots: vec![RobotKind::Aerial, RobotKind::Ground],
            smoother: SmootherConfig::default(),
            speeds: Speeds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RobotLog<T> {
    pub kind: RobotKind,
    /// Command issued at this frame; it takes effect until the next frame.
    pub command: VelocityCommand<T>,
    /// State at this frame's timestamp.
    pub state: RobotState<T>,
}

/// One session-log line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LogEntry<T> {
    pub t: f64,
    pub raw: PostureClass,
    pub smoothed: PostureClass,
    pub robots: Vec<RobotLog<T>>,
    /// Wall-clock seconds spent scaling and predicting this frame.
    pub latency: f64,
}

impl<T: Real> LogEntry<T> {
    pub fn without_timing(&self) -> Self {
        Self {
            latency: 0.0,
            ..self.clone()
        }
    }

    pub fn to_json_line(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Frame-by-frame pipeline: classify, smooth, map to commands and move the
/// simulated robots. Each command is held until the next frame arrives.
pub struct Replayer<'a, T> {
    bundle: &'a ModelBundle<T>,
    cfg: ReplayConfig<T>,
    smoother: Smoother,
    states: Vec<RobotState<T>>,
    pending: Option<(f64, Vec<VelocityCommand<T>>)>,
}

impl<'a, T: Real> Replayer<'a, T> {
    pub fn new(bundle: &'a ModelBundle<T>, cfg: ReplayConfig<T>) -> Self {
        Self {
            bundle,
            smoother: Smoother::new(cfg.smoother),
            states: cfg.robots.iter().map(|k| RobotState::new(*k)).collect(),
            pending: None,
            cfg,
        }
    }

    pub fn states(&self) -> &[RobotState<T>] {
        &self.states
    }

    pub fn step(&mut self, frame: &StreamFrame<T>) -> Result<LogEntry<T>> {
        let expected = pair_count(self.bundle.node_count);
        if frame.d.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: frame.d.len(),
            });
        }
        if !frame.t.is_finite() {
            return Err(Error::InvalidStream(format!(
                "timestamp {} is not finite",
                frame.t
            )));
        }
        if let Some((t_prev, commands)) = &self.pending {
            if frame.t < *t_prev {
                return Err(Error::InvalidStream(format!(
                    "timestamp {} precedes {}",
                    frame.t, t_prev
                )));
            }
            let dt = frame.t - t_prev;
            if dt > 0.0 {
                for (s, c) in self.states.iter_mut().zip(commands) {
                    *s = integrate_step(s, c, T::lit(dt))?;
                }
            }
        }
        let start = Instant::now();
        let raw = self.bundle.predict_distances(&frame.d)?;
        let latency = start.elapsed().as_secs_f64();
        let smoothed = self.smoother.push(raw);
        let commands: Vec<VelocityCommand<T>> = self
            .cfg
            .robots
            .iter()
            .map(|k| map_posture(smoothed, *k, &self.cfg.speeds))
            .collect();
        let robots = self
            .states
            .iter()
            .zip(&commands)
            .map(|(s, c)| RobotLog {
                kind: s.kind,
                command: *c,
                state: *s,
            })
            .collect();
        self.pending = Some((frame.t, commands));
        Ok(LogEntry {
            t: frame.t,
            raw,
            smoothed,
            robots,
            latency,
        })
    }
}

/// Replays a whole recorded stream.
pub fn replay<T: Real>(
    frames: &[StreamFrame<T>],
    bundle: &ModelBundle<T>,
    cfg: &ReplayConfig<T>,
) -> Result<Vec<LogEntry<T>>> {
    let mut r = Replayer::new(bundle, cfg.clone());
    frames.iter().map(|f| r.step(f)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{KnnModel, Scaler, TrainedModel};
    use crate::commander::Action;
    use crate::dataset::{posture_template, SkeletonParams};
    use crate::matrix::FeatureMatrix;
    use crate::ranging::{canonical_pairs, NodeSet};

    fn template_distances(c: PostureClass) -> Vec<f64> {
        let p: [[f64; 3]; 5] = posture_template(c, &SkeletonParams::default(), 1.0);
        canonical_pairs(5)
            .unwrap()
            .iter()
            .map(|pair| {
                let (a, b) = (p[pair.a().index()], p[pair.b().index()]);
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
            })
            .collect()
    }

    fn template_bundle() -> ModelBundle<f64> {
        let rows: Vec<Vec<f64>> = PostureClass::ALL
            .iter()
            .map(|c| template_distances(*c))
            .collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let model = KnnModel::fit(1, x, PostureClass::ALL.to_vec()).unwrap();
        ModelBundle::new(
            5,
            NodeSet::all(),
            Scaler::identity(10),
            TrainedModel::Knn(model),
        )
        .unwrap()
    }

    fn frames(script: &[(PostureClass, usize)]) -> Vec<StreamFrame<f64>> {
        let mut out = Vec::new();
        for (c, n) in script {
            for _ in 0..*n {
                out.push(StreamFrame {
                    t: out.len() as f64 / 15.0,
                    d: template_distances(*c),
                });
            }
        }
        out
    }

    #[test]
    fn forward_leg_moves_both_robots_one_meter() {
        let bundle = template_bundle();
        // one extra frame so the last forward command is integrated
        let f = frames(&[
            (PostureClass::Takeoff, 1),
            (PostureClass::Forward, 75),
            (PostureClass::Standby, 1),
        ]);
        let log = replay(
            &f,
            &bundle,
            &ReplayConfig {
                smoother: SmootherConfig::new(1).unwrap(),
                ..ReplayConfig::default()
            },
        )
        .unwrap();
        assert_eq!(log.len(), f.len());
        let last = log.last().unwrap();
        assert!((last.robots[0].state.position[0] - 1.0).abs() < 1e-9);
        assert!((last.robots[1].state.position[0] - 1.0).abs() < 1e-9);
        assert!(last.robots[0].state.airborne);
        assert_eq!(log[0].robots[0].command.action, Action::Takeoff);
    }

    #[test]
    fn vertical_postures_never_move_the_ground_robot() {
        let bundle = template_bundle();
        let f = frames(&[
            (PostureClass::Takeoff, 5),
            (PostureClass::Up, 20),
            (PostureClass::Down, 10),
            (PostureClass::Up, 1),
        ]);
        let log = replay(&f, &bundle, &ReplayConfig::default()).unwrap();
        for e in &log {
            let g = e.robots[1].state;
            assert_eq!(g.position, [0.0; 3]);
            assert_eq!(g.heading, 0.0);
            let a = e.robots[0].state;
            assert_eq!((a.position[0], a.position[1], a.heading), (0.0, 0.0, 0.0));
        }
        assert!(log.last().unwrap().robots[0].state.position[2] > 0.8);
    }

    #[test]
    fn stream_errors_and_determinism() {
        let bundle = template_bundle();
        let mut f = frames(&[(PostureClass::Left, 3)]);
        let a = replay(&f, &bundle, &ReplayConfig::default()).unwrap();
        let b = replay(&f, &bundle, &ReplayConfig::default()).unwrap();
        let strip = |l: &[LogEntry<f64>]| {
            l.iter()
                .map(|e| e.without_timing().to_json_line().unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
        assert!(a.iter().all(|e| e.latency >= 0.0));

        f[2].t = 0.0;
        assert!(matches!(
            replay(&f, &bundle, &ReplayConfig::default()),
            Err(Error::InvalidStream(_))
        ));
        let short = vec![StreamFrame {
            t: 0.0,
            d: vec![1.0; 6],
        }];
        assert!(matches!(
            replay(&short, &bundle, &ReplayConfig::default()),
            Err(Error::DimensionMismatch {
                expected: 10,
                found: 6
            })
        ));
    }

    #[test]
    fn parses_stream_lines() {
        let text = "{\"t\":0.0,\"d\":[1,2,3]}\n\n{\"t\":0.1,\"d\":[1,2,3]}\n";
        let f: Vec<StreamFrame<f64>> = read_stream(text.as_bytes()).unwrap();
        assert_eq!(f.len(), 2);
        assert!(matches!(
            read_stream::<f64, _>("{\"t\":0}\n{oops".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
