use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::dataset::PostureClass;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmootherConfig {
    /// Number of most recent predictions voted over.
    pub window: usize,
}

impl SmootherConfig {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidArgument(
                "smoothing window must be at least 1".into(),
            ));
        }
        Ok(Self { window })
    }
}

impl Default for SmootherConfig {
    fn default() -> Self {
        Self { window: 5 }
    }
}

/// Majority class over the last `cfg.window` entries of `history` (oldest
/// first). When several classes share the top count, `previous` is kept.
pub fn smooth(
    history: &[PostureClass],
    cfg: &SmootherConfig,
    previous: PostureClass,
) -> Result<PostureClass> {
    if history.is_empty() {
        return Err(Error::EmptyInput);
    }
    let recent = &history[history.len().saturating_sub(cfg.window.max(1))..];
    let mut counts = [0usize; PostureClass::COUNT];
    for c in recent {
        counts[c.index()] += 1;
    }
    let top = *counts.iter().max().expect("nine classes");
    let mut leaders = PostureClass::ALL
        .iter()
        .filter(|c| counts[c.index()] == top);
    match (leaders.next(), leaders.next()) {
        (Some(c), None) => Ok(*c),
        _ => Ok(previous),
    }
}

/// Streaming form of [`smooth`] holding its own window and last output.
#[derive(Debug, Clone)]
pub struct Smoother {
    cfg: SmootherConfig,
    history: VecDeque<PostureClass>,
    output: PostureClass,
}

impl Smoother {
    pub fn new(cfg: SmootherConfig) -> Self {
        Self {
            cfg,
            history: VecDeque::with_capacity(cfg.window),
            output: PostureClass::Standby,
        }
    }

    pub fn push(&mut self, class: PostureClass) -> PostureClass {
        if self.history.len() == self.cfg.window.max(1) {
            self.history.pop_front();
        }
        self.history.push_back(class);
        let window: Vec<PostureClass> = self.history.iter().copied().collect();
        self.output = smooth(&window, &self.cfg, self.output).expect("history is non-empty");
        self.output
    }

    pub fn output(&self) -> PostureClass {
        self.output
    }
}
