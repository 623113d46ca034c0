//! Labelled posture recordings grouped by subject.

mod csv_io;
mod skeleton;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use csv_io::{load_csv, read_csv, save_csv, write_csv};
pub use skeleton::{generate_synthetic, posture_template, SkeletonParams};

use crate::matrix::FeatureMatrix;
use crate::ranging::{pair_count, FeatureProjection, NodeSet, RangeSample, MAX_NODES};
use crate::{Error, Real, Result};

/// Nine-way posture label. The discriminant is the class index used in files
/// and confusion matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum PostureClass {
    Standby = 0,
    Up = 1,
    Down = 2,
    Takeoff = 3,
    Land = 4,
    Left = 5,
    Right = 6,
    Forward = 7,
    Backward = 8,
}

impl PostureClass {
    pub const COUNT: usize = 9;

    pub const ALL: [PostureClass; Self::COUNT] = [
        PostureClass::Standby,
        PostureClass::Up,
        PostureClass::Down,
        PostureClass::Takeoff,
        PostureClass::Land,
        PostureClass::Left,
        PostureClass::Right,
        PostureClass::Forward,
        PostureClass::Backward,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or(Error::InvalidLabel(i as i64))
    }

    pub fn name(self) -> &'static str {
        match self {
            PostureClass::Standby => "standby",
            PostureClass::Up => "up",
            PostureClass::Down => "down",
            PostureClass::Takeoff => "takeoff",
            PostureClass::Land => "land",
            PostureClass::Left => "left",
            PostureClass::Right => "right",
            PostureClass::Forward => "forward",
            PostureClass::Backward => "backward",
        }
    }
}

impl From<PostureClass> for u8 {
    fn from(c: PostureClass) -> u8 {
        c as u8
    }
}

impl TryFrom<u8> for PostureClass {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        Self::from_index(v as usize)
    }
}

impl fmt::Display for PostureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PostureClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(i) = s.parse::<i64>() {
            return usize::try_from(i)
                .map_err(|_| Error::InvalidLabel(i))
                .and_then(Self::from_index);
        }
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown posture `{s}`")))
    }
}

/// All labelled samples of one subject, in recording order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SubjectRecord<T> {
    pub subject_id: String,
    pub samples: Vec<RangeSample<T>>,
}

impl<T: Real> SubjectRecord<T> {
    pub fn new(subject_id: impl Into<String>) -> Self {
        Self {
            subject_id: subject_id.into(),
            samples: Vec::new(),
        }
    }

    fn validate(&self, node_count: usize) -> Result<()> {
        for s in &self.samples {
            if s.subject != self.subject_id {
                return Err(Error::InvalidArgument(format!(
                    "sample of subject `{}` filed under `{}`",
                    s.subject, self.subject_id
                )));
            }
            if s.label.is_none() {
                return Err(Error::InvalidArgument(format!(
                    "unlabelled sample in subject `{}`",
                    self.subject_id
                )));
            }
            s.validate(node_count)?;
        }
        Ok(())
    }
}

/// Labelled samples of one or more subjects sharing a node count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Dataset<T> {
    node_count: usize,
    subjects: Vec<SubjectRecord<T>>,
}

/// Feature rows and labels of one subject after node projection.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectFeatures<T> {
    pub subject_id: String,
    pub x: FeatureMatrix<T>,
    pub y: Vec<PostureClass>,
    /// Dataset-wide index of this subject's first sample; noise streams are
    /// addressed by `offset + row`.
    pub offset: u64,
}

impl<T: Real> Dataset<T> {
    pub fn empty(node_count: usize) -> Result<Self> {
        if !(2..=MAX_NODES).contains(&node_count) {
            return Err(Error::InvalidNodeCount(node_count));
        }
        Ok(Self {
            node_count,
            subjects: Vec::new(),
        })
    }

    pub fn new(node_count: usize, subjects: Vec<SubjectRecord<T>>) -> Result<Self> {
        let mut d = Self::empty(node_count)?;
        for s in &subjects {
            if d.subject(&s.subject_id).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate subject `{}`",
                    s.subject_id
                )));
            }
            s.validate(node_count)?;
            d.subjects.push(SubjectRecord::new(s.subject_id.clone()));
        }
        d.subjects = subjects;
        Ok(d)
    }

    /// Appends a labelled sample, creating its subject record on first use.
    pub fn push(&mut self, sample: RangeSample<T>) -> Result<()> {
        if sample.label.is_none() {
            return Err(Error::InvalidArgument(
                "dataset samples must be labelled".into(),
            ));
        }
        sample.validate(self.node_count)?;
        match self
            .subjects
            .iter_mut()
            .find(|s| s.subject_id == sample.subject)
        {
            Some(rec) => rec.samples.push(sample),
            None => {
                let mut rec = SubjectRecord::new(sample.subject.clone());
                rec.samples.push(sample);
                self.subjects.push(rec);
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn feature_dim(&self) -> usize {
        pair_count(self.node_count)
    }

    pub fn subjects(&self) -> &[SubjectRecord<T>] {
        &self.subjects
    }

    pub fn subject(&self, id: &str) -> Option<&SubjectRecord<T>> {
        self.subjects.iter().find(|s| s.subject_id == id)
    }

    pub fn subject_ids(&self) -> Vec<&str> {
        self.subjects
            .iter()
            .map(|s| s.subject_id.as_str())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.subjects.iter().map(|s| s.samples.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn samples(&self) -> impl Iterator<Item = &RangeSample<T>> + '_ {
        self.subjects.iter().flat_map(|s| s.samples.iter())
    }

    /// Per-subject feature matrices restricted to `retained` nodes.
    pub fn subject_features(&self, retained: NodeSet) -> Result<Vec<SubjectFeatures<T>>> {
        let proj = FeatureProjection::new(self.node_count, retained)?;
        let mut offset = 0u64;
        let mut out = Vec::with_capacity(self.subjects.len());
        for rec in &self.subjects {
            let mut x = FeatureMatrix::with_capacity(proj.dim(), rec.samples.len());
            let mut y = Vec::with_capacity(rec.samples.len());
            for s in &rec.samples {
                x.push_row(&proj.apply(&s.distances)?)?;
                y.push(s.label.expect("dataset samples are labelled"));
            }
            out.push(SubjectFeatures {
                subject_id: rec.subject_id.clone(),
                x,
                y,
                offset,
            });
            offset += rec.samples.len() as u64;
        }
        Ok(out)
    }
}

/// Splits off one subject: `test` holds exactly that subject's samples and
/// `train` everyone else, in original order.
pub fn loocv_split<T: Real>(
    dataset: &Dataset<T>,
    held_out: &str,
) -> Result<(Dataset<T>, Dataset<T>)> {
    if dataset.subject(held_out).is_none() {
        return Err(Error::UnknownSubject(held_out.to_string()));
    }
    let (test, train): (Vec<_>, Vec<_>) = dataset
        .subjects
        .iter()
        .cloned()
        .partition(|s| s.subject_id == held_out);
    Ok((
        Dataset {
            node_count: dataset.node_count,
            subjects: train,
        },
        Dataset {
            node_count: dataset.node_count,
            subjects: test,
        },
    ))
}
