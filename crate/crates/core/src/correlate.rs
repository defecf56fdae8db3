//! Pearson correlation between degree vectors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decompose::{ChannelVector, DecomposeError, DegreeDecomposition, GroupView};
use crate::graph::LabeledDigraph;
use crate::groups::Group;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorrelationError {
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two observations, got {0}")]
    TooShort(usize),
    #[error("channels {0} and {1} do not share a destination vertex list")]
    ChannelMismatch(Group, Group),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
}

/// Product-moment correlation accumulated in one pass with centered
/// co-moments.
#[derive(Debug, Clone, Copy, Default)]
pub struct Comoments {
    n: u64,
    mean_x: f64,
    mean_y: f64,
    m2_x: f64,
    m2_y: f64,
    c_xy: f64,
}

impl Comoments {
    #[inline]
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        let n = self.n as f64;
        let dx = x - self.mean_x;
        self.mean_x += dx / n;
        let dy = y - self.mean_y;
        self.mean_y += dy / n;
        let ry = y - self.mean_y;
        self.m2_x += dx * (x - self.mean_x);
        self.m2_y += dy * ry;
        self.c_xy += dx * ry;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    /// `None` when either variable has zero variance.
    pub fn correlation(&self) -> Option<f64> {
        if self.m2_x <= 0.0 || self.m2_y <= 0.0 {
            return None;
        }
        let r = self.c_xy / (self.m2_x.sqrt() * self.m2_y.sqrt());
        Some(r.clamp(-1.0, 1.0))
    }
}

/// Pearson correlation of `x` and `y`. `Ok(None)` marks an undefined
/// coefficient (a zero-variance input).
pub fn pearson<T: Copy + Into<f64>>(x: &[T], y: &[T]) -> Result<Option<f64>, CorrelationError> {
    if x.len() != y.len() {
        return Err(CorrelationError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(CorrelationError::TooShort(x.len()));
    }
    let mut acc = Comoments::default();
    for (&a, &b) in x.iter().zip(y) {
        acc.push(a.into(), b.into());
    }
    Ok(acc.correlation())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub a: String,
    pub b: String,
    /// `null` when undefined.
    pub pcc: Option<f64>,
    pub n: usize,
}

fn report<T: Copy + Into<f64>>(a: &str, b: &str, x: &[T], y: &[T]) -> Result<CorrelationReport, CorrelationError> {
    Ok(CorrelationReport {
        a: a.to_string(),
        b: b.to_string(),
        pcc: pearson(x, y)?,
        n: x.len(),
    })
}

/// Global–internal, global–external and internal–external correlations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSuite {
    pub global_internal: CorrelationReport,
    pub global_external: CorrelationReport,
    pub internal_external: CorrelationReport,
}

fn suite(global: &[u32], internal: &[u32], external: &[u32]) -> Result<CorrelationSuite, CorrelationError> {
    Ok(CorrelationSuite {
        global_internal: report("global", "internal", global, internal)?,
        global_external: report("global", "external", global, external)?,
        internal_external: report("internal", "external", internal, external)?,
    })
}

/// The three correlations over every vertex of the decomposition.
pub fn correlation_suite(d: &DegreeDecomposition) -> Result<CorrelationSuite, CorrelationError> {
    suite(&d.global_in, &d.internal_in, &d.external_in)
}

/// The three correlations over one group's vertices.
pub fn group_correlation_suite(view: &GroupView<'_>) -> Result<CorrelationSuite, CorrelationError> {
    suite(view.global_in, view.internal_in, view.external_in)
}

/// Vertex filter for channel correlations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelVertices {
    /// Every vertex of the destination group.
    #[default]
    All,
    /// Only vertices with at least one in-link from either source.
    CitedByEither,
}

/// Correlation between two channels into the same destination group.
pub fn channel_correlation(
    a: &ChannelVector,
    b: &ChannelVector,
    vertices: ChannelVertices,
) -> Result<CorrelationReport, CorrelationError> {
    if a.dest != b.dest || a.vertices != b.vertices {
        return Err(CorrelationError::ChannelMismatch(a.source, b.source));
    }
    let (x, y): (Vec<u32>, Vec<u32>) = match vertices {
        ChannelVertices::All => (a.counts.clone(), b.counts.clone()),
        ChannelVertices::CitedByEither => a
            .counts
            .iter()
            .zip(&b.counts)
            .filter(|(x, y)| **x + **y > 0)
            .map(|(x, y)| (*x, *y))
            .unzip(),
    };
    report(&a.source.to_string(), &b.source.to_string(), &x, &y)
}

pub fn pairwise_channel_correlation(
    graph: &LabeledDigraph,
    dest: Group,
    source_a: Group,
    source_b: Group,
    scope: Option<u8>,
    vertices: ChannelVertices,
) -> Result<CorrelationReport, CorrelationError> {
    let a = crate::decompose::channel_indegree(graph, dest, source_a, scope)?;
    let b = crate::decompose::channel_indegree(graph, dest, source_b, scope)?;
    channel_correlation(&a, &b, vertices)
}
