//! Graph kernels with explicit feature maps.
//!
//! Every kernel here is `k(x, y) = <φ(x), φ(y)>` for a sparse count vector
//! `φ`: Weisfeiler-Lehman subtree patterns, labeled shortest-path triples, or
//! size-3 graphlet classes. Gram matrices are built from the feature maps
//! once per graph and filled in parallel.

mod gram;
mod graphlet;
mod sp;
mod wl;

pub use gram::{gram_matrix, gram_matrix_from_maps, symmetric_eigen_range, GramMatrix};
pub use graphlet::{gl3_counts, gl3_feature_map, GraphletClass};
pub use sp::sp_feature_map;
pub use wl::{wl_feature_map, WlRelabeler};

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Which kernel to compute. The WL iteration count lives inside the variant,
/// so it is present exactly when the kernel is WL.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    Wl {
        h: u32,
    },
    ShortestPath,
    /// Size-3 graphlets; `connected_only` drops the empty and one-edge
    /// classes from the feature map.
    Graphlet3 {
        connected_only: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub normalize: bool,
}

impl KernelSpec {
    pub fn wl(h: u32, normalize: bool) -> Self {
        KernelSpec {
            kind: KernelKind::Wl { h },
            normalize,
        }
    }

    pub fn shortest_path(normalize: bool) -> Self {
        KernelSpec {
            kind: KernelKind::ShortestPath,
            normalize,
        }
    }

    pub fn graphlet3(normalize: bool) -> Self {
        KernelSpec {
            kind: KernelKind::Graphlet3 { connected_only: false },
            normalize,
        }
    }

    /// `h` for WL kernels, `None` otherwise.
    pub fn wl_iterations(&self) -> Option<u32> {
        match self.kind {
            KernelKind::Wl { h } => Some(h),
            _ => None,
        }
    }

    /// Feature maps of `graphs` under this kernel. WL maps share one
    /// relabeling table so equal patterns get equal keys across graphs.
    pub fn feature_maps(&self, graphs: &[Graph]) -> Vec<FeatureMap> {
        match self.kind {
            KernelKind::Wl { h } => {
                let mut relabeler = WlRelabeler::new(h);
                graphs.iter().map(|g| relabeler.feature_map(g)).collect()
            }
            KernelKind::ShortestPath => graphs.iter().map(sp_feature_map).collect(),
            KernelKind::Graphlet3 { connected_only } => {
                graphs.iter().map(|g| gl3_feature_map(g, connected_only)).collect()
            }
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            KernelKind::Wl { h } => write!(f, "wl(h={h})")?,
            KernelKind::ShortestPath => write!(f, "sp")?,
            KernelKind::Graphlet3 { connected_only } => {
                write!(f, "gl3")?;
                if connected_only {
                    write!(f, "(connected)")?;
                }
            }
        }
        if self.normalize {
            write!(f, ",normalized")?;
        }
        Ok(())
    }
}

/// A structural feature counted by one of the kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureKey {
    /// Compressed WL label `label` at iteration `iteration`. Iteration 0
    /// labels are the original node label ids.
    Wl {
        iteration: u32,
        label: u32,
    },
    /// Two node labels (`low <= high`) at hop distance `distance`.
    ShortestPath {
        low: u32,
        high: u32,
        distance: u32,
    },
    Graphlet(GraphletClass),
}

/// Sparse non-negative count vector. Only keys with a count of at least one
/// are stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FeatureMap {
    counts: BTreeMap<FeatureKey, u64>,
}

impl FeatureMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, key: FeatureKey, count: u64) {
        if count > 0 {
            *self.counts.entry(key).or_insert(0) += count;
        }
    }

    pub fn increment(&mut self, key: FeatureKey) {
        self.add(key, 1);
    }

    pub fn get(&self, key: &FeatureKey) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Entries in ascending key order.
    pub fn iter(&self) -> impl Iterator<Item = (&FeatureKey, &u64)> {
        self.counts.iter()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

impl FromIterator<(FeatureKey, u64)> for FeatureMap {
    fn from_iter<T: IntoIterator<Item = (FeatureKey, u64)>>(iter: T) -> Self {
        let mut m = FeatureMap::new();
        for (k, c) in iter {
            m.add(k, c);
        }
        m
    }
}

/// Sparse dot product of two count vectors, exact in integer arithmetic.
pub fn kernel_value(a: &FeatureMap, b: &FeatureMap) -> f64 {
    let (mut x, mut y) = (a.counts.iter().peekable(), b.counts.iter().peekable());
    let mut acc: u64 = 0;
    while let (Some((ka, ca)), Some((kb, cb))) = (x.peek(), y.peek()) {
        match ka.cmp(kb) {
            std::cmp::Ordering::Less => {
                x.next();
            }
            std::cmp::Ordering::Greater => {
                y.next();
            }
            std::cmp::Ordering::Equal => {
                acc += *ca * *cb;
                x.next();
                y.next();
            }
        }
    }
    acc as f64
}

/// Cosine normalization `kxy / sqrt(kxx * kyy)`, clamped to `[-1, 1]`.
///
/// A non-positive self-similarity means the graph has an empty feature map;
/// that is reported as [`Error::DegenerateGraph`] with `graph_id` 0; callers
/// that know the graph re-tag the error.
pub fn normalize(kxy: f64, kxx: f64, kyy: f64) -> Result<f64> {
    if !(kxx > 0.0 && kyy > 0.0) {
        return Err(Error::DegenerateGraph { graph_id: 0 });
    }
    Ok((kxy / (kxx * kyy).sqrt()).clamp(-1.0, 1.0))
}
