use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::{normalize, FeatureKey, FeatureMap, KernelKind, KernelSpec};
use crate::error::{Error, Result};
use crate::graph::Graph;

const MAGIC: &[u8; 8] = b"KPGRAM01";

/// Dense symmetric matrix of pairwise kernel values, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    size: usize,
    values: Vec<f64>,
    spec: KernelSpec,
}

impl GramMatrix {
    pub fn from_values(size: usize, values: Vec<f64>, spec: KernelSpec) -> Result<Self> {
        if values.len() != size * size {
            return Err(Error::InvalidArgument(format!(
                "{} values for a {size}x{size} Gram matrix",
                values.len()
            )));
        }
        Ok(GramMatrix { size, values, spec })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn is_normalized(&self) -> bool {
        self.spec.normalize
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.size..(i + 1) * self.size]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The block `indices x indices`, in the given order.
    pub fn restrict(&self, indices: &[usize]) -> GramMatrix {
        let m = indices.len();
        let mut values = Vec::with_capacity(m * m);
        for &i in indices {
            let row = self.row(i);
            values.extend(indices.iter().map(|&j| row[j]));
        }
        GramMatrix {
            size: m,
            values,
            spec: self.spec,
        }
    }

    /// `k(rows[a], cols[b])` for every `a`, `b`, as one vector per row.
    pub fn cross(&self, rows: &[usize], cols: &[usize]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|&i| {
                let row = self.row(i);
                cols.iter().map(|&j| row[j]).collect()
            })
            .collect()
    }

    /// Smallest and largest eigenvalue.
    pub fn eigenvalue_range(&self) -> (f64, f64) {
        symmetric_eigen_range(self.size, &self.values)
    }

    /// Header (magic, size, kernel kind, WL height, normalize flag, graphlet
    /// flag) followed by `size * size` little-endian `f64`, row-major.
    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::with_capacity(24 + 8 * self.values.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&(self.size as u64).to_le_bytes());
        let (kind, h, connected_only) = match self.spec.kind {
            KernelKind::Wl { h } => (0u8, h, false),
            KernelKind::ShortestPath => (1, 0, false),
            KernelKind::Graphlet3 { connected_only } => (2, 0, connected_only),
        };
        buf.push(kind);
        buf.extend_from_slice(&h.to_le_bytes());
        buf.push(self.spec.normalize as u8);
        buf.push(connected_only as u8);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn read_binary(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let bad = |message: &str| Error::Binary {
            path: path.to_path_buf(),
            message: message.to_string(),
        };
        const HEADER: usize = 8 + 8 + 1 + 4 + 1 + 1;
        if bytes.len() < HEADER || &bytes[..8] != MAGIC {
            return Err(bad("missing Gram header"));
        }
        let size = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let h = u32::from_le_bytes(bytes[17..21].try_into().unwrap());
        let normalize = bytes[21] != 0;
        let connected_only = bytes[22] != 0;
        let kind = match bytes[16] {
            0 => KernelKind::Wl { h },
            1 => KernelKind::ShortestPath,
            2 => KernelKind::Graphlet3 { connected_only },
            _ => return Err(bad("unknown kernel kind")),
        };
        let body = &bytes[HEADER..];
        if body.len() != size * size * 8 {
            return Err(bad("body length does not match the header size"));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(GramMatrix {
            size,
            values,
            spec: KernelSpec { kind, normalize },
        })
    }

    /// Comma-separated rows, shortest round-tripping decimal representation.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::new();
        for i in 0..self.size {
            let line: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(",")).expect("write to Vec");
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Builds the Gram matrix of `graphs` under `spec`.
///
/// Feature maps are computed once per graph (single-threaded, since the WL
/// table is shared); pair products are spread over `workers` threads. Every
/// entry is computed independently in exact integer arithmetic, so the result
/// does not depend on `workers`. `workers == 0` uses rayon's global pool.
pub fn gram_matrix(graphs: &[Graph], spec: &KernelSpec, workers: usize) -> Result<GramMatrix> {
    let maps = spec.feature_maps(graphs);
    let ids: Vec<usize> = graphs.iter().map(Graph::id).collect();
    gram_matrix_from_maps(&maps, &ids, spec, workers)
}

/// Gram matrix from precomputed feature maps. `graph_ids` name the graphs in
/// degenerate-graph errors.
pub fn gram_matrix_from_maps(
    maps: &[FeatureMap],
    graph_ids: &[usize],
    spec: &KernelSpec,
    workers: usize,
) -> Result<GramMatrix> {
    assert_eq!(maps.len(), graph_ids.len());
    let m = maps.len();
    if m == 0 {
        return Err(Error::InvalidArgument("Gram matrix of an empty dataset".into()));
    }
    let vectors = intern(maps);
    let diag: Vec<u64> = vectors.iter().map(|v| sparse_dot(v, v)).collect();
    if spec.normalize {
        if let Some(i) = diag.iter().position(|&d| d == 0) {
            return Err(Error::DegenerateGraph { graph_id: graph_ids[i] });
        }
    }

    let fill_row = |i: usize| -> Vec<f64> {
        (i..m)
            .map(|j| {
                if i == j && spec.normalize {
                    return 1.0;
                }
                let raw = sparse_dot(&vectors[i], &vectors[j]) as f64;
                if spec.normalize {
                    normalize(raw, diag[i] as f64, diag[j] as f64).expect("diagonal checked positive")
                } else {
                    raw
                }
            })
            .collect()
    };
    let upper: Vec<Vec<f64>> = if workers == 0 {
        (0..m).into_par_iter().map(fill_row).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| (0..m).into_par_iter().map(fill_row).collect())
    };

    let mut values = vec![0.0; m * m];
    for (i, row) in upper.into_iter().enumerate() {
        for (offset, v) in row.into_iter().enumerate() {
            let j = i + offset;
            values[i * m + j] = v;
            values[j * m + i] = v;
        }
    }
    Ok(GramMatrix {
        size: m,
        values,
        spec: *spec,
    })
}

type SparseVec = Vec<(u32, u64)>;

/// Replaces feature keys by dense ids assigned in key order, so each map
/// becomes a sorted `(id, count)` list.
fn intern(maps: &[FeatureMap]) -> Vec<SparseVec> {
    let mut vocab: BTreeMap<FeatureKey, u32> = BTreeMap::new();
    for m in maps {
        for (k, _) in m.iter() {
            vocab.entry(*k).or_insert(0);
        }
    }
    for (i, v) in vocab.values_mut().enumerate() {
        *v = i as u32;
    }
    maps.iter()
        .map(|m| m.iter().map(|(k, &c)| (vocab[k], c)).collect())
        .collect()
}

fn sparse_dot(a: &[(u32, u64)], b: &[(u32, u64)]) -> u64 {
    let (mut i, mut j, mut acc) = (0, 0, 0u64);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// Smallest and largest eigenvalue of a symmetric `n x n` row-major matrix.
pub fn symmetric_eigen_range(n: usize, values: &[f64]) -> (f64, f64) {
    let m = nalgebra::DMatrix::from_row_slice(n, n, values);
    let eig = nalgebra::SymmetricEigen::new(m).eigenvalues;
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}
