//! Node-labeled undirected graphs, datasets of graphs, and the handful of
//! graph algorithms the kernels and the network need.
//!
//! Node labels are dictionary-encoded over the whole dataset: a graph stores
//! label *ids* in `[0, d)` and the [`Dataset`] keeps the original label values
//! in `label_alphabet`. Kernels compare ids across graphs, so every graph of a
//! run must be encoded against the same alphabet.

mod adjacency;
mod paths;
mod tu;

pub use adjacency::{normalized_adjacency, SparseMatrix};
pub use paths::{shortest_paths, DistanceMatrix};
pub use tu::{load_tu_dataset, load_tu_dataset_with_stats, LoadStats};

use crate::error::{Error, Result};

/// An undirected graph with one discrete label id per node.
///
/// Edges are stored as sorted adjacency lists; self-loops and duplicate edges
/// are removed on construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    id: usize,
    labels: Vec<u32>,
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

/// What [`Graph::canonicalized`] threw away while building a graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Canonicalization {
    pub self_loops: usize,
    pub duplicate_edges: usize,
}

impl Graph {
    /// Builds a graph from node labels and an edge list.
    ///
    /// Fails if there are no nodes or if an edge endpoint is out of range.
    pub fn new(id: usize, labels: Vec<u32>, edges: &[(usize, usize)]) -> Result<Self> {
        Self::canonicalized(id, labels, edges).map(|(g, _)| g)
    }

    /// Like [`Graph::new`], also reporting how many self-loops and duplicate
    /// undirected edges were dropped. An edge listed once in each direction
    /// is a single undirected edge and is not counted as a duplicate.
    pub fn canonicalized(id: usize, labels: Vec<u32>, edges: &[(usize, usize)]) -> Result<(Self, Canonicalization)> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidArgument(format!("graph {id} has no nodes")));
        }
        let mut stats = Canonicalization::default();
        let mut directed: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidArgument(format!(
                    "graph {id}: edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                stats.self_loops += 1;
                continue;
            }
            directed.push((u, v));
        }
        directed.sort_unstable();
        let before = directed.len();
        directed.dedup();
        stats.duplicate_edges = before - directed.len();

        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &directed {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let mut edge_count = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            edge_count += list.len();
        }
        Ok((
            Graph {
                id,
                labels,
                adjacency,
                edge_count: edge_count / 2,
            },
            stats,
        ))
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> u32 {
        self.labels[v]
    }

    /// Sorted neighbors of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// Returns the isomorphic graph in which old node `v` becomes node
    /// `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Graph {
        assert_eq!(perm.len(), self.node_count(), "permutation length mismatch");
        let mut labels = vec![0; perm.len()];
        for (old, &new) in perm.iter().enumerate() {
            labels[new] = self.labels[old];
        }
        let edges: Vec<_> = self.edges().map(|(u, v)| (perm[u], perm[v])).collect();
        Graph::new(self.id, labels, &edges).expect("permutation of a valid graph is valid")
    }
}

/// An ordered collection of graphs with one class id per graph.
#[derive(Clone, Debug)]
pub struct Dataset {
    name: String,
    graphs: Vec<Graph>,
    targets: Vec<usize>,
    label_alphabet: Vec<i64>,
    class_values: Vec<i64>,
}

impl Dataset {
    /// `label_alphabet[i]` is the original value of node label id `i`;
    /// `class_values[c]` the original value of class id `c`.
    pub fn new(
        name: impl Into<String>,
        graphs: Vec<Graph>,
        targets: Vec<usize>,
        label_alphabet: Vec<i64>,
        class_values: Vec<i64>,
    ) -> Result<Self> {
        if graphs.len() != targets.len() {
            return Err(Error::InvalidArgument(format!(
                "{} graphs but {} targets",
                graphs.len(),
                targets.len()
            )));
        }
        let d = label_alphabet.len() as u32;
        for g in &graphs {
            if let Some(&bad) = g.labels().iter().find(|&&l| l >= d) {
                return Err(Error::InvalidArgument(format!(
                    "graph {} uses label id {bad} outside an alphabet of {d}",
                    g.id()
                )));
            }
        }
        if let Some(&bad) = targets.iter().find(|&&t| t >= class_values.len()) {
            return Err(Error::InvalidArgument(format!(
                "target {bad} outside {} classes",
                class_values.len()
            )));
        }
        Ok(Dataset {
            name: name.into(),
            graphs,
            targets,
            label_alphabet,
            class_values,
        })
    }

    /// A dataset built directly from label ids; the alphabet is `0..d` and the
    /// classes `0..C` with `d`, `C` the smallest sizes covering the input.
    pub fn from_graphs(name: impl Into<String>, graphs: Vec<Graph>, targets: Vec<usize>) -> Result<Self> {
        let d = graphs
            .iter()
            .flat_map(|g| g.labels().iter().copied())
            .max()
            .map_or(1, |m| m as i64 + 1);
        let c = targets.iter().copied().max().map_or(1, |m| m as i64 + 1);
        Dataset::new(name, graphs, targets, (0..d).collect(), (0..c).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn graph(&self, i: usize) -> &Graph {
        &self.graphs[i]
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn label_alphabet(&self) -> &[i64] {
        &self.label_alphabet
    }

    pub fn class_values(&self) -> &[i64] {
        &self.class_values
    }

    pub fn num_classes(&self) -> usize {
        self.class_values.len()
    }

    pub fn total_nodes(&self) -> usize {
        self.graphs.iter().map(Graph::node_count).sum()
    }

    /// The graphs at `indices`, in that order, sharing this dataset's label
    /// alphabet and class table. Graph ids are preserved.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            graphs: indices.iter().map(|&i| self.graphs[i].clone()).collect(),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
            label_alphabet: self.label_alphabet.clone(),
            class_values: self.class_values.clone(),
        }
    }

    /// Same graphs with the targets replaced.
    pub fn with_targets(&self, targets: Vec<usize>) -> Result<Dataset> {
        Dataset::new(
            self.name.clone(),
            self.graphs.clone(),
            targets,
            self.label_alphabet.clone(),
            self.class_values.clone(),
        )
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::Graph;
    use proptest::prelude::*;

    /// Random labeled graphs with up to `max_n` nodes and 3 labels.
    pub fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
        (1..=max_n).prop_flat_map(|n| {
            let pairs = proptest::collection::vec((0..n, 0..n), 0..=(n * 2));
            let labels = proptest::collection::vec(0u32..3, n);
            (labels, pairs).prop_map(|(labels, pairs)| Graph::new(0, labels, &pairs).unwrap())
        })
    }

    pub fn path(labels: &[u32]) -> Graph {
        let edges: Vec<_> = (1..labels.len()).map(|v| (v - 1, v)).collect();
        Graph::new(0, labels.to_vec(), &edges).unwrap()
    }

    pub fn cycle(n: usize) -> Graph {
        let edges: Vec<_> = (0..n).map(|v| (v, (v + 1) % n)).collect();
        Graph::new(0, vec![0; n], &edges).unwrap()
    }

    pub fn triangle(label: u32) -> Graph {
        Graph::new(0, vec![label; 3], &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    /// A connected graph: a random tree plus about `n / 3` extra edges.
    pub fn random_graph(seed: u64, n: usize, num_labels: u32) -> Graph {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let labels = (0..n).map(|_| rng.gen_range(0..num_labels)).collect();
        let mut edges: Vec<_> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
        for _ in 0..n / 3 {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if a != b {
                edges.push((a, b));
            }
        }
        Graph::canonicalized(0, labels, &edges).unwrap().0
    }
}
