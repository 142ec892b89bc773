use super::{FeatureKey, FeatureMap};
use crate::graph::Graph;

/// Isomorphism class of an induced 3-node subgraph. For three nodes the
/// class is determined by the number of edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GraphletClass {
    Empty = 0,
    OneEdge = 1,
    Path = 2,
    Triangle = 3,
}

impl GraphletClass {
    pub const ALL: [GraphletClass; 4] = [
        GraphletClass::Empty,
        GraphletClass::OneEdge,
        GraphletClass::Path,
        GraphletClass::Triangle,
    ];

    pub fn from_edge_count(edges: usize) -> Self {
        Self::ALL[edges]
    }

    pub fn is_connected(self) -> bool {
        matches!(self, GraphletClass::Path | GraphletClass::Triangle)
    }
}

/// Counts of all four classes over the `C(n, 3)` node triples, indexed by
/// `GraphletClass as usize`. Node labels are ignored.
pub fn gl3_counts(g: &Graph) -> [u64; 4] {
    let n = g.node_count();
    let mut adj = vec![false; n * n];
    for (u, v) in g.edges() {
        adj[u * n + v] = true;
        adj[v * n + u] = true;
    }
    let mut counts = [0u64; 4];
    for a in 0..n {
        for b in a + 1..n {
            let ab = adj[a * n + b] as usize;
            for c in b + 1..n {
                counts[ab + adj[a * n + c] as usize + adj[b * n + c] as usize] += 1;
            }
        }
    }
    counts
}

/// Graphlet feature map; with `connected_only` the empty and one-edge classes
/// are left out.
pub fn gl3_feature_map(g: &Graph, connected_only: bool) -> FeatureMap {
    let counts = gl3_counts(g);
    GraphletClass::ALL
        .iter()
        .filter(|c| !connected_only || c.is_connected())
        .map(|&c| (FeatureKey::Graphlet(c), counts[c as usize]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{self, arb_graph};
    use proptest::prelude::*;

    fn key(c: GraphletClass) -> FeatureKey {
        FeatureKey::Graphlet(c)
    }

    #[test]
    fn triangle() {
        let m = gl3_feature_map(&fixtures::triangle(0), false);
        let expected: FeatureMap = [(key(GraphletClass::Triangle), 1)].into_iter().collect();
        assert_eq!(m, expected);
    }

    #[test]
    fn path_of_three() {
        let m = gl3_feature_map(&fixtures::path(&[0, 0, 0]), false);
        let expected: FeatureMap = [(key(GraphletClass::Path), 1)].into_iter().collect();
        assert_eq!(m, expected);
    }

    #[test]
    fn four_cycle_has_four_paths() {
        assert_eq!(gl3_counts(&fixtures::cycle(4)), [0, 0, 4, 0]);
    }

    #[test]
    fn fewer_than_three_nodes_is_empty() {
        let g = Graph::new(0, vec![0, 0], &[(0, 1)]).unwrap();
        assert!(gl3_feature_map(&g, false).is_empty());
    }

    #[test]
    fn connected_only_filter() {
        // One edge plus an isolated node, plus a path: 0-1, 2-3-4.
        let g = Graph::new(0, vec![0; 5], &[(0, 1), (2, 3), (3, 4)]).unwrap();
        let all = gl3_feature_map(&g, false);
        let conn = gl3_feature_map(&g, true);
        assert_eq!(conn.get(&key(GraphletClass::Path)), all.get(&key(GraphletClass::Path)));
        assert_eq!(conn.get(&key(GraphletClass::OneEdge)), 0);
        assert!(all.get(&key(GraphletClass::OneEdge)) > 0);
    }

    fn brute_force(g: &Graph) -> [u64; 4] {
        let n = g.node_count();
        let mut counts = [0u64; 4];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if a < b && b < c {
                        let e = [(a, b), (a, c), (b, c)]
                            .iter()
                            .filter(|&&(x, y)| g.has_edge(x, y))
                            .count();
                        counts[e] += 1;
                    }
                }
            }
        }
        counts
    }

    proptest! {
        #[test]
        fn matches_triple_enumeration(g in arb_graph(10)) {
            let counts = gl3_counts(&g);
            prop_assert_eq!(counts, brute_force(&g));
            let n = g.node_count() as u64;
            let triples = if n >= 3 { n * (n - 1) * (n - 2) / 6 } else { 0 };
            prop_assert_eq!(counts.iter().sum::<u64>(), triples);
        }
    }
}
