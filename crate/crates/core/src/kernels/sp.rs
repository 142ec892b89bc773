use super::{FeatureKey, FeatureMap};
use crate::graph::{shortest_paths, Graph};

/// Counts `(low label, high label, hop distance)` over unordered node pairs
/// with a finite distance. Unreachable pairs contribute nothing.
pub fn sp_feature_map(g: &Graph) -> FeatureMap {
    let dist = shortest_paths(g);
    let mut map = FeatureMap::new();
    for u in 0..g.node_count() {
        for (v, d) in dist.row(u).iter().enumerate().skip(u + 1) {
            if let Some(distance) = *d {
                let (a, b) = (g.label(u), g.label(v));
                map.increment(FeatureKey::ShortestPath {
                    low: a.min(b),
                    high: a.max(b),
                    distance,
                });
            }
        }
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{self, arb_graph};
    use proptest::prelude::*;

    fn sp(low: u32, high: u32, distance: u32) -> FeatureKey {
        FeatureKey::ShortestPath { low, high, distance }
    }

    #[test]
    fn single_node_is_empty() {
        assert!(sp_feature_map(&Graph::new(0, vec![0], &[]).unwrap()).is_empty());
    }

    #[test]
    fn one_edge() {
        let g = Graph::new(0, vec![1, 0], &[(0, 1)]).unwrap();
        let expected: FeatureMap = [(sp(0, 1, 1), 1)].into_iter().collect();
        assert_eq!(sp_feature_map(&g), expected);
    }

    #[test]
    fn path_of_three_equal_labels() {
        let expected: FeatureMap = [(sp(0, 0, 1), 2), (sp(0, 0, 2), 1)].into_iter().collect();
        assert_eq!(sp_feature_map(&fixtures::path(&[0, 0, 0])), expected);
    }

    /// Enumerates every node pair and grows distances by relaxing over
    /// edges until nothing changes.
    fn pair_enumeration(g: &Graph) -> FeatureMap {
        let n = g.node_count();
        let mut d = vec![vec![u32::MAX; n]; n];
        for v in 0..n {
            d[v][v] = 0;
        }
        let mut changed = true;
        while changed {
            changed = false;
            for u in 0..n {
                for (a, b) in g.edges() {
                    for (x, y) in [(a, b), (b, a)] {
                        if d[u][x] != u32::MAX && d[u][x] + 1 < d[u][y] {
                            d[u][y] = d[u][x] + 1;
                            changed = true;
                        }
                    }
                }
            }
        }
        let mut m = FeatureMap::new();
        for u in 0..n {
            for v in u + 1..n {
                if d[u][v] != u32::MAX {
                    let (a, b) = (g.label(u), g.label(v));
                    m.increment(sp(a.min(b), a.max(b), d[u][v]));
                }
            }
        }
        m
    }

    proptest! {
        #[test]
        fn matches_pair_enumeration(g in arb_graph(8)) {
            prop_assert_eq!(sp_feature_map(&g), pair_enumeration(&g));
        }
    }
}
