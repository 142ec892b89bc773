use std::collections::HashMap;

use super::{FeatureKey, FeatureMap};
use crate::graph::Graph;

/// Weisfeiler-Lehman relabeling with an injective compression table shared
/// by every graph passed through the same instance.
///
/// The table maps `(own label, sorted neighbor labels)` at iteration `i` to a
/// fresh id at iteration `i + 1`. Ids are handed out in order of first sight,
/// so they are only comparable between graphs relabeled by the same
/// instance. Feature maps from different instances must not be mixed.
#[derive(Clone, Debug)]
pub struct WlRelabeler {
    h: u32,
    tables: Vec<HashMap<(u32, Vec<u32>), u32>>,
}

impl WlRelabeler {
    pub fn new(h: u32) -> Self {
        WlRelabeler {
            h,
            tables: vec![HashMap::new(); h as usize],
        }
    }

    pub fn iterations(&self) -> u32 {
        self.h
    }

    /// Node labels at iterations `0..=h`; entry 0 is the original labeling.
    pub fn relabel(&mut self, g: &Graph) -> Vec<Vec<u32>> {
        let mut rounds = Vec::with_capacity(self.h as usize + 1);
        rounds.push(g.labels().to_vec());
        for table in &mut self.tables {
            let prev = rounds.last().expect("round 0 present");
            let next: Vec<u32> = (0..g.node_count())
                .map(|v| {
                    let mut neigh: Vec<u32> = g.neighbors(v).iter().map(|&u| prev[u]).collect();
                    neigh.sort_unstable();
                    let fresh = table.len() as u32;
                    *table.entry((prev[v], neigh)).or_insert(fresh)
                })
                .collect();
            rounds.push(next);
        }
        rounds
    }

    /// Subtree-pattern counts over iterations `0..=h`.
    pub fn feature_map(&mut self, g: &Graph) -> FeatureMap {
        let mut map = FeatureMap::new();
        for (iteration, labels) in self.relabel(g).into_iter().enumerate() {
            for label in labels {
                map.increment(FeatureKey::Wl {
                    iteration: iteration as u32,
                    label,
                });
            }
        }
        map
    }
}

/// WL feature map of a single graph with a private relabeling table. Use a
/// shared [`WlRelabeler`] when maps of several graphs will be compared.
pub fn wl_feature_map(g: &Graph, h: u32) -> FeatureMap {
    WlRelabeler::new(h).feature_map(g)
}
