use std::collections::VecDeque;

use super::Graph;

/// All-pairs hop distances of one graph. Unreachable pairs are `None`, never
/// a large finite number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    dist: Vec<Option<u32>>,
}

impl DistanceMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, u: usize, v: usize) -> Option<u32> {
        self.dist[u * self.n + v]
    }

    pub fn row(&self, u: usize) -> &[Option<u32>] {
        &self.dist[u * self.n..(u + 1) * self.n]
    }
}

/// Breadth-first search from every node; edges are unweighted.
pub fn shortest_paths(g: &Graph) -> DistanceMatrix {
    let n = g.node_count();
    let mut dist = vec![None; n * n];
    let mut queue = VecDeque::with_capacity(n);
    for source in 0..n {
        let row = &mut dist[source * n..(source + 1) * n];
        row[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let d = row[u].expect("queued nodes are reached");
            for &v in g.neighbors(u) {
                if row[v].is_none() {
                    row[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
    }
    DistanceMatrix { n, dist }
}
