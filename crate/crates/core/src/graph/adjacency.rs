use super::Graph;

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// `(column, value)` entries of row `r`, columns ascending.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        out
    }
}

/// Random-walk normalized adjacency with self-loops, `D̃⁻¹(A + I)`.
///
/// Row `u` holds `1 / (deg(u) + 1)` on the diagonal and at each neighbor.
pub fn normalized_adjacency(g: &Graph) -> SparseMatrix {
    let n = g.node_count();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(n + 2 * g.edge_count());
    let mut values = Vec::with_capacity(n + 2 * g.edge_count());
    row_ptr.push(0);
    for u in 0..n {
        let w = 1.0 / (g.degree(u) + 1) as f64;
        let mut self_done = false;
        for &v in g.neighbors(u) {
            if !self_done && v > u {
                col_idx.push(u);
                values.push(w);
                self_done = true;
            }
            col_idx.push(v);
            values.push(w);
        }
        if !self_done {
            col_idx.push(u);
            values.push(w);
        }
        row_ptr.push(col_idx.len());
    }
    SparseMatrix {
        n_rows: n,
        n_cols: n,
        row_ptr,
        col_idx,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures;

    #[test]
    fn single_node_is_identity() {
        let g = Graph::new(0, vec![0], &[]).unwrap();
        assert_eq!(normalized_adjacency(&g).to_dense(), vec![vec![1.0]]);
    }

    #[test]
    fn two_connected_nodes() {
        let g = Graph::new(0, vec![0, 0], &[(0, 1)]).unwrap();
        assert_eq!(
            normalized_adjacency(&g).to_dense(),
            vec![vec![0.5, 0.5], vec![0.5, 0.5]]
        );
    }

    #[test]
    fn triangle_rows_are_thirds() {
        let dense = normalized_adjacency(&fixtures::triangle(0)).to_dense();
        for row in dense {
            assert_eq!(row, vec![1.0 / 3.0; 3]);
        }
    }

    #[test]
    fn support_matches_edges_plus_diagonal() {
        let g = Graph::new(0, vec![0; 5], &[(0, 3), (3, 4), (1, 2)]).unwrap();
        let s = normalized_adjacency(&g);
        let dense = s.to_dense();
        for u in 0..5 {
            let cols: Vec<usize> = s.row(u).map(|(c, _)| c).collect();
            assert!(cols.windows(2).all(|w| w[0] < w[1]));
            for v in 0..5 {
                assert_eq!(dense[u][v] != 0.0, u == v || g.has_edge(u, v));
            }
            assert!((dense[u].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
