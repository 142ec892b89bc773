#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use kernel_pretrain::graph::{load_tu_dataset, Dataset, Graph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `$KP_DATA_DIR/<name>` when set, else `<workspace>/data/<name>`.
pub fn dataset_dir(name: &str) -> PathBuf {
    match std::env::var_os("KP_DATA_DIR") {
        Some(d) => PathBuf::from(d).join(name),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name),
    }
}

pub fn load(name: &str) -> Result<Dataset, String> {
    let dir = dataset_dir(name);
    if !dir.is_dir() {
        return Err(format!("dataset {name} not found at {}", dir.display()));
    }
    load_tu_dataset(&dir).map_err(|e| e.to_string())
}

/// Erdos-Renyi graph with edge probability `p` and labels below `labels`.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, labels: u32, p: f64) -> Graph {
    let node_labels = (0..n).map(|_| rng.gen_range(0..labels)).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(0, node_labels, &edges).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Writes graphs in the TU text format under `dir/<name>/` and returns that
/// directory.
pub fn write_tu(dir: &Path, name: &str, graphs: &[Graph], classes: &[i64]) -> PathBuf {
    let root = dir.join(name);
    std::fs::create_dir_all(&root).unwrap();
    let (mut a, mut ind, mut nl, mut gl) = (String::new(), String::new(), String::new(), String::new());
    let mut offset = 0;
    for (gi, g) in graphs.iter().enumerate() {
        for v in 0..g.node_count() {
            writeln!(ind, "{}", gi + 1).unwrap();
            writeln!(nl, "{}", g.label(v)).unwrap();
        }
        for (u, v) in g.edges() {
            writeln!(a, "{}, {}", offset + u + 1, offset + v + 1).unwrap();
            writeln!(a, "{}, {}", offset + v + 1, offset + u + 1).unwrap();
        }
        writeln!(gl, "{}", classes[gi]).unwrap();
        offset += g.node_count();
    }
    for (suffix, body) in [
        ("A", a),
        ("graph_indicator", ind),
        ("node_labels", nl),
        ("graph_labels", gl),
    ] {
        std::fs::write(root.join(format!("{name}_{suffix}.txt")), body).unwrap();
    }
    root
}

/// Class 1 graphs carry a triangle, class 0 graphs are paths.
pub fn triangle_graphs(count: usize) -> (Vec<Graph>, Vec<i64>) {
    let mut graphs = Vec::new();
    let mut classes = Vec::new();
    for i in 0..count {
        let n = 4 + i % 4;
        let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (v - 1, v)).collect();
        if i % 2 == 1 {
            edges.push((0, 2));
        }
        graphs.push(Graph::new(i, vec![0; n], &edges).unwrap());
        classes.push(if i % 2 == 1 { 1 } else { -1 });
    }
    (graphs, classes)
}
