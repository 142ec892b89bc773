//! Reader for the TU graph-benchmark text format (`DS_A.txt`,
//! `DS_graph_indicator.txt`, `DS_graph_labels.txt`, `DS_node_labels.txt`).

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{Dataset, Graph};
use crate::error::{Error, Result};

/// Artifacts removed while loading; public copies of the benchmark sets
/// contain a few.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub self_loops_dropped: usize,
    pub duplicate_edges_dropped: usize,
}

/// Loads a TU-format dataset from `dir`. The file prefix is the directory's
/// name (`MUTAG/MUTAG_A.txt`, ...).
pub fn load_tu_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    load_tu_dataset_with_stats(dir).map(|(ds, _)| ds)
}

pub fn load_tu_dataset_with_stats(dir: impl AsRef<Path>) -> Result<(Dataset, LoadStats)> {
    let dir = dir.as_ref();
    let name = dir
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::InvalidArgument(format!("{} is not a dataset directory", dir.display())))?
        .to_string();
    let file = |suffix: &str| dir.join(format!("{name}_{suffix}.txt"));

    let a_path = file("A");
    let indicator_path = file("graph_indicator");
    let graph_labels_path = file("graph_labels");
    let node_labels_path = file("node_labels");
    for p in [&a_path, &indicator_path, &graph_labels_path, &node_labels_path] {
        if !p.is_file() {
            return Err(Error::MissingFile { path: p.clone() });
        }
    }

    let indicator: Vec<i64> = read_column(&indicator_path)?;
    let node_labels: Vec<i64> = read_column(&node_labels_path)?;
    let graph_labels: Vec<i64> = read_column(&graph_labels_path)?;
    let edges = read_pairs(&a_path)?;

    if node_labels.len() < indicator.len() {
        return Err(format_error(
            &node_labels_path,
            node_labels.len() + 1,
            format!(
                "node {} has no label ({} labels for {} nodes)",
                node_labels.len() + 1,
                node_labels.len(),
                indicator.len()
            ),
        ));
    }
    if node_labels.len() > indicator.len() {
        return Err(format_error(
            &node_labels_path,
            indicator.len() + 1,
            format!("{} labels for {} nodes", node_labels.len(), indicator.len()),
        ));
    }

    // Graphs in order of first appearance in the indicator file.
    let mut graph_slot: HashMap<i64, usize> = HashMap::new();
    let mut graph_keys: Vec<i64> = Vec::new();
    let mut node_graph = Vec::with_capacity(indicator.len());
    let mut node_local = Vec::with_capacity(indicator.len());
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (node, &key) in indicator.iter().enumerate() {
        let slot = *graph_slot.entry(key).or_insert_with(|| {
            graph_keys.push(key);
            members.push(Vec::new());
            graph_keys.len() - 1
        });
        node_graph.push(slot);
        node_local.push(members[slot].len());
        members[slot].push(node);
    }

    let label_alphabet: Vec<i64> = node_labels
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let label_id: HashMap<i64, u32> = label_alphabet.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();

    let mut graph_edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); graph_keys.len()];
    for (line, (u, v)) in edges.into_iter().enumerate() {
        let check = |x: i64| -> Result<usize> {
            if x < 1 || x as usize > indicator.len() {
                Err(format_error(
                    &a_path,
                    line + 1,
                    format!("node id {x} outside 1..={}", indicator.len()),
                ))
            } else {
                Ok(x as usize - 1)
            }
        };
        let (u, v) = (check(u)?, check(v)?);
        if node_graph[u] != node_graph[v] {
            return Err(format_error(
                &a_path,
                line + 1,
                format!(
                    "edge ({}, {}) joins graphs {} and {}",
                    u + 1,
                    v + 1,
                    graph_keys[node_graph[u]],
                    graph_keys[node_graph[v]]
                ),
            ));
        }
        graph_edges[node_graph[u]].push((node_local[u], node_local[v]));
    }

    let mut stats = LoadStats::default();
    let mut graphs = Vec::with_capacity(graph_keys.len());
    let mut raw_targets = Vec::with_capacity(graph_keys.len());
    for (slot, &key) in graph_keys.iter().enumerate() {
        if key < 1 || key as usize > graph_labels.len() {
            return Err(format_error(
                &graph_labels_path,
                graph_labels.len(),
                format!("no class label for graph {key}"),
            ));
        }
        raw_targets.push(graph_labels[key as usize - 1]);
        let labels = members[slot].iter().map(|&n| label_id[&node_labels[n]]).collect();
        let (g, c) = Graph::canonicalized(slot, labels, &graph_edges[slot])?;
        stats.self_loops_dropped += c.self_loops;
        stats.duplicate_edges_dropped += c.duplicate_edges;
        graphs.push(g);
    }
    if stats != LoadStats::default() {
        log::warn!(
            "{name}: dropped {} self-loops and {} duplicate edges",
            stats.self_loops_dropped,
            stats.duplicate_edges_dropped
        );
    }

    let class_values: Vec<i64> = raw_targets
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let targets = raw_targets
        .iter()
        .map(|t| class_values.binary_search(t).expect("class present"))
        .collect();
    Ok((
        Dataset::new(name, graphs, targets, label_alphabet, class_values)?,
        stats,
    ))
}

fn format_error(path: &Path, line: usize, message: String) -> Error {
    Error::Format {
        file: path.display().to_string(),
        line,
        message,
    }
}

fn read_lines(path: &PathBuf) -> Result<Vec<(usize, Vec<String>)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split(',').map(|f| f.trim().to_string()).collect()))
        .collect())
}

fn parse_int(path: &Path, line: usize, field: &str) -> Result<i64> {
    field
        .parse::<i64>()
        .map_err(|_| format_error(path, line, format!("expected an integer, found {field:?}")))
}

/// One integer per line; extra comma-separated fields are ignored.
fn read_column(path: &PathBuf) -> Result<Vec<i64>> {
    read_lines(path)?
        .into_iter()
        .map(|(line, fields)| parse_int(path, line, &fields[0]))
        .collect()
}

fn read_pairs(path: &PathBuf) -> Result<Vec<(i64, i64)>> {
    read_lines(path)?
        .into_iter()
        .map(|(line, fields)| {
            if fields.len() < 2 {
                return Err(format_error(path, line, "expected two node ids".into()));
            }
            Ok((parse_int(path, line, &fields[0])?, parse_int(path, line, &fields[1])?))
        })
        .collect()
}
