//! Load a TU-format dataset and print its shape.
//!
//! cargo run --release --example load_tu -- data/MUTAG

use kernel_pretrain::graph::load_tu_dataset_with_stats;

fn main() -> kernel_pretrain::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data/MUTAG".into());
    let (data, stats) = load_tu_dataset_with_stats(&dir)?;

    let nodes: Vec<usize> = data.graphs().iter().map(|g| g.node_count()).collect();
    let edges: usize = data.graphs().iter().map(|g| g.edge_count()).sum();
    println!(
        "{}: {} graphs, {} classes {:?}",
        data.name(),
        data.len(),
        data.num_classes(),
        data.class_values()
    );
    println!("node labels: {:?}", data.label_alphabet());
    println!(
        "nodes per graph: min {} max {} mean {:.2}",
        nodes.iter().min().unwrap_or(&0),
        nodes.iter().max().unwrap_or(&0),
        data.total_nodes() as f64 / data.len() as f64
    );
    println!("edges per graph: mean {:.2}", edges as f64 / data.len() as f64);
    for c in 0..data.num_classes() {
        let n = data.targets().iter().filter(|&&t| t == c).count();
        println!("class {} ({}): {n} graphs", c, data.class_values()[c]);
    }
    if stats != Default::default() {
        println!(
            "dropped {} self loops, {} duplicate edges",
            stats.self_loops_dropped, stats.duplicate_edges_dropped
        );
    }
    Ok(())
}
