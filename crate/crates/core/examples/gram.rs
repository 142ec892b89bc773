//! Gram matrices for the three kernels, with a spectrum check and a
//! look at which graphs are most alike.
//!
//! cargo run --release --example gram -- data/MUTAG

use std::time::Instant;

use kernel_pretrain::graph::load_tu_dataset;
use kernel_pretrain::kernels::{gram_matrix, KernelSpec};

fn main() -> kernel_pretrain::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data/MUTAG".into());
    let data = load_tu_dataset(&dir)?;

    for spec in [
        KernelSpec::wl(2, true),
        KernelSpec::shortest_path(true),
        KernelSpec::graphlet3(true),
    ] {
        let t = Instant::now();
        let gram = gram_matrix(data.graphs(), &spec, 0)?;
        let (lo, hi) = gram.eigenvalue_range();
        println!(
            "{spec}: {:.3}s, eigenvalues in [{lo:.3e}, {hi:.3e}]",
            t.elapsed().as_secs_f64()
        );

        // Nearest neighbour of graph 0, ignoring itself.
        let (j, k) = (1..gram.size())
            .map(|j| (j, gram.get(0, j)))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        println!(
            "  graph 0 (class {}) is closest to graph {j} (class {}), k = {k:.4}",
            data.targets()[0],
            data.targets()[j]
        );
    }
    Ok(())
}
