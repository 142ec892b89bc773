//! Teach a DGCNN embedding to reproduce the WL kernel: the dot product of
//! two embeddings is regressed on the kernel value of the pair.
//!
//! cargo run --release --example siamese_pretrain -- data/MUTAG

use kernel_pretrain::graph::{load_tu_dataset, Graph};
use kernel_pretrain::kernels::{gram_matrix, symmetric_eigen_range};
use kernel_pretrain::model::{Network, NetworkConfig};
use kernel_pretrain::siamese::{pearson, predicted_gram, pretrain, PretrainConfig};

fn main() -> kernel_pretrain::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data/MUTAG".into());
    let data = load_tu_dataset(&dir)?;
    // Fit on the first 80 graphs, check on the next 40.
    let fit: Vec<&Graph> = data.graphs()[..80].iter().collect();
    let held: Vec<Graph> = data.graphs()[80..120].to_vec();

    let cfg = PretrainConfig {
        epochs: 10,
        ..PretrainConfig::default()
    };
    let gram = gram_matrix(&data.graphs()[..80], &cfg.kernel, 0)?;
    let mut net = Network::build(NetworkConfig::dgcnn(data.label_alphabet().len(), 2, 16), 3)?;
    let report = pretrain(&mut net, &fit, &gram, &cfg)?;
    for (e, loss) in report.loss_curve.iter().enumerate() {
        println!("epoch {:>2}: mse {loss:.5}", e + 1);
    }

    let truth = gram_matrix(&held, &cfg.kernel, 0)?;
    let held_refs: Vec<&Graph> = held.iter().collect();
    let pred = predicted_gram(&net, &held_refs);
    let m = held.len();
    let off = |v: &[f64]| -> Vec<f64> {
        (0..m)
            .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
            .map(|(i, j)| v[i * m + j])
            .collect()
    };
    println!("held-out pearson {:.3}", pearson(&off(&pred), &off(truth.values())));
    let (lo, hi) = symmetric_eigen_range(m, &pred);
    println!("predicted Gram eigenvalues in [{lo:.2e}, {hi:.2e}]");
    Ok(())
}
