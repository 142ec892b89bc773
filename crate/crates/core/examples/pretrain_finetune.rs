//! Plain DGCNN against kernel-pretrained DGCNN on the same folds and seeds.
//!
//! cargo run --release --example pretrain_finetune -- data/MUTAG

use kernel_pretrain::graph::load_tu_dataset;
use kernel_pretrain::harness::{aggregate, run_dgcnn, run_pretrained_dgcnn, ExperimentConfig, Silent};

fn main() -> kernel_pretrain::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data/MUTAG".into());
    let data = load_tu_dataset(&dir)?;
    // One repetition keeps this to a few minutes on a laptop.
    let cfg = ExperimentConfig::parse("repetitions = 1\nseed = 0")?;

    let plain = run_dgcnn(&data, &cfg, &Silent)?;
    let pre = run_pretrained_dgcnn(&data, &cfg, &Silent)?;
    for (a, b) in plain.folds.iter().zip(&pre.folds) {
        println!(
            "fold {}: plain {:.3}  pretrained {:.3}  ({})",
            a.fold,
            a.accuracy.unwrap_or(f64::NAN),
            b.accuracy.unwrap_or(f64::NAN),
            b.selected
        );
    }
    print!("{}", aggregate(&[plain, pre])?.text());
    Ok(())
}
