//! WL kernel + SVM under nested 10-fold cross-validation.
//!
//! cargo run --release --example svm_baseline -- data/MUTAG

use kernel_pretrain::graph::load_tu_dataset;
use kernel_pretrain::harness::{run_kernel_svm, ExperimentConfig, Silent};

fn main() -> kernel_pretrain::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data/MUTAG".into());
    let data = load_tu_dataset(&dir)?;
    let cfg = ExperimentConfig::parse("method = kernel_svm\nrepetitions = 10")?;

    let report = run_kernel_svm(&data, &cfg, &Silent)?;
    print!("{}", report.summary());

    // What the inner search picked in the first repetition.
    for f in report.folds.iter().filter(|f| f.repetition == 0) {
        println!(
            "fold {}: {:.3} with {}",
            f.fold,
            f.accuracy.unwrap_or(f64::NAN),
            f.selected
        );
    }
    Ok(())
}
