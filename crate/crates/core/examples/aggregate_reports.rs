//! Write a few reports to disk, read them back and tabulate them.
//!
//! cargo run --release --example aggregate_reports -- data/MUTAG

use kernel_pretrain::graph::load_tu_dataset;
use kernel_pretrain::harness::{aggregate, run_kernel_svm, ExperimentConfig, Report, Silent};

fn main() -> kernel_pretrain::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data/MUTAG".into());
    let data = load_tu_dataset(&dir)?;
    let out = std::env::temp_dir().join("kernel-pretrain-reports");

    let mut dirs = Vec::new();
    for kernel in ["wl", "sp", "gl3"] {
        let cfg = ExperimentConfig::parse(&format!("method = kernel_svm\nkernel = {kernel}\nrepetitions = 3"))?;
        let report = run_kernel_svm(&data, &cfg, &Silent)?;
        let d = out.join(kernel);
        report.write(&d)?;
        dirs.push(d);
    }

    // Reports keep only the method name, so the three rows share it.
    let loaded = dirs
        .iter()
        .map(Report::load)
        .collect::<kernel_pretrain::Result<Vec<_>>>()?;
    for (d, r) in dirs.iter().zip(&loaded) {
        println!("{}: {:.2} ± {:.2}", d.display(), r.mean(), r.std());
    }
    print!("{}", aggregate(&loaded)?.text());
    println!("reports under {}", out.display());
    Ok(())
}
