//! Train one DGCNN on a single split and classify the held-out graphs.
//!
//! cargo run --release --example dgcnn_classify -- data/MUTAG

use kernel_pretrain::graph::load_tu_dataset;
use kernel_pretrain::harness::make_fold_plan;
use kernel_pretrain::model::{accuracy, fit_classifier, sortpool_k_for, FitConfig, Labeled, Network, NetworkConfig};

fn main() -> kernel_pretrain::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data/MUTAG".into());
    let data = load_tu_dataset(&dir)?;
    let plan = make_fold_plan(data.targets(), 1, 7)?;
    let split = plan.split(0, 0);

    let pick = |idx: &[usize]| -> Vec<Labeled> { idx.iter().map(|&i| (data.graph(i), data.targets()[i])).collect() };
    let (train, val, test) = (pick(&split.train), pick(&split.validation), pick(&split.test));

    let counts: Vec<usize> = train.iter().map(|(g, _)| g.node_count()).collect();
    let mut cfg = NetworkConfig::dgcnn(data.label_alphabet().len(), data.num_classes(), 1);
    cfg.sortpool_k = sortpool_k_for(&counts, 0.6).max(cfg.min_sortpool_k());
    let mut net = Network::build(cfg, 7)?;
    println!(
        "k = {}, {} parameters",
        net.config().sortpool_k,
        net.params().scalar_count()
    );

    let fit = fit_classifier(
        &mut net,
        &train,
        &val,
        &FitConfig {
            epochs: 60,
            ..FitConfig::default()
        },
    )?;
    for e in (0..fit.train_loss.len()).step_by(10) {
        println!(
            "epoch {:>3}: train nll {:.4}, val acc {:.3}",
            e + 1,
            fit.train_loss[e],
            fit.val_accuracy[e]
        );
    }
    println!(
        "kept epoch {}, test accuracy {:.3}",
        fit.best_epoch,
        accuracy(&net, &test)
    );

    let (g, y) = test[0];
    let logp = net.classify(g);
    println!("first test graph: class {y}, log-probabilities {logp:.3?}");
    Ok(())
}
