mod common;

use kernel_pretrain::graph::{load_tu_dataset, Graph};
use kernel_pretrain::harness::{run_pretrained_dgcnn, ExperimentConfig, Silent};
use kernel_pretrain::kernels::{gram_matrix, KernelSpec};
use kernel_pretrain::model::{Checkpoint, Network, NetworkConfig};
use kernel_pretrain::siamese::{predicted_kernel, pretrain, pretrained_checkpoint, PretrainConfig};

#[test]
fn tu_files_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let (graphs, classes) = common::triangle_graphs(12);
    let dir = common::write_tu(tmp.path(), "TRI", &graphs, &classes);
    let data = load_tu_dataset(&dir).unwrap();
    assert_eq!(data.name(), "TRI");
    assert_eq!(data.class_values(), &[-1, 1]);
    for (a, b) in data.graphs().iter().zip(&graphs) {
        assert_eq!(a.labels(), b.labels());
        assert_eq!(a.edges().collect::<Vec<_>>(), b.edges().collect::<Vec<_>>());
    }
}

#[test]
fn pretrained_checkpoint_reloads_to_the_same_predictions() {
    let mut rng = common::rng(12);
    let graphs: Vec<Graph> = (0..12)
        .map(|i| common::random_graph(&mut rng, 5 + i % 4, 3, 0.5))
        .collect();
    let refs: Vec<&Graph> = graphs.iter().collect();
    let cfg = PretrainConfig {
        epochs: 3,
        batch_size: 16,
        ..PretrainConfig::default()
    };
    let gram = gram_matrix(&graphs, &cfg.kernel, 1).unwrap();
    let mut net_cfg = NetworkConfig::dgcnn(3, 2, 5);
    net_cfg.dense_width = 16;
    let mut net = Network::build(net_cfg, 2).unwrap();
    let report = pretrain(&mut net, &refs, &gram, &cfg).unwrap();
    let before = predicted_kernel(&net, &graphs[0], &graphs[1]);

    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("net.ckpt");
    pretrained_checkpoint(net, &cfg, &report).save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(predicted_kernel(&back.network, &graphs[0], &graphs[1]), before);
    assert_eq!(back.provenance["kernel"], KernelSpec::wl(2, true).to_string());
}

#[test]
fn pretrained_runs_are_reproducible() {
    let mut rng = common::rng(13);
    let graphs: Vec<Graph> = (0..30)
        .map(|i| {
            let g = common::random_graph(&mut rng, 5 + i % 6, 3, 0.4);
            Graph::new(i, g.labels().to_vec(), &g.edges().collect::<Vec<_>>()).unwrap()
        })
        .collect();
    let data = kernel_pretrain::graph::Dataset::from_graphs("rnd", graphs, (0..30).map(|i| i % 2).collect()).unwrap();
    let cfg = ExperimentConfig::parse(
        "repetitions = 1\nepochs = 2\nbatch_size = 8\nconv_channels = 4,1\nconv1d = 3:node:node,4:2:1\n\
         dense_width = 8\npretrain_epochs = 2\npretrain_batch_size = 16\npretrain_pairs = sampled:3",
    )
    .unwrap();
    let a = run_pretrained_dgcnn(&data, &cfg, &Silent).unwrap();
    let b = run_pretrained_dgcnn(&data, &cfg, &Silent).unwrap();
    assert!(a.same_results(&b));
}
