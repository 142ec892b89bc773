use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::autodiff::check::finite_difference_check;
use crate::autodiff::AdamConfig;
use crate::graph::fixtures::{path, random_graph, triangle};

fn small_config(k: usize) -> NetworkConfig {
    NetworkConfig {
        num_labels: 3,
        conv_channels: vec![4, 4, 1],
        sortpool_k: k,
        conv1d: vec![
            Conv1dSpec {
                filters: 3,
                width: 9,
                stride: 9,
            },
            Conv1dSpec {
                filters: 4,
                width: 2,
                stride: 1,
            },
        ],
        dense_width: 6,
        num_classes: 2,
        bias: false,
        dropout: 0.0,
    }
}

#[test]
fn default_parameter_count_by_hand() {
    let net = Network::build(NetworkConfig::dgcnn(7, 2, 10), 1).unwrap();
    let d = 8;
    let graph_conv = d * 32 + 32 * 32 + 32 * 32 + 32;
    let conv1 = 16 * 97;
    // 10 node slots after the first convolution, 10 - 5 + 1 after the second.
    let conv2 = 32 * 16 * 5;
    let dense = 32 * 6 * 128;
    let head = 128 * 2;
    assert_eq!(net.params().scalar_count(), graph_conv + conv1 + conv2 + dense + head);
    assert_eq!(net.params().scalar_count(), 31280);
}

#[test]
fn build_is_seed_deterministic() {
    let cfg = small_config(4);
    let a = Network::build(cfg.clone(), 7).unwrap();
    let b = Network::build(cfg.clone(), 7).unwrap();
    let c = Network::build(cfg, 8).unwrap();
    assert_eq!(a.params().encode(), b.params().encode());
    assert_ne!(a.params().encode(), c.params().encode());
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = small_config(4);
    cfg.sortpool_k = 0;
    assert!(matches!(Network::build(cfg, 0), Err(Error::Config(_))));
    // Second convolution of width 2 needs at least 2 node slots.
    assert!(Network::build(small_config(1), 0).is_err());
    assert_eq!(small_config(1).min_sortpool_k(), 2);
    let mut cfg = small_config(4);
    cfg.conv_channels.clear();
    assert!(Network::build(cfg, 0).is_err());
    let mut cfg = small_config(4);
    cfg.dense_width = 0;
    assert!(Network::build(cfg, 0).is_err());
    let mut cfg = small_config(4);
    cfg.dropout = 1.0;
    assert!(Network::build(cfg, 0).is_err());
}

#[test]
fn sortpool_k_keeps_the_requested_fraction() {
    let counts: Vec<usize> = (1..=10).collect();
    assert_eq!(sortpool_k_for(&counts, 0.6), 5);
    assert_eq!(sortpool_k_for(&counts, 1.0), 1);
    assert_eq!(sortpool_k_for(&[7], 0.6), 7);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let counts: Vec<usize> = (0..rng.gen_range(1..40)).map(|_| rng.gen_range(1..30)).collect();
        let k = sortpool_k_for(&counts, 0.6);
        let at_least = |k: usize| counts.iter().filter(|&&n| n >= k).count() as f64;
        assert!(at_least(k) >= 0.6 * counts.len() as f64);
        assert!(at_least(k + 1) < 0.6 * counts.len() as f64);
    }
}

#[test]
fn embedding_is_permutation_invariant() {
    let net = Network::build(NetworkConfig::dgcnn(3, 2, 8), 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for gi in 0..10 {
        let g = random_graph(gi, 6 + gi as usize, 3);
        let base = net.embed(&g);
        for _ in 0..100 {
            let mut perm: Vec<usize> = (0..g.node_count()).collect();
            perm.shuffle(&mut rng);
            let e = net.embed(&g.permuted(&perm));
            for (a, b) in base.iter().zip(&e) {
                assert!((a - b).abs() < 1e-12, "graph {gi}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn zero_network_outputs() {
    let mut net = Network::build(small_config(4), 0).unwrap();
    net.params_mut().fill(0.0);
    let g = random_graph(1, 7, 3);
    assert!(net.embed(&g).iter().all(|&v| v == 0.0));
    for v in net.classify(&g) {
        assert!((v + 2f64.ln()).abs() < 1e-15);
    }
}

#[test]
fn classify_is_a_distribution_of_fixed_size() {
    let net = Network::build(NetworkConfig::dgcnn(3, 3, 6), 2).unwrap();
    for g in [
        Graph::new(0, vec![1], &[]).unwrap(),
        random_graph(3, 30, 3),
        triangle(0),
    ] {
        let out = net.classify(&g);
        assert_eq!(out.len(), 3);
        let total: f64 = out.iter().map(|v| v.exp()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}

#[test]
fn head_shift_keeps_prediction() {
    let mut cfg = small_config(4);
    cfg.bias = true;
    let mut net = Network::build(cfg, 3).unwrap();
    let g = random_graph(4, 9, 3);
    let before = net.classify(&g);
    let b = net.params().id("out.b").unwrap();
    net.params_mut()
        .value_mut(b)
        .data_mut()
        .iter_mut()
        .for_each(|v| *v += 5.0);
    let after = net.classify(&g);
    for (x, y) in before.iter().zip(&after) {
        assert!((x - y).abs() < 1e-12);
    }
    assert_eq!(argmax(&before), argmax(&after));
}

#[test]
fn unknown_labels_use_the_spare_slot() {
    let net = Network::build(small_config(4), 1).unwrap();
    let known = Graph::new(0, vec![3, 3], &[(0, 1)]).unwrap();
    let unknown = Graph::new(0, vec![9, 9], &[(0, 1)]).unwrap();
    assert_eq!(net.embed(&known), net.embed(&unknown));
}

#[test]
fn gradients_of_both_heads_match_finite_differences() {
    let net = Network::build(small_config(5), 11).unwrap();
    let g1 = random_graph(20, 5, 3);
    let g2 = Graph::new(0, vec![0, 1, 2, 1, 0], &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
    let (i1, i2) = (net.prepare(&g1), net.prepare(&g2));
    let loss = |tape: &mut Tape, n: &Network| {
        let logp = n.classify_on(tape, &i1, None);
        let nll = tape.nll(logp, 1);
        let e1 = n.embed_on(tape, &i1);
        let e2 = n.embed_on(tape, &i2);
        let k = tape.dot(e1, e2);
        let mse = tape.mse(k, 0.7);
        tape.sum(&[nll, mse])
    };
    let mut tape = Tape::new(net.params());
    let l = loss(&mut tape, &net);
    let grads = tape.backward(l);
    let report = finite_difference_check(net.params(), &grads, 1e-5, |p| {
        let probe = Network::from_params(net.config().clone(), p.clone()).unwrap();
        let mut t = Tape::new(probe.params());
        let l = loss(&mut t, &probe);
        t.value(l).item()
    });
    assert_eq!(report.checked, net.params().scalar_count());
    assert!(report.max_relative_error < 1e-4, "{report:?}");
}

#[test]
fn every_parameter_tensor_moves_some_embedding() {
    let net = Network::build(small_config(4), 9).unwrap();
    let graphs: Vec<Graph> = (0..6).map(|s| random_graph(s, 5 + s as usize, 4)).collect();
    let base: Vec<Vec<f64>> = graphs.iter().map(|g| net.embed(g)).collect();
    let head = net.head_ids();
    let mut changed_scalars = 0;
    let mut total = 0;
    for id in net.params().ids().filter(|id| !head.contains(id)) {
        let mut moved = false;
        for idx in 0..net.params().value(id).len() {
            let mut probe = net.clone();
            probe.params_mut().value_mut(id).data_mut()[idx] += 1e-3;
            let changed = graphs.iter().zip(&base).any(|(g, b)| probe.embed(g) != *b);
            moved |= changed;
            changed_scalars += changed as usize;
            total += 1;
        }
        assert!(moved, "parameter {} never affects an embedding", net.params().name(id));
    }
    assert!(
        changed_scalars * 2 > total,
        "{changed_scalars} of {total} scalars are live"
    );
}

#[test]
fn reset_head_matches_a_fresh_build() {
    let fresh = Network::build(small_config(4), 21).unwrap();
    let mut other = Network::build(small_config(4), 99).unwrap();
    other.reset_head(21);
    for id in fresh.head_ids() {
        assert_eq!(fresh.params().value(id), other.params().value(id));
    }
    let gc = fresh.params().id("gc.0.w").unwrap();
    assert_ne!(fresh.params().value(gc), other.params().value(gc));
}

#[test]
fn checkpoint_round_trip() {
    let mut cfg = small_config(4);
    cfg.bias = true;
    cfg.dropout = 0.25;
    let net = Network::build(cfg, 4).unwrap();
    let ckpt = Checkpoint::new(net)
        .with("kernel", "wl(h=2),normalized")
        .with("epochs", 20);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.ckpt");
    ckpt.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back.network.config(), ckpt.network.config());
    assert_eq!(back.network.params().encode(), ckpt.network.params().encode());
    assert_eq!(back.provenance, ckpt.provenance);

    let bytes = ckpt.encode();
    assert!(Checkpoint::decode(&bytes[..bytes.len() - 3]).is_err());
    let text = String::from_utf8_lossy(&bytes).replace("sortpool_k = 4", "sortpool_k = 5");
    assert!(Checkpoint::decode(text.as_bytes()).is_err());
}

#[test]
fn classifier_fits_a_separable_toy_problem() {
    let mut graphs = Vec::new();
    for i in 0..8 {
        graphs.push((triangle(i % 3), 1));
        graphs.push((path(&[i % 3, 0, 1]), 0));
    }
    let data: Vec<Labeled> = graphs.iter().map(|(g, y)| (g, *y)).collect();
    let mut net = Network::build(small_config(3), 1).unwrap();
    let cfg = FitConfig {
        epochs: 150,
        batch_size: 4,
        adam: AdamConfig {
            learning_rate: 1e-2,
            ..AdamConfig::default()
        },
        seed: 3,
    };
    let report = fit_classifier(&mut net, &data, &data, &cfg).unwrap();
    assert_eq!(accuracy(&net, &data), 1.0, "{report:?}");
    assert!(report.train_loss.last().unwrap() < &report.train_loss[0]);
    assert!(report.best_epoch >= 1);

    let mut again = Network::build(small_config(3), 1).unwrap();
    fit_classifier(&mut again, &data, &data, &cfg).unwrap();
    assert_eq!(net.params().encode(), again.params().encode());
}

#[test]
fn zero_epochs_leave_parameters_alone() {
    let g = triangle(0);
    let data: Vec<Labeled> = vec![(&g, 1)];
    let mut net = Network::build(small_config(3), 1).unwrap();
    let before = net.params().encode();
    let cfg = FitConfig {
        epochs: 0,
        ..FitConfig::default()
    };
    let report = fit_classifier(&mut net, &data, &data, &cfg).unwrap();
    assert_eq!(report.best_epoch, 0);
    assert_eq!(net.params().encode(), before);
}
