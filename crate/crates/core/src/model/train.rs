use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{argmax, GraphInput, Network};
use crate::autodiff::{Adam, AdamConfig, Gradients, ParamStore, Tape};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// A graph with its class id.
pub type Labeled<'a> = (&'a Graph, usize);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            epochs: 100,
            batch_size: 50,
            adam: AdamConfig {
                learning_rate: 2e-3,
                ..AdamConfig::default()
            },
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitReport {
    /// Epoch whose parameters were kept (1-based); 0 when nothing was trained.
    pub best_epoch: usize,
    pub train_loss: Vec<f64>,
    pub val_accuracy: Vec<f64>,
    pub val_loss: Vec<f64>,
}

/// Trains the whole network with Adam on mean NLL over mini-batches.
///
/// After every epoch the validation set is scored; the parameters of the
/// epoch with the best validation accuracy (ties: lower validation NLL, then
/// the earlier epoch) are restored at the end. With an empty validation set
/// the last epoch is kept.
pub fn fit_classifier(net: &mut Network, train: &[Labeled], val: &[Labeled], cfg: &FitConfig) -> Result<FitReport> {
    if cfg.batch_size == 0 {
        return Err(Error::config("batch size must be at least 1"));
    }
    let mut report = FitReport::default();
    if cfg.epochs == 0 || train.is_empty() {
        return Ok(report);
    }
    let inputs: Vec<GraphInput> = train.iter().map(|(g, _)| net.prepare(g)).collect();
    let val_inputs: Vec<GraphInput> = val.iter().map(|(g, _)| net.prepare(g)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(net.params(), cfg.adam);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best: Option<(f64, f64, ParamStore)> = None;
    let rate = net.config().dropout;
    let width = net.config().dense_width;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let masks: Vec<Option<Vec<f64>>> = batch
                .iter()
                .map(|_| (rate > 0.0).then(|| dropout_mask(&mut rng, width, rate)))
                .collect();
            let scale = 1.0 / batch.len() as f64;
            let results: Vec<(f64, Gradients)> = batch
                .par_iter()
                .zip(masks)
                .map(|(&i, mask)| {
                    let mut tape = Tape::new(net.params());
                    let logp = net.classify_on(&mut tape, &inputs[i], mask);
                    let loss = tape.nll(logp, train[i].1);
                    let loss = tape.scale(loss, scale);
                    (tape.value(loss).item(), tape.backward(loss))
                })
                .collect();
            let loss: f64 = results.iter().map(|(l, _)| l).sum();
            let grads = Gradients::sum_ordered(net.params(), results.into_iter().map(|(_, g)| g));
            if !loss.is_finite() || !grads.all_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: batch.iter().map(|&i| train[i].0.id()).collect(),
                    param_norm: net.params().norm(),
                });
            }
            epoch_loss += loss * batch.len() as f64;
            let store = net.params_mut();
            store.zero_grad();
            store.accumulate(&grads);
            adam.step(store);
        }
        report.train_loss.push(epoch_loss / train.len() as f64);
        if val.is_empty() {
            continue;
        }
        let scored = score(net, &val_inputs, val);
        report.val_accuracy.push(scored.0);
        report.val_loss.push(scored.1);
        let better = match &best {
            None => true,
            Some((acc, loss, _)) => scored.0 > *acc || (scored.0 == *acc && scored.1 < *loss),
        };
        if better {
            best = Some((scored.0, scored.1, net.params().clone()));
            report.best_epoch = epoch;
        }
    }
    match best {
        Some((_, _, params)) => *net.params_mut() = params,
        None => report.best_epoch = cfg.epochs,
    }
    Ok(report)
}

fn dropout_mask(rng: &mut ChaCha8Rng, n: usize, rate: f64) -> Vec<f64> {
    let keep = 1.0 / (1.0 - rate);
    (0..n)
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect()
}

/// Accuracy and mean NLL.
fn score(net: &Network, inputs: &[GraphInput], data: &[Labeled]) -> (f64, f64) {
    let outs: Vec<(bool, f64)> = inputs
        .par_iter()
        .zip(data)
        .map(|(input, &(_, y))| {
            let mut tape = Tape::new(net.params());
            let logp = net.classify_on(&mut tape, input, None);
            let lp = tape.value(logp).data();
            (argmax(lp) == y, -lp[y])
        })
        .collect();
    let n = data.len() as f64;
    let correct = outs.iter().filter(|(c, _)| *c).count() as f64;
    (correct / n, outs.iter().map(|(_, l)| l).sum::<f64>() / n)
}

/// Fraction of `data` classified correctly; 0 for an empty set.
pub fn accuracy(net: &Network, data: &[Labeled]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let inputs: Vec<GraphInput> = data.iter().map(|(g, _)| net.prepare(g)).collect();
    score(net, &inputs, data).0
}

/// Mean negative log-likelihood over `data`.
pub fn mean_nll(net: &Network, data: &[Labeled]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let inputs: Vec<GraphInput> = data.iter().map(|(g, _)| net.prepare(g)).collect();
    score(net, &inputs, data).1
}
