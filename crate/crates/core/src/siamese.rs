//! Siamese pre-training: a single shared network embeds both graphs of a
//! pair and the dot product of the two embeddings is regressed onto the
//! kernel value of the pair.

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::autodiff::{Adam, AdamConfig, Gradients, Tape, Tensor};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernels::{GramMatrix, KernelSpec};
use crate::model::{Checkpoint, Network};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairMode {
    /// Every unordered pair, self-pairs included.
    Full,
    /// `count` pairs drawn uniformly without replacement.
    Sampled { count: usize, seed: u64 },
}

impl std::fmt::Display for PairMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PairMode::Full => write!(f, "full"),
            PairMode::Sampled { count, seed } => write!(f, "sampled({count},{seed})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pair {
    pub i: usize,
    pub j: usize,
    pub target: f64,
}

/// Pairs `(i, j)` with `i <= j`, sorted and without duplicates.
#[derive(Clone, Debug, PartialEq)]
pub struct PairDataset {
    pairs: Vec<Pair>,
    mode: PairMode,
}

impl PairDataset {
    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn mode(&self) -> PairMode {
        self.mode
    }
}

/// Number of unordered pairs with repetition over `m` items.
pub fn pair_count(m: usize) -> usize {
    m * (m + 1) / 2
}

/// Pairs over the items of `gram`, with the Gram entries as targets.
pub fn build_pairs(gram: &GramMatrix, mode: PairMode) -> Result<PairDataset> {
    let m = gram.size();
    let total = pair_count(m);
    let mut linear: Vec<usize> = match mode {
        PairMode::Full => (0..total).collect(),
        PairMode::Sampled { count, seed } => {
            if count > total {
                return Err(Error::InvalidArgument(format!(
                    "cannot sample {count} pairs from {total}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            index::sample(&mut rng, total, count).into_vec()
        }
    };
    linear.sort_unstable();
    // Linear index t enumerates row i's pairs (i, i..m) after all earlier rows.
    let mut pairs = Vec::with_capacity(linear.len());
    let (mut i, mut row_start) = (0, 0);
    for t in linear {
        while t >= row_start + (m - i) {
            row_start += m - i;
            i += 1;
        }
        let j = i + (t - row_start);
        pairs.push(Pair {
            i,
            j,
            target: gram.get(i, j),
        });
    }
    Ok(PairDataset { pairs, mode })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PretrainConfig {
    pub kernel: KernelSpec,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// `Sampled` pairs are redrawn every epoch from a seed derived from the
    /// given one and the epoch number.
    pub pairs: PairMode,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            kernel: KernelSpec::wl(2, true),
            epochs: 20,
            batch_size: 256,
            adam: AdamConfig::default(),
            pairs: PairMode::Full,
            seed: 0,
        }
    }
}

impl PretrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("pre-training needs at least one epoch"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("pre-training batch size must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PretrainReport {
    /// Mean squared error over each epoch's pairs, measured as they were
    /// trained on.
    pub loss_curve: Vec<f64>,
    pub pairs_per_epoch: usize,
}

impl PretrainReport {
    pub fn final_loss(&self) -> f64 {
        self.loss_curve.last().copied().unwrap_or(f64::NAN)
    }
}

/// Trains `net` so that `<embed(g_i), embed(g_j)>` matches `gram[i][j]` over
/// the pairs of `graphs` chosen by `cfg.pairs`.
///
/// Each batch embeds every distinct graph it mentions once; the gradient of
/// the batch loss with respect to each embedding is formed in closed form and
/// pushed back through that graph's tape, so both branches of every pair
/// contribute to the one shared parameter set.
pub fn pretrain(
    net: &mut Network,
    graphs: &[&Graph],
    gram: &GramMatrix,
    cfg: &PretrainConfig,
) -> Result<PretrainReport> {
    cfg.validate()?;
    if gram.size() != graphs.len() {
        return Err(Error::InvalidArgument(format!(
            "{} graphs but a Gram matrix of size {}",
            graphs.len(),
            gram.size()
        )));
    }
    let inputs: Vec<_> = graphs.iter().map(|g| net.prepare(g)).collect();
    let mut adam = Adam::new(net.params(), cfg.adam);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let full = match cfg.pairs {
        PairMode::Full => Some(build_pairs(gram, PairMode::Full)?),
        PairMode::Sampled { .. } => None,
    };
    let mut report = PretrainReport::default();

    for epoch in 1..=cfg.epochs {
        let mut pairs = match (&full, cfg.pairs) {
            (Some(p), _) => p.pairs.clone(),
            (None, PairMode::Sampled { count, seed }) => {
                let seed = seed.wrapping_add(epoch as u64 - 1);
                build_pairs(gram, PairMode::Sampled { count, seed })?.pairs
            }
            (None, PairMode::Full) => unreachable!(),
        };
        pairs.shuffle(&mut rng);
        report.pairs_per_epoch = pairs.len();
        let mut sq_sum = 0.0;
        for batch in pairs.chunks(cfg.batch_size) {
            let mut members: Vec<usize> = batch.iter().flat_map(|p| [p.i, p.j]).collect();
            members.sort_unstable();
            members.dedup();
            let slot = |u: usize| members.binary_search(&u).unwrap();

            let params = net.params();
            let tapes: Vec<_> = members
                .par_iter()
                .map(|&u| {
                    let mut tape = Tape::new(params);
                    let e = net.embed_on(&mut tape, &inputs[u]);
                    (tape, e)
                })
                .collect();
            let embeds: Vec<&[f64]> = tapes.iter().map(|(t, e)| t.value(*e).data()).collect();

            let width = embeds[0].len();
            let mut seeds = vec![vec![0.0; width]; members.len()];
            let scale = 2.0 / batch.len() as f64;
            let mut batch_sq = 0.0;
            for p in batch {
                let (a, b) = (slot(p.i), slot(p.j));
                let pred = dot(embeds[a], embeds[b]);
                let r = pred - p.target;
                batch_sq += r * r;
                for k in 0..width {
                    seeds[a][k] += scale * r * embeds[b][k];
                }
                for k in 0..width {
                    seeds[b][k] += scale * r * embeds[a][k];
                }
            }
            let grads: Vec<Gradients> = tapes
                .par_iter()
                .zip(seeds)
                .map(|((tape, e), s)| tape.backward_from(*e, Tensor::row_vector(s)))
                .collect();
            let grads = Gradients::sum_ordered(params, grads);
            if !batch_sq.is_finite() || !grads.all_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: members.iter().map(|&u| graphs[u].id()).collect(),
                    param_norm: params.norm(),
                });
            }
            drop(tapes);
            sq_sum += batch_sq;
            let store = net.params_mut();
            store.zero_grad();
            store.accumulate(&grads);
            adam.step(store);
        }
        let loss = sq_sum / pairs.len() as f64;
        log::debug!("pre-training epoch {epoch}: mse {loss:.6}");
        report.loss_curve.push(loss);
    }
    Ok(report)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Kernel value predicted by the network; symmetric in its arguments.
pub fn predicted_kernel(net: &Network, g1: &Graph, g2: &Graph) -> f64 {
    dot(&net.embed(g1), &net.embed(g2))
}

/// Row-major matrix of predicted kernel values over `graphs`.
pub fn predicted_gram(net: &Network, graphs: &[&Graph]) -> Vec<f64> {
    let embeds: Vec<Vec<f64>> = graphs.par_iter().map(|g| net.embed(g)).collect();
    let m = graphs.len();
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let v = dot(&embeds[i], &embeds[j]);
            out[i * m + j] = v;
            out[j * m + i] = v;
        }
    }
    out
}

/// A checkpoint of a pre-trained network recording how it was trained.
pub fn pretrained_checkpoint(net: Network, cfg: &PretrainConfig, report: &PretrainReport) -> Checkpoint {
    Checkpoint::new(net)
        .with("kernel", cfg.kernel)
        .with("epochs", cfg.epochs)
        .with("pairs", cfg.pairs)
        .with("seed", cfg.seed)
        .with("final_loss", report.final_loss())
}

/// Pearson correlation of two equally long samples.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "samples differ in length");
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}
