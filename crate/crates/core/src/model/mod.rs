//! The DGCNN graph network: stacked graph convolutions, sortpooling, a 1-D
//! convolution stack and a dense embedding layer, with a classification head
//! on top. The siamese head is a plain dot product of two embeddings and has
//! no parameters of its own.

mod checkpoint;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{ParamId, ParamStore, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::graph::{normalized_adjacency, Graph, SparseMatrix};

pub use checkpoint::Checkpoint;
pub use train::{accuracy, fit_classifier, mean_nll, FitConfig, FitReport, Labeled};

/// One layer of the 1-D convolution stack.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Conv1dSpec {
    pub filters: usize,
    pub width: usize,
    pub stride: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkConfig {
    /// Size of the node label alphabet. Inputs are one-hot over
    /// `num_labels + 1` slots; the last slot takes unknown labels.
    pub num_labels: usize,
    pub conv_channels: Vec<usize>,
    pub sortpool_k: usize,
    pub conv1d: Vec<Conv1dSpec>,
    pub dense_width: usize,
    pub num_classes: usize,
    /// Adds biases to the 1-D convolutions, the dense layer and the head.
    pub bias: bool,
    /// Dropout rate on the embedding during classifier training.
    pub dropout: f64,
}

impl NetworkConfig {
    /// The reference architecture: graph convolutions of widths
    /// `[32, 32, 32, 1]` (the last one is the sort key), a first 1-D
    /// convolution that reads one node at a time, a width-5 convolution and a
    /// 128-wide dense layer.
    pub fn dgcnn(num_labels: usize, num_classes: usize, sortpool_k: usize) -> Self {
        let conv_channels = vec![32, 32, 32, 1];
        let total: usize = conv_channels.iter().sum();
        NetworkConfig {
            num_labels,
            conv_channels,
            sortpool_k,
            conv1d: vec![
                Conv1dSpec {
                    filters: 16,
                    width: total,
                    stride: total,
                },
                Conv1dSpec {
                    filters: 32,
                    width: 5,
                    stride: 1,
                },
            ],
            dense_width: 128,
            num_classes,
            bias: false,
            dropout: 0.0,
        }
    }

    pub fn input_width(&self) -> usize {
        self.num_labels + 1
    }

    /// Width of the concatenated graph-convolution outputs.
    pub fn total_channels(&self) -> usize {
        self.conv_channels.iter().sum()
    }

    /// Channels and length after each 1-D convolution, starting from the
    /// single-channel flattened sortpool output.
    pub fn conv1d_shapes(&self) -> Result<Vec<(usize, usize)>> {
        let mut shapes = vec![(1, self.sortpool_k * self.total_channels())];
        for (i, c) in self.conv1d.iter().enumerate() {
            let (_, len) = *shapes.last().unwrap();
            if c.filters == 0 || c.width == 0 || c.stride == 0 {
                return Err(Error::config(format!("conv1d layer {i} has a zero dimension")));
            }
            if c.width > len {
                return Err(Error::config(format!(
                    "conv1d layer {i} has width {} but its input has length {len}",
                    c.width
                )));
            }
            shapes.push((c.filters, (len - c.width) / c.stride + 1));
        }
        Ok(shapes)
    }

    /// Length of the flattened input to the dense layer.
    pub fn dense_input(&self) -> Result<usize> {
        let &(ch, len) = self.conv1d_shapes()?.last().unwrap();
        Ok(ch * len)
    }

    /// Smallest sortpool budget for which the 1-D stack still fits.
    pub fn min_sortpool_k(&self) -> usize {
        (1..)
            .find(|&k| {
                let probe = NetworkConfig {
                    sortpool_k: k,
                    ..self.clone()
                };
                probe.conv1d_shapes().is_ok()
            })
            .unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        if self.conv_channels.is_empty() || self.conv_channels.contains(&0) {
            return Err(Error::config("conv_channels must list at least one positive width"));
        }
        if self.sortpool_k == 0 {
            return Err(Error::config("sortpool_k must be at least 1"));
        }
        if self.dense_width == 0 {
            return Err(Error::config("dense_width must be at least 1"));
        }
        if self.num_classes == 0 {
            return Err(Error::config("num_classes must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        self.conv1d_shapes().map(|_| ())
    }

    /// Parameter tensors in creation order: name, shape and fan-in.
    fn layout(&self) -> Result<Vec<(String, Vec<usize>, usize)>> {
        self.validate()?;
        let mut out = Vec::new();
        let mut width = self.input_width();
        for (i, &c) in self.conv_channels.iter().enumerate() {
            out.push((format!("gc.{i}.w"), vec![width, c], width));
            width = c;
        }
        let shapes = self.conv1d_shapes()?;
        for (i, c) in self.conv1d.iter().enumerate() {
            let cin = shapes[i].0;
            out.push((format!("c1d.{i}.w"), vec![c.filters, cin, c.width], cin * c.width));
            if self.bias {
                out.push((format!("c1d.{i}.b"), vec![c.filters], 0));
            }
        }
        let dense_in = self.dense_input()?;
        out.push(("dense.w".into(), vec![dense_in, self.dense_width], dense_in));
        if self.bias {
            out.push(("dense.b".into(), vec![self.dense_width], 0));
        }
        out.extend(self.head_layout());
        Ok(out)
    }

    fn head_layout(&self) -> Vec<(String, Vec<usize>, usize)> {
        let mut out = vec![(
            "out.w".into(),
            vec![self.dense_width, self.num_classes],
            self.dense_width,
        )];
        if self.bias {
            out.push(("out.b".into(), vec![self.num_classes], 0));
        }
        out
    }
}

/// The `k`-th smallest node count such that at least `fraction` of the
/// graphs have `n >= k`.
pub fn sortpool_k_for(node_counts: &[usize], fraction: f64) -> usize {
    assert!(!node_counts.is_empty(), "no graphs to size sortpooling from");
    assert!(fraction > 0.0 && fraction <= 1.0, "fraction {fraction} outside (0, 1]");
    let mut sorted = node_counts.to_vec();
    sorted.sort_unstable();
    let keep = (fraction * sorted.len() as f64).ceil() as usize;
    sorted[sorted.len() - keep.max(1)].max(1)
}

/// A graph prepared for the network: one-hot features and its propagation
/// matrix.
#[derive(Clone, Debug)]
pub struct GraphInput {
    features: Tensor,
    adjacency: SparseMatrix,
}

#[derive(Clone, Debug)]
pub struct Network {
    config: NetworkConfig,
    params: ParamStore,
}

impl Network {
    /// Allocates every parameter, drawn uniformly from `±1/sqrt(fan_in)`.
    /// Each tensor has its own random stream keyed by name, so any tensor
    /// can be redrawn later without touching the others.
    pub fn build(config: NetworkConfig, seed: u64) -> Result<Network> {
        let mut params = ParamStore::new();
        for (name, shape, fan_in) in config.layout()? {
            let value = init_tensor(&name, &shape, fan_in, seed);
            params.add(name, value);
        }
        Ok(Network { config, params })
    }

    /// Wraps an existing parameter set, checking it against the config.
    pub fn from_params(config: NetworkConfig, params: ParamStore) -> Result<Network> {
        let layout = config.layout()?;
        if layout.len() != params.len() {
            return Err(Error::config(format!(
                "config expects {} parameter tensors, found {}",
                layout.len(),
                params.len()
            )));
        }
        for (name, shape, _) in &layout {
            match params.id(name) {
                Some(id) if params.value(id).shape() == shape.as_slice() => {}
                Some(id) => {
                    return Err(Error::config(format!(
                        "parameter {name} has shape {:?}, expected {shape:?}",
                        params.value(id).shape()
                    )))
                }
                None => return Err(Error::config(format!("missing parameter {name}"))),
            }
        }
        Ok(Network { config, params })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn into_params(self) -> ParamStore {
        self.params
    }

    /// Redraws the classification head exactly as [`Network::build`] with
    /// `seed` would have drawn it.
    pub fn reset_head(&mut self, seed: u64) {
        for (name, shape, fan_in) in self.config.head_layout() {
            let id = self.params.id(&name).expect("head parameter");
            *self.params.value_mut(id) = init_tensor(&name, &shape, fan_in, seed);
        }
    }

    pub fn prepare(&self, g: &Graph) -> GraphInput {
        let d = self.config.input_width();
        let mut features = Tensor::zeros(&[g.node_count(), d]);
        for (v, &l) in g.labels().iter().enumerate() {
            let slot = (l as usize).min(self.config.num_labels);
            features.data_mut()[v * d + slot] = 1.0;
        }
        GraphInput {
            features,
            adjacency: normalized_adjacency(g),
        }
    }

    fn p(&self, tape: &mut Tape, name: &str) -> Var {
        tape.param(self.params.id(name).unwrap_or_else(|| panic!("no parameter {name}")))
    }

    fn maybe_p(&self, tape: &mut Tape, name: &str) -> Option<Var> {
        self.params.id(name).map(|id| tape.param(id))
    }

    /// Records the embedding of `input` on `tape`; the result is `1 x dense_width`.
    pub fn embed_on(&self, tape: &mut Tape, input: &GraphInput) -> Var {
        let cfg = &self.config;
        let mut h = tape.input(input.features.clone());
        let mut layers = Vec::with_capacity(cfg.conv_channels.len());
        for i in 0..cfg.conv_channels.len() {
            let w = self.p(tape, &format!("gc.{i}.w"));
            let hw = tape.matmul(h, w);
            let sh = tape.spmm(input.adjacency.clone(), hw);
            h = tape.tanh(sh);
            layers.push(h);
        }
        let cat = tape.concat_cols(&layers);
        let pooled = tape.sortpool(cat, cfg.sortpool_k);
        let mut seq = tape.reshape(pooled, &[1, cfg.sortpool_k * cfg.total_channels()]);
        for (i, c) in cfg.conv1d.iter().enumerate() {
            let f = self.p(tape, &format!("c1d.{i}.w"));
            seq = tape.conv1d(seq, f, c.stride);
            if let Some(b) = self.maybe_p(tape, &format!("c1d.{i}.b")) {
                seq = tape.add_channel_bias(seq, b);
            }
            seq = tape.relu(seq);
        }
        let len = tape.value(seq).len();
        let flat = tape.reshape(seq, &[1, len]);
        let w = self.p(tape, "dense.w");
        let mut d = tape.matmul(flat, w);
        if let Some(b) = self.maybe_p(tape, "dense.b") {
            d = tape.add_row_bias(d, b);
        }
        tape.relu(d)
    }

    /// Records log-probabilities (`1 x C`) on `tape`. `dropout_mask`, when
    /// given, multiplies the embedding before the head.
    pub fn classify_on(&self, tape: &mut Tape, input: &GraphInput, dropout_mask: Option<Vec<f64>>) -> Var {
        let mut e = self.embed_on(tape, input);
        if let Some(mask) = dropout_mask {
            e = tape.dropout(e, mask);
        }
        let w = self.p(tape, "out.w");
        let mut z = tape.matmul(e, w);
        if let Some(b) = self.maybe_p(tape, "out.b") {
            z = tape.add_row_bias(z, b);
        }
        tape.log_softmax(z)
    }

    pub fn embed(&self, g: &Graph) -> Vec<f64> {
        let input = self.prepare(g);
        let mut tape = Tape::new(&self.params);
        let e = self.embed_on(&mut tape, &input);
        tape.value(e).data().to_vec()
    }

    /// Log-probabilities over the classes.
    pub fn classify(&self, g: &Graph) -> Vec<f64> {
        let input = self.prepare(g);
        let mut tape = Tape::new(&self.params);
        let out = self.classify_on(&mut tape, &input, None);
        tape.value(out).data().to_vec()
    }

    /// Most probable class; ties go to the lower class id.
    pub fn predict(&self, g: &Graph) -> usize {
        argmax(&self.classify(g))
    }

    pub fn head_ids(&self) -> Vec<ParamId> {
        self.config
            .head_layout()
            .iter()
            .map(|(name, _, _)| self.params.id(name).unwrap())
            .collect()
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn init_tensor(name: &str, shape: &[usize], fan_in: usize, seed: u64) -> Tensor {
    let n = shape.iter().product();
    if fan_in == 0 {
        return Tensor::new(shape.to_vec(), vec![0.0; n]);
    }
    let bound = 1.0 / (fan_in as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(name.as_bytes()));
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-bound..bound)).collect())
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(0xcbf29ce484222325, |h, &b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

#[cfg(test)]
mod tests;
