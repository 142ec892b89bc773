use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::autodiff::AdamConfig;
use crate::error::{Error, Result};
use crate::kernels::{KernelKind, KernelSpec};
use crate::model::{Conv1dSpec, FitConfig, NetworkConfig};
use crate::siamese::{PairMode, PretrainConfig};
use crate::svm::SvmConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    KernelSvm,
    Dgcnn,
    PretrainedDgcnn,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "kernel_svm" => Ok(Method::KernelSvm),
            "dgcnn" => Ok(Method::Dgcnn),
            "pretrained_dgcnn" => Ok(Method::PretrainedDgcnn),
            _ => Err(Error::config(format!("unknown method {s:?}"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::KernelSvm => "kernel_svm",
            Method::Dgcnn => "dgcnn",
            Method::PretrainedDgcnn => "pretrained_dgcnn",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelName {
    Wl,
    ShortestPath,
    Graphlet3,
}

/// How pre-training pairs are chosen: all of them, or `per_graph · M` drawn
/// afresh every epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairSampling {
    Full,
    Sampled { per_graph: usize },
}

/// Every experiment setting. Parsed from flat `key = value` text; see
/// [`ExperimentConfig::KEYS`] for the keys and their defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub method: Method,
    pub seed: u64,
    pub repetitions: usize,
    /// Threads for Gram computation and fold jobs; 0 uses every core.
    pub workers: usize,
    pub output: PathBuf,

    pub kernel: KernelName,
    pub normalize: bool,
    pub gl3_connected_only: bool,
    /// WL height grid searched by the SVM baseline.
    pub wl_h_grid: Vec<u32>,
    pub svm_c_grid: Vec<f64>,
    pub svm_tol: f64,
    pub svm_max_passes: usize,

    pub conv_channels: Vec<usize>,
    /// Fixed sortpool budget; 0 derives it from `sortpool_fraction`.
    pub sortpool_k: usize,
    pub sortpool_fraction: f64,
    /// `filters:width:stride` per layer; `node` stands for the total graph
    /// convolution width.
    pub conv1d: Vec<(usize, Option<usize>, Option<usize>)>,
    pub dense_width: usize,
    pub bias: bool,
    pub dropout: f64,

    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,

    /// WL height of the pre-training target kernel.
    pub wl_h: u32,
    pub pretrain_epochs: usize,
    pub pretrain_batch_size: usize,
    pub pretrain_learning_rate: f64,
    pub pretrain_pairs: PairSampling,
    pub pretrain_on_all: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::parse("").unwrap()
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("bad value {value:?} for {key}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| parse_value(key, v.trim())).collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Key, default value and meaning.
    pub const KEYS: &'static [(&'static str, &'static str, &'static str)] = &[
        ("dataset", "", "dataset directory in TU format"),
        ("method", "dgcnn", "kernel_svm | dgcnn | pretrained_dgcnn"),
        ("seed", "0", "master seed for folds, initialization and shuffling"),
        ("repetitions", "10", "repetitions of 10-fold cross-validation"),
        ("workers", "0", "worker threads, 0 for all cores"),
        ("output", "out", "report directory"),
        ("kernel", "wl", "wl | sp | gl3"),
        ("normalize", "true", "cosine-normalize kernel values"),
        ("gl3_connected_only", "false", "drop disconnected graphlet classes"),
        ("wl_h_grid", "0,1,2,3,4,5", "WL heights searched by the SVM baseline"),
        ("svm_c_grid", "0.01,0.1,1,10,100", "SVM C values searched"),
        ("svm_tol", "0.001", "SMO stopping tolerance"),
        ("svm_max_passes", "10", "SMO iteration cap in units of M^2"),
        ("conv_channels", "32,32,32,1", "graph convolution widths"),
        ("sortpool_k", "0", "sortpool budget, 0 to derive from sortpool_fraction"),
        (
            "sortpool_fraction",
            "0.6",
            "share of training graphs with at least k nodes",
        ),
        (
            "conv1d",
            "16:node:node,32:5:1",
            "1-D convolutions as filters:width:stride",
        ),
        ("dense_width", "128", "embedding width"),
        ("bias", "false", "use bias terms"),
        ("dropout", "0", "dropout rate on the embedding while fine-tuning"),
        ("epochs", "100", "maximum classifier training epochs"),
        ("batch_size", "50", "classifier mini-batch size"),
        ("learning_rate", "0.002", "classifier Adam learning rate"),
        ("wl_h", "2", "WL height of the pre-training target"),
        ("pretrain_epochs", "20", "pre-training epochs, 0 to skip"),
        ("pretrain_batch_size", "256", "pairs per pre-training batch"),
        ("pretrain_learning_rate", "0.001", "pre-training Adam learning rate"),
        ("pretrain_pairs", "full", "full | sampled:<pairs per graph>"),
        (
            "pretrain_on_all",
            "false",
            "pre-train on every graph, test folds included",
        ),
    ];

    /// Parses `key = value` lines; `#` starts a comment. Unknown keys and
    /// repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::blank();
        for (key, default, _) in Self::KEYS {
            cfg.set(key, default)?;
        }
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::config(format!("line {}: {key} given twice", lineno + 1)));
            }
            cfg.set(key, value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::parse(&text)
    }

    fn blank() -> Self {
        ExperimentConfig {
            dataset: PathBuf::new(),
            method: Method::Dgcnn,
            seed: 0,
            repetitions: 0,
            workers: 0,
            output: PathBuf::new(),
            kernel: KernelName::Wl,
            normalize: true,
            gl3_connected_only: false,
            wl_h_grid: Vec::new(),
            svm_c_grid: Vec::new(),
            svm_tol: 0.0,
            svm_max_passes: 0,
            conv_channels: Vec::new(),
            sortpool_k: 0,
            sortpool_fraction: 0.0,
            conv1d: Vec::new(),
            dense_width: 0,
            bias: false,
            dropout: 0.0,
            epochs: 0,
            batch_size: 0,
            learning_rate: 0.0,
            wl_h: 0,
            pretrain_epochs: 0,
            pretrain_batch_size: 0,
            pretrain_learning_rate: 0.0,
            pretrain_pairs: PairSampling::Full,
            pretrain_on_all: false,
        }
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "dataset" => self.dataset = PathBuf::from(value),
            "method" => self.method = value.parse()?,
            "seed" => self.seed = parse_value(key, value)?,
            "repetitions" => self.repetitions = parse_value(key, value)?,
            "workers" => self.workers = parse_value(key, value)?,
            "output" => self.output = PathBuf::from(value),
            "kernel" => {
                self.kernel = match value {
                    "wl" => KernelName::Wl,
                    "sp" => KernelName::ShortestPath,
                    "gl3" => KernelName::Graphlet3,
                    _ => return Err(Error::config(format!("unknown kernel {value:?}"))),
                }
            }
            "normalize" => self.normalize = parse_value(key, value)?,
            "gl3_connected_only" => self.gl3_connected_only = parse_value(key, value)?,
            "wl_h_grid" => self.wl_h_grid = parse_list(key, value)?,
            "svm_c_grid" => self.svm_c_grid = parse_list(key, value)?,
            "svm_tol" => self.svm_tol = parse_value(key, value)?,
            "svm_max_passes" => self.svm_max_passes = parse_value(key, value)?,
            "conv_channels" => self.conv_channels = parse_list(key, value)?,
            "sortpool_k" => self.sortpool_k = parse_value(key, value)?,
            "sortpool_fraction" => self.sortpool_fraction = parse_value(key, value)?,
            "conv1d" => {
                self.conv1d = if value.is_empty() {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(|layer| {
                            let parts: Vec<&str> = layer.trim().split(':').collect();
                            if parts.len() != 3 {
                                return Err(Error::config(format!("bad conv1d layer {layer:?}")));
                            }
                            let dim = |s: &str| -> Result<Option<usize>> {
                                if s == "node" {
                                    Ok(None)
                                } else {
                                    parse_value(key, s).map(Some)
                                }
                            };
                            Ok((parse_value(key, parts[0])?, dim(parts[1])?, dim(parts[2])?))
                        })
                        .collect::<Result<_>>()?
                }
            }
            "dense_width" => self.dense_width = parse_value(key, value)?,
            "bias" => self.bias = parse_value(key, value)?,
            "dropout" => self.dropout = parse_value(key, value)?,
            "epochs" => self.epochs = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "learning_rate" => self.learning_rate = parse_value(key, value)?,
            "wl_h" => self.wl_h = parse_value(key, value)?,
            "pretrain_epochs" => self.pretrain_epochs = parse_value(key, value)?,
            "pretrain_batch_size" => self.pretrain_batch_size = parse_value(key, value)?,
            "pretrain_learning_rate" => self.pretrain_learning_rate = parse_value(key, value)?,
            "pretrain_pairs" => {
                self.pretrain_pairs = match value.split_once(':') {
                    None if value == "full" => PairSampling::Full,
                    Some(("sampled", n)) => PairSampling::Sampled {
                        per_graph: parse_value(key, n)?,
                    },
                    _ => return Err(Error::config(format!("bad pretrain_pairs {value:?}"))),
                }
            }
            "pretrain_on_all" => self.pretrain_on_all = parse_value(key, value)?,
            _ => return Err(Error::config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// All keys with their effective values, one `key = value` per line, in
    /// the order of [`ExperimentConfig::KEYS`].
    pub fn echo(&self) -> String {
        let conv1d = self
            .conv1d
            .iter()
            .map(|(f, w, s)| {
                let dim = |d: &Option<usize>| d.map_or("node".to_string(), |v| v.to_string());
                format!("{f}:{}:{}", dim(w), dim(s))
            })
            .collect::<Vec<_>>()
            .join(",");
        let pairs = match self.pretrain_pairs {
            PairSampling::Full => "full".to_string(),
            PairSampling::Sampled { per_graph } => format!("sampled:{per_graph}"),
        };
        let kernel = match self.kernel {
            KernelName::Wl => "wl",
            KernelName::ShortestPath => "sp",
            KernelName::Graphlet3 => "gl3",
        };
        let values: Vec<String> = vec![
            self.dataset.display().to_string(),
            self.method.to_string(),
            self.seed.to_string(),
            self.repetitions.to_string(),
            self.workers.to_string(),
            self.output.display().to_string(),
            kernel.to_string(),
            self.normalize.to_string(),
            self.gl3_connected_only.to_string(),
            join(&self.wl_h_grid),
            join(&self.svm_c_grid),
            self.svm_tol.to_string(),
            self.svm_max_passes.to_string(),
            join(&self.conv_channels),
            self.sortpool_k.to_string(),
            self.sortpool_fraction.to_string(),
            conv1d,
            self.dense_width.to_string(),
            self.bias.to_string(),
            self.dropout.to_string(),
            self.epochs.to_string(),
            self.batch_size.to_string(),
            self.learning_rate.to_string(),
            self.wl_h.to_string(),
            self.pretrain_epochs.to_string(),
            self.pretrain_batch_size.to_string(),
            self.pretrain_learning_rate.to_string(),
            pairs,
            self.pretrain_on_all.to_string(),
        ];
        Self::KEYS
            .iter()
            .zip(values)
            .map(|((k, _, _), v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Kernel for the SVM baseline at WL height `h` (ignored for other kernels).
    pub fn kernel_spec(&self, h: u32) -> KernelSpec {
        let kind = match self.kernel {
            KernelName::Wl => KernelKind::Wl { h },
            KernelName::ShortestPath => KernelKind::ShortestPath,
            KernelName::Graphlet3 => KernelKind::Graphlet3 {
                connected_only: self.gl3_connected_only,
            },
        };
        KernelSpec {
            kind,
            normalize: self.normalize,
        }
    }

    /// Kernel grid searched by the SVM baseline.
    pub fn kernel_grid(&self) -> Vec<KernelSpec> {
        match self.kernel {
            KernelName::Wl => self.wl_h_grid.iter().map(|&h| self.kernel_spec(h)).collect(),
            _ => vec![self.kernel_spec(0)],
        }
    }

    pub fn svm(&self, c: f64) -> SvmConfig {
        SvmConfig {
            c,
            tol: self.svm_tol,
            max_passes: self.svm_max_passes,
        }
    }

    pub fn network(&self, num_labels: usize, num_classes: usize, sortpool_k: usize) -> NetworkConfig {
        let total: usize = self.conv_channels.iter().sum();
        NetworkConfig {
            num_labels,
            conv_channels: self.conv_channels.clone(),
            sortpool_k,
            conv1d: self
                .conv1d
                .iter()
                .map(|&(filters, w, s)| Conv1dSpec {
                    filters,
                    width: w.unwrap_or(total),
                    stride: s.unwrap_or(total),
                })
                .collect(),
            dense_width: self.dense_width,
            num_classes,
            bias: self.bias,
            dropout: self.dropout,
        }
    }

    pub fn fit(&self, seed: u64) -> FitConfig {
        FitConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                ..AdamConfig::default()
            },
            seed,
        }
    }

    /// Pre-training settings for `m` graphs.
    pub fn pretrain(&self, m: usize, seed: u64) -> PretrainConfig {
        PretrainConfig {
            kernel: KernelSpec::wl(self.wl_h, self.normalize),
            epochs: self.pretrain_epochs,
            batch_size: self.pretrain_batch_size,
            adam: AdamConfig {
                learning_rate: self.pretrain_learning_rate,
                ..AdamConfig::default()
            },
            pairs: match self.pretrain_pairs {
                PairSampling::Full => PairMode::Full,
                PairSampling::Sampled { per_graph } => PairMode::Sampled {
                    count: (per_graph * m).min(crate::siamese::pair_count(m)),
                    seed,
                },
            },
            seed,
        }
    }

    /// Checks the settings the chosen method depends on.
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::config("repetitions must be at least 1"));
        }
        match self.method {
            Method::KernelSvm => {
                if self.svm_c_grid.is_empty() || self.svm_c_grid.iter().any(|&c| c.is_nan() || c <= 0.0) {
                    return Err(Error::config("svm_c_grid needs positive values"));
                }
                if self.kernel == KernelName::Wl && self.wl_h_grid.is_empty() {
                    return Err(Error::config("wl_h_grid is empty"));
                }
            }
            Method::Dgcnn | Method::PretrainedDgcnn => {
                if self.batch_size == 0 {
                    return Err(Error::config("batch_size must be at least 1"));
                }
                if !(self.sortpool_fraction > 0.0 && self.sortpool_fraction <= 1.0) {
                    return Err(Error::config("sortpool_fraction must be in (0, 1]"));
                }
                self.network(1, 2, self.sortpool_k.max(1))
                    .validate()
                    .or_else(|e| match e {
                        // The budget is only known once the training graphs are.
                        Error::Config(m) if m.contains("conv1d layer") && self.sortpool_k == 0 => Ok(()),
                        e => Err(e),
                    })?;
                if self.method == Method::PretrainedDgcnn && self.pretrain_epochs > 0 && self.pretrain_batch_size == 0 {
                    return Err(Error::config("pretrain_batch_size must be at least 1"));
                }
            }
        }
        Ok(())
    }
}
