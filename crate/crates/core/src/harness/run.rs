use std::sync::Mutex;
use std::time::Instant;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, Method};
use super::folds::{make_fold_plan, FoldPlan, Split};
use super::report::{FoldResult, Report};
use crate::error::{Error, Result};
use crate::graph::{load_tu_dataset, Dataset, Graph};
use crate::kernels::{gram_matrix, GramMatrix};
use crate::model::{fit_classifier, sortpool_k_for, Checkpoint, Labeled, Network};
use crate::siamese::{pearson, predicted_kernel, pretrain, pretrained_checkpoint, PretrainReport};
use crate::svm::MultiClassSvm;

/// What a pipeline was doing when it read some graphs or Gram rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Kernel values used for fitting (SVM training Gram, pre-training targets).
    Gram,
    Pretrain,
    Train,
    Validation,
    Test,
}

impl Phase {
    /// Phases that must never see the test fold.
    pub fn is_fitting(self) -> bool {
        self != Phase::Test
    }
}

/// Receives every dataset access a pipeline makes, per outer split.
pub trait Observer: Sync {
    fn touched(&self, repetition: usize, fold: usize, phase: Phase, indices: &[usize]);
}

/// Ignores every access.
pub struct Silent;

impl Observer for Silent {
    fn touched(&self, _: usize, _: usize, _: Phase, _: &[usize]) {}
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Access {
    pub repetition: usize,
    pub fold: usize,
    pub phase: Phase,
    pub indices: Vec<usize>,
}

/// Records every access for later inspection.
#[derive(Debug, Default)]
pub struct AccessLog {
    events: Mutex<Vec<Access>>,
}

impl AccessLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> Vec<Access> {
        self.events.lock().unwrap().clone()
    }

    /// Accesses in fitting phases that include an index of their split's
    /// test fold.
    pub fn leaks(&self, plan: &FoldPlan) -> Vec<Access> {
        self.events()
            .into_iter()
            .filter(|a| {
                let test = plan.split(a.repetition, a.fold).test;
                a.phase.is_fitting() && a.indices.iter().any(|i| test.binary_search(i).is_ok())
            })
            .collect()
    }
}

impl Observer for AccessLog {
    fn touched(&self, repetition: usize, fold: usize, phase: Phase, indices: &[usize]) {
        self.events.lock().unwrap().push(Access {
            repetition,
            fold,
            phase,
            indices: indices.to_vec(),
        });
    }
}

/// Dataset access for one split; every read is reported to the observer.
struct Tracked<'a> {
    data: &'a Dataset,
    split: &'a Split,
    observer: &'a dyn Observer,
}

impl<'a> Tracked<'a> {
    fn note(&self, phase: Phase, indices: &[usize]) {
        self.observer
            .touched(self.split.repetition, self.split.fold, phase, indices);
    }

    fn labeled(&self, phase: Phase, indices: &[usize]) -> Vec<Labeled<'a>> {
        self.note(phase, indices);
        indices
            .iter()
            .map(|&i| (self.data.graph(i), self.data.targets()[i]))
            .collect()
    }

    fn graphs(&self, phase: Phase, indices: &[usize]) -> Vec<&'a Graph> {
        self.note(phase, indices);
        indices.iter().map(|&i| self.data.graph(i)).collect()
    }

    fn gram_rows(&self, gram: &GramMatrix, phase: Phase, rows: &[usize], cols: &[usize]) -> Vec<Vec<f64>> {
        self.note(phase, rows);
        self.note(Phase::Gram, cols);
        gram.cross(rows, cols)
    }

    fn targets(&self, indices: &[usize]) -> Vec<usize> {
        indices.iter().map(|&i| self.data.targets()[i]).collect()
    }
}

/// Seed of the network and shuffling for one split.
pub fn split_seed(seed: u64, repetition: usize, fold: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 + (repetition * 10 + fold) as u64);
    rand::RngCore::next_u64(&mut rng)
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

fn finish(data: &Dataset, cfg: &ExperimentConfig, method: Method, folds: Vec<FoldResult>, start: Instant) -> Report {
    let failed = folds.iter().filter(|f| f.accuracy.is_none()).count();
    if failed > 0 {
        log::warn!("{failed} folds diverged and are excluded from the summary");
    }
    Report {
        dataset: data.name().to_string(),
        method: method.to_string(),
        folds,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        config_echo: cfg.echo(),
    }
}

/// Loads the configured dataset and runs the configured method.
pub fn evaluate(cfg: &ExperimentConfig) -> Result<Report> {
    let data = load_tu_dataset(&cfg.dataset)?;
    match cfg.method {
        Method::KernelSvm => run_kernel_svm(&data, cfg, &Silent),
        Method::Dgcnn => run_dgcnn(&data, cfg, &Silent),
        Method::PretrainedDgcnn => run_pretrained_dgcnn(&data, cfg, &Silent),
    }
}

/// Kernel baseline. Per split, every kernel of the grid and every C is fit
/// on the training folds and scored on the validation fold; the best pair
/// (ties: earlier kernel, then smaller C) is refit on all nine non-test folds
/// and scored on the test fold.
///
/// Each Gram matrix is computed once over all graphs. Kernel values are
/// label-free pairwise quantities, and the fitting steps read only rows and
/// columns of non-test graphs, which the observer sees.
pub fn run_kernel_svm(data: &Dataset, cfg: &ExperimentConfig, observer: &dyn Observer) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let plan = make_fold_plan(data.targets(), cfg.repetitions, cfg.seed)?;
    let specs = cfg.kernel_grid();
    let grams = specs
        .iter()
        .map(|s| gram_matrix(data.graphs(), s, cfg.workers))
        .collect::<Result<Vec<_>>>()?;
    let classes = data.num_classes().max(2);
    let folds = with_pool(cfg.workers, || {
        plan.splits()
            .par_iter()
            .map(|split| {
                let t = Tracked { data, split, observer };
                let fit_and_score = |gram: &GramMatrix, c: f64, fit: &[usize], score: &[usize], phase: Phase| {
                    let k = t.gram_rows(gram, Phase::Gram, fit, fit);
                    let flat: Vec<f64> = k.concat();
                    let svm = MultiClassSvm::train(&flat, &t.targets(fit), classes, &cfg.svm(c));
                    let rows = t.gram_rows(gram, phase, score, fit);
                    let correct = rows
                        .iter()
                        .zip(t.targets(score))
                        .filter(|(row, y)| svm.predict(row) == *y)
                        .count();
                    correct as f64 / score.len() as f64
                };
                let mut best = (f64::NEG_INFINITY, 0, 0);
                for (gi, gram) in grams.iter().enumerate() {
                    for (ci, &c) in cfg.svm_c_grid.iter().enumerate() {
                        let acc = fit_and_score(gram, c, &split.train, &split.validation, Phase::Validation);
                        if acc > best.0 {
                            best = (acc, gi, ci);
                        }
                    }
                }
                let (_, gi, ci) = best;
                let accuracy = fit_and_score(
                    &grams[gi],
                    cfg.svm_c_grid[ci],
                    &split.non_test(),
                    &split.test,
                    Phase::Test,
                );
                let kernel = match specs[gi].wl_iterations() {
                    Some(h) => format!("h={h}"),
                    None => format!("kernel={}", specs[gi]),
                };
                FoldResult {
                    repetition: split.repetition,
                    fold: split.fold,
                    accuracy: Some(accuracy),
                    selected: format!("{kernel};C={}", cfg.svm_c_grid[ci]),
                }
            })
            .collect::<Vec<_>>()
    })?;
    Ok(finish(data, cfg, Method::KernelSvm, folds, start))
}

pub fn run_dgcnn(data: &Dataset, cfg: &ExperimentConfig, observer: &dyn Observer) -> Result<Report> {
    run_network(data, cfg, observer, false)
}

/// Pre-trains on the nine non-test folds (on every graph with
/// `pretrain_on_all`), then fine-tunes exactly as [`run_dgcnn`]. With zero
/// pre-training epochs the two pipelines coincide.
pub fn run_pretrained_dgcnn(data: &Dataset, cfg: &ExperimentConfig, observer: &dyn Observer) -> Result<Report> {
    run_network(data, cfg, observer, true)
}

fn run_network(data: &Dataset, cfg: &ExperimentConfig, observer: &dyn Observer, pretrained: bool) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let plan = make_fold_plan(data.targets(), cfg.repetitions, cfg.seed)?;
    let results = with_pool(cfg.workers, || {
        plan.splits()
            .par_iter()
            .map(|split| network_fold(data, cfg, observer, split, pretrained))
            .collect::<Vec<_>>()
    })?;
    let mut folds = Vec::with_capacity(results.len());
    for (split, r) in plan.splits().iter().zip(results) {
        match r {
            Ok(f) => folds.push(f),
            Err(e @ Error::Diverged { .. }) => {
                log::warn!("repetition {} fold {}: {e}", split.repetition, split.fold);
                folds.push(FoldResult {
                    repetition: split.repetition,
                    fold: split.fold,
                    accuracy: None,
                    selected: "diverged".into(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    let method = if pretrained {
        Method::PretrainedDgcnn
    } else {
        Method::Dgcnn
    };
    Ok(finish(data, cfg, method, folds, start))
}

fn network_fold(
    data: &Dataset,
    cfg: &ExperimentConfig,
    observer: &dyn Observer,
    split: &Split,
    pretrained: bool,
) -> Result<FoldResult> {
    let t = Tracked { data, split, observer };
    let seed = split_seed(cfg.seed, split.repetition, split.fold);
    let train = t.labeled(Phase::Train, &split.train);
    let val = t.labeled(Phase::Validation, &split.validation);
    let net_cfg = network_config(data, cfg, &train);
    let k = net_cfg.sortpool_k;
    let mut net = Network::build(net_cfg, seed)?;
    let mut selected = format!("k={k}");

    if pretrained && cfg.pretrain_epochs > 0 {
        let indices: Vec<usize> = if cfg.pretrain_on_all {
            (0..data.len()).collect()
        } else {
            split.non_test()
        };
        let report = pretrain_on(&t, &mut net, cfg, &indices, seed)?;
        net.reset_head(seed);
        selected.push_str(&format!(";pretrain_mse={:.6}", report.final_loss()));
    }

    let fit = fit_classifier(&mut net, &train, &val, &cfg.fit(seed))?;
    let test = t.labeled(Phase::Test, &split.test);
    let correct = test.iter().filter(|(g, y)| net.predict(g) == *y).count();
    selected.push_str(&format!(";epoch={}", fit.best_epoch));
    Ok(FoldResult {
        repetition: split.repetition,
        fold: split.fold,
        accuracy: Some(correct as f64 / test.len() as f64),
        selected,
    })
}

fn network_config(data: &Dataset, cfg: &ExperimentConfig, train: &[Labeled]) -> crate::model::NetworkConfig {
    let mut net_cfg = cfg.network(data.label_alphabet().len(), data.num_classes().max(2), 1);
    net_cfg.sortpool_k = if cfg.sortpool_k > 0 {
        cfg.sortpool_k
    } else {
        let counts: Vec<usize> = train.iter().map(|(g, _)| g.node_count()).collect();
        sortpool_k_for(&counts, cfg.sortpool_fraction).max(net_cfg.min_sortpool_k())
    };
    net_cfg
}

fn pretrain_on(
    t: &Tracked,
    net: &mut Network,
    cfg: &ExperimentConfig,
    indices: &[usize],
    seed: u64,
) -> Result<PretrainReport> {
    let graphs = t.graphs(Phase::Pretrain, indices);
    t.note(Phase::Gram, indices);
    let pcfg = cfg.pretrain(graphs.len(), seed);
    let owned: Vec<Graph> = graphs.iter().map(|&g| g.clone()).collect();
    let gram = gram_matrix(&owned, &pcfg.kernel, 0)?;
    pretrain(net, &graphs, &gram, &pcfg)
}

/// Pre-training on its own, with a check of how well the network predicts
/// the kernel on graphs it never saw.
#[derive(Clone, Debug)]
pub struct PretrainDiagnostics {
    pub report: PretrainReport,
    /// Pearson correlation of predicted and true kernel values over pairs of
    /// held-out graphs.
    pub held_out_pearson: f64,
    pub held_out_pairs: usize,
    pub checkpoint: Checkpoint,
}

/// Holds out `held_out` of the graphs (stratified by a seeded shuffle),
/// pre-trains a fresh network on the rest and scores up to `max_pairs`
/// held-out pairs.
pub fn run_pretrain_diagnostics(
    data: &Dataset,
    cfg: &ExperimentConfig,
    held_out: f64,
    max_pairs: usize,
) -> Result<PretrainDiagnostics> {
    if !(0.0..1.0).contains(&held_out) {
        return Err(Error::config(format!("held-out share {held_out} outside [0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let cut = ((1.0 - held_out) * data.len() as f64).round() as usize;
    let (mut fit, mut rest) = (order[..cut].to_vec(), order[cut..].to_vec());
    fit.sort_unstable();
    rest.sort_unstable();

    let train: Vec<Labeled> = fit.iter().map(|&i| (data.graph(i), data.targets()[i])).collect();
    let net_cfg = network_config(data, cfg, &train);
    let mut net = Network::build(net_cfg, cfg.seed)?;
    let graphs: Vec<&Graph> = fit.iter().map(|&i| data.graph(i)).collect();
    let pcfg = cfg.pretrain(graphs.len(), cfg.seed);
    let owned: Vec<Graph> = graphs.iter().map(|&g| g.clone()).collect();
    let gram = gram_matrix(&owned, &pcfg.kernel, cfg.workers)?;
    let report = pretrain(&mut net, &graphs, &gram, &pcfg)?;

    let held: Vec<Graph> = rest.iter().map(|&i| data.graph(i).clone()).collect();
    let (pearson_r, pairs) = if held.len() >= 2 {
        let truth = gram_matrix(&held, &pcfg.kernel, cfg.workers)?;
        let m = held.len();
        let total = m * (m - 1) / 2;
        let picks = index::sample(&mut rng, total, max_pairs.min(total)).into_vec();
        let all: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
        let (mut pred, mut want) = (Vec::new(), Vec::new());
        for p in picks {
            let (i, j) = all[p];
            pred.push(predicted_kernel(&net, &held[i], &held[j]));
            want.push(truth.get(i, j));
        }
        (pearson(&pred, &want), pred.len())
    } else {
        (f64::NAN, 0)
    };
    let checkpoint = pretrained_checkpoint(net, &pcfg, &report).with("dataset", data.name());
    Ok(PretrainDiagnostics {
        report,
        held_out_pearson: pearson_r,
        held_out_pairs: pairs,
        checkpoint,
    })
}
