use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const FOLDS: usize = 10;

/// Stratified 10-fold partitions for `R` repetitions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    n: usize,
    seed: u64,
    /// `permutations[r]` lists every index once; fold `f` of repetition `r`
    /// holds the positions `p` with `p % 10 == f`.
    permutations: Vec<Vec<usize>>,
}

/// One outer split: the test fold, the next fold for validation and the
/// remaining eight folds for training. All index lists are sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub repetition: usize,
    pub fold: usize,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Training and validation folds together, sorted.
    pub fn non_test(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.train.iter().chain(&self.validation).copied().collect();
        all.sort_unstable();
        all
    }
}

/// Builds the plan for the class ids in `targets`. Within a repetition each
/// class is shuffled, the classes are laid end to end and the result is dealt
/// round-robin into the folds, so every fold holds each class to within one
/// item of its share.
pub fn make_fold_plan(targets: &[usize], repetitions: usize, seed: u64) -> Result<FoldPlan> {
    let n = targets.len();
    if n < FOLDS {
        return Err(Error::InvalidArgument(format!("{n} graphs cannot fill {FOLDS} folds")));
    }
    if repetitions == 0 {
        return Err(Error::InvalidArgument("at least one repetition is needed".into()));
    }
    let num_classes = targets.iter().max().map_or(0, |&m| m + 1);
    let permutations = (0..repetitions)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut order = Vec::with_capacity(n);
            for c in 0..num_classes {
                let mut members: Vec<usize> = (0..n).filter(|&i| targets[i] == c).collect();
                members.shuffle(&mut rng);
                order.extend(members);
            }
            order
        })
        .collect();
    Ok(FoldPlan { n, seed, permutations })
}

impl FoldPlan {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn repetitions(&self) -> usize {
        self.permutations.len()
    }

    pub fn permutation(&self, repetition: usize) -> &[usize] {
        &self.permutations[repetition]
    }

    /// Sorted members of one fold.
    pub fn fold(&self, repetition: usize, fold: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.permutations[repetition]
            .iter()
            .enumerate()
            .filter(|(p, _)| p % FOLDS == fold)
            .map(|(_, &i)| i)
            .collect();
        out.sort_unstable();
        out
    }

    pub fn split(&self, repetition: usize, fold: usize) -> Split {
        let validation_fold = (fold + 1) % FOLDS;
        let mut train = Vec::new();
        for f in (0..FOLDS).filter(|&f| f != fold && f != validation_fold) {
            train.extend(self.fold(repetition, f));
        }
        train.sort_unstable();
        Split {
            repetition,
            fold,
            train,
            validation: self.fold(repetition, validation_fold),
            test: self.fold(repetition, fold),
        }
    }

    /// Every split in repetition-major order.
    pub fn splits(&self) -> Vec<Split> {
        (0..self.repetitions())
            .flat_map(|r| (0..FOLDS).map(move |f| (r, f)))
            .map(|(r, f)| self.split(r, f))
            .collect()
    }
}
